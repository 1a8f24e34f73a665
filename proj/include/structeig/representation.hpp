#pragma once

// From a unitary-plus-rank-k input A = U + X Y^H to the compressed factored
// form: input validation, orthonormalization of the rank part, embedding into
// a unitary-plus-rank-k matrix of size N = n + k whose unitary part absorbs
// the correction, Hessenberg reduction of the leading block, and the initial
// L * F * R factorization.  Also the reconstruction of the dense rank block
// from the unitary factors when it is not carried explicitly.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "structeig/chain.hpp"

namespace structeig {

template <typename T>
struct ProblemInput {
  MatrixC<T> u;  // n x n unitary
  MatrixC<T> x;  // n x k
  MatrixC<T> y;  // n x k
};

struct ValidationOptions {
  double unitary_tol{1e-8};
  double rank_tol{1e-12};
};

// Structural and numerical admissibility.  Throws std::invalid_argument with
// a reason; returns normally otherwise.
template <typename T>
void validate(const ProblemInput<T>& p, const ValidationOptions& opt = {}) {
  const Index n = p.u.rows();
  const Index k = p.x.cols();
  if (n < 1 || p.u.cols() != n) throw std::invalid_argument("u must be square and nonempty");
  if (k < 1) throw std::invalid_argument("rank part must have at least one column");
  if (k > n) throw std::invalid_argument("rank exceeds dimension");
  if (p.x.rows() != n || p.y.rows() != n || p.y.cols() != k)
    throw std::invalid_argument("x and y must be n x k");

  const T u_defect = (p.u.adjoint() * p.u - MatrixC<T>::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(u_defect <= T(opt.unitary_tol))) {
    std::ostringstream msg;
    msg << "u is not unitary: ||u^H u - I||_max = " << u_defect << " exceeds "
        << opt.unitary_tol;
    throw std::invalid_argument(msg.str());
  }

  Eigen::ColPivHouseholderQR<MatrixC<T>> qr_y(p.y);
  qr_y.setThreshold(T(opt.rank_tol));
  if (qr_y.rank() < k)
    throw std::invalid_argument("y is rank deficient: restate the problem with smaller k");

  Eigen::JacobiSVD<MatrixC<T>> svd_x(p.x);
  const T smax = svd_x.singularValues()(0);
  if (smax > T(0)) {
    const T smin = svd_x.singularValues()(k - 1);
    if (smin < T(opt.rank_tol) * smax)
      throw std::invalid_argument("x is nearly rank deficient: restate the problem with smaller k");
  }
}

// Rewrite X Y^H = Xt Yt^H with Yt^H Yt = I.  The QR phase is canonicalized
// (positive real diagonal) so the output is deterministic.
template <typename T>
std::pair<MatrixC<T>, MatrixC<T>> normalize_rank_part(const MatrixC<T>& x, const MatrixC<T>& y) {
  const Index n = y.rows();
  const Index k = y.cols();
  Eigen::ColPivHouseholderQR<MatrixC<T>> qr(y);
  MatrixC<T> q = qr.householderQ() * MatrixC<T>::Identity(n, k);
  MatrixC<T> r = qr.matrixR().template topRows(k).template triangularView<Eigen::Upper>();
  MatrixC<T> xt = x * (qr.colsPermutation() * r.adjoint());
  for (Index j = 0; j < k; ++j) {
    const T m = std::abs(r(j, j));
    if (m > T(0)) {
      const Complex<T> phi = r(j, j) / m;
      q.col(j) *= phi;
      xt.col(j) *= phi;
    }
  }
  return {std::move(xt), std::move(q)};
}

template <typename T>
struct EmbeddedProblem {
  MatrixC<T> u_hat;  // N x N unitary
  MatrixC<T> x_hat;  // N x k, trailing k x k block is -I
  MatrixC<T> y_hat;  // N x k, trailing k rows are zero
  Index n{0}, k{0};

  Index N() const { return n + k; }
};

// Enlarge to N = n + k so the unitary part alone carries the spectrum-relevant
// data: the leading n x n block of u_hat + x_hat y_hat^H equals u + xt yt^H
// and the trailing k rows vanish, appending k zero eigenvalues.
template <typename T>
EmbeddedProblem<T> embed(const MatrixC<T>& u, const MatrixC<T>& xt, const MatrixC<T>& yt) {
  const Index n = u.rows();
  const Index k = xt.cols();
  const Index nn = n + k;
  MatrixC<T> b = u * yt;

  EmbeddedProblem<T> ep;
  ep.n = n;
  ep.k = k;
  ep.u_hat = MatrixC<T>::Zero(nn, nn);
  ep.u_hat.topLeftCorner(n, n) = u - b * yt.adjoint();
  ep.u_hat.topRightCorner(n, k) = b;
  ep.u_hat.bottomLeftCorner(k, n) = yt.adjoint();
  ep.x_hat = MatrixC<T>::Zero(nn, k);
  ep.x_hat.topRows(n) = xt + b;
  ep.x_hat.bottomRows(k) = -MatrixC<T>::Identity(k, k);
  ep.y_hat = MatrixC<T>::Zero(nn, k);
  ep.y_hat.topRows(n) = yt;
  return ep;
}

// The represented matrix of an embedded problem, assembled densely.
template <typename T>
MatrixC<T> assemble(const EmbeddedProblem<T>& ep) {
  return ep.u_hat + ep.x_hat * ep.y_hat.adjoint();
}

// Reduce the leading n x n block of the represented matrix to upper Hessenberg
// form by a unitary similarity acting on the leading n rows; the trailing
// blocks of x_hat and y_hat are untouched, so the embedding structure
// survives.  When accum is given it picks up the similarity on the right
// (accum <- accum * G^H per rotation).
template <typename T>
void hessenberg_reduce(EmbeddedProblem<T>& ep, MatrixC<T>* accum = nullptr) {
  const Index n = ep.n;
  MatrixC<T> a = ep.u_hat.topLeftCorner(n, n) +
                 ep.x_hat.topRows(n) * ep.y_hat.topRows(n).adjoint();
  bool clean = true;
  for (Index j = 0; j < n - 2 && clean; ++j)
    for (Index r = j + 2; r < n; ++r)
      if (a(r, j) != Complex<T>(T(0))) {
        clean = false;
        break;
      }
  if (clean) return;

  for (Index j = 0; j + 2 < n; ++j) {
    for (Index r = n - 1; r >= j + 2; --r) {
      auto [g, rr] = make_rotation(a(r - 1, j), a(r, j));
      g.i = r - 1;
      if (g.is_identity()) continue;
      apply_left(g, a);
      apply_right_adjoint(g, a);
      a(r, j) = Complex<T>(T(0));
      apply_left(g, ep.u_hat);
      apply_right_adjoint(g, ep.u_hat);
      apply_left(g, ep.x_hat);
      apply_left(g, ep.y_hat);
      if (accum) apply_right_adjoint(g, *accum);
    }
  }
}

// Factor the Hessenberg-form embedded matrix as L * (Q dhat + [T;0] Z^H) * R.
template <typename T>
LfrState<T> build_lfr(const EmbeddedProblem<T>& ep) {
  const Index n = ep.n;
  const Index k = ep.k;
  const Index nn = n + k;

  LfrState<T> st;
  st.n = n;
  st.k = k;
  st.lo = 0;
  st.hi = n;
  st.a_norm = (ep.u_hat + ep.x_hat * ep.y_hat.adjoint()).cwiseAbs().rowwise().sum().maxCoeff();

  // L: compress x_hat column by column from below; the adjoint layers
  // accumulate so that x_hat = L * [t; 0] with t upper triangular.
  st.l = make_lower_factor<T>(n, k);
  MatrixC<T> xw = ep.x_hat;
  for (Index h = 0; h < k; ++h) {
    auto& layer = st.l.layers[static_cast<std::size_t>(h)];
    for (Index idx = n + h - 1; idx >= h; --idx) {
      auto [g, rr] = make_rotation_adjoint(xw(idx, h), xw(idx + 1, h));
      g.i = idx;
      apply_left_adjoint(g, xw);
      xw(idx + 1, h) = Complex<T>(T(0));
      layer.set(g);
    }
  }
  MatrixC<T> t = xw.topRows(k);

  st.k_const = T(1);
  for (Index h = 0; h < k; ++h) st.k_const /= std::abs(t(h, h));

  // Q: one elimination per column of L^H * u_hat, whose lower bandwidth is
  // k + 1.
  MatrixC<T> v = ep.u_hat;
  apply_factor_left_adjoint(st.l, v);
  st.f.q = RotationChain<T>(k, nn - 2, Orientation::descending);
  for (Index c = 0; c + 1 < n; ++c) {
    auto [g, rr] = make_rotation_adjoint(v(k + c, c), v(k + c + 1, c));
    g.i = k + c;
    apply_left_adjoint(g, v);
    v(k + c + 1, c) = Complex<T>(T(0));
    st.f.q.set(g);
  }

  // R: peel the remaining upper-k-Hessenberg unitary from the outside in;
  // what survives is the phase diagonal.
  st.r = make_upper_factor<T>(n, k);
  for (Index bw = k; bw >= 1; --bw) {
    auto& layer = st.r.layers[static_cast<std::size_t>(bw - 1)];
    for (Index c = nn - 1 - bw; c >= 0; --c) {
      auto [g, rr] = make_rotation(-v(c + bw, c + 1), v(c + bw, c));
      g.i = c;
      apply_right_adjoint(g, v);
      v(c + bw, c) = Complex<T>(T(0));
      layer.set(g);
    }
  }
  st.f.dhat = VectorC<T>(nn);
  for (Index i = 0; i < nn; ++i) {
    const Complex<T> d = v(i, i);
    const T m = std::abs(d);
    st.f.dhat[i] = m > T(0) ? d / m : Complex<T>(T(1));
  }

  st.f.t = std::move(t);
  st.f.z = ep.y_hat;
  apply_factor_left(st.r, st.f.z);
  st.z_explicit = true;
  return st;
}

// Rebuild the dense rank block from the unitary factors.  The represented
// matrix has exactly zero trailing k rows, which pins Z^H down:
//   L_b (Q dhat) + (L_b [t;0]) Z^H = 0,  L_b = trailing k rows of L.
template <typename T>
MatrixC<T> recover_z(const LfrState<T>& st) {
  const Index k = st.k;
  const Index nn = st.N();

  MatrixC<T> lb_h = MatrixC<T>::Zero(nn, k);  // columns are L^H e_{n+j}
  for (Index j = 0; j < k; ++j) lb_h(st.n + j, j) = Complex<T>(T(1));
  apply_factor_left_adjoint(st.l, lb_h);

  // m1^H = dhat^H Q^H (L_b)^H, so m1 = L_b Q dhat
  MatrixC<T> m1_h = lb_h;
  apply_chain_left_adjoint(st.f.q, m1_h);
  m1_h.array().colwise() *= st.f.dhat.array().conjugate();

  MatrixC<T> s = lb_h.topRows(k).adjoint() * st.f.t;  // L_b [t; 0]
  MatrixC<T> zh = -s.partialPivLu().solve(MatrixC<T>(m1_h.adjoint()));
  return zh.adjoint();
}

}  // namespace structeig
