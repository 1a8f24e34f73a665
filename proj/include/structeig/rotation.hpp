#pragma once

// Canonical complex Givens rotations and the two kernels everything else is
// built from: fusion (two rotations at the same index collapse to one rotation
// times a unit-modulus phase pair) and turnover (three rotations in a V or hat
// pattern refactor into the opposite pattern, exactly, with no phase residue).
//
// Convention used everywhere: G = [[c, s], [-s, conj(c)]] acting on rows
// (i, i+1), with |c|^2 + s^2 = 1, s real and >= 0, det(G) = +1.

#include <cassert>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

namespace structeig {

using Index = Eigen::Index;

template <typename T>
using Complex = std::complex<T>;

template <typename T>
using MatrixC = Eigen::Matrix<Complex<T>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
using VectorC = Eigen::Matrix<Complex<T>, Eigen::Dynamic, 1>;

template <typename T>
using VectorR = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct Rotation {
  Complex<T> c{T(1), T(0)};
  T s{T(0)};
  Index i{0};  // acts on rows/columns (i, i+1)

  // Sine below the machine-epsilon floor: numerically a diagonal phase.
  bool is_trivial() const { return s < std::numeric_limits<T>::epsilon(); }
  // Exact identity slot, as left behind by deflation.
  bool is_identity() const { return s == T(0) && c == Complex<T>(T(1)); }
};

template <typename T>
struct PhasePair {
  Complex<T> d1{T(1), T(0)};
  Complex<T> d2{T(1), T(0)};
};

template <typename T>
struct GivensResult {
  Rotation<T> g;
  Complex<T> r;
};

namespace detail {

template <typename T>
T abs2(const Complex<T>& z) {
  return z.real() * z.real() + z.imag() * z.imag();
}

// Rescale (c, s) so |c|^2 + s^2 = 1 exactly up to one rounding.
template <typename T>
void renormalize(Complex<T>& c, T& s) {
  const T n = std::hypot(std::abs(c), s);
  assert(n > T(0.5));
  c /= n;
  s /= n;
}

}  // namespace detail

// Canonical rotation with G * (a, b)^T = (r, 0)^T.  Safe near the
// overflow/underflow boundaries: inputs are pre-scaled by their largest
// component magnitude before any square is formed.
template <typename T>
GivensResult<T> make_rotation(const Complex<T>& a, const Complex<T>& b, Index i = 0) {
  const Complex<T> zero{};
  if (b == zero) return {Rotation<T>{Complex<T>(T(1)), T(0), i}, a};
  if (a == zero) return {Rotation<T>{Complex<T>(T(0)), T(1), i}, b};
  const T m = std::max(std::max(std::abs(a.real()), std::abs(a.imag())),
                       std::max(std::abs(b.real()), std::abs(b.imag())));
  const Complex<T> as = a / m;
  const Complex<T> bs = b / m;
  const T na = std::hypot(as.real(), as.imag());
  const T nb = std::hypot(bs.real(), bs.imag());
  const T h = std::hypot(na, nb);
  const Complex<T> phase_b = bs / nb;  // r inherits b's phase
  Rotation<T> g{std::conj(as) * (phase_b / h), nb / h, i};
  return {g, phase_b * (h * m)};
}

// Canonical rotation whose adjoint eliminates: G^H * (a, b)^T = (r, 0)^T.
// Used when a factor is assembled by annihilations on the transposed side but
// stored in canonical (non-adjoint) form.
template <typename T>
GivensResult<T> make_rotation_adjoint(const Complex<T>& a, const Complex<T>& b, Index i = 0) {
  if (b == Complex<T>{}) return {Rotation<T>{Complex<T>(T(1)), T(0), i}, a};
  GivensResult<T> base = make_rotation(a, b, i);
  return {Rotation<T>{-std::conj(base.g.c), base.g.s, i}, -base.r};
}

// --- dense application helpers -------------------------------------------
// All act in place on rows or columns (g.i, g.i+1) of a full matrix.

template <typename T>
void apply_left(const Rotation<T>& g, MatrixC<T>& m) {
  const Index i = g.i;
  assert(i + 1 < m.rows());
  const Complex<T> cc = std::conj(g.c);
  for (Index j = 0; j < m.cols(); ++j) {
    const Complex<T> u = m(i, j);
    const Complex<T> v = m(i + 1, j);
    m(i, j) = g.c * u + g.s * v;
    m(i + 1, j) = -g.s * u + cc * v;
  }
}

template <typename T>
void apply_left_adjoint(const Rotation<T>& g, MatrixC<T>& m) {
  const Index i = g.i;
  assert(i + 1 < m.rows());
  const Complex<T> cc = std::conj(g.c);
  for (Index j = 0; j < m.cols(); ++j) {
    const Complex<T> u = m(i, j);
    const Complex<T> v = m(i + 1, j);
    m(i, j) = cc * u - g.s * v;
    m(i + 1, j) = g.s * u + g.c * v;
  }
}

template <typename T>
void apply_right(const Rotation<T>& g, MatrixC<T>& m) {
  const Index i = g.i;
  assert(i + 1 < m.cols());
  const Complex<T> cc = std::conj(g.c);
  for (Index j = 0; j < m.rows(); ++j) {
    const Complex<T> u = m(j, i);
    const Complex<T> v = m(j, i + 1);
    m(j, i) = g.c * u - g.s * v;
    m(j, i + 1) = g.s * u + cc * v;
  }
}

template <typename T>
void apply_right_adjoint(const Rotation<T>& g, MatrixC<T>& m) {
  const Index i = g.i;
  assert(i + 1 < m.cols());
  const Complex<T> cc = std::conj(g.c);
  for (Index j = 0; j < m.rows(); ++j) {
    const Complex<T> u = m(j, i);
    const Complex<T> v = m(j, i + 1);
    m(j, i) = cc * u + g.s * v;
    m(j, i + 1) = -g.s * u + g.c * v;
  }
}

template <typename T>
void apply_left(const Rotation<T>& g, VectorC<T>& v) {
  const Index i = g.i;
  assert(i + 1 < v.size());
  const Complex<T> u0 = v[i];
  const Complex<T> u1 = v[i + 1];
  v[i] = g.c * u0 + g.s * u1;
  v[i + 1] = -g.s * u0 + std::conj(g.c) * u1;
}

template <typename T>
void apply_left_adjoint(const Rotation<T>& g, VectorC<T>& v) {
  const Index i = g.i;
  assert(i + 1 < v.size());
  const Complex<T> u0 = v[i];
  const Complex<T> u1 = v[i + 1];
  v[i] = std::conj(g.c) * u0 - g.s * u1;
  v[i + 1] = g.s * u0 + g.c * u1;
}

enum class Side { left, right };

// Spec-shaped entry point: apply G (side == left, rows) or ... * G
// (side == right, columns) to a pair of contiguous slices of length len.
template <typename T>
void apply_rotation(const Rotation<T>& g, Complex<T>* r1, Complex<T>* r2, Index len, Side side) {
  const Complex<T> cc = std::conj(g.c);
  if (side == Side::left) {
    for (Index j = 0; j < len; ++j) {
      const Complex<T> u = r1[j];
      const Complex<T> v = r2[j];
      r1[j] = g.c * u + g.s * v;
      r2[j] = -g.s * u + cc * v;
    }
  } else {
    for (Index j = 0; j < len; ++j) {
      const Complex<T> u = r1[j];
      const Complex<T> v = r2[j];
      r1[j] = g.c * u - g.s * v;
      r2[j] = g.s * u + cc * v;
    }
  }
}

// --- fusion ----------------------------------------------------------------

namespace detail {

// Canonical form of an SU(2) matrix [[alpha, beta], [-conj(beta), conj(alpha)]]:
// returns (G', diag(d1, d2)) with the matrix equal to G' * diag(d1, d2),
// d2 = conj(d1), both unit modulus.
template <typename T>
std::pair<Rotation<T>, PhasePair<T>> canonicalize_su2(const Complex<T>& alpha,
                                                      const Complex<T>& beta, Index i) {
  const T sb = std::abs(beta);
  if (sb == T(0)) {
    Complex<T> c = alpha;
    T s = T(0);
    const T n = std::abs(c);
    assert(n > T(0.5));
    c /= n;
    return {Rotation<T>{c, s, i}, PhasePair<T>{}};
  }
  const Complex<T> d1 = std::conj(beta) / sb;
  Complex<T> c = alpha * (beta / sb);
  T s = sb;
  renormalize(c, s);
  return {Rotation<T>{c, s, i}, PhasePair<T>{d1, std::conj(d1)}};
}

}  // namespace detail

// G(g1) * G(g2) = G(out) * diag(d1, d2) with d2 = conj(d1) unit modulus.
template <typename T>
std::pair<Rotation<T>, PhasePair<T>> fusion(const Rotation<T>& g1, const Rotation<T>& g2) {
  assert(g1.i == g2.i);
  const Complex<T> alpha = g1.c * g2.c - g1.s * g2.s;
  const Complex<T> beta = g1.c * g2.s + g1.s * std::conj(g2.c);
  return detail::canonicalize_su2(alpha, beta, g1.i);
}

// G(g1) * G(g2)^H = G(out) * diag(d1, d2).
template <typename T>
std::pair<Rotation<T>, PhasePair<T>> fusion_adjoint(const Rotation<T>& g1, const Rotation<T>& g2) {
  assert(g1.i == g2.i);
  const Complex<T> alpha = g1.c * std::conj(g2.c) + g1.s * g2.s;
  const Complex<T> beta = -g1.c * g2.s + g1.s * g2.c;
  return detail::canonicalize_su2(alpha, beta, g1.i);
}

// --- turnover ---------------------------------------------------------------
//
// Local 3x3 algebra on rows (1, 2, 3): position 1 means rows (1,2), position 2
// means rows (2,3).  Each kernel refactors a product of three rotations into
// the opposite pattern without any phase residue.  The degenerate case (first
// output sine exactly zero) is handled by exact phase factorization of the
// remaining 2x2 block.  Output indices follow from the input indices.

template <typename T>
struct Turnover {
  Rotation<T> first;   // leading rotation of the refactored product
  Rotation<T> second;  // middle
  Rotation<T> third;   // trailing
};

namespace detail {

// Solve G(x) * G(z) = [[alpha, beta], [-conj(beta), conj(alpha)]] with x
// trivial (sine 0).  Exact: x carries the phase, z the rotation.
template <typename T>
void split_su2_trivial_first(const Complex<T>& alpha, const Complex<T>& beta, Complex<T>& cx,
                             Complex<T>& cz, T& sz) {
  const T sb = std::abs(beta);
  if (sb > T(0)) {
    cx = beta / sb;
    cz = alpha * (std::conj(beta) / sb);
    sz = sb;
    renormalize(cz, sz);
  } else {
    const T na = std::abs(alpha);
    assert(na > T(0.5));
    cx = alpha / na;
    cz = Complex<T>(T(1));
    sz = T(0);
  }
}

}  // namespace detail

// V -> hat: G1(a) G2(b) G1(c) = G2(x) G1(y) G2(z).
template <typename T>
Turnover<T> turnover_v_to_hat(const Rotation<T>& a, const Rotation<T>& b, const Rotation<T>& c) {
  assert(b.i == a.i + 1 && c.i == a.i);
  const Index base = a.i;
  const Complex<T> ca = a.c, cb = b.c, cc = c.c;
  const T sa = a.s, sb = b.s, sc = c.s;

  const Complex<T> m11 = ca * cc - sa * cb * sc;
  const Complex<T> m21 = -sa * cc - std::conj(ca) * cb * sc;
  const T p = sb * sc;  // = m31, exactly nonnegative
  const T syr = std::hypot(std::abs(m21), p);

  Rotation<T> x, y, z;
  if (syr > T(0)) {
    x = {-m21 / syr, p / syr, base + 1};
    Complex<T> cy = m11;
    T sy = syr;
    detail::renormalize(cy, sy);
    y = {cy, sy, base};
    // z from the transformed second column, consistent with the computed x, y
    // (phase errors of an ill-conditioned x cancel in the product), plus the
    // exact real anchor sin_z * sin_y = sin_a * sin_b.
    const Complex<T> m12 = ca * sc + sa * cb * std::conj(cc);
    const Complex<T> m22 = -sa * sc + std::conj(ca) * cb * std::conj(cc);
    const Complex<T> m32 = -sb * std::conj(cc);
    Complex<T> cz = sy * m12 + cy * (std::conj(x.c) * m22 - x.s * m32);
    T sz = sa * sb / sy;
    detail::renormalize(cz, sz);
    z = {cz, sz, base + 1};
  } else {
    // First column is e1 up to phase; peel it off and split the rest exactly.
    const T n11 = std::abs(m11);
    assert(n11 > T(0.5));
    const Complex<T> yh = m11 / n11;
    const Complex<T> m22 = -sa * sc + std::conj(ca) * cb * std::conj(cc);
    const Complex<T> m23 = std::conj(ca) * sb;
    Complex<T> cx, cz;
    T sz;
    detail::split_su2_trivial_first(m22, m23, cx, cz, sz);
    x = {cx * yh, T(0), base + 1};
    y = {yh, T(0), base};
    z = {cz, sz, base + 1};
  }
  return {x, y, z};
}

// hat -> V: G2(a) G1(b) G2(c) = G1(x) G2(y) G1(z).
template <typename T>
Turnover<T> turnover_hat_to_v(const Rotation<T>& a, const Rotation<T>& b, const Rotation<T>& c) {
  assert(b.i == a.i - 1 && c.i == a.i);
  const Index base = b.i;
  const Complex<T> ca = a.c, cb = b.c, cc = c.c;
  const T sa = a.s, sb = b.s, sc = c.s;

  const T p = sb * sc;  // = m13
  const Complex<T> m23 = ca * std::conj(cb) * sc + sa * std::conj(cc);
  const Complex<T> m33 = -sa * std::conj(cb) * sc + std::conj(ca) * std::conj(cc);
  const T syr = std::hypot(p, std::abs(m23));

  Rotation<T> x, y, z;
  if (syr > T(0)) {
    x = {std::conj(m23) / syr, p / syr, base};
    Complex<T> cy = std::conj(m33);
    T sy = syr;
    detail::renormalize(cy, sy);
    y = {cy, sy, base + 1};
    const Complex<T> m11 = cb;
    const Complex<T> m21 = -ca * sb;
    Complex<T> cz = std::conj(x.c) * m11 - x.s * m21;
    T sz = sa * sb / sy;
    detail::renormalize(cz, sz);
    z = {cz, sz, base};
  } else {
    // Third column is e3 up to phase.
    const T n33 = std::abs(m33);
    assert(n33 > T(0.5));
    const Complex<T> yh = std::conj(m33) / n33;
    const Complex<T> m11 = cb;
    const Complex<T> m12 = sb * cc;
    const Complex<T> alpha = std::conj(yh) * m11;
    const Complex<T> beta = std::conj(yh) * m12;
    Complex<T> cx, cz;
    T sz;
    detail::split_su2_trivial_first(alpha, beta, cx, cz, sz);
    x = {cx * yh, T(0), base};
    y = {yh, T(0), base + 1};
    z = {cz, sz, base};
  }
  return {x, y, z};
}

// V -> hat with a right-moving adjoint: G1(a) G2(b) G1(g)^H = G2(x)^H G1(y) G2(z).
// g enters multiplying as its adjoint; x leaves the same way.
template <typename T>
Turnover<T> turnover_v_to_hat_adjoint(const Rotation<T>& a, const Rotation<T>& b,
                                      const Rotation<T>& g) {
  assert(b.i == a.i + 1 && g.i == a.i);
  const Index base = a.i;
  const Complex<T> ca = a.c, cb = b.c, cg = g.c;
  const T sa = a.s, sb = b.s, sg = g.s;

  const Complex<T> m11 = ca * std::conj(cg) + sa * cb * sg;
  const Complex<T> m21 = -sa * std::conj(cg) + std::conj(ca) * cb * sg;
  const T p = sb * sg;  // = -m31
  const T syr = std::hypot(std::abs(m21), p);

  Rotation<T> x, y, z;
  if (syr > T(0)) {
    x = {-std::conj(m21) / syr, p / syr, base + 1};
    Complex<T> cy = m11;
    T sy = syr;
    detail::renormalize(cy, sy);
    y = {cy, sy, base};
    const Complex<T> m12 = -ca * sg + sa * cb * cg;
    const Complex<T> m22 = sa * sg + std::conj(ca) * cb * cg;
    const Complex<T> m32 = -sb * cg;
    Complex<T> cz = sy * m12 + cy * (x.c * m22 + x.s * m32);
    T sz = sa * sb / sy;
    detail::renormalize(cz, sz);
    z = {cz, sz, base + 1};
  } else {
    const T n11 = std::abs(m11);
    assert(n11 > T(0.5));
    const Complex<T> yh = m11 / n11;
    const Complex<T> m22 = sa * sg + std::conj(ca) * cb * cg;
    const Complex<T> m32 = -sb * cg;
    Complex<T> cx, cz;
    T sz;
    const T n32 = std::abs(m32);
    if (n32 > T(0)) {
      cx = -m32 / n32;
      sz = n32;
      cz = cx * yh * m22;
    } else {
      cx = Complex<T>(T(1));
      sz = T(0);
      cz = yh * m22;
    }
    detail::renormalize(cz, sz);
    x = {cx, T(0), base + 1};
    y = {yh, T(0), base};
    z = {cz, sz, base + 1};
  }
  return {x, y, z};
}

// hat -> V with a left-moving adjoint: G2(a) G1(b) G2(g)^H = G1(x)^H G2(y) G1(z).
template <typename T>
Turnover<T> turnover_hat_to_v_adjoint(const Rotation<T>& a, const Rotation<T>& b,
                                      const Rotation<T>& g) {
  assert(b.i == a.i - 1 && g.i == a.i);
  const Index base = b.i;
  const Complex<T> ca = a.c, cb = b.c, cg = g.c;
  const T sa = a.s, sb = b.s, sg = g.s;

  const T p = sb * sg;  // = -m13
  const Complex<T> m23 = -ca * std::conj(cb) * sg + sa * cg;
  const Complex<T> m33 = sa * std::conj(cb) * sg + std::conj(ca) * cg;
  const T syr = std::hypot(p, std::abs(m23));

  Rotation<T> x, y, z;
  if (syr > T(0)) {
    x = {m23 / syr, p / syr, base};
    Complex<T> cy = std::conj(m33);
    T sy = syr;
    detail::renormalize(cy, sy);
    y = {cy, sy, base + 1};
    const Complex<T> m11 = cb;
    const Complex<T> m21 = -ca * sb;
    Complex<T> cz = x.c * m11 + x.s * m21;
    T sz = sa * sb / sy;
    detail::renormalize(cz, sz);
    z = {cz, sz, base};
  } else {
    const T n33 = std::abs(m33);
    assert(n33 > T(0.5));
    const Complex<T> yh = std::conj(m33) / n33;
    const Complex<T> m11 = cb;
    const Complex<T> m21 = -ca * sb;
    Complex<T> cx, cz;
    T sz;
    const T n21 = std::abs(m21);
    if (n21 > T(0)) {
      const Complex<T> q = std::conj(yh) * m21;
      cx = -q / n21;
      sz = n21;
      cz = cx * m11;
    } else {
      cx = Complex<T>(T(1));
      sz = T(0);
      cz = m11;
    }
    detail::renormalize(cz, sz);
    x = {cx, T(0), base};
    y = {yh, T(0), base + 1};
    z = {cz, sz, base};
  }
  return {x, y, z};
}

// Shape-dispatching turnover for canonical (non-adjoint) triples.  The pattern
// is inferred from the indices: (i, i+1, i) is a V, (i, i-1, i) is a hat.
template <typename T>
Turnover<T> turnover(const Rotation<T>& a, const Rotation<T>& b, const Rotation<T>& c) {
  if (a.i != c.i) throw std::invalid_argument("turnover: outer rotations must share an index");
  if (b.i == a.i + 1) return turnover_v_to_hat(a, b, c);
  if (b.i == a.i - 1) return turnover_hat_to_v(a, b, c);
  throw std::invalid_argument("turnover: middle rotation must sit at an adjacent index");
}

}  // namespace structeig
