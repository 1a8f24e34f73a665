#pragma once

// Containers and kernels for the compressed factored form
//
//   A = L * F * R,   F = Q * diag(dhat) + T * Z^H,
//
// where L is a product of k ascending rotation chains (unit-lower-k-Hessenberg),
// R a product of k descending chains (unit-upper-k-Hessenberg up to diagonal),
// Q a single descending chain, dhat a unit-modulus diagonal, T a k x k upper
// triangular block, and Z an N x k dense block.  Provides materialization,
// windowed entry access, rotation transports through the layered factors,
// and the exact sine-product probes that drive deflation decisions.

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <utility>
#include <vector>

#include "structeig/rotation.hpp"

namespace structeig {

enum class Orientation { ascending, descending };

// A contiguous run of rotations at indices [lo, hi], one per index.
// Product order: descending chains multiply lo..hi left to right, ascending
// chains hi..lo.  Missing structure is represented by identity slots.
template <typename T>
struct RotationChain {
  Index lo{0};
  Index hi{-1};  // inclusive; hi < lo means empty
  Orientation orient{Orientation::descending};
  std::vector<Rotation<T>> rots;

  RotationChain() = default;
  RotationChain(Index lo_, Index hi_, Orientation o) : lo(lo_), hi(hi_), orient(o) {
    rots.assign(static_cast<std::size_t>(std::max<Index>(0, hi - lo + 1)), Rotation<T>{});
    for (Index j = lo; j <= hi; ++j) rots[static_cast<std::size_t>(j - lo)].i = j;
  }

  Index size() const { return hi < lo ? 0 : hi - lo + 1; }

  const Rotation<T>& rot(Index j) const {
    assert(j >= lo && j <= hi);
    return rots[static_cast<std::size_t>(j - lo)];
  }

  void set(const Rotation<T>& g) {
    assert(g.i >= lo && g.i <= hi);
    rots[static_cast<std::size_t>(g.i - lo)] = g;
  }
};

namespace detail {

template <bool Left, bool Adjoint, typename T, typename M>
void for_each_apply(const RotationChain<T>& ch, M& m, bool reversed) {
  const Index nrot = ch.size();
  for (Index t = 0; t < nrot; ++t) {
    Index pos = reversed ? nrot - 1 - t : t;
    if (ch.orient == Orientation::ascending) pos = nrot - 1 - pos;
    const Rotation<T>& g = ch.rots[static_cast<std::size_t>(pos)];
    if constexpr (Left && Adjoint)
      apply_left_adjoint(g, m);
    else if constexpr (Left)
      apply_left(g, m);
    else if constexpr (Adjoint)
      apply_right_adjoint(g, m);
    else
      apply_right(g, m);
  }
}

}  // namespace detail

// m <- chain * m
template <typename T, typename M>
void apply_chain_left(const RotationChain<T>& ch, M& m) {
  detail::for_each_apply<true, false>(ch, m, true);
}

// m <- chain^H * m
template <typename T, typename M>
void apply_chain_left_adjoint(const RotationChain<T>& ch, M& m) {
  detail::for_each_apply<true, true>(ch, m, false);
}

// m <- m * chain
template <typename T>
void apply_chain_right(const RotationChain<T>& ch, MatrixC<T>& m) {
  detail::for_each_apply<false, false>(ch, m, false);
}

// m <- m * chain^H
template <typename T>
void apply_chain_right_adjoint(const RotationChain<T>& ch, MatrixC<T>& m) {
  detail::for_each_apply<false, true>(ch, m, true);
}

template <typename T>
MatrixC<T> materialize(const RotationChain<T>& ch, Index n) {
  MatrixC<T> m = MatrixC<T>::Identity(n, n);
  apply_chain_left(ch, m);
  return m;
}

// k stacked chain layers forming one essentially-k-Hessenberg unitary factor.
// lower == true: layers[h] ascends over [h, N-2]; the product is unit lower
// k-Hessenberg with exact sine products on the k-th superdiagonal.
// lower == false: layers[j] descends over [0, N-2-j]; upper k-Hessenberg.
template <typename T>
struct KHessenbergFactor {
  bool lower{true};
  Index n{0}, k{0};  // N = n + k
  std::vector<RotationChain<T>> layers;

  Index N() const { return n + k; }
};

template <typename T>
KHessenbergFactor<T> make_lower_factor(Index n, Index k) {
  KHessenbergFactor<T> f{true, n, k, {}};
  for (Index h = 0; h < k; ++h)
    f.layers.emplace_back(h, n + k - 2, Orientation::ascending);
  return f;
}

template <typename T>
KHessenbergFactor<T> make_upper_factor(Index n, Index k) {
  KHessenbergFactor<T> f{false, n, k, {}};
  for (Index j = 0; j < k; ++j)
    f.layers.emplace_back(0, n + k - 2 - j, Orientation::descending);
  return f;
}

// m <- factor * m
template <typename T, typename M>
void apply_factor_left(const KHessenbergFactor<T>& f, M& m) {
  for (auto it = f.layers.rbegin(); it != f.layers.rend(); ++it) apply_chain_left(*it, m);
}

// m <- factor^H * m
template <typename T, typename M>
void apply_factor_left_adjoint(const KHessenbergFactor<T>& f, M& m) {
  for (const auto& layer : f.layers) apply_chain_left_adjoint(layer, m);
}

// m <- m * factor
template <typename T>
void apply_factor_right(const KHessenbergFactor<T>& f, MatrixC<T>& m) {
  for (const auto& layer : f.layers) apply_chain_right(layer, m);
}

template <typename T>
MatrixC<T> materialize(const KHessenbergFactor<T>& f) {
  MatrixC<T> m = MatrixC<T>::Identity(f.N(), f.N());
  apply_factor_left(f, m);
  return m;
}

// Middle factor F = Q * diag(dhat) + [t; 0] * z^H.
template <typename T>
struct MiddleFactor {
  RotationChain<T> q;  // descending, indices [k, N-2]
  VectorC<T> dhat;     // N unit-modulus phases
  MatrixC<T> t;        // k x k upper triangular
  MatrixC<T> z;        // N x k
};

template <typename T>
MatrixC<T> materialize(const MiddleFactor<T>& f) {
  const Index n_total = f.dhat.size();
  MatrixC<T> m = f.dhat.asDiagonal();
  apply_chain_left(f.q, m);
  const Index k = f.t.rows();
  if (k > 0) m.topRows(k) += f.t * f.z.adjoint();
  return m;
}

// Absorb a unit phase phi sitting at row `row`, positioned in the q-chain
// product immediately before slot `row` (every slot left of it already
// passed).  Nontrivial slots pass it rightward with a twist of their cosine;
// the walk stops at the first trivial slot or at the diagonal.
template <typename T>
void absorb_phase(MiddleFactor<T>& f, Index row, const Complex<T>& phi) {
  Index p = row;
  while (p >= f.q.lo && p <= f.q.hi && f.q.rot(p).s > T(0)) {
    Rotation<T> g = f.q.rot(p);
    g.c *= phi;
    f.q.set(g);
    ++p;
  }
  f.dhat[p] *= phi;
}

// F <- G(g) * F for g at the fusion site of the chain (window top): every
// chain slot strictly left of it must be structurally disjoint, which the
// sweep guarantees by keeping converged slots at exact identity.
template <typename T>
void fuse_left(MiddleFactor<T>& f, const Rotation<T>& g) {
  const Index v = g.i;
  assert(v >= f.q.lo && v <= f.q.hi);
  assert(v == f.q.lo || f.q.rot(v - 1).is_identity());
  auto [ff, pp] = fusion(g, f.q.rot(v));
  ff.i = v;
  f.q.set(ff);
  f.dhat[v] *= pp.d1;  // no slot right of v touches row v
  absorb_phase(f, v + 1, pp.d2);
}

// Carry an adjoint-applied rotation leftward through the diagonal:
// diag * g^H = g'^H * diag', swapping the two phases and twisting the cosine.
template <typename T>
Rotation<T> pass_dhat_adjoint(MiddleFactor<T>& f, Rotation<T> g) {
  const Index v = g.i;
  g.c *= std::conj(f.dhat[v]) * f.dhat[v + 1];
  std::swap(f.dhat[v], f.dhat[v + 1]);
  return g;
}

// F <- F * G(g)^H at the bottom fusion site (window bottom): g first crosses
// the diagonal, then fuses with the chain slot; the slot below must be an
// exact identity.  The rank part is the caller's responsibility (update z
// before calling).
template <typename T>
void fuse_right(MiddleFactor<T>& f, const Rotation<T>& g) {
  const Index v = g.i;
  assert(v >= f.q.lo && v <= f.q.hi);
  assert(v == f.q.hi || f.q.rot(v + 1).is_identity());
  Rotation<T> gt = pass_dhat_adjoint(f, g);
  auto [ff, pp] = fusion_adjoint(f.q.rot(v), gt);
  ff.i = v;
  f.q.set(ff);
  f.dhat[v] *= pp.d1;
  absorb_phase(f, v + 1, pp.d2);
}

// Pull the chase bulge out of the chain: chain * g^H refactors with slots
// (v, v+1); the adjoint-moving output exits on the left at index v+1.
// Cross the diagonal with pass_dhat_adjoint before calling.
template <typename T>
Rotation<T> turnover_q_adjoint(MiddleFactor<T>& f, const Rotation<T>& g) {
  const Index v = g.i;
  assert(v >= f.q.lo && v + 1 <= f.q.hi);
  auto t = turnover_v_to_hat_adjoint(f.q.rot(v), f.q.rot(v + 1), g);
  f.q.set(t.second);
  f.q.set(t.third);
  return t.first;
}

// --- transports through the layered factors ---------------------------------

enum class Dir { left_to_right, right_to_left };

namespace detail {

template <typename T>
void check_slot(const RotationChain<T>& ch, Index j) {
  if (j < ch.lo || j > ch.hi)
    throw std::invalid_argument("pass_through: rotation leaves the chain extent");
}

}  // namespace detail

// Carry a canonically-applied rotation through all k layers.  The index shifts
// by +-1 per layer: lower factors raise it left to right, upper factors lower
// it.  The factor is updated in place; the emerging rotation is returned.
template <typename T>
Rotation<T> pass_through(KHessenbergFactor<T>& f, Rotation<T> g, Dir dir) {
  const Index k = f.k;
  if (f.lower) {
    if (dir == Dir::left_to_right) {
      for (Index h = 0; h < k; ++h) {
        auto& ch = f.layers[static_cast<std::size_t>(h)];
        detail::check_slot(ch, g.i);
        detail::check_slot(ch, g.i + 1);
        auto t = turnover_v_to_hat(g, ch.rot(g.i + 1), ch.rot(g.i));
        ch.set(t.first);
        ch.set(t.second);
        g = t.third;
      }
    } else {
      for (Index h = k - 1; h >= 0; --h) {
        auto& ch = f.layers[static_cast<std::size_t>(h)];
        detail::check_slot(ch, g.i);
        detail::check_slot(ch, g.i - 1);
        auto t = turnover_hat_to_v(ch.rot(g.i), ch.rot(g.i - 1), g);
        ch.set(t.second);
        ch.set(t.third);
        g = t.first;
      }
    }
  } else {
    if (dir == Dir::left_to_right) {
      for (Index h = 0; h < k; ++h) {
        auto& ch = f.layers[static_cast<std::size_t>(h)];
        detail::check_slot(ch, g.i);
        detail::check_slot(ch, g.i - 1);
        auto t = turnover_hat_to_v(g, ch.rot(g.i - 1), ch.rot(g.i));
        ch.set(t.first);
        ch.set(t.second);
        g = t.third;
      }
    } else {
      for (Index h = k - 1; h >= 0; --h) {
        auto& ch = f.layers[static_cast<std::size_t>(h)];
        detail::check_slot(ch, g.i);
        detail::check_slot(ch, g.i + 1);
        auto t = turnover_v_to_hat(ch.rot(g.i), ch.rot(g.i + 1), g);
        ch.set(t.second);
        ch.set(t.third);
        g = t.first;
      }
    }
  }
  return g;
}

// Right-to-left transport of an adjoint-applied rotation: factor * g^H
// becomes g'^H * factor', with g' returned.  Upper factors raise the index by
// one per layer, lower factors lower it.
template <typename T>
Rotation<T> pass_through_adjoint(KHessenbergFactor<T>& f, Rotation<T> g) {
  const Index k = f.k;
  for (Index h = k - 1; h >= 0; --h) {
    auto& ch = f.layers[static_cast<std::size_t>(h)];
    if (f.lower) {
      detail::check_slot(ch, g.i);
      detail::check_slot(ch, g.i - 1);
      auto t = turnover_hat_to_v_adjoint(ch.rot(g.i), ch.rot(g.i - 1), g);
      ch.set(t.second);
      ch.set(t.third);
      g = t.first;
    } else {
      detail::check_slot(ch, g.i);
      detail::check_slot(ch, g.i + 1);
      auto t = turnover_v_to_hat_adjoint(ch.rot(g.i), ch.rot(g.i + 1), g);
      ch.set(t.second);
      ch.set(t.third);
      g = t.first;
    }
  }
  return g;
}

// --- assembled state ---------------------------------------------------------

template <typename T>
struct LfrState {
  KHessenbergFactor<T> l;  // lower
  MiddleFactor<T> f;
  KHessenbergFactor<T> r;  // upper
  Index n{0}, k{0};
  T k_const{T(1)};  // product of L's outermost sines; constant under sweeps
  T a_norm{T(1)};   // infinity norm of the represented matrix at build time
  Index lo{0}, hi{0};  // active rows [lo, hi) of the leading n x n block
  bool z_explicit{true};

  Index N() const { return n + k; }
};

template <typename T>
MatrixC<T> materialize(const LfrState<T>& st) {
  MatrixC<T> m = materialize(st.f);
  apply_factor_left(st.l, m);
  apply_factor_right(st.r, m);
  return m;
}

// One column of the represented matrix: A e_c = L (F (R e_c)).  O(N k) work.
template <typename T>
VectorC<T> product_column(const LfrState<T>& st, Index c, const MatrixC<T>* z_override = nullptr) {
  const Index nn = st.N();
  VectorC<T> v = VectorC<T>::Zero(nn);
  v[c] = Complex<T>(T(1));
  for (auto it = st.r.layers.rbegin(); it != st.r.layers.rend(); ++it) apply_chain_left(*it, v);
  const MatrixC<T>& zz = z_override ? *z_override : st.f.z;
  VectorC<T> rank_part = st.f.t * (zz.adjoint() * v);
  v.array() *= st.f.dhat.array();
  apply_chain_left(st.f.q, v);
  v.head(st.k) += rank_part;
  apply_factor_left(st.l, v);
  return v;
}

// Materialize the sub-block rows r0..r1, cols c0..c1 (both inclusive, extent
// at most 4) of the represented matrix.
template <typename T>
MatrixC<T> window(const LfrState<T>& st, Index r0, Index r1, Index c0, Index c1,
                  const MatrixC<T>* z_override = nullptr) {
  const Index nn = st.N();
  if (r0 < 0 || c0 < 0 || r1 >= nn || c1 >= nn || r0 > r1 || c0 > c1)
    throw std::invalid_argument("window: block out of range");
  if (r1 - r0 >= 4 || c1 - c0 >= 4)
    throw std::invalid_argument("window: block extent larger than 4");
  MatrixC<T> blk(r1 - r0 + 1, c1 - c0 + 1);
  for (Index c = c0; c <= c1; ++c) {
    VectorC<T> col = product_column(st, c, z_override);
    blk.col(c - c0) = col.segment(r0, r1 - r0 + 1);
  }
  return blk;
}

// |L(i, i+k)|: one outermost band entry of the lower factor, an O(k) sine
// product.  Valid for i in [0, n).  Bounded below by k_const.
template <typename T>
T lower_band_magnitude(const LfrState<T>& st, Index i) {
  T prod = T(1);
  for (Index h = 0; h < st.k; ++h)
    prod *= st.l.layers[static_cast<std::size_t>(h)].rot(i + h).s;
  return prod;
}

// |R(i+k, i)|: one outermost band entry of the upper factor, an O(k) sine
// product.  Valid for i in [0, n).
template <typename T>
T upper_band_magnitude(const LfrState<T>& st, Index i) {
  T prod = T(1);
  for (Index j = 0; j < st.k; ++j)
    prod *= st.r.layers[static_cast<std::size_t>(j)].rot(i + st.k - j - 1).s;
  return prod;
}

// Exact magnitudes of the outermost structural bands: the product of all
// k-th-superdiagonal magnitudes of L and all k-th-subdiagonal magnitudes of R.
// Both are plain sine products, no materialization involved.
template <typename T>
std::pair<T, T> outermost_products(const LfrState<T>& st) {
  T prod_l = T(1);
  T prod_r = T(1);
  for (Index i = 0; i < st.n; ++i) {
    for (Index h = 0; h < st.k; ++h)
      prod_l *= st.l.layers[static_cast<std::size_t>(h)].rot(i + h).s;
    for (Index j = 0; j < st.k; ++j)
      prod_r *= st.r.layers[static_cast<std::size_t>(j)].rot(i + st.k - j - 1).s;
  }
  return {prod_l, prod_r};
}

// |R(N-1, n-1)|: the magnitude of R's bottom structural corner, an O(k) sine
// product.  Vanishing corner signals a singular represented matrix.
template <typename T>
T trailing_corner_magnitude(const LfrState<T>& st) {
  T prod = T(1);
  for (Index j = 0; j < st.k; ++j)
    prod *= st.r.layers[static_cast<std::size_t>(j)].rot(st.N() - 2 - j).s;
  return prod;
}

}  // namespace structeig
