#pragma once

// Implicit single-shift QR iteration on the compressed L * F * R form.  One
// sweep costs O(k) rotation turnovers per chase step plus O(N k) for the two
// shift windows, so the full spectrum is found in O(n^2 k) arithmetic.  The
// rank block can be carried explicitly (updated every sweep) or implicitly
// (reconstructed from the zero-trailing-rows identity on demand); the latter
// is cheaper per sweep but feeds the shift windows reconstructed data.

#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "structeig/representation.hpp"

namespace structeig {

template <typename T>
struct SolveConfig {
  bool explicit_z{true};   // update the rank block during sweeps
  bool accumulate{false};  // maintain the n x n left similarity
  T deflation_tol{std::numeric_limits<T>::epsilon()};
  Index max_sweeps_per_eig{30};
  Index stagnation_limit{15};  // sweeps without progress before an exceptional shift
  Index stall_patience{6};     // sweeps without progress before entry-based settling
  std::uint64_t exceptional_seed{0x2545f4914f6cdd1dull};
  ValidationOptions validation{};
};

template <typename T>
struct StepInfo {
  Rotation<T> g_init;  // first similarity rotation; proportional to the
                       // shifted first window column by construction
  Complex<T> shift;
};

template <typename T>
struct SolveReport {
  VectorC<T> eigenvalues;
  Index sweeps{0};
  Index deflations{0};
  std::vector<std::pair<Index, Index>> deflation_log;  // (subdiagonal, sweep)
  MatrixC<T> accumulated;  // n x n similarity when requested
  MatrixC<T> final_block;  // leading n x n of the converged form when accumulating
  bool converged{false};
};

template <typename T>
struct SolveFailure : std::runtime_error {
  SolveReport<T> partial;
  SolveFailure(const std::string& msg, SolveReport<T> rep)
      : std::runtime_error(msg), partial(std::move(rep)) {}
};

// Eigenvalue of the 2x2 block closest to its bottom-right entry, computed
// through the larger quadratic root to avoid cancellation.
template <typename T>
Complex<T> wilkinson_shift(const MatrixC<T>& m) {
  const Complex<T> a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  const Complex<T> diff = a - d;
  const Complex<T> disc = std::sqrt(diff * diff + T(4) * b * c);
  const T align = std::real(std::conj(diff) * disc);
  Complex<T> x_big;
  if (align > T(0)) {
    x_big = (diff + disc) / T(2);
  } else if (align < T(0)) {
    x_big = (diff - disc) / T(2);
  } else {
    const Complex<T> xp = (diff + disc) / T(2);
    const Complex<T> xm = (diff - disc) / T(2);
    auto lam = [&](const Complex<T>& x) { return x == Complex<T>(T(0)) ? d : d - b * c / x; };
    const Complex<T> lp = lam(xp), lm = lam(xm);
    const bool take_p = lp.imag() != lm.imag() ? lp.imag() > lm.imag() : lp.real() >= lm.real();
    x_big = take_p ? xp : xm;
  }
  if (x_big == Complex<T>(T(0))) return d;
  return d - b * c / x_big;
}

struct ScanResult {
  std::vector<Index> deflated;                // subdiagonal indices retired this scan
  std::vector<std::pair<Index, Index>> runs;  // maximal live-slot row spans, ascending
};

// Replace every chain slot whose sine sits at rotation roundoff by an exact
// identity, folding its phase content into the diagonal, then list the
// maximal contiguous runs of live slots.  The retirement criterion is
// sine-only: a subdiagonal entry of the represented matrix equals the slot
// sine times a band ratio bounded by sqrt(2), so retiring a slot at sine s
// moves the matrix by at most sqrt(2) s in norm, keeping every kill inside
// an absolute roundoff budget no matter how large the problem's rank part
// is.  The converse does not hold: a slot can keep an order-one sine while
// its subdiagonal entry is negligible, because the sine then encodes
// genuine upper-triangle mass through the surrounding band factors.  Such
// slots must never be retired (the kill would be a norm-level perturbation)
// and the runs they anchor stay live here; iterate() tracks their entry
// convergence separately.
template <typename T>
ScanResult deflate_scan(LfrState<T>& st, const SolveConfig<T>& cfg) {
  ScanResult res;
  const T rot_thresh = T(64) * cfg.deflation_tol;
  auto& q = st.f.q;
  for (Index t = q.lo; t <= q.hi; ++t) {
    const Rotation<T> g = q.rot(t);
    if (g.is_identity()) continue;
    if (g.s > rot_thresh) continue;
    const T m = std::abs(g.c);
    const Complex<T> phi = m > T(0) ? g.c / m : Complex<T>(T(1));
    Rotation<T> id;
    id.i = t;
    q.set(id);
    st.f.dhat[t] *= phi;  // no slot right of t touches row t
    absorb_phase(st.f, t + 1, std::conj(phi));
    res.deflated.push_back(t - st.k);
  }
  for (Index t = q.lo; t <= q.hi; ++t) {
    if (q.rot(t).s <= T(0)) continue;
    Index top = t;
    while (t < q.hi && q.rot(t + 1).s > T(0)) ++t;
    res.runs.emplace_back(top - st.k, t - st.k + 1);
  }
  return res;
}

// One sweep on block rows [wl, wh] driven by an arbitrary initial similarity
// rotation at index wl.  The window boundary slots must be exact identities
// (deflate_scan leaves them that way).  accum, when given, picks up every
// similarity rotation on the right.
template <typename T>
void chase_step(LfrState<T>& st, Index wl, Index wh, const Rotation<T>& g0,
                MatrixC<T>* accum = nullptr) {
  if (wl < 0 || wh <= wl || wh >= st.n) throw std::invalid_argument("chase_step: bad window");
  st.lo = wl;
  st.hi = wh + 1;

  Rotation<T> gl = pass_through(st.l, g0, Dir::left_to_right);
  fuse_left(st.f, gl);
  if (accum) apply_right_adjoint(g0, *accum);

  Rotation<T> gr = g0;
  for (Index i = wl; i < wh; ++i) {
    Rotation<T> g1 = pass_through_adjoint(st.r, gr);
    if (st.z_explicit) apply_left(g1, st.f.z);
    if (i < wh - 1) {
      Rotation<T> g2 = pass_dhat_adjoint(st.f, g1);
      Rotation<T> x = turnover_q_adjoint(st.f, g2);
      Rotation<T> g3 = pass_through_adjoint(st.l, x);
      if (accum) apply_right_adjoint(g3, *accum);
      gr = g3;
    } else {
      fuse_right(st.f, g1);
    }
  }
}

// One shifted sweep: the initial rotation is proportional to the shifted
// first window column, so the bulge carries the shift information down to
// the trailing corner.  z_override feeds the window evaluations when the
// stored rank block is stale.
template <typename T>
StepInfo<T> qr_step(LfrState<T>& st, Index wl, Index wh, const Complex<T>& mu,
                    MatrixC<T>* accum = nullptr, const MatrixC<T>* z_override = nullptr) {
  MatrixC<T> col = window(st, wl, wl + 1, wl, wl, z_override);
  auto [g0, r0] = make_rotation(col(0, 0) - mu, col(1, 0));
  g0.i = wl;
  chase_step(st, wl, wh, g0, accum);
  return {g0, mu};
}

template <typename T>
StepInfo<T> zero_shift_step(LfrState<T>& st, Index wl, Index wh, MatrixC<T>* accum = nullptr,
                            const MatrixC<T>* z_override = nullptr) {
  return qr_step(st, wl, wh, Complex<T>(T(0)), accum, z_override);
}

// Eigenvalues of the represented matrix restricted to the leading n rows.
// Where chain slots retired the matrix is exactly block triangular, so the
// spectrum splits over the runs of still-live slots.  Isolated rows read
// straight off the diagonal; each live run is materialized as a dense block
// and solved directly, which honours subdiagonal couplings that converged
// in entry while their rotations still carry upper-triangle mass.  Dropping
// those couplings instead would be an unstructured perturbation: absolutely
// tiny, but amplified by the eigenvalue condition number, which on graded
// problems costs many digits in coefficient space.
template <typename T>
VectorC<T> extract_eigenvalues(const LfrState<T>& st, const MatrixC<T>* z_override = nullptr) {
  VectorC<T> ev(st.n);
  const auto& q = st.f.q;
  Index c = 0;
  while (c < st.n) {
    Index end = c;
    while (end < st.n - 1 && q.rot(end + st.k).s > T(0)) ++end;
    if (end == c) {
      ev[c] = product_column(st, c, z_override)[c];
    } else {
      MatrixC<T> blk(end - c + 1, end - c + 1);
      for (Index j = c; j <= end; ++j)
        blk.col(j - c) = product_column(st, j, z_override).segment(c, end - c + 1);
      Eigen::ComplexSchur<MatrixC<T>> schur(blk, false);
      if (schur.info() != Eigen::Success)
        throw std::runtime_error("extract_eigenvalues: block solve failed");
      for (Index j = 0; j <= end - c; ++j) ev[c + j] = schur.matrixT()(j, j);
    }
    c = end + 1;
  }
  return ev;
}

// Drive sweeps until every subdiagonal of the represented matrix has
// converged.  Two bookkeeping layers cooperate:
//
//  - Chain slots retire through deflate_scan when their sines hit rotation
//    roundoff; sweep windows must span whole live-slot runs because a sweep
//    can only enter and leave the chain at identity slots.
//  - A slot can instead converge in entry: its subdiagonal entry falls to
//    roundoff relative to the neighbouring diagonal while the sine stays
//    large (the rotation then carries upper-triangle mass, not coupling).
//    Those subdiagonals are latched as settled; settled rows are excluded
//    from shift selection so the iteration stops re-targeting eigenvalues
//    it has already isolated, which otherwise pins the shift and stalls
//    the whole window at a linear rate.
//
// Entry settling only engages after stall_patience sweeps without progress:
// during healthy quadratic convergence a subdiagonal entry falls straight
// through the latch band and the slot retires by sine, which keeps the
// diagonal clean of latched couplings on steeply graded problems.  Sweeps
// still traverse settled rows (legality demands it); the bulge dies at the
// settled boundary, so the decoupled part is not disturbed.  Throws
// SolveFailure with the partial spectrum if the sweep budget runs out.
template <typename T>
SolveReport<T> iterate(LfrState<T>& st, const SolveConfig<T>& cfg = {},
                       MatrixC<T>* accum = nullptr) {
  SolveReport<T> rep;
  std::mt19937_64 exc_rng(cfg.exceptional_seed);
  std::uniform_real_distribution<T> unif(T(0), T(1));
  const Index max_sweeps = cfg.max_sweeps_per_eig * st.n;
  const T entry_tol = T(64) * cfg.deflation_tol;
  Index since_deflation = 0;
  std::vector<char> settled(static_cast<std::size_t>(st.n), 0);
  auto mark = [&](Index sd) {
    auto& flag = settled[static_cast<std::size_t>(sd)];
    if (flag) return;
    flag = 1;
    rep.deflation_log.emplace_back(sd, rep.sweeps);
    ++rep.deflations;
    since_deflation = 0;
  };

  for (;;) {
    MatrixC<T> z_rec;
    const MatrixC<T>* zz = nullptr;
    if (!st.z_explicit) {
      z_rec = recover_z(st);
      zz = &z_rec;
    }

    ScanResult scan = deflate_scan(st, cfg);
    for (Index r : scan.deflated) mark(r);

    // Sweep target: the bottommost run still holding an unsettled
    // subdiagonal, shifted from that run's bottommost unsettled 2x2.
    std::optional<std::pair<Index, Index>> target;
    MatrixC<T> m2;
    const bool may_latch = since_deflation >= cfg.stall_patience;
    for (auto it = scan.runs.rbegin(); it != scan.runs.rend() && !target; ++it) {
      const auto [wl, wh] = *it;
      for (Index h = wh - 1; h >= wl; --h) {
        if (settled[static_cast<std::size_t>(h)]) continue;
        MatrixC<T> blk = window(st, h, h + 1, h, h + 1, zz);
        if (may_latch && std::abs(blk(1, 0)) <=
                             entry_tol * (std::abs(blk(0, 0)) + std::abs(blk(1, 1)))) {
          mark(h);
          continue;
        }
        target = std::pair<Index, Index>{wl, wh};
        m2 = std::move(blk);
        break;
      }
    }
    if (!target) {
      rep.converged = true;
      break;
    }
    if (rep.sweeps >= max_sweeps) {
      if (!st.z_explicit) st.f.z = recover_z(st);
      rep.eigenvalues = extract_eigenvalues(st);
      if (accum) rep.final_block = materialize(st).topLeftCorner(st.n, st.n);
      throw SolveFailure<T>("sweep budget exhausted before convergence", std::move(rep));
    }

    const auto [wl, wh] = *target;
    ++since_deflation;

    Complex<T> mu = wilkinson_shift<T>(m2);
    if (since_deflation % cfg.stagnation_limit == 0) {
      if ((since_deflation / cfg.stagnation_limit) % 2 == 1) {
        // Exact head-diagonal shift: the initial rotation becomes a full
        // quarter turn even when the window head entry is numerically dead,
        // re-gauging a window whose ordinary bulges die on entry.
        mu = window(st, wl, wl + 1, wl, wl, zz)(0, 0);
      } else {
        const T theta = T(2) * std::numbers::pi_v<T> * unif(exc_rng);
        const T base = std::max(std::abs(mu), std::abs(m2(1, 0)) + std::abs(m2(1, 1)));
        mu = std::polar(base, theta);
      }
    }
    qr_step(st, wl, wh, mu, accum, zz);
    ++rep.sweeps;
  }

  if (!st.z_explicit) st.f.z = recover_z(st);
  rep.eigenvalues = extract_eigenvalues(st);
  if (accum) rep.final_block = materialize(st).topLeftCorner(st.n, st.n);
  return rep;
}

// Full pipeline: validate, orthonormalize the rank part, embed, reduce to
// Hessenberg form, factor, and iterate.
template <typename T>
SolveReport<T> solve(const ProblemInput<T>& p, const SolveConfig<T>& cfg = {}) {
  validate(p, cfg.validation);
  auto [xt, yt] = normalize_rank_part(p.x, p.y);
  auto ep = embed(p.u, xt, yt);
  const Index n = ep.n;
  MatrixC<T> accum;
  if (cfg.accumulate) accum = MatrixC<T>::Identity(n, n);
  hessenberg_reduce(ep, cfg.accumulate ? &accum : nullptr);
  LfrState<T> st = build_lfr(ep);
  st.z_explicit = cfg.explicit_z;
  SolveReport<T> rep;
  try {
    rep = iterate(st, cfg, cfg.accumulate ? &accum : nullptr);
  } catch (SolveFailure<T>& f) {
    if (cfg.accumulate) f.partial.accumulated = std::move(accum);
    throw;
  }
  if (cfg.accumulate) rep.accumulated = std::move(accum);
  return rep;
}

}  // namespace structeig
