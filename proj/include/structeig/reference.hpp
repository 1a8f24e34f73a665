#pragma once

// Dense reference eigensolver and the error metrics used to judge the
// structured solver: matched forward error between spectra, the matrix
// backward error through the accumulated similarity, and the polynomial
// coefficient backward error through a compensated root expansion.

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "structeig/problems.hpp"

namespace structeig {

// Full spectrum of a dense matrix by unitary reduction to triangular Schur
// form (Hessenberg reduction plus shifted QR internally), O(n^3).
template <typename T>
VectorC<T> dense_eig(const MatrixC<T>& a) {
  if (a.rows() < 1 || a.rows() != a.cols())
    throw std::invalid_argument("dense_eig: matrix must be square and nonempty");
  if (a.rows() == 1) return a.diagonal();
  Eigen::ComplexSchur<MatrixC<T>> schur(a, /*computeU=*/false);
  if (schur.info() != Eigen::Success)
    throw std::runtime_error("dense_eig: iteration failed to converge");
  return schur.matrixT().diagonal();
}

template <typename T>
struct MatchResult {
  T fw_err{};                  // mean relative error over the pairing
  std::vector<Index> pairing;  // pairing[i] = reference index matched to computed[i]
};

namespace detail {

// Exact minimal-sum assignment (shortest augmenting paths with potentials),
// O(n^3).  cost is square, row-major n*n.
template <typename T>
std::vector<Index> hungarian(const std::vector<T>& cost, Index n) {
  const T inf = std::numeric_limits<T>::infinity();
  std::vector<T> u(n + 1, T(0)), v(n + 1, T(0));
  std::vector<Index> p(n + 1, n), way(n + 1, n);
  for (Index i = 0; i < n; ++i) {
    p[n] = i;
    Index j0 = n;
    std::vector<T> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      T delta = inf;
      Index j1 = n;
      for (Index j = 0; j < n; ++j) {
        if (used[j]) continue;
        const T cur = cost[static_cast<std::size_t>(i0 * n + j)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != n);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != n);
  }
  std::vector<Index> row_to_col(n);
  for (Index j = 0; j < n; ++j)
    if (p[j] != n) row_to_col[p[j]] = j;
  return row_to_col;
}

// Repeatedly take the globally cheapest unmatched pair.
template <typename T>
std::vector<Index> greedy_match(const std::vector<T>& cost, Index n) {
  std::vector<Index> row_to_col(n, -1);
  std::vector<char> row_done(n, 0), col_done(n, 0);
  for (Index step = 0; step < n; ++step) {
    T best = std::numeric_limits<T>::infinity();
    Index bi = 0, bj = 0;
    for (Index i = 0; i < n; ++i) {
      if (row_done[i]) continue;
      for (Index j = 0; j < n; ++j) {
        if (col_done[j]) continue;
        const T c = cost[static_cast<std::size_t>(i * n + j)];
        if (c < best) {
          best = c;
          bi = i;
          bj = j;
        }
      }
    }
    row_to_col[bi] = bj;
    row_done[bi] = 1;
    col_done[bj] = 1;
  }
  return row_to_col;
}

}  // namespace detail

// Pair the two spectra at minimal total relative error (exact assignment up
// to n = 64, greedy beyond) and return the mean of |l - lhat| / max(1, |l|)
// over the pairs.
template <typename T>
MatchResult<T> match_spectra(const VectorC<T>& computed, const VectorC<T>& reference) {
  const Index n = computed.size();
  if (reference.size() != n)
    throw std::invalid_argument("match_spectra: spectra differ in length");
  MatchResult<T> res;
  if (n == 0) return res;

  std::vector<T> cost(static_cast<std::size_t>(n * n));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      cost[static_cast<std::size_t>(i * n + j)] =
          std::abs(computed[i] - reference[j]) / std::max(T(1), std::abs(reference[j]));

  res.pairing = n <= 64 ? detail::hungarian(cost, n) : detail::greedy_match(cost, n);
  T sum = T(0);
  for (Index i = 0; i < n; ++i)
    sum += cost[static_cast<std::size_t>(i * n + res.pairing[static_cast<std::size_t>(i)])];
  res.fw_err = sum / T(n);
  return res;
}

// || p1^H a p1 - a_final ||_inf / || a ||_inf: the relative distance between
// the input pushed through the accumulated similarity and the converged form.
template <typename T>
T backward_error_matrix(const MatrixC<T>& a, const MatrixC<T>& p1, const MatrixC<T>& a_final) {
  if (a.rows() != a.cols() || p1.rows() != a.rows() || p1.cols() != a.rows() ||
      a_final.rows() != a.rows() || a_final.cols() != a.rows())
    throw std::invalid_argument("backward_error_matrix: dimension mismatch");
  const T denom = detail::inf_norm<T>(a);
  if (denom == T(0)) return T(0);
  return detail::inf_norm<T>((p1.adjoint() * a * p1 - a_final).eval()) / denom;
}

// max_i |p_i - phat_i| / ||x||_inf where phat has the given roots exactly and
// x = (1, p_{n-1}, ..., p_0).  The expansion runs in double-word arithmetic,
// so its own contribution stays far below double roundoff.
template <typename T>
T backward_error_poly(const PolySpec<T>& p, const VectorC<T>& roots) {
  const PolySpec<T> m = p.monic ? p : make_monic(p);
  if (roots.size() != m.degree())
    throw std::invalid_argument("backward_error_poly: root count must match the degree");
  const auto expanded = detail::expand_roots(roots);
  T worst = T(0);
  T scale = T(0);
  for (Index j = 0; j <= m.degree(); ++j) {
    const auto diff =
        detail::cdw_add(expanded[static_cast<std::size_t>(j)],
                        detail::cdw_from(Complex<T>(-m.coeffs[j].real(), -m.coeffs[j].imag())));
    worst = std::max(worst, detail::cdw_abs(diff));
    scale = std::max(scale, std::abs(m.coeffs[j]));
  }
  return worst / std::max(T(1), scale);
}

}  // namespace structeig
