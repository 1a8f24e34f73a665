#pragma once

// Constructors for unitary-plus-rank-k eigenproblems: scalar and block
// companion linearizations, seeded random ensembles, classic polynomial
// families, and a JSON file format shared with the command-line tools.
// Coefficient vectors are leading-first (descending powers).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "structeig/representation.hpp"

namespace structeig {

inline constexpr const char* kRngName = "mt19937_64";

template <typename T>
struct PolySpec {
  VectorC<T> coeffs;  // degree + 1 entries, coeffs[0] is the leading one
  bool monic{false};
  T normalization_error{T(0)};  // bound on the monic-division rounding

  Index degree() const { return coeffs.size() - 1; }
};

// Divide through by the leading coefficient; the leading entry becomes an
// exact one.  The rounding bound of the division is recorded on the result.
template <typename T>
PolySpec<T> make_monic(const PolySpec<T>& p) {
  if (p.coeffs.size() < 1) throw std::invalid_argument("make_monic: empty coefficient list");
  const Complex<T> lead = p.coeffs[0];
  if (lead == Complex<T>(T(0)))
    throw std::invalid_argument("make_monic: leading coefficient is zero");
  PolySpec<T> q;
  q.coeffs = p.coeffs / lead;
  q.coeffs[0] = Complex<T>(T(1));
  q.monic = true;
  q.normalization_error =
      std::numeric_limits<T>::epsilon() * q.coeffs.cwiseAbs().maxCoeff();
  return q;
}

namespace detail {

// Double-word (compensated) arithmetic: a value is hi + lo with
// |lo| <= ulp(hi)/2.  Enough accuracy (~1e-32 per operation) to expand
// products of linear factors far below double roundoff.
template <typename T>
struct Dw {
  T hi{}, lo{};
};

template <typename T>
Dw<T> two_sum(T a, T b) {
  const T s = a + b;
  const T bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

template <typename T>
Dw<T> quick_two_sum(T a, T b) {  // requires |a| >= |b|
  const T s = a + b;
  return {s, b - (s - a)};
}

template <typename T>
Dw<T> two_prod(T a, T b) {
  const T p = a * b;
  return {p, std::fma(a, b, -p)};
}

template <typename T>
Dw<T> dw_add(const Dw<T>& a, const Dw<T>& b) {
  Dw<T> s = two_sum(a.hi, b.hi);
  s.lo += a.lo + b.lo;
  return quick_two_sum(s.hi, s.lo);
}

template <typename T>
Dw<T> dw_neg(const Dw<T>& a) {
  return {-a.hi, -a.lo};
}

template <typename T>
Dw<T> dw_mul(const Dw<T>& a, const Dw<T>& b) {
  Dw<T> p = two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return quick_two_sum(p.hi, p.lo);
}

template <typename T>
struct Cdw {
  Dw<T> re, im;
};

template <typename T>
Cdw<T> cdw_from(const Complex<T>& z) {
  return {{z.real(), T(0)}, {z.imag(), T(0)}};
}

template <typename T>
Complex<T> cdw_round(const Cdw<T>& z) {
  return {z.re.hi + z.re.lo, z.im.hi + z.im.lo};
}

template <typename T>
Cdw<T> cdw_add(const Cdw<T>& a, const Cdw<T>& b) {
  return {dw_add(a.re, b.re), dw_add(a.im, b.im)};
}

template <typename T>
Cdw<T> cdw_mul(const Cdw<T>& a, const Cdw<T>& b) {
  return {dw_add(dw_mul(a.re, b.re), dw_neg(dw_mul(a.im, b.im))),
          dw_add(dw_mul(a.re, b.im), dw_mul(a.im, b.re))};
}

template <typename T>
T cdw_abs(const Cdw<T>& z) {
  return std::hypot(z.re.hi + z.re.lo, z.im.hi + z.im.lo);
}

// Coefficients of prod (x - r_i), leading-first, in double-word precision.
template <typename T>
std::vector<Cdw<T>> expand_roots(const VectorC<T>& roots) {
  std::vector<Cdw<T>> c(1, cdw_from(Complex<T>(T(1))));
  for (Index i = 0; i < roots.size(); ++i) {
    const Cdw<T> mr = cdw_from(-roots[i]);
    c.push_back(cdw_from(Complex<T>(T(0))));
    for (std::size_t j = c.size() - 1; j >= 1; --j)
      c[j] = cdw_add(c[j], cdw_mul(mr, c[j - 1]));
  }
  return c;
}

}  // namespace detail

// Monic polynomial with the given roots, expanded in compensated arithmetic
// and rounded once at the end.
template <typename T>
PolySpec<T> polynomial_from_roots(const VectorC<T>& roots) {
  const auto c = detail::expand_roots(roots);
  PolySpec<T> p;
  p.coeffs.resize(static_cast<Index>(c.size()));
  for (std::size_t j = 0; j < c.size(); ++j)
    p.coeffs[static_cast<Index>(j)] = detail::cdw_round(c[j]);
  p.monic = true;
  return p;
}

// Roots 1, 2, ..., n.
template <typename T>
PolySpec<T> wilkinson_polynomial(Index n) {
  VectorC<T> r(n);
  for (Index j = 0; j < n; ++j) r[j] = Complex<T>(T(j + 1));
  return polynomial_from_roots(r);
}

// Roots 1, 1/2, ..., 1/n.
template <typename T>
PolySpec<T> reverse_wilkinson_polynomial(Index n) {
  VectorC<T> r(n);
  for (Index j = 0; j < n; ++j) r[j] = Complex<T>(T(1) / T(j + 1));
  return polynomial_from_roots(r);
}

// Monic Chebyshev polynomial of the first kind (roots cos((2j-1)pi/(2n))),
// expanded by the three-term recurrence.  The recurrence coefficients are
// integers scaled by powers of two, so every stored coefficient is exact;
// expanding from the floating-point roots instead would smear odd
// coefficients that cancel to zero by symmetry.
template <typename T>
PolySpec<T> chebyshev_polynomial(Index n) {
  std::vector<VectorC<T>> t(static_cast<std::size_t>(n) + 1);
  t[0] = VectorC<T>::Constant(1, Complex<T>(T(1)));
  if (n >= 1) {
    t[1] = VectorC<T>::Zero(2);
    t[1][0] = Complex<T>(T(1));
  }
  for (Index m = 2; m <= n; ++m) {
    VectorC<T> cur = VectorC<T>::Zero(m + 1);
    cur.head(m) = T(2) * t[static_cast<std::size_t>(m - 1)];
    cur.tail(m - 1) -= t[static_cast<std::size_t>(m - 2)];
    t[static_cast<std::size_t>(m)] = std::move(cur);
  }
  PolySpec<T> p;
  p.coeffs = t[static_cast<std::size_t>(n)];
  if (n >= 1) p.coeffs /= p.coeffs[0];  // exact: leading coefficient is 2^(n-1)
  p.monic = true;
  return p;
}

// 1 + x + ... + x^n; roots are the (n+1)-th roots of unity except one.
template <typename T>
PolySpec<T> all_ones_polynomial(Index n) {
  PolySpec<T> p;
  p.coeffs = VectorC<T>::Constant(n + 1, Complex<T>(T(1)));
  p.monic = true;
  return p;
}

// Frobenius companion of the monic normalization of p: a cyclic downshift
// plus a rank-one correction carried by the last column.  Exactly upper
// Hessenberg, unitary part exact.
template <typename T>
ProblemInput<T> companion(const PolySpec<T>& p) {
  const Index n = p.degree();
  if (n < 1) throw std::invalid_argument("companion: degree must be at least one");
  const PolySpec<T> m = p.monic ? p : make_monic(p);

  ProblemInput<T> out;
  out.u = MatrixC<T>::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) out.u(i + 1, i) = Complex<T>(T(1));
  out.u(0, n - 1) = Complex<T>(T(1));
  out.x = MatrixC<T>(n, 1);
  for (Index i = 0; i < n; ++i) out.x(i, 0) = -m.coeffs[n - i];  // -(coeff of x^i)
  out.x(0, 0) -= T(1);
  out.y = MatrixC<T>::Zero(n, 1);
  out.y(n - 1, 0) = Complex<T>(T(1));
  return out;
}

// Block companion linearization of the matrix polynomial with the given
// k x k coefficient blocks (leading-first, degree = blocks.size() - 1): a
// block cyclic shift plus a rank-k correction in the last block column,
// after normalizing the leading block to the identity.  The eigenvalues of
// the n = k*d result are the polynomial eigenvalues.  Coincides with
// companion() for k = 1.
template <typename T>
ProblemInput<T> block_companion(const std::vector<MatrixC<T>>& blocks) {
  if (blocks.size() < 2)
    throw std::invalid_argument("block_companion: degree must be at least one");
  const Index k = blocks.front().rows();
  const Index d = static_cast<Index>(blocks.size()) - 1;
  for (const auto& b : blocks)
    if (b.rows() != k || b.cols() != k)
      throw std::invalid_argument("block_companion: coefficient blocks must all be k x k");

  Eigen::FullPivLU<MatrixC<T>> lu(blocks.front());
  if (!lu.isInvertible())
    throw std::invalid_argument("block_companion: leading coefficient block is singular");

  const Index n = k * d;
  ProblemInput<T> out;
  out.u = MatrixC<T>::Zero(n, n);
  for (Index b = 1; b < d; ++b)
    out.u.block(b * k, (b - 1) * k, k, k) = MatrixC<T>::Identity(k, k);
  out.u.block(0, (d - 1) * k, k, k) = MatrixC<T>::Identity(k, k);
  out.x = MatrixC<T>(n, k);
  for (Index b = 0; b < d; ++b)  // block b holds -(coeff of x^b), leading-first input
    out.x.block(b * k, 0, k, k) = -lu.solve(blocks[static_cast<std::size_t>(d - b)]);
  out.x.block(0, 0, k, k) -= MatrixC<T>::Identity(k, k);
  out.y = MatrixC<T>::Zero(n, k);
  out.y.block((d - 1) * k, 0, k, k) = MatrixC<T>::Identity(k, k);
  return out;
}

namespace detail {

// Seeded complex Gaussian fill in a fixed (column-major) traversal order so
// outputs are bitwise reproducible for a given seed.
template <typename T>
MatrixC<T> gaussian_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<T> nd;
  MatrixC<T> m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) {
      const T re = nd(rng);
      const T im = nd(rng);
      m(r, c) = Complex<T>(re, im);
    }
  return m;
}

template <typename T>
T inf_norm(const MatrixC<T>& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace detail

// U is the unitary factor of a seeded Gaussian matrix; X, Y are Gaussian with
// X rescaled so ||X Y^H||_inf equals target_norm, which pins the assembled
// ||U + X Y^H||_inf to the target up to the O(sqrt(n)) norm of U itself.
template <typename T>
ProblemInput<T> random_unitary_plus_rank_k(Index n, Index k, T target_norm,
                                           std::uint64_t seed) {
  if (n < 1 || k < 1 || k >= n)
    throw std::invalid_argument("random_unitary_plus_rank_k: need 1 <= k < n");
  std::mt19937_64 rng(seed);
  ProblemInput<T> out;
  Eigen::HouseholderQR<MatrixC<T>> qr(detail::gaussian_matrix<T>(rng, n, n));
  out.u = qr.householderQ() * MatrixC<T>::Identity(n, n);
  out.x = detail::gaussian_matrix<T>(rng, n, k);
  out.y = detail::gaussian_matrix<T>(rng, n, k);
  const T beta = detail::inf_norm<T>(out.x * out.y.adjoint());
  if (beta > T(0)) out.x *= target_norm / beta;
  return out;
}

// As above with U a diagonal of seeded random unit-modulus phases.
template <typename T>
ProblemInput<T> unitary_diag_plus_rank_k(Index n, Index k, T target_norm,
                                         std::uint64_t seed) {
  if (n < 1 || k < 1 || k >= n)
    throw std::invalid_argument("unitary_diag_plus_rank_k: need 1 <= k < n");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<T> unif(T(0), T(1));
  ProblemInput<T> out;
  out.u = MatrixC<T>::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    out.u(i, i) = std::polar(T(1), T(2) * std::numbers::pi_v<T> * unif(rng));
  out.x = detail::gaussian_matrix<T>(rng, n, k);
  out.y = detail::gaussian_matrix<T>(rng, n, k);
  const T beta = detail::inf_norm<T>(out.x * out.y.adjoint());
  if (beta > T(0)) out.x *= target_norm / beta;
  return out;
}

namespace detail {

template <typename T>
nlohmann::json matrix_to_json(const MatrixC<T>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c)
      row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
MatrixC<T> matrix_from_json(const nlohmann::json& j, Index rows, Index cols,
                            const char* name) {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("load_custom: field '" + std::string(name) + "' " + what);
  };
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    fail("must be an array of " + std::to_string(rows) + " rows");
  MatrixC<T> m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      fail("row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c) {
      const auto& z = row[static_cast<std::size_t>(c)];
      if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number())
        fail("entry (" + std::to_string(r) + ", " + std::to_string(c) +
             ") must be a [re, im] number pair");
      m(r, c) = Complex<T>(z[0].template get<T>(), z[1].template get<T>());
    }
  }
  return m;
}

}  // namespace detail

// File format: {"n": int, "k": int, "u": [[[re,im], ...], ...], "x": ..., "y": ...}
// with row-major nested arrays; writers emit full round-trip precision.
template <typename T>
void save_custom(const std::string& path, const ProblemInput<T>& p) {
  nlohmann::json j;
  j["n"] = p.u.rows();
  j["k"] = p.x.cols();
  j["u"] = detail::matrix_to_json<T>(p.u);
  j["x"] = detail::matrix_to_json<T>(p.x);
  j["y"] = detail::matrix_to_json<T>(p.y);
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("save_custom: cannot open " + path);
  out << j.dump(1) << "\n";
  if (!out) throw std::runtime_error("save_custom: write failed for " + path);
}

template <typename T>
ProblemInput<T> load_custom(const std::string& path, const ValidationOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_custom: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("load_custom: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j.contains("k") || !j.contains("u") ||
      !j.contains("x") || !j.contains("y"))
    throw std::invalid_argument("load_custom: expected object with n, k, u, x, y");
  if (!j["n"].is_number_integer() || !j["k"].is_number_integer())
    throw std::invalid_argument("load_custom: n and k must be integers");
  const Index n = j["n"].template get<Index>();
  const Index k = j["k"].template get<Index>();
  if (n < 1 || k < 1)
    throw std::invalid_argument("load_custom: n and k must be positive");

  ProblemInput<T> p;
  p.u = detail::matrix_from_json<T>(j["u"], n, n, "u");
  p.x = detail::matrix_from_json<T>(j["x"], n, k, "x");
  p.y = detail::matrix_from_json<T>(j["y"], n, k, "y");
  validate(p, opt);
  return p;
}

// The dense matrix a builder output stands for.
template <typename T>
MatrixC<T> assemble(const ProblemInput<T>& p) {
  return p.u + p.x * p.y.adjoint();
}

}  // namespace structeig
