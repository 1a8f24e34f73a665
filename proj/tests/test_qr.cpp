#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <complex>
#include <random>
#include <vector>

#include "structeig/qr.hpp"
#include "support.hpp"

using structeig::Complex;
using structeig::Index;
using structeig::MatrixC;
using structeig::ProblemInput;
using structeig::VectorC;
using testsup::max_abs;

namespace {

using Cd = std::complex<double>;
using Mat = MatrixC<double>;

Mat random_dense(Index r, Index c, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  return Mat::NullaryExpr(r, c, [&](Index, Index) { return Cd(nd(rng), nd(rng)); });
}

Mat random_unitary(Index n, std::mt19937& rng) {
  Eigen::HouseholderQR<Mat> qr(random_dense(n, n, rng));
  return Mat(qr.householderQ());
}

ProblemInput<double> random_problem(Index n, Index k, std::mt19937& rng) {
  return {random_unitary(n, rng), random_dense(n, k, rng), random_dense(n, k, rng)};
}

Mat dense_a(const ProblemInput<double>& p) { return p.u + p.x * p.y.adjoint(); }

// worst relative pairing error between a computed and a reference spectrum
double spectra_gap(VectorC<double> got, VectorC<double> ref) {
  REQUIRE(got.size() == ref.size());
  double worst = 0.0;
  std::vector<bool> used(static_cast<std::size_t>(ref.size()), false);
  for (Index i = 0; i < got.size(); ++i) {
    Index best = -1;
    double best_d = 0.0;
    for (Index j = 0; j < ref.size(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double d = std::abs(got[i] - ref[j]);
      if (best < 0 || d < best_d) {
        best = j;
        best_d = d;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    worst = std::max(worst, best_d / std::max(1.0, std::abs(ref[best])));
  }
  return worst;
}

VectorC<double> dense_spectrum(const Mat& a) {
  Eigen::ComplexEigenSolver<Mat> es(a, false);
  return es.eigenvalues();
}

bool is_hessenberg(const Mat& m, double tol) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = j + 2; i < m.rows(); ++i)
      if (std::abs(m(i, j)) > tol) return false;
  return true;
}

structeig::LfrState<double> built_state(const ProblemInput<double>& p) {
  auto [xt, yt] = structeig::normalize_rank_part(p.x, p.y);
  auto ep = structeig::embed(p.u, xt, yt);
  structeig::hessenberg_reduce(ep);
  return structeig::build_lfr(ep);
}

}  // namespace

TEST_CASE("shift is the block eigenvalue nearest the trailing entry") {
  std::mt19937 rng(930);
  for (int rep = 0; rep < 500; ++rep) {
    Mat m = random_dense(2, 2, rng);
    Cd mu = structeig::wilkinson_shift<double>(m);
    Eigen::ComplexEigenSolver<Mat> es(m, false);
    const Cd l1 = es.eigenvalues()(0), l2 = es.eigenvalues()(1);
    const double scale = std::max(1.0, max_abs(m));
    const double to_eig = std::min(std::abs(mu - l1), std::abs(mu - l2));
    CHECK(to_eig <= 1e-13 * scale);
    const Cd near = std::abs(l1 - m(1, 1)) <= std::abs(l2 - m(1, 1)) ? l1 : l2;
    CHECK(std::abs(mu - near) <= 1e-8 * scale);
  }
  Mat swap(2, 2);
  swap << Cd(0), Cd(1), Cd(1), Cd(0);
  CHECK(structeig::wilkinson_shift<double>(swap) == Cd(1));
  Mat diag(2, 2);
  diag << Cd(3, 1), Cd(0.5), Cd(0), Cd(-2, 4);
  CHECK(std::abs(structeig::wilkinson_shift<double>(diag) - Cd(-2, 4)) <= 1e-15);
  Mat multiple(2, 2);
  multiple << Cd(1), Cd(0), Cd(0), Cd(1);
  CHECK(std::abs(structeig::wilkinson_shift<double>(multiple) - Cd(1)) <= 1e-15);
}

TEST_CASE("one sweep is a window-confined Hessenberg-preserving similarity") {
  std::mt19937 rng(931);
  for (auto [n, k] : std::vector<std::pair<Index, Index>>{{8, 1}, {8, 2}, {6, 3}}) {
    auto p = random_problem(n, k, rng);
    auto st = built_state(p);
    const Index nn = st.N();
    Mat before = structeig::materialize(st);
    const double scale = max_abs(before);

    Mat m2 = structeig::window(st, n - 2, n - 1, n - 2, n - 1);
    Cd mu = structeig::wilkinson_shift<double>(m2);
    Mat accum = Mat::Identity(n, n);
    auto info = structeig::qr_step(st, Index(0), n - 1, mu, &accum);

    Mat after = structeig::materialize(st);
    CHECK(is_hessenberg(after, 1e-13 * scale));

    Mat w = Mat::Identity(nn, nn);
    w.topLeftCorner(n, n) = accum;
    CHECK(max_abs(Mat(w.adjoint() * before * w - after)) <= 1e-12 * scale);

    auto [prod_l, prod_r] = structeig::outermost_products(st);
    CHECK(std::abs(prod_l - st.k_const) <= 1e-12 * st.k_const);

    // the initial rotation annihilates the shifted first column entry
    Mat g = testsup::rot2(info.g_init);
    const Cd top = before(0, 0) - mu, bot = before(1, 0);
    CHECK(std::abs(g(1, 0) * top + g(1, 1) * bot) <= 1e-13 * scale);

    // trailing rows of the embedding stay numerically zero
    CHECK(max_abs(Mat(after.bottomRows(k))) <= 1e-12 * scale);
  }
}

TEST_CASE("iteration converges to the dense spectrum") {
  std::mt19937 rng(932);
  for (auto [n, k] : std::vector<std::pair<Index, Index>>{
           {4, 1}, {7, 1}, {10, 2}, {9, 3}, {6, 5}, {12, 1}, {2, 1}, {2, 2}, {3, 2}}) {
    auto p = random_problem(n, k, rng);
    auto rep = structeig::solve(p);
    CHECK(rep.converged);
    CHECK(rep.sweeps <= 30 * n);
    CHECK(spectra_gap(rep.eigenvalues, dense_spectrum(dense_a(p))) <= 1e-11);
  }
}

TEST_CASE("every subdiagonal deflates exactly once") {
  std::mt19937 rng(933);
  auto p = random_problem(10, 2, rng);
  auto rep = structeig::solve(p);
  CHECK(rep.converged);
  CHECK(rep.deflations == 9);
  std::vector<bool> seen(9, false);
  for (auto [r, sweep] : rep.deflation_log) {
    REQUIRE(r >= 0);
    REQUIRE(r < 9);
    CHECK(!seen[static_cast<std::size_t>(r)]);
    seen[static_cast<std::size_t>(r)] = true;
    CHECK(sweep <= rep.sweeps);
  }
}

TEST_CASE("accumulated similarity reproduces a triangular form of the input") {
  std::mt19937 rng(934);
  const Index n = 12, k = 2;
  auto p = random_problem(n, k, rng);
  structeig::SolveConfig<double> cfg;
  cfg.accumulate = true;
  auto rep = structeig::solve(p, cfg);
  CHECK(rep.converged);

  const Mat& pa = rep.accumulated;
  CHECK(max_abs(Mat(pa.adjoint() * pa - Mat::Identity(n, n))) <= 1e-12);

  Mat a = dense_a(p);
  Mat tri = pa.adjoint() * a * pa;
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) tri(i, j) = Cd(0);
  // the strictly lower part removed above must have been negligible, and the
  // diagonal must carry the computed spectrum
  Mat resid = pa.adjoint() * a * pa - tri;
  CHECK(max_abs(resid) <= 1e-12 * max_abs(a));
  CHECK(spectra_gap(rep.eigenvalues, tri.diagonal()) <= 1e-12);
}

TEST_CASE("implicit rank block agrees with the explicit route") {
  std::mt19937 rng(935);
  for (auto [n, k] : std::vector<std::pair<Index, Index>>{{9, 1}, {8, 2}, {7, 3}}) {
    auto p = random_problem(n, k, rng);
    structeig::SolveConfig<double> cfg;
    auto rep_ex = structeig::solve(p, cfg);
    cfg.explicit_z = false;
    auto rep_im = structeig::solve(p, cfg);
    CHECK(rep_ex.converged);
    CHECK(rep_im.converged);
    CHECK(spectra_gap(rep_im.eigenvalues, dense_spectrum(dense_a(p))) <= 1e-10);
    CHECK(spectra_gap(rep_im.eigenvalues, rep_ex.eigenvalues) <= 1e-10);
  }
}

TEST_CASE("purely unitary input yields a unit-modulus spectrum") {
  std::mt19937 rng(936);
  const Index n = 10, k = 2;
  ProblemInput<double> p{random_unitary(n, rng), Mat::Zero(n, k), random_dense(n, k, rng)};
  auto rep = structeig::solve(p);
  CHECK(rep.converged);
  for (Index i = 0; i < n; ++i) CHECK(std::abs(std::abs(rep.eigenvalues[i]) - 1.0) <= 1e-12);
  CHECK(spectra_gap(rep.eigenvalues, dense_spectrum(dense_a(p))) <= 1e-12);
}

TEST_CASE("singular input converges through the zero-shift path") {
  std::mt19937 rng(937);
  const Index n = 9;
  Mat u = random_unitary(n, rng);
  Mat v = random_dense(n, 1, rng);
  v /= v.norm();
  ProblemInput<double> p{u, Mat(-(u * v)), v};  // (u + x y^H) v = 0
  auto rep = structeig::solve(p);
  CHECK(rep.converged);
  double smallest = 1e300;
  for (Index i = 0; i < n; ++i) smallest = std::min(smallest, std::abs(rep.eigenvalues[i]));
  CHECK(smallest <= 1e-12);
  CHECK(spectra_gap(rep.eigenvalues, dense_spectrum(dense_a(p))) <= 1e-11);
}

TEST_CASE("an exhausted sweep budget reports partial results") {
  std::mt19937 rng(938);
  auto p = random_problem(8, 2, rng);
  structeig::SolveConfig<double> cfg;
  cfg.max_sweeps_per_eig = 0;
  bool thrown = false;
  try {
    structeig::solve(p, cfg);
  } catch (const structeig::SolveFailure<double>& f) {
    thrown = true;
    CHECK(!f.partial.converged);
    CHECK(f.partial.eigenvalues.size() == 8);
  }
  CHECK(thrown);
}
