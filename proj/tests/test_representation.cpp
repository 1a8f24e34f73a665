#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <random>

#include "structeig/representation.hpp"
#include "support.hpp"

using structeig::EmbeddedProblem;
using structeig::Index;
using structeig::MatrixC;
using structeig::ProblemInput;
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
  Mat q = qr.householderQ();
  return q;
}

ProblemInput<double> random_problem(Index n, Index k, std::mt19937& rng) {
  return {random_unitary(n, rng), random_dense(n, k, rng), random_dense(n, k, rng)};
}

bool is_hessenberg(const Mat& m, double tol) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = j + 2; i < m.rows(); ++i)
      if (std::abs(m(i, j)) > tol) return false;
  return true;
}

}  // namespace

TEST_CASE("validation rejects malformed and accepts admissible inputs") {
  std::mt19937 rng(920);
  auto p = random_problem(8, 2, rng);
  CHECK_NOTHROW(structeig::validate(p));

  auto bad_u = p;
  bad_u.u(3, 4) += Cd(0.1, 0.0);
  CHECK_THROWS_AS(structeig::validate(bad_u), std::invalid_argument);

  auto bad_y = p;
  bad_y.y.col(1) = bad_y.y.col(0) * Cd(2.0, 1.0);
  CHECK_THROWS_AS(structeig::validate(bad_y), std::invalid_argument);

  auto bad_x = p;
  bad_x.x.col(1) = bad_x.x.col(0) * Cd(0.5, -0.25);
  bad_x.x.col(1) += 1e-14 * random_dense(8, 1, rng);
  CHECK_THROWS_AS(structeig::validate(bad_x), std::invalid_argument);

  auto zero_x = p;
  zero_x.x.setZero();
  CHECK_NOTHROW(structeig::validate(zero_x));

  auto bad_dim = p;
  bad_dim.x = random_dense(7, 2, rng);
  CHECK_THROWS_AS(structeig::validate(bad_dim), std::invalid_argument);

  ProblemInput<double> too_wide{random_unitary(3, rng), random_dense(3, 4, rng),
                                random_dense(3, 4, rng)};
  CHECK_THROWS_AS(structeig::validate(too_wide), std::invalid_argument);
}

TEST_CASE("rank part normalization is exact and deterministic") {
  std::mt19937 rng(921);
  for (auto [n, k] : std::vector<std::pair<Index, Index>>{{6, 1}, {8, 3}, {5, 5}}) {
    Mat x = random_dense(n, k, rng);
    Mat y = random_dense(n, k, rng);
    auto [xt, yt] = structeig::normalize_rank_part(x, y);
    CHECK(max_abs(Mat(yt.adjoint() * yt - Mat::Identity(k, k))) <= 1e-14);
    CHECK(max_abs(Mat(xt * yt.adjoint() - x * y.adjoint())) <= 1e-13 * max_abs(Mat(x * y.adjoint())));
  }
}

TEST_CASE("embedding preserves the leading block and zeroes the trailing rows") {
  std::mt19937 rng(922);
  const Index n = 7, k = 3;
  auto p = random_problem(n, k, rng);
  auto [xt, yt] = structeig::normalize_rank_part(p.x, p.y);
  auto ep = structeig::embed(p.u, xt, yt);

  CHECK(max_abs(Mat(ep.u_hat.adjoint() * ep.u_hat - Mat::Identity(n + k, n + k))) <= 1e-13);
  Mat a_full = structeig::assemble(ep);
  Mat a = p.u + p.x * p.y.adjoint();
  CHECK(max_abs(Mat(a_full.topLeftCorner(n, n) - a)) <= 1e-13 * max_abs(a));
  CHECK(max_abs(Mat(a_full.bottomRows(k))) <= 1e-14);
  CHECK(max_abs(Mat(ep.x_hat.bottomRows(k) + Mat::Identity(k, k))) == 0.0);
  CHECK(max_abs(Mat(ep.y_hat.bottomRows(k))) == 0.0);
}

TEST_CASE("embedding worked example: identity plus nilpotent correction") {
  Mat u = Mat::Identity(2, 2);
  Mat x(2, 1), y(2, 1);
  x << Cd(1), Cd(0);
  y << Cd(0), Cd(1);
  auto [xt, yt] = structeig::normalize_rank_part(x, y);
  CHECK(max_abs(Mat(xt - x)) <= 1e-15);
  CHECK(max_abs(Mat(yt - y)) <= 1e-15);
  auto ep = structeig::embed(u, xt, yt);

  Mat u_hat_expected(3, 3);
  u_hat_expected << Cd(1), Cd(0), Cd(0), Cd(0), Cd(0), Cd(1), Cd(0), Cd(1), Cd(0);
  Mat x_hat_expected(3, 1);
  x_hat_expected << Cd(1), Cd(1), Cd(-1);
  Mat y_hat_expected(3, 1);
  y_hat_expected << Cd(0), Cd(1), Cd(0);
  CHECK(max_abs(Mat(ep.u_hat - u_hat_expected)) <= 1e-15);
  CHECK(max_abs(Mat(ep.x_hat - x_hat_expected)) <= 1e-15);
  CHECK(max_abs(Mat(ep.y_hat - y_hat_expected)) <= 1e-15);
}

TEST_CASE("hessenberg reduction is a structure-preserving similarity") {
  std::mt19937 rng(923);
  const Index n = 9, k = 2;
  auto p = random_problem(n, k, rng);
  auto [xt, yt] = structeig::normalize_rank_part(p.x, p.y);
  auto ep = structeig::embed(p.u, xt, yt);
  Mat a_before = structeig::assemble(ep).topLeftCorner(n, n);
  double scale = max_abs(a_before);

  Mat accum = Mat::Identity(n, n);
  structeig::hessenberg_reduce(ep, &accum);

  Mat a_after = structeig::assemble(ep).topLeftCorner(n, n);
  CHECK(is_hessenberg(a_after, 1e-14 * scale));
  CHECK(max_abs(Mat(accum.adjoint() * accum - Mat::Identity(n, n))) <= 1e-13);
  CHECK(max_abs(Mat(accum.adjoint() * a_before * accum - a_after)) <= 1e-13 * scale);
  CHECK(max_abs(Mat(ep.x_hat.bottomRows(k) + Mat::Identity(k, k))) == 0.0);
  CHECK(max_abs(Mat(ep.y_hat.bottomRows(k))) == 0.0);
  CHECK(max_abs(Mat(ep.u_hat.adjoint() * ep.u_hat - Mat::Identity(n + k, n + k))) <= 1e-13);
  CHECK(max_abs(Mat(structeig::assemble(ep).bottomRows(k))) <= 1e-13);

  // an exactly-Hessenberg input takes the no-op path and is left bit-identical
  Mat cyc = Mat::Zero(5, 5);
  for (Index i = 0; i + 1 < 5; ++i) cyc(i + 1, i) = Cd(1);
  cyc(0, 4) = Cd(1);
  Mat xc = random_dense(5, 1, rng);
  Mat yc = Mat::Zero(5, 1);
  yc(4, 0) = Cd(1);
  auto [xtc, ytc] = structeig::normalize_rank_part(xc, yc);
  auto epc = structeig::embed(cyc, xtc, ytc);
  auto epc2 = epc;
  structeig::hessenberg_reduce(epc2);
  CHECK(max_abs(Mat(epc2.u_hat - epc.u_hat)) == 0.0);
  CHECK(max_abs(Mat(epc2.x_hat - epc.x_hat)) == 0.0);
}

TEST_CASE("factored form reproduces the embedded matrix") {
  std::mt19937 rng(924);
  for (auto [n, k] :
       std::vector<std::pair<Index, Index>>{{5, 1}, {6, 2}, {7, 3}, {4, 4}, {1, 1}, {2, 1}}) {
    auto p = random_problem(n, k, rng);
    auto [xt, yt] = structeig::normalize_rank_part(p.x, p.y);
    auto ep = structeig::embed(p.u, xt, yt);
    structeig::hessenberg_reduce(ep);
    Mat a_hess = structeig::assemble(ep);
    auto st = structeig::build_lfr(ep);

    CHECK(st.N() == n + k);
    CHECK(max_abs(Mat(structeig::materialize(st) - a_hess)) <= 1e-12 * std::max(1.0, max_abs(a_hess)));

    // trailing rows of L times the compressed rank column block
    Mat lmat = structeig::materialize(st.l);
    CHECK(max_abs(Mat(lmat.bottomRows(k).leftCols(k) * st.f.t + Mat::Identity(k, k))) <= 1e-12);

    // the scalar invariant equals the outermost sine product of L, and the
    // R-side product carries the determinant magnitude of the leading block
    auto [prod_l, prod_r] = structeig::outermost_products(st);
    CHECK(std::abs(prod_l - st.k_const) <= 1e-12 * st.k_const);
    const double det_mag = std::abs(Mat(a_hess.topLeftCorner(n, n)).determinant());
    CHECK(std::abs(prod_r - st.k_const * det_mag) <= 1e-10 * std::max(1.0, st.k_const * det_mag));

    // the stored rank block satisfies the zero-trailing-rows identity
    Mat zr = structeig::recover_z(st);
    CHECK(max_abs(Mat(zr - st.f.z)) <= 1e-11 * std::max(1.0, max_abs(st.f.z)));
  }
}

TEST_CASE("factored form handles a vanishing rank part") {
  std::mt19937 rng(925);
  const Index n = 6, k = 2;
  auto p = random_problem(n, k, rng);
  p.x.setZero();
  auto [xt, yt] = structeig::normalize_rank_part(p.x, p.y);
  auto ep = structeig::embed(p.u, xt, yt);
  structeig::hessenberg_reduce(ep);
  Mat a_hess = structeig::assemble(ep);
  auto st = structeig::build_lfr(ep);
  CHECK(max_abs(Mat(structeig::materialize(st) - a_hess)) <= 1e-12);
}
