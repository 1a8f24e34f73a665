#pragma once

// Shared helpers for the test suites: dense embeddings of rotations (the
// independent oracle for the structured kernels) and seeded random inputs.

#include <complex>
#include <random>

#include <Eigen/Dense>

#include "structeig/rotation.hpp"

namespace testsup {

using structeig::Complex;
using structeig::Index;
using structeig::MatrixC;
using structeig::Rotation;
using structeig::VectorC;

using Cd = std::complex<double>;
using Mat = MatrixC<double>;
using Vec = VectorC<double>;

inline Eigen::Matrix2cd rot2(const Rotation<double>& g) {
  Eigen::Matrix2cd m;
  m << g.c, Cd(g.s), Cd(-g.s), std::conj(g.c);
  return m;
}

// Embed at local position p (0-based: acts on rows p, p+1) of an m x m identity.
inline Mat embed(const Rotation<double>& g, Index p, Index m) {
  Mat e = Mat::Identity(m, m);
  e.block(p, p, 2, 2) = rot2(g);
  return e;
}

// Embed using the rotation's own index.
inline Mat embed(const Rotation<double>& g, Index m) { return embed(g, g.i, m); }

inline Cd rand_complex(std::mt19937& rng) {
  std::normal_distribution<double> nd;
  return {nd(rng), nd(rng)};
}

inline Rotation<double> rand_rotation(std::mt19937& rng, Index i = 0) {
  auto [g, r] = structeig::make_rotation(rand_complex(rng), rand_complex(rng), i);
  (void)r;
  return g;
}

inline Cd rand_phase(std::mt19937& rng) {
  std::uniform_real_distribution<double> ud(0.0, 6.283185307179586);
  const double t = ud(rng);
  return {std::cos(t), std::sin(t)};
}

// Trivial rotation with a random unit-modulus diagonal.
inline Rotation<double> rand_trivial(std::mt19937& rng, Index i = 0) {
  return {rand_phase(rng), 0.0, i};
}

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

inline double rot_norm_defect(const Rotation<double>& g) {
  return std::abs(std::norm(g.c) + double(g.s) * g.s - 1.0);
}

}  // namespace testsup
