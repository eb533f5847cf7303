#include "jfft/microstructures.hpp"
#include "jfft/operators.hpp"
#include "oracle/dense_oracle.hpp"

#include <gtest/gtest.h>

namespace {

using namespace jfft;

const MaterialModel kMat = elastic_mandel(2.0 / 3.0, 0.5);

TEST(ApplyK, MatchesDenseAssembly) {
  for (std::size_t n : {4u, 8u}) {
    const Grid g = make_grid(n);
    std::mt19937_64 rng(n);
    ScalarField rho(g);
    rho.values = oracle::random_vector(rho.size(), rng, 0.0, 3.0);
    const auto op = make_operator(rho, kMat);
    const Eigen::MatrixXd K = oracle::dense_K(g, rho.values, kMat.C0);
    for (int trial = 0; trial < 5; ++trial) {
      VectorField u(g);
      u.values = oracle::random_vector(u.size(), rng);
      EXPECT_LT(oracle::rel_diff(K * oracle::to_eigen(u.values), oracle::to_eigen(apply_K(op, u).values)), 1e-12);
    }
  }
}

TEST(ApplyK, SymmetricAndPositiveSemiDefinite) {
  const Grid g = make_grid(8, {1.0, 2.0});
  std::mt19937_64 rng(77);
  ScalarField rho(g);
  rho.values = oracle::random_vector(rho.size(), rng, 0.0, 3.0);
  const auto op = make_operator(rho, kMat);
  for (int trial = 0; trial < 10; ++trial) {
    VectorField u(g), v(g);
    u.values = oracle::random_vector(u.size(), rng);
    v.values = oracle::random_vector(v.size(), rng);
    const double uKv = inner(u.values, apply_K(op, v).values);
    const double vKu = inner(v.values, apply_K(op, u).values);
    EXPECT_LT(std::abs(uKv - vKu) / std::abs(uKv), 1e-12);
    EXPECT_GE(inner(u.values, apply_K(op, u).values), 0.0);
  }
}

TEST(ApplyK, LinearInDensity) {
  const Grid g = make_grid(6);
  std::mt19937_64 rng(8);
  VectorField u(g);
  u.values = oracle::random_vector(u.size(), rng);
  const auto k1 = apply_K(make_operator(ScalarField(g, 1.0), kMat), u);
  const auto kc = apply_K(make_operator(ScalarField(g, 2.5), kMat), u);
  for (std::size_t k = 0; k < u.size(); ++k) EXPECT_NEAR(kc[k], 2.5 * k1[k], 1e-12 * std::abs(k1[k]) + 1e-14);
}

TEST(AssembleRhs, ZeroForUniformDensityOrZeroStrain) {
  const Grid g = make_grid(6);
  const auto uniform = make_operator(ScalarField(g, 0.7), kMat);
  for (double v : assemble_rhs(uniform, {1, 1, 1}).values) EXPECT_NEAR(v, 0.0, 1e-14);
  std::mt19937_64 rng(1);
  ScalarField rho(g);
  rho.values = oracle::random_vector(rho.size(), rng, 0.0, 1.0);
  for (double v : assemble_rhs(make_operator(rho, kMat), {0, 0, 0}).values) EXPECT_EQ(v, 0.0);
}

TEST(AssembleRhs, LaminateMatchesDenseOracle) {
  const ScalarField rho = refine_to_grid(laminate_density(4, 10.0), 8);
  const auto op = make_operator(rho, kMat);
  const Mandel E{1, 1, 1};
  const VectorField f = assemble_rhs(op, E);
  EXPECT_LT(oracle::rel_diff(oracle::dense_rhs(rho.grid, rho.values, kMat.C0, E), oracle::to_eigen(f.values)), 1e-12);
  const auto m = component_mean(f);
  EXPECT_LT(std::abs(m[0]) * f.size(), 1e-12 * norm2(f.values));
  EXPECT_LT(std::abs(m[1]) * f.size(), 1e-12 * norm2(f.values));
}

TEST(AssembleRhs, RejectsNonFiniteStrain) {
  const auto op = make_operator(ScalarField(make_grid(4), 1.0), kMat);
  EXPECT_THROW(assemble_rhs(op, {1.0, std::nan(""), 0.0}), std::invalid_argument);
}

TEST(MakeOperator, RejectsNegativeDensity) {
  ScalarField rho(make_grid(4), 1.0);
  rho[0] = -1.0;
  EXPECT_THROW(make_operator(rho, kMat), std::invalid_argument);
}

}  // namespace
