#include "jfft/fem.hpp"
#include "jfft/material.hpp"
#include "oracle/dense_oracle.hpp"

#include <gtest/gtest.h>

namespace {

using namespace jfft;

void expect_matrix_near(const MandelMatrix& got, const MandelMatrix& want, double tol) {
  for (std::size_t r = 0; r < kMandelDim; ++r)
    for (std::size_t c = 0; c < kMandelDim; ++c) EXPECT_NEAR(got[r][c], want[r][c], tol) << r << "," << c;
}

// C_ijkl = lambda d_ij d_kl + mu (d_ik d_jl + d_il d_jk), contracted through the Mandel basis
MandelMatrix mandel_from_index_formula(double lambda, double mu) {
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  auto C = [&](int i, int j, int k, int l) {
    return lambda * delta(i, j) * delta(k, l) + mu * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
  };
  // Mandel basis tensors: e11, e22, (e12 + e21)/sqrt2
  const std::array<std::array<std::array<double, 2>, 2>, 3> basis = {{
      {{{1, 0}, {0, 0}}},
      {{{0, 0}, {0, 1}}},
      {{{0, 1 / std::sqrt(2.0)}, {1 / std::sqrt(2.0), 0}}},
  }};
  MandelMatrix m{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) s += basis[r][i][j] * C(i, j, k, l) * basis[c][k][l];
      m[r][c] = s;
    }
  return m;
}

TEST(ElasticMandel, ReferenceParameters) {
  const auto m = elastic_mandel(2.0 / 3.0, 0.5);
  const MandelMatrix want = {{{5.0 / 3.0, 2.0 / 3.0, 0.0}, {2.0 / 3.0, 5.0 / 3.0, 0.0}, {0.0, 0.0, 1.0}}};
  expect_matrix_near(m.C0, want, 1e-15);
  expect_matrix_near(m.C0, mandel_from_index_formula(2.0 / 3.0, 0.5), 1e-15);
}

TEST(ElasticMandel, ZeroLambdaDecouples) {
  const MandelMatrix id = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  expect_matrix_near(elastic_mandel(0.0, 0.5).C0, id, 0.0);
}

TEST(ElasticMandel, BulkModulusOfReferenceParametersIsOne) {
  const double lambda = 2.0 / 3.0, mu = 0.5;
  EXPECT_NEAR(lambda + 2.0 * mu / 3.0, 1.0, 1e-15);
}

TEST(ElasticMandel, RejectsIndefiniteParameters) {
  EXPECT_THROW(elastic_mandel(1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(elastic_mandel(-1.0, 0.5), std::invalid_argument);
  EXPECT_NO_THROW(elastic_mandel(-0.4, 0.5));
}

TEST(Stress, UniformDensityUnitStrain) {
  const Grid g = make_grid(3);
  const auto mat = elastic_mandel(2.0 / 3.0, 0.5);
  QuadField e(g);
  for (std::size_t q = 0; q < g.quad_points(); ++q) e.set(q, {1, 1, 1});
  const QuadField s = stress(ScalarField(g, 1.0), mat, e);
  for (std::size_t q = 0; q < g.quad_points(); ++q) {
    const Mandel v = s.at(q);
    EXPECT_NEAR(v[0], 7.0 / 3.0, 1e-15);
    EXPECT_NEAR(v[1], 7.0 / 3.0, 1e-15);
    EXPECT_NEAR(v[2], 1.0, 1e-15);
  }
  for (double v : stress(ScalarField(g, 0.0), mat, e).values) EXPECT_EQ(v, 0.0);
}

TEST(Stress, LinearInStrainAndRejectsNegativeDensity) {
  const Grid g = make_grid(4);
  const auto mat = elastic_mandel(2.0 / 3.0, 0.5);
  std::mt19937_64 rng(2);
  ScalarField rho(g);
  rho.values = oracle::random_vector(rho.size(), rng, 0.0, 2.0);
  QuadField e(g);
  e.values = oracle::random_vector(e.size(), rng);
  QuadField e3 = e;
  for (double& v : e3.values) v *= 3.0;
  const auto s = stress(rho, mat, e), s3 = stress(rho, mat, e3);
  for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(s3.values[k], 3.0 * s.values[k], 1e-14);

  rho[2] = -0.1;
  EXPECT_THROW(stress(rho, mat, e), std::invalid_argument);
}

TEST(Tangent, ScaledStiffnessAndFiniteDifferences) {
  const Grid g = make_grid(2);
  const auto mat = elastic_mandel(2.0 / 3.0, 0.5);
  ScalarField rho(g, 0.5);
  rho[3] = 1.0;
  const auto t = tangent(rho, mat);
  MandelMatrix half = mat.C0;
  for (auto& row : half)
    for (double& v : row) v *= 0.5;
  expect_matrix_near(t[0], half, 0.0);
  expect_matrix_near(t[3], mat.C0, 0.0);

  // directional derivative of the stress by central differences
  QuadField e(g), de(g);
  std::mt19937_64 rng(4);
  e.values = oracle::random_vector(e.size(), rng);
  de.values = oracle::random_vector(de.size(), rng);
  const double h = 1e-3;
  QuadField ep = e, em = e;
  for (std::size_t k = 0; k < e.size(); ++k) {
    ep.values[k] += h * de.values[k];
    em.values[k] -= h * de.values[k];
  }
  const auto sp = stress(rho, mat, ep), sm = stress(rho, mat, em);
  for (std::size_t q = 0; q < g.quad_points(); ++q) {
    const Mandel fd_dir = matvec(t[g.pixel_of_quad(q)], de.at(q));
    for (std::size_t c = 0; c < kMandelDim; ++c) {
      const double fd = (sp.at(q)[c] - sm.at(q)[c]) / (2 * h);
      EXPECT_NEAR(fd, fd_dir[c], 1e-10);
    }
  }
}

TEST(Material, EnergyIsPositiveForNonzeroStrain) {
  const auto mat = elastic_mandel(2.0 / 3.0, 0.5);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = oracle::random_vector(3, rng);
    const Mandel e{v[0], v[1], v[2]};
    EXPECT_GT(dot(e, matvec(mat.C0, e)), 0.0);
  }
  EXPECT_EQ(dot(Mandel{}, matvec(mat.C0, Mandel{})), 0.0);
}

}  // namespace
