#include "helpers.hpp"

#include "ssn/problems.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace ssn;

namespace {

Wind zero_wind() {
  return [](double, double) { return std::pair<double, double>{0.0, 0.0}; };
}

}  // namespace

TEST(GridSpec, SizesFromLevel) {
  EXPECT_EQ(GridSpec::from_level(2, 2).size(), 16);
  EXPECT_EQ(GridSpec::from_level(2, 7).size(), 16384);
  EXPECT_EQ(GridSpec::from_level(3, 4).size(), 4096);
  EXPECT_DOUBLE_EQ(GridSpec::from_level(2, 2).h(), 0.2);
}

TEST(GridSpec, LexicographicCoordinates) {
  const GridSpec g = GridSpec::from_points(2, 3);
  const auto c0 = g.node_coords(0), c1 = g.node_coords(1), c3 = g.node_coords(3);
  EXPECT_DOUBLE_EQ(c0[0], 0.25);
  EXPECT_DOUBLE_EQ(c0[1], 0.25);
  EXPECT_DOUBLE_EQ(c1[0], 0.5);  // x runs fastest
  EXPECT_DOUBLE_EQ(c1[1], 0.25);
  EXPECT_DOUBLE_EQ(c3[0], 0.25);
  EXPECT_DOUBLE_EQ(c3[1], 0.5);
}

TEST(Poisson, StencilLevelTwo) {
  const ProblemInstance p = make_poisson(GridSpec::from_level(2, 2), 1e-2, 1e-4);
  ASSERT_EQ(p.n(), 16);
  const double ih2 = 1.0 / (0.2 * 0.2);
  // node 5 = (1,1) is an interior node with four neighbours
  EXPECT_NEAR(p.L.coeff(5, 5), 4.0 * ih2, 1e-10);
  for (Index j : {1, 4, 6, 9}) EXPECT_NEAR(p.L.coeff(5, j), -ih2, 1e-10);
  EXPECT_EQ(p.L.coeff(5, 0), 0.0);
  // corner row keeps only two neighbours
  EXPECT_NEAR(p.L.coeff(0, 0), 4.0 * ih2, 1e-10);
  EXPECT_NEAR(p.L.coeff(0, 1), -ih2, 1e-10);
  EXPECT_NEAR(p.L.coeff(0, 4), -ih2, 1e-10);
}

TEST(Poisson, DataAndScalars) {
  const ProblemInstance p = make_poisson(GridSpec::from_level(2, 3), 1e-4, 1e-3);
  EXPECT_EQ((p.M.to_dense() - DenseMatrix::Identity(64, 64)).norm(), 0.0);
  EXPECT_EQ((p.Mbar.to_dense() - DenseMatrix::Identity(64, 64)).norm(), 0.0);
  EXPECT_EQ(p.f.norm(), 0.0);
  EXPECT_TRUE((p.a.array() == -30.0).all());
  EXPECT_TRUE((p.b.array() == 30.0).all());
  EXPECT_DOUBLE_EQ(p.c, 1e4);
  EXPECT_NO_THROW(p.validate());
}

TEST(Poisson, LargeSizes) {
  EXPECT_EQ(make_poisson(GridSpec::from_level(2, 7), 1e-2, 1e-4).n(), 16384);
  const ProblemInstance p3 = make_poisson(GridSpec::from_level(3, 4), 1e-2, 1e-4);
  EXPECT_EQ(p3.n(), 4096);
  EXPECT_NEAR(p3.L.coeff(0, 0), 6.0 * 17.0 * 17.0, 1e-9);
}

TEST(Poisson, LaplacianIsSpd) {
  for (int dim : {2, 3}) {
    for (int level = 1; level <= (dim == 2 ? 4 : 2); ++level) {
      const DenseMatrix L = fd_laplacian(GridSpec::from_level(dim, level)).to_dense();
      EXPECT_EQ((L - L.transpose()).norm(), 0.0);
      Eigen::SelfAdjointEigenSolver<DenseMatrix> es(L);
      EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << "dim " << dim << " level " << level;
    }
  }
}

TEST(DesiredState, FormulaValues) {
  EXPECT_NEAR(desired_state_at(0.25, 0.25), std::exp(0.5) / 6.0, 1e-15);
  EXPECT_NEAR(desired_state_at(0.25, 0.25), 0.274787, 1e-6);
  EXPECT_NEAR(desired_state_at(0.25, 0.25, 0.25), 0.274787, 1e-6);
  EXPECT_NEAR(desired_state_at(0.5, 0.25), 0.0, 1e-15);
  // independent evaluation at an arbitrary point
  const double x = 0.3, y = 0.7, z = 0.1;
  const double pi = std::numbers::pi;
  EXPECT_NEAR(desired_state_at(x, y, z),
              std::sin(2 * pi * x) * std::sin(2 * pi * y) * std::exp(2 * x) / 6 * std::sin(2 * pi * z),
              1e-15);
}

TEST(DesiredState, SampledAtNodes) {
  const GridSpec g = GridSpec::from_points(2, 3);
  const Vector yd = desired_state(g);
  ASSERT_EQ(yd.size(), 9);
  EXPECT_NEAR(yd[0], 0.274787, 1e-6);  // node (0.25, 0.25)
  EXPECT_NEAR(yd[4], 0.0, 1e-15);      // node (0.5, 0.5)
  const Vector yd3 = desired_state(GridSpec::from_points(3, 3));
  EXPECT_NEAR(yd3[0], 0.274787, 1e-6);
}

TEST(ConvectionDiffusion, ZeroWindDegeneratesToScaledPoisson) {
  CDConfig cd;
  cd.epsilon = 1.0;
  cd.wind = zero_wind();
  cd.delta = 0.0;
  const GridSpec g = GridSpec::from_points(2, 6);
  const ProblemInstance p = make_convection_diffusion(g, cd, 1e-2, 1e-2);
  const DenseMatrix DenseML = p.L.to_dense();
  EXPECT_LE(asymmetry(p.L), 0.0);
  EXPECT_EQ((p.Mbar.to_dense() - p.M.to_dense()).norm(), 0.0);
  const double h2 = g.h() * g.h();
  EXPECT_LE((DenseML - h2 * fd_laplacian(g).to_dense()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((p.M.to_dense() - h2 * DenseMatrix::Identity(36, 36)).norm(), 1e-15);
}

TEST(ConvectionDiffusion, EpsilonScalesDiffusion) {
  CDConfig cd;
  cd.epsilon = 0.1;
  cd.wind = zero_wind();
  cd.delta = 0.0;
  const GridSpec g = GridSpec::from_points(2, 5);
  const ProblemInstance p = make_convection_diffusion(g, cd, 1e-2, 1e-2);
  const double h2 = g.h() * g.h();
  EXPECT_LE((p.L.to_dense() - 0.1 * h2 * fd_laplacian(g).to_dense()).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(ConvectionDiffusion, DefaultWindIsNonsymmetric) {
  CDConfig cd;
  cd.epsilon = 0.1;
  const ProblemInstance p = make_convection_diffusion(GridSpec::from_points(2, 65), cd, 1e-3, 1e-2);
  EXPECT_EQ(p.n(), 4225);
  EXPECT_GT(asymmetry(p.L), 0.0);
  EXPECT_GT(asymmetry(p.Mbar), 0.0);
  EXPECT_GT((p.Mbar.to_dense() - p.M.to_dense()).norm(), 0.0);
  EXPECT_EQ(p.f.norm(), 0.0);
  EXPECT_TRUE((p.a.array() == -20.0).all());
  EXPECT_NO_THROW(p.validate());
}

TEST(ConvectionDiffusion, UpwindKeepsMMatrixSigns) {
  CDConfig cd;
  cd.epsilon = 0.01;
  const ProblemInstance p = make_convection_diffusion(GridSpec::from_points(2, 8), cd, 1.0, 1.0);
  const DenseMatrix L = p.L.to_dense();
  for (Index i = 0; i < L.rows(); ++i) {
    double off = 0.0;
    for (Index j = 0; j < L.cols(); ++j) {
      if (i == j) continue;
      EXPECT_LE(L(i, j), 0.0);
      off += std::abs(L(i, j));
    }
    EXPECT_GE(L(i, i), off - 1e-14);
  }
}

TEST(ProblemInstance, ValidateRejectsBadData) {
  ProblemInstance p = make_poisson(GridSpec::from_level(2, 2), 1e-2, 1e-4);
  ProblemInstance q = p;
  q.alpha = 0.0;
  EXPECT_THROW(q.validate(), ContractViolation);
  q = p;
  q.a[3] = 1.0;
  EXPECT_THROW(q.validate(), ContractViolation);
  q = p;
  q.y_d = Vector::Zero(3);
  EXPECT_THROW(q.validate(), ContractViolation);
  q = p;
  q.beta = -1.0;
  EXPECT_THROW(q.validate(), ContractViolation);
}

TEST(ProblemInstance, WithAlphaResetsScaling) {
  const ProblemInstance p = make_poisson(GridSpec::from_level(2, 2), 1e-2, 1e-4).with_alpha(1e-5);
  EXPECT_DOUBLE_EQ(p.alpha, 1e-5);
  EXPECT_DOUBLE_EQ(p.c, 1e5);
}

TEST(ExportImport, RoundTripPreservesSolves) {
  CDConfig cd;
  cd.epsilon = 0.1;
  const ProblemInstance p = make_convection_diffusion(GridSpec::from_points(2, 7), cd, 1e-3, 1e-2);
  const auto dir = std::filesystem::temp_directory_path() / "ssn_test_export";
  std::filesystem::remove_all(dir);
  export_problem(p, dir);
  const ProblemInstance q = import_problem(dir);
  EXPECT_EQ(q.n(), p.n());
  EXPECT_DOUBLE_EQ(q.alpha, p.alpha);
  EXPECT_DOUBLE_EQ(q.beta, p.beta);
  EXPECT_DOUBLE_EQ(q.c, p.c);
  EXPECT_EQ((q.L.to_dense() - p.L.to_dense()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((q.Mbar.to_dense() - p.Mbar.to_dense()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(q.y_d, p.y_d);
  EXPECT_EQ(q.a, p.a);
  const Vector rhs = p.y_d;
  const Vector x1 = factorize(p.L, FactorKind::lu).solve(rhs);
  const Vector x2 = factorize(q.L, FactorKind::lu).solve(rhs);
  EXPECT_EQ(x1, x2);
}

TEST(ExportImport, MissingDirectoryIsIoError) {
  EXPECT_THROW(import_problem("/nonexistent/ssn/problem"), IoError);
}
