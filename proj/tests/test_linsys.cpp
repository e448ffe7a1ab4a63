#include "helpers.hpp"

#include "ssn/krylov.hpp"
#include "ssn/linsys.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

using namespace ssn;
using testutil::dense_full_jacobian;
using testutil::random_problem;
using testutil::random_vector;

namespace {

struct Instance {
  ProblemInstance prob;
  IterateState x;
  ActiveSetPartition part;
};

// A random instance whose partition has every set populated when n is large enough.
Instance make_instance(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  Instance in{random_problem(n, rng), IterateState{}, {}};
  in.x = IterateState(random_vector(n, rng, -2, 2), random_vector(n, rng, -1.5, 1.5),
                      random_vector(n, rng, -2, 2), random_vector(n, rng, -0.6, 0.6));
  in.part = classify(in.x.u(), in.x.mu(), in.prob);
  return in;
}

Vector dense_full_solution(const Instance& in) {
  const DenseMatrix J = dense_full_jacobian(in.prob, in.part);
  IterateState x = in.x;
  const Vector rhs = -testutil::theta_minmax(x, in.prob);
  return J.fullPivLu().solve(rhs);
}

Vector dense_solve(const SaddleSystem& s) {
  return s.assemble_matrix().to_dense().fullPivLu().solve(s.rhs());
}

double rel(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace

TEST(Full, ApplyZeroIsZero) {
  const Instance in = make_instance(6, 1);
  const SaddleSystem s = assemble_full(in.x, in.part, in.prob);
  EXPECT_EQ(s.apply(Vector::Zero(24)).norm(), 0.0);
}

TEST(Full, MatchesDenseJacobian) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const Instance in = make_instance(4, seed);
    const SaddleSystem s = assemble_full(in.x, in.part, in.prob);
    const DenseMatrix J = dense_full_jacobian(in.prob, in.part);
    std::mt19937 rng(seed + 100);
    const Vector v = random_vector(16, rng);
    EXPECT_LE((s.apply(v) - J * v).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LE((s.assemble_matrix().to_dense() - J).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Full, RhsIsMinusTheta) {
  const Instance in = make_instance(8, 2);
  IterateState x = in.x;
  const SaddleSystem s = assemble_full(in.x, in.part, in.prob);
  EXPECT_LE((s.rhs() + residual_Theta(x, in.prob).stacked()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Full, AllActiveLastRowIsMassTimesDu) {
  Instance in = make_instance(5, 3);
  in.part = ActiveSetPartition::from_labels(std::vector<SetLabel>(5, SetLabel::A0));
  const SaddleSystem s = assemble_full(in.x, in.part, in.prob);
  std::mt19937 rng(4);
  const Vector v = random_vector(20, rng);
  EXPECT_LE((s.apply(v).tail(5) - in.prob.mass().cwiseProduct(v.segment(5, 5))).norm(), 1e-15);
}

TEST(Augmented, Symmetric) {
  const Instance in = make_instance(30, 5);
  const SaddleSystem s = assemble_augmented(in.x, in.part, in.prob);
  std::mt19937 rng(6);
  for (int t = 0; t < 5; ++t) {
    const Vector v = random_vector(s.size(), rng), w = random_vector(s.size(), rng);
    const double lhs = s.apply(v).dot(w), rhs = v.dot(s.apply(w));
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(std::abs(lhs), 1.0));
  }
  const DenseMatrix A = s.assemble_matrix().to_dense();
  EXPECT_LE((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Augmented, SizeTracksActiveSet) {
  Instance in = make_instance(7, 7);
  in.part = ActiveSetPartition::from_labels(std::vector<SetLabel>(7, SetLabel::Iplus));
  EXPECT_EQ(assemble_augmented(in.x, in.part, in.prob).size(), 21);
  in.part = classify(in.x.u(), in.x.mu(), in.prob);
  EXPECT_EQ(assemble_augmented(in.x, in.part, in.prob).size(), 21 + in.part.n_active());
}

TEST(Augmented, SolveLiftsToFullSolution) {
  for (unsigned seed = 10; seed < 20; ++seed) {
    const Instance in = make_instance(5, seed);
    const SaddleSystem s = assemble_augmented(in.x, in.part, in.prob);
    const StepVector step = s.lift(dense_solve(s));
    EXPECT_LE(rel(step.stacked(), dense_full_solution(in)), 1e-10) << "seed " << seed;
  }
}

TEST(Augmented, InactiveMultipliersLandOnBeta) {
  const Instance in = make_instance(12, 21);
  ASSERT_GT(in.part.n_inactive(), 0);
  const SaddleSystem s = assemble_augmented(in.x, in.part, in.prob);
  const StepVector step = s.lift(dense_solve(s));
  for (Index i : in.part.Iplus) EXPECT_NEAR(in.x.mu()[i] + step.dmu[i], in.prob.beta, 1e-14);
  for (Index i : in.part.Iminus) EXPECT_NEAR(in.x.mu()[i] + step.dmu[i], -in.prob.beta, 1e-14);
}

TEST(Reduced, SizeIsTwoN) {
  const Instance in = make_instance(9, 22);
  EXPECT_EQ(assemble_reduced(in.x, in.part, in.prob).size(), 18);
}

TEST(Reduced, SymmetricAndLinear) {
  const Instance in = make_instance(25, 23);
  const SaddleSystem s = assemble_reduced(in.x, in.part, in.prob);
  std::mt19937 rng(24);
  const Vector v = random_vector(50, rng), w = random_vector(50, rng);
  const double lhs = s.apply(v).dot(w), rhs = v.dot(s.apply(w));
  EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(std::abs(lhs), 1.0));
  const double a = 0.7, b = -2.3;
  const Vector lin = s.apply(a * v + b * w), sep = a * s.apply(v) + b * s.apply(w);
  EXPECT_LE((lin - sep).norm(), 1e-13 * std::max(1.0, sep.norm()));
}

TEST(Reduced, SchurBlockVanishesWhenAllActive) {
  Instance in = make_instance(6, 25);
  in.part = ActiveSetPartition::from_labels(std::vector<SetLabel>(6, SetLabel::A0));
  const SaddleSystem s = assemble_reduced(in.x, in.part, in.prob);
  Vector v = Vector::Zero(12);
  std::mt19937 rng(26);
  v.tail(6) = random_vector(6, rng);
  const Vector out = s.apply(v);
  // lower-right block contributes nothing; only L^T dp appears in the top rows
  EXPECT_LE(out.tail(6).norm(), 0.0);
  EXPECT_LE((out.head(6) - matvec_transpose(in.prob.L, v.tail(6))).norm(), 1e-14);
}

TEST(Reduced, MatchesDenseBlockDefinition) {
  const Instance in = make_instance(6, 27);
  const SaddleSystem s = assemble_reduced(in.x, in.part, in.prob);
  const Index n = 6;
  const DenseMatrix M = in.prob.M.to_dense(), L = in.prob.L.to_dense(), Mb = in.prob.Mbar.to_dense();
  DenseMatrix PiI = DenseMatrix::Zero(n, n);
  for (Index i : in.part.I) PiI(i, i) = 1.0;
  DenseMatrix J(2 * n, 2 * n);
  J << M, L.transpose(), L, -(1.0 / in.prob.alpha) * Mb * M.inverse() * PiI * Mb.transpose();
  EXPECT_LE((s.assemble_matrix().to_dense() - J).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Reduced, RecoveredStepMatchesAugmentedAndFull) {
  for (unsigned seed = 30; seed < 40; ++seed) {
    const Instance in = make_instance(5, seed);
    const SaddleSystem red = assemble_reduced(in.x, in.part, in.prob);
    const SaddleSystem aug = assemble_augmented(in.x, in.part, in.prob);
    const Vector z = dense_solve(red);
    const StepVector from_red = recover_step(z.head(5), z.tail(5), red);
    const StepVector from_aug = aug.lift(dense_solve(aug));
    EXPECT_LE(rel(from_red.stacked(), from_aug.stacked()), 1e-9) << "seed " << seed;
    EXPECT_LE(rel(from_red.stacked(), dense_full_solution(in)), 1e-9) << "seed " << seed;
  }
}

TEST(Reduced, EquivalenceChainOnLargerInstances) {
  for (Index n : {16, 40, 64}) {
    const Instance in = make_instance(n, static_cast<unsigned>(n));
    const Vector full = dense_full_solution(in);
    const SaddleSystem red = assemble_reduced(in.x, in.part, in.prob);
    const SaddleSystem aug = assemble_augmented(in.x, in.part, in.prob);
    EXPECT_LE(rel(red.lift(dense_solve(red)).stacked(), full), 1e-9);
    EXPECT_LE(rel(aug.lift(dense_solve(aug)).stacked(), full), 1e-9);
  }
}

TEST(RecoverStep, TrivialInputsGiveZeroControlStep) {
  // zero residual blocks and no active indices
  const ProblemInstance p = make_poisson(GridSpec::from_level(2, 2), 1e-2, 1e-4);
  Vector mu = Vector::Constant(16, p.beta);
  IterateState x(Vector::Zero(16), Vector::Zero(16), Vector::Zero(16), mu);
  ActiveSetPartition part = ActiveSetPartition::from_labels(std::vector<SetLabel>(16, SetLabel::Iplus));
  ProblemInstance q = p;
  q.y_d.setZero();
  // Theta^u = M mu = beta M 1, so cancel it with a matching Mbar^T p = beta
  x.set_p(Vector::Constant(16, p.beta));
  const SaddleSystem s = assemble_reduced(x, part, q);
  const StepVector step = recover_step(Vector::Zero(16), Vector::Zero(16), s);
  EXPECT_LE(step.du.norm(), 1e-15);
  EXPECT_LE(step.dmu.norm(), 1e-15);
}

TEST(RecoverStep, SatisfiesFullRows) {
  for (unsigned seed = 40; seed < 45; ++seed) {
    const Instance in = make_instance(5, seed);
    const SaddleSystem red = assemble_reduced(in.x, in.part, in.prob);
    const SaddleSystem full = assemble_full(in.x, in.part, in.prob);
    const Vector z = dense_solve(red);
    const StepVector step = recover_step(z.head(5), z.tail(5), red);
    EXPECT_LE(full.residual(step.stacked()).norm(), 1e-9 * std::max(1.0, full.rhs().norm()));
  }
}

TEST(RecoverStep, ActiveMultiplierMatchesDenseElimination) {
  const Instance in = make_instance(8, 46);
  ASSERT_GT(in.part.n_active(), 0);
  const SaddleSystem red = assemble_reduced(in.x, in.part, in.prob);
  const Vector z = dense_solve(red);
  const StepVector step = recover_step(z.head(8), z.tail(8), red);
  const StepVector oracle = StepVector::from_stacked(dense_full_solution(in));
  for (Index i : in.part.A) EXPECT_NEAR(step.dmu[i], oracle.dmu[i], 1e-9 * std::max(1.0, oracle.dmu.norm()));
}

TEST(RecoverStep, RequiresReducedSystem) {
  const Instance in = make_instance(4, 47);
  const SaddleSystem aug = assemble_augmented(in.x, in.part, in.prob);
  EXPECT_THROW(recover_step(Vector::Zero(4), Vector::Zero(4), aug), ContractViolation);
}

TEST(ResidualEquivalence, ExactSolveGivesZeroes) {
  const Instance in = make_instance(10, 48);
  const SaddleSystem red = assemble_reduced(in.x, in.part, in.prob);
  const SaddleSystem full = assemble_full(in.x, in.part, in.prob);
  const auto [r_red, r_full] = residual_equivalence_check(full, red, dense_solve(red));
  const double scale = std::max(1.0, red.rhs().norm());
  EXPECT_LE(r_red, 1e-10 * scale);
  EXPECT_LE(r_full, 1e-10 * scale);
}

TEST(ResidualEquivalence, TruncatedKrylovSolves) {
  const Instance in = make_instance(20, 49);
  const SaddleSystem red = assemble_reduced(in.x, in.part, in.prob);
  const SaddleSystem full = assemble_full(in.x, in.part, in.prob);
  for (int iters : {1, 3, 5, 8, 12}) {
    const auto [z, stats] = gmres(red.op(), identity_op(), red.rhs(), 1e-14, iters);
    const auto [r_red, r_full] = residual_equivalence_check(full, red, z);
    EXPECT_NEAR(r_red, r_full, 1e-11 * r_red + 1e-14 * red.rhs().norm()) << iters << " iterations";
  }
}

TEST(ResidualEquivalence, RandomPerturbations) {
  const Instance in = make_instance(15, 50);
  const SaddleSystem red = assemble_reduced(in.x, in.part, in.prob);
  const SaddleSystem full = assemble_full(in.x, in.part, in.prob);
  const Vector z = dense_solve(red);
  std::mt19937 rng(51);
  for (int t = 0; t < 10; ++t) {
    Vector pert = z;
    const double scale = std::pow(10.0, -static_cast<double>(t));
    pert.head(15) += scale * random_vector(15, rng);  // dy only
    if (t % 2) pert.tail(15) += scale * random_vector(15, rng);
    const auto [r_red, r_full] = residual_equivalence_check(full, red, pert);
    // relative agreement, down to the rounding floor of forming J v - b
    const double floor = 1e-14 * red.rhs().norm();
    EXPECT_NEAR(r_red, r_full, 1e-11 * r_red + floor) << "scale " << scale;
  }
}

TEST(DumpSystem, WritesMatrixMarketFiles) {
  const Instance in = make_instance(5, 52);
  const SaddleSystem aug = assemble_augmented(in.x, in.part, in.prob);
  const auto dir = std::filesystem::temp_directory_path() / "ssn_test_dump";
  std::filesystem::create_directories(dir);
  dump_system(aug, dir / "J.mtx", dir / "b.mtx");
  EXPECT_TRUE(std::filesystem::exists(dir / "J.mtx"));
  const ProblemInstance big = make_poisson(GridSpec::from_points(2, 11), 1.0, 1.0);
  IterateState x = IterateState::zeros(big.n());
  const SaddleSystem s = assemble_reduced(x, classify(x.u(), x.mu(), big), big);
  EXPECT_THROW(dump_system(s, dir / "J2.mtx", dir / "b2.mtx"), ContractViolation);
}
