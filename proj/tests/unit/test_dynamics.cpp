#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hrigame/dynamics.hpp"
#include "hrigame/errors.hpp"
#include "test_support.hpp"

namespace hrigame {
namespace {

using testing::vec;

TEST(BuildStateSpace, DeskPlant) {
  const StateSpace ss = build_state_space(ImpedanceParams::diagonal(1, 10.0, 25.0, 0.0));
  Eigen::Matrix2d a_expected;
  a_expected << 0.0, 1.0, 0.0, -2.5;
  EXPECT_TRUE(ss.a.isApprox(a_expected, 1e-15));
  EXPECT_DOUBLE_EQ(ss.b_h(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(ss.b_h(1, 0), 0.1);
  EXPECT_TRUE(same_matrix(ss.b_h, ss.b_r));
  EXPECT_EQ(ss.b().cols(), 2);
}

TEST(BuildStateSpace, FreeUnitMass) {
  const StateSpace ss = build_state_space(ImpedanceParams::diagonal(1, 1.0, 0.0, 0.0));
  Eigen::Matrix2d a_expected;
  a_expected << 0.0, 1.0, 0.0, 0.0;
  EXPECT_TRUE(same_matrix(ss.a, a_expected));
  EXPECT_TRUE(same_matrix(ss.b_h, vec({0.0, 1.0})));
}

TEST(BuildStateSpace, RejectsSingularInertia) {
  ImpedanceParams params = ImpedanceParams::diagonal(2, 1.0, 1.0, 0.0);
  params.inertia.setZero();
  EXPECT_THROW(build_state_space(params), SingularInertiaError);

  params.inertia << 1.0, 1.0, 1.0, 1.0;
  EXPECT_THROW(build_state_space(params), SingularInertiaError);
}

TEST(BuildStateSpace, RejectsShapeMismatch) {
  ImpedanceParams params = ImpedanceParams::diagonal(2, 1.0, 1.0, 0.0);
  params.damping = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(build_state_space(params), ValidationError);
}

TEST(ImpedanceParams, ValidateChecksDefinitenessAndDamping) {
  EXPECT_NO_THROW(ImpedanceParams::diagonal(3, 2.0, 1.0, 0.0).validate());
  ImpedanceParams negative_mass = ImpedanceParams::diagonal(1, -1.0, 1.0, 0.0);
  EXPECT_THROW(negative_mass.validate(), SingularInertiaError);
  ImpedanceParams negative_damping = ImpedanceParams::diagonal(1, 1.0, -1.0, 0.0);
  EXPECT_THROW(negative_damping.validate(), ValidationError);
}

TEST(BuildStateSpace, RecoversImpedanceRoundTrip) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    ImpedanceParams p;
    p.inertia = testing::random_pd(rng, n, 0.5);
    p.damping = testing::random_matrix(rng, n, n);
    p.stiffness = testing::random_matrix(rng, n, n);
    const StateSpace ss = build_state_space(p);
    EXPECT_TRUE(same_matrix(ss.a.topLeftCorner(n, n), Eigen::MatrixXd::Zero(n, n)));
    EXPECT_TRUE(same_matrix(ss.a.topRightCorner(n, n), Eigen::MatrixXd::Identity(n, n)));
    const Eigen::MatrixXd k = -p.inertia * ss.a.bottomLeftCorner(n, n);
    const Eigen::MatrixXd d = -p.inertia * ss.a.bottomRightCorner(n, n);
    EXPECT_LE(testing::max_abs(k - p.stiffness), 1e-12 * (1.0 + testing::max_abs(p.stiffness)));
    EXPECT_LE(testing::max_abs(d - p.damping), 1e-12 * (1.0 + testing::max_abs(p.damping)));
  }
}

TEST(Step, ZeroDynamicsLeavesStateUnchanged) {
  StateSpace ss{Eigen::MatrixXd::Zero(4, 4), Eigen::MatrixXd::Zero(4, 2),
                Eigen::MatrixXd::Zero(4, 2)};
  const State z{vec({0.3, -1.2}), vec({4.0, 0.5})};
  const State next = step(ss, z, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), 0.37);
  EXPECT_EQ(next, z);
}

TEST(Step, FreeMassMatchesDoubleIntegrator) {
  const StateSpace ss = build_state_space(ImpedanceParams::diagonal(1, 1.0, 0.0, 0.0));
  const State next = step(ss, State::zero(1), vec({1.0}), vec({0.0}), 0.1);
  EXPECT_NEAR(next.pos(0), 0.005, 1e-9);
  EXPECT_NEAR(next.vel(0), 0.1, 1e-9);
}

TEST(Step, DampedPlantDecaysExponentially) {
  const StateSpace ss = build_state_space(ImpedanceParams::diagonal(1, 10.0, 25.0, 0.0));
  State z{vec({0.0}), vec({1.0})};
  for (int i = 0; i < 1000; ++i) z = step(ss, z, vec({0.0}), vec({0.0}), 1e-3);
  EXPECT_NEAR(z.vel(0), std::exp(-2.5), 1e-6);
  EXPECT_NEAR(z.pos(0), (1.0 - std::exp(-2.5)) / 2.5, 1e-6);
}

// A constant-input free mass is integrated exactly by RK4, so the order check runs on the
// damped plant, whose exact solution is an exponential.
TEST(Step, FourthOrderConvergence) {
  const StateSpace ss = build_state_space(ImpedanceParams::diagonal(1, 10.0, 25.0, 0.0));
  const auto error_at = [&](int steps) {
    const double dt = 1.0 / steps;
    State z{vec({0.0}), vec({1.0})};
    for (int i = 0; i < steps; ++i) z = step(ss, z, vec({0.0}), vec({0.0}), dt);
    return std::abs(z.vel(0) - std::exp(-2.5)) + std::abs(z.pos(0) - (1.0 - std::exp(-2.5)) / 2.5);
  };
  for (int steps : {10, 20, 40}) {
    EXPECT_GE(error_at(steps) / error_at(2 * steps), 12.0) << "steps " << steps;
  }
}

TEST(Step, IsLinear) {
  std::mt19937_64 rng(3);
  ImpedanceParams p = ImpedanceParams::diagonal(2, 3.0, 2.0, 5.0);
  const StateSpace ss = build_state_space(p);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd z1 = testing::random_matrix(rng, 4, 1);
    const Eigen::VectorXd z2 = testing::random_matrix(rng, 4, 1);
    const Eigen::VectorXd uh1 = testing::random_matrix(rng, 2, 1);
    const Eigen::VectorXd uh2 = testing::random_matrix(rng, 2, 1);
    const Eigen::VectorXd ur1 = testing::random_matrix(rng, 2, 1);
    const Eigen::VectorXd ur2 = testing::random_matrix(rng, 2, 1);
    const double dt = 0.01;
    const Eigen::VectorXd sum =
        step(ss, State::from_vector(z1 + z2), uh1 + uh2, ur1 + ur2, dt).vector();
    const Eigen::VectorXd parts = step(ss, State::from_vector(z1), uh1, ur1, dt).vector() +
                                  step(ss, State::from_vector(z2), uh2, ur2, dt).vector();
    EXPECT_LE(testing::max_abs(sum - parts), 1e-12);
  }
}

TEST(Step, FeedbackLawMatchesClosedLoopMatrix) {
  std::mt19937_64 rng(9);
  const StateSpace ss = build_state_space(ImpedanceParams::diagonal(2, 3.0, 2.0, 1.0));
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd k_h = testing::random_matrix(rng, 2, 4);
    const Eigen::MatrixXd k_r = testing::random_matrix(rng, 2, 4);
    const Eigen::VectorXd ref_h = testing::random_matrix(rng, 4, 1);
    const Eigen::VectorXd ref_r = testing::random_matrix(rng, 4, 1);
    const State z = State::from_vector(testing::random_matrix(rng, 4, 1));
    const State stepped =
        step(ss, z, InputLaw::feedback(k_h, ref_h), InputLaw::feedback(k_r, ref_r), 0.01);
    // Same ODE written as a closed-loop plant driven by constant offsets.
    const StateSpace closed{ss.a - ss.b_h * k_h - ss.b_r * k_r, ss.b_h, ss.b_r};
    const State reference = step(closed, z, k_h * ref_h, k_r * ref_r, 0.01);
    EXPECT_LE(testing::max_abs(stepped.vector() - reference.vector()), 1e-13);
  }
}

TEST(Step, HeldLawEqualsConstantInputs) {
  const StateSpace ss = build_state_space(ImpedanceParams::diagonal(1, 10.0, 25.0, 0.0));
  const State z{vec({0.2}), vec({-0.4})};
  EXPECT_EQ(step(ss, z, InputLaw::held(vec({1.5})), InputLaw::held(vec({-0.5})), 1e-3),
            step(ss, z, vec({1.5}), vec({-0.5}), 1e-3));
}

TEST(Step, RejectsMismatchedFeedbackLaw) {
  const StateSpace ss = build_state_space(ImpedanceParams::diagonal(1, 1.0, 0.0, 0.0));
  const InputLaw wide = InputLaw::feedback(Eigen::MatrixXd::Ones(1, 4), Eigen::VectorXd::Zero(4));
  EXPECT_THROW(step(ss, State::zero(1), wide, InputLaw::held(vec({0.0})), 0.1), ValidationError);
  EXPECT_THROW(InputLaw::feedback(Eigen::MatrixXd::Ones(1, 2), vec({0.0})), ValidationError);
}

TEST(Step, RejectsBadInputs) {
  const StateSpace ss = build_state_space(ImpedanceParams::diagonal(1, 1.0, 0.0, 0.0));
  EXPECT_THROW(step(ss, State::zero(1), vec({0.0}), vec({0.0}), 0.0), ValidationError);
  EXPECT_THROW(step(ss, State::zero(1), vec({NAN}), vec({0.0}), 0.1), ValidationError);
  EXPECT_THROW(step(ss, State::zero(2), vec({0.0}), vec({0.0}), 0.1), ValidationError);
}

TEST(Step, DivergenceGuard) {
  const StateSpace ss = build_state_space(ImpedanceParams::diagonal(1, 1.0, 0.0, 0.0));
  const State z{vec({0.0}), vec({9e11})};
  EXPECT_THROW(step(ss, z, vec({1e13}), vec({0.0}), 1.0), NonFiniteStateError);
}

}  // namespace
}  // namespace hrigame
