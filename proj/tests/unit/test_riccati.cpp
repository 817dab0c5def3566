#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hrigame/errors.hpp"
#include "hrigame/riccati.hpp"
#include "test_support.hpp"

namespace hrigame {
namespace {

using testing::diag;
using testing::max_abs;
using testing::scalar;

Eigen::MatrixXd desk_a() {
  Eigen::MatrixXd a(2, 2);
  a << 0.0, 1.0, 0.0, -2.5;
  return a;
}

Eigen::MatrixXd desk_b() { return testing::vec({0.0, 0.1}); }

double lyapunov_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q, const Eigen::MatrixXd& x) {
  return (a.transpose() * x + x * a + q).norm();
}

TEST(SolveLyapunov, Scalar) {
  const Eigen::MatrixXd x = solve_lyapunov(scalar(-1.0), scalar(2.0));
  EXPECT_NEAR(x(0, 0), 1.0, 1e-15);
}

TEST(SolveLyapunov, Diagonal) {
  const Eigen::MatrixXd x =
      solve_lyapunov(-Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_LE(max_abs(x - 0.5 * Eigen::MatrixXd::Identity(2, 2)), 1e-15);
}

TEST(SolveLyapunov, ShiftedDeskPlantAgainstEigenOracle) {
  const Eigen::MatrixXd a = desk_a() - 0.1 * Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd x = solve_lyapunov(a, q);
  EXPECT_LE(lyapunov_residual(a, q, x), 1e-10 * (1.0 + q.norm()));
  EXPECT_LE(max_abs(x - testing::eigen_lyapunov(a, q)), 1e-10 * (1.0 + max_abs(x)));
  EXPECT_LE(max_abs(x - x.transpose()), 0.0);
}

TEST(SolveLyapunov, RandomStableMatricesAgainstEigenOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + trial % 8;
    Eigen::MatrixXd a = testing::random_matrix(rng, n, n);
    a -= (spectral_abscissa(a) + 0.5) * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd q = testing::random_psd(rng, n, n);
    const Eigen::MatrixXd x = solve_lyapunov(a, q);
    EXPECT_LE(lyapunov_residual(a, q, x), 1e-10 * (1.0 + q.norm())) << "trial " << trial;
    EXPECT_LE(max_abs(x - testing::eigen_lyapunov(a, q)), 1e-8 * (1.0 + max_abs(x)))
        << "trial " << trial;
  }
}

TEST(SolveLyapunov, RejectsNonHurwitz) {
  EXPECT_THROW(solve_lyapunov(desk_a(), Eigen::MatrixXd::Identity(2, 2)), NotHurwitzError);
  EXPECT_THROW(solve_lyapunov(scalar(1.0), scalar(1.0)), NotHurwitzError);
}

TEST(SolveCare, ScalarIntegrator) {
  const CareSolution sol = solve_care({scalar(0.0), scalar(1.0), scalar(1.0), scalar(1.0)});
  EXPECT_NEAR(sol.p(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(sol.gain(0, 0), 1.0, 1e-12);
}

TEST(SolveCare, StablePlantZeroWeight) {
  const CareSolution sol = solve_care({scalar(-1.0), scalar(1.0), scalar(0.0), scalar(1.0)});
  EXPECT_EQ(sol.p(0, 0), 0.0);
  EXPECT_EQ(sol.gain(0, 0), 0.0);
}

TEST(SolveCare, DeskPlantAgainstHamiltonianOracle) {
  const CareProblem prob{desk_a(), desk_b(), diag({1.0, 1e-4}), scalar(0.0005)};
  const CareSolution sol = solve_care(prob);
  EXPECT_LE(care_residual(prob, sol.p), 1e-9 * (1.0 + prob.q.norm()));
  EXPECT_LE(testing::extended_care_residual(prob.a, prob.b, prob.q, prob.r, sol.p),
            1e-9 * (1.0 + prob.q.norm()));
  EXPECT_LT(spectral_abscissa(prob.a - prob.b * sol.gain), -1e-10);
  const Eigen::MatrixXd oracle = testing::hamiltonian_care(prob.a, prob.b, prob.q, prob.r);
  EXPECT_LE(max_abs(sol.p - oracle), 1e-6);
  EXPECT_LE(max_abs(sol.gain - prob.r.inverse() * prob.b.transpose() * sol.p), 1e-12);
}

TEST(SolveCare, RejectsIndefiniteEffortWeight) {
  EXPECT_THROW(solve_care({scalar(0.0), scalar(1.0), scalar(1.0), scalar(-1.0)}),
               IndefiniteWeightError);
  EXPECT_THROW(solve_care({scalar(0.0), scalar(1.0), scalar(1.0), scalar(0.0)}),
               IndefiniteWeightError);
}

TEST(SolveCare, RejectsUnstabilizablePair) {
  // Unstable mode with no input authority.
  Eigen::MatrixXd a = diag({1.0, -1.0});
  EXPECT_THROW(solve_care({a, testing::vec({0.0, 1.0}), Eigen::MatrixXd::Identity(2, 2), scalar(1.0)}),
               NoStabilizingSolutionError);
}

TEST(SolveCare, RejectsMissingInputColumns) {
  EXPECT_THROW(solve_care({scalar(-1.0), Eigen::MatrixXd(1, 0), scalar(1.0), Eigen::MatrixXd(0, 0)}),
               ValidationError);
}

TEST(SolveCare, GainMonotoneInEffortWeight) {
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 20; ++k) {
    const double r = std::pow(10.0, -1.0 + k / 20.0);
    const CareSolution sol = solve_care({scalar(0.3), scalar(2.0), scalar(1.5), scalar(r)});
    EXPECT_LE(std::abs(sol.gain(0, 0)), previous + 1e-12);
    previous = std::abs(sol.gain(0, 0));
  }
}

TEST(SolveCare, RandomProblemsSatisfyResidualAndStability) {
  std::mt19937_64 rng(21);
  int checked = 0;
  while (checked < 100) {
    const Eigen::Index n = 1 + rng() % 6;
    const Eigen::Index m = 1 + rng() % n;
    const Eigen::MatrixXd a = testing::random_matrix(rng, n, n);
    const Eigen::MatrixXd b = testing::random_matrix(rng, n, m);
    if (testing::controllability_margin(a, b) < 1e-3) continue;
    const CareProblem prob{a, b, testing::random_psd(rng, n, n), testing::random_pd(rng, m)};
    const CareSolution sol = solve_care(prob);
    EXPECT_LE(testing::extended_care_residual(a, b, prob.q, prob.r, sol.p),
              1e-9 * (1.0 + prob.q.norm()));
    EXPECT_LT(spectral_abscissa(a - b * sol.gain), -1e-10);
    EXPECT_LE(max_abs(sol.p - sol.p.transpose()), 1e-10);
    ++checked;
  }
}

TEST(SolveCoupledCare, ScalarSymmetricGame) {
  const StateSpace ss{scalar(0.0), scalar(1.0), scalar(1.0)};
  const auto [h, r] = solve_coupled_care(ss, scalar(1.0), scalar(1.0), scalar(1.0), scalar(1.0));
  const double closed_form = 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(h.p(0, 0), closed_form, 1e-9);
  EXPECT_NEAR(r.p(0, 0), closed_form, 1e-9);
  EXPECT_NEAR(h.gain(0, 0), closed_form, 1e-9);
  EXPECT_NEAR(r.gain(0, 0), closed_form, 1e-9);

  // Undamped scalar best-response fixed point p <- -p + sqrt(p^2 + 1).
  double p = 0.0;
  for (int i = 0; i < 200; ++i) p = -p + std::sqrt(p * p + 1.0);
  EXPECT_NEAR(p, closed_form, 1e-9);
  EXPECT_NEAR(h.p(0, 0), p, 1e-9);
}

TEST(SolveCoupledCare, InactiveRobotReducesToSingleCare) {
  const StateSpace ss{desk_a(), desk_b(), testing::vec({0.0, 0.3})};
  const Eigen::MatrixXd q_h = diag({1.0, 1e-4});
  const auto [h, r] =
      solve_coupled_care(ss, q_h, Eigen::MatrixXd::Zero(2, 2), scalar(5e-4), scalar(5e-4));
  EXPECT_LE(max_abs(r.p), 1e-12);
  const CareSolution single = solve_care({ss.a, ss.b_h, q_h, scalar(5e-4)});
  EXPECT_LE(max_abs(h.p - single.p), 1e-8);
}

TEST(SolveCoupledCare, DeskGameSatisfiesNashDeviation) {
  const StateSpace ss{desk_a(), desk_b(), desk_b()};
  const Eigen::MatrixXd q_h = 0.5 * diag({1.0, 1e-4});
  const Eigen::MatrixXd q_r = 0.5 * diag({1.0, 1e-4});
  const Eigen::MatrixXd r = scalar(5e-4);
  const auto [h, rb] = solve_coupled_care(ss, q_h, q_r, r, r);
  const auto [res_h, res_r] = coupled_care_residuals(ss, q_h, q_r, r, r, h.p, rb.p);
  EXPECT_LE(std::max(res_h, res_r), 1e-8 * (1.0 + q_h.norm()));
  EXPECT_LT(spectral_abscissa(ss.a - ss.b_h * h.gain - ss.b_r * rb.gain), 0.0);

  const CareSolution best_h = solve_care({ss.a - ss.b_r * rb.gain, ss.b_h, q_h, r});
  const CareSolution best_r = solve_care({ss.a - ss.b_h * h.gain, ss.b_r, q_r, r});
  EXPECT_LE(max_abs(best_h.gain - h.gain), 1e-6);
  EXPECT_LE(max_abs(best_r.gain - rb.gain), 1e-6);
}

TEST(SolveCoupledCare, CrossEffortWeightsEnterResidual) {
  const StateSpace ss{scalar(0.0), scalar(1.0), scalar(1.0)};
  CrossEffortWeights cross{scalar(0.5), scalar(0.25)};
  const auto [h, r] =
      solve_coupled_care(ss, scalar(1.0), scalar(2.0), scalar(1.0), scalar(1.0), cross);
  // Scalar coupled equations with S = 1 and cross terms c_h = 0.5, c_r = 0.25.
  const double ph = h.p(0, 0);
  const double pr = r.p(0, 0);
  EXPECT_NEAR(-2.0 * pr * ph - ph * ph + 1.0 + 0.5 * pr * pr, 0.0, 3e-8);
  EXPECT_NEAR(-2.0 * ph * pr - pr * pr + 2.0 + 0.25 * ph * ph, 0.0, 3e-8);
}

TEST(SolveCoupledCare, ReportsNoConvergenceWithResiduals) {
  const StateSpace ss{scalar(0.0), scalar(1.0), scalar(1.0)};
  CoupledCareOptions tight;
  tight.max_iterations = 2;
  try {
    solve_coupled_care(ss, scalar(1.0), scalar(1.0), scalar(1.0), scalar(1.0), {}, tight);
    FAIL() << "expected NoConvergenceError";
  } catch (const NoConvergenceError& e) {
    EXPECT_GT(e.residual_h(), 0.0);
    EXPECT_TRUE(std::isfinite(e.residual_r()));
  }
}

}  // namespace
}  // namespace hrigame
