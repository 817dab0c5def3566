#pragma once

#include <utility>

#include <Eigen/Dense>

#include "hrigame/dynamics.hpp"

namespace hrigame {

/// Continuous-time LQ problem 0 = A'P + PA - P B R^-1 B' P + Q.
struct CareProblem {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd q;
  Eigen::MatrixXd r;
};

struct CareSolution {
  Eigen::MatrixXd p;
  Eigen::MatrixXd gain;  // R^-1 B' P
  double residual = 0.0;
  int iterations = 0;
};

struct CareOptions {
  /// Residual target, scaled by (1 + ||Q||_F).
  double tolerance = 1e-9;
  int max_iterations = 100;
};

struct CoupledCareOptions {
  /// Residual target for both players, scaled by (1 + max ||Q_i||_F).
  double tolerance = 1e-8;
  int max_iterations = 500;
  /// Relaxation of the best-response update, P <- (1 - damping) P + damping P_new.
  double damping = 0.5;
  /// Once converged, sweeps continue while the residual still improves, down to this.
  double polish_tolerance = 1e-13;
};

/// Optional cross effort weights of the non-cooperative costs. Zero-sized means absent.
struct CrossEffortWeights {
  Eigen::MatrixXd human_on_robot;  // R_{h,r}: weight player h puts on u_r
  Eigen::MatrixXd robot_on_human;  // R_{r,h}: weight player r puts on u_h
};

/// Largest real part over the eigenvalues of `a`.
double spectral_abscissa(const Eigen::Ref<const Eigen::MatrixXd>& a);

/// Solves A'X + XA + Q = 0 for Hurwitz A by a Kronecker-product linear solve.
/// Throws NotHurwitzError when an eigenvalue of A has real part >= -1e-12.
Eigen::MatrixXd solve_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& a,
                               const Eigen::Ref<const Eigen::MatrixXd>& q);

/// Frobenius norm of A'P + PA - P B R^-1 B' P + Q.
double care_residual(const CareProblem& prob, const Eigen::Ref<const Eigen::MatrixXd>& p);

/// Stabilizing solution of the CARE by Newton-Kleinman iteration.
///
/// The initial gain is zero for a Hurwitz A; otherwise it comes from Bass's shifted
/// Lyapunov equation with shift sigma = max(max(0, max Re eig A), -min Re eig A) + 0.5,
/// which places every closed-loop eigenvalue at real part -sigma when (A, B) is
/// controllable.
///
/// Throws IndefiniteWeightError for a non positive definite R and
/// NoStabilizingSolutionError when an imaginary-axis mode of A is unobserved by Q, when no
/// stabilizing iterate is found, or when the iteration stalls above tolerance.
CareSolution solve_care(const CareProblem& prob, const CareOptions& options = {});

/// Residuals (h, r) of the two feedback-Nash coupled AREs.
std::pair<double, double> coupled_care_residuals(const StateSpace& ss,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& q_h,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& q_r,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& r_h,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& r_r,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& p_h,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& p_r,
                                                 const CrossEffortWeights& cross = {});

/// Feedback Nash equilibrium of the two-player infinite-horizon LQ game.
///
/// Each player's equation is
///   0 = (A - S_j P_j)' P_i + P_i (A - S_j P_j) - P_i S_i P_i + Q_i + P_j S_ij P_j
/// with S_i = B_i R_i^-1 B_i' and S_ij = B_j R_j^-1 R_ij R_j^-1 B_j' (zero by default).
/// Solved by damped Gauss-Seidel best responses starting from P = 0; the returned pair is
/// whichever equilibrium the iteration reaches. Throws NoConvergenceError carrying the last
/// residuals when the budget is exhausted or a best response cannot be computed.
std::pair<CareSolution, CareSolution> solve_coupled_care(
    const StateSpace& ss, const Eigen::Ref<const Eigen::MatrixXd>& q_h,
    const Eigen::Ref<const Eigen::MatrixXd>& q_r, const Eigen::Ref<const Eigen::MatrixXd>& r_h,
    const Eigen::Ref<const Eigen::MatrixXd>& r_r, const CrossEffortWeights& cross = {},
    const CoupledCareOptions& options = {});

}  // namespace hrigame
