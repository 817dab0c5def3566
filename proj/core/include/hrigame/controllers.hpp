#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hrigame/dynamics.hpp"
#include "hrigame/riccati.hpp"

namespace hrigame {

enum class ControllerKind { cgt, lqr, ncgt };

std::string_view to_string(ControllerKind kind);
/// Parses "cgt", "lqr" or "ncgt". Throws ValidationError otherwise.
ControllerKind parse_controller(std::string_view name);

/// One player's quadratic cost: tracking weights on both references plus its own effort.
struct AgentObjective {
  Eigen::MatrixXd q_on_href;  // 2n x 2n
  Eigen::MatrixXd q_on_rref;  // 2n x 2n
  Eigen::MatrixXd r_self;     // n x n

  /// Throws ValidationError / IndefiniteWeightError when shapes or definiteness are off.
  void validate(Eigen::Index dofs, std::string_view who) const;

  friend bool operator==(const AgentObjective& lhs, const AgentObjective& rhs);
};

/// Target states of the two players, each 2n long ([position; velocity]).
struct References {
  Eigen::VectorXd human;
  Eigen::VectorXd robot;

  friend bool operator==(const References& lhs, const References& rhs);
};

/// Pareto-weighted combination of both costs.
struct CgtAggregate {
  double alpha = 0.5;
  Eigen::MatrixXd q_gt;     // alpha (Q_hh + Q_hr) + (1 - alpha)(Q_rh + Q_rr)
  Eigen::MatrixXd r_gt;     // blockdiag(alpha R_h, (1 - alpha) R_r)
  Eigen::MatrixXd q_h_agg;  // alpha Q_hh + (1 - alpha) Q_rh, multiplies the human reference
  Eigen::MatrixXd q_r_agg;  // alpha Q_hr + (1 - alpha) Q_rr, multiplies the robot reference
};

struct SharedReference {
  Eigen::VectorXd value;
  /// Orthonormal basis of the directions Q_gt does not weight. Those components of
  /// `value` are set to zero. Empty when Q_gt is invertible.
  Eigen::MatrixXd unweighted_directions;

  bool fully_determined() const { return unweighted_directions.cols() == 0; }
};

struct GameSolution {
  ControllerKind kind = ControllerKind::cgt;
  Eigen::MatrixXd k_h;  // n x 2n, first n columns act on position error
  Eigen::MatrixXd k_r;
  /// Agreed reference, only for the cooperative solution.
  std::optional<Eigen::VectorXd> z_ref;
  /// References each player feeds back on: z_ref for both under CGT, their own otherwise.
  Eigen::VectorXd ref_h;
  Eigen::VectorXd ref_r;
  /// One joint P for CGT, (P_h, P_r) otherwise.
  std::vector<Eigen::MatrixXd> p_matrices;
  std::vector<double> residuals;

  /// A - B_h K_h - B_r K_r.
  Eigen::MatrixXd closed_loop(const StateSpace& ss) const;
};

/// Throws DomainError unless 0 < alpha < 1.
CgtAggregate cgt_aggregate(double alpha, const AgentObjective& human, const AgentObjective& robot);

/// z_ref = Q_gt^-1 (Q_h z_h + Q_r z_r), through a pseudo-inverse when Q_gt is singular.
/// Throws SingularWeightError if the weighted right-hand side is not in the range of Q_gt.
SharedReference shared_reference(const CgtAggregate& agg, const References& refs);

GameSolution synthesize_cgt(const StateSpace& ss, double alpha, const AgentObjective& human,
                            const AgentObjective& robot, const References& refs);

/// Independent LQR per player, each on its aggregated state weight and own reference.
/// A player whose aggregated weight is zero gets a zero gain.
GameSolution synthesize_lqr(const StateSpace& ss, double alpha, const AgentObjective& human,
                            const AgentObjective& robot, const References& refs);

/// Feedback Nash equilibrium with the same aggregated state weights as the LQR case.
GameSolution synthesize_ncgt(const StateSpace& ss, double alpha, const AgentObjective& human,
                             const AgentObjective& robot, const References& refs,
                             const CrossEffortWeights& cross = {});

GameSolution synthesize(ControllerKind kind, const StateSpace& ss, double alpha,
                        const AgentObjective& human, const AgentObjective& robot,
                        const References& refs);

/// u = -K (z - ref).
Eigen::VectorXd control_action(const Eigen::Ref<const Eigen::MatrixXd>& gain, const State& z,
                               const Eigen::Ref<const Eigen::VectorXd>& ref);

struct ImpedanceEquivalent {
  ImpedanceParams params;  // D' = D + K_rv, K' = K + K_rp
  Eigen::VectorXd forcing;  // K_rp x_ref
};

/// Folds the robot feedback into the impedance so that the modified plant driven by the
/// human alone (plus `forcing`) reproduces the original plant under both inputs.
ImpedanceEquivalent impedance_equivalent(const ImpedanceParams& params,
                                         const Eigen::Ref<const Eigen::MatrixXd>& k_r,
                                         const Eigen::Ref<const Eigen::VectorXd>& x_ref);

}  // namespace hrigame
