#include "hrigame/controllers.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "hrigame/errors.hpp"

namespace hrigame {

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::cgt:
      return "cgt";
    case ControllerKind::lqr:
      return "lqr";
    case ControllerKind::ncgt:
      return "ncgt";
  }
  return "unknown";
}

ControllerKind parse_controller(std::string_view name) {
  if (name == "cgt") return ControllerKind::cgt;
  if (name == "lqr") return ControllerKind::lqr;
  if (name == "ncgt") return ControllerKind::ncgt;
  throw ValidationError("unknown controller '" + std::string(name) + "' (expected cgt, lqr or ncgt)");
}

namespace {

void require_psd(const Eigen::MatrixXd& q, Eigen::Index dim, const std::string& name) {
  if (q.rows() != dim || q.cols() != dim) {
    throw ValidationError(name + " must be " + std::to_string(dim) + "x" + std::to_string(dim));
  }
  if (!q.allFinite()) throw ValidationError(name + " has non-finite entries");
  const double scale = 1.0 + q.cwiseAbs().maxCoeff();
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError(name + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw IndefiniteWeightError(name + " must be positive semi-definite");
  }
}

void require_pd(const Eigen::MatrixXd& r, Eigen::Index dim, const std::string& name) {
  if (r.rows() != dim || r.cols() != dim) {
    throw ValidationError(name + " must be " + std::to_string(dim) + "x" + std::to_string(dim));
  }
  if (!r.allFinite()) throw ValidationError(name + " has non-finite entries");
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + r.cwiseAbs().maxCoeff())) {
    throw ValidationError(name + " must be symmetric");
  }
  if (Eigen::LLT<Eigen::MatrixXd>(r).info() != Eigen::Success) {
    throw IndefiniteWeightError(name + " must be positive definite");
  }
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must lie in the open interval (0, 1), got " + std::to_string(alpha));
  }
}

void require_refs(const References& refs, Eigen::Index dim) {
  if (refs.human.size() != dim || refs.robot.size() != dim) {
    throw ValidationError("references must have " + std::to_string(dim) + " components");
  }
  if (!refs.human.allFinite() || !refs.robot.allFinite()) {
    throw ValidationError("references must be finite");
  }
}

Eigen::MatrixXd block_diagonal(const Eigen::MatrixXd& upper, const Eigen::MatrixXd& lower) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(upper.rows() + lower.rows(), upper.cols() + lower.cols());
  out.topLeftCorner(upper.rows(), upper.cols()) = upper;
  out.bottomRightCorner(lower.rows(), lower.cols()) = lower;
  return out;
}

}  // namespace

void AgentObjective::validate(Eigen::Index dofs, std::string_view who) const {
  const std::string prefix(who);
  require_psd(q_on_href, 2 * dofs, prefix + ".q_on_href");
  require_psd(q_on_rref, 2 * dofs, prefix + ".q_on_rref");
  require_pd(r_self, dofs, prefix + ".r_self");
}

bool operator==(const AgentObjective& lhs, const AgentObjective& rhs) {
  return same_matrix(lhs.q_on_href, rhs.q_on_href) && same_matrix(lhs.q_on_rref, rhs.q_on_rref) &&
         same_matrix(lhs.r_self, rhs.r_self);
}

bool operator==(const References& lhs, const References& rhs) {
  return same_matrix(lhs.human, rhs.human) && same_matrix(lhs.robot, rhs.robot);
}

Eigen::MatrixXd GameSolution::closed_loop(const StateSpace& ss) const {
  return ss.a - ss.b_h * k_h - ss.b_r * k_r;
}

CgtAggregate cgt_aggregate(double alpha, const AgentObjective& human, const AgentObjective& robot) {
  require_alpha(alpha);
  const double beta = 1.0 - alpha;
  CgtAggregate agg;
  agg.alpha = alpha;
  agg.q_h_agg = alpha * human.q_on_href + beta * robot.q_on_href;
  agg.q_r_agg = alpha * human.q_on_rref + beta * robot.q_on_rref;
  agg.q_gt = agg.q_h_agg + agg.q_r_agg;
  agg.r_gt = block_diagonal(alpha * human.r_self, beta * robot.r_self);
  return agg;
}

SharedReference shared_reference(const CgtAggregate& agg, const References& refs) {
  const Eigen::Index dim = agg.q_gt.rows();
  require_refs(refs, dim);
  const Eigen::VectorXd weighted = agg.q_h_agg * refs.human + agg.q_r_agg * refs.robot;

  SharedReference out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(agg.q_gt);
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const double largest = lambda.cwiseAbs().maxCoeff();
  const double cutoff = largest > 0.0 ? 1e-12 * largest : 0.0;
  const Eigen::Index unweighted = (lambda.array().abs() <= cutoff).count();

  if (unweighted == 0) {
    out.value = agg.q_gt.ldlt().solve(weighted);
    out.unweighted_directions.resize(dim, 0);
    return out;
  }

  Eigen::VectorXd inv_lambda = Eigen::VectorXd::Zero(dim);
  out.unweighted_directions.resize(dim, unweighted);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (std::abs(lambda(i)) > cutoff) {
      inv_lambda(i) = 1.0 / lambda(i);
    } else {
      out.unweighted_directions.col(col++) = es.eigenvectors().col(i);
    }
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  out.value = v * inv_lambda.asDiagonal() * (v.transpose() * weighted);

  const double mismatch = (agg.q_gt * out.value - weighted).norm();
  if (mismatch > 1e-9 * (1.0 + weighted.norm())) {
    throw SingularWeightError(
        "Q_gt is singular and the weighted references have a component it does not weight");
  }
  return out;
}

GameSolution synthesize_cgt(const StateSpace& ss, double alpha, const AgentObjective& human,
                            const AgentObjective& robot, const References& refs) {
  const Eigen::Index n = ss.dofs();
  human.validate(n, "human");
  robot.validate(n, "robot");
  const CgtAggregate agg = cgt_aggregate(alpha, human, robot);
  const SharedReference z_ref = shared_reference(agg, refs);

  const CareSolution sol = solve_care({ss.a, ss.b(), agg.q_gt, agg.r_gt});

  GameSolution out;
  out.kind = ControllerKind::cgt;
  out.k_h = sol.gain.topRows(ss.b_h.cols());
  out.k_r = sol.gain.bottomRows(ss.b_r.cols());
  out.z_ref = z_ref.value;
  out.ref_h = z_ref.value;
  out.ref_r = z_ref.value;
  out.p_matrices = {sol.p};
  out.residuals = {sol.residual};
  return out;
}

namespace {

// A player with no state weight has zero cost at zero effort and does not act.
CareSolution regulator(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& q,
                       const Eigen::MatrixXd& r) {
  if (q.isZero(0.0)) {
    return {Eigen::MatrixXd::Zero(a.rows(), a.cols()), Eigen::MatrixXd::Zero(b.cols(), a.rows()),
            0.0, 0};
  }
  return solve_care({a, b, q, r});
}

}  // namespace

GameSolution synthesize_lqr(const StateSpace& ss, double alpha, const AgentObjective& human,
                            const AgentObjective& robot, const References& refs) {
  const Eigen::Index n = ss.dofs();
  human.validate(n, "human");
  robot.validate(n, "robot");
  require_refs(refs, ss.state_dim());
  const CgtAggregate agg = cgt_aggregate(alpha, human, robot);

  const CareSolution sol_h = regulator(ss.a, ss.b_h, agg.q_h_agg, human.r_self);
  const CareSolution sol_r = regulator(ss.a, ss.b_r, agg.q_r_agg, robot.r_self);

  GameSolution out;
  out.kind = ControllerKind::lqr;
  out.k_h = sol_h.gain;
  out.k_r = sol_r.gain;
  out.ref_h = refs.human;
  out.ref_r = refs.robot;
  out.p_matrices = {sol_h.p, sol_r.p};
  out.residuals = {sol_h.residual, sol_r.residual};
  return out;
}

GameSolution synthesize_ncgt(const StateSpace& ss, double alpha, const AgentObjective& human,
                             const AgentObjective& robot, const References& refs,
                             const CrossEffortWeights& cross) {
  const Eigen::Index n = ss.dofs();
  human.validate(n, "human");
  robot.validate(n, "robot");
  require_refs(refs, ss.state_dim());
  const CgtAggregate agg = cgt_aggregate(alpha, human, robot);

  const auto [sol_h, sol_r] =
      solve_coupled_care(ss, agg.q_h_agg, agg.q_r_agg, human.r_self, robot.r_self, cross);

  GameSolution out;
  out.kind = ControllerKind::ncgt;
  out.k_h = sol_h.gain;
  out.k_r = sol_r.gain;
  out.ref_h = refs.human;
  out.ref_r = refs.robot;
  out.p_matrices = {sol_h.p, sol_r.p};
  out.residuals = {sol_h.residual, sol_r.residual};
  return out;
}

GameSolution synthesize(ControllerKind kind, const StateSpace& ss, double alpha,
                        const AgentObjective& human, const AgentObjective& robot,
                        const References& refs) {
  switch (kind) {
    case ControllerKind::cgt:
      return synthesize_cgt(ss, alpha, human, robot, refs);
    case ControllerKind::lqr:
      return synthesize_lqr(ss, alpha, human, robot, refs);
    case ControllerKind::ncgt:
      return synthesize_ncgt(ss, alpha, human, robot, refs);
  }
  throw ValidationError("unknown controller kind");
}

Eigen::VectorXd control_action(const Eigen::Ref<const Eigen::MatrixXd>& gain, const State& z,
                               const Eigen::Ref<const Eigen::VectorXd>& ref) {
  const Eigen::Index dim = z.pos.size() + z.vel.size();
  if (gain.cols() != dim || ref.size() != dim) {
    throw ValidationError("gain, state and reference dimensions disagree");
  }
  return -gain * (z.vector() - ref);
}

ImpedanceEquivalent impedance_equivalent(const ImpedanceParams& params,
                                         const Eigen::Ref<const Eigen::MatrixXd>& k_r,
                                         const Eigen::Ref<const Eigen::VectorXd>& x_ref) {
  const Eigen::Index n = params.dofs();
  if (k_r.rows() != n || k_r.cols() != 2 * n || x_ref.size() != n) {
    throw ValidationError("robot gain must be n x 2n and the position reference n long");
  }
  const auto k_pos = k_r.leftCols(n);
  const auto k_vel = k_r.rightCols(n);
  ImpedanceEquivalent out;
  out.params.inertia = params.inertia;
  out.params.damping = params.damping + k_vel;
  out.params.stiffness = params.stiffness + k_pos;
  out.forcing = k_pos * x_ref;
  return out;
}

}  // namespace hrigame
