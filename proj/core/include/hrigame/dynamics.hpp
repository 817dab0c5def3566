#pragma once

#include <Eigen/Dense>

namespace hrigame {

/// Exact element-wise equality that tolerates mismatched shapes.
bool same_matrix(const Eigen::Ref<const Eigen::MatrixXd>& lhs,
                 const Eigen::Ref<const Eigen::MatrixXd>& rhs);

/// Desired Cartesian impedance M a + D v + K dx = u_h + u_r over n translational DOFs.
struct ImpedanceParams {
  Eigen::MatrixXd inertia;    // M, kg
  Eigen::MatrixXd damping;    // D, N s/m
  Eigen::MatrixXd stiffness;  // K, N/m

  Eigen::Index dofs() const { return inertia.rows(); }

  /// Checks shapes, symmetry and positive definiteness of M, finiteness of D and K and
  /// non-negative damping on the diagonal. Throws ValidationError.
  void validate() const;

  /// Diagonal scalar parameters replicated on every DOF.
  static ImpedanceParams diagonal(Eigen::Index n, double m, double d, double k);

  friend bool operator==(const ImpedanceParams& lhs, const ImpedanceParams& rhs);
};

/// z' = A z + B_h u_h + B_r u_r with z = [dx; v].
struct StateSpace {
  Eigen::MatrixXd a;    // 2n x 2n
  Eigen::MatrixXd b_h;  // 2n x n
  Eigen::MatrixXd b_r;  // 2n x n

  Eigen::Index dofs() const { return b_h.cols(); }
  Eigen::Index state_dim() const { return a.rows(); }

  /// Stacked input matrix [B_h B_r].
  Eigen::MatrixXd b() const;
};

struct State {
  Eigen::VectorXd pos;
  Eigen::VectorXd vel;

  static State zero(Eigen::Index n);
  static State from_vector(const Eigen::Ref<const Eigen::VectorXd>& z);

  Eigen::Index dofs() const { return pos.size(); }
  Eigen::VectorXd vector() const;

  friend bool operator==(const State& lhs, const State& rhs);
};

/// Inverse inertia is refused when its reciprocal condition number drops below this.
inline constexpr double kInertiaRcondThreshold = 1e-12;

/// States with a component above this magnitude are treated as diverged.
inline constexpr double kDivergenceGuard = 1e12;

/// Default fixed integration step, seconds.
inline constexpr double kDefaultDt = 1e-3;

/// Builds A = [[0, I], [-M^-1 K, -M^-1 D]] and B_h = B_r = [[0], [M^-1]].
/// Throws SingularInertiaError when M is not safely invertible.
StateSpace build_state_space(const ImpedanceParams& params);

/// Input applied over one integration step: either a held force or the state feedback
/// u(z) = -gain (z - target), re-evaluated at every Runge-Kutta stage.
struct InputLaw {
  Eigen::MatrixXd gain;    // empty for a held force
  Eigen::VectorXd target;  // feedback reference, or the held force itself

  static InputLaw held(const Eigen::Ref<const Eigen::VectorXd>& force);
  static InputLaw feedback(const Eigen::Ref<const Eigen::MatrixXd>& gain,
                           const Eigen::Ref<const Eigen::VectorXd>& reference);

  bool is_feedback() const { return gain.size() > 0; }
  Eigen::Index size() const { return is_feedback() ? gain.rows() : target.size(); }
  Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& z) const;
};

/// Advances the plant by dt with a classical 4th order Runge-Kutta step.
State step(const StateSpace& ss, const State& z, const InputLaw& u_h, const InputLaw& u_r,
           double dt);

/// Same, holding both inputs constant over the step.
State step(const StateSpace& ss, const State& z, const Eigen::Ref<const Eigen::VectorXd>& u_h,
           const Eigen::Ref<const Eigen::VectorXd>& u_r, double dt);

}  // namespace hrigame
