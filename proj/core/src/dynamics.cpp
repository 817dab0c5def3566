#include "hrigame/dynamics.hpp"

#include <cmath>
#include <string>

#include "hrigame/errors.hpp"

namespace hrigame {

bool same_matrix(const Eigen::Ref<const Eigen::MatrixXd>& lhs,
                 const Eigen::Ref<const Eigen::MatrixXd>& rhs) {
  return lhs.rows() == rhs.rows() && lhs.cols() == rhs.cols() && (lhs.array() == rhs.array()).all();
}

bool operator==(const ImpedanceParams& lhs, const ImpedanceParams& rhs) {
  return same_matrix(lhs.inertia, rhs.inertia) && same_matrix(lhs.damping, rhs.damping) &&
         same_matrix(lhs.stiffness, rhs.stiffness);
}

bool operator==(const State& lhs, const State& rhs) {
  return same_matrix(lhs.pos, rhs.pos) && same_matrix(lhs.vel, rhs.vel);
}

namespace {

void require_square(const Eigen::MatrixXd& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw ValidationError(std::string(name) + " must be " + std::to_string(n) + "x" +
                          std::to_string(n) + ", got " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
}

}  // namespace

void ImpedanceParams::validate() const {
  const Eigen::Index n = inertia.rows();
  if (n <= 0) throw ValidationError("inertia must have at least one DOF");
  require_square(inertia, n, "inertia");
  require_square(damping, n, "damping");
  require_square(stiffness, n, "stiffness");

  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + inertia.cwiseAbs().maxCoeff())) {
    throw ValidationError("inertia must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(inertia);
  if (llt.info() != Eigen::Success) {
    throw SingularInertiaError("inertia must be positive definite");
  }
  if ((damping.diagonal().array() < 0.0).any()) {
    throw ValidationError("damping must be non-negative on the diagonal");
  }
}

ImpedanceParams ImpedanceParams::diagonal(Eigen::Index n, double m, double d, double k) {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  return {m * eye, d * eye, k * eye};
}

Eigen::MatrixXd StateSpace::b() const {
  Eigen::MatrixXd stacked(b_h.rows(), b_h.cols() + b_r.cols());
  stacked << b_h, b_r;
  return stacked;
}

State State::zero(Eigen::Index n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)}; }

State State::from_vector(const Eigen::Ref<const Eigen::VectorXd>& z) {
  const Eigen::Index n = z.size() / 2;
  return {z.head(n), z.tail(n)};
}

Eigen::VectorXd State::vector() const {
  Eigen::VectorXd z(pos.size() + vel.size());
  z << pos, vel;
  return z;
}

StateSpace build_state_space(const ImpedanceParams& params) {
  const Eigen::Index n = params.dofs();
  if (n <= 0) throw ValidationError("inertia must have at least one DOF");
  require_square(params.inertia, n, "inertia");
  require_square(params.damping, n, "damping");
  require_square(params.stiffness, n, "stiffness");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(params.inertia);
  const auto& sv = svd.singularValues();
  const double largest = sv(0);
  const double rcond = largest > 0.0 ? sv(sv.size() - 1) / largest : 0.0;
  if (!(rcond >= kInertiaRcondThreshold)) {
    throw SingularInertiaError("inertia matrix is singular (rcond " + std::to_string(rcond) + ")");
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(params.inertia);
  const Eigen::MatrixXd m_inv = lu.inverse();

  StateSpace ss;
  ss.a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  ss.a.topRightCorner(n, n).setIdentity();
  ss.a.bottomLeftCorner(n, n) = -lu.solve(params.stiffness);
  ss.a.bottomRightCorner(n, n) = -lu.solve(params.damping);

  ss.b_h = Eigen::MatrixXd::Zero(2 * n, n);
  ss.b_h.bottomRows(n) = m_inv;
  ss.b_r = ss.b_h;
  return ss;
}

InputLaw InputLaw::held(const Eigen::Ref<const Eigen::VectorXd>& force) {
  return {Eigen::MatrixXd(), force};
}

InputLaw InputLaw::feedback(const Eigen::Ref<const Eigen::MatrixXd>& gain,
                            const Eigen::Ref<const Eigen::VectorXd>& reference) {
  if (gain.cols() != reference.size()) {
    throw ValidationError("feedback gain and reference dimensions disagree");
  }
  return {gain, reference};
}

Eigen::VectorXd InputLaw::operator()(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (!is_feedback()) return target;
  return -(gain * (z - target));
}

State step(const StateSpace& ss, const State& z, const InputLaw& u_h, const InputLaw& u_r,
           double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive and finite");
  const Eigen::Index dim = ss.state_dim();
  const auto law_fits = [&](const InputLaw& u, Eigen::Index inputs) {
    return u.size() == inputs && (!u.is_feedback() || (u.gain.cols() == dim && u.target.size() == dim));
  };
  if (z.pos.size() + z.vel.size() != dim || !law_fits(u_h, ss.b_h.cols()) ||
      !law_fits(u_r, ss.b_r.cols())) {
    throw ValidationError("state or input dimension does not match the plant");
  }
  if (!u_h.target.allFinite() || !u_r.target.allFinite() || !u_h.gain.allFinite() ||
      !u_r.gain.allFinite()) {
    throw ValidationError("inputs must be finite");
  }

  const auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return ss.a * x + ss.b_h * u_h(x) + ss.b_r * u_r(x);
  };

  const Eigen::VectorXd x0 = z.vector();
  const Eigen::VectorXd k1 = f(x0);
  const Eigen::VectorXd k2 = f(x0 + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(x0 + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(x0 + dt * k3);
  const Eigen::VectorXd x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

  if (!x1.allFinite() || x1.cwiseAbs().maxCoeff() > kDivergenceGuard) {
    throw NonFiniteStateError("state diverged during integration");
  }
  return State::from_vector(x1);
}

State step(const StateSpace& ss, const State& z, const Eigen::Ref<const Eigen::VectorXd>& u_h,
           const Eigen::Ref<const Eigen::VectorXd>& u_r, double dt) {
  return step(ss, z, InputLaw::held(u_h), InputLaw::held(u_r), dt);
}

}  // namespace hrigame
