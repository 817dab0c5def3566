#include "hrigame/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "hrigame/errors.hpp"

namespace hrigame {

namespace {

constexpr double kHurwitzMargin = 1e-12;
constexpr double kClosedLoopMargin = 1e-10;
// Newton iterations without residual improvement before the iteration is declared stalled.
constexpr int kStallLimit = 6;
// Best-response sweeps without residual improvement before the game iteration gives up.
constexpr int kCoupledStallLimit = 60;
constexpr int kPolishStallLimit = 10;

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

using MatrixXe = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

MatrixXe extend(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.cast<long double>(); }

// Riccati residuals are formed in extended precision; in double the rounding of P S P alone
// exceeds the residual target once ||P||^2 ||S|| is large.
struct ExtendedCare {
  MatrixXe a, s, q;

  explicit ExtendedCare(const CareProblem& prob)
      : a(extend(prob.a)),
        s(extend(prob.b) * extend(prob.r).llt().solve(MatrixXe(extend(prob.b).transpose()))),
        q(extend(prob.q)) {}

  /// Symmetric part of A'P + PA - P S P + Q.
  MatrixXe map(const Eigen::Ref<const Eigen::MatrixXd>& p) const {
    const MatrixXe pe = extend(p);
    const MatrixXe r = a.transpose() * pe + pe * a - pe * s * pe + q;
    return (r + r.transpose()) / 2;
  }
};

// An imaginary-axis mode of A that Q does not observe stays on the axis under every optimal
// gain, so no stabilizing solution exists (PBH test on rank [A - lambda I; Q]).
void require_no_unweighted_axis_modes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  const Eigen::Index n = a.rows();
  const double scale = 1.0 + a.norm() + q.norm();
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda.real()) > 1e-9 * scale) continue;
    Eigen::MatrixXcd pbh(2 * n, n);
    pbh.topRows(n) = a.cast<std::complex<double>>();
    pbh.topRows(n).diagonal().array() -= lambda;
    pbh.bottomRows(n) = q.cast<std::complex<double>>();
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    if (svd.singularValues()(n - 1) <= 1e-10 * scale) {
      throw NoStabilizingSolutionError(
          "a mode of A on the imaginary axis carries no state weight; no stabilizing solution");
    }
  }
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

void require_shape(const Eigen::Ref<const Eigen::MatrixXd>& m, Eigen::Index rows,
                   Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ValidationError(std::string(name) + " must be " + std::to_string(rows) + "x" +
                          std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
}

Eigen::LLT<Eigen::MatrixXd> factor_effort_weight(const Eigen::Ref<const Eigen::MatrixXd>& r,
                                                 const char* name) {
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + r.cwiseAbs().maxCoeff())) {
    throw IndefiniteWeightError(std::string(name) + " must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) {
    throw IndefiniteWeightError(std::string(name) + " must be positive definite");
  }
  return llt;
}

// Kronecker form of X -> A'X + XA acting on column-major vec(X).
Eigen::MatrixXd lyapunov_operator(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd at = a.transpose();
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    // I (x) A' places A' on the diagonal blocks.
    op.block(j * n, j * n, n, n) += at;
    // A' (x) I places a(i, j) * I in block (j, i).
    for (Eigen::Index i = 0; i < n; ++i) {
      op.block(j * n, i * n, n, n).diagonal().array() += a(i, j);
    }
  }
  return op;
}

}  // namespace

double spectral_abscissa(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  if (a.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().real().maxCoeff();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& a,
                               const Eigen::Ref<const Eigen::MatrixXd>& q) {
  const Eigen::Index n = a.rows();
  require_shape(a, n, n, "a");
  require_shape(q, n, n, "q");
  const double abscissa = spectral_abscissa(a);
  if (!(abscissa < -kHurwitzMargin)) {
    throw NotHurwitzError("Lyapunov operator is not Hurwitz (max real eigenvalue " +
                          sci(abscissa) + ")");
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(lyapunov_operator(a));
  const auto solve_for = [&](const Eigen::MatrixXd& rhs) {
    const Eigen::VectorXd x = lu.solve(-Eigen::Map<const Eigen::VectorXd>(rhs.data(), n * n));
    return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n).eval();
  };

  Eigen::MatrixXd x = symmetrize(solve_for(q));
  // One step of iterative refinement against the residual.
  const Eigen::MatrixXd residual = a.transpose() * x + x * a + q;
  x = symmetrize(x + solve_for(residual));
  return x;
}

double care_residual(const CareProblem& prob, const Eigen::Ref<const Eigen::MatrixXd>& p) {
  return static_cast<double>(ExtendedCare(prob).map(p).norm());
}

CareSolution solve_care(const CareProblem& prob, const CareOptions& options) {
  const Eigen::Index n = prob.a.rows();
  const Eigen::Index m = prob.b.cols();
  if (m < 1) throw ValidationError("input matrix must have at least one column");
  require_shape(prob.a, n, n, "a");
  require_shape(prob.b, n, m, "b");
  require_shape(prob.q, n, n, "q");
  require_shape(prob.r, m, m, "r");
  if ((prob.q - prob.q.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * (1.0 + prob.q.cwiseAbs().maxCoeff())) {
    throw ValidationError("q must be symmetric");
  }
  const auto r_llt = factor_effort_weight(prob.r, "r");

  const Eigen::MatrixXd r_inv_bt = r_llt.solve(prob.b.transpose());
  const Eigen::MatrixXd s = prob.b * r_inv_bt;
  const double target = options.tolerance * (1.0 + prob.q.norm());
  const ExtendedCare ext(prob);
  const auto riccati_map = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return ext.map(x).cast<double>();
  };

  require_no_unweighted_axis_modes(prob.a, prob.q);

  Eigen::MatrixXd gain = Eigen::MatrixXd::Zero(m, n);
  const double open_loop = spectral_abscissa(prob.a);
  if (!(open_loop < -kHurwitzMargin)) {
    // -(A + shift I) must be Hurwitz, so the shift also clears the most stable eigenvalue.
    Eigen::EigenSolver<Eigen::MatrixXd> es(prob.a, false);
    const double most_stable = es.eigenvalues().real().minCoeff();
    const double sigma = std::max(std::max(0.0, open_loop) + 0.5, -most_stable + 0.5);
    const Eigen::MatrixXd shifted = prob.a + sigma * Eigen::MatrixXd::Identity(n, n);
    // (-F) Z + Z (-F)' + 2 B B' = 0 with F = A + sigma I.
    const Eigen::MatrixXd z =
        solve_lyapunov(-shifted.transpose(), 2.0 * prob.b * prob.b.transpose());
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(z);
    gain = prob.b.transpose() * cod.pseudoInverse();
    if (!(spectral_abscissa(prob.a - prob.b * gain) < -kHurwitzMargin)) {
      throw NoStabilizingSolutionError(
          "no stabilizing initial gain: (A, B) appears not to be stabilizable");
    }
  }

  CareSolution best;
  best.residual = std::numeric_limits<double>::infinity();
  int since_improvement = 0;
  Eigen::MatrixXd p;
  for (int it = 1; it <= options.max_iterations; ++it) {
    // Newton step in correction form: (A - S P)' X + X (A - S P) + Res(P) = 0, P <- P + X.
    try {
      if (it == 1) {
        p = solve_lyapunov(prob.a - prob.b * gain, prob.q + gain.transpose() * prob.r * gain);
      } else {
        p = symmetrize(p + solve_lyapunov(prob.a - s * p, riccati_map(p)));
      }
    } catch (const NotHurwitzError&) {
      break;
    }
    gain = r_inv_bt * p;
    const double res = riccati_map(p).norm();
    const bool significant = res < 0.9 * best.residual;
    if (res < best.residual) {
      best.p = p;
      best.gain = gain;
      best.residual = res;
      best.iterations = it;
    }
    if (best.residual <= target) break;
    since_improvement = significant ? 0 : since_improvement + 1;
    if (since_improvement > kStallLimit) break;
  }

  if (!(best.residual <= target)) {
    throw NoStabilizingSolutionError("Newton-Kleinman iteration stalled at residual " +
                                     sci(best.residual) + " (target " +
                                     sci(target) + ")");
  }
  const double closed_abscissa = spectral_abscissa(prob.a - prob.b * best.gain);
  if (!(closed_abscissa < -kClosedLoopMargin)) {
    throw NoStabilizingSolutionError("Riccati solution does not stabilize the closed loop");
  }
  return best;
}

namespace {

struct GameTerms {
  Eigen::MatrixXd s_h;
  Eigen::MatrixXd s_r;
  Eigen::MatrixXd cross_h;  // B_r R_r^-1 R_hr R_r^-1 B_r'
  Eigen::MatrixXd cross_r;  // B_h R_h^-1 R_rh R_h^-1 B_h'
  Eigen::MatrixXd rinv_bt_h;
  Eigen::MatrixXd rinv_bt_r;
  // Extended-precision copies for residual evaluation.
  MatrixXe a_e, s_h_e, s_r_e, cross_h_e, cross_r_e;
};

GameTerms game_terms(const StateSpace& ss, const Eigen::Ref<const Eigen::MatrixXd>& q_h,
                     const Eigen::Ref<const Eigen::MatrixXd>& q_r,
                     const Eigen::Ref<const Eigen::MatrixXd>& r_h,
                     const Eigen::Ref<const Eigen::MatrixXd>& r_r,
                     const CrossEffortWeights& cross) {
  const Eigen::Index n = ss.state_dim();
  require_shape(ss.a, n, n, "a");
  require_shape(q_h, n, n, "q_h");
  require_shape(q_r, n, n, "q_r");
  require_shape(r_h, ss.b_h.cols(), ss.b_h.cols(), "r_h");
  require_shape(r_r, ss.b_r.cols(), ss.b_r.cols(), "r_r");
  const auto llt_h = factor_effort_weight(r_h, "r_h");
  const auto llt_r = factor_effort_weight(r_r, "r_r");

  GameTerms t;
  t.rinv_bt_h = llt_h.solve(ss.b_h.transpose());
  t.rinv_bt_r = llt_r.solve(ss.b_r.transpose());
  t.s_h = ss.b_h * t.rinv_bt_h;
  t.s_r = ss.b_r * t.rinv_bt_r;
  t.cross_h = Eigen::MatrixXd::Zero(n, n);
  t.cross_r = Eigen::MatrixXd::Zero(n, n);
  if (cross.human_on_robot.size() > 0) {
    require_shape(cross.human_on_robot, r_r.rows(), r_r.cols(), "r_hr");
    t.cross_h = t.rinv_bt_r.transpose() * cross.human_on_robot * t.rinv_bt_r;
  }
  if (cross.robot_on_human.size() > 0) {
    require_shape(cross.robot_on_human, r_h.rows(), r_h.cols(), "r_rh");
    t.cross_r = t.rinv_bt_h.transpose() * cross.robot_on_human * t.rinv_bt_h;
  }
  const MatrixXe rinv_bt_h_e = extend(r_h).llt().solve(MatrixXe(extend(ss.b_h).transpose()));
  const MatrixXe rinv_bt_r_e = extend(r_r).llt().solve(MatrixXe(extend(ss.b_r).transpose()));
  t.a_e = extend(ss.a);
  t.s_h_e = extend(ss.b_h) * rinv_bt_h_e;
  t.s_r_e = extend(ss.b_r) * rinv_bt_r_e;
  t.cross_h_e = MatrixXe::Zero(n, n);
  t.cross_r_e = MatrixXe::Zero(n, n);
  if (cross.human_on_robot.size() > 0) {
    t.cross_h_e = rinv_bt_r_e.transpose() * extend(cross.human_on_robot) * rinv_bt_r_e;
  }
  if (cross.robot_on_human.size() > 0) {
    t.cross_r_e = rinv_bt_h_e.transpose() * extend(cross.robot_on_human) * rinv_bt_h_e;
  }
  return t;
}

double player_residual(const MatrixXe& a, const MatrixXe& s_self, const MatrixXe& s_other,
                       const MatrixXe& cross, const Eigen::Ref<const Eigen::MatrixXd>& q,
                       const Eigen::Ref<const Eigen::MatrixXd>& p_self,
                       const Eigen::Ref<const Eigen::MatrixXd>& p_other) {
  const MatrixXe ps = extend(p_self);
  const MatrixXe po = extend(p_other);
  const MatrixXe a_other = a - s_other * po;
  const MatrixXe r =
      a_other.transpose() * ps + ps * a_other - ps * s_self * ps + extend(q) + po * cross * po;
  return static_cast<double>(((r + r.transpose()) / 2).norm());
}

}  // namespace

std::pair<double, double> coupled_care_residuals(const StateSpace& ss,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& q_h,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& q_r,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& r_h,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& r_r,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& p_h,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& p_r,
                                                 const CrossEffortWeights& cross) {
  const GameTerms t = game_terms(ss, q_h, q_r, r_h, r_r, cross);
  return {player_residual(t.a_e, t.s_h_e, t.s_r_e, t.cross_h_e, q_h, p_h, p_r),
          player_residual(t.a_e, t.s_r_e, t.s_h_e, t.cross_r_e, q_r, p_r, p_h)};
}

std::pair<CareSolution, CareSolution> solve_coupled_care(
    const StateSpace& ss, const Eigen::Ref<const Eigen::MatrixXd>& q_h,
    const Eigen::Ref<const Eigen::MatrixXd>& q_r, const Eigen::Ref<const Eigen::MatrixXd>& r_h,
    const Eigen::Ref<const Eigen::MatrixXd>& r_r, const CrossEffortWeights& cross,
    const CoupledCareOptions& options) {
  const GameTerms t = game_terms(ss, q_h, q_r, r_h, r_r, cross);
  const Eigen::Index n = ss.state_dim();
  const double target = options.tolerance * (1.0 + std::max(q_h.norm(), q_r.norm()));
  const double gamma = options.damping;
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("damping must lie in (0, 1]");

  // The inner solves only need to be accurate enough not to limit the outer residual.
  CareOptions inner;
  inner.tolerance = 1e-11;

  Eigen::MatrixXd p_h = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd p_r = Eigen::MatrixXd::Zero(n, n);
  double res_h = std::numeric_limits<double>::infinity();
  double res_r = res_h;
  double best = res_h;
  Eigen::MatrixXd best_p_h = p_h;
  Eigen::MatrixXd best_p_r = p_r;
  std::pair<double, double> best_res{res_h, res_r};
  const double polish_target =
      options.polish_tolerance * (1.0 + std::max(q_h.norm(), q_r.norm()));
  int since_improvement = 0;

  const auto best_response = [&](const Eigen::MatrixXd& a_eff, const Eigen::MatrixXd& b,
                                 const Eigen::MatrixXd& q_eff,
                                 const Eigen::Ref<const Eigen::MatrixXd>& r) {
    try {
      return solve_care({a_eff, b, symmetrize(q_eff), r}, inner).p;
    } catch (const NoStabilizingSolutionError&) {
      // Fall back to the default tolerance before giving up on this sweep.
      return solve_care({a_eff, b, symmetrize(q_eff), r}).p;
    }
  };

  int it = 0;
  try {
    for (it = 1; it <= options.max_iterations; ++it) {
      const Eigen::MatrixXd p_h_new = best_response(ss.a - t.s_r * p_r, ss.b_h,
                                                    q_h + p_r * t.cross_h * p_r, r_h);
      p_h = (1.0 - gamma) * p_h + gamma * p_h_new;
      const Eigen::MatrixXd p_r_new = best_response(ss.a - t.s_h * p_h, ss.b_r,
                                                    q_r + p_h * t.cross_r * p_h, r_r);
      p_r = (1.0 - gamma) * p_r + gamma * p_r_new;

      res_h = player_residual(t.a_e, t.s_h_e, t.s_r_e, t.cross_h_e, q_h, p_h, p_r);
      res_r = player_residual(t.a_e, t.s_r_e, t.s_h_e, t.cross_r_e, q_r, p_r, p_h);
      const double worst = std::max(res_h, res_r);
      const bool improved = worst < 0.99 * best;
      if (worst < best) {
        best = worst;
        best_p_h = p_h;
        best_p_r = p_r;
        best_res = {res_h, res_r};
      }
      since_improvement = improved ? 0 : since_improvement + 1;
      if (best <= target) {
        // Converged; keep sweeping only while it still pays off.
        if (best <= polish_target || since_improvement > kPolishStallLimit) break;
      } else if (since_improvement > kCoupledStallLimit) {
        throw NoConvergenceError("coupled Riccati iteration stopped improving", res_h, res_r);
      }
    }
  } catch (const NoConvergenceError&) {
    throw;
  } catch (const SolverError& e) {
    throw NoConvergenceError(std::string("best response failed: ") + e.what(), res_h, res_r);
  }

  if (!(best <= target)) {
    throw NoConvergenceError("coupled Riccati iteration exhausted its budget (residuals " +
                                 sci(res_h) + ", " + sci(res_r) + ")",
                             res_h, res_r);
  }
  it = std::min(it, options.max_iterations);
  const double joint = spectral_abscissa(ss.a - t.s_h * best_p_h - t.s_r * best_p_r);
  if (!(joint < -kClosedLoopMargin)) {
    throw NoConvergenceError("coupled Riccati fixed point does not stabilize the joint loop",
                             best_res.first, best_res.second);
  }

  CareSolution human{best_p_h, t.rinv_bt_h * best_p_h, best_res.first, it};
  CareSolution robot{best_p_r, t.rinv_bt_r * best_p_r, best_res.second, it};
  return {std::move(human), std::move(robot)};
}

}  // namespace hrigame
