#include "bmlr/design.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bmlr/errors.hpp"
#include "bmlr/mvn.hpp"
#include "bmlr/normal.hpp"

namespace bmlr {

namespace {

void check_prob_vector(const Eigen::VectorXd& theta, const char* what) {
  for (int k = 0; k < theta.size(); ++k) {
    if (!std::isfinite(theta(k)) || theta(k) <= 0.0 || theta(k) >= 1.0) {
      std::ostringstream msg;
      msg << what << "(" << k << ") = " << theta(k)
          << " must lie strictly inside (0, 1)";
      throw ValidationError(msg.str());
    }
  }
}

// Per-outcome effect and standard error of the two-proportion z statistic,
// with the sign flipped when smaller probabilities are the good direction.
struct TestGeometry {
  Eigen::VectorXd delta;  // signed effects, positive = favorable
  Eigen::VectorXd var1;   // per-subject variance, arm 1 + arm 0
};

TestGeometry test_geometry(const DesignTargets& t) {
  const double sign = t.rule.direction == Direction::FailureIsGood ? -1.0 : 1.0;
  TestGeometry g;
  g.delta = sign * (t.theta1 - t.theta0);
  g.var1 = (t.theta1.array() * (1.0 - t.theta1.array()) +
            t.theta0.array() * (1.0 - t.theta0.array()))
               .matrix();
  return g;
}

// Collapse onto the weighted success probabilities; the weights are convex,
// so the collapsed probabilities inherit (0, 1) from the per-outcome ones.
DesignTargets collapse_compensatory(const DesignTargets& t) {
  DesignTargets c = t;
  c.theta1 = Eigen::VectorXd::Constant(1, t.rule.weights.dot(t.theta1));
  c.theta0 = Eigen::VectorXd::Constant(1, t.rule.weights.dot(t.theta0));
  c.sigma = Eigen::MatrixXd::Identity(1, 1);
  c.rule.kind = RuleKind::All;  // K=1: all three rules coincide
  c.rule.weights = Eigen::VectorXd::Ones(1);
  return c;
}

double power_at(const DesignTargets& t, long n, std::uint64_t seed) {
  if (t.rule.kind == RuleKind::Compensatory) {
    return power_at(collapse_compensatory(t), n, seed);
  }
  const int K = t.n_outcomes();
  const TestGeometry g = test_geometry(t);
  const Eigen::VectorXd shift =
      g.delta.array() / (g.var1.array() / static_cast<double>(n)).sqrt();
  if (t.rule.kind == RuleKind::Any) {
    // Accept only when every statistic stays below the per-outcome cut.
    const double z = norm_quantile(1.0 - t.alpha / K);
    const Eigen::VectorXd upper = Eigen::VectorXd::Constant(K, z) - shift;
    return 1.0 - mvn_cdf(upper, t.sigma, seed).value;
  }
  // All: every statistic must clear the common cut.
  const double z = norm_quantile(1.0 - t.alpha);
  const Eigen::VectorXd upper = shift - Eigen::VectorXd::Constant(K, z);
  return mvn_cdf(upper, t.sigma, seed).value;
}

void check_feasible_direction(const DesignTargets& t) {
  const TestGeometry g = test_geometry(t);
  const bool ok = t.rule.kind == RuleKind::Any ? g.delta.maxCoeff() > 0.0
                                               : g.delta.minCoeff() > 0.0;
  if (!ok) {
    throw InfeasibleDesignError(
        "planned effects point away from the superiority region for this "
        "rule; no sample size can reach the target power");
  }
}

PlanResult plan_compensatory(const DesignTargets& t) {
  const DesignTargets c = collapse_compensatory(t);
  const TestGeometry g = test_geometry(c);
  if (g.delta(0) <= 0.0) {
    throw InfeasibleDesignError(
        "weighted effect is not positive in the favorable direction; no "
        "sample size can reach the target power");
  }
  const double z_sum =
      norm_quantile(1.0 - t.alpha) + norm_quantile(1.0 - t.beta_type2);
  const double ratio = z_sum / g.delta(0);
  const long n = std::max(
      2L, static_cast<long>(std::ceil(g.var1(0) * ratio * ratio)));
  if (n > t.n_max) {
    std::ostringstream msg;
    msg << "required n = " << n << " per arm exceeds n_max = " << t.n_max
        << " (power " << power_at(c, t.n_max, 0) << " at the cap)";
    throw InfeasibleDesignError(msg.str());
  }
  return {n, power_at(c, n, 0)};
}

}  // namespace

void DesignTargets::validate() const {
  const int K = n_outcomes();
  if (K < 1) throw ValidationError("at least one outcome is required");
  if (theta0.size() != K) {
    throw ValidationError("theta1 and theta0 must have the same length");
  }
  check_prob_vector(theta1, "theta1");
  check_prob_vector(theta0, "theta0");
  if (sigma.rows() != K || sigma.cols() != K) {
    throw ValidationError("sigma must be K x K");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("alpha must lie in (0, 1)");
  }
  if (!(beta_type2 > 0.0 && beta_type2 < 1.0)) {
    throw ValidationError("beta_type2 must lie in (0, 1)");
  }
  if (n_max < 2) throw ValidationError("n_max must be at least 2");
  rule.validate(K);
  // sigma itself is validated by mvn_cdf (unit diagonal, symmetry, psd).
}

double power_any_all(const DesignTargets& targets, long n,
                     std::uint64_t seed) {
  targets.validate();
  if (n < 2) throw ValidationError("n per arm must be at least 2");
  return power_at(targets, n, seed);
}

PlanResult required_n(const DesignTargets& targets, std::uint64_t seed) {
  targets.validate();
  if (targets.rule.kind == RuleKind::Compensatory) {
    return plan_compensatory(targets);
  }
  check_feasible_direction(targets);
  const double goal = 1.0 - targets.beta_type2;
  double power = 0.0;
  for (long n = 2; n <= targets.n_max; ++n) {
    power = power_at(targets, n, seed);
    if (power >= goal) return {n, power};
  }
  std::ostringstream msg;
  msg << "no n per arm up to n_max = " << targets.n_max
      << " reaches power " << goal << " (power " << power << " at the cap)";
  throw InfeasibleDesignError(msg.str());
}

Eigen::VectorXd elicit_joint_probs(const Eigen::VectorXd& theta, double rho) {
  if (theta.size() != 2) {
    throw UnsupportedError("joint probability elicitation needs exactly two "
                           "marginal success probabilities");
  }
  check_prob_vector(theta, "theta");
  if (!std::isfinite(rho) || rho < -1.0 || rho > 1.0) {
    throw ValidationError("rho must lie in [-1, 1]");
  }
  const double t1 = theta(0);
  const double t2 = theta(1);
  const double s = std::sqrt(t1 * (1.0 - t1) * t2 * (1.0 - t2));
  Eigen::VectorXd phi(4);
  phi(0) = rho * s + t1 * t2;          // 11
  phi(1) = t1 - phi(0);                // 10
  phi(2) = t2 - phi(0);                // 01
  phi(3) = 1.0 - t1 - t2 + phi(0);     // 00
  static const char* kPattern[4] = {"11", "10", "01", "00"};
  for (int q = 0; q < 4; ++q) {
    if (phi(q) < -1e-12) {
      // Frechet bounds on the joint law: each pattern must keep mass >= 0.
      const double lo = std::max(-t1 * t2, -(1.0 - t1) * (1.0 - t2)) / s;
      const double hi = std::min(t1 * (1.0 - t2), t2 * (1.0 - t1)) / s;
      std::ostringstream msg;
      msg << "rho = " << rho << " gives pattern " << kPattern[q]
          << " negative probability " << phi(q) << "; for theta = (" << t1
          << ", " << t2 << ") the feasible correlations are [" << lo << ", "
          << hi << "]";
      throw ElicitationError(msg.str());
    }
    phi(q) = std::max(phi(q), 0.0);
  }
  return phi;
}

void BeliefSet::validate() const {
  for (const ArmBeliefs* arm : {&treat, &control}) {
    if (arm->theta_low.size() != 2 || arm->theta_high.size() != 2) {
      throw UnsupportedError(
          "prior elicitation supports exactly two outcomes");
    }
    check_prob_vector(arm->theta_low, "theta_low");
    check_prob_vector(arm->theta_high, "theta_high");
  }
  if (!std::isfinite(x_low) || !std::isfinite(x_high) || x_low >= x_high) {
    throw ValidationError("anchor covariate values must satisfy "
                          "x_low < x_high and be finite");
  }
}

CoefficientSet elicit_prior_means(const BeliefSet& beliefs) {
  beliefs.validate();
  // Log odds against the reference pattern 00, per arm and anchor.
  auto log_ratios = [](const Eigen::VectorXd& theta, double rho,
                       const char* where) {
    const Eigen::VectorXd phi = elicit_joint_probs(theta, rho);
    for (int q = 0; q < 4; ++q) {
      if (phi(q) <= 0.0) {
        std::ostringstream msg;
        static const char* kPattern[4] = {"11", "10", "01", "00"};
        msg << "believed probability of pattern " << kPattern[q] << " at "
            << where
            << " is zero, so its log odds against the reference are "
               "undefined";
        throw ElicitationError(msg.str());
      }
    }
    Eigen::VectorXd psi(3);
    for (int q = 0; q < 3; ++q) psi(q) = std::log(phi(q) / phi(3));
    return psi;
  };
  const Eigen::VectorXd psi_0l = log_ratios(
      beliefs.control.theta_low, beliefs.control.rho_low, "control x_low");
  const Eigen::VectorXd psi_0h = log_ratios(
      beliefs.control.theta_high, beliefs.control.rho_high, "control x_high");
  const Eigen::VectorXd psi_1l = log_ratios(
      beliefs.treat.theta_low, beliefs.treat.rho_low, "treated x_low");
  const Eigen::VectorXd psi_1h = log_ratios(
      beliefs.treat.theta_high, beliefs.treat.rho_high, "treated x_high");

  // Per category: psi_T(x) = b0 + b1 T + b2 x + b3 x T. The control anchors
  // identify (b0, b2); the treated anchors identify the treated line, whose
  // slope and level shifts give b3 and b1.
  const double dx = beliefs.x_high - beliefs.x_low;
  CoefficientSet coef;
  coef.beta.resize(3, 4);
  for (int q = 0; q < 3; ++q) {
    const double b2 = (psi_0h(q) - psi_0l(q)) / dx;
    const double b0 = psi_0l(q) - b2 * beliefs.x_low;
    const double slope1 = (psi_1h(q) - psi_1l(q)) / dx;
    const double b3 = slope1 - b2;
    const double b1 = (psi_1l(q) - psi_0l(q)) - b3 * beliefs.x_low;
    coef.beta(q, 0) = b0;
    coef.beta(q, 1) = b1;
    coef.beta(q, 2) = b2;
    coef.beta(q, 3) = b3;
  }
  return coef;
}

}  // namespace bmlr
