#pragma once

// Frequentist sample-size planning for the Any/All/Compensatory rules via
// large-sample multivariate z-tests, plus prior-mean elicitation from
// success-probability beliefs stated at two anchor covariate values.

#include <cstdint>

#include <Eigen/Dense>

#include "bmlr/decision.hpp"
#include "bmlr/model.hpp"

namespace bmlr {

struct DesignTargets {
  Eigen::VectorXd theta1;  // per-outcome success probabilities, treated arm
  Eigen::VectorXd theta0;  // control arm
  Eigen::MatrixXd sigma;   // K x K outcome correlation matrix
  double alpha = 0.05;
  double beta_type2 = 0.20;
  DecisionRule rule;
  long n_max = 1000000;

  int n_outcomes() const { return static_cast<int>(theta1.size()); }
  void validate() const;
};

// Power of the rule's test at n subjects per arm. Any rejects when at least
// one z_k clears z_{1-alpha/K}, so its acceptance region is the full lower
// orthant and power is the complement; All rejects when every z_k clears
// z_{1-alpha}; Compensatory reduces to a single z-test on the weighted
// success probabilities. The seed drives the QMC error estimate at K >= 3.
double power_any_all(const DesignTargets& targets, long n,
                     std::uint64_t seed = 0x9D2C5680CA359F3DULL);

struct PlanResult {
  long n = 0;        // per arm
  double power = 0.0;
};

// Smallest per-arm n reaching power 1 - beta_type2: increment-by-one scan
// from n=2 for Any/All (power is monotone; step 1 guarantees minimality),
// closed form for Compensatory, rounded up.
PlanResult required_n(const DesignTargets& targets,
                      std::uint64_t seed = 0x9D2C5680CA359F3DULL);

// Joint category probabilities (11,10,01,00) from two marginal success
// probabilities and their correlation; rejects pairs outside the Frechet
// feasibility bounds (some pattern would get negative probability).
Eigen::VectorXd elicit_joint_probs(const Eigen::VectorXd& theta, double rho);

// Beliefs for one arm at the two anchors.
struct ArmBeliefs {
  Eigen::VectorXd theta_low;   // success probabilities at x_low
  Eigen::VectorXd theta_high;  // at x_high
  double rho_low = 0.0;        // pairwise outcome correlation at x_low
  double rho_high = 0.0;
};

struct BeliefSet {
  ArmBeliefs treat;
  ArmBeliefs control;
  double x_low = -1.0;
  double x_high = 1.0;

  void validate() const;
};

// Prior coefficient means for the 4-term model (intercept, treat, x,
// x:treat) hitting the believed joint probabilities exactly at both anchors
// of both arms. Two outcomes only; other K are out of scope.
CoefficientSet elicit_prior_means(const BeliefSet& beliefs);

}  // namespace bmlr
