#pragma once

// Transformation chain beta -> phi -> theta -> delta for specified
// populations: fixed covariate values, empirical marginalization over an
// observed covariate stratum, and the covariate-free conjugate Dirichlet
// posterior used as a stratified reference method.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmlr/gibbs.hpp"
#include "bmlr/model.hpp"
#include "bmlr/outcome_matrix.hpp"
#include "bmlr/rng.hpp"

namespace bmlr {

// Per-draw joint probabilities, marginal success probabilities, and
// treatment differences. Row l of every matrix comes from the same posterior
// draw, so summaries preserve joint posterior uncertainty.
struct EffectSample {
  Eigen::MatrixXd phi_treat;      // L x Q
  Eigen::MatrixXd phi_control;    // L x Q
  Eigen::MatrixXd theta_treat;    // L x K
  Eigen::MatrixXd theta_control;  // L x K
  Eigen::MatrixXd delta;          // L x K, theta_treat - theta_control

  long n_draws() const { return delta.rows(); }
  int n_outcomes() const { return static_cast<int>(delta.cols()); }
  int n_categories() const { return static_cast<int>(phi_treat.cols()); }
};

// theta^k = sum of phi^q over categories with a success in outcome k. The
// sum is taken directly, never renormalized, so additivity is exact.
Eigen::VectorXd phi_to_theta(const Eigen::VectorXd& phi,
                             const OutcomeMatrix& h);

// delta = theta1 - theta0 componentwise.
Eigen::VectorXd theta_to_delta(const Eigen::VectorXd& theta1,
                               const Eigen::VectorXd& theta0);

// Weights must be nonnegative, sum to 1, and have one entry per outcome.
void validate_weights(const Eigen::VectorXd& w, int n_outcomes);

// Weighted treatment difference sum_k w^k delta^k.
double weighted_delta(const Eigen::VectorXd& delta, const Eigen::VectorXd& w);

// Per-draw weighted differences, one entry per row of the sample.
Eigen::VectorXd weighted_delta_draws(const EffectSample& effects,
                                     const Eigen::VectorXd& w);

// Subject predicate: half-open intervals [lo, hi) and exact matches on
// covariate values, combined by conjunction. Covariate indices refer to
// DesignInfo::covariates order. An empty filter keeps every subject.
struct SubpopulationFilter {
  struct Interval {
    int covariate = 0;
    double lo = 0.0;
    double hi = 0.0;  // exclusive
  };
  struct Exact {
    int covariate = 0;
    double value = 0.0;
  };

  std::vector<Interval> intervals;
  std::vector<Exact> exacts;

  bool empty() const { return intervals.empty() && exacts.empty(); }
  // design_row is a full row of TrialDataset::design (DesignInfo layout).
  bool keeps(const DesignInfo& design, const Eigen::VectorXd& design_row) const;
  std::vector<int> retained(const DesignInfo& design,
                            const TrialDataset& data) const;
};

// Rows of the dataset passing the filter, for stratified analyses. The
// subset may be empty; callers decide whether that is an error.
TrialDataset filter_rows(const TrialDataset& data, const DesignInfo& design,
                         const SubpopulationFilter& filter);

// Which population an effect refers to.
struct PopulationSpec {
  enum class Kind { FixedValues, EmpiricalMarginal };

  Kind kind = Kind::EmpiricalMarginal;
  Eigen::VectorXd x;           // covariate values, FixedValues only
  SubpopulationFilter filter;  // EmpiricalMarginal only
  std::string label;
};

// Conditional effects at fixed covariate values z: for every stored draw,
// substitute treatment 0/1 into the recorded design layout and push the
// draw through inverse_mlogit and the theta/delta chain.
EffectSample effects_at_fixed_x(const PosteriorSample& post,
                                const DesignInfo& design,
                                const OutcomeMatrix& h,
                                const Eigen::VectorXd& z);

// Marginal effects over a covariate stratum: per draw and arm, the joint
// probabilities are averaged over retained subjects of that arm evaluated at
// their own covariates. Requires at least one retained subject per arm.
EffectSample effects_empirical_marginal(const PosteriorSample& post,
                                        const DesignInfo& design,
                                        const OutcomeMatrix& h,
                                        const TrialDataset& data,
                                        const SubpopulationFilter& filter);

// Dispatch on the population kind.
EffectSample compute_effects(const PosteriorSample& post,
                             const DesignInfo& design, const OutcomeMatrix& h,
                             const TrialDataset& data,
                             const PopulationSpec& spec);

// Conjugate Dirichlet posterior over joint categories, one parameter vector
// per arm: alpha_n = alpha0 + category counts of that arm.
struct DirichletPosterior {
  Eigen::VectorXd alpha0;         // Q
  Eigen::VectorXd alpha_treat;    // Q
  Eigen::VectorXd alpha_control;  // Q
};

DirichletPosterior dirichlet_posterior(const TrialDataset& data,
                                       const OutcomeMatrix& h,
                                       const Eigen::VectorXd& alpha0);

// n_draws independent Dirichlet(alpha) vectors, one per row.
Eigen::MatrixXd dirichlet_sample(const Eigen::VectorXd& alpha, long n_draws,
                                 RngStream& rng);

// Reference-method effects: direct Dirichlet draws per arm (paired by draw
// index) pushed through the same theta/delta chain. Every posterior
// parameter must be positive; an improper prior on an empty category is
// refused with the offending category named.
EffectSample dirichlet_reference(const TrialDataset& data,
                                 const OutcomeMatrix& h,
                                 const Eigen::VectorXd& alpha0, long n_draws,
                                 RngStream& rng);

// Pairwise outcome correlation implied by a K=2 joint probability vector:
// (phi_both - theta^1 theta^2) / sqrt(theta^1(1-theta^1) theta^2(1-theta^2)).
double phi_pair_correlation(const Eigen::VectorXd& phi,
                            const OutcomeMatrix& h);

// Posterior mean and central 95% interval of one scalar quantity.
struct QuantitySummary {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Mean and central interval per outcome for theta (both arms) and delta.
struct EffectSummary {
  std::vector<QuantitySummary> theta_treat;
  std::vector<QuantitySummary> theta_control;
  std::vector<QuantitySummary> delta;
};

QuantitySummary summarize_draws(Eigen::VectorXd draws);
EffectSummary summarize(const EffectSample& effects);

}  // namespace bmlr
