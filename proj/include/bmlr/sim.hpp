#pragma once

// Monte Carlo operating characteristics: generate two-arm trials from known
// coefficients, refit each replication with the Gibbs sampler, push the
// draws through the effect chain, apply the decision rules, and aggregate
// rejection proportions and estimator bias.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmlr/decision.hpp"
#include "bmlr/design.hpp"
#include "bmlr/effects.hpp"
#include "bmlr/gibbs.hpp"
#include "bmlr/model.hpp"

namespace bmlr {

enum class CovariateLaw { Binary, StandardNormal };  // Binary is P(x=1)=1/2

const char* to_string(CovariateLaw law);

// Generating truth: coefficients over a recorded design layout, the
// covariate law (shared by all covariates, drawn independently), and the
// per-arm sample size.
struct DgmSpec {
  CoefficientSet beta;
  DesignInfo design;
  CovariateLaw law = CovariateLaw::Binary;
  long n_per_arm = 2;
  std::string label = "dgm";

  int n_categories() const { return beta.n_free_categories() + 1; }
  int n_outcomes() const;  // K with 2^K categories
  void validate() const;
};

// Truth from beliefs: coefficients via prior-mean elicitation. The implied
// joint probabilities are re-evaluated at both anchors of both arms and must
// reproduce the beliefs, so every calibrated scenario is self-consistent.
DgmSpec calibrate_dgm(const BeliefSet& beliefs, CovariateLaw law,
                      long n_per_arm, std::string label = "calibrated");

// Balanced two-arm trial from the truth: the first n_per_arm subjects are
// treated; covariates follow the law; each response is one categorical draw
// from the subject's inverse-logit joint probabilities.
TrialDataset generate_dataset(const DgmSpec& dgm, std::uint64_t seed);

// Success probabilities the truth implies for a population spec. Fixed
// values are exact; empirical marginalization integrates theta(x) over the
// covariate law restricted to the filter (exact enumeration for the binary
// law, fixed-grid Simpson quadrature for the normal law). Only single
// covariate designs are supported here.
struct PopulationTruth {
  Eigen::VectorXd theta1;
  Eigen::VectorXd theta0;
  Eigen::VectorXd delta;
};

PopulationTruth population_truth(const DgmSpec& dgm,
                                 const PopulationSpec& pop);

// Desk-scale chains keep campaigns in minutes; full scale mirrors a
// production analysis.
ChainConfig desk_chain_config();  // 2000 stored, 500 burn-in, 2 chains
ChainConfig full_chain_config();  // 10000 stored, 1000 burn-in, 2 chains

struct ScenarioSpec {
  DgmSpec dgm;
  ChainConfig chains;       // desk scale unless overridden
  double prior_tau = 0.01;  // diffuse prior precision for every refit
  std::vector<DecisionRule> rules;
  double alpha = 0.05;
  Sidedness sidedness = Sidedness::OneSidedRight;
  std::vector<PopulationSpec> populations;
  // Adds the covariate-free Dirichlet method on the whole dataset, judged
  // against the unfiltered marginal truth.
  bool with_dirichlet_reference = false;
  double dirichlet_alpha0 = 1.0;  // flat prior per joint category
  long dirichlet_draws = 4000;

  ScenarioSpec() { chains = desk_chain_config(); }
  void validate() const;
};

struct RuleRates {
  DecisionRule rule;
  std::string label;
  double superior_rate = 0.0;
  double inferior_rate = 0.0;
  double superior_se = 0.0;  // sqrt(p(1-p)/R_completed)
  double inferior_se = 0.0;
};

// One population x estimation method: bias of the posterior means against
// the truth and decision rates per rule.
struct MethodResult {
  std::string population;
  std::string method;  // fixed-x | empirical-marginal | dirichlet-reference
  PopulationTruth truth;
  Eigen::VectorXd theta1_bias;
  Eigen::VectorXd theta0_bias;
  Eigen::VectorXd delta_bias;
  std::vector<RuleRates> rules;
};

struct ReplicationFailure {
  long replication = 0;
  std::string message;
};

struct CampaignResult {
  std::string label;
  long n_requested = 0;
  long n_completed = 0;
  std::uint64_t seed = 0;
  long total_refits = 0;          // fresh-seed re-runs that were needed
  Eigen::MatrixXd beta_bias;      // mean posterior-mean beta minus truth
  std::vector<MethodResult> methods;
  std::vector<ReplicationFailure> failures;
};

// R independent replications on substreams of `seed`. Aggregates depend only
// on the per-replication records, never on completion order, so any worker
// count gives identical results. Non-convergent or numerically failed fits
// are re-run on fresh data and seeds up to 3 times; replications failing all
// attempts are excluded from aggregates and listed in `failures`.
CampaignResult run_replications(const ScenarioSpec& scenario, long R,
                                std::uint64_t seed, int n_workers = 1);

std::string rule_label(const DecisionRule& rule);

}  // namespace bmlr
