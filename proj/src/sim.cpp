#include "bmlr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "bmlr/errors.hpp"
#include "bmlr/normal.hpp"

namespace bmlr {

namespace {

Eigen::VectorXd theta_at(const DgmSpec& dgm, const OutcomeMatrix& h,
                         double treat, const Eigen::VectorXd& z) {
  const Eigen::VectorXd row = dgm.design.row(treat, z);
  return phi_to_theta(inverse_mlogit(linear_predictors(dgm.beta, row)), h);
}

// Stratum bounds for a single continuous covariate; exact filters select a
// null set under a continuous law and are refused.
void continuous_stratum(const SubpopulationFilter& filter, double* lo,
                        double* hi) {
  *lo = -10.0;  // the normal law carries ~1e-23 mass beyond
  *hi = 10.0;
  for (const SubpopulationFilter::Exact& e : filter.exacts) {
    (void)e;
    throw ValidationError(
        "population truth: exact covariate filters define a null stratum "
        "under a continuous covariate law");
  }
  for (const SubpopulationFilter::Interval& iv : filter.intervals) {
    *lo = std::max(*lo, iv.lo);
    *hi = std::min(*hi, iv.hi);
  }
  if (!(*lo < *hi))
    throw EmptySubpopulationError(
        "population truth: the filter excludes the whole covariate support");
}

PopulationTruth marginal_truth(const DgmSpec& dgm, const OutcomeMatrix& h,
                               const SubpopulationFilter& filter) {
  if (dgm.design.n_covariates() != 1)
    throw UnsupportedError(
        "population truth integrates over a single covariate only");
  const int k = h.n_outcomes();
  PopulationTruth t;
  Eigen::VectorXd z(1);
  if (dgm.law == CovariateLaw::Binary) {
    Eigen::VectorXd num1 = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd num0 = Eigen::VectorXd::Zero(k);
    double den = 0.0;
    for (double x : {0.0, 1.0}) {
      z(0) = x;
      if (!filter.keeps(dgm.design, dgm.design.row(0.0, z))) continue;
      num1 += 0.5 * theta_at(dgm, h, 1.0, z);
      num0 += 0.5 * theta_at(dgm, h, 0.0, z);
      den += 0.5;
    }
    if (den == 0.0)
      throw EmptySubpopulationError(
          "population truth: the filter excludes the whole covariate "
          "support");
    t.theta1 = num1 / den;
    t.theta0 = num0 / den;
  } else {
    double lo, hi;
    continuous_stratum(filter, &lo, &hi);
    // Composite Simpson on a fixed grid; theta(x) is smooth and bounded, so
    // 4000 panels put the quadrature error far below reporting precision.
    const int n = 4000;
    const double step = (hi - lo) / n;
    Eigen::VectorXd num1 = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd num0 = Eigen::VectorXd::Zero(k);
    double den = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      z(0) = lo + i * step;
      const double g = w * norm_pdf(z(0));
      num1 += g * theta_at(dgm, h, 1.0, z);
      num0 += g * theta_at(dgm, h, 0.0, z);
      den += g;
    }
    t.theta1 = num1 / den;
    t.theta0 = num0 / den;
  }
  t.delta = t.theta1 - t.theta0;
  return t;
}

// Everything one replication contributes to the aggregates.
struct RepRecord {
  bool ok = false;
  int refits = 0;
  std::string error;
  Eigen::MatrixXd beta_mean;
  std::vector<Eigen::VectorXd> theta1, theta0, delta;  // per method
  std::vector<std::vector<Verdict>> verdicts;          // [method][rule]
};

Eigen::MatrixXd posterior_beta_mean(const PosteriorSample& post) {
  Eigen::VectorXd flat =
      Eigen::VectorXd::Zero(post.n_free_categories * post.n_coef);
  for (const Eigen::MatrixXd& chain : post.chains)
    flat += chain.colwise().sum().transpose();
  flat /= static_cast<double>(post.total_draws());
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(
      flat.data(), post.n_free_categories, post.n_coef);
}

void record_method(RepRecord& rec, const EffectSample& sample,
                   const ScenarioSpec& scenario, int n_outcomes) {
  rec.theta1.push_back(sample.theta_treat.colwise().mean().transpose());
  rec.theta0.push_back(sample.theta_control.colwise().mean().transpose());
  rec.delta.push_back(sample.delta.colwise().mean().transpose());
  std::vector<Verdict> verdicts;
  for (const DecisionRule& rule : scenario.rules) {
    const double cut = default_p_cut(rule.kind, scenario.sidedness,
                                     scenario.alpha, n_outcomes);
    const double p_sup = rule_probability(sample, rule, Region::Superiority);
    const double p_inf = rule_probability(sample, rule, Region::Inferiority);
    verdicts.push_back(
        decide(p_sup, p_inf, cut, cut, scenario.sidedness).verdict);
  }
  rec.verdicts.push_back(std::move(verdicts));
}

RepRecord run_one(const ScenarioSpec& scenario, const OutcomeMatrix& h,
                  const NormalPrior& prior, std::uint64_t rep_key) {
  RepRecord rec;
  const int max_attempts = 4;  // one run plus up to three fresh-seed re-runs
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    try {
      const TrialDataset data = generate_dataset(
          scenario.dgm, RngStream::derive(rep_key, 2 * attempt));
      const PosteriorSample post =
          run_chains(data, h, prior, scenario.chains,
                     RngStream::derive(rep_key, 2 * attempt + 1));
      if (!post.converged) {
        if (attempt + 1 < max_attempts) {
          ++rec.refits;
          continue;
        }
        std::ostringstream msg;
        msg << "chains failed to converge after " << max_attempts
            << " attempts (last PSRF " << post.gelman_rubin << ")";
        rec.error = msg.str();
        return rec;
      }
      rec.beta_mean = posterior_beta_mean(post);
      for (const PopulationSpec& pop : scenario.populations) {
        record_method(rec,
                      compute_effects(post, scenario.dgm.design, h, data, pop),
                      scenario, h.n_outcomes());
      }
      if (scenario.with_dirichlet_reference) {
        RngStream dir_rng(RngStream::derive(rep_key, 101));
        const Eigen::VectorXd alpha0 = Eigen::VectorXd::Constant(
            h.n_categories(), scenario.dirichlet_alpha0);
        record_method(rec,
                      dirichlet_reference(data, h, alpha0,
                                          scenario.dirichlet_draws, dir_rng),
                      scenario, h.n_outcomes());
      }
      rec.ok = true;
      return rec;
    } catch (const ChainError& e) {
      // Numerical chain failures are seed-dependent: retry like
      // non-convergence.
      if (attempt + 1 < max_attempts) {
        ++rec.refits;
        continue;
      }
      rec.error = e.what();
      return rec;
    } catch (const Error& e) {
      rec.error = e.what();  // deterministic: retrying cannot help
      return rec;
    }
  }
  return rec;
}

}  // namespace

const char* to_string(CovariateLaw law) {
  return law == CovariateLaw::Binary ? "binary" : "standard-normal";
}

int DgmSpec::n_outcomes() const {
  int k = 0;
  int q = n_categories();
  while (q > 1) {
    q >>= 1;
    ++k;
  }
  return k;
}

void DgmSpec::validate() const {
  design.validate();
  if (beta.design_width() != design.width())
    throw ValidationError("dgm: coefficient width does not match the design");
  if (!beta.beta.allFinite())
    throw ValidationError("dgm: coefficients must be finite");
  const int q = n_categories();
  if (q < 2 || (q & (q - 1)) != 0)
    throw ValidationError(
        "dgm: free categories + 1 must be a power of two (joint binary "
        "outcomes)");
  if (n_per_arm < 2) throw ValidationError("dgm: need at least 2 per arm");
}

DgmSpec calibrate_dgm(const BeliefSet& beliefs, CovariateLaw law,
                      long n_per_arm, std::string label) {
  DgmSpec dgm;
  dgm.beta = elicit_prior_means(beliefs);
  dgm.design.covariates = {"x"};
  dgm.design.interact = {true};
  dgm.law = law;
  dgm.n_per_arm = n_per_arm;
  dgm.label = std::move(label);
  dgm.validate();

  // The anchors must round-trip through the coefficients exactly.
  const OutcomeMatrix h = OutcomeMatrix::build(2);
  struct Anchor {
    const Eigen::VectorXd* theta;
    double rho, treat, x;
  };
  const Anchor anchors[] = {
      {&beliefs.treat.theta_low, beliefs.treat.rho_low, 1.0, beliefs.x_low},
      {&beliefs.treat.theta_high, beliefs.treat.rho_high, 1.0, beliefs.x_high},
      {&beliefs.control.theta_low, beliefs.control.rho_low, 0.0,
       beliefs.x_low},
      {&beliefs.control.theta_high, beliefs.control.rho_high, 0.0,
       beliefs.x_high},
  };
  Eigen::VectorXd z(1);
  for (const Anchor& a : anchors) {
    z(0) = a.x;
    const Eigen::VectorXd phi =
        inverse_mlogit(linear_predictors(dgm.beta, dgm.design.row(a.treat, z)));
    if ((phi - elicit_joint_probs(*a.theta, a.rho)).cwiseAbs().maxCoeff() >
        1e-10)
      throw InternalConsistencyError(
          "calibrated coefficients do not reproduce the anchor beliefs");
  }
  return dgm;
}

TrialDataset generate_dataset(const DgmSpec& dgm, std::uint64_t seed) {
  dgm.validate();
  const OutcomeMatrix h = OutcomeMatrix::build(dgm.n_outcomes());
  const long n = 2 * dgm.n_per_arm;
  const int m = dgm.design.n_covariates();
  TrialDataset data;
  data.outcomes.resize(n, h.n_outcomes());
  data.design.resize(n, dgm.design.width());
  data.treatment.resize(n);
  RngStream rng(seed);
  Eigen::VectorXd z(m);
  for (long i = 0; i < n; ++i) {
    const double treat = i < dgm.n_per_arm ? 1.0 : 0.0;
    for (int j = 0; j < m; ++j)
      z(j) = dgm.law == CovariateLaw::Binary
                 ? (rng.uniform() < 0.5 ? 1.0 : 0.0)
                 : rng.normal();
    const Eigen::VectorXd row = dgm.design.row(treat, z);
    data.design.row(i) = row.transpose();
    const Eigen::VectorXd phi =
        inverse_mlogit(linear_predictors(dgm.beta, row));
    const int q = rng.categorical(phi.data(), h.n_categories());
    data.outcomes.row(i) = h.decode(q).transpose();
    data.treatment(i) = treat > 0.5 ? 1 : 0;
  }
  data.validate(h);
  return data;
}

PopulationTruth population_truth(const DgmSpec& dgm,
                                 const PopulationSpec& pop) {
  dgm.validate();
  const OutcomeMatrix h = OutcomeMatrix::build(dgm.n_outcomes());
  if (pop.kind == PopulationSpec::Kind::FixedValues) {
    if (pop.x.size() != dgm.design.n_covariates())
      throw ValidationError(
          "population truth: fixed covariate values have the wrong length");
    PopulationTruth t;
    t.theta1 = theta_at(dgm, h, 1.0, pop.x);
    t.theta0 = theta_at(dgm, h, 0.0, pop.x);
    t.delta = t.theta1 - t.theta0;
    return t;
  }
  return marginal_truth(dgm, h, pop.filter);
}

ChainConfig desk_chain_config() {
  ChainConfig c;
  c.stored = 2000;
  c.burnin = 500;
  c.n_chains = 2;
  return c;
}

ChainConfig full_chain_config() {
  ChainConfig c;
  c.stored = 10000;
  c.burnin = 1000;
  c.n_chains = 2;
  return c;
}

void ScenarioSpec::validate() const {
  dgm.validate();
  const int k = dgm.n_outcomes();
  if (rules.empty())
    throw ValidationError("scenario: at least one decision rule is required");
  for (const DecisionRule& rule : rules) rule.validate(k);
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("scenario: alpha must lie in (0, 1)");
  if (populations.empty() && !with_dirichlet_reference)
    throw ValidationError(
        "scenario: at least one population spec or the reference method is "
        "required");
  for (const PopulationSpec& pop : populations) {
    if (pop.kind == PopulationSpec::Kind::FixedValues &&
        pop.x.size() != dgm.design.n_covariates())
      throw ValidationError(
          "scenario: fixed covariate values have the wrong length");
  }
  if (prior_tau <= 0.0)
    throw ValidationError("scenario: prior precision must be positive");
  if (dirichlet_alpha0 < 0.0)
    throw ValidationError("scenario: dirichlet prior mass must be >= 0");
  if (dirichlet_draws < 1)
    throw ValidationError("scenario: need at least one dirichlet draw");
  if (chains.stored < 1 || chains.burnin < 0 || chains.n_chains < 1)
    throw ValidationError("scenario: malformed chain configuration");
}

std::string rule_label(const DecisionRule& rule) {
  std::string label = to_string(rule.kind);
  if (rule.kind == RuleKind::Compensatory) {
    std::ostringstream w;
    w << "(";
    for (int i = 0; i < rule.weights.size(); ++i) {
      if (i) w << ",";
      w << rule.weights(i);
    }
    w << ")";
    label += w.str();
  }
  if (rule.direction == Direction::FailureIsGood) label += ":failure-is-good";
  return label;
}

CampaignResult run_replications(const ScenarioSpec& scenario, long R,
                                std::uint64_t seed, int n_workers) {
  scenario.validate();
  if (R < 1) throw ValidationError("campaign: need at least one replication");
  if (n_workers < 1)
    throw ValidationError("campaign: need at least one worker");

  const OutcomeMatrix h = OutcomeMatrix::build(scenario.dgm.n_outcomes());
  const NormalPrior prior =
      NormalPrior::diffuse(scenario.dgm.beta.n_free_categories(),
                           scenario.dgm.beta.design_width() + 1,
                           scenario.prior_tau);

  // Method table: one entry per population, plus the reference method.
  CampaignResult out;
  out.label = scenario.dgm.label;
  out.n_requested = R;
  out.seed = seed;
  int i_pop = 0;
  for (const PopulationSpec& pop : scenario.populations) {
    MethodResult m;
    m.population = pop.label.empty()
                       ? "population-" + std::to_string(i_pop)
                       : pop.label;
    m.method = pop.kind == PopulationSpec::Kind::FixedValues
                   ? "fixed-x"
                   : "empirical-marginal";
    m.truth = population_truth(scenario.dgm, pop);
    out.methods.push_back(std::move(m));
    ++i_pop;
  }
  if (scenario.with_dirichlet_reference) {
    MethodResult m;
    m.population = "marginal";
    m.method = "dirichlet-reference";
    PopulationSpec whole;  // unfiltered marginal estimand
    whole.kind = PopulationSpec::Kind::EmpiricalMarginal;
    m.truth = population_truth(scenario.dgm, whole);
    out.methods.push_back(std::move(m));
  }
  const int n_methods = static_cast<int>(out.methods.size());
  const int n_rules = static_cast<int>(scenario.rules.size());

  // Independent replications into preassigned slots: aggregation reads the
  // slots in index order, so worker count and finish order cannot matter.
  std::vector<RepRecord> records(R);
  auto worker = [&](int w) {
    for (long r = w; r < R; r += n_workers)
      records[r] = run_one(scenario, h, prior,
                           RngStream::derive(seed, static_cast<std::uint64_t>(r)));
  };
  if (n_workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker, w);
    for (std::thread& t : pool) t.join();
  }

  const int k = scenario.dgm.n_outcomes();
  Eigen::MatrixXd beta_sum = Eigen::MatrixXd::Zero(
      scenario.dgm.beta.n_free_categories(), scenario.dgm.beta.beta.cols());
  std::vector<Eigen::VectorXd> t1_sum(n_methods, Eigen::VectorXd::Zero(k));
  std::vector<Eigen::VectorXd> t0_sum(n_methods, Eigen::VectorXd::Zero(k));
  std::vector<Eigen::VectorXd> d_sum(n_methods, Eigen::VectorXd::Zero(k));
  std::vector<std::vector<long>> superior(n_methods,
                                          std::vector<long>(n_rules, 0));
  std::vector<std::vector<long>> inferior(n_methods,
                                          std::vector<long>(n_rules, 0));
  long completed = 0;
  for (long r = 0; r < R; ++r) {
    const RepRecord& rec = records[r];
    out.total_refits += rec.refits;
    if (!rec.ok) {
      out.failures.push_back({r, rec.error});
      continue;
    }
    ++completed;
    beta_sum += rec.beta_mean;
    for (int m = 0; m < n_methods; ++m) {
      t1_sum[m] += rec.theta1[m];
      t0_sum[m] += rec.theta0[m];
      d_sum[m] += rec.delta[m];
      for (int j = 0; j < n_rules; ++j) {
        if (rec.verdicts[m][j] == Verdict::Superior) ++superior[m][j];
        if (rec.verdicts[m][j] == Verdict::Inferior) ++inferior[m][j];
      }
    }
  }
  out.n_completed = completed;
  const double c = static_cast<double>(std::max(completed, 1L));
  out.beta_bias = beta_sum / c - scenario.dgm.beta.beta;
  for (int m = 0; m < n_methods; ++m) {
    MethodResult& mr = out.methods[m];
    mr.theta1_bias = t1_sum[m] / c - mr.truth.theta1;
    mr.theta0_bias = t0_sum[m] / c - mr.truth.theta0;
    mr.delta_bias = d_sum[m] / c - mr.truth.delta;
    for (int j = 0; j < n_rules; ++j) {
      RuleRates rates;
      rates.rule = scenario.rules[j];
      rates.label = rule_label(scenario.rules[j]);
      rates.superior_rate = superior[m][j] / c;
      rates.inferior_rate = inferior[m][j] / c;
      rates.superior_se =
          std::sqrt(rates.superior_rate * (1.0 - rates.superior_rate) / c);
      rates.inferior_se =
          std::sqrt(rates.inferior_rate * (1.0 - rates.inferior_rate) / c);
      mr.rules.push_back(std::move(rates));
    }
  }
  return out;
}

}  // namespace bmlr
