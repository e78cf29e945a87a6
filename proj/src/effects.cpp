#include "bmlr/effects.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bmlr/errors.hpp"

namespace bmlr {

namespace {

void validate_simplex(const Eigen::VectorXd& phi, const OutcomeMatrix& h,
                      const char* who) {
  if (phi.size() != h.n_categories())
    throw ValidationError(std::string(who) + ": expected " +
                          std::to_string(h.n_categories()) +
                          " joint probabilities, got " +
                          std::to_string(phi.size()));
  double sum = 0.0;
  for (int q = 0; q < phi.size(); ++q) {
    if (!std::isfinite(phi(q)) || phi(q) < 0.0)
      throw ValidationError(std::string(who) +
                            ": joint probabilities must be nonnegative");
    sum += phi(q);
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ValidationError(std::string(who) +
                          ": joint probabilities must sum to 1");
}

void validate_posterior_shape(const PosteriorSample& post,
                              const DesignInfo& design,
                              const OutcomeMatrix& h) {
  design.validate();
  if (post.total_draws() < 1)
    throw ValidationError("effects: posterior sample has no draws");
  if (post.n_free_categories != h.n_categories() - 1)
    throw ValidationError("effects: posterior categories do not match the outcome matrix");
  if (post.n_coef != design.width() + 1)
    throw ValidationError("effects: posterior was fitted with a different design layout");
}

// One stabilized softmax row including the implicit reference category;
// mirrors inverse_mlogit's arithmetic without per-row allocation.
void accumulate_softmax_row(const Eigen::MatrixXd& psi, long row,
                            Eigen::VectorXd& phi_sum,
                            Eigen::VectorXd& scratch) {
  const int qm1 = static_cast<int>(psi.cols());
  double m = 0.0;
  for (int c = 0; c < qm1; ++c) {
    if (!std::isfinite(psi(row, c)))
      throw ValidationError("inverse_mlogit: non-finite linear predictor");
    m = std::max(m, psi(row, c));
  }
  double denom = std::exp(-m);
  scratch(qm1) = denom;
  for (int c = 0; c < qm1; ++c) {
    scratch(c) = std::exp(psi(row, c) - m);
    denom += scratch(c);
  }
  phi_sum += scratch / denom;
}

std::string category_pattern(const OutcomeMatrix& h, int q) {
  std::string s;
  for (int k = 0; k < h.n_outcomes(); ++k)
    s.push_back(h.outcome_in_category(q, k) ? '1' : '0');
  return s;
}

void fill_theta_delta(EffectSample& out, const OutcomeMatrix& h) {
  const long draws = out.phi_treat.rows();
  const int k = h.n_outcomes();
  out.theta_treat.resize(draws, k);
  out.theta_control.resize(draws, k);
  out.delta.resize(draws, k);
  for (long l = 0; l < draws; ++l) {
    for (int j = 0; j < k; ++j) {
      double t1 = 0.0, t0 = 0.0;
      for (int q = 0; q < h.n_categories(); ++q) {
        if (h.outcome_in_category(q, j)) {
          t1 += out.phi_treat(l, q);
          t0 += out.phi_control(l, q);
        }
      }
      out.theta_treat(l, j) = t1;
      out.theta_control(l, j) = t0;
      out.delta(l, j) = t1 - t0;
    }
  }
}

}  // namespace

Eigen::VectorXd phi_to_theta(const Eigen::VectorXd& phi,
                             const OutcomeMatrix& h) {
  validate_simplex(phi, h, "phi_to_theta");
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(h.n_outcomes());
  for (int k = 0; k < h.n_outcomes(); ++k)
    for (int q = 0; q < h.n_categories(); ++q)
      if (h.outcome_in_category(q, k)) theta(k) += phi(q);
  return theta;
}

Eigen::VectorXd theta_to_delta(const Eigen::VectorXd& theta1,
                               const Eigen::VectorXd& theta0) {
  if (theta1.size() != theta0.size())
    throw ValidationError("theta_to_delta: arm lengths differ");
  for (int k = 0; k < theta1.size(); ++k)
    if (!std::isfinite(theta1(k)) || !std::isfinite(theta0(k)) ||
        theta1(k) < 0.0 || theta1(k) > 1.0 || theta0(k) < 0.0 ||
        theta0(k) > 1.0)
      throw ValidationError("theta_to_delta: success probabilities must lie in [0,1]");
  return theta1 - theta0;
}

void validate_weights(const Eigen::VectorXd& w, int n_outcomes) {
  if (w.size() != n_outcomes)
    throw ValidationError("weights: expected " + std::to_string(n_outcomes) +
                          " entries, got " + std::to_string(w.size()));
  double sum = 0.0;
  for (int k = 0; k < w.size(); ++k) {
    if (!std::isfinite(w(k)) || w(k) < 0.0)
      throw ValidationError("weights: entries must be nonnegative");
    sum += w(k);
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("weights: entries must sum to 1");
}

double weighted_delta(const Eigen::VectorXd& delta, const Eigen::VectorXd& w) {
  validate_weights(w, static_cast<int>(delta.size()));
  return w.dot(delta);
}

Eigen::VectorXd weighted_delta_draws(const EffectSample& effects,
                                     const Eigen::VectorXd& w) {
  validate_weights(w, effects.n_outcomes());
  return effects.delta * w;
}

bool SubpopulationFilter::keeps(const DesignInfo& design,
                                const Eigen::VectorXd& design_row) const {
  if (design_row.size() != design.width())
    throw ValidationError("filter: design row width mismatch");
  auto covariate_value = [&](int j) {
    if (j < 0 || j >= design.n_covariates())
      throw ValidationError("filter: covariate index " + std::to_string(j) +
                            " out of range");
    return design_row(1 + j);  // column 0 is the treatment indicator
  };
  for (const auto& iv : intervals) {
    double v = covariate_value(iv.covariate);
    if (!(v >= iv.lo && v < iv.hi)) return false;
  }
  for (const auto& ex : exacts)
    if (covariate_value(ex.covariate) != ex.value) return false;
  return true;
}

std::vector<int> SubpopulationFilter::retained(const DesignInfo& design,
                                               const TrialDataset& data) const {
  if (data.design_width() != design.width())
    throw ValidationError("filter: dataset does not match the design layout");
  std::vector<int> idx;
  Eigen::VectorXd row(design.width());
  for (int i = 0; i < data.n(); ++i) {
    row = data.design.row(i).transpose();
    if (keeps(design, row)) idx.push_back(i);
  }
  return idx;
}

TrialDataset filter_rows(const TrialDataset& data, const DesignInfo& design,
                         const SubpopulationFilter& filter) {
  std::vector<int> idx = filter.retained(design, data);
  TrialDataset out;
  out.outcomes.resize(idx.size(), data.n_outcomes());
  out.design.resize(idx.size(), data.design_width());
  out.treatment.resize(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.outcomes.row(r) = data.outcomes.row(idx[r]);
    out.design.row(r) = data.design.row(idx[r]);
    out.treatment(r) = data.treatment(idx[r]);
  }
  return out;
}

EffectSample effects_at_fixed_x(const PosteriorSample& post,
                                const DesignInfo& design,
                                const OutcomeMatrix& h,
                                const Eigen::VectorXd& z) {
  validate_posterior_shape(post, design, h);
  for (int j = 0; j < z.size(); ++j)
    if (!std::isfinite(z(j)))
      throw ValidationError("effects: covariate values must be finite");
  const Eigen::VectorXd x1 = design.row(1.0, z);
  const Eigen::VectorXd x0 = design.row(0.0, z);
  const long draws = post.total_draws();

  EffectSample out;
  out.phi_treat.resize(draws, h.n_categories());
  out.phi_control.resize(draws, h.n_categories());
  for (long l = 0; l < draws; ++l) {
    CoefficientSet coef = post.pooled(l);
    out.phi_treat.row(l) = inverse_mlogit(linear_predictors(coef, x1));
    out.phi_control.row(l) = inverse_mlogit(linear_predictors(coef, x0));
  }
  fill_theta_delta(out, h);
  return out;
}

EffectSample effects_empirical_marginal(const PosteriorSample& post,
                                        const DesignInfo& design,
                                        const OutcomeMatrix& h,
                                        const TrialDataset& data,
                                        const SubpopulationFilter& filter) {
  validate_posterior_shape(post, design, h);
  data.validate(h);
  if (data.design_width() != design.width())
    throw ValidationError("effects: dataset does not match the design layout");

  std::vector<int> retained = filter.retained(design, data);
  std::vector<int> arm_rows[2];
  for (int i : retained) arm_rows[data.treatment(i)].push_back(i);
  for (int t = 0; t < 2; ++t)
    if (arm_rows[t].empty())
      throw EmptySubpopulationError(
          "empirical marginalization: no retained subjects in arm T=" +
          std::to_string(t));

  Eigen::MatrixXd x_arm[2];
  for (int t = 0; t < 2; ++t) {
    x_arm[t].resize(arm_rows[t].size(), design.width());
    for (std::size_t r = 0; r < arm_rows[t].size(); ++r)
      x_arm[t].row(r) = data.design.row(arm_rows[t][r]);
  }

  const long draws = post.total_draws();
  const int p = design.width();
  EffectSample out;
  out.phi_treat.resize(draws, h.n_categories());
  out.phi_control.resize(draws, h.n_categories());
  Eigen::MatrixXd psi;
  Eigen::VectorXd phi_sum(h.n_categories());
  Eigen::VectorXd scratch(h.n_categories());
  for (long l = 0; l < draws; ++l) {
    CoefficientSet coef = post.pooled(l);
    for (int t = 0; t < 2; ++t) {
      psi.noalias() = x_arm[t] * coef.beta.rightCols(p).transpose();
      psi.rowwise() += coef.beta.col(0).transpose();
      phi_sum.setZero();
      for (long r = 0; r < psi.rows(); ++r)
        accumulate_softmax_row(psi, r, phi_sum, scratch);
      phi_sum /= static_cast<double>(psi.rows());
      if (t == 1)
        out.phi_treat.row(l) = phi_sum;
      else
        out.phi_control.row(l) = phi_sum;
    }
  }
  fill_theta_delta(out, h);
  return out;
}

EffectSample compute_effects(const PosteriorSample& post,
                             const DesignInfo& design, const OutcomeMatrix& h,
                             const TrialDataset& data,
                             const PopulationSpec& spec) {
  if (spec.kind == PopulationSpec::Kind::FixedValues)
    return effects_at_fixed_x(post, design, h, spec.x);
  return effects_empirical_marginal(post, design, h, data, spec.filter);
}

DirichletPosterior dirichlet_posterior(const TrialDataset& data,
                                       const OutcomeMatrix& h,
                                       const Eigen::VectorXd& alpha0) {
  data.validate(h);
  if (alpha0.size() != h.n_categories())
    throw ValidationError("dirichlet: prior must have one entry per category");
  for (int q = 0; q < alpha0.size(); ++q)
    if (!std::isfinite(alpha0(q)) || alpha0(q) < 0.0)
      throw ValidationError("dirichlet: prior parameters must be nonnegative");

  DirichletPosterior out;
  out.alpha0 = alpha0;
  out.alpha_treat = alpha0;
  out.alpha_control = alpha0;
  Eigen::VectorXi y(h.n_outcomes());
  for (int i = 0; i < data.n(); ++i) {
    y = data.outcomes.row(i).transpose();
    int q = h.encode(y);
    if (data.treatment(i) == 1)
      out.alpha_treat(q) += 1.0;
    else
      out.alpha_control(q) += 1.0;
  }
  return out;
}

Eigen::MatrixXd dirichlet_sample(const Eigen::VectorXd& alpha, long n_draws,
                                 RngStream& rng) {
  if (n_draws < 1) throw ValidationError("dirichlet sample: need at least one draw");
  for (int q = 0; q < alpha.size(); ++q)
    if (!std::isfinite(alpha(q)) || alpha(q) <= 0.0)
      throw ValidationError("dirichlet sample: parameters must be positive");
  Eigen::MatrixXd out(n_draws, alpha.size());
  for (long l = 0; l < n_draws; ++l) {
    double sum = 0.0;
    for (int q = 0; q < alpha.size(); ++q) {
      out(l, q) = rng.gamma(alpha(q));
      sum += out(l, q);
    }
    if (!(sum > 0.0) || !std::isfinite(sum))
      throw ValidationError("dirichlet sample: degenerate draw, parameters too small");
    out.row(l) /= sum;
  }
  return out;
}

EffectSample dirichlet_reference(const TrialDataset& data,
                                 const OutcomeMatrix& h,
                                 const Eigen::VectorXd& alpha0, long n_draws,
                                 RngStream& rng) {
  DirichletPosterior dp = dirichlet_posterior(data, h, alpha0);
  for (int t = 0; t < 2; ++t) {
    const Eigen::VectorXd& a = (t == 1) ? dp.alpha_treat : dp.alpha_control;
    for (int q = 0; q < a.size(); ++q)
      if (a(q) <= 0.0)
        throw ImproperPosteriorError(
            "dirichlet posterior: category " + std::to_string(q) +
            " (pattern " + category_pattern(h, q) + ") has zero mass in arm T=" +
            std::to_string(t) + "; supply a positive prior for it");
  }
  EffectSample out;
  out.phi_treat = dirichlet_sample(dp.alpha_treat, n_draws, rng);
  out.phi_control = dirichlet_sample(dp.alpha_control, n_draws, rng);
  fill_theta_delta(out, h);
  return out;
}

double phi_pair_correlation(const Eigen::VectorXd& phi,
                            const OutcomeMatrix& h) {
  if (h.n_outcomes() != 2)
    throw ValidationError("pair correlation: defined for exactly two outcomes");
  validate_simplex(phi, h, "pair correlation");
  Eigen::VectorXd theta = phi_to_theta(phi, h);
  double v = theta(0) * (1.0 - theta(0)) * theta(1) * (1.0 - theta(1));
  if (v <= 0.0)
    throw ValidationError("pair correlation: a marginal probability is degenerate");
  // category 0 is the both-successes pattern
  return (phi(0) - theta(0) * theta(1)) / std::sqrt(v);
}

QuantitySummary summarize_draws(Eigen::VectorXd draws) {
  const long n = draws.size();
  if (n < 1) throw ValidationError("summary: no draws");
  QuantitySummary s;
  s.mean = draws.mean();
  std::sort(draws.data(), draws.data() + n);
  auto quantile = [&](double p) {
    double pos = p * static_cast<double>(n - 1);
    long lo = static_cast<long>(pos);
    if (lo >= n - 1) return draws(n - 1);
    double frac = pos - static_cast<double>(lo);
    return draws(lo) + frac * (draws(lo + 1) - draws(lo));
  };
  s.lo = quantile(0.025);
  s.hi = quantile(0.975);
  return s;
}

EffectSummary summarize(const EffectSample& effects) {
  if (effects.n_draws() < 1) throw ValidationError("summary: no draws");
  EffectSummary out;
  for (int k = 0; k < effects.n_outcomes(); ++k) {
    out.theta_treat.push_back(summarize_draws(effects.theta_treat.col(k)));
    out.theta_control.push_back(summarize_draws(effects.theta_control.col(k)));
    out.delta.push_back(summarize_draws(effects.delta.col(k)));
  }
  return out;
}

}  // namespace bmlr
