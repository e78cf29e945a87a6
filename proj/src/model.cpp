#include "bmlr/model.hpp"

#include <cmath>
#include <string>

#include "bmlr/errors.hpp"

namespace bmlr {

int DesignInfo::width() const {
  int extra = 0;
  for (bool b : interact)
    if (b) ++extra;
  return 1 + n_covariates() + extra;
}

void DesignInfo::validate() const {
  if (interact.size() != covariates.size())
    throw ValidationError("design info: interact flags must match covariates");
  for (std::size_t i = 0; i < covariates.size(); ++i)
    if (covariates[i].empty())
      throw ValidationError("design info: covariate names must be non-empty");
}

Eigen::VectorXd DesignInfo::row(double treatment,
                                const Eigen::VectorXd& z) const {
  if (z.size() != n_covariates())
    throw ValidationError("design row: expected " +
                          std::to_string(n_covariates()) + " covariates, got " +
                          std::to_string(z.size()));
  Eigen::VectorXd x(width());
  x(0) = treatment;
  int col = 1;
  for (int j = 0; j < n_covariates(); ++j) x(col++) = z(j);
  for (int j = 0; j < n_covariates(); ++j)
    if (interact[j]) x(col++) = z(j) * treatment;
  return x;
}

std::vector<std::string> DesignInfo::labels() const {
  std::vector<std::string> out;
  out.reserve(width());
  out.push_back("treat");
  for (const auto& name : covariates) out.push_back(name);
  for (std::size_t j = 0; j < covariates.size(); ++j)
    if (interact[j]) out.push_back(covariates[j] + ":treat");
  return out;
}

void TrialDataset::validate(const OutcomeMatrix& h) const {
  int nn = n();
  if (nn == 0) throw ValidationError("dataset: no subjects");
  if (n_outcomes() != h.n_outcomes())
    throw ValidationError("dataset: outcome columns (" +
                          std::to_string(n_outcomes()) +
                          ") do not match the outcome matrix (" +
                          std::to_string(h.n_outcomes()) + ")");
  if (design.rows() != nn || treatment.size() != nn)
    throw ValidationError("dataset: design and treatment must have one row per subject");
  for (int i = 0; i < nn; ++i) {
    for (int k = 0; k < n_outcomes(); ++k)
      if (outcomes(i, k) != 0 && outcomes(i, k) != 1)
        throw ValidationError("dataset: outcome not in {0,1} at subject " +
                              std::to_string(i + 1));
    if (treatment(i) != 0 && treatment(i) != 1)
      throw ValidationError("dataset: treatment not in {0,1} at subject " +
                            std::to_string(i + 1));
    for (int p = 0; p < design_width(); ++p)
      if (!std::isfinite(design(i, p)))
        throw ValidationError("dataset: non-finite design entry at subject " +
                              std::to_string(i + 1));
  }
}

Eigen::VectorXd linear_predictors(const CoefficientSet& coef,
                                  const Eigen::VectorXd& x) {
  if (x.size() != coef.design_width())
    throw ValidationError("linear predictors: design row width mismatch");
  return coef.beta.col(0) + coef.beta.rightCols(coef.design_width()) * x;
}

Eigen::VectorXd inverse_mlogit(const Eigen::VectorXd& psi) {
  int q = static_cast<int>(psi.size()) + 1;
  double m = 0.0;  // include the reference category's psi = 0
  for (int i = 0; i < q - 1; ++i) {
    if (!std::isfinite(psi(i)))
      throw ValidationError("inverse_mlogit: non-finite linear predictor");
    m = std::max(m, psi(i));
  }
  Eigen::VectorXd phi(q);
  double denom = std::exp(-m);
  phi(q - 1) = denom;
  for (int i = 0; i < q - 1; ++i) {
    phi(i) = std::exp(psi(i) - m);
    denom += phi(i);
  }
  phi /= denom;
  return phi;
}

double log_likelihood(const CoefficientSet& coef, const TrialDataset& data,
                      const OutcomeMatrix& h) {
  data.validate(h);
  if (coef.n_free_categories() != h.n_categories() - 1)
    throw ValidationError("log likelihood: coefficient rows must equal Q-1");
  if (coef.design_width() != data.design_width())
    throw ValidationError("log likelihood: design width mismatch");
  double total = 0.0;
  Eigen::VectorXi y(h.n_outcomes());
  for (int i = 0; i < data.n(); ++i) {
    Eigen::VectorXd psi = linear_predictors(coef, data.design.row(i).transpose());
    // log softmax over (psi, 0) evaluated at the subject's category
    double m = 0.0;
    for (int r = 0; r < psi.size(); ++r) m = std::max(m, psi(r));
    double lse = std::exp(-m);
    for (int r = 0; r < psi.size(); ++r) lse += std::exp(psi(r) - m);
    lse = m + std::log(lse);
    y = data.outcomes.row(i).transpose();
    int cat = h.encode(y);
    double psi_cat = (cat == h.reference()) ? 0.0 : psi(cat);
    total += psi_cat - lse;
  }
  return total;
}

}  // namespace bmlr
