#pragma once

// Multinomial logistic model over joint outcome categories. Each non-reference
// category q carries its own coefficient vector beta^q over the design row
// (intercept first); the reference category is pinned at zero. Category
// probabilities follow from the stabilized inverse multinomial logit.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmlr/outcome_matrix.hpp"

namespace bmlr {

// How a subject's treatment indicator and covariates map to a design row.
// Layout (without intercept): [treatment, z_1 .. z_m, z_j * treatment for
// each j with interact[j]]. A fitted model persists this so that effect
// computation can substitute treatment arms mechanically.
struct DesignInfo {
  std::vector<std::string> covariates;  // names; size m
  std::vector<bool> interact;           // size m; true adds a z_j * T column

  int n_covariates() const { return static_cast<int>(covariates.size()); }
  int width() const;  // columns excluding intercept
  Eigen::VectorXd row(double treatment, const Eigen::VectorXd& z) const;
  std::vector<std::string> labels() const;  // column names, same order
  void validate() const;
};

// Coefficients for the Q-1 free categories: (Q-1) x (P+1), column 0 is the
// intercept and columns 1..P follow the DesignInfo layout.
struct CoefficientSet {
  Eigen::MatrixXd beta;

  int n_free_categories() const { return static_cast<int>(beta.rows()); }
  int design_width() const { return static_cast<int>(beta.cols()) - 1; }
};

// One trial: K binary outcomes, a design row per subject (no intercept
// column), and the treatment indicator duplicated for stratified summaries.
struct TrialDataset {
  Eigen::MatrixXi outcomes;   // n x K in {0,1}
  Eigen::MatrixXd design;     // n x P
  Eigen::VectorXi treatment;  // n in {0,1}

  int n() const { return static_cast<int>(outcomes.rows()); }
  int n_outcomes() const { return static_cast<int>(outcomes.cols()); }
  int design_width() const { return static_cast<int>(design.cols()); }
  void validate(const OutcomeMatrix& h) const;
};

// Linear predictors psi^q = beta^q_0 + x' beta^q for all free categories;
// x has length P (no intercept entry).
Eigen::VectorXd linear_predictors(const CoefficientSet& coef,
                                  const Eigen::VectorXd& x);

// Category probabilities from the Q-1 free linear predictors. The reference
// category contributes exp(0); the maximum is subtracted before
// exponentiation so arbitrarily large psi cannot overflow.
Eigen::VectorXd inverse_mlogit(const Eigen::VectorXd& psi);

// Joint log likelihood of the dataset under the coefficients.
double log_likelihood(const CoefficientSet& coef, const TrialDataset& data,
                      const OutcomeMatrix& h);

}  // namespace bmlr
