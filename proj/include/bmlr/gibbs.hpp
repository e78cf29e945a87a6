#pragma once

// Polya-Gamma Gibbs sampler for the multivariate binary logistic model.
// Each sweep visits the free categories in ascending order; for category q
// it draws the local augmentation omega_i ~ PG(1, psi^q_i - c_i) and then
// the coefficient block beta^q from its exact multivariate normal
// conditional, where c_i collapses the remaining categories (including the
// reference, which contributes exp(0)) into a binary-logistic offset.
//
// Chains run on independent RNG substreams, so results are bitwise
// reproducible for a given seed regardless of threading.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bmlr/model.hpp"
#include "bmlr/outcome_matrix.hpp"
#include "bmlr/rng.hpp"

namespace bmlr {

// Independent normal prior per free category: beta^q ~ N(mean_q, Bq^{-1})
// with Bq the precision matrix.
struct NormalPrior {
  Eigen::MatrixXd mean;                    // (Q-1) x (P+1)
  std::vector<Eigen::MatrixXd> precision;  // Q-1 matrices, (P+1) x (P+1)

  // Zero mean, precision tau * I (tau = 0.01 gives prior variance 100).
  static NormalPrior diffuse(int n_free_categories, int n_coef,
                             double tau = 0.01);
  void validate(int n_free_categories, int n_coef) const;
};

struct ChainConfig {
  long stored = 10000;  // draws kept per chain
  long burnin = 1000;   // discarded sweeps before storage
  int n_chains = 2;
  bool parallel = true;  // run chains on separate threads
};

// Stored posterior draws. Within a chain, draw l is the flattened beta with
// index q * (P+1) + p, i.e. coefficients of category q occupy a contiguous
// block in design-column order.
struct PosteriorSample {
  std::vector<Eigen::MatrixXd> chains;  // each stored x (Q-1)(P+1)
  int n_free_categories = 0;
  int n_coef = 0;  // P+1
  std::uint64_t seed = 0;
  long burnin = 0;
  double gelman_rubin = 0.0;  // NaN when only one chain was run
  bool converged = false;

  int n_chains() const { return static_cast<int>(chains.size()); }
  long draws_per_chain() const {
    return chains.empty() ? 0 : chains.front().rows();
  }
  long total_draws() const { return n_chains() * draws_per_chain(); }

  // Draw l of a chain as a coefficient matrix.
  CoefficientSet draw(int chain, long l) const;
  // Pooled indexing across chains in chain-major order.
  CoefficientSet pooled(long l) const;
};

// One chain with explicit sweep control; run_chains is the usual entry.
class GibbsChain {
 public:
  GibbsChain(const TrialDataset& data, const OutcomeMatrix& h,
             const NormalPrior& prior, RngStream rng);

  // One full update of all free categories. Throws ChainError with the
  // sweep index if a conditional precision fails its Cholesky.
  void sweep();

  const Eigen::MatrixXd& beta() const { return beta_; }
  long iteration() const { return iteration_; }
  void flatten_into(Eigen::MatrixXd& draws, long row) const;

 private:
  int n_, qm1_, p1_;
  Eigen::MatrixXd x_;       // n x (P+1), intercept first
  Eigen::MatrixXd kappa_;   // n x (Q-1), entries I(y_i = q) - 1/2
  Eigen::MatrixXd beta_;    // (Q-1) x (P+1)
  Eigen::MatrixXd psi_;     // n x (Q-1)
  const NormalPrior* prior_;
  std::vector<Eigen::VectorXd> prior_shift_;  // Bq * bq per category
  RngStream rng_;
  long iteration_ = 0;
  // scratch
  Eigen::VectorXd omega_, c_, rhs_, z_, betaq_;
  Eigen::MatrixXd a_, wx_;
};

// Runs config.n_chains chains from the given seed (chain j uses substream
// j), initializing every chain at the prior mean. With two or more chains
// the multivariate potential-scale-reduction factor is computed and
// `converged` flags values below 1.10.
PosteriorSample run_chains(const TrialDataset& data, const OutcomeMatrix& h,
                           const NormalPrior& prior, const ChainConfig& config,
                           std::uint64_t seed);

// Brooks-Gelman multivariate PSRF over equally sized chains (rows = draws).
// Requires at least two chains of at least ten draws.
double gelman_rubin_mpsrf(const std::vector<Eigen::MatrixXd>& chains);

}  // namespace bmlr
