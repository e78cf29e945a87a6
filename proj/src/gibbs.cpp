#include "bmlr/gibbs.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "bmlr/errors.hpp"
#include "bmlr/polya_gamma.hpp"

namespace bmlr {

NormalPrior NormalPrior::diffuse(int n_free_categories, int n_coef,
                                 double tau) {
  if (!(tau > 0.0))
    throw ValidationError("prior: precision scale must be positive");
  NormalPrior p;
  p.mean = Eigen::MatrixXd::Zero(n_free_categories, n_coef);
  p.precision.assign(
      n_free_categories,
      Eigen::MatrixXd::Identity(n_coef, n_coef) * tau);
  return p;
}

void NormalPrior::validate(int n_free_categories, int n_coef) const {
  if (mean.rows() != n_free_categories || mean.cols() != n_coef)
    throw ValidationError("prior: mean must be (Q-1) x (P+1)");
  if (static_cast<int>(precision.size()) != n_free_categories)
    throw ValidationError("prior: need one precision matrix per free category");
  for (int q = 0; q < n_free_categories; ++q) {
    const auto& b = precision[q];
    if (b.rows() != n_coef || b.cols() != n_coef)
      throw ValidationError("prior: precision " + std::to_string(q + 1) +
                            " has wrong dimensions");
    if (!b.isApprox(b.transpose(), 1e-10))
      throw ValidationError("prior: precision " + std::to_string(q + 1) +
                            " is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success)
      throw ValidationError("prior: precision " + std::to_string(q + 1) +
                            " is not positive definite");
  }
}

CoefficientSet PosteriorSample::draw(int chain, long l) const {
  CoefficientSet c;
  c.beta.resize(n_free_categories, n_coef);
  const Eigen::MatrixXd& m = chains.at(chain);
  for (int q = 0; q < n_free_categories; ++q)
    for (int p = 0; p < n_coef; ++p) c.beta(q, p) = m(l, q * n_coef + p);
  return c;
}

CoefficientSet PosteriorSample::pooled(long l) const {
  long per = draws_per_chain();
  return draw(static_cast<int>(l / per), l % per);
}

GibbsChain::GibbsChain(const TrialDataset& data, const OutcomeMatrix& h,
                       const NormalPrior& prior, RngStream rng)
    : n_(data.n()),
      qm1_(h.n_categories() - 1),
      p1_(data.design_width() + 1),
      prior_(&prior),
      rng_(rng) {
  x_.resize(n_, p1_);
  x_.col(0).setOnes();
  x_.rightCols(p1_ - 1) = data.design;
  kappa_.setConstant(n_, qm1_, -0.5);
  Eigen::VectorXi y(h.n_outcomes());
  for (int i = 0; i < n_; ++i) {
    y = data.outcomes.row(i).transpose();
    int cat = h.encode(y);
    if (cat != h.reference()) kappa_(i, cat) = 0.5;
  }
  beta_ = prior.mean;
  psi_.noalias() = x_ * beta_.transpose();
  prior_shift_.reserve(qm1_);
  for (int q = 0; q < qm1_; ++q)
    prior_shift_.push_back(prior.precision[q] * prior.mean.row(q).transpose());
  omega_.resize(n_);
  c_.resize(n_);
  rhs_.resize(p1_);
  z_.resize(p1_);
  betaq_.resize(p1_);
  a_.resize(p1_, p1_);
  wx_.resize(n_, p1_);
}

void GibbsChain::sweep() {
  ++iteration_;
  for (int q = 0; q < qm1_; ++q) {
    // Offset c_i = log sum of exp(psi^m_i) over every category m != q,
    // reference included via exp(0); max-shifted for overflow safety.
    for (int i = 0; i < n_; ++i) {
      double mx = 0.0;
      for (int m = 0; m < qm1_; ++m)
        if (m != q && psi_(i, m) > mx) mx = psi_(i, m);
      double acc = std::exp(-mx);
      for (int m = 0; m < qm1_; ++m)
        if (m != q) acc += std::exp(psi_(i, m) - mx);
      double c = mx + std::log(acc);
      double eta = psi_(i, q) - c;
      if (!std::isfinite(eta))
        throw ChainError("non-finite linear predictor for category " +
                             std::to_string(q + 1) + " at sweep " +
                             std::to_string(iteration_),
                         iteration_);
      c_(i) = c;
      omega_(i) = pg1_draw(eta, rng_);
    }
    // Conditional normal: precision A = X' Omega X + Bq,
    // shift = X'(kappa_q + Omega c) + Bq bq.
    wx_.noalias() = omega_.asDiagonal() * x_;
    a_.noalias() = x_.transpose() * wx_;
    a_ += prior_->precision[q];
    rhs_.noalias() =
        x_.transpose() * (kappa_.col(q) + omega_.cwiseProduct(c_)).matrix();
    rhs_ += prior_shift_[q];
    Eigen::LLT<Eigen::MatrixXd> llt(a_);
    if (llt.info() != Eigen::Success)
      throw ChainError(
          "conditional coefficient covariance for category " +
              std::to_string(q + 1) + " is not positive definite at sweep " +
              std::to_string(iteration_),
          iteration_);
    betaq_ = llt.solve(rhs_);
    for (int p = 0; p < p1_; ++p) z_(p) = rng_.normal();
    betaq_ += llt.matrixU().solve(z_);
    if (!betaq_.allFinite())
      throw ChainError("non-finite coefficient draw for category " +
                           std::to_string(q + 1) + " at sweep " +
                           std::to_string(iteration_),
                       iteration_);
    beta_.row(q) = betaq_.transpose();
    psi_.col(q).noalias() = x_ * betaq_;
  }
}

void GibbsChain::flatten_into(Eigen::MatrixXd& draws, long row) const {
  for (int q = 0; q < qm1_; ++q)
    for (int p = 0; p < p1_; ++p) draws(row, q * p1_ + p) = beta_(q, p);
}

namespace {

void run_one_chain(const TrialDataset& data, const OutcomeMatrix& h,
                   const NormalPrior& prior, const ChainConfig& config,
                   RngStream rng, Eigen::MatrixXd& out) {
  GibbsChain chain(data, h, prior, rng);
  for (long it = 0; it < config.burnin; ++it) chain.sweep();
  for (long l = 0; l < config.stored; ++l) {
    chain.sweep();
    chain.flatten_into(out, l);
  }
}

}  // namespace

PosteriorSample run_chains(const TrialDataset& data, const OutcomeMatrix& h,
                           const NormalPrior& prior, const ChainConfig& config,
                           std::uint64_t seed) {
  data.validate(h);
  int qm1 = h.n_categories() - 1;
  int p1 = data.design_width() + 1;
  prior.validate(qm1, p1);
  if (config.stored < 1)
    throw ValidationError("chain config: stored draws must be at least 1");
  if (config.burnin < 0)
    throw ValidationError("chain config: burnin cannot be negative");
  if (config.n_chains < 1)
    throw ValidationError("chain config: need at least one chain");

  PosteriorSample out;
  out.n_free_categories = qm1;
  out.n_coef = p1;
  out.seed = seed;
  out.burnin = config.burnin;
  out.chains.assign(config.n_chains,
                    Eigen::MatrixXd(config.stored, qm1 * p1));

  RngStream root(seed);
  if (config.parallel && config.n_chains > 1) {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errs(config.n_chains);
    for (int j = 0; j < config.n_chains; ++j) {
      threads.emplace_back([&, j] {
        try {
          run_one_chain(data, h, prior, config, root.substream(j),
                        out.chains[j]);
        } catch (...) {
          errs[j] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  } else {
    for (int j = 0; j < config.n_chains; ++j)
      run_one_chain(data, h, prior, config, root.substream(j), out.chains[j]);
  }

  if (config.n_chains >= 2 && config.stored >= 10) {
    out.gelman_rubin = gelman_rubin_mpsrf(out.chains);
    out.converged = out.gelman_rubin < 1.10;
  } else {
    out.gelman_rubin = std::numeric_limits<double>::quiet_NaN();
    out.converged = true;  // diagnostic unavailable with a single chain
  }
  return out;
}

double gelman_rubin_mpsrf(const std::vector<Eigen::MatrixXd>& chains) {
  int m = static_cast<int>(chains.size());
  if (m < 2)
    throw ValidationError("gelman-rubin: need at least two chains");
  long n = chains.front().rows();
  long d = chains.front().cols();
  for (const auto& c : chains)
    if (c.rows() != n || c.cols() != d)
      throw ValidationError("gelman-rubin: chains must have equal shape");
  if (n < 10)
    throw ValidationError("gelman-rubin: need at least ten draws per chain");

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd b_over_n = Eigen::MatrixXd::Zero(d, d);
  Eigen::RowVectorXd grand = Eigen::RowVectorXd::Zero(d);
  std::vector<Eigen::RowVectorXd> means;
  means.reserve(m);
  for (const auto& c : chains) {
    means.push_back(c.colwise().mean());
    grand += means.back();
  }
  grand /= m;
  for (int j = 0; j < m; ++j) {
    Eigen::MatrixXd centered = chains[j].rowwise() - means[j];
    w.noalias() += centered.transpose() * centered / double(n - 1);
    Eigen::RowVectorXd dm = means[j] - grand;
    b_over_n.noalias() += dm.transpose() * dm;
  }
  w /= m;
  b_over_n /= (m - 1);

  // Degenerate chains: no within variance at all.
  if (w.trace() <= 0.0) {
    return b_over_n.trace() <= 0.0
               ? std::sqrt(double(n - 1) / n)
               : std::numeric_limits<double>::infinity();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(w);
  if (llt.info() != Eigen::Success) {
    // Ridge keeps the generalized problem well posed for rank-deficient W.
    w.diagonal().array() += 1e-12 * w.trace() / double(d);
    llt.compute(w);
    if (llt.info() != Eigen::Success)
      throw ValidationError("gelman-rubin: within-chain covariance is singular");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(b_over_n, w,
                                                               Eigen::EigenvaluesOnly);
  double lambda = es.eigenvalues().maxCoeff();
  double nn = double(n);
  return std::sqrt((nn - 1.0) / nn + (double(m) + 1.0) / double(m) * lambda);
}

}  // namespace bmlr
