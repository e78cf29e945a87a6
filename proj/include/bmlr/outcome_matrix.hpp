#pragma once

// Joint response bookkeeping for K binary outcomes. The Q = 2^K joint
// configurations are enumerated by a fixed Q x K binary matrix H whose row q
// (1-based) is the K-bit expansion of Q - q with outcome 1 as the most
// significant bit. Hence row 1 is all ones, row Q is all zeros, and the last
// category (no successes) acts as the reference category of the multinomial
// logistic model.

#include <vector>

#include <Eigen/Dense>

namespace bmlr {

class OutcomeMatrix {
 public:
  // n_outcomes must lie in [1, 10]; Q grows as 2^K.
  static OutcomeMatrix build(int n_outcomes);

  int n_outcomes() const { return k_; }
  int n_categories() const { return q_; }

  // Q x K matrix of {0,1}.
  const Eigen::MatrixXi& rows() const { return h_; }

  // 0-based category index of a K-vector of {0,1} outcomes.
  int encode(const Eigen::VectorXi& outcomes) const;

  // Inverse of encode; category is 0-based.
  Eigen::VectorXi decode(int category) const;

  // True when outcome k is a success in the given category (H entry is 1).
  bool outcome_in_category(int category, int k) const {
    return h_(category, k) == 1;
  }

  // 0-based index of the reference category (all outcomes zero).
  int reference() const { return q_ - 1; }

 private:
  OutcomeMatrix(int k, int q, Eigen::MatrixXi h)
      : k_(k), q_(q), h_(std::move(h)) {}
  int k_;
  int q_;
  Eigen::MatrixXi h_;
};

}  // namespace bmlr
