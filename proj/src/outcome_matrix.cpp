#include "bmlr/outcome_matrix.hpp"

#include <string>

#include "bmlr/errors.hpp"

namespace bmlr {

OutcomeMatrix OutcomeMatrix::build(int n_outcomes) {
  if (n_outcomes < 1 || n_outcomes > 10)
    throw UnsupportedError("outcome matrix: n_outcomes must be in [1, 10], got " +
                           std::to_string(n_outcomes));
  int k = n_outcomes;
  int q = 1 << k;
  Eigen::MatrixXi h(q, k);
  for (int row = 0; row < q; ++row) {
    int value = q - 1 - row;  // row 0 holds all ones, row q-1 all zeros
    for (int col = 0; col < k; ++col)
      h(row, col) = (value >> (k - 1 - col)) & 1;  // outcome 1 is the MSB
  }
  return OutcomeMatrix(k, q, std::move(h));
}

int OutcomeMatrix::encode(const Eigen::VectorXi& outcomes) const {
  if (outcomes.size() != k_)
    throw ValidationError("encode: expected " + std::to_string(k_) +
                          " outcomes, got " + std::to_string(outcomes.size()));
  int value = 0;
  for (int col = 0; col < k_; ++col) {
    int y = outcomes(col);
    if (y != 0 && y != 1)
      throw ValidationError("encode: outcomes must be 0 or 1");
    value = (value << 1) | y;
  }
  return q_ - 1 - value;
}

Eigen::VectorXi OutcomeMatrix::decode(int category) const {
  if (category < 0 || category >= q_)
    throw ValidationError("decode: category out of range");
  return h_.row(category).transpose();
}

}  // namespace bmlr
