#include "bmlr/decision.hpp"

#include <cmath>
#include <string>

#include "bmlr/errors.hpp"

namespace bmlr {

void DecisionRule::validate(int n_outcomes) const {
  if (n_outcomes < 1)
    throw ValidationError("decision rule: need at least one outcome");
  if (kind == RuleKind::Compensatory) validate_weights(weights, n_outcomes);
}

bool in_region(const Eigen::VectorXd& delta, const DecisionRule& rule,
               Region region) {
  const int k = static_cast<int>(delta.size());
  rule.validate(k);
  for (int j = 0; j < k; ++j)
    if (!std::isfinite(delta(j)))
      throw ValidationError("decision: delta must be finite");

  // Failure-is-good reads delta with the opposite sign, which swaps the two
  // regions of every rule.
  const double sign = (rule.direction == Direction::FailureIsGood) ? -1.0 : 1.0;
  const bool superiority = (region == Region::Superiority);
  switch (rule.kind) {
    case RuleKind::Any:
      return superiority ? (sign * delta).maxCoeff() > 0.0
                         : (sign * delta).minCoeff() < 0.0;
    case RuleKind::All:
      return superiority ? (sign * delta).minCoeff() > 0.0
                         : (sign * delta).maxCoeff() < 0.0;
    case RuleKind::Compensatory: {
      double s = sign * rule.weights.dot(delta);
      return superiority ? s > 0.0 : s < 0.0;
    }
  }
  throw ValidationError("decision: unknown rule kind");
}

double rejection_probability(const Eigen::MatrixXd& delta_draws,
                             const DecisionRule& rule, Region region) {
  const long n = delta_draws.rows();
  if (n < 1) throw ValidationError("rejection probability: no draws");
  rule.validate(static_cast<int>(delta_draws.cols()));
  long hits = 0;
  Eigen::VectorXd row(delta_draws.cols());
  for (long l = 0; l < n; ++l) {
    row = delta_draws.row(l).transpose();
    if (in_region(row, rule, region)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double rejection_probability(const EffectSample& effects,
                             const DecisionRule& rule, Region region) {
  return rejection_probability(effects.delta, rule, region);
}

Eigen::VectorXd exceedance_probabilities(const Eigen::MatrixXd& delta_draws) {
  const long n = delta_draws.rows();
  if (n < 1) throw ValidationError("exceedance probabilities: no draws");
  Eigen::VectorXd p(delta_draws.cols());
  for (int j = 0; j < delta_draws.cols(); ++j) {
    long hits = 0;
    for (long l = 0; l < n; ++l) {
      const double d = delta_draws(l, j);
      if (!std::isfinite(d))
        throw ValidationError("decision: delta must be finite");
      if (d > 0.0) ++hits;
    }
    p(j) = static_cast<double>(hits) / static_cast<double>(n);
  }
  return p;
}

double rule_probability(const Eigen::MatrixXd& delta_draws,
                        const DecisionRule& rule, Region region) {
  const long n = delta_draws.rows();
  if (n < 1) throw ValidationError("rule probability: no draws");
  const int k = static_cast<int>(delta_draws.cols());
  rule.validate(k);
  if (rule.kind == RuleKind::Compensatory)
    return rejection_probability(delta_draws, rule, region);

  // Exactly one of {failure-is-good, inferiority} flips the sign; draws at
  // exactly zero count toward neither tail (strict inequalities).
  const double sign = ((rule.direction == Direction::FailureIsGood) !=
                       (region == Region::Inferiority))
                          ? -1.0
                          : 1.0;
  Eigen::VectorXd p(k);
  for (int j = 0; j < k; ++j) {
    long hits = 0;
    for (long l = 0; l < n; ++l) {
      const double d = delta_draws(l, j);
      if (!std::isfinite(d))
        throw ValidationError("decision: delta must be finite");
      if (sign * d > 0.0) ++hits;
    }
    p(j) = static_cast<double>(hits) / static_cast<double>(n);
  }
  return rule.kind == RuleKind::Any ? p.maxCoeff() : p.minCoeff();
}

double rule_probability(const EffectSample& effects, const DecisionRule& rule,
                        Region region) {
  return rule_probability(effects.delta, rule, region);
}

double default_p_cut(RuleKind kind, Sidedness sidedness, double alpha,
                     int n_outcomes) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("p_cut: alpha must lie in (0,1)");
  if (n_outcomes < 1)
    throw ValidationError("p_cut: need at least one outcome");
  double a = (sidedness == Sidedness::TwoSided) ? alpha / 2.0 : alpha;
  if (kind == RuleKind::Any) a /= static_cast<double>(n_outcomes);
  return 1.0 - a;
}

DecisionOutcome decide(double p_superior, double p_inferior,
                       double p_cut_superior, double p_cut_inferior,
                       Sidedness sidedness) {
  auto check_prob = [](double p, const char* who) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ValidationError(std::string("decide: ") + who +
                            " must lie in [0,1]");
  };
  check_prob(p_superior, "p_superior");
  check_prob(p_inferior, "p_inferior");
  check_prob(p_cut_superior, "p_cut_superior");
  check_prob(p_cut_inferior, "p_cut_inferior");

  DecisionOutcome out;
  out.p_superior = p_superior;
  out.p_inferior = p_inferior;
  out.p_cut_superior = p_cut_superior;
  out.p_cut_inferior = p_cut_inferior;
  out.sidedness = sidedness;

  const bool sup = p_superior > p_cut_superior;
  const bool inf = p_inferior > p_cut_inferior;
  switch (sidedness) {
    case Sidedness::OneSidedRight:
      out.verdict = sup ? Verdict::Superior : Verdict::Inconclusive;
      break;
    case Sidedness::OneSidedLeft:
      out.verdict = inf ? Verdict::Inferior : Verdict::Inconclusive;
      break;
    case Sidedness::TwoSided:
      if (sup && inf)
        throw InternalConsistencyError(
            "decide: superiority and inferiority probabilities both exceed "
            "their thresholds");
      out.verdict = sup   ? Verdict::Superior
                    : inf ? Verdict::Inferior
                          : Verdict::Inconclusive;
      break;
  }
  return out;
}

const char* to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::Any: return "any";
    case RuleKind::All: return "all";
    case RuleKind::Compensatory: return "compensatory";
  }
  return "unknown";
}

const char* to_string(Direction direction) {
  return direction == Direction::FailureIsGood ? "failure-is-good"
                                               : "success-is-good";
}

const char* to_string(Sidedness sidedness) {
  switch (sidedness) {
    case Sidedness::OneSidedRight: return "one-sided-right";
    case Sidedness::OneSidedLeft: return "one-sided-left";
    case Sidedness::TwoSided: return "two-sided";
  }
  return "unknown";
}

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Superior: return "superior";
    case Verdict::Inferior: return "inferior";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

}  // namespace bmlr
