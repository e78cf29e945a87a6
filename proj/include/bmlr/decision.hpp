#pragma once

// Rejection-region membership, posterior rejection probabilities, and
// superiority/inferiority verdicts for the Any, All, and Compensatory rules.
//
// Regions use strict inequalities on delta = theta_treat - theta_control:
//   Any:          superior iff max_k delta^k > 0, inferior iff min_k delta^k < 0
//   All:          superior iff min_k delta^k > 0, inferior iff max_k delta^k < 0
//   Compensatory: superior iff sum_k w^k delta^k > 0, inferior iff < 0
// delta = 0 lies in no region. All and Compensatory regions are disjoint
// pairs; the two Any regions overlap whenever delta has mixed signs, so a
// mixed posterior can reject in both directions (see decide()).

#include <Eigen/Dense>

#include "bmlr/effects.hpp"

namespace bmlr {

enum class RuleKind { Any, All, Compensatory };

// Success-is-good is the default reading of delta; failure-is-good flips the
// sign of every delta before region evaluation (equivalently, swaps the two
// regions), for outcomes coded so that smaller success probability is better.
enum class Direction { SuccessIsGood, FailureIsGood };

enum class Region { Superiority, Inferiority };

enum class Sidedness { OneSidedRight, OneSidedLeft, TwoSided };

enum class Verdict { Superior, Inferior, Inconclusive };

struct DecisionRule {
  RuleKind kind = RuleKind::All;
  Eigen::VectorXd weights;  // Compensatory only
  Direction direction = Direction::SuccessIsGood;

  void validate(int n_outcomes) const;
};

bool in_region(const Eigen::VectorXd& delta, const DecisionRule& rule,
               Region region);

// Fraction of draws (rows) falling in the region.
double rejection_probability(const Eigen::MatrixXd& delta_draws,
                             const DecisionRule& rule, Region region);
double rejection_probability(const EffectSample& effects,
                             const DecisionRule& rule, Region region);

// Per-outcome exceedance probabilities p_k = P(delta^k > 0 | draws).
Eigen::VectorXd exceedance_probabilities(const Eigen::MatrixXd& delta_draws);

// The scalar each rule tests against its threshold. Any and All summarize
// the per-outcome probabilities p_k = P(delta^k > 0): max_k p_k vs 1-alpha/K
// is the Bonferroni union test, min_k p_k vs 1-alpha the intersection-union
// test; Compensatory thresholds the weighted-difference probability directly
// (identical to its rejection_probability). These statistics carry the
// operating characteristics the closed-form power expressions in design.hpp
// describe. Thresholding the Any *region* probability instead would inflate
// the one-sided type I rate to alpha(1 - ln alpha) at independence (~0.117
// at alpha = 0.05): the union probability max-es over outcomes before
// averaging over draws, so it exceeds every per-outcome p_k.
double rule_probability(const Eigen::MatrixXd& delta_draws,
                        const DecisionRule& rule, Region region);
double rule_probability(const EffectSample& effects,
                        const DecisionRule& rule, Region region);

// Default posterior threshold: one-sided 1-alpha (All, Compensatory) or
// 1-alpha/K (Any); two-sided 1-alpha/2 and 1-alpha/(2K) respectively.
double default_p_cut(RuleKind kind, Sidedness sidedness, double alpha,
                     int n_outcomes);

struct DecisionOutcome {
  double p_superior = 0.0;
  double p_inferior = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  double p_cut_superior = 0.0;
  double p_cut_inferior = 0.0;
  Sidedness sidedness = Sidedness::OneSidedRight;
};

// Verdicts use strict ">": a probability exactly at its cut never rejects.
// One-sided-right consults only p_superior, one-sided-left only p_inferior.
// Two-sided with both probabilities above their cuts (possible only for the
// overlapping Any regions) raises an internal-consistency error.
DecisionOutcome decide(double p_superior, double p_inferior,
                       double p_cut_superior, double p_cut_inferior,
                       Sidedness sidedness);

const char* to_string(RuleKind kind);
const char* to_string(Direction direction);
const char* to_string(Sidedness sidedness);
const char* to_string(Verdict verdict);

}  // namespace bmlr
