#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "bmlr/decision.hpp"
#include "bmlr/design.hpp"
#include "bmlr/effects.hpp"
#include "bmlr/errors.hpp"
#include "bmlr/model.hpp"
#include "bmlr/mvn.hpp"
#include "bmlr/normal.hpp"
#include "bmlr/rng.hpp"
#include "doctest.h"

using namespace bmlr;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Eigen::MatrixXd corr2(double rho) {
  Eigen::MatrixXd s(2, 2);
  s << 1.0, rho, rho, 1.0;
  return s;
}

Eigen::MatrixXd equicorr(int k, double rho) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(k, k, rho);
  s.diagonal().setOnes();
  return s;
}

DecisionRule any_rule() {
  DecisionRule r;
  r.kind = RuleKind::Any;
  return r;
}

DecisionRule all_rule() { return DecisionRule{}; }

DecisionRule comp_rule(std::initializer_list<double> w) {
  DecisionRule r;
  r.kind = RuleKind::Compensatory;
  r.weights = vec(w);
  return r;
}

DesignTargets targets2(double t11, double t12, double t01, double t02,
                       double rho, DecisionRule rule) {
  DesignTargets t;
  t.theta1 = vec({t11, t12});
  t.theta0 = vec({t01, t02});
  t.sigma = corr2(rho);
  t.rule = rule;
  return t;
}

}  // namespace

TEST_SUITE("mvn") {

// Values computed with two independent quadratures (an Owen's T
// construction and direct 2-D adaptive quadrature) agreeing to 2e-16.
TEST_CASE("bivariate values match independent quadrature oracles") {
  struct Case {
    double c1, c2, rho, value;
  };
  const std::vector<Case> cases = {
      {0.0, 0.0, 0.5, 1.0 / 3.0},
      {1.0, -0.5, -0.3, 0.232036068268547},
      {0.3, 0.8, 0.7, 0.575073183728145},
      {-1.2, 2.0, 0.9, 0.115069670221699},
      {2.5, 1.5, -0.8, 0.926983133409798},
      {-0.4, -0.6, 0.25, 0.126312574181651},
      {1.645, 1.645, -0.2, 0.900935681309848},
  };
  for (const Case& c : cases) {
    MvnCdfResult r = mvn_cdf(vec({c.c1, c.c2}), corr2(c.rho));
    CHECK(std::abs(r.value - c.value) < 1e-8);
    CHECK(r.error <= 1e-8);
  }
}

TEST_CASE("bivariate orthant mass follows the arcsine law") {
  // P(Z1 <= 0, Z2 <= 0) = 1/4 + asin(rho) / (2 pi).
  for (double rho : {0.5, -0.5, 0.9, -0.95, 0.05}) {
    const double expect = 0.25 + std::asin(rho) / (2.0 * M_PI);
    MvnCdfResult r = mvn_cdf(vec({0.0, 0.0}), corr2(rho));
    CHECK(std::abs(r.value - expect) < 1e-8);
  }
}

TEST_CASE("trivariate values match independent quadrature oracles") {
  Eigen::MatrixXd sigma(3, 3);
  sigma << 1.0, 0.5, 0.25, 0.5, 1.0, 0.4, 0.25, 0.4, 1.0;
  struct Case {
    double c1, c2, c3, value;
  };
  // Conditioning quadrature, absolute error below 1e-10.
  const std::vector<Case> cases = {
      {0.0, 0.0, 0.0, 0.219521792589072},
      {1.0, 0.5, -0.5, 0.243949759813250},
      {-1.0, 2.0, 0.3, 0.120163334589957},
  };
  for (const Case& c : cases) {
    MvnCdfResult r = mvn_cdf(vec({c.c1, c.c2, c.c3}), sigma);
    CHECK(r.error <= 1e-4);
    CHECK(std::abs(r.value - c.value) < 3e-4);
  }
}

TEST_CASE("four dimensional values match reference integration") {
  const Eigen::MatrixXd sigma = equicorr(4, 0.3);
  // Orthant mass has an exact 1-D reduction for equicorrelated variables.
  MvnCdfResult orthant = mvn_cdf(Eigen::VectorXd::Zero(4), sigma);
  CHECK(orthant.error <= 1e-4);
  CHECK(std::abs(orthant.value - 0.140305582470376) < 2e-4);

  MvnCdfResult gen = mvn_cdf(vec({1.5, 0.5, -0.2, 0.8}), sigma);
  CHECK(gen.error <= 1e-4);
  CHECK(std::abs(gen.value - 0.288897692615) < 3e-4);
}

TEST_CASE("independence factorizes into a product of marginals") {
  const std::vector<Eigen::VectorXd> limits = {
      vec({0.7}), vec({0.3, -0.4}), vec({1.2, 0.0, -0.8}),
      vec({0.5, -1.5, 2.0, 0.25})};
  for (const Eigen::VectorXd& c : limits) {
    const int k = static_cast<int>(c.size());
    double product = 1.0;
    for (int i = 0; i < k; ++i) product *= norm_cdf(c(i));
    MvnCdfResult r = mvn_cdf(c, Eigen::MatrixXd::Identity(k, k));
    CHECK(std::abs(r.value - product) < 1e-8);
  }
}

TEST_CASE("perfect correlation reduces to min and overlap forms") {
  CHECK(std::abs(mvn_cdf(vec({0.3, 1.2}), corr2(1.0)).value - norm_cdf(0.3)) <
        1e-14);
  CHECK(std::abs(mvn_cdf(vec({1.2, 0.3}), corr2(1.0)).value - norm_cdf(0.3)) <
        1e-14);
  const double overlap = norm_cdf(0.8) + norm_cdf(0.6) - 1.0;
  CHECK(std::abs(mvn_cdf(vec({0.8, 0.6}), corr2(-1.0)).value - overlap) <
        1e-14);
  // Antithetic limits with no overlap carry zero mass.
  CHECK(mvn_cdf(vec({-1.0, 0.5}), corr2(-1.0)).value == 0.0);
}

TEST_CASE("probability respects monotonicity and bounds") {
  Eigen::MatrixXd sigma(3, 3);
  sigma << 1.0, 0.5, 0.25, 0.5, 1.0, 0.4, 0.25, 0.4, 1.0;
  double prev = 0.0;
  for (double c : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    double v = mvn_cdf(Eigen::VectorXd::Constant(3, c), sigma).value;
    CHECK(v >= prev);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }
  CHECK(mvn_cdf(Eigen::VectorXd::Constant(3, 9.0), sigma).value ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mvn_cdf(Eigen::VectorXd::Constant(3, -9.0), sigma).value ==
        doctest::Approx(0.0).epsilon(1e-9));
  // Raising one limit (weakly) raises bivariate mass as well.
  CHECK(mvn_cdf(vec({0.5, 0.2}), corr2(0.4)).value >=
        mvn_cdf(vec({0.1, 0.2}), corr2(0.4)).value);
}

TEST_CASE("same seed reproduces the quasi monte carlo estimate") {
  const Eigen::MatrixXd sigma = equicorr(4, 0.3);
  const Eigen::VectorXd c = vec({1.5, 0.5, -0.2, 0.8});
  MvnCdfResult a = mvn_cdf(c, sigma, 7);
  MvnCdfResult b = mvn_cdf(c, sigma, 7);
  CHECK(a.value == b.value);
  CHECK(a.error == b.error);
  MvnCdfResult other = mvn_cdf(c, sigma, 8);
  CHECK(std::abs(a.value - other.value) <= a.error + other.error);
}

TEST_CASE("malformed inputs are rejected") {
  CHECK_THROWS_AS(mvn_cdf(Eigen::VectorXd(), Eigen::MatrixXd()),
                  ValidationError);
  CHECK_THROWS_AS(mvn_cdf(vec({0.0, 0.0}), Eigen::MatrixXd::Identity(3, 3)),
                  ValidationError);
  Eigen::MatrixXd bad_diag = corr2(0.2);
  bad_diag(0, 0) = 1.5;
  CHECK_THROWS_AS(mvn_cdf(vec({0.0, 0.0}), bad_diag), ValidationError);
  Eigen::MatrixXd asym = corr2(0.2);
  asym(0, 1) = 0.3;
  CHECK_THROWS_AS(mvn_cdf(vec({0.0, 0.0}), asym), ValidationError);
  CHECK_THROWS_AS(mvn_cdf(vec({0.0, 0.0}), corr2(1.5)), ValidationError);
  const double nan = std::nan("");
  CHECK_THROWS_AS(mvn_cdf(vec({nan, 0.0}), corr2(0.2)), ValidationError);
  // Indefinite correlation matrices have no Cholesky factor.
  Eigen::MatrixXd indefinite(3, 3);
  indefinite << 1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0;
  CHECK_THROWS_AS(mvn_cdf(Eigen::VectorXd::Zero(3), indefinite),
                  ValidationError);
}

}  // TEST_SUITE mvn

TEST_SUITE("design") {

TEST_CASE("single weighted outcome reproduces the textbook sample size") {
  // theta_w: 0.6 vs 0.5 at alpha 0.05, power 0.8 needs 303 per arm.
  DesignTargets t = targets2(0.55, 0.65, 0.45, 0.55, 0.2, comp_rule({0.5, 0.5}));
  PlanResult plan = required_n(t);
  CHECK(plan.n == 303);
  CHECK(plan.power >= 0.8);
  CHECK(plan.power < 0.81);

  // Same targets against a weaker control response: 0.6 vs 0.4 needs 75.
  DesignTargets strong = targets2(0.55, 0.65, 0.35, 0.45, 0.2,
                                  comp_rule({0.5, 0.5}));
  CHECK(required_n(strong).n == 75);
}

TEST_CASE("scan and closed form agree for one outcome") {
  for (double t1 : {0.55, 0.6, 0.65, 0.7}) {
    for (double t0 : {0.4, 0.45, 0.5}) {
      DesignTargets scan;
      scan.theta1 = vec({t1});
      scan.theta0 = vec({t0});
      scan.sigma = Eigen::MatrixXd::Identity(1, 1);
      scan.rule = all_rule();
      DesignTargets closed = scan;
      closed.rule = comp_rule({1.0});
      PlanResult a = required_n(scan);
      PlanResult b = required_n(closed);
      CHECK(std::abs(a.n - b.n) <= 1);
      CHECK(a.power >= 0.8);
      CHECK(b.power >= 0.8);
    }
  }
}

TEST_CASE("one outcome makes all three rules coincide") {
  DesignTargets t;
  t.theta1 = vec({0.6});
  t.theta0 = vec({0.45});
  t.sigma = Eigen::MatrixXd::Identity(1, 1);
  t.rule = all_rule();
  const long n_all = required_n(t).n;
  t.rule = any_rule();
  const long n_any = required_n(t).n;
  t.rule = comp_rule({1.0});
  const long n_comp = required_n(t).n;
  CHECK(n_all == n_any);
  CHECK(std::abs(n_all - n_comp) <= 1);
}

TEST_CASE("detecting one effect among several needs fewer subjects") {
  DesignTargets t = targets2(0.60, 0.65, 0.50, 0.55, 0.2, any_rule());
  PlanResult any = required_n(t);
  t.rule = all_rule();
  PlanResult all = required_n(t);
  CHECK(any.n <= all.n);
  CHECK(any.n >= 2);
  // At the all-rule sample size the any rule is at least as powerful here.
  t.rule = any_rule();
  CHECK(power_any_all(t, all.n) >= all.power - 1e-9);
}

TEST_CASE("power grows with sample size and effect size") {
  for (DecisionRule rule : {any_rule(), all_rule(), comp_rule({0.3, 0.7})}) {
    DesignTargets t = targets2(0.60, 0.65, 0.50, 0.55, 0.2, rule);
    double prev = 0.0;
    for (long n : {50L, 100L, 200L, 400L, 800L}) {
      double p = power_any_all(t, n);
      CHECK(p > prev);
      CHECK(p < 1.0);
      prev = p;
    }
    DesignTargets wide = targets2(0.65, 0.70, 0.50, 0.55, 0.2, rule);
    CHECK(power_any_all(wide, 200) > power_any_all(t, 200));
  }
}

TEST_CASE("planner returns the smallest qualifying sample size") {
  DesignTargets t = targets2(0.60, 0.62, 0.50, 0.50, 0.3, all_rule());
  PlanResult plan = required_n(t);
  CHECK(plan.n > 2);
  CHECK(power_any_all(t, plan.n) >= 0.8);
  CHECK(power_any_all(t, plan.n - 1) < 0.8);

  t.rule = any_rule();
  plan = required_n(t);
  CHECK(power_any_all(t, plan.n) >= 0.8);
  CHECK(power_any_all(t, plan.n - 1) < 0.8);
}

TEST_CASE("planner handles three outcomes through the joint normal") {
  DesignTargets t;
  t.theta1 = vec({0.70, 0.68, 0.66});
  t.theta0 = vec({0.50, 0.50, 0.50});
  t.sigma = equicorr(3, 0.2);
  t.rule = any_rule();
  PlanResult plan = required_n(t);
  CHECK(plan.n > 2);
  CHECK(plan.power >= 0.8);
  CHECK(power_any_all(t, plan.n - 1) < 0.8);
}

TEST_CASE("stricter goals demand more subjects") {
  DesignTargets t = targets2(0.60, 0.65, 0.50, 0.55, 0.2, all_rule());
  const long base = required_n(t).n;
  DesignTargets tighter_power = t;
  tighter_power.beta_type2 = 0.10;
  CHECK(required_n(tighter_power).n >= base);
  DesignTargets tighter_alpha = t;
  tighter_alpha.alpha = 0.01;
  CHECK(required_n(tighter_alpha).n >= base);
  DesignTargets bigger_effect = targets2(0.65, 0.70, 0.50, 0.55, 0.2,
                                         all_rule());
  CHECK(required_n(bigger_effect).n <= base);
}

TEST_CASE("monte carlo replication of the z tests arbitrates the formulas") {
  const double rho = 0.2;
  const Eigen::VectorXd theta1 = vec({0.60, 0.65});
  const Eigen::VectorXd theta0 = vec({0.50, 0.55});
  const long n = 200;
  const Eigen::VectorXd phi1 = elicit_joint_probs(theta1, rho);
  const Eigen::VectorXd phi0 = elicit_joint_probs(theta0, rho);

  const double z_any = norm_quantile(1.0 - 0.05 / 2.0);
  const double z_all = norm_quantile(1.0 - 0.05);
  const long reps = 4000;
  long hit_any = 0, hit_all = 0, hit_first = 0;
  RngStream root(20260815);
  for (long r = 0; r < reps; ++r) {
    RngStream rng = root.substream(static_cast<std::uint64_t>(r));
    double p1[2] = {0.0, 0.0}, p0[2] = {0.0, 0.0};
    for (long i = 0; i < n; ++i) {
      int q1 = rng.categorical(phi1.data(), 4);
      int q0 = rng.categorical(phi0.data(), 4);
      // Category order (11, 10, 01, 00): outcome 1 succeeds in {0,1},
      // outcome 2 in {0,2}.
      p1[0] += (q1 <= 1);
      p1[1] += (q1 == 0 || q1 == 2);
      p0[0] += (q0 <= 1);
      p0[1] += (q0 == 0 || q0 == 2);
    }
    double z[2];
    for (int k = 0; k < 2; ++k) {
      p1[k] /= static_cast<double>(n);
      p0[k] /= static_cast<double>(n);
      const double se = std::sqrt(
          (p1[k] * (1.0 - p1[k]) + p0[k] * (1.0 - p0[k])) /
          static_cast<double>(n));
      z[k] = (p1[k] - p0[k]) / se;
    }
    if (z[0] > z_any || z[1] > z_any) ++hit_any;
    if (z[0] > z_all && z[1] > z_all) ++hit_all;
    if (z[0] > z_all) ++hit_first;
  }
  const double mc_any = static_cast<double>(hit_any) / reps;
  const double mc_all = static_cast<double>(hit_all) / reps;
  const double mc_first = static_cast<double>(hit_first) / reps;

  DesignTargets t = targets2(0.60, 0.65, 0.50, 0.55, rho, any_rule());
  const double power_any = power_any_all(t, n);
  t.rule = all_rule();
  const double power_all = power_any_all(t, n);
  t.rule = comp_rule({1.0, 0.0});  // picks outcome 1: an exact z-test
  const double power_first = power_any_all(t, n);

  CHECK(power_any > 0.2);
  CHECK(power_any < 0.98);
  CHECK(std::abs(mc_any - power_any) < 0.03);
  CHECK(std::abs(mc_all - power_all) < 0.03);
  CHECK(std::abs(mc_first - power_first) < 0.03);
}

TEST_CASE("falling failure probabilities plan like rising success ones") {
  DecisionRule bad_is_good = all_rule();
  bad_is_good.direction = Direction::FailureIsGood;
  DesignTargets falling = targets2(0.40, 0.35, 0.50, 0.45, 0.2, bad_is_good);
  DesignTargets rising = targets2(0.60, 0.65, 0.50, 0.55, 0.2, all_rule());
  // theta -> 1 - theta preserves the variances and mirrors the effects.
  PlanResult a = required_n(falling);
  PlanResult b = required_n(rising);
  CHECK(a.n == b.n);
  CHECK(a.power == doctest::Approx(b.power).epsilon(1e-12));
  // Read with the wrong direction the same targets are hopeless.
  falling.rule.direction = Direction::SuccessIsGood;
  CHECK_THROWS_AS(required_n(falling), InfeasibleDesignError);
}

TEST_CASE("infeasible targets are reported with the achieved power") {
  // All-rule needs every effect positive.
  DesignTargets mixed = targets2(0.60, 0.50, 0.50, 0.55, 0.2, all_rule());
  CHECK_THROWS_AS(required_n(mixed), InfeasibleDesignError);
  // Any-rule needs at least one.
  DesignTargets hopeless = targets2(0.45, 0.50, 0.50, 0.55, 0.2, any_rule());
  CHECK_THROWS_AS(required_n(hopeless), InfeasibleDesignError);
  // A null weighted effect can never power a compensatory test.
  DesignTargets null_w = targets2(0.55, 0.45, 0.50, 0.50, 0.2,
                                  comp_rule({0.5, 0.5}));
  CHECK_THROWS_AS(required_n(null_w), InfeasibleDesignError);

  // Tiny effects blow through the cap; the error reports progress.
  DesignTargets tiny;
  tiny.theta1 = vec({0.51});
  tiny.theta0 = vec({0.50});
  tiny.sigma = Eigen::MatrixXd::Identity(1, 1);
  tiny.rule = all_rule();
  tiny.n_max = 500;
  try {
    required_n(tiny);
    CHECK(false);
  } catch (const InfeasibleDesignError& e) {
    CHECK(e.code() == "infeasible_design");
    CHECK(std::string(e.what()).find("500") != std::string::npos);
    CHECK(std::string(e.what()).find("power") != std::string::npos);
  }
  tiny.rule = comp_rule({1.0});
  CHECK_THROWS_AS(required_n(tiny), InfeasibleDesignError);
}

TEST_CASE("design targets are validated") {
  DesignTargets t = targets2(0.6, 0.65, 0.5, 0.55, 0.2, all_rule());
  CHECK_NOTHROW(t.validate());
  DesignTargets bad = t;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = t;
  bad.beta_type2 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = t;
  bad.theta1(0) = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = t;
  bad.theta0 = vec({0.5});
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = t;
  bad.sigma = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = t;
  bad.n_max = 1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = t;
  bad.rule = comp_rule({0.5, 0.3});  // weights must sum to one
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(power_any_all(t, 1), ValidationError);
  // An invalid correlation matrix surfaces when the power integral runs.
  bad = t;
  bad.sigma = corr2(1.5);
  CHECK_THROWS_AS(power_any_all(bad, 100), ValidationError);
}

TEST_CASE("joint probabilities come from marginals and correlation") {
  // Independence factorizes.
  Eigen::VectorXd phi = elicit_joint_probs(vec({0.3, 0.8}), 0.0);
  CHECK(phi(0) == doctest::Approx(0.24).epsilon(1e-15));
  CHECK(phi(1) == doctest::Approx(0.06).epsilon(1e-15));
  CHECK(phi(2) == doctest::Approx(0.56).epsilon(1e-15));
  CHECK(phi(3) == doctest::Approx(0.14).epsilon(1e-15));

  // Negative correlation moves mass off the diagonal patterns.
  phi = elicit_joint_probs(vec({0.6, 0.7}), -0.3);
  const double s = std::sqrt(0.6 * 0.4 * 0.7 * 0.3);
  CHECK(phi(0) == doctest::Approx(0.42 - 0.3 * s).epsilon(1e-14));
  CHECK(phi.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(phi.minCoeff() > 0.0);
  // The stated correlation round-trips through the joint law.
  const OutcomeMatrix h2 = OutcomeMatrix::build(2);
  CHECK(phi_pair_correlation(phi, h2) == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(phi_to_theta(phi, h2)(0) == doctest::Approx(0.6).epsilon(1e-14));

  // Perfect dependence concentrates on the comonotone patterns.
  phi = elicit_joint_probs(vec({0.3, 0.3}), 1.0);
  CHECK(phi(0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(phi(1) == 0.0);
  CHECK(phi(2) == 0.0);
  CHECK(phi(3) == doctest::Approx(0.7).epsilon(1e-15));
  phi = elicit_joint_probs(vec({0.5, 0.5}), -1.0);
  CHECK(phi(0) == 0.0);
  CHECK(phi(3) == 0.0);
}

TEST_CASE("correlations outside the feasibility bounds are rejected") {
  try {
    elicit_joint_probs(vec({0.9, 0.1}), 0.9);
    CHECK(false);
  } catch (const ElicitationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("01") != std::string::npos);
    CHECK(msg.find("feasible") != std::string::npos);
  }
  try {
    elicit_joint_probs(vec({0.9, 0.9}), -0.9);
    CHECK(false);
  } catch (const ElicitationError& e) {
    CHECK(std::string(e.what()).find("00") != std::string::npos);
  }
  try {
    elicit_joint_probs(vec({0.1, 0.1}), -0.5);
    CHECK(false);
  } catch (const ElicitationError& e) {
    CHECK(std::string(e.what()).find("11") != std::string::npos);
  }
  CHECK_THROWS_AS(elicit_joint_probs(vec({0.5, 0.5, 0.5}), 0.0),
                  UnsupportedError);
  CHECK_THROWS_AS(elicit_joint_probs(vec({0.5, 1.0}), 0.0), ValidationError);
  CHECK_THROWS_AS(elicit_joint_probs(vec({0.5, 0.5}), 1.5), ValidationError);
}

TEST_CASE("prior means reproduce the published coefficient table") {
  BeliefSet b;
  b.treat.theta_low = vec({0.6, 0.7});
  b.treat.theta_high = vec({0.4, 0.3});
  b.treat.rho_low = b.treat.rho_high = -0.3;
  b.control.theta_low = vec({0.4, 0.3});
  b.control.theta_high = vec({0.6, 0.7});
  b.control.rho_low = b.control.rho_high = -0.3;

  CoefficientSet coef = elicit_prior_means(b);
  Eigen::MatrixXd expect(3, 4);
  expect << 0.0, 0.0, 1.902, -3.804,
            0.766, 0.0, 0.781, -1.562,
            0.766, 0.0, 1.121, -2.241;
  REQUIRE(coef.beta.rows() == 3);
  REQUIRE(coef.beta.cols() == 4);
  CHECK((coef.beta - expect).cwiseAbs().maxCoeff() < 5e-4);
}

TEST_CASE("elicited coefficients reproduce the beliefs at both anchors") {
  BeliefSet b;
  b.x_low = -2.0;
  b.x_high = 0.5;
  b.treat.theta_low = vec({0.55, 0.35});
  b.treat.theta_high = vec({0.70, 0.60});
  b.treat.rho_low = 0.25;
  b.treat.rho_high = -0.1;
  b.control.theta_low = vec({0.45, 0.30});
  b.control.theta_high = vec({0.50, 0.50});
  b.control.rho_low = 0.1;
  b.control.rho_high = 0.3;

  CoefficientSet coef = elicit_prior_means(b);
  const OutcomeMatrix h = OutcomeMatrix::build(2);
  struct Anchor {
    double treat, x;
    const Eigen::VectorXd* theta;
    double rho;
  };
  const std::vector<Anchor> anchors = {
      {1.0, b.x_low, &b.treat.theta_low, b.treat.rho_low},
      {1.0, b.x_high, &b.treat.theta_high, b.treat.rho_high},
      {0.0, b.x_low, &b.control.theta_low, b.control.rho_low},
      {0.0, b.x_high, &b.control.theta_high, b.control.rho_high},
  };
  for (const Anchor& a : anchors) {
    const Eigen::VectorXd row = vec({a.treat, a.x, a.x * a.treat});
    const Eigen::VectorXd phi = inverse_mlogit(linear_predictors(coef, row));
    const Eigen::VectorXd expect = elicit_joint_probs(*a.theta, a.rho);
    CHECK((phi - expect).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::VectorXd theta = phi_to_theta(phi, h);
    CHECK(std::abs(theta(0) - (*a.theta)(0)) < 1e-10);
    CHECK(std::abs(theta(1) - (*a.theta)(1)) < 1e-10);
    CHECK(std::abs(phi_pair_correlation(phi, h) - a.rho) < 1e-10);
  }
}

TEST_CASE("symmetric beliefs eliminate the treatment terms") {
  BeliefSet b;
  b.treat.theta_low = b.control.theta_low = vec({0.45, 0.55});
  b.treat.theta_high = b.control.theta_high = vec({0.60, 0.40});
  b.treat.rho_low = b.control.rho_low = 0.2;
  b.treat.rho_high = b.control.rho_high = -0.15;
  CoefficientSet coef = elicit_prior_means(b);
  CHECK(coef.beta.col(1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(coef.beta.col(3).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("degenerate or unsupported beliefs are rejected") {
  BeliefSet b;
  b.treat.theta_low = vec({0.5, 0.5});
  b.treat.rho_low = -1.0;  // pattern 11 gets zero mass: log odds undefined
  b.treat.theta_high = vec({0.6, 0.6});
  b.control.theta_low = vec({0.5, 0.5});
  b.control.theta_high = vec({0.5, 0.5});
  try {
    elicit_prior_means(b);
    CHECK(false);
  } catch (const ElicitationError& e) {
    CHECK(std::string(e.what()).find("zero") != std::string::npos);
  }

  BeliefSet three;
  three.treat.theta_low = vec({0.5, 0.5, 0.5});
  three.treat.theta_high = vec({0.5, 0.5, 0.5});
  three.control = three.treat;
  CHECK_THROWS_AS(elicit_prior_means(three), UnsupportedError);

  BeliefSet flipped;
  flipped.treat.theta_low = flipped.treat.theta_high = vec({0.5, 0.5});
  flipped.control = flipped.treat;
  flipped.x_low = 1.0;
  flipped.x_high = -1.0;
  CHECK_THROWS_AS(elicit_prior_means(flipped), ValidationError);
}

}  // TEST_SUITE design
