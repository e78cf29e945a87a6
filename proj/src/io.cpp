#include "bmlr/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "bmlr/decision.hpp"
#include "bmlr/errors.hpp"
#include "bmlr/rng.hpp"

namespace bmlr {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// small utilities

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt10(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  v = std::strtod(begin, &end);
  return end == begin + s.size() && std::isfinite(v);
}

std::string read_text_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IngestionError(std::string(what) + ": cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IngestionError("cannot write file '" + path.string() + "'");
  out << text;
  if (!out) throw IngestionError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Eigen <-> json

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json mat_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd json_vec(const ordered_json& j, const std::string& ctx) {
  if (!j.is_array())
    throw ConfigError(ctx + ": expected an array of numbers");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ConfigError(ctx + "[" + std::to_string(i) + "]: expected a number");
    v(static_cast<int>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd json_mat(const ordered_json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty())
    throw ConfigError(ctx + ": expected a non-empty array of rows");
  const size_t rows = j.size();
  Eigen::VectorXd first = json_vec(j[0], ctx + "[0]");
  Eigen::MatrixXd m(rows, first.size());
  m.row(0) = first.transpose();
  for (size_t r = 1; r < rows; ++r) {
    Eigen::VectorXd row = json_vec(j[r], ctx + "[" + std::to_string(r) + "]");
    if (row.size() != first.size())
      throw ConfigError(ctx + ": rows have unequal lengths");
    m.row(static_cast<int>(r)) = row.transpose();
  }
  return m;
}

const ordered_json& require(const ordered_json& j, const char* key,
                            const std::string& ctx) {
  if (!j.contains(key))
    throw ConfigError(ctx + ": missing required field '" + key + "'");
  return j.at(key);
}

// ---------------------------------------------------------------------------
// enum string forms

Sidedness parse_sidedness(const std::string& s, const std::string& ctx) {
  if (s == "one-sided-right") return Sidedness::OneSidedRight;
  if (s == "one-sided-left") return Sidedness::OneSidedLeft;
  if (s == "two-sided") return Sidedness::TwoSided;
  throw ConfigError(ctx + ": unknown sidedness '" + s +
                    "' (use one-sided-right, one-sided-left, or two-sided)");
}

Direction parse_direction(const std::string& s, const std::string& ctx) {
  if (s == "success-is-good") return Direction::SuccessIsGood;
  if (s == "failure-is-good") return Direction::FailureIsGood;
  throw ConfigError(ctx + ": unknown direction '" + s +
                    "' (use success-is-good or failure-is-good)");
}

RuleKind parse_kind(const std::string& s, const std::string& ctx) {
  if (s == "any") return RuleKind::Any;
  if (s == "all") return RuleKind::All;
  if (s == "compensatory") return RuleKind::Compensatory;
  throw ConfigError(ctx + ": unknown rule kind '" + s +
                    "' (use any, all, or compensatory)");
}

CovariateLaw parse_law(const std::string& s, const std::string& ctx) {
  if (s == "binary") return CovariateLaw::Binary;
  if (s == "standard-normal") return CovariateLaw::StandardNormal;
  throw ConfigError(ctx + ": unknown covariate law '" + s +
                    "' (use binary or standard-normal)");
}

DecisionRule parse_rule(const ordered_json& j, Direction default_direction,
                        const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
  DecisionRule rule;
  rule.kind = parse_kind(require(j, "kind", ctx).get<std::string>(), ctx);
  if (rule.kind == RuleKind::Compensatory)
    rule.weights = json_vec(require(j, "weights", ctx), ctx + ".weights");
  else if (j.contains("weights"))
    throw ConfigError(ctx + ": only compensatory rules take weights");
  rule.direction =
      j.contains("direction")
          ? parse_direction(j.at("direction").get<std::string>(), ctx)
          : default_direction;
  return rule;
}

// ---------------------------------------------------------------------------
// config sections

ModelConfig parse_model(const ordered_json& j) {
  const std::string ctx = "model";
  ModelConfig m;
  for (const auto& o : require(j, "outcomes", ctx))
    m.outcomes.push_back(o.get<std::string>());
  m.treatment = require(j, "treatment", ctx).get<std::string>();
  if (j.contains("covariates"))
    for (const auto& c : j.at("covariates"))
      m.covariates.push_back(c.get<std::string>());
  // interactions: true/false for all covariates, or the subset by name
  m.interact.assign(m.covariates.size(), true);
  if (j.contains("interactions")) {
    const auto& it = j.at("interactions");
    if (it.is_boolean()) {
      m.interact.assign(m.covariates.size(), it.get<bool>());
    } else if (it.is_array()) {
      m.interact.assign(m.covariates.size(), false);
      for (const auto& name : it) {
        auto pos = std::find(m.covariates.begin(), m.covariates.end(),
                             name.get<std::string>());
        if (pos == m.covariates.end())
          throw ConfigError(ctx + ".interactions: '" +
                            name.get<std::string>() +
                            "' is not a configured covariate");
        m.interact[pos - m.covariates.begin()] = true;
      }
    } else {
      throw ConfigError(ctx +
                        ".interactions: expected true/false or an array of "
                        "covariate names");
    }
  }
  m.standardize = j.value("standardize", false);
  m.validate();
  return m;
}

PopulationConfig parse_population(const ordered_json& j, size_t index) {
  const std::string ctx = "populations[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
  PopulationConfig p;
  p.label = j.value("label", "");
  const std::string kind = j.value("kind", "empirical-marginal");
  if (kind == "fixed-values") {
    p.kind = PopulationSpec::Kind::FixedValues;
    const auto& x = require(j, "x", ctx);
    if (!x.is_object())
      throw ConfigError(ctx + ".x: expected {covariate: value, ...}");
    for (auto it = x.begin(); it != x.end(); ++it) {
      if (!it.value().is_number())
        throw ConfigError(ctx + ".x." + it.key() + ": expected a number");
      p.fixed_x.push_back({it.key(), it.value().get<double>()});
    }
  } else if (kind == "empirical-marginal") {
    p.kind = PopulationSpec::Kind::EmpiricalMarginal;
    if (j.contains("intervals"))
      for (const auto& iv : j.at("intervals"))
        p.intervals.push_back(
            {require(iv, "covariate", ctx + ".intervals").get<std::string>(),
             require(iv, "lo", ctx + ".intervals").get<double>(),
             require(iv, "hi", ctx + ".intervals").get<double>()});
    if (j.contains("exacts"))
      for (const auto& ex : j.at("exacts"))
        p.exacts.push_back(
            {require(ex, "covariate", ctx + ".exacts").get<std::string>(),
             require(ex, "value", ctx + ".exacts").get<double>()});
  } else {
    throw ConfigError(ctx + ": unknown kind '" + kind +
                      "' (use fixed-values or empirical-marginal)");
  }
  return p;
}

ArmBeliefs parse_arm(const ordered_json& j, const std::string& ctx) {
  ArmBeliefs arm;
  arm.theta_low = json_vec(require(j, "theta_low", ctx), ctx + ".theta_low");
  arm.theta_high = json_vec(require(j, "theta_high", ctx), ctx + ".theta_high");
  arm.rho_low = j.value("rho_low", 0.0);
  arm.rho_high = j.value("rho_high", 0.0);
  return arm;
}

BeliefSet parse_beliefs(const ordered_json& j, const std::string& ctx) {
  BeliefSet b;
  b.treat = parse_arm(require(j, "treat", ctx), ctx + ".treat");
  b.control = parse_arm(require(j, "control", ctx), ctx + ".control");
  b.x_low = j.value("x_low", -1.0);
  b.x_high = j.value("x_high", 1.0);
  return b;
}

DesignInfo parse_design(const ordered_json& j, const std::string& ctx) {
  DesignInfo d;
  for (const auto& c : require(j, "covariates", ctx))
    d.covariates.push_back(c.get<std::string>());
  d.interact.assign(d.covariates.size(), true);
  if (j.contains("interact")) {
    const auto& it = j.at("interact");
    if (!it.is_array() || it.size() != d.covariates.size())
      throw ConfigError(ctx +
                        ".interact: expected one boolean per covariate");
    for (size_t i = 0; i < it.size(); ++i) d.interact[i] = it[i].get<bool>();
  }
  d.validate();
  return d;
}

DesignTargets parse_plan(const ordered_json& j, Direction default_direction) {
  const std::string ctx = "plan";
  DesignTargets t;
  t.theta1 = json_vec(require(j, "theta1", ctx), ctx + ".theta1");
  t.theta0 = json_vec(require(j, "theta0", ctx), ctx + ".theta0");
  const int k = static_cast<int>(t.theta1.size());
  t.sigma = j.contains("sigma") ? json_mat(j.at("sigma"), ctx + ".sigma")
                                : Eigen::MatrixXd::Identity(k, k).eval();
  t.alpha = j.value("alpha", 0.05);
  t.beta_type2 = j.value("beta_type2", 0.20);
  t.n_max = j.value("n_max", static_cast<long>(1000000));
  t.rule = parse_rule(require(j, "rule", ctx), default_direction, ctx + ".rule");
  return t;
}

ScenarioConfig parse_scenario(const ordered_json& j, size_t index) {
  const std::string ctx = "simulate.scenarios[" + std::to_string(index) + "]";
  ScenarioConfig s;
  s.label = j.value("label", "scenario-" + std::to_string(index));
  s.n_per_arm = require(j, "n_per_arm", ctx).get<long>();
  s.law = parse_law(j.value("covariate_law", "binary"), ctx);
  const bool has_beliefs = j.contains("beliefs");
  const bool has_coef = j.contains("coefficients");
  if (has_beliefs == has_coef)
    throw ConfigError(ctx +
                      ": provide exactly one of 'beliefs' or 'coefficients'");
  if (has_beliefs) {
    s.beliefs = parse_beliefs(j.at("beliefs"), ctx + ".beliefs");
  } else {
    CoefficientSet coef;
    coef.beta = json_mat(j.at("coefficients"), ctx + ".coefficients");
    s.coefficients = std::move(coef);
    s.design = parse_design(require(j, "design", ctx), ctx + ".design");
  }
  s.dirichlet_reference = j.value("dirichlet_reference", false);
  s.dirichlet_alpha0 = j.value("dirichlet_alpha0", 1.0);
  s.dirichlet_draws = j.value("dirichlet_draws", static_cast<long>(4000));
  return s;
}

SimulateConfig parse_simulate(const ordered_json& j) {
  const std::string ctx = "simulate";
  SimulateConfig s;
  s.replications = j.value("replications", static_cast<long>(200));
  s.workers = j.value("workers", 1);
  const auto& scen = require(j, "scenarios", ctx);
  if (!scen.is_array() || scen.empty())
    throw ConfigError(ctx + ".scenarios: expected a non-empty array");
  for (size_t i = 0; i < scen.size(); ++i)
    s.scenarios.push_back(parse_scenario(scen[i], i));
  return s;
}

ChainConfig parse_chains(const ordered_json& j) {
  ChainConfig c = desk_chain_config();
  c.stored = j.value("stored", c.stored);
  c.burnin = j.value("burnin", c.burnin);
  c.n_chains = j.value("n_chains", c.n_chains);
  c.parallel = j.value("parallel", c.parallel);
  if (c.stored < 1 || c.burnin < 0 || c.n_chains < 1)
    throw ConfigError("chains: stored >= 1, burnin >= 0, n_chains >= 1");
  return c;
}

// ---------------------------------------------------------------------------
// draws persistence helpers

std::string category_pattern(const OutcomeMatrix& h, int category) {
  Eigen::VectorXi bits = h.decode(category);
  std::string s;
  for (int k = 0; k < bits.size(); ++k) s += bits(k) ? '1' : '0';
  return s;
}

std::vector<std::string> coefficient_labels(const OutcomeMatrix& h,
                                            const DesignInfo& design) {
  std::vector<std::string> terms = {"intercept"};
  for (const std::string& t : design.labels()) terms.push_back(t);
  std::vector<std::string> out;
  for (int q = 0; q < h.n_categories() - 1; ++q)
    for (const std::string& t : terms)
      out.push_back("b." + category_pattern(h, q) + "." + t);
  return out;
}

// ---------------------------------------------------------------------------
// report helpers

ordered_json summary_json(const QuantitySummary& s) {
  return ordered_json{{"mean", s.mean}, {"lo95", s.lo}, {"hi95", s.hi}};
}

ordered_json standardization_json(const Standardization& st,
                                  const std::vector<std::string>& covariates) {
  ordered_json j;
  j["enabled"] = st.enabled;
  ordered_json per = ordered_json::object();
  for (size_t i = 0; i < covariates.size(); ++i)
    per[covariates[i]] =
        ordered_json{{"mean", st.mean[i]}, {"sd", st.sd[i]}};
  j["covariates"] = std::move(per);
  return j;
}

ordered_json rule_json(const DecisionRule& rule) {
  ordered_json j;
  j["kind"] = to_string(rule.kind);
  if (rule.kind == RuleKind::Compensatory) j["weights"] = vec_json(rule.weights);
  j["direction"] = to_string(rule.direction);
  return j;
}

std::string iso_utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_meta(const fs::path& dir, const PipelineArgs& args) {
  ordered_json j;
  j["command"] = args.command;
  j["config"] = args.config_path;
  j["data"] = args.data_path;
  j["draws"] = args.draws_path;
  j["out_dir"] = args.out_dir;
  j["seed"] = args.seed;
  j["full_scale"] = args.full_scale;
  j["generated_at"] = iso_utc_now();
  write_text_file(dir / "meta.json", j.dump(2) + "\n");
}

ChainConfig effective_chains(const AnalysisConfig& config,
                             const PipelineArgs& args) {
  return args.full_scale ? full_chain_config() : config.chains;
}

std::vector<PopulationSpec> resolve_populations(const AnalysisConfig& config,
                                                const DesignInfo& design) {
  std::vector<PopulationSpec> out;
  if (config.populations.empty()) {
    PopulationSpec ate;
    ate.kind = PopulationSpec::Kind::EmpiricalMarginal;
    ate.label = "ate";
    out.push_back(std::move(ate));
    return out;
  }
  for (const PopulationConfig& p : config.populations)
    out.push_back(resolve_population(p, design));
  return out;
}

// Fit metadata recomputable from the draws alone, so one-shot and
// from-persisted decide reports stay byte-identical.
ordered_json fit_json_from_sample(const PosteriorSample& post) {
  double psrf = post.gelman_rubin;
  ordered_json j;
  j["n_chains"] = post.n_chains();
  j["draws_per_chain"] = post.draws_per_chain();
  j["n_free_categories"] = post.n_free_categories;
  j["n_coef"] = post.n_coef;
  if (std::isfinite(psrf))
    j["psrf"] = psrf;
  else
    j["psrf"] = nullptr;
  j["converged"] = post.converged;
  return j;
}

ordered_json data_json(const LoadedDataset& loaded, const ModelConfig& model) {
  ordered_json j;
  j["n"] = loaded.data.n();
  j["n_treated"] = loaded.n_treated;
  j["n_control"] = loaded.n_control;
  j["outcomes"] = model.outcomes;
  j["treatment"] = model.treatment;
  j["covariates"] = model.covariates;
  j["standardization"] =
      standardization_json(loaded.standardization, model.covariates);
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelConfig

DesignInfo ModelConfig::design() const {
  DesignInfo d;
  d.covariates = covariates;
  d.interact = interact;
  return d;
}

void ModelConfig::validate() const {
  if (outcomes.empty())
    throw ConfigError("model: need at least one outcome column");
  if (outcomes.size() > 10)
    throw ConfigError("model: at most 10 outcomes are supported");
  if (treatment.empty())
    throw ConfigError("model: treatment column name is required");
  if (interact.size() != covariates.size())
    throw ConfigError("model: one interaction flag per covariate");
  std::vector<std::string> all = outcomes;
  all.push_back(treatment);
  all.insert(all.end(), covariates.begin(), covariates.end());
  std::sort(all.begin(), all.end());
  auto dup = std::adjacent_find(all.begin(), all.end());
  if (dup != all.end())
    throw ConfigError("model: column '" + *dup +
                      "' is referenced more than once");
}

// ---------------------------------------------------------------------------
// CSV ingestion

LoadedDataset load_dataset_csv(const std::string& path,
                               const ModelConfig& model) {
  model.validate();
  const std::string text = read_text_file(path, "dataset");

  std::vector<std::string> lines;
  std::string line;
  std::stringstream ss(text);
  while (std::getline(ss, line)) lines.push_back(line);
  // drop trailing blank lines; interior blanks are treated as data errors
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw IngestionError("dataset '" + path + "' is empty");

  const std::vector<std::string> header = split_csv(lines[0]);
  std::unordered_map<std::string, int> col;
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i].empty())
      throw IngestionError("line 1: empty column name in header");
    if (!col.emplace(header[i], static_cast<int>(i)).second)
      throw IngestionError("line 1: duplicate column '" + header[i] + "'");
  }
  auto column = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end())
      throw IngestionError("column '" + name + "' not found in header of '" +
                           path + "'");
    return it->second;
  };
  std::vector<int> outcome_cols;
  for (const std::string& o : model.outcomes) outcome_cols.push_back(column(o));
  const int treat_col = column(model.treatment);
  std::vector<int> covariate_cols;
  for (const std::string& c : model.covariates)
    covariate_cols.push_back(column(c));

  const long n = static_cast<long>(lines.size()) - 1;
  if (n < 1) throw IngestionError("dataset '" + path + "' has no data rows");
  const int k = static_cast<int>(model.outcomes.size());
  const int m = static_cast<int>(model.covariates.size());

  Eigen::MatrixXi outcomes(n, k);
  Eigen::VectorXi treatment(n);
  Eigen::MatrixXd z(n, m);

  for (long r = 0; r < n; ++r) {
    const long file_line = r + 2;  // header is line 1
    const std::vector<std::string> fields = split_csv(lines[r + 1]);
    if (fields.size() != header.size())
      throw IngestionError("line " + std::to_string(file_line) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    auto cell = [&](int c, const std::string& name) {
      if (fields[c].empty())
        throw IngestionError("line " + std::to_string(file_line) +
                             ": empty value in column '" + name + "'");
      double v;
      if (!parse_double(fields[c], v))
        throw IngestionError("line " + std::to_string(file_line) +
                             ": cannot parse '" + fields[c] + "' in column '" +
                             name + "'");
      return v;
    };
    auto binary_cell = [&](int c, const std::string& name) {
      double v = cell(c, name);
      if (v != 0.0 && v != 1.0)
        throw IngestionError("line " + std::to_string(file_line) +
                             ": column '" + name + "' must be 0 or 1 (got " +
                             fields[c] + ")");
      return static_cast<int>(v);
    };
    for (int j = 0; j < k; ++j)
      outcomes(r, j) = binary_cell(outcome_cols[j], model.outcomes[j]);
    treatment(r) = binary_cell(treat_col, model.treatment);
    for (int j = 0; j < m; ++j)
      z(r, j) = cell(covariate_cols[j], model.covariates[j]);
  }

  LoadedDataset out;
  out.standardization.enabled = model.standardize;
  out.standardization.mean.assign(m, 0.0);
  out.standardization.sd.assign(m, 1.0);
  if (model.standardize) {
    for (int j = 0; j < m; ++j) {
      const double mean = z.col(j).mean();
      const double var =
          (z.col(j).array() - mean).square().sum() / std::max<long>(n - 1, 1);
      const double sd = std::sqrt(var);
      if (!(sd > 0.0))
        throw IngestionError("column '" + model.covariates[j] +
                             "' is constant and cannot be standardized");
      out.standardization.mean[j] = mean;
      out.standardization.sd[j] = sd;
      z.col(j) = (z.col(j).array() - mean) / sd;
    }
  }

  const DesignInfo design = model.design();
  Eigen::MatrixXd x(n, design.width());
  for (long r = 0; r < n; ++r)
    x.row(r) =
        design.row(static_cast<double>(treatment(r)), z.row(r).transpose())
            .transpose();

  out.data.outcomes = std::move(outcomes);
  out.data.design = std::move(x);
  out.data.treatment = treatment;
  out.n_treated = (treatment.array() == 1).count();
  out.n_control = out.data.n() - out.n_treated;
  out.data.validate(OutcomeMatrix::build(k));
  return out;
}

// ---------------------------------------------------------------------------
// populations

PopulationSpec resolve_population(const PopulationConfig& pop,
                                  const DesignInfo& design) {
  auto index_of = [&](const std::string& name) {
    for (int i = 0; i < design.n_covariates(); ++i)
      if (design.covariates[i] == name) return i;
    throw ConfigError("population '" + pop.label + "': covariate '" + name +
                      "' is not in the model design");
  };
  PopulationSpec spec;
  spec.kind = pop.kind;
  spec.label = pop.label;
  if (pop.kind == PopulationSpec::Kind::FixedValues) {
    spec.x = Eigen::VectorXd::Zero(design.n_covariates());
    std::vector<bool> seen(design.covariates.size(), false);
    for (const auto& nv : pop.fixed_x) {
      const int i = index_of(nv.covariate);
      spec.x(i) = nv.value;
      seen[i] = true;
    }
    for (size_t i = 0; i < seen.size(); ++i)
      if (!seen[i])
        throw ConfigError("population '" + pop.label + "': fixed-values x " +
                          "must set every covariate (missing '" +
                          design.covariates[i] + "')");
  } else {
    for (const auto& iv : pop.intervals)
      spec.filter.intervals.push_back({index_of(iv.covariate), iv.lo, iv.hi});
    for (const auto& ex : pop.exacts)
      spec.filter.exacts.push_back({index_of(ex.covariate), ex.value});
  }
  return spec;
}

// ---------------------------------------------------------------------------
// config files

AnalysisConfig parse_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    AnalysisConfig config;
    if (j.contains("model")) config.model = parse_model(j.at("model"));
    if (j.contains("prior")) {
      config.prior_tau = j.at("prior").value("tau", 0.01);
      if (!(config.prior_tau > 0.0))
        throw ConfigError("prior.tau must be positive");
    }
    if (j.contains("chains")) config.chains = parse_chains(j.at("chains"));
    else config.chains = desk_chain_config();
    if (j.contains("decision")) {
      const auto& d = j.at("decision");
      config.alpha = d.value("alpha", 0.05);
      if (!(config.alpha > 0.0 && config.alpha < 1.0))
        throw ConfigError("decision.alpha must lie in (0,1)");
      config.sidedness =
          parse_sidedness(d.value("sidedness", std::string("two-sided")),
                          "decision.sidedness");
      config.direction = parse_direction(
          d.value("direction", std::string("success-is-good")),
          "decision.direction");
      if (d.contains("rules")) {
        const auto& rules = d.at("rules");
        for (size_t i = 0; i < rules.size(); ++i)
          config.rules.push_back(
              parse_rule(rules[i], config.direction,
                         "decision.rules[" + std::to_string(i) + "]"));
      }
    }
    if (j.contains("populations")) {
      const auto& pops = j.at("populations");
      for (size_t i = 0; i < pops.size(); ++i)
        config.populations.push_back(parse_population(pops[i], i));
    }
    if (j.contains("plan"))
      config.plan = parse_plan(j.at("plan"), config.direction);
    if (j.contains("elicit"))
      config.elicit = parse_beliefs(j.at("elicit"), "elicit");
    if (j.contains("simulate"))
      config.simulate = parse_simulate(j.at("simulate"));
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// draws persistence

void save_draws_csv(const std::string& path, const PosteriorSample& post,
                    const OutcomeMatrix& h, const DesignInfo& design) {
  if (post.n_chains() < 1 || post.draws_per_chain() < 1)
    throw ValidationError("draws file: nothing to save");
  const std::vector<std::string> labels = coefficient_labels(h, design);
  if (static_cast<int>(labels.size()) !=
      post.n_free_categories * post.n_coef)
    throw InternalConsistencyError(
        "draws file: design labels do not match the sample layout");

  std::ostringstream out;
  out << "chain,iteration";
  for (const std::string& l : labels) out << "," << l;
  out << "\n";
  for (int c = 0; c < post.n_chains(); ++c) {
    const Eigen::MatrixXd& draws = post.chains[c];
    for (long l = 0; l < draws.rows(); ++l) {
      out << c << "," << l;
      for (int p = 0; p < draws.cols(); ++p) out << "," << fmt17(draws(l, p));
      out << "\n";
    }
  }
  write_text_file(path, out.str());
}

PosteriorSample load_draws_csv(const std::string& path, const OutcomeMatrix& h,
                               const DesignInfo& design) {
  const std::string text = read_text_file(path, "draws file");
  std::vector<std::string> lines;
  std::string line;
  std::stringstream ss(text);
  while (std::getline(ss, line)) lines.push_back(line);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.size() < 2)
    throw IngestionError("draws file '" + path + "' has no draws");

  const std::vector<std::string> expected = coefficient_labels(h, design);
  const std::vector<std::string> header = split_csv(lines[0]);
  if (header.size() != expected.size() + 2 || header[0] != "chain" ||
      header[1] != "iteration")
    throw IngestionError(
        "draws file header does not match the configured model (expected "
        "chain,iteration + " +
        std::to_string(expected.size()) + " coefficient columns)");
  for (size_t i = 0; i < expected.size(); ++i)
    if (header[i + 2] != expected[i])
      throw IngestionError("draws file column " + std::to_string(i + 3) +
                           ": expected '" + expected[i] + "', got '" +
                           header[i + 2] + "'");

  const int width = static_cast<int>(expected.size());
  std::vector<std::vector<Eigen::VectorXd>> per_chain;
  for (size_t r = 1; r < lines.size(); ++r) {
    const long file_line = static_cast<long>(r) + 1;
    const std::vector<std::string> fields = split_csv(lines[r]);
    if (fields.size() != header.size())
      throw IngestionError("draws file line " + std::to_string(file_line) +
                           ": expected " + std::to_string(header.size()) +
                           " fields, got " + std::to_string(fields.size()));
    double chain_id;
    if (!parse_double(fields[0], chain_id) || chain_id < 0.0 ||
        chain_id != std::floor(chain_id))
      throw IngestionError("draws file line " + std::to_string(file_line) +
                           ": bad chain id '" + fields[0] + "'");
    const size_t c = static_cast<size_t>(chain_id);
    if (c > per_chain.size())
      throw IngestionError("draws file line " + std::to_string(file_line) +
                           ": chain ids must be contiguous from 0");
    if (c == per_chain.size()) per_chain.emplace_back();
    Eigen::VectorXd row(width);
    for (int p = 0; p < width; ++p) {
      double v;
      if (!parse_double(fields[p + 2], v))
        throw IngestionError("draws file line " + std::to_string(file_line) +
                             ": cannot parse '" + fields[p + 2] +
                             "' in column '" + expected[p] + "'");
      row(p) = v;
    }
    per_chain[c].push_back(std::move(row));
  }

  PosteriorSample post;
  post.n_free_categories = h.n_categories() - 1;
  post.n_coef = design.width() + 1;
  const size_t draws0 = per_chain.front().size();
  for (const auto& rows : per_chain) {
    if (rows.empty() || rows.size() != draws0)
      throw IngestionError("draws file: chains have unequal draw counts");
    Eigen::MatrixXd m(rows.size(), width);
    for (size_t l = 0; l < rows.size(); ++l) m.row(l) = rows[l].transpose();
    post.chains.push_back(std::move(m));
  }
  if (post.n_chains() >= 2 && post.draws_per_chain() >= 10) {
    post.gelman_rubin = gelman_rubin_mpsrf(post.chains);
    post.converged = post.gelman_rubin < 1.10;
  } else {
    post.gelman_rubin = std::numeric_limits<double>::quiet_NaN();
    post.converged = true;  // diagnostic unavailable
  }
  return post;
}

// ---------------------------------------------------------------------------
// pipelines

namespace {

struct FittedModel {
  LoadedDataset loaded;
  DesignInfo design;
  OutcomeMatrix h;
  PosteriorSample post;
};

const ModelConfig& require_model(const AnalysisConfig& config,
                                 const std::string& command) {
  if (!config.model)
    throw ConfigError(command + ": config requires a 'model' section");
  return *config.model;
}

FittedModel fit_or_load(const AnalysisConfig& config, const PipelineArgs& args,
                        const std::string& command) {
  const ModelConfig& model = require_model(config, command);
  if (args.data_path.empty())
    throw ConfigError(command + ": a dataset is required (--data)");
  FittedModel fm{load_dataset_csv(args.data_path, model), model.design(),
                 OutcomeMatrix::build(static_cast<int>(model.outcomes.size())),
                 {}};
  if (!args.draws_path.empty()) {
    fm.post = load_draws_csv(args.draws_path, fm.h, fm.design);
  } else {
    const NormalPrior prior = NormalPrior::diffuse(
        fm.h.n_categories() - 1, fm.design.width() + 1, config.prior_tau);
    fm.post = run_chains(fm.loaded.data, fm.h, prior,
                         effective_chains(config, args), args.seed);
  }
  return fm;
}

std::vector<std::string> run_fit(const AnalysisConfig& config,
                                 const PipelineArgs& args, const fs::path& dir) {
  if (!args.draws_path.empty())
    throw ConfigError("fit: --draws applies to decide only");
  FittedModel fm = fit_or_load(config, args, "fit");
  const ChainConfig chains = effective_chains(config, args);

  save_draws_csv((dir / "draws.csv").string(), fm.post, fm.h, fm.design);

  ordered_json j;
  j["command"] = "fit";
  j["seed"] = args.seed;
  j["data"] = data_json(fm.loaded, *config.model);
  ordered_json fit = fit_json_from_sample(fm.post);
  fit["burnin"] = chains.burnin;
  j["fit"] = std::move(fit);
  j["draws_file"] = "draws.csv";
  write_text_file(dir / "fit.json", j.dump(2) + "\n");
  write_meta(dir, args);
  return {(dir / "fit.json").string(), (dir / "draws.csv").string(),
          (dir / "meta.json").string()};
}

std::vector<std::string> run_decide(const AnalysisConfig& config,
                                    const PipelineArgs& args,
                                    const fs::path& dir) {
  if (config.rules.empty())
    throw ConfigError("decide: config requires at least one decision rule");
  FittedModel fm = fit_or_load(config, args, "decide");
  const ModelConfig& model = *config.model;
  const int k = fm.h.n_outcomes();
  const std::vector<PopulationSpec> pops =
      resolve_populations(config, fm.design);

  ordered_json report;
  report["command"] = "decide";
  report["data"] = data_json(fm.loaded, model);
  report["fit"] = fit_json_from_sample(fm.post);
  report["alpha"] = config.alpha;
  report["sidedness"] = to_string(config.sidedness);

  std::ostringstream effects_csv, decisions_csv;
  effects_csv << "population,method,quantity,outcome,mean,lo95,hi95\n";
  decisions_csv << "population,rule,p_superior,p_inferior,p_cut,sidedness,"
                   "verdict\n";

  ordered_json jpops = ordered_json::array();
  for (const PopulationSpec& pop : pops) {
    const EffectSample effects =
        compute_effects(fm.post, fm.design, fm.h, fm.loaded.data, pop);
    const EffectSummary summary = summarize(effects);
    const Eigen::VectorXd exceed = exceedance_probabilities(effects.delta);
    const std::string method = pop.kind == PopulationSpec::Kind::FixedValues
                                   ? "fixed-x"
                                   : "empirical-marginal";

    ordered_json jp;
    jp["label"] = pop.label;
    jp["method"] = method;
    auto quantity = [&](const char* name,
                        const std::vector<QuantitySummary>& qs) {
      ordered_json arr = ordered_json::array();
      for (int i = 0; i < k; ++i) {
        ordered_json q = summary_json(qs[i]);
        q["outcome"] = model.outcomes[i];
        arr.push_back(std::move(q));
        effects_csv << pop.label << ',' << method << ',' << name << ','
                    << model.outcomes[i] << ',' << fmt10(qs[i].mean) << ','
                    << fmt10(qs[i].lo) << ',' << fmt10(qs[i].hi) << "\n";
      }
      return arr;
    };
    jp["theta_treat"] = quantity("theta_treat", summary.theta_treat);
    jp["theta_control"] = quantity("theta_control", summary.theta_control);
    jp["delta"] = quantity("delta", summary.delta);
    ordered_json jexceed = ordered_json::object();
    for (int i = 0; i < k; ++i) jexceed[model.outcomes[i]] = exceed(i);
    jp["p_delta_positive"] = std::move(jexceed);

    ordered_json jrules = ordered_json::array();
    for (const DecisionRule& rule : config.rules) {
      const double cut =
          default_p_cut(rule.kind, config.sidedness, config.alpha, k);
      const double p_sup = rule_probability(effects, rule, Region::Superiority);
      const double p_inf = rule_probability(effects, rule, Region::Inferiority);
      const DecisionOutcome outcome =
          decide(p_sup, p_inf, cut, cut, config.sidedness);
      ordered_json jr = rule_json(rule);
      jr["label"] = rule_label(rule);
      jr["p_superior"] = p_sup;
      jr["p_inferior"] = p_inf;
      jr["p_cut"] = cut;
      jr["verdict"] = to_string(outcome.verdict);
      jrules.push_back(std::move(jr));
      decisions_csv << pop.label << ',' << rule_label(rule) << ','
                    << fmt10(p_sup) << ',' << fmt10(p_inf) << ',' << fmt10(cut)
                    << ',' << to_string(config.sidedness) << ','
                    << to_string(outcome.verdict) << "\n";
    }
    jp["rules"] = std::move(jrules);
    jpops.push_back(std::move(jp));
  }
  report["populations"] = std::move(jpops);

  write_text_file(dir / "report.json", report.dump(2) + "\n");
  write_text_file(dir / "effects.csv", effects_csv.str());
  write_text_file(dir / "decisions.csv", decisions_csv.str());
  write_meta(dir, args);
  return {(dir / "report.json").string(), (dir / "effects.csv").string(),
          (dir / "decisions.csv").string(), (dir / "meta.json").string()};
}

std::vector<std::string> run_plan(const AnalysisConfig& config,
                                  const PipelineArgs& args,
                                  const fs::path& dir) {
  if (!config.plan)
    throw ConfigError("plan: config requires a 'plan' section");
  const DesignTargets& targets = *config.plan;
  const PlanResult result = required_n(targets, args.seed);

  ordered_json j;
  j["command"] = "plan";
  j["n_per_arm"] = result.n;
  j["power_at_n"] = result.power;
  ordered_json t;
  t["theta1"] = vec_json(targets.theta1);
  t["theta0"] = vec_json(targets.theta0);
  t["sigma"] = mat_json(targets.sigma);
  t["alpha"] = targets.alpha;
  t["beta_type2"] = targets.beta_type2;
  t["rule"] = rule_json(targets.rule);
  t["n_max"] = targets.n_max;
  j["targets"] = std::move(t);
  write_text_file(dir / "plan.json", j.dump(2) + "\n");
  write_meta(dir, args);
  return {(dir / "plan.json").string(), (dir / "meta.json").string()};
}

std::vector<std::string> run_elicit(const AnalysisConfig& config,
                                    const PipelineArgs& args,
                                    const fs::path& dir) {
  if (!config.elicit)
    throw ConfigError("elicit: config requires an 'elicit' section");
  const BeliefSet& beliefs = *config.elicit;
  const CoefficientSet coef = elicit_prior_means(beliefs);
  const OutcomeMatrix h = OutcomeMatrix::build(2);
  DesignInfo design;
  design.covariates = {"x"};
  design.interact = {true};

  std::vector<std::string> terms = {"intercept"};
  for (const std::string& t : design.labels()) terms.push_back(t);

  std::ostringstream csv;
  csv << "category";
  for (const std::string& t : terms) csv << ',' << t;
  csv << "\n";
  for (int q = 0; q < coef.beta.rows(); ++q) {
    csv << category_pattern(h, q);
    for (int p = 0; p < coef.beta.cols(); ++p)
      csv << ',' << fmt17(coef.beta(q, p));
    csv << "\n";
  }
  write_text_file(dir / "coefficients.csv", csv.str());

  ordered_json j;
  j["command"] = "elicit";
  j["terms"] = terms;
  ordered_json cats = ordered_json::array();
  for (int q = 0; q < coef.beta.rows(); ++q)
    cats.push_back(category_pattern(h, q));
  j["categories"] = std::move(cats);
  j["coefficients"] = mat_json(coef.beta);
  j["anchors"] = ordered_json{{"x_low", beliefs.x_low},
                              {"x_high", beliefs.x_high}};

  // forward evaluation at each arm and anchor: the implied joint and
  // marginal probabilities the elicited coefficients reproduce
  ordered_json round_trip = ordered_json::object();
  for (int arm = 1; arm >= 0; --arm) {
    ordered_json anchors = ordered_json::object();
    for (const auto& [name, x] :
         {std::pair<const char*, double>{"low", beliefs.x_low},
          std::pair<const char*, double>{"high", beliefs.x_high}}) {
      Eigen::VectorXd z(1);
      z << x;
      const Eigen::VectorXd phi = inverse_mlogit(linear_predictors(
          coef, design.row(static_cast<double>(arm), z)));
      const Eigen::VectorXd theta = phi_to_theta(phi, h);
      ordered_json a;
      a["phi"] = vec_json(phi);
      a["theta"] = vec_json(theta);
      a["rho"] = phi_pair_correlation(phi, h);
      anchors[name] = std::move(a);
    }
    round_trip[arm == 1 ? "treat" : "control"] = std::move(anchors);
  }
  j["implied"] = std::move(round_trip);
  write_text_file(dir / "elicit.json", j.dump(2) + "\n");
  write_meta(dir, args);
  return {(dir / "elicit.json").string(), (dir / "coefficients.csv").string(),
          (dir / "meta.json").string()};
}

std::vector<std::string> run_simulate(const AnalysisConfig& config,
                                      const PipelineArgs& args,
                                      const fs::path& dir) {
  if (!config.simulate)
    throw ConfigError("simulate: config requires a 'simulate' section");
  if (config.rules.empty())
    throw ConfigError("simulate: config requires at least one decision rule");
  const SimulateConfig& sim = *config.simulate;

  std::ostringstream csv;
  csv << "scenario,population,method,rule,n_requested,n_completed,"
         "superior_rate,superior_se,inferior_rate,inferior_se\n";

  ordered_json jscen = ordered_json::array();
  for (size_t i = 0; i < sim.scenarios.size(); ++i) {
    const ScenarioConfig& sc = sim.scenarios[i];
    ScenarioSpec spec;
    if (sc.beliefs) {
      spec.dgm = calibrate_dgm(*sc.beliefs, sc.law, sc.n_per_arm, sc.label);
    } else {
      spec.dgm.beta = *sc.coefficients;
      spec.dgm.design = sc.design;
      spec.dgm.law = sc.law;
      spec.dgm.n_per_arm = sc.n_per_arm;
      spec.dgm.label = sc.label;
    }
    spec.chains = effective_chains(config, args);
    spec.prior_tau = config.prior_tau;
    spec.rules = config.rules;
    spec.alpha = config.alpha;
    spec.sidedness = config.sidedness;
    spec.populations = resolve_populations(config, spec.dgm.design);
    spec.with_dirichlet_reference = sc.dirichlet_reference;
    spec.dirichlet_alpha0 = sc.dirichlet_alpha0;
    spec.dirichlet_draws = sc.dirichlet_draws;

    const std::uint64_t scenario_seed =
        RngStream::derive(args.seed, static_cast<std::uint64_t>(i));
    const CampaignResult res = run_replications(spec, sim.replications,
                                                scenario_seed, sim.workers);

    ordered_json js;
    js["label"] = res.label;
    js["n_per_arm"] = sc.n_per_arm;
    js["covariate_law"] = to_string(sc.law);
    js["seed"] = scenario_seed;
    js["n_requested"] = res.n_requested;
    js["n_completed"] = res.n_completed;
    js["total_refits"] = res.total_refits;
    js["true_beta"] = mat_json(spec.dgm.beta.beta);
    js["beta_bias"] = mat_json(res.beta_bias);
    ordered_json jmethods = ordered_json::array();
    for (const MethodResult& m : res.methods) {
      ordered_json jm;
      jm["population"] = m.population;
      jm["method"] = m.method;
      jm["truth"] = ordered_json{{"theta1", vec_json(m.truth.theta1)},
                                 {"theta0", vec_json(m.truth.theta0)},
                                 {"delta", vec_json(m.truth.delta)}};
      jm["theta1_bias"] = vec_json(m.theta1_bias);
      jm["theta0_bias"] = vec_json(m.theta0_bias);
      jm["delta_bias"] = vec_json(m.delta_bias);
      ordered_json jrules = ordered_json::array();
      for (const RuleRates& rr : m.rules) {
        jrules.push_back(ordered_json{{"rule", rr.label},
                                      {"superior_rate", rr.superior_rate},
                                      {"superior_se", rr.superior_se},
                                      {"inferior_rate", rr.inferior_rate},
                                      {"inferior_se", rr.inferior_se}});
        csv << res.label << ',' << m.population << ',' << m.method << ','
            << rr.label << ',' << res.n_requested << ',' << res.n_completed
            << ',' << fmt10(rr.superior_rate) << ',' << fmt10(rr.superior_se)
            << ',' << fmt10(rr.inferior_rate) << ',' << fmt10(rr.inferior_se)
            << "\n";
      }
      jm["rules"] = std::move(jrules);
      jmethods.push_back(std::move(jm));
    }
    js["methods"] = std::move(jmethods);
    ordered_json jfail = ordered_json::array();
    for (const ReplicationFailure& f : res.failures)
      jfail.push_back(ordered_json{{"replication", f.replication},
                                   {"message", f.message}});
    js["failures"] = std::move(jfail);
    jscen.push_back(std::move(js));
  }

  ordered_json j;
  j["command"] = "simulate";
  j["seed"] = args.seed;
  j["replications"] = sim.replications;
  j["workers"] = sim.workers;
  j["scenarios"] = std::move(jscen);
  write_text_file(dir / "campaign.json", j.dump(2) + "\n");
  write_text_file(dir / "results.csv", csv.str());
  write_meta(dir, args);
  return {(dir / "campaign.json").string(), (dir / "results.csv").string(),
          (dir / "meta.json").string()};
}

}  // namespace

std::vector<std::string> run_pipeline(const PipelineArgs& args) {
  if (args.config_path.empty())
    throw ConfigError("a config file is required (--config)");
  const AnalysisConfig config = load_config(args.config_path);

  fs::path dir(args.out_dir.empty() ? "out" : args.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IngestionError("cannot create output directory '" + dir.string() +
                         "': " + ec.message());

  if (args.command == "fit") return run_fit(config, args, dir);
  if (args.command == "decide") return run_decide(config, args, dir);
  if (args.command == "plan") return run_plan(config, args, dir);
  if (args.command == "elicit") return run_elicit(config, args, dir);
  if (args.command == "simulate") return run_simulate(config, args, dir);
  throw ConfigError("unknown command '" + args.command +
                    "' (use fit, decide, plan, elicit, or simulate)");
}

std::string error_json(const std::string& code, const std::string& message) {
  ordered_json j;
  j["error"] = ordered_json{{"code", code}, {"message", message}};
  return j.dump();
}

}  // namespace bmlr
