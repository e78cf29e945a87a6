#pragma once

// Front-end plumbing: strict CSV ingestion, JSON analysis configuration,
// lossless posterior-draw persistence, and the fit / decide / plan / elicit /
// simulate pipelines with JSON + CSV report emission.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bmlr/design.hpp"
#include "bmlr/effects.hpp"
#include "bmlr/gibbs.hpp"
#include "bmlr/model.hpp"
#include "bmlr/sim.hpp"

namespace bmlr {

// Which CSV columns feed the model and how covariates enter the design.
struct ModelConfig {
  std::vector<std::string> outcomes;    // K binary outcome columns
  std::string treatment;                // 0/1 treatment column
  std::vector<std::string> covariates;  // numeric covariate columns
  std::vector<bool> interact;           // z * treatment term per covariate
  bool standardize = false;             // center/scale covariates at load

  DesignInfo design() const;
  void validate() const;
};

// Centering/scaling actually applied during ingestion; population specs are
// interpreted on this scale when enabled.
struct Standardization {
  bool enabled = false;
  std::vector<double> mean;  // per covariate; 0 when disabled
  std::vector<double> sd;    // per covariate; 1 when disabled
};

struct LoadedDataset {
  TrialDataset data;
  Standardization standardization;
  long n_treated = 0;
  long n_control = 0;
};

// Strict CSV reader for the configured columns. Outcomes and treatment must
// be exactly 0 or 1; covariates must parse as finite numbers. Every cell
// error names the file line (the header is line 1) and the column.
LoadedDataset load_dataset_csv(const std::string& path,
                               const ModelConfig& model);

// Population spec with covariates referenced by name; resolved against a
// concrete design's covariate order before use.
struct PopulationConfig {
  struct NamedInterval {
    std::string covariate;
    double lo = 0.0;
    double hi = 0.0;  // exclusive
  };
  struct NamedExact {
    std::string covariate;
    double value = 0.0;
  };
  struct NamedValue {
    std::string covariate;
    double value = 0.0;
  };

  std::string label;
  PopulationSpec::Kind kind = PopulationSpec::Kind::EmpiricalMarginal;
  std::vector<NamedValue> fixed_x;        // FixedValues: one per covariate
  std::vector<NamedInterval> intervals;   // EmpiricalMarginal filter
  std::vector<NamedExact> exacts;
};

PopulationSpec resolve_population(const PopulationConfig& pop,
                                  const DesignInfo& design);

// Generating truth for one simulate scenario: beliefs to calibrate, or
// explicit coefficients over a recorded design (exactly one of the two).
struct ScenarioConfig {
  std::string label = "scenario";
  long n_per_arm = 2;
  CovariateLaw law = CovariateLaw::Binary;
  std::optional<BeliefSet> beliefs;
  std::optional<CoefficientSet> coefficients;
  DesignInfo design;  // coefficients only
  bool dirichlet_reference = false;
  double dirichlet_alpha0 = 1.0;
  long dirichlet_draws = 4000;
};

struct SimulateConfig {
  long replications = 200;
  int workers = 1;
  std::vector<ScenarioConfig> scenarios;
};

// Parsed configuration file. Sections beyond `decision` are optional and
// consulted only by the commands that need them.
struct AnalysisConfig {
  std::optional<ModelConfig> model;  // fit, decide
  double prior_tau = 0.01;
  ChainConfig chains;  // desk scale unless the config overrides
  double alpha = 0.05;
  Sidedness sidedness = Sidedness::TwoSided;
  Direction direction = Direction::SuccessIsGood;
  std::vector<DecisionRule> rules;
  std::vector<PopulationConfig> populations;
  std::optional<DesignTargets> plan;
  std::optional<BeliefSet> elicit;
  std::optional<SimulateConfig> simulate;
};

AnalysisConfig parse_config(const std::string& json_text);  // throws ConfigError
AnalysisConfig load_config(const std::string& path);

// Posterior draws as CSV: header `chain,iteration,<coefficient labels>`,
// values printed with %.17g so reloading reproduces every double bit for
// bit. Loading recomputes the convergence diagnostic from the stored chains.
void save_draws_csv(const std::string& path, const PosteriorSample& post,
                    const OutcomeMatrix& h, const DesignInfo& design);
PosteriorSample load_draws_csv(const std::string& path, const OutcomeMatrix& h,
                               const DesignInfo& design);

struct PipelineArgs {
  std::string command;     // fit | decide | plan | elicit | simulate
  std::string config_path;
  std::string data_path;   // fit, decide
  std::string draws_path;  // decide: reuse persisted draws instead of fitting
  std::string out_dir = "out";
  std::uint64_t seed = 20260815;
  bool full_scale = false;  // production chain settings
};

// Executes one command and writes its report files into args.out_dir
// (created if missing). Returns the paths written, primary report first.
// Reports are byte-identical across runs with equal seeds; timestamps live
// only in meta.json. Throws Error subclasses on failure.
std::vector<std::string> run_pipeline(const PipelineArgs& args);

// Machine-readable error payload: {"error":{"code":...,"message":...}}.
std::string error_json(const std::string& code, const std::string& message);

}  // namespace bmlr
