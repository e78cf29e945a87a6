#pragma once

#include <stdexcept>
#include <string>

namespace bmlr {

// Base error. `code()` is a stable machine-readable identifier; the CLI maps
// it into the JSON error report, so codes must not change across releases.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Malformed or inconsistent inputs (dimensions, non-binary outcomes, bad Sigma).
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error("validation", w) {}
};

// Malformed configuration files or flags.
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};

// CSV / file ingestion problems; messages carry row numbers where known.
struct IngestionError : Error {
  explicit IngestionError(const std::string& w) : Error("ingestion", w) {}
};

// Numerical failure inside an MCMC chain (e.g. a conditional covariance that
// is not positive definite). Carries the sweep index where it happened.
struct ChainError : Error {
  ChainError(const std::string& w, long iteration)
      : Error("chain", w), iteration(iteration) {}
  long iteration;
};

// Prior beliefs that violate feasibility bounds during elicitation.
struct ElicitationError : Error {
  explicit ElicitationError(const std::string& w) : Error("elicitation", w) {}
};

// Sample-size targets that no n can satisfy, or scan cap exceeded.
struct InfeasibleDesignError : Error {
  explicit InfeasibleDesignError(const std::string& w)
      : Error("infeasible_design", w) {}
};

// A subpopulation filter that retains no subjects in some arm.
struct EmptySubpopulationError : Error {
  explicit EmptySubpopulationError(const std::string& w)
      : Error("empty_subpopulation", w) {}
};

// A Dirichlet posterior with a non-positive concentration in some category.
struct ImproperPosteriorError : Error {
  explicit ImproperPosteriorError(const std::string& w)
      : Error("improper_posterior", w) {}
};

// Requests outside the supported scope (e.g. more than 10 outcomes).
struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& w) : Error("unsupported", w) {}
};

// A state the caller's inputs should make impossible, e.g. superiority and
// inferiority both exceeding their threshold in one two-sided decision.
struct InternalConsistencyError : Error {
  explicit InternalConsistencyError(const std::string& w)
      : Error("internal_consistency", w) {}
};

}  // namespace bmlr
