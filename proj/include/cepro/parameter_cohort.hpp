#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cepro/graph.hpp"
#include "cepro/orchestration.hpp"
#include "cepro/rng.hpp"

namespace cepro::param {

struct ParamDef {
  enum class Kind { Real, Integer };
  std::string name;
  std::string unit;
  Kind kind = Kind::Real;
  double min = 0.0;
  double max = 0.0;
  double initial = 0.0;
};

struct ParameterSpace {
  std::vector<ParamDef> params;

  void validate() const;  // min < max, initial in range, unique names
  const ParamDef* find(const std::string& name) const;
};

struct ParameterVector {
  std::map<std::string, double> values;

  double at(const std::string& name) const;
  bool has(const std::string& name) const { return values.count(name) != 0; }
};

ParameterVector initial_point(const ParameterSpace& space);

// Throws ConfigError when P misses a space parameter, falls outside bounds,
// or an integer-kind value is fractional.
void check_in_space(const ParameterVector& p, const ParameterSpace& space);

struct SimulationResult {
  double yield = 0.0;   // kmol/hr
  double purity = 0.0;  // molar fraction
  double cost = 0.0;    // $/hr
  bool converged = false;
  std::map<std::string, std::string> diagnostics;
};

// Closed-form reaction/separation surrogate. Requires reactor_T (K),
// residence_time (hr), n_plates and reflux_ratio; feed_stage and
// reactor_volume are accepted and ignored.
SimulationResult surrogate_flowsheet(const ParameterVector& p);

struct Objective {
  std::string metric;  // yield | purity | cost
  enum class Direction { Max, Min } direction = Direction::Max;
  double weight = 1.0;
};

struct Constraint {
  std::string metric;
  double bound = 0.0;
  std::string sense;  // ">=" or "<="
};

struct SimulatorSpec {
  std::string kind = "surrogate";  // surrogate | external
  std::string model;
  std::string command;  // external adapter invocation
};

struct ScenarioConfig {
  ParameterSpace space;
  std::vector<Objective> objectives;
  std::vector<Constraint> constraints;
  SimulatorSpec simulator;
  std::string source_path;  // set by the loader, passed to external adapters

  void validate() const;
  static ScenarioConfig from_json(const OJson& j);
  static ScenarioConfig from_file(const std::string& path);
  OJson to_json() const;
};

// Bounds/integrality check then dispatch to the surrogate or the external
// adapter (command <scenario> <params> <result>; nonzero exit = failure).
SimulationResult simulate(const ScenarioConfig& scenario, const ParameterVector& p);

struct Directive {
  std::string param;
  enum class Direction { Increase, Decrease, Hold } direction = Direction::Hold;
  std::string magnitude;
};

struct Feedback {
  std::string assessment;
  std::vector<Directive> directives;
  bool stop = false;
  bool fell_back = false;  // model analyst reply unparseable
};

struct IterationRecord {
  int t = 0;
  ParameterVector params;
  SimulationResult result;
  double composite = 0.0;
  std::optional<Feedback> feedback;
};

struct OptimizationHistory {
  std::vector<IterationRecord> iterations;
  std::size_t best = 0;

  const IterationRecord& best_record() const { return iterations.at(best); }
};

// Weighted sum of normalized metrics: value/initial for max-direction,
// initial/value for min-direction. Violated constraints or a failed run
// score -inf.
double composite_score(const SimulationResult& result, const SimulationResult& initial,
                       const ScenarioConfig& scenario);

// Rule-based analyst: stop after `window` consecutive iterations whose
// relative best-composite improvement is below epsilon; directives follow
// the sign of each coordinate's last improving move.
Feedback analyze_rule_based(const OptimizationHistory& history, const ScenarioConfig& scenario,
                            double epsilon = 1e-3, int window = 3);

// Model-backed analyst with rule-based fallback on parse failure.
Feedback analyze(const SimulationResult& result, const OptimizationHistory& history,
                 const ScenarioConfig& scenario, orch::LlmClient* analyst,
                 orch::Transcript* transcript);

struct OptimizeState {
  double step_scale = 0.10;  // fraction of each parameter's range
  bool last_was_global = false;
  std::map<std::string, Directive::Direction> last_direction;
};

// One stream per purpose: the branch coin stays independent of how many
// draws the global sampler consumes.
struct OptimizerRng {
  Rng coin;
  Rng sample;
  explicit OptimizerRng(std::uint64_t seed)
      : coin(seed), sample(seed ^ 0x9e3779b97f4a7c15ull) {}
};

// Fallback proposal: probability 0.5 global Latin-hypercube sample, else a
// directive-following perturbation of the best point. Always in bounds.
ParameterVector optimize_step(const ParameterVector& best, const Feedback& feedback,
                              const ParameterSpace& space, OptimizeState& state,
                              OptimizerRng& rng);

// Deterministic perturbation branch, exposed for direct use.
ParameterVector perturb(const ParameterVector& base, const Feedback& feedback,
                        const ParameterSpace& space, double step_scale);
ParameterVector clamp_to_space(ParameterVector p, const ParameterSpace& space);

struct OptimizationResult {
  OptimizationHistory history;
  ParameterVector best_params;
  SimulationResult best_result;
  bool stopped_early = false;
};

// Simulate -> analyze -> optimize loop from the scenario's initial point.
// `client` enables the model-backed analyst; nullptr = rule-based only.
OptimizationResult run_optimization(const ScenarioConfig& scenario, int budget,
                                    std::uint64_t seed, orch::LlmClient* client = nullptr,
                                    orch::Transcript* transcript = nullptr);

struct Ratios {
  std::optional<double> yield;
  std::optional<double> purity;
  std::optional<double> cost;
  std::optional<double> effective;  // r_Y * r_P
  std::optional<double> overall;    // r_eff / r_C

  OJson to_json() const;
};

// Improvement ratios of the best point over the initial one; zero
// denominators leave fields absent, never infinite.
Ratios score_ratios(const SimulationResult& init, const SimulationResult& best);

OJson history_row(const IterationRecord& record);
OJson history_to_json(const OptimizationHistory& history);

// Runs the four-expert strategy group and parses the initialize expert's
// fenced @@scenario config. Mechanical checks enforce the space invariants.
ScenarioConfig strategy_init(const AbstractGraph& graph, const std::string& requirements,
                             orch::LlmClient& client, orch::Transcript* transcript = nullptr);

}  // namespace cepro::param
