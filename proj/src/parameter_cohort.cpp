#include "cepro/parameter_cohort.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <set>

#include "cepro/error.hpp"
#include "cepro/text.hpp"

namespace cepro::param {

namespace fs = std::filesystem;

void ParameterSpace::validate() const {
  if (params.empty()) throw ConfigError("parameter space has no parameters");
  std::set<std::string> names;
  for (const auto& p : params) {
    if (p.name.empty()) throw ConfigError("parameter with empty name");
    if (!names.insert(p.name).second) throw ConfigError("duplicate parameter: " + p.name);
    if (!(p.min < p.max))
      throw ConfigError("parameter '" + p.name + "' needs min < max (got [" +
                        std::to_string(p.min) + ", " + std::to_string(p.max) + "])");
    if (p.initial < p.min || p.initial > p.max)
      throw ConfigError("parameter '" + p.name + "' initial value outside bounds");
    if (p.kind == ParamDef::Kind::Integer &&
        (std::floor(p.min) != p.min || std::floor(p.max) != p.max ||
         std::floor(p.initial) != p.initial))
      throw ConfigError("integer parameter '" + p.name + "' has fractional bounds or initial");
  }
}

const ParamDef* ParameterSpace::find(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

double ParameterVector::at(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw ConfigError("missing parameter: " + name);
  return it->second;
}

ParameterVector initial_point(const ParameterSpace& space) {
  ParameterVector p;
  for (const auto& def : space.params) p.values[def.name] = def.initial;
  return p;
}

void check_in_space(const ParameterVector& p, const ParameterSpace& space) {
  for (const auto& def : space.params) {
    auto it = p.values.find(def.name);
    if (it == p.values.end()) throw ConfigError("missing parameter: " + def.name);
    const double v = it->second;
    if (v < def.min || v > def.max)
      throw ConfigError("parameter '" + def.name + "' = " + std::to_string(v) +
                        " outside [" + std::to_string(def.min) + ", " + std::to_string(def.max) +
                        "]");
    if (def.kind == ParamDef::Kind::Integer && std::floor(v) != v)
      throw ConfigError("parameter '" + def.name + "' must be integral, got " +
                        std::to_string(v));
  }
  for (const auto& [name, v] : p.values)
    if (!space.find(name)) throw ConfigError("parameter '" + name + "' not in the search space");
}

SimulationResult surrogate_flowsheet(const ParameterVector& p) {
  constexpr double kFeed = 100.0;       // kmol/hr
  constexpr double kA1 = 1.0e6;         // 1/hr
  constexpr double kE1 = 50000.0;       // J/mol
  constexpr double kA2 = 5.0e8;         // 1/hr
  constexpr double kE2 = 80000.0;       // J/mol
  constexpr double kGas = 8.314;        // J/(mol K)

  const double T = p.at("reactor_T");
  const double tau = p.at("residence_time");
  const double plates = p.at("n_plates");
  const double reflux = p.at("reflux_ratio");

  const double k1 = kA1 * std::exp(-kE1 / (kGas * T));
  const double k2 = kA2 * std::exp(-kE2 / (kGas * T));
  const double conversion = 1.0 - std::exp(-(k1 + k2) * tau);
  const double selectivity = k1 / (k1 + k2);

  const double product_flow = kFeed * conversion * selectivity;
  const double byproduct_flow = kFeed * conversion * (1.0 - selectivity);

  const double rho = reflux / (1.0 + reflux);
  const double recovery = 1.0 - std::exp(-0.08 * plates * rho);
  const double slip = std::exp(-0.05 * plates * rho);

  SimulationResult r;
  r.yield = product_flow * recovery;
  const double denom = r.yield + byproduct_flow * slip;
  r.purity = denom > 0.0 ? r.yield / denom : 0.0;
  r.cost = 0.02 * (T - 300.0) + 0.8 * reflux + 0.05 * plates + 2.0 * tau;
  r.converged = true;
  return r;
}

void ScenarioConfig::validate() const {
  space.validate();
  if (objectives.empty()) throw ConfigError("scenario needs at least one objective");
  for (const auto& o : objectives) {
    if (o.metric != "yield" && o.metric != "purity" && o.metric != "cost")
      throw ConfigError("unknown objective metric: " + o.metric);
    if (!(o.weight > 0.0)) throw ConfigError("objective weight must be > 0 for " + o.metric);
  }
  for (const auto& c : constraints) {
    if (c.metric != "yield" && c.metric != "purity" && c.metric != "cost")
      throw ConfigError("unknown constraint metric: " + c.metric);
    if (c.sense != ">=" && c.sense != "<=")
      throw ConfigError("constraint sense must be '>=' or '<='");
  }
  if (simulator.kind != "surrogate" && simulator.kind != "external")
    throw ConfigError("simulator kind must be surrogate|external");
}

ScenarioConfig ScenarioConfig::from_json(const OJson& j) {
  ScenarioConfig s;
  if (!j.contains("space") || !j.at("space").contains("params"))
    throw ParseError("scenario: missing space.params");
  for (const auto& row : j.at("space").at("params")) {
    ParamDef def;
    def.name = row.at("name").get<std::string>();
    def.unit = row.value("unit", "");
    const std::string kind = row.value("kind", "real");
    if (kind == "integer")
      def.kind = ParamDef::Kind::Integer;
    else if (kind == "real")
      def.kind = ParamDef::Kind::Real;
    else
      throw ParseError("scenario: parameter '" + def.name + "' kind must be real|integer");
    def.min = row.at("min").get<double>();
    def.max = row.at("max").get<double>();
    def.initial = row.at("initial").get<double>();
    s.space.params.push_back(std::move(def));
  }
  if (j.contains("objectives")) {
    for (const auto& row : j.at("objectives")) {
      Objective o;
      o.metric = row.at("metric").get<std::string>();
      o.direction = row.at("direction").get<std::string>() == "min" ? Objective::Direction::Min
                                                                    : Objective::Direction::Max;
      o.weight = row.value("weight", 1.0);
      s.objectives.push_back(std::move(o));
    }
  }
  if (j.contains("constraints")) {
    for (const auto& row : j.at("constraints")) {
      Constraint c;
      c.metric = row.at("metric").get<std::string>();
      c.bound = row.at("bound").get<double>();
      c.sense = row.at("sense").get<std::string>();
      s.constraints.push_back(std::move(c));
    }
  }
  if (j.contains("simulator")) {
    s.simulator.kind = j.at("simulator").value("kind", "surrogate");
    s.simulator.model = j.at("simulator").value("model", "");
    s.simulator.command = j.at("simulator").value("command", "");
  }
  s.validate();
  return s;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
  ScenarioConfig s = from_json(io::read_json(path));
  s.source_path = path;
  return s;
}

OJson ScenarioConfig::to_json() const {
  OJson j;
  j["space"]["params"] = OJson::array();
  for (const auto& p : space.params) {
    OJson row;
    row["name"] = p.name;
    row["unit"] = p.unit;
    row["kind"] = p.kind == ParamDef::Kind::Integer ? "integer" : "real";
    row["min"] = p.min;
    row["max"] = p.max;
    row["initial"] = p.initial;
    j["space"]["params"].push_back(std::move(row));
  }
  j["objectives"] = OJson::array();
  for (const auto& o : objectives) {
    j["objectives"].push_back(
        {{"metric", o.metric},
         {"direction", o.direction == Objective::Direction::Min ? "min" : "max"},
         {"weight", o.weight}});
  }
  j["constraints"] = OJson::array();
  for (const auto& c : constraints)
    j["constraints"].push_back({{"metric", c.metric}, {"bound", c.bound}, {"sense", c.sense}});
  j["simulator"] = OJson::object();
  j["simulator"]["kind"] = simulator.kind;
  j["simulator"]["model"] = simulator.model;
  if (!simulator.command.empty()) j["simulator"]["command"] = simulator.command;
  return j;
}

namespace {

SimulationResult run_external_adapter(const ScenarioConfig& scenario, const ParameterVector& p) {
  SimulationResult r;
  r.converged = false;
  if (scenario.simulator.command.empty()) {
    r.diagnostics["error"] = "adapter_unavailable";
    return r;
  }

  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  const fs::path dir = fs::temp_directory_path() / ("cepro_adapter_" + std::to_string(stamp));
  fs::create_directories(dir);
  const fs::path params_path = dir / "params.json";
  const fs::path result_path = dir / "result.json";

  OJson params;
  params["model"] = scenario.simulator.model;
  params["params"] = OJson::object();
  for (const auto& [name, value] : p.values) params["params"][name] = value;
  io::write_json(params_path.string(), params);

  const std::string cmd = scenario.simulator.command + " '" + scenario.source_path + "' '" +
                          params_path.string() + "' '" + result_path.string() + "'";
  const int status = std::system(cmd.c_str());
  if (status != 0) {
    r.diagnostics["error"] = "adapter_exit_" + std::to_string(status);
    return r;
  }
  try {
    OJson out = io::read_json(result_path.string());
    r.yield = out.value("yield", 0.0);
    r.purity = out.value("purity", 0.0);
    r.cost = out.value("cost", 0.0);
    r.converged = out.value("converged", false);
  } catch (const Error& e) {
    r.diagnostics["error"] = std::string("adapter_result: ") + e.what();
  }
  return r;
}

}  // namespace

SimulationResult simulate(const ScenarioConfig& scenario, const ParameterVector& p) {
  check_in_space(p, scenario.space);

  const auto start = std::chrono::steady_clock::now();
  SimulationResult r = scenario.simulator.kind == "external" ? run_external_adapter(scenario, p)
                                                             : surrogate_flowsheet(p);
  const auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - start);
  r.diagnostics["wall_us"] = std::to_string(elapsed.count());
  return r;
}

namespace {

double metric_value(const SimulationResult& r, const std::string& metric) {
  if (metric == "yield") return r.yield;
  if (metric == "purity") return r.purity;
  return r.cost;
}

}  // namespace

double composite_score(const SimulationResult& result, const SimulationResult& initial,
                       const ScenarioConfig& scenario) {
  if (!result.converged) return -std::numeric_limits<double>::infinity();
  for (const auto& c : scenario.constraints) {
    const double v = metric_value(result, c.metric);
    if (c.sense == ">=" ? v < c.bound : v > c.bound)
      return -std::numeric_limits<double>::infinity();
  }

  double score = 0.0;
  for (const auto& o : scenario.objectives) {
    const double v = metric_value(result, o.metric);
    const double v0 = metric_value(initial, o.metric);
    double normalized = 0.0;
    if (o.direction == Objective::Direction::Max) {
      if (v0 > 0.0) normalized = v / v0;
    } else {
      if (v > 0.0 && v0 > 0.0) normalized = v0 / v;
    }
    score += o.weight * normalized;
  }
  return score;
}

namespace {

struct LastMove {
  double delta = 0.0;
  bool improved = false;
  bool found = false;
};

// Most recent iteration that moved this coordinate, and whether the
// composite improved right after that move.
LastMove last_move(const OptimizationHistory& history, const std::string& name) {
  LastMove move;
  for (std::size_t i = history.iterations.size(); i-- > 1;) {
    const auto& cur = history.iterations[i];
    const auto& prev = history.iterations[i - 1];
    if (!cur.params.has(name) || !prev.params.has(name)) continue;
    const double delta = cur.params.at(name) - prev.params.at(name);
    if (delta == 0.0) continue;
    move.delta = delta;
    move.improved = cur.composite > prev.composite;
    move.found = true;
    break;
  }
  return move;
}

}  // namespace

Feedback analyze_rule_based(const OptimizationHistory& history, const ScenarioConfig& scenario,
                            double epsilon, int window) {
  if (history.iterations.empty()) throw ConfigError("analyze requires at least one iteration");

  Feedback fb;

  // Stop once `window` consecutive iteration-to-iteration relative composite
  // improvements all fall below epsilon.
  const auto& its = history.iterations;
  if (static_cast<int>(its.size()) > window) {
    int flat = 0;
    for (std::size_t i = its.size(); i-- > 1 && flat < window;) {
      const double prev = its[i - 1].composite;
      const double rel = (its[i].composite - prev) / std::max(std::abs(prev), 1e-12);
      if (rel < epsilon)
        ++flat;
      else
        break;
    }
    if (flat >= window) {
      fb.stop = true;
      fb.assessment = "no relative improvement above epsilon for " + std::to_string(window) +
                      " consecutive iterations";
      return fb;
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < its.size(); ++i)
    if (its[i].composite > its[best].composite) best = i;
  const ParameterVector& anchor = its[best].params;

  for (const auto& def : scenario.space.params) {
    Directive d;
    d.param = def.name;
    const LastMove move = last_move(history, def.name);
    if (!move.found) {
      d.direction = Directive::Direction::Increase;
    } else if (move.delta > 0.0) {
      d.direction = move.improved ? Directive::Direction::Increase : Directive::Direction::Decrease;
    } else {
      d.direction = move.improved ? Directive::Direction::Decrease : Directive::Direction::Increase;
    }
    // A step from the best point can only leave a bound inward.
    if (anchor.has(def.name)) {
      if (anchor.at(def.name) >= def.max) d.direction = Directive::Direction::Decrease;
      if (anchor.at(def.name) <= def.min) d.direction = Directive::Direction::Increase;
    }
    d.magnitude = "step";
    fb.directives.push_back(std::move(d));
  }
  fb.assessment = "continue search";
  return fb;
}

namespace {

std::optional<Feedback> parse_feedback(const std::string& content,
                                       const ParameterSpace& space) {
  auto block = orch::fenced_block(content, "@@feedback");
  if (!block) return std::nullopt;
  Feedback fb;
  bool has_stop = false;
  for (const auto& line : *block) {
    if (text::starts_with(line, "stop:")) {
      const std::string v = text::trim(line.substr(5));
      fb.stop = v == "yes" || v == "true";
      has_stop = true;
    } else if (text::starts_with(line, "assessment:")) {
      fb.assessment = text::trim(line.substr(11));
    } else if (text::starts_with(line, "directive:")) {
      auto fields = text::split_fields(line.substr(10));
      if (fields.size() < 2) continue;
      if (!space.find(fields[0])) continue;  // directives must reference the space
      Directive d;
      d.param = fields[0];
      if (fields[1] == "increase")
        d.direction = Directive::Direction::Increase;
      else if (fields[1] == "decrease")
        d.direction = Directive::Direction::Decrease;
      else if (fields[1] == "hold")
        d.direction = Directive::Direction::Hold;
      else
        continue;
      if (fields.size() > 2) d.magnitude = fields[2];
      fb.directives.push_back(std::move(d));
    }
  }
  if (!has_stop) return std::nullopt;
  return fb;
}

std::string render_history(const OptimizationHistory& history) {
  std::string out = "t | composite | yield | purity | cost | converged\n";
  for (const auto& it : history.iterations) {
    char line[160];
    std::snprintf(line, sizeof(line), "%d | %.6g | %.6g | %.6g | %.6g | %s\n", it.t, it.composite,
                  it.result.yield, it.result.purity, it.result.cost,
                  it.result.converged ? "yes" : "no");
    out += line;
  }
  return out;
}

}  // namespace

Feedback analyze(const SimulationResult& result, const OptimizationHistory& history,
                 const ScenarioConfig& scenario, orch::LlmClient* analyst,
                 orch::Transcript* transcript) {
  (void)result;  // the latest result is history.back()
  if (!analyst) return analyze_rule_based(history, scenario);

  orch::AgentSpec agent{"analyst", "",
                        "You are the optimization analyst. Study the history table and reply "
                        "with:\n@@feedback\nstop: yes|no\nassessment: <text>\ndirective: param | "
                        "increase|decrease|hold | hint\n@@end",
                        {}};
  orch::Transcript local;
  orch::Transcript& t = transcript ? *transcript : local;
  orch::AgentResult reply =
      run_agent(agent, {}, "History:\n" + render_history(history), *analyst, nullptr, 0, t);
  if (auto fb = parse_feedback(reply.output.text(), scenario.space)) return *fb;

  Feedback fb = analyze_rule_based(history, scenario);
  fb.fell_back = true;
  return fb;
}

ParameterVector clamp_to_space(ParameterVector p, const ParameterSpace& space) {
  ParameterVector out;
  for (const auto& def : space.params) {
    double v = p.has(def.name) ? p.at(def.name) : def.initial;
    if (def.kind == ParamDef::Kind::Integer) v = std::round(v);
    v = std::clamp(v, def.min, def.max);
    out.values[def.name] = v;
  }
  return out;
}

ParameterVector perturb(const ParameterVector& base, const Feedback& feedback,
                        const ParameterSpace& space, double step_scale) {
  ParameterVector next = base;
  for (const auto& d : feedback.directives) {
    const ParamDef* def = space.find(d.param);
    if (!def || d.direction == Directive::Direction::Hold) continue;
    const double step = step_scale * (def->max - def->min);
    const double sign = d.direction == Directive::Direction::Increase ? 1.0 : -1.0;
    next.values[d.param] = base.at(d.param) + sign * step;
  }
  return clamp_to_space(std::move(next), space);
}

ParameterVector optimize_step(const ParameterVector& best, const Feedback& feedback,
                              const ParameterSpace& space, OptimizeState& state,
                              OptimizerRng& rng) {
  if (rng.coin.uniform() < 0.5) {
    // Global draw (single-point Latin hypercube degenerates to uniform).
    state.last_was_global = true;
    ParameterVector p;
    for (const auto& def : space.params)
      p.values[def.name] = rng.sample.uniform(def.min, def.max);
    return clamp_to_space(std::move(p), space);
  }
  state.last_was_global = false;
  for (const auto& d : feedback.directives)
    if (d.direction != Directive::Direction::Hold) state.last_direction[d.param] = d.direction;
  return perturb(best, feedback, space, state.step_scale);
}

OptimizationResult run_optimization(const ScenarioConfig& scenario, int budget,
                                    std::uint64_t seed, orch::LlmClient* client,
                                    orch::Transcript* transcript) {
  if (budget < 1) throw ConfigError("optimization budget must be >= 1");
  scenario.validate();

  OptimizationResult out;
  OptimizerRng rng(seed);
  OptimizeState state;

  ParameterVector p0 = initial_point(scenario.space);
  SimulationResult r0 = simulate(scenario, p0);
  if (!r0.converged)
    throw EndpointError("simulator failed at t=0: " + (r0.diagnostics.count("error")
                                                           ? r0.diagnostics.at("error")
                                                           : std::string("not converged")),
                        false);

  IterationRecord first;
  first.t = 0;
  first.params = p0;
  first.result = r0;
  first.composite = composite_score(r0, r0, scenario);
  out.history.iterations.push_back(std::move(first));
  out.history.best = 0;

  for (int t = 1; t < budget; ++t) {
    Feedback fb = analyze(out.history.iterations.back().result, out.history, scenario, client,
                          transcript);
    out.history.iterations.back().feedback = fb;
    if (fb.stop) {
      out.stopped_early = true;
      break;
    }

    const ParameterVector& anchor = out.history.best_record().params;
    ParameterVector candidate = optimize_step(anchor, fb, scenario.space, state, rng);

    IterationRecord record;
    record.t = t;
    record.params = candidate;
    try {
      record.result = simulate(scenario, candidate);
    } catch (const Error& e) {
      record.result.converged = false;
      record.result.diagnostics["error"] = e.what();
    }
    record.composite = composite_score(record.result, r0, scenario);
    out.history.iterations.push_back(std::move(record));

    const double best_composite = out.history.best_record().composite;
    if (out.history.iterations.back().composite > best_composite) {
      out.history.best = out.history.iterations.size() - 1;
      state.step_scale = 0.10;  // reset annealing on improvement
    } else if (!state.last_was_global) {
      // Global draws do not shrink the perturbation step.
      state.step_scale *= 0.7;
    }
  }

  out.best_params = out.history.best_record().params;
  out.best_result = out.history.best_record().result;
  return out;
}

Ratios score_ratios(const SimulationResult& init, const SimulationResult& best) {
  Ratios r;
  if (init.yield != 0.0) r.yield = best.yield / init.yield;
  if (init.purity != 0.0) r.purity = best.purity / init.purity;
  if (init.cost != 0.0) r.cost = best.cost / init.cost;
  if (r.yield && r.purity) r.effective = *r.yield * *r.purity;
  if (r.effective && r.cost && *r.cost != 0.0) r.overall = *r.effective / *r.cost;
  return r;
}

OJson Ratios::to_json() const {
  OJson j = OJson::object();
  if (yield) j["r_yield"] = *yield;
  if (purity) j["r_purity"] = *purity;
  if (cost) j["r_cost"] = *cost;
  if (effective) j["r_eff"] = *effective;
  if (overall) j["r_overall"] = *overall;
  return j;
}

OJson history_row(const IterationRecord& record) {
  OJson row;
  row["t"] = record.t;
  row["params"] = OJson::object();
  for (const auto& [name, value] : record.params.values) row["params"][name] = value;
  row["result"] = {{"yield", record.result.yield},
                   {"purity", record.result.purity},
                   {"cost", record.result.cost},
                   {"converged", record.result.converged}};
  if (record.feedback) {
    OJson fb;
    fb["assessment"] = record.feedback->assessment;
    fb["stop"] = record.feedback->stop;
    fb["directives"] = OJson::array();
    for (const auto& d : record.feedback->directives) {
      const char* dir = d.direction == Directive::Direction::Increase   ? "increase"
                        : d.direction == Directive::Direction::Decrease ? "decrease"
                                                                        : "hold";
      fb["directives"].push_back(
          {{"param", d.param}, {"direction", dir}, {"magnitude", d.magnitude}});
    }
    row["feedback"] = std::move(fb);
  } else {
    row["feedback"] = nullptr;
  }
  return row;
}

OJson history_to_json(const OptimizationHistory& history) {
  OJson rows = OJson::array();
  for (const auto& it : history.iterations) rows.push_back(history_row(it));
  return rows;
}

ScenarioConfig strategy_init(const AbstractGraph& graph, const std::string& requirements,
                             orch::LlmClient& client, orch::Transcript* transcript) {
  const EquipmentOntology ontology = EquipmentOntology::standard();
  ValidationReport report = validate_topology(graph, ontology);
  if (!report.legal) throw ConfigError("strategy_init requires a topologically legal graph");

  orch::ChatGroupSpec group;
  group.agents.push_back({"sentinel", "",
                          "You are the sentinel expert. From the flow diagram identify the key "
                          "units and the critical state and control variables.",
                          {}});
  group.agents.push_back({"chemist", "",
                          "You are the chemist expert. Provide kinetic and thermodynamic insight "
                          "for the proposed variables.",
                          {}});
  group.agents.push_back({"inspector", "",
                          "You are the inspector expert. State hard safety limits and minimum "
                          "product quality specifications.",
                          {}});
  group.agents.push_back(
      {"initialize", "",
       "You are the initialize expert. Synthesize the discussion into a machine-readable search "
       "space. Reply with an @@scenario block holding the scenario JSON (space.params with "
       "name/unit/kind/min/max/initial, objectives, constraints, simulator), then " +
           std::string(orch::kFinalMarker) + ".",
       {}});
  group.terminator = "initialize";
  group.max_turns = 4;
  group.output_fields = {"text"};

  const std::string task = "Requirements:\n" + requirements + "\nFlow diagram:\n" +
                           serialize_graph(graph);
  orch::GroupResult run = run_chat_group(group, task, client);
  if (transcript) *transcript = run.transcript;

  std::string content;
  for (auto it = run.transcript.messages.rbegin(); it != run.transcript.messages.rend(); ++it) {
    if (it->role == orch::Role::Assistant && it->sender == "initialize") {
      content = it->text();
      break;
    }
  }

  orch::Transcript scratch;
  orch::Transcript& t = transcript ? *transcript : scratch;
  for (int attempt = 0;; ++attempt) {
    auto block = orch::fenced_text(content, "@@scenario");
    if (block) {
      // Mechanical checks run inside from_json/validate.
      return ScenarioConfig::from_json(io::parse_json(*block, "scenario config"));
    }
    if (attempt >= 1) throw ConfigError("initialize expert produced no parseable @@scenario block");
    orch::AgentResult retry = run_agent(
        group.agents.back(), {orch::Message::make(orch::Role::Assistant, content, "initialize")},
        "parse error: missing @@scenario block; emit the fenced scenario JSON", client, nullptr, 0,
        t);
    content = retry.output.text();
  }
}

}  // namespace cepro::param
