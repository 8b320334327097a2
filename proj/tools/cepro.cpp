// Command-line surface wiring the cohorts, stores, simulator, and metric
// suite into reproducible runs.
//
// Exit codes: 0 success, 1 usage/IO, 2 domain validation, 3 endpoint or
// simulator failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>

#include "CLI11.hpp"

#include "cepro/concept_cohort.hpp"
#include "cepro/error.hpp"
#include "cepro/graph.hpp"
#include "cepro/io.hpp"
#include "cepro/knowledge_cohort.hpp"
#include "cepro/metrics.hpp"
#include "cepro/orchestration.hpp"
#include "cepro/parameter_cohort.hpp"
#include "cepro/text.hpp"

namespace fs = std::filesystem;
using namespace cepro;

namespace {

struct RunConfig {
  std::string base_url;
  std::string model;
  std::string api_key;
  std::string mode = "scripted";  // scripted | remote
  std::string script;
  std::uint64_t seed = 0;
  double t_auto = 0.95;
  double t_review = 0.85;
  double tau = 0.7;
  int max_iters = 7;
  int budget = 20;
  int kb_k = 8;
  int kg_depth = 2;
  int backoff_ms = 1000;
  std::string store_dir = "store";
};

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

// Precedence: flags > environment > config file > defaults. The config file
// and environment are folded into the defaults CLI11 starts from, so any
// flag the user passes wins.
RunConfig load_base_config(int argc, char** argv) {
  RunConfig cfg;
  std::string config_path;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  }
  if (!config_path.empty()) {
    OJson j = io::read_json(config_path);
    cfg.base_url = j.value("base_url", cfg.base_url);
    cfg.model = j.value("model", cfg.model);
    cfg.mode = j.value("mode", cfg.mode);
    cfg.script = j.value("script", cfg.script);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.t_auto = j.value("t_auto", cfg.t_auto);
    cfg.t_review = j.value("t_review", cfg.t_review);
    cfg.tau = j.value("tau", cfg.tau);
    cfg.max_iters = j.value("max_iters", cfg.max_iters);
    cfg.budget = j.value("budget", cfg.budget);
    cfg.kb_k = j.value("kb_k", cfg.kb_k);
    cfg.kg_depth = j.value("kg_depth", cfg.kg_depth);
    cfg.backoff_ms = j.value("backoff_ms", cfg.backoff_ms);
    cfg.store_dir = j.value("store", cfg.store_dir);
  }
  cfg.base_url = env_or("CEPRO_BASE_URL", cfg.base_url);
  cfg.model = env_or("CEPRO_MODEL", cfg.model);
  cfg.api_key = env_or("CEPRO_API_KEY", cfg.api_key);
  return cfg;
}

std::unique_ptr<orch::LlmClient> make_client(const RunConfig& cfg) {
  if (cfg.mode == "scripted") {
    if (cfg.script.empty())
      throw ConfigError("scripted mode requires --script (or 'script' in the config file)");
    return std::make_unique<orch::ScriptedClient>(orch::ScriptedClient::from_file(cfg.script));
  }
  if (cfg.mode == "remote") {
    orch::RemoteConfig remote;
    remote.base_url = cfg.base_url;
    remote.model = cfg.model;
    remote.api_key = cfg.api_key;
    remote.initial_backoff_ms = cfg.backoff_ms;
    return std::make_unique<orch::RemoteClient>(remote);
  }
  throw ConfigError("mode must be scripted|remote, got '" + cfg.mode + "'");
}

void write_transcript(const std::string& path, const orch::Transcript& transcript) {
  if (!path.empty()) io::write_json(path, transcript.to_json());
}

OJson validation_to_json(const ValidationReport& report) {
  OJson j;
  j["legal"] = report.legal;
  j["compliant"] = report.compliant;
  j["violations"] = OJson::array();
  for (const auto& v : report.violations) {
    j["violations"].push_back(
        {{"rule_id", v.rule_id},
         {"severity", v.severity == Severity::Legality ? "legality" : "compliance"},
         {"targets", v.targets},
         {"message", v.message}});
  }
  return j;
}

bool store_present(const std::string& dir) {
  return fs::exists(fs::path(dir) / "chunks.jsonl") &&
         fs::exists(fs::path(dir) / "entities.jsonl");
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const RunConfig& cfg, const std::string& doc_path, bool merge_agent,
               const std::string& transcript_path) {
  const std::string document = io::read_file(doc_path);
  const std::string doc_id = fs::path(doc_path).stem().string();

  knowledge::Stores stores =
      store_present(cfg.store_dir) ? knowledge::Stores::load(cfg.store_dir) : knowledge::Stores{};
  auto client = make_client(cfg);
  knowledge::MergeThresholds thresholds{cfg.t_auto, cfg.t_review};

  knowledge::UpdateResult result =
      knowledge_update(doc_id, document, stores, *client, thresholds, merge_agent);
  stores.save(cfg.store_dir);
  write_transcript(transcript_path, result.transcript);

  std::printf("chunks=%d entities_added=%d triples_added=%d auto_merged=%d review_merged=%d "
              "distinct_pairs=%d\n",
              result.chunk_count, result.entities_added, result.triples_added,
              result.merge_stats.auto_merged, result.merge_stats.review_merged,
              result.merge_stats.distinct_pairs);
  for (const auto& f : result.flags) std::printf("flag: %s\n", f.c_str());
  return 0;
}

// --------------------------------------------------------------- augment

int cmd_augment(const RunConfig& cfg, const std::string& query, bool no_web, bool no_kb,
                bool no_kg, const std::string& web_fixture, const std::string& out_path,
                const std::string& transcript_path) {
  knowledge::AugmentConfig acfg;
  acfg.ablation = {!no_web, !no_kb, !no_kg};
  acfg.kb_k = cfg.kb_k;
  acfg.kg_depth = cfg.kg_depth;
  if (acfg.ablation.enabled_count() == 0) {
    std::fprintf(stderr, "error: all retrieval streams ablated\n");
    return 1;
  }
  if ((acfg.ablation.kb || acfg.ablation.kg) && !store_present(cfg.store_dir))
    throw ConfigError("store '" + cfg.store_dir + "' missing (run ingest first or ablate kb/kg)");

  knowledge::Stores stores = (acfg.ablation.kb || acfg.ablation.kg)
                                 ? knowledge::Stores::load(cfg.store_dir)
                                 : knowledge::Stores{};
  knowledge::CannedWebSearch web =
      web_fixture.empty() ? knowledge::CannedWebSearch{}
                          : knowledge::CannedWebSearch::from_file(web_fixture);
  auto client = make_client(cfg);

  knowledge::AugmentResult result = knowledge_augment(query, stores, web, *client, acfg);
  write_transcript(transcript_path, result.transcript);

  OJson report;
  report["text"] = result.report.text;
  report["citations"] = OJson::array();
  for (const auto& c : result.report.citations)
    report["citations"].push_back({{"stream", c.stream}, {"ref", c.ref}});
  report["conflicts"] = result.report.conflicts;
  report["notes"] = result.report.notes;
  io::write_json(out_path, report);

  for (const auto& c : result.report.citations)
    std::printf("citation: %s | %s\n", c.stream.c_str(), c.ref.c_str());
  return 0;
}

// ----------------------------------------------------------------- parse

int cmd_parse(const RunConfig& cfg, const std::string& input_path, bool image,
              const std::string& out_graph, const std::string& out_report,
              const std::string& transcript_path) {
  pfd::PfdInput input = image ? pfd::PfdInput::from_image(input_path)
                              : pfd::PfdInput::from_text(io::read_file(input_path));
  auto client = make_client(cfg);
  const EquipmentOntology ontology = EquipmentOntology::standard();

  pfd::ParseTopologyResult result = parse_topology(input, *client, ontology);
  write_transcript(transcript_path, result.transcript);
  if (!result.ok) throw EndpointError("parse workflow aborted: " + result.error, false);

  io::write_file(out_graph, serialize_graph(result.graph));
  OJson report = validation_to_json(result.report);
  report["floating_dropped"] = result.floating_dropped;
  report["off_ontology"] = result.off_ontology;
  report["flagged"] = result.flagged;
  io::write_json(out_report, report);

  std::printf("nodes=%zu edges=%zu legal=%s compliant=%s floating_dropped=%d\n",
              result.graph.equipment.size(), result.graph.connections.size(),
              result.report.legal ? "yes" : "no", result.report.compliant ? "yes" : "no",
              result.floating_dropped);
  return 0;
}

// -------------------------------------------------------------- complete

int cmd_complete(const RunConfig& cfg, const std::string& graph_path, std::string mask_id,
                 const std::string& truth, int k_max, const std::string& out_path,
                 const std::string& transcript_path) {
  AbstractGraph graph = parse_graph(io::read_file(graph_path));

  MaskedGraph masked;
  const EquipmentNode* pre_masked = nullptr;
  for (const auto& n : graph.equipment)
    if (n.type == kMaskedType) pre_masked = &n;
  if (pre_masked) {
    masked.graph = graph;
    masked.masked_id = pre_masked->id;
    if (!truth.empty()) masked.truth_type = truth;
  } else {
    masked = mask_node(graph,
                       mask_id.empty() ? std::nullopt : std::optional<std::string>(mask_id),
                       mask_id.empty() ? std::optional<std::uint64_t>(cfg.seed) : std::nullopt);
    if (!truth.empty()) masked.truth_type = truth;
  }

  auto client = make_client(cfg);
  const EquipmentOntology ontology = EquipmentOntology::standard();
  orch::Transcript transcript;
  pfd::CompletionResult result = pfd::complete_graph(masked, *client, ontology, k_max, transcript);
  write_transcript(transcript_path, transcript);

  OJson out;
  out["masked_id"] = result.masked_id;
  out["truth_type"] = masked.truth_type ? OJson(*masked.truth_type) : OJson(nullptr);
  out["candidates"] = OJson::array();
  for (const auto& c : result.candidates)
    out["candidates"].push_back({{"rank", c.rank}, {"type", c.type}, {"rationale", c.rationale}});
  io::write_json(out_path, out);

  if (masked.truth_type) {
    metrics::CompletionCase cc;
    for (const auto& c : result.candidates) cc.ranked_types.push_back(c.type);
    cc.truth_type = *masked.truth_type;
    std::string line = "A@K:";
    for (int k : {1, 3, 5}) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), " A@%d=%.3f", k, *metrics::topk_accuracy({cc}, k));
      line += buf;
    }
    std::printf("%s\n", line.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------- design

int cmd_design(const RunConfig& cfg, const std::string& task_path, const std::string& out_graph,
               const std::string& out_history, const std::string& transcript_path) {
  pfd::DesignTask task = pfd::DesignTask::from_json(io::read_json(task_path));
  auto client = make_client(cfg);
  const EquipmentOntology ontology = EquipmentOntology::standard();
  pfd::RuleSet rules{&ontology, task.extra_rules};

  pfd::DesignResult result = design_loop(task.description, *client, rules, cfg.max_iters);
  write_transcript(transcript_path, result.transcript);

  io::write_file(out_graph, serialize_graph(result.final_graph));
  OJson history;
  history["converged"] = result.converged;
  history["states"] = OJson::array();
  for (const auto& s : result.history) {
    OJson state;
    state["t"] = s.t;
    state["graph"] = graph_to_json(s.graph);
    state["verdict"] = s.critique.verdict == pfd::CritiqueVerdict::Accept ? "accept" : "revise";
    state["validation"] = validation_to_json(s.validation);
    history["states"].push_back(std::move(state));
  }
  history["final_graph"] = graph_to_json(result.final_graph);
  io::write_json(out_history, history);

  std::printf("iterations=%zu converged=%s\n", result.history.size(),
              result.converged ? "yes" : "no");
  return result.converged ? 0 : 2;
}

// -------------------------------------------------------------- optimize

int cmd_optimize(const RunConfig& cfg, const std::string& scenario_path,
                 const std::string& out_dir, bool model_analyst,
                 const std::string& transcript_path) {
  param::ScenarioConfig scenario = param::ScenarioConfig::from_file(scenario_path);

  std::unique_ptr<orch::LlmClient> client;
  orch::Transcript transcript;
  if (model_analyst) client = make_client(cfg);

  param::OptimizationResult result =
      run_optimization(scenario, cfg.budget, cfg.seed, client.get(), &transcript);
  write_transcript(transcript_path, transcript);

  fs::create_directories(out_dir);
  std::vector<OJson> rows;
  for (const auto& it : result.history.iterations) rows.push_back(param::history_row(it));
  io::write_jsonl((fs::path(out_dir) / "history.jsonl").string(), rows);

  OJson best;
  best["t"] = result.history.best_record().t;
  best["params"] = OJson::object();
  for (const auto& [name, value] : result.best_params.values) best["params"][name] = value;
  best["result"] = {{"yield", result.best_result.yield},
                    {"purity", result.best_result.purity},
                    {"cost", result.best_result.cost},
                    {"converged", result.best_result.converged}};
  best["composite"] = result.history.best_record().composite;
  io::write_json((fs::path(out_dir) / "best.json").string(), best);

  param::Ratios ratios =
      score_ratios(result.history.iterations.front().result, result.best_result);
  io::write_json((fs::path(out_dir) / "ratios.json").string(), ratios.to_json());

  if (ratios.overall)
    std::printf("iterations=%zu r_overall=%.6f\n", result.history.iterations.size(),
                *ratios.overall);
  else
    std::printf("iterations=%zu r_overall=absent\n", result.history.iterations.size());
  return 0;
}

// ------------------------------------------------------------------ eval

std::map<std::string, fs::path> dir_cases(const std::string& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::map<std::string, fs::path> cases;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ext) cases[entry.path().stem().string()] = entry.path();
  }
  return cases;
}

// Aligns pred and gt case ids; orphans on either side are a domain error.
std::vector<std::string> align_cases(const std::map<std::string, fs::path>& pred,
                                     const std::map<std::string, fs::path>& gt) {
  std::vector<std::string> orphans;
  for (const auto& [id, p] : pred)
    if (!gt.count(id)) orphans.push_back("pred-only: " + id);
  for (const auto& [id, p] : gt)
    if (!pred.count(id)) orphans.push_back("gt-only: " + id);
  if (!orphans.empty())
    throw ConfigError("case id mismatch:\n  " + text::join(orphans, "\n  "));
  std::vector<std::string> ids;
  for (const auto& [id, p] : pred) ids.push_back(id);
  return ids;
}

int cmd_eval(const RunConfig& cfg, const std::string& task, const std::string& pred,
             const std::string& gt, const std::string& out_path) {
  std::vector<metrics::CaseMetrics> cases;

  if (task == "parse") {
    auto pred_cases = dir_cases(pred, ".json");
    auto gt_cases = dir_cases(gt, ".json");
    for (const auto& id : align_cases(pred_cases, gt_cases)) {
      AbstractGraph pg = parse_graph(io::read_file(pred_cases.at(id).string()));
      AbstractGraph gg = parse_graph(io::read_file(gt_cases.at(id).string()));
      metrics::ParsingScores s = metrics::parsing_scores(pg, gg, cfg.tau);
      metrics::CaseMetrics cm{id, task, {}};
      if (s.equipment_accuracy) cm.values["equipment_accuracy"] = *s.equipment_accuracy;
      if (s.equipment_recall) cm.values["equipment_recall"] = *s.equipment_recall;
      if (s.connection_accuracy) cm.values["connection_accuracy"] = *s.connection_accuracy;
      if (s.connection_recall) cm.values["connection_recall"] = *s.connection_recall;
      cases.push_back(std::move(cm));
    }
  } else if (task == "extract") {
    // Per-case knowledge-graph directories holding entities/triples jsonl.
    std::map<std::string, fs::path> pred_cases, gt_cases;
    for (const auto& entry : fs::directory_iterator(pred))
      if (entry.is_directory()) pred_cases[entry.path().filename().string()] = entry.path();
    for (const auto& entry : fs::directory_iterator(gt))
      if (entry.is_directory()) gt_cases[entry.path().filename().string()] = entry.path();
    for (const auto& id : align_cases(pred_cases, gt_cases)) {
      knowledge::KnowledgeGraph pk = knowledge::load_kg(pred_cases.at(id).string());
      knowledge::KnowledgeGraph gk = knowledge::load_kg(gt_cases.at(id).string());

      std::vector<std::string> pred_names, gt_names;
      std::vector<std::string> pred_ids, gt_ids;
      for (const auto& [eid, e] : pk.entities)
        if (e.is_root()) pred_names.push_back(e.name), pred_ids.push_back(eid);
      for (const auto& [eid, e] : gk.entities)
        if (e.is_root()) gt_names.push_back(e.name), gt_ids.push_back(eid);

      metrics::Prf prf = metrics::entity_prf(pred_names, gt_names, cfg.tau);
      metrics::EntityMapping mapping = metrics::match_entities(pred_names, gt_names, cfg.tau);
      std::map<std::string, std::string> node_map;
      for (const auto& pair : mapping.pairs)
        node_map[gt_ids[pair.gt_index]] = pred_ids[pair.pred_index];

      metrics::SimpleGraph ps, gs;
      ps.nodes = pred_ids;
      gs.nodes = gt_ids;
      for (const auto& t : pk.triples) ps.edges.emplace_back(t.subject, t.object);
      for (const auto& t : gk.triples) gs.edges.emplace_back(t.subject, t.object);
      metrics::GraphMetricReport gm = metrics::graph_metrics(gs, ps, node_map);

      metrics::CaseMetrics cm{id, task, {}};
      cm.values["accuracy"] = prf.accuracy;
      cm.values["recall"] = prf.recall;
      cm.values["f1"] = prf.f1;
      if (gm.mec) cm.values["mec"] = *gm.mec;
      if (gm.med) cm.values["med"] = *gm.med;
      cm.values["coverage"] = gm.coverage;
      cases.push_back(std::move(cm));
    }
  } else if (task == "complete") {
    auto pred_cases = dir_cases(pred, ".json");
    auto gt_cases = dir_cases(gt, ".json");
    for (const auto& id : align_cases(pred_cases, gt_cases)) {
      OJson pj = io::read_json(pred_cases.at(id).string());
      OJson gj = io::read_json(gt_cases.at(id).string());
      metrics::CompletionCase cc;
      for (const auto& c : pj.at("candidates")) cc.ranked_types.push_back(c.at("type"));
      cc.truth_type = gj.at("truth_type").get<std::string>();
      metrics::CaseMetrics cm{id, task, {}};
      for (int k : {1, 3, 5, 10}) {
        auto a = metrics::topk_accuracy({cc}, k);
        cm.values["a_at_" + std::to_string(k)] = a ? *a : 0.0;
      }
      cases.push_back(std::move(cm));
    }
  } else if (task == "design") {
    auto pred_cases = dir_cases(pred, ".json");
    if (pred_cases.empty()) throw ConfigError("no design cases in " + pred);
    const EquipmentOntology ontology = EquipmentOntology::standard();
    std::vector<metrics::DesignOutcome> outcomes;
    for (const auto& [id, path] : pred_cases) {
      AbstractGraph g = parse_graph(io::read_file(path.string()));
      ValidationReport report = validate_topology(g, ontology);
      outcomes.push_back({report.legal, report.compliant});
      metrics::CaseMetrics cm{id, task, {}};
      cm.values["legal"] = report.legal ? 1.0 : 0.0;
      cm.values["correct"] = (report.legal && report.compliant) ? 1.0 : 0.0;
      cases.push_back(std::move(cm));
    }
    metrics::DesignRates rates = metrics::design_rates(outcomes);
    std::printf("valid_rate=%.4f correct_rate=%.4f\n", rates.valid_rate, rates.correct_rate);
  } else if (task == "optimize") {
    auto pred_cases = dir_cases(pred, ".jsonl");
    if (pred_cases.empty()) throw ConfigError("no optimization histories in " + pred);
    for (const auto& [id, path] : pred_cases) {
      auto rows = io::read_jsonl(path.string());
      if (rows.empty()) throw ConfigError("empty history: " + path.string());
      auto to_result = [](const OJson& row) {
        param::SimulationResult r;
        r.yield = row.at("result").at("yield").get<double>();
        r.purity = row.at("result").at("purity").get<double>();
        r.cost = row.at("result").at("cost").get<double>();
        r.converged = row.at("result").at("converged").get<bool>();
        return r;
      };
      // Best = the converged row with the largest improvement ratio product.
      param::SimulationResult init = to_result(rows.front());
      param::SimulationResult best = init;
      double best_overall = -1.0;
      for (const auto& row : rows) {
        param::SimulationResult r = to_result(row);
        if (!r.converged) continue;
        param::Ratios ratios = score_ratios(init, r);
        const double overall = ratios.overall ? *ratios.overall : -1.0;
        if (overall > best_overall) {
          best_overall = overall;
          best = r;
        }
      }
      param::Ratios ratios = score_ratios(init, best);
      metrics::CaseMetrics cm{id, task, {}};
      if (ratios.yield) cm.values["r_yield"] = *ratios.yield;
      if (ratios.purity) cm.values["r_purity"] = *ratios.purity;
      if (ratios.cost) cm.values["r_cost"] = *ratios.cost;
      if (ratios.effective) cm.values["r_eff"] = *ratios.effective;
      if (ratios.overall) cm.values["r_overall"] = *ratios.overall;
      cases.push_back(std::move(cm));
    }
  } else if (task == "qa") {
    auto pred_rows = io::read_jsonl(pred);
    auto gt_rows = io::read_jsonl(gt);
    if (pred_rows.size() != gt_rows.size())
      throw ConfigError("qa answer count " + std::to_string(pred_rows.size()) +
                        " does not match reference count " + std::to_string(gt_rows.size()));
    auto client = make_client(cfg);
    for (std::size_t i = 0; i < pred_rows.size(); ++i) {
      const std::string id =
          pred_rows[i].contains("id") ? pred_rows[i].at("id").get<std::string>()
                                      : "case" + std::to_string(i);
      metrics::CaseMetrics cm{id, task, {}};
      for (const auto& dim : metrics::kJudgeDimensions) {
        metrics::JudgeScore score =
            metrics::judge_answer(gt_rows[i].at("question").get<std::string>(),
                         pred_rows[i].at("answer").get<std::string>(),
                         gt_rows[i].at("reference").get<std::string>(), dim, *client);
        if (score.score) cm.values[text::to_lower(dim)] = static_cast<double>(*score.score);
      }
      cases.push_back(std::move(cm));
    }
  } else {
    throw ConfigError("unknown eval task: " + task +
                      " (expected parse|extract|complete|design|optimize|qa)");
  }

  OJson report = metrics::report_bundle(task, cases);
  io::write_json(out_path, report);
  std::printf("cases=%zu report=%s\n", cases.size(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chemical process development cohorts: knowledge, concept, parameter"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  try {
    cfg = load_base_config(argc, argv);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  std::string config_path;
  app.add_option("--config", config_path, "config file (JSON)");
  app.add_option("--mode", cfg.mode, "scripted|remote");
  app.add_option("--script", cfg.script, "script file for the scripted stub");
  app.add_option("--base-url", cfg.base_url, "model endpoint base url");
  app.add_option("--model", cfg.model, "model identifier");
  app.add_option("--seed", cfg.seed, "seed for all randomness");
  app.add_option("--t-auto", cfg.t_auto, "auto-merge threshold");
  app.add_option("--t-review", cfg.t_review, "review-merge threshold");
  app.add_option("--tau", cfg.tau, "fuzzy-match similarity threshold");
  app.add_option("--max-iters", cfg.max_iters, "design loop iteration cap");
  app.add_option("--budget", cfg.budget, "optimization iteration budget");
  app.add_option("--kb-k", cfg.kb_k, "knowledge-base retrieval depth");
  app.add_option("--kg-depth", cfg.kg_depth, "knowledge-graph hop depth");
  app.add_option("--store", cfg.store_dir, "knowledge store directory");
  app.add_option("--backoff-ms", cfg.backoff_ms, "initial retry backoff (remote mode)");

  std::string doc_path, query, web_fixture, input_path, graph_path, mask_id, truth, task_path;
  std::string scenario_path, out_dir, eval_task, pred_path, gt_path;
  std::string out_path = "out.json", out_graph = "graph.json", out_report = "report.json";
  std::string out_history = "history.json", transcript_path;
  bool no_web = false, no_kb = false, no_kg = false, image = false, merge_agent = false;
  bool model_analyst = false;
  int k_max = 10;

  auto* ingest = app.add_subcommand("ingest", "assimilate a document into the stores");
  ingest->add_option("--doc", doc_path, "document path")->required();
  ingest->add_flag("--merge-agent", merge_agent, "adjudicate review pairs with the merge agent");
  ingest->add_option("--transcript", transcript_path, "write the run transcript here");

  auto* augment = app.add_subcommand("augment", "multi-stream retrieval and report synthesis");
  augment->add_option("--query", query, "question to answer")->required();
  augment->add_flag("--no-web", no_web, "disable the web stream");
  augment->add_flag("--no-kb", no_kb, "disable the knowledge-base stream");
  augment->add_flag("--no-kg", no_kg, "disable the knowledge-graph stream");
  augment->add_option("--web-fixture", web_fixture, "canned web results (jsonl)");
  augment->add_option("--out", out_path, "report file");
  augment->add_option("--transcript", transcript_path, "write the run transcript here");

  auto* parse = app.add_subcommand("parse", "digitize a diagram into an abstract graph");
  parse->add_option("--input", input_path, "schematic description or image")->required();
  parse->add_flag("--image", image, "treat the input as an image file");
  parse->add_option("--out-graph", out_graph, "graph file");
  parse->add_option("--out-report", out_report, "validation report file");
  parse->add_option("--transcript", transcript_path, "write the run transcript here");

  auto* complete = app.add_subcommand("complete", "rank candidate types for a masked node");
  complete->add_option("--graph", graph_path, "graph file")->required();
  complete->add_option("--mask-id", mask_id, "node to mask (omit to choose by --seed)");
  complete->add_option("--truth", truth, "held-out truth type (enables the A@K line)");
  complete->add_option("--k", k_max, "maximum candidates");
  complete->add_option("--out", out_path, "candidate file");
  complete->add_option("--transcript", transcript_path, "write the run transcript here");

  auto* design = app.add_subcommand("design", "draft/critique/revise a flowsheet from text");
  design->add_option("--task", task_path, "design task file")->required();
  design->add_option("--out-graph", out_graph, "final graph file");
  design->add_option("--out-history", out_history, "design state history file");
  design->add_option("--transcript", transcript_path, "write the run transcript here");

  auto* optimize = app.add_subcommand("optimize", "closed-loop parameter optimization");
  optimize->add_option("--scenario", scenario_path, "scenario file")->required();
  optimize->add_option("--out-dir", out_dir, "output directory")->required();
  optimize->add_flag("--model-analyst", model_analyst, "use the model-backed analyst");
  optimize->add_option("--transcript", transcript_path, "write the run transcript here");

  auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
  eval->add_option("--task", eval_task, "parse|extract|complete|design|optimize|qa")->required();
  eval->add_option("--pred", pred_path, "predictions (dir or file, task-dependent)")->required();
  eval->add_option("--gt", gt_path, "ground truth (dir or file, task-dependent)");
  eval->add_option("--out", out_path, "metric report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return cmd_ingest(cfg, doc_path, merge_agent, transcript_path);
    if (*augment)
      return cmd_augment(cfg, query, no_web, no_kb, no_kg, web_fixture, out_path,
                         transcript_path);
    if (*parse) return cmd_parse(cfg, input_path, image, out_graph, out_report, transcript_path);
    if (*complete)
      return cmd_complete(cfg, graph_path, mask_id, truth, k_max, out_path, transcript_path);
    if (*design) return cmd_design(cfg, task_path, out_graph, out_history, transcript_path);
    if (*optimize) {
      if (cfg.budget < 1) {
        std::fprintf(stderr, "error: --budget must be >= 1\n");
        return 1;
      }
      return cmd_optimize(cfg, scenario_path, out_dir, model_analyst, transcript_path);
    }
    if (*eval) return cmd_eval(cfg, eval_task, pred_path, gt_path, out_path);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const EndpointError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ScriptError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
