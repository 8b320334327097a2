#include "cepro/knowledge_cohort.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "cepro/error.hpp"
#include "cepro/metrics.hpp"
#include "cepro/text.hpp"

namespace cepro::knowledge {

namespace fs = std::filesystem;

CannedWebSearch CannedWebSearch::from_file(const std::string& path) {
  CannedWebSearch stub;
  for (const auto& row : io::read_jsonl(path)) {
    std::vector<WebResult> results;
    for (const auto& r : row.at("results")) {
      results.push_back({r.value("title", ""), r.value("url", ""), r.value("snippet", "")});
    }
    stub.add(row.at("query").get<std::string>(), std::move(results));
  }
  return stub;
}

void CannedWebSearch::add(const std::string& query, std::vector<WebResult> results) {
  fixtures_[query] = std::move(results);
}

std::vector<WebResult> CannedWebSearch::search(const std::string& query) {
  auto it = fixtures_.find(query);
  return it == fixtures_.end() ? std::vector<WebResult>{} : it->second;
}

void Stores::save(const std::string& dir) const {
  fs::create_directories(dir);
  chunks.save(dir);
  save_kg(kg, dir);
}

Stores Stores::load(const std::string& dir) {
  Stores s;
  s.chunks = ChunkStore::load(dir);
  s.kg = load_kg(dir);
  return s;
}

namespace {

std::string render_web(const std::vector<WebResult>& results) {
  if (results.empty()) return "(no web results)";
  std::string out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    out += std::to_string(i + 1) + ". " + results[i].title + " — " + results[i].url + " — " +
           results[i].snippet + "\n";
  }
  return out;
}

std::string render_kb(const std::vector<ScoredChunk>& hits) {
  if (hits.empty()) return "(no knowledge-base hits)";
  std::string out;
  for (const auto& h : hits) {
    char score[16];
    std::snprintf(score, sizeof(score), "%.4f", h.score);
    std::string excerpt = h.chunk.text.substr(0, 160);
    out += h.chunk.id + " (" + score + ") " + text::collapse_ws(excerpt) + "\n";
  }
  return out;
}

std::string render_kg(const KnowledgeGraph& kg) {
  if (kg.triples.empty() && kg.entities.empty()) return "(no knowledge-graph matches)";
  std::string out;
  for (const auto& [id, e] : kg.entities) out += "entity " + id + ": " + e.name + "\n";
  for (const auto& t : kg.triples)
    out += t.subject + " -[" + t.predicate + "]-> " + t.object + " (" + t.layer + ")\n";
  return out;
}

std::vector<std::string> split_mentions(const std::string& raw) {
  std::vector<std::string> out;
  std::string buf = raw;
  std::replace(buf.begin(), buf.end(), ';', ',');
  for (const auto& part : text::split(buf, ',')) {
    std::string m = text::trim(part);
    if (!m.empty()) out.push_back(m);
  }
  return out;
}

// Parses the report agent's message: free text, then optional @@citations
// (stream | ref lines) and @@conflicts blocks.
Report parse_report(const std::string& content) {
  Report report;
  std::string body = content;
  auto marker = body.find(orch::kFinalMarker);
  if (marker != std::string::npos)
    body.erase(marker, std::string(orch::kFinalMarker).size());

  std::string head;
  for (const auto& line : text::split_lines(body)) {
    if (text::starts_with(text::trim(line), "@@")) break;
    head += line;
    head += '\n';
  }
  report.text = text::trim(head);

  if (auto block = orch::fenced_block(body, "@@citations")) {
    for (const auto& line : *block) {
      auto fields = text::split_fields(line);
      if (fields.size() >= 2) report.citations.push_back({fields[0], fields[1]});
    }
  }
  if (auto block = orch::fenced_block(body, "@@conflicts")) {
    for (const auto& line : *block) report.conflicts.push_back(line);
  }
  return report;
}

}  // namespace

AugmentResult knowledge_augment(const std::string& query, Stores& stores, WebSearch& web,
                                orch::LlmClient& client, const AugmentConfig& cfg) {
  if (cfg.ablation.enabled_count() == 0)
    throw ConfigError("knowledge_augment requires at least one enabled stream");

  AugmentResult result;
  RetrievalBundle& bundle = result.bundle;
  std::vector<std::string> notes;

  orch::ToolRegistry tools;
  tools.add("search_web", [&](const std::map<std::string, std::string>& args) -> std::string {
    const std::string q = args.count("query") ? args.at("query") : query;
    bundle.query_forms["q_web"] = q;
    try {
      bundle.web = web.search(q);
    } catch (const Error& e) {
      notes.push_back(std::string("web stream failed: ") + e.what());
      return std::string("error: ") + e.what();
    }
    return render_web(bundle.web);
  });
  tools.add("search_kb", [&](const std::map<std::string, std::string>& args) -> std::string {
    const std::string q = args.count("query") ? args.at("query") : query;
    std::size_t k = static_cast<std::size_t>(cfg.kb_k);
    if (args.count("k")) k = static_cast<std::size_t>(std::stoul(args.at("k")));
    bundle.query_forms["q_kb"] = q;
    try {
      bundle.kb = vector_query(stores.chunks, *stores.embedder, q, k);
    } catch (const Error& e) {
      notes.push_back(std::string("kb stream failed: ") + e.what());
      return std::string("error: ") + e.what();
    }
    return render_kb(bundle.kb);
  });
  tools.add("search_kg", [&](const std::map<std::string, std::string>& args) -> std::string {
    const std::string raw = args.count("entities") ? args.at("entities") : query;
    bundle.query_forms["q_kg"] = raw;
    try {
      std::vector<std::string> seeds;
      for (const auto& mention : split_mentions(raw)) {
        // Match the mention into the KG by name/alias similarity.
        std::string best_id;
        double best = cfg.kg_match_threshold;
        for (const auto& [id, e] : stores.kg.entities) {
          if (!e.is_root()) continue;
          double s = metrics::string_similarity(mention, e.name);
          for (const auto& alias : e.aliases)
            s = std::max(s, metrics::string_similarity(mention, alias));
          if (s > best || (s == best && !best_id.empty() && id < best_id)) {
            best = s;
            best_id = id;
          }
        }
        if (!best_id.empty())
          seeds.push_back(best_id);
        else
          notes.push_back("kg mention unmatched: " + mention);
      }
      auto sub = graph_query(stores.kg, seeds, cfg.kg_depth);
      bundle.kg = std::move(sub.kg);
      for (const auto& w : sub.warnings) notes.push_back("kg stream: " + w);
    } catch (const Error& e) {
      notes.push_back(std::string("kg stream failed: ") + e.what());
      return std::string("error: ") + e.what();
    }
    return render_kg(bundle.kg);
  });

  orch::ChatGroupSpec group;
  if (cfg.ablation.web)
    group.agents.push_back({"web", "",
                            "You are the web retrieval agent. Reformulate the query for a web "
                            "search, call the search_web tool, then summarize the findings.",
                            {"search_web"}});
  else
    notes.push_back("web stream disabled (ablation)");
  if (cfg.ablation.kb)
    group.agents.push_back({"kb", "",
                            "You are the knowledge-base retrieval agent. Call the search_kb tool "
                            "with a focused query and summarize the best passages.",
                            {"search_kb"}});
  else
    notes.push_back("kb stream disabled (ablation)");
  if (cfg.ablation.kg)
    group.agents.push_back({"kg", "",
                            "You are the knowledge-graph agent. Extract entity mentions from the "
                            "query, call the search_kg tool with them, and summarize the "
                            "relations found.",
                            {"search_kg"}});
  else
    notes.push_back("kg stream disabled (ablation)");
  group.agents.push_back(
      {"report", "",
       "You are the report agent. Integrate the web, knowledge-base, and knowledge-graph streams "
       "into one answer. Cite sources in an @@citations block (stream | ref per line), note "
       "discrepancies in @@conflicts, and end with " +
           std::string(orch::kFinalMarker) + ".",
       {}});
  group.terminator = "report";
  group.max_turns = static_cast<int>(group.agents.size());
  group.output_fields = {"text"};

  orch::GroupResult run = run_chat_group(group, query, client, &tools);
  result.transcript = std::move(run.transcript);

  // The report agent's last message carries the report body.
  std::string report_content;
  for (auto it = result.transcript.messages.rbegin(); it != result.transcript.messages.rend();
       ++it) {
    if (it->role == orch::Role::Assistant && it->sender == "report") {
      report_content = it->text();
      break;
    }
  }
  result.report = parse_report(report_content);
  if (!run.terminated) notes.push_back("report session not terminated by final marker");

  // Citation soundness: drop anything that does not resolve into the bundle.
  std::vector<Citation> sound;
  for (const auto& c : result.report.citations) {
    bool ok = false;
    if (c.stream == "web") {
      std::size_t idx = 0;
      try {
        idx = std::stoul(c.ref);
      } catch (...) {
        idx = 0;
      }
      ok = idx >= 1 && idx <= bundle.web.size();
    } else if (c.stream == "kb") {
      for (const auto& h : bundle.kb)
        if (h.chunk.id == c.ref) ok = true;
    } else if (c.stream == "kg") {
      ok = bundle.kg.entities.count(c.ref) != 0;
    }
    if (ok)
      sound.push_back(c);
    else
      notes.push_back("citation dropped (unresolvable): " + c.stream + " | " + c.ref);
  }
  result.report.citations = std::move(sound);
  result.report.notes = std::move(notes);
  return result;
}

ExtractionResult extract_triples(const Chunk& chunk, orch::LlmClient& client,
                                 orch::Transcript& transcript) {
  if (chunk.text.empty()) throw ConfigError("extract_triples requires a nonempty chunk");

  ExtractionResult result;
  orch::AgentSpec agent{
      "extract", "",
      "You are the knowledge extraction agent. Identify entities and subject-predicate-object "
      "triples in the text. Every triple's layer must be one of: Process, Flowsheet Structure, "
      "Reaction Mechanism, Substance, Constraints. Reply with:\n@@entities\nid | name\n@@triples\n"
      "subject | predicate | object | layer\n@@end",
      {}};

  std::string input = "Text (" + chunk.id + "):\n" + chunk.text;
  std::vector<orch::Message> context;

  for (int attempt = 0; attempt < 2; ++attempt) {
    orch::AgentResult reply = run_agent(agent, context, input, client, nullptr, 0, transcript);
    auto entity_block = orch::fenced_block(reply.output.text(), "@@entities");
    if (!entity_block) {
      context.push_back(reply.output);
      context.push_back(orch::Message::make(
          orch::Role::User, "parse error: missing @@entities block; emit the fenced format"));
      continue;
    }

    std::map<std::string, std::string> local_ids;  // agent id -> namespaced id
    for (const auto& line : *entity_block) {
      auto fields = text::split_fields(line);
      if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) continue;
      if (local_ids.count(fields[0])) continue;
      const std::string id = chunk.id + "/" + fields[0];
      local_ids[fields[0]] = id;
      EntityRecord e;
      e.id = id;
      e.name = fields[1];
      result.local.entities[id] = std::move(e);
    }

    if (auto triple_block = orch::fenced_block(reply.output.text(), "@@triples")) {
      for (const auto& line : *triple_block) {
        auto fields = text::split_fields(line);
        if (fields.size() != 4) {
          ++result.dropped_triples;
          continue;
        }
        if (!is_valid_layer(fields[3]) || !local_ids.count(fields[0]) ||
            !local_ids.count(fields[2])) {
          ++result.dropped_triples;
          continue;
        }
        result.local.triples.push_back(
            {local_ids[fields[0]], fields[1], local_ids[fields[2]], fields[3], {chunk.id}});
      }
    }
    return result;
  }
  result.flagged = true;
  return result;
}

Adjudication review_merge(const MergeDecision& pair, const std::vector<std::string>& context_chunks,
                          const KnowledgeGraph& kg, orch::LlmClient& client,
                          orch::Transcript& transcript) {
  orch::AgentSpec agent{"merge", "",
                        "You are the ontology alignment agent. Decide whether the two entities "
                        "are the same concept. Reply 'YES: <rationale>' or 'NO: <rationale>'.",
                        {}};

  auto describe = [&kg](const std::string& id) {
    auto it = kg.entities.find(id);
    if (it == kg.entities.end()) return id;
    std::string out = it->second.name;
    if (!it->second.aliases.empty())
      out += " (aliases: " + text::join(it->second.aliases, ", ") + ")";
    return out;
  };
  std::string input = "Entity A: " + describe(pair.a) + "\nEntity B: " + describe(pair.b);
  if (!context_chunks.empty()) {
    input += "\nContext:\n";
    for (const auto& c : context_chunks) input += "- " + text::collapse_ws(c).substr(0, 240) + "\n";
  }

  orch::AgentResult reply = run_agent(agent, {}, input, client, nullptr, 0, transcript);
  std::string body = text::trim(reply.output.text());
  std::string upper;
  for (char c : body) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));

  Adjudication adjudication;
  auto colon = body.find(':');
  if (text::starts_with(upper, "YES")) {
    adjudication.merged = true;
    adjudication.rationale = colon == std::string::npos ? "" : text::trim(body.substr(colon + 1));
  } else if (text::starts_with(upper, "NO")) {
    adjudication.merged = false;
    adjudication.rationale = colon == std::string::npos ? "" : text::trim(body.substr(colon + 1));
  } else {
    adjudication.merged = false;
    adjudication.rationale = "unparseable adjudication";
    adjudication.flagged = true;
  }
  return adjudication;
}

UpdateResult knowledge_update(const std::string& doc_id, const std::string& document,
                              Stores& stores, orch::LlmClient& client,
                              const MergeThresholds& thresholds, bool use_merge_agent,
                              const ChunkConfig& chunk_cfg) {
  thresholds.validate();
  UpdateResult result;

  std::vector<Chunk> chunks;
  std::vector<KnowledgeGraph> locals;

  orch::WorkflowStage chunk_stage{
      "chunk", "document", "chunks",
      [&](const orch::Payload& in, orch::StageContext&) -> orch::Payload {
        chunks = chunk_document(doc_id, in.value.at("text").get<std::string>(), chunk_cfg);
        OJson value;
        value["doc_id"] = doc_id;
        value["count"] = chunks.size();
        return {"chunks", value};
      }};

  orch::WorkflowStage ingest_stage{
      "ingest", "chunks", "locals",
      [&](const orch::Payload& in, orch::StageContext& ctx) -> orch::Payload {
        int dropped = 0;
        for (auto& chunk : chunks) {
          chunk.embedding = stores.embedder->embed(chunk.text);
          stores.chunks.upsert(chunk);
          ExtractionResult extraction = extract_triples(chunk, *ctx.client, *ctx.transcript);
          if (extraction.flagged)
            result.flags.push_back("chunk " + chunk.id + ": extraction unparseable");
          dropped += extraction.dropped_triples;
          locals.push_back(std::move(extraction.local));
        }
        OJson value = in.value;
        value["dropped_triples"] = dropped;
        return {"locals", value};
      }};

  orch::WorkflowStage consolidate_stage{
      "consolidate", "locals", "update",
      [&](const orch::Payload& in, orch::StageContext& ctx) -> orch::Payload {
        const std::size_t entities_before = stores.kg.entities.size();
        const std::size_t triples_before = stores.kg.triples.size();
        for (const auto& local : locals) stores.kg = add_subgraph(std::move(stores.kg), local);

        // Adjudications are cached per pair so fixpoint re-passes never
        // re-ask the merge agent the same question.
        std::map<std::pair<std::string, std::string>, Adjudication> cache;
        Adjudicator adjudicator = [&](const MergeDecision& d) -> Adjudication {
          auto key = std::make_pair(d.a, d.b);
          auto it = cache.find(key);
          if (it != cache.end()) return it->second;
          std::vector<std::string> context;
          for (const auto& t : stores.kg.triples) {
            if (t.subject == d.a || t.subject == d.b || t.object == d.a || t.object == d.b) {
              for (const auto& cid : t.chunks) {
                if (const Chunk* c = stores.chunks.find(cid)) {
                  context.push_back(c->text);
                  break;
                }
              }
            }
            if (context.size() >= 2) break;
          }
          Adjudication a = review_merge(d, context, stores.kg, *ctx.client, *ctx.transcript);
          if (a.flagged) result.flags.push_back("review pair (" + d.a + ", " + d.b +
                                                "): unparseable adjudication");
          cache[key] = a;
          return a;
        };

        // Resolve/apply until no pass merges anything new.
        while (true) {
          ResolveResult resolved = resolve_entities(stores.kg, thresholds, *stores.embedder);
          result.merge_stats.distinct_pairs = static_cast<int>(resolved.distinct_pairs);
          if (resolved.decisions.empty()) break;
          MergeStats pass;
          std::vector<std::string> warnings;
          stores.kg = apply_merges(std::move(stores.kg), resolved.decisions,
                                   use_merge_agent ? &adjudicator : nullptr, &pass, &warnings);
          result.merge_stats.auto_merged += pass.auto_merged;
          result.merge_stats.review_merged += pass.review_merged;
          result.merge_stats.review_rejected += pass.review_rejected;
          result.merge_stats.review_pending += pass.review_pending;
          for (const auto& w : warnings) result.flags.push_back(w);
          if (pass.auto_merged + pass.review_merged == 0) break;
        }

        OJson value = in.value;
        value["entities_added"] =
            static_cast<std::int64_t>(stores.kg.entities.size() - entities_before);
        value["triples_added"] =
            static_cast<std::int64_t>(stores.kg.triples.size()) -
            static_cast<std::int64_t>(triples_before);
        return {"update", value};
      }};

  auto workflow = orch::WorkflowSpec::make({chunk_stage, ingest_stage, consolidate_stage});
  orch::Payload input{"document", OJson{{"doc_id", doc_id}, {"text", document}}};
  orch::WorkflowResult wf = run_workflow(workflow, std::move(input), &client, nullptr);
  if (!wf.ok) throw Error("knowledge_update failed: " + wf.error);

  result.chunk_count = static_cast<int>(chunks.size());
  result.entities_added = wf.output.value.value("entities_added", 0);
  result.triples_added = static_cast<int>(wf.output.value.value("triples_added", 0LL));
  result.transcript = std::move(wf.transcript);
  return result;
}

}  // namespace cepro::knowledge
