#include "cepro/concept_cohort.hpp"

#include <algorithm>
#include <set>

#include "cepro/error.hpp"
#include "cepro/text.hpp"

namespace cepro::pfd {

PfdInput PfdInput::from_text(std::string description) {
  PfdInput p;
  p.kind = Kind::Text;
  p.text = std::move(description);
  return p;
}

PfdInput PfdInput::from_image(std::string path) {
  PfdInput p;
  p.kind = Kind::Image;
  p.image_path = std::move(path);
  return p;
}

namespace {

std::string media_type_for(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : text::to_lower(path.substr(dot + 1));
  if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
  if (ext == "gif") return "image/gif";
  return "image/png";
}

// PFD content as a user message; images pass through as base64 parts.
orch::Message pfd_message(const PfdInput& pfd, const std::string& preface) {
  if (pfd.kind == PfdInput::Kind::Text)
    return orch::Message::make(orch::Role::User, preface + "\n" + pfd.text);
  orch::Message m;
  m.role = orch::Role::User;
  m.parts.push_back({orch::ContentPart::Kind::Text, preface, "", ""});
  orch::ContentPart image;
  image.kind = orch::ContentPart::Kind::Image;
  image.data = text::base64_encode(io::read_file(pfd.image_path));
  image.media_type = media_type_for(pfd.image_path);
  m.parts.push_back(std::move(image));
  return m;
}

orch::AgentResult ask(const orch::AgentSpec& agent, const PfdInput& pfd,
                      const std::string& preface, const std::vector<orch::Message>& extra,
                      orch::LlmClient& client, orch::Transcript& transcript) {
  std::vector<orch::Message> context;
  context.push_back(pfd_message(pfd, preface));
  context.insert(context.end(), extra.begin(), extra.end());
  return run_agent(agent, context, "", client, nullptr, 0, transcript);
}

}  // namespace

EquipmentParse parse_equipment(const PfdInput& pfd, orch::LlmClient& client,
                               const EquipmentOntology& ontology, orch::Transcript& transcript) {
  EquipmentParse result;
  orch::AgentSpec agent{"equipment", "",
                        "You are the equipment parsing agent. Identify every unit operation in "
                        "the diagram using only these canonical types:\n" +
                            text::join(ontology.vocabulary(), ", ") +
                            "\nReply with:\n@@equipment\nid | type | label\n@@end",
                        {}};

  std::vector<orch::Message> extra;
  for (int attempt = 0; attempt < 2; ++attempt) {
    orch::AgentResult reply = ask(agent, pfd, "Parse the equipment in this diagram.", extra,
                                  client, transcript);
    auto block = orch::fenced_block(reply.output.text(), "@@equipment");
    if (!block) {
      extra.push_back(reply.output);
      extra.push_back(orch::Message::make(
          orch::Role::User, "parse error: missing @@equipment block; emit the fenced format"));
      continue;
    }
    std::set<std::string> seen;
    for (const auto& line : *block) {
      auto fields = text::split_fields(line);
      if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) continue;
      if (!seen.insert(fields[0]).second) {
        ++result.duplicates_dropped;
        continue;
      }
      EquipmentNode node;
      node.id = fields[0];
      node.type = fields[1];
      node.label = fields.size() > 2 ? fields[2] : "";
      if (node.type != kMaskedType && !ontology.contains(node.type)) ++result.off_ontology;
      result.nodes.push_back(std::move(node));
    }
    if (result.nodes.empty()) result.flagged = true;
    return result;
  }
  result.flagged = true;
  return result;
}

LinkParse parse_links(const PfdInput& pfd, const std::vector<EquipmentNode>& nodes,
                      orch::LlmClient& client, orch::Transcript& transcript) {
  LinkParse result;
  std::vector<std::string> ids;
  for (const auto& n : nodes) ids.push_back(n.id);

  orch::AgentSpec agent{"links", "",
                        "You are the link parsing agent. Extract directed stream connections. "
                        "Endpoints must come from this equipment list: " +
                            (ids.empty() ? std::string("(none)") : text::join(ids, ", ")) +
                            "\nReply with:\n@@links\nfrom | to | stream\n@@end",
                        {}};

  std::set<std::string> valid(ids.begin(), ids.end());
  std::vector<orch::Message> extra;
  for (int attempt = 0; attempt < 2; ++attempt) {
    orch::AgentResult reply =
        ask(agent, pfd, "Parse the connections in this diagram.", extra, client, transcript);
    auto block = orch::fenced_block(reply.output.text(), "@@links");
    if (!block) {
      extra.push_back(reply.output);
      extra.push_back(orch::Message::make(
          orch::Role::User, "parse error: missing @@links block; emit the fenced format"));
      continue;
    }
    for (const auto& line : *block) {
      auto fields = text::split_fields(line);
      if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) continue;
      if (!valid.count(fields[0]) || !valid.count(fields[1])) {
        ++result.floating_dropped;
        continue;
      }
      Connection edge;
      edge.from = fields[0];
      edge.to = fields[1];
      if (fields.size() > 2 && !fields[2].empty()) edge.stream = fields[2];
      result.edges.push_back(std::move(edge));
    }
    return result;
  }
  result.flagged = true;
  return result;
}

ParseTopologyResult parse_topology(const PfdInput& pfd, orch::LlmClient& client,
                                   const EquipmentOntology& ontology) {
  ParseTopologyResult result;
  EquipmentParse equipment;
  LinkParse links;

  orch::WorkflowStage equip_stage{
      "equipment", "pfd", "nodes",
      [&](const orch::Payload& in, orch::StageContext& ctx) -> orch::Payload {
        equipment = parse_equipment(pfd, *ctx.client, ontology, *ctx.transcript);
        OJson value = in.value;
        value["node_count"] = equipment.nodes.size();
        return {"nodes", value};
      }};
  orch::WorkflowStage link_stage{
      "links", "nodes", "topology",
      [&](const orch::Payload& in, orch::StageContext& ctx) -> orch::Payload {
        links = parse_links(pfd, equipment.nodes, *ctx.client, *ctx.transcript);
        OJson value = in.value;
        value["edge_count"] = links.edges.size();
        return {"topology", value};
      }};
  orch::WorkflowStage assemble_stage{
      "assemble", "topology", "parsed",
      [&](const orch::Payload& in, orch::StageContext&) -> orch::Payload {
        result.graph = build_graph(equipment.nodes, links.edges);
        result.report = validate_topology(result.graph, ontology);
        return {"parsed", in.value};
      }};

  auto workflow = orch::WorkflowSpec::make({equip_stage, link_stage, assemble_stage});
  orch::Payload input{"pfd", OJson{{"kind", pfd.kind == PfdInput::Kind::Text ? "text" : "image"}}};
  orch::WorkflowResult wf = run_workflow(workflow, std::move(input), &client, nullptr);

  result.ok = wf.ok;
  result.error = wf.error;
  result.floating_dropped = links.floating_dropped;
  result.off_ontology = equipment.off_ontology;
  result.flagged = equipment.flagged || links.flagged;
  result.transcript = std::move(wf.transcript);
  return result;
}

CompletionResult complete_graph(const MaskedGraph& masked, orch::LlmClient& client,
                                const EquipmentOntology& ontology, int k_max,
                                orch::Transcript& transcript) {
  if (k_max < 1) throw ConfigError("complete_graph requires k_max >= 1");
  const EquipmentNode* node = masked.graph.find_node(masked.masked_id);
  if (!node || node->type != kMaskedType)
    throw ConfigError("masked sentinel not found on node '" + masked.masked_id + "'");

  CompletionResult result;
  result.masked_id = masked.masked_id;

  // Neighbor context: the masked node's incident streams.
  std::string neighbors;
  for (const auto& e : masked.graph.connections) {
    if (e.from == masked.masked_id) neighbors += "  outlet to " + e.to + "\n";
    if (e.to == masked.masked_id) neighbors += "  inlet from " + e.from + "\n";
  }

  orch::AgentSpec agent{"completion", "",
                        "You are the completion agent. One node in the graph is masked. Rank the "
                        "most plausible canonical equipment types for it, best first, using this "
                        "vocabulary:\n" +
                            text::join(ontology.vocabulary(), ", ") +
                            "\nReply with:\n@@candidates\nrank | type | rationale\n@@end",
                        {}};

  const std::string input = "Masked node: " + masked.masked_id + "\nIncident streams:\n" +
                            neighbors + "\nGraph:\n" + serialize_graph(masked.graph);
  std::vector<orch::Message> context;

  for (int attempt = 0; attempt < 2; ++attempt) {
    orch::AgentResult reply = run_agent(agent, context, input, client, nullptr, 0, transcript);
    auto block = orch::fenced_block(reply.output.text(), "@@candidates");
    if (!block) {
      context.push_back(reply.output);
      context.push_back(orch::Message::make(
          orch::Role::User, "parse error: missing @@candidates block; emit the fenced format"));
      continue;
    }
    std::vector<Candidate> raw;
    for (const auto& line : *block) {
      auto fields = text::split_fields(line);
      if (fields.size() < 2 || fields[1].empty()) continue;
      Candidate c;
      try {
        c.rank = std::stoi(fields[0]);
      } catch (...) {
        c.rank = static_cast<int>(raw.size()) + 1;
      }
      c.type = fields[1];
      c.rationale = fields.size() > 2 ? fields[2] : "";
      raw.push_back(std::move(c));
    }
    std::stable_sort(raw.begin(), raw.end(),
                     [](const Candidate& a, const Candidate& b) { return a.rank < b.rank; });
    std::set<std::string> seen;
    for (auto& c : raw) {
      if (!seen.insert(c.type).second) continue;  // keep best rank per type
      c.rank = static_cast<int>(result.candidates.size()) + 1;
      result.candidates.push_back(std::move(c));
      if (static_cast<int>(result.candidates.size()) >= k_max) break;
    }
    if (result.candidates.empty()) result.flagged = true;
    return result;
  }
  result.flagged = true;
  return result;
}

namespace {

std::string render_violations(const ValidationReport& report) {
  if (report.violations.empty()) return "(no mechanical violations)";
  std::string out;
  for (const auto& v : report.violations) {
    out += v.rule_id + " [" +
           (v.severity == Severity::Legality ? "legality" : "compliance") + "] " + v.message +
           "\n";
  }
  return out;
}

}  // namespace

CorrectionOutcome correct(const AbstractGraph& graph, const RuleSet& rules,
                          orch::LlmClient& client, orch::Transcript& transcript) {
  if (!rules.ontology) throw ConfigError("correction rule set needs an ontology");
  CorrectionOutcome outcome;
  outcome.validation = validate_topology(graph, *rules.ontology, rules.extra_rules);

  // Mechanical findings seed the critique; the agent may add more.
  for (const auto& v : outcome.validation.violations)
    outcome.critique.issues.push_back({v.rule_id, v.targets, v.message});

  orch::AgentSpec agent{"correction", "",
                        "You are the correction agent, a senior process auditor. Review the graph "
                        "and the validator findings. Reply with:\n@@critique\nverdict: "
                        "accept|revise\nissue: rule | targets | suggestion\n@@end",
                        {}};
  const std::string input = "Graph:\n" + serialize_graph(graph) + "\nValidator findings:\n" +
                            render_violations(outcome.validation);

  bool agent_accepts = false;
  orch::AgentResult reply = run_agent(agent, {}, input, client, nullptr, 0, transcript);
  auto block = orch::fenced_block(reply.output.text(), "@@critique");
  if (!block) {
    outcome.critique.agent_parse_failed = true;
    agent_accepts = true;  // verdict falls to the validator alone
  } else {
    for (const auto& line : *block) {
      if (text::starts_with(line, "verdict:")) {
        agent_accepts = text::trim(line.substr(8)) == "accept";
      } else if (text::starts_with(line, "issue:")) {
        auto fields = text::split_fields(line.substr(6));
        Issue issue;
        issue.rule_id = fields.empty() ? "free" : fields[0];
        if (fields.size() > 1 && !fields[1].empty()) issue.targets = {fields[1]};
        if (fields.size() > 2) issue.suggestion = fields[2];
        outcome.critique.issues.push_back(std::move(issue));
      }
    }
  }

  // The validator is authoritative: the agent cannot overrule a compliance
  // failure, only veto an otherwise compliant graph.
  outcome.critique.verdict = (outcome.validation.compliant && agent_accepts)
                                 ? CritiqueVerdict::Accept
                                 : CritiqueVerdict::Revise;
  return outcome;
}

namespace {

std::string render_critique(const Critique& critique) {
  std::string out = critique.verdict == CritiqueVerdict::Accept ? "verdict: accept\n"
                                                                : "verdict: revise\n";
  for (const auto& issue : critique.issues)
    out += "- " + issue.rule_id + " [" + text::join(issue.targets, ",") + "] " +
           issue.suggestion + "\n";
  return out;
}

AbstractGraph design_draft(const std::string& description, const AbstractGraph* previous,
                           const Critique* critique, const RuleSet& rules,
                           orch::LlmClient& client, orch::Transcript& transcript, bool& parsed) {
  orch::AgentSpec agent{"design", "",
                        "You are the design agent. Produce a process flow graph for the "
                        "requirement using only canonical equipment types:\n" +
                            text::join(rules.ontology->vocabulary(), ", ") +
                            "\nReply with:\n@@graph\n<graph JSON>\n@@end",
                        {}};

  std::string input = "Requirement:\n" + description;
  if (previous && critique) {
    input += "\n\nCurrent draft:\n" + serialize_graph(*previous) +
             "\nCritique to address:\n" + render_critique(*critique);
  }

  std::vector<orch::Message> context;
  for (int attempt = 0; attempt < 2; ++attempt) {
    orch::AgentResult reply = run_agent(agent, context, input, client, nullptr, 0, transcript);
    auto block = orch::fenced_text(reply.output.text(), "@@graph");
    if (block) {
      try {
        AbstractGraph g = parse_graph(*block);
        parsed = true;
        return g;
      } catch (const ParseError& e) {
        context.push_back(reply.output);
        context.push_back(orch::Message::make(orch::Role::User,
                                              std::string("parse error: ") + e.what() +
                                                  "; emit a valid @@graph block"));
        continue;
      }
    }
    context.push_back(reply.output);
    context.push_back(orch::Message::make(
        orch::Role::User, "parse error: missing @@graph block; emit the fenced format"));
  }
  parsed = false;
  return previous ? *previous : AbstractGraph{};
}

}  // namespace

DesignResult design_loop(const std::string& description, orch::LlmClient& client,
                         const RuleSet& rules, int max_iters) {
  if (max_iters < 1) throw ConfigError("design_loop requires max_iters >= 1");
  if (!rules.ontology) throw ConfigError("design_loop needs an ontology");

  DesignResult result;
  bool parsed = false;
  AbstractGraph graph =
      design_draft(description, nullptr, nullptr, rules, client, result.transcript, parsed);

  for (int t = 0; t < max_iters; ++t) {
    CorrectionOutcome correction = correct(graph, rules, client, result.transcript);

    DesignState state;
    state.t = t;
    state.graph = graph;
    state.critique = correction.critique;
    state.validation = correction.validation;
    result.history.push_back(std::move(state));

    if (correction.critique.verdict == CritiqueVerdict::Accept) {
      result.converged = true;
      break;
    }
    if (t + 1 >= max_iters) break;
    graph = design_draft(description, &graph, &correction.critique, rules, client,
                         result.transcript, parsed);
  }

  result.final_graph = result.history.back().graph;
  return result;
}

DesignTask DesignTask::from_json(const OJson& j) {
  DesignTask task;
  if (!j.contains("description") || !j.at("description").is_string())
    throw ParseError("design task: missing 'description'");
  task.description = j.at("description").get<std::string>();
  if (j.contains("extra_rules"))
    task.extra_rules = j.at("extra_rules").get<std::vector<std::string>>();
  task.difficulty = j.value("difficulty", "standard");
  if (task.difficulty != "simple" && task.difficulty != "standard" && task.difficulty != "hard")
    throw ParseError("design task: difficulty must be simple|standard|hard");
  return task;
}

}  // namespace cepro::pfd
