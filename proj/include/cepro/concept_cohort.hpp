#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cepro/graph.hpp"
#include "cepro/orchestration.hpp"

namespace cepro::pfd {

struct PfdInput {
  enum class Kind { Image, Text };
  Kind kind = Kind::Text;
  std::string text;        // textual schematic description
  std::string image_path;  // Kind::Image

  static PfdInput from_text(std::string description);
  static PfdInput from_image(std::string path);
};

struct EquipmentParse {
  std::vector<EquipmentNode> nodes;
  int duplicates_dropped = 0;
  int off_ontology = 0;
  bool flagged = false;  // unparseable after reprompt
};

struct LinkParse {
  std::vector<Connection> edges;
  int floating_dropped = 0;
  bool flagged = false;
};

EquipmentParse parse_equipment(const PfdInput& pfd, orch::LlmClient& client,
                               const EquipmentOntology& ontology, orch::Transcript& transcript);

// Link extraction conditioned on the recognized node set: any edge whose
// endpoint is not in `nodes` is dropped and counted.
LinkParse parse_links(const PfdInput& pfd, const std::vector<EquipmentNode>& nodes,
                      orch::LlmClient& client, orch::Transcript& transcript);

struct ParseTopologyResult {
  AbstractGraph graph;
  ValidationReport report;
  int floating_dropped = 0;
  int off_ontology = 0;
  bool flagged = false;
  bool ok = true;
  std::string error;
  orch::Transcript transcript;
};

// Equipment -> links -> assemble/validate, run as a typed workflow.
ParseTopologyResult parse_topology(const PfdInput& pfd, orch::LlmClient& client,
                                   const EquipmentOntology& ontology);

struct Candidate {
  int rank = 0;
  std::string type;
  std::string rationale;
};

struct CompletionResult {
  std::string masked_id;
  std::vector<Candidate> candidates;  // ranks dense 1..n after dedup
  bool flagged = false;
};

CompletionResult complete_graph(const MaskedGraph& masked, orch::LlmClient& client,
                                const EquipmentOntology& ontology, int k_max,
                                orch::Transcript& transcript);

struct Issue {
  std::string rule_id;  // validator rule id or "free"
  std::vector<std::string> targets;
  std::string suggestion;
};

enum class CritiqueVerdict { Accept, Revise };

struct Critique {
  std::vector<Issue> issues;
  CritiqueVerdict verdict = CritiqueVerdict::Revise;
  bool agent_parse_failed = false;
};

struct RuleSet {
  const EquipmentOntology* ontology = nullptr;
  std::vector<std::string> extra_rules;
};

struct CorrectionOutcome {
  Critique critique;
  ValidationReport validation;
};

// Mechanical validation runs first and is authoritative: the agent may add
// issues or veto, but cannot accept a non-compliant graph.
CorrectionOutcome correct(const AbstractGraph& graph, const RuleSet& rules,
                          orch::LlmClient& client, orch::Transcript& transcript);

struct DesignState {
  int t = 0;
  AbstractGraph graph;
  Critique critique;
  ValidationReport validation;
};

struct DesignResult {
  AbstractGraph final_graph;
  std::vector<DesignState> history;
  bool converged = false;
  orch::Transcript transcript;
};

// Draft/critique/revise loop; at most max_iters states, stops on accept.
DesignResult design_loop(const std::string& description, orch::LlmClient& client,
                         const RuleSet& rules, int max_iters = 7);

struct DesignTask {
  std::string description;
  std::vector<std::string> extra_rules;
  std::string difficulty;  // simple | standard | hard

  static DesignTask from_json(const OJson& j);
};

}  // namespace cepro::pfd
