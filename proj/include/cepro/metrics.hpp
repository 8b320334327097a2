#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cepro/graph.hpp"
#include "cepro/llm_client.hpp"

namespace cepro::metrics {

// 1 - normalized edit distance over normalized strings; ("","") -> 1.0.
double string_similarity(const std::string& a, const std::string& b);

struct MatchPair {
  std::size_t gt_index = 0;
  std::size_t pred_index = 0;
  double similarity = 0.0;
};

struct EntityMapping {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_pred;
  double tau = 0.0;

  std::size_t n_match() const { return pairs.size(); }
};

// Greedy one-to-one matching: candidate pairs with similarity >= tau,
// ordered by (similarity desc, gt index asc, pred index asc).
EntityMapping match_entities(const std::vector<std::string>& pred,
                             const std::vector<std::string>& gt, double tau);

struct Prf {
  double accuracy = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // both sides empty
};

Prf entity_prf(const std::vector<std::string>& pred, const std::vector<std::string>& gt,
               double tau);

// Plain node/edge view shared by PFD graphs and knowledge graphs.
struct SimpleGraph {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> edges;

  static SimpleGraph from(const AbstractGraph& g);
};

struct GraphMetricReport {
  std::optional<double> mec;
  std::optional<double> med;
  double coverage = 0.0;
  std::size_t n_gt_edges = 0;
  std::size_t n_connected = 0;
  double mean_distance = 1.0;  // d-bar over connected mapped pairs in pred
  bool dbar_defaulted = false;
};

// MEC / MED / coverage for a gt->pred node mapping. Connectivity and
// distances are undirected over the predicted graph.
GraphMetricReport graph_metrics(const SimpleGraph& gt, const SimpleGraph& pred,
                                const std::map<std::string, std::string>& mapping);

struct ParsingScores {
  std::optional<double> equipment_accuracy;
  std::optional<double> equipment_recall;
  std::optional<double> connection_accuracy;
  std::optional<double> connection_recall;
};

// Node matching over "type label" composites; a connection matches when the
// node mapping sends both endpoints across with direction respected.
ParsingScores parsing_scores(const AbstractGraph& pred, const AbstractGraph& gt, double tau);

struct CompletionCase {
  std::vector<std::string> ranked_types;
  std::string truth_type;
};

std::optional<double> topk_accuracy(const std::vector<CompletionCase>& cases, int k);

struct DesignOutcome {
  bool legal = false;
  bool compliant = false;
};

struct DesignRates {
  std::size_t n_total = 0;
  std::size_t n_valid = 0;
  std::size_t n_correct = 0;
  double valid_rate = 0.0;
  double correct_rate = 0.0;
  bool flagged = false;  // n_total == 0
};

DesignRates design_rates(const std::vector<DesignOutcome>& outcomes);

inline const std::vector<std::string> kJudgeDimensions = {"Correctness", "Rationality", "Clarity",
                                                          "Completeness"};

struct JudgeScore {
  std::string dimension;
  std::optional<int> score;  // 0..100
  std::string rationale;
  bool flagged = false;
};

JudgeScore judge_answer(const std::string& question, const std::string& answer,
                        const std::string& reference, const std::string& dimension,
                        orch::LlmClient& client);

struct CaseMetrics {
  std::string id;
  std::string kind;
  std::map<std::string, double> values;
};

// Aggregates per-case metrics (mean and median per key) into the report
// file shape {"task","n_cases","aggregate",...,"cases":[...]}.
OJson report_bundle(const std::string& task_kind, const std::vector<CaseMetrics>& cases);

}  // namespace cepro::metrics
