#include "cepro/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <unordered_map>

#include "cepro/error.hpp"
#include "cepro/text.hpp"

namespace cepro::metrics {

double string_similarity(const std::string& a, const std::string& b) {
  const std::string na = text::normalize_for_match(a);
  const std::string nb = text::normalize_for_match(b);
  if (na.empty() && nb.empty()) return 1.0;
  const std::size_t dist = text::levenshtein(na, nb);
  const std::size_t longest = std::max(na.size(), nb.size());
  return 1.0 - static_cast<double>(dist) / static_cast<double>(longest);
}

EntityMapping match_entities(const std::vector<std::string>& pred,
                             const std::vector<std::string>& gt, double tau) {
  EntityMapping mapping;
  mapping.tau = tau;

  std::vector<MatchPair> candidates;
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (std::size_t p = 0; p < pred.size(); ++p) {
      double s = string_similarity(pred[p], gt[g]);
      if (s >= tau) candidates.push_back({g, p, s});
    }
  std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.gt_index != b.gt_index) return a.gt_index < b.gt_index;
    return a.pred_index < b.pred_index;
  });

  std::vector<bool> gt_used(gt.size(), false), pred_used(pred.size(), false);
  for (const auto& c : candidates) {
    if (gt_used[c.gt_index] || pred_used[c.pred_index]) continue;
    gt_used[c.gt_index] = true;
    pred_used[c.pred_index] = true;
    mapping.pairs.push_back(c);
  }
  for (std::size_t g = 0; g < gt.size(); ++g)
    if (!gt_used[g]) mapping.unmatched_gt.push_back(g);
  for (std::size_t p = 0; p < pred.size(); ++p)
    if (!pred_used[p]) mapping.unmatched_pred.push_back(p);
  return mapping;
}

Prf entity_prf(const std::vector<std::string>& pred, const std::vector<std::string>& gt,
               double tau) {
  Prf out;
  if (pred.empty() && gt.empty()) {
    out.accuracy = out.recall = out.f1 = 1.0;
    out.degenerate = true;
    return out;
  }
  const auto mapping = match_entities(pred, gt, tau);
  const double n_match = static_cast<double>(mapping.n_match());
  out.accuracy = pred.empty() ? 0.0 : n_match / static_cast<double>(pred.size());
  out.recall = gt.empty() ? 0.0 : n_match / static_cast<double>(gt.size());
  out.f1 = (out.accuracy + out.recall) > 0.0
               ? 2.0 * out.accuracy * out.recall / (out.accuracy + out.recall)
               : 0.0;
  return out;
}

SimpleGraph SimpleGraph::from(const AbstractGraph& g) {
  SimpleGraph s;
  for (const auto& n : g.equipment) s.nodes.push_back(n.id);
  for (const auto& e : g.connections) s.edges.emplace_back(e.from, e.to);
  return s;
}

namespace {

// Undirected BFS hop distances from every node, -1 = unreachable.
std::unordered_map<std::string, std::unordered_map<std::string, int>> all_pairs_hops(
    const SimpleGraph& g) {
  std::unordered_map<std::string, std::vector<std::string>> adj;
  for (const auto& n : g.nodes) adj[n];
  for (const auto& [u, v] : g.edges) {
    if (!adj.count(u) || !adj.count(v)) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::unordered_map<std::string, std::unordered_map<std::string, int>> dist;
  for (const auto& n : g.nodes) {
    auto& d = dist[n];
    d[n] = 0;
    std::queue<std::string> q;
    q.push(n);
    while (!q.empty()) {
      std::string cur = q.front();
      q.pop();
      for (const auto& nxt : adj[cur]) {
        if (d.count(nxt)) continue;
        d[nxt] = d[cur] + 1;
        q.push(nxt);
      }
    }
  }
  return dist;
}

}  // namespace

GraphMetricReport graph_metrics(const SimpleGraph& gt, const SimpleGraph& pred,
                                const std::map<std::string, std::string>& mapping) {
  GraphMetricReport report;
  report.n_gt_edges = gt.edges.size();

  const auto hops = all_pairs_hops(pred);
  std::set<std::string> pred_nodes(pred.nodes.begin(), pred.nodes.end());

  auto mapped = [&](const std::string& u) -> const std::string* {
    auto it = mapping.find(u);
    if (it == mapping.end() || !pred_nodes.count(it->second)) return nullptr;
    return &it->second;
  };

  // d-bar: mean undirected shortest-path length over connected unordered
  // pairs of mapped nodes in the predicted graph.
  std::vector<std::string> images;
  for (const auto& [g_node, p_node] : mapping)
    if (pred_nodes.count(p_node)) images.push_back(p_node);
  std::sort(images.begin(), images.end());
  images.erase(std::unique(images.begin(), images.end()), images.end());

  double dbar_sum = 0.0;
  std::size_t dbar_n = 0;
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t j = i + 1; j < images.size(); ++j) {
      auto it = hops.at(images[i]).find(images[j]);
      if (it == hops.at(images[i]).end()) continue;
      dbar_sum += it->second;
      ++dbar_n;
    }
  if (dbar_n == 0) {
    report.mean_distance = 1.0;
    report.dbar_defaulted = true;
  } else {
    report.mean_distance = dbar_sum / static_cast<double>(dbar_n);
  }

  double delta_sum = 0.0;
  double med_sum = 0.0;
  for (const auto& [u, v] : gt.edges) {
    const std::string* mu = mapped(u);
    const std::string* mv = mapped(v);
    if (!mu || !mv) continue;
    auto it = hops.at(*mu).find(*mv);
    if (it == hops.at(*mu).end()) continue;
    delta_sum += 1.0;
    ++report.n_connected;
    if (report.mean_distance > 0.0)
      med_sum += static_cast<double>(it->second) / report.mean_distance;
  }

  if (report.n_gt_edges > 0) {
    report.mec = delta_sum / static_cast<double>(report.n_gt_edges);
    report.coverage = static_cast<double>(report.n_connected) /
                      static_cast<double>(report.n_gt_edges);
  }
  if (report.n_connected > 0)
    report.med = med_sum / static_cast<double>(report.n_connected);
  return report;
}

ParsingScores parsing_scores(const AbstractGraph& pred, const AbstractGraph& gt, double tau) {
  ParsingScores scores;

  auto composite = [](const EquipmentNode& n) { return n.type + " " + n.label; };
  std::vector<std::string> pred_nodes, gt_nodes;
  for (const auto& n : pred.equipment) pred_nodes.push_back(composite(n));
  for (const auto& n : gt.equipment) gt_nodes.push_back(composite(n));

  const auto mapping = match_entities(pred_nodes, gt_nodes, tau);
  const double n_eq = static_cast<double>(mapping.n_match());
  if (!pred.equipment.empty())
    scores.equipment_accuracy = n_eq / static_cast<double>(pred.equipment.size());
  if (!gt.equipment.empty())
    scores.equipment_recall = n_eq / static_cast<double>(gt.equipment.size());

  // gt node id -> pred node id through the match.
  std::map<std::string, std::string> node_map;
  for (const auto& p : mapping.pairs)
    node_map[gt.equipment[p.gt_index].id] = pred.equipment[p.pred_index].id;

  // Directed edge multisets; each predicted connection can satisfy at most
  // one ground-truth connection.
  std::map<std::pair<std::string, std::string>, int> pred_edges;
  for (const auto& e : pred.connections) pred_edges[{e.from, e.to}]++;
  double n_cn = 0.0;
  for (const auto& e : gt.connections) {
    auto u = node_map.find(e.from);
    auto v = node_map.find(e.to);
    if (u == node_map.end() || v == node_map.end()) continue;
    auto it = pred_edges.find({u->second, v->second});
    if (it != pred_edges.end() && it->second > 0) {
      --it->second;
      n_cn += 1.0;
    }
  }
  if (!pred.connections.empty())
    scores.connection_accuracy = n_cn / static_cast<double>(pred.connections.size());
  if (!gt.connections.empty())
    scores.connection_recall = n_cn / static_cast<double>(gt.connections.size());
  return scores;
}

std::optional<double> topk_accuracy(const std::vector<CompletionCase>& cases, int k) {
  if (k < 1) throw ConfigError("topk_accuracy requires k >= 1");
  if (cases.empty()) return std::nullopt;
  double hits = 0.0;
  for (const auto& c : cases) {
    const std::size_t limit = std::min<std::size_t>(c.ranked_types.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < limit; ++i) {
      if (c.ranked_types[i] == c.truth_type) {
        hits += 1.0;
        break;
      }
    }
  }
  return hits / static_cast<double>(cases.size());
}

DesignRates design_rates(const std::vector<DesignOutcome>& outcomes) {
  DesignRates rates;
  rates.n_total = outcomes.size();
  for (const auto& o : outcomes) {
    if (o.legal) ++rates.n_valid;
    if (o.legal && o.compliant) ++rates.n_correct;
  }
  if (rates.n_total == 0) {
    rates.flagged = true;
    return rates;
  }
  rates.valid_rate = static_cast<double>(rates.n_valid) / static_cast<double>(rates.n_total);
  rates.correct_rate = static_cast<double>(rates.n_correct) / static_cast<double>(rates.n_total);
  return rates;
}

namespace {

std::optional<std::pair<int, std::string>> parse_judge_reply(const std::string& content,
                                                             bool& non_integer) {
  std::string body = text::trim(content);
  if (body.empty()) return std::nullopt;
  std::size_t pos = 0;
  while (pos < body.size() &&
         (std::isdigit(static_cast<unsigned char>(body[pos])) || body[pos] == '.'))
    ++pos;
  if (pos == 0) return std::nullopt;
  double value;
  try {
    value = std::stod(body.substr(0, pos));
  } catch (...) {
    return std::nullopt;
  }
  non_integer = std::abs(value - std::round(value)) > 1e-9;
  std::string rationale;
  auto colon = body.find(':', pos);
  if (colon != std::string::npos) rationale = text::trim(body.substr(colon + 1));
  return std::make_pair(static_cast<int>(std::llround(value)), rationale);
}

}  // namespace

JudgeScore judge_answer(const std::string& question, const std::string& answer,
                        const std::string& reference, const std::string& dimension,
                        orch::LlmClient& client) {
  if (std::find(kJudgeDimensions.begin(), kJudgeDimensions.end(), dimension) ==
      kJudgeDimensions.end())
    throw ConfigError("unknown judge dimension: " + dimension);

  JudgeScore score;
  score.dimension = dimension;

  const std::string prompt =
      "Rate the answer on the " + dimension +
      " dimension against the reference. Reply with an integer 0-100, then a colon and a short "
      "rationale.\n\nQuestion: " +
      question + "\n\nAnswer: " + answer + "\n\nReference: " + reference;

  orch::CompletionOptions options;
  options.agent_name = "judge";
  std::vector<orch::Message> msgs{orch::Message::make(orch::Role::User, prompt)};

  for (int attempt = 0; attempt < 2; ++attempt) {
    orch::Message reply = client.complete(msgs, options);
    bool non_integer = false;
    auto parsed = parse_judge_reply(reply.text(), non_integer);
    if (parsed) {
      int v = parsed->first;
      if (v < 0 || v > 100) {
        v = std::clamp(v, 0, 100);
        score.flagged = true;
      }
      if (non_integer) score.flagged = true;
      score.score = v;
      score.rationale = parsed->second;
      return score;
    }
    msgs.push_back(reply);
    msgs.push_back(orch::Message::make(
        orch::Role::User, "Could not parse a 0-100 score. Reply as '<score>: <rationale>'."));
  }
  score.flagged = true;
  return score;
}

OJson report_bundle(const std::string& task_kind, const std::vector<CaseMetrics>& cases) {
  if (cases.empty()) throw ConfigError("report_bundle requires at least one case");
  for (const auto& c : cases)
    if (c.kind != task_kind)
      throw ConfigError("mixed task kinds in report: '" + c.kind + "' vs '" + task_kind + "'");

  std::map<std::string, std::vector<double>> columns;
  for (const auto& c : cases)
    for (const auto& [key, value] : c.values) columns[key].push_back(value);

  OJson aggregate = OJson::object();
  for (auto& [key, values] : columns) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted.size() % 2 == 1
                        ? sorted[sorted.size() / 2]
                        : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    aggregate[key] = mean;
    aggregate[key + "_median"] = median;
  }

  OJson report;
  report["task"] = task_kind;
  report["n_cases"] = cases.size();
  report["aggregate"] = std::move(aggregate);
  report["cases"] = OJson::array();
  for (const auto& c : cases) {
    OJson row;
    row["id"] = c.id;
    for (const auto& [key, value] : c.values) row[key] = value;
    report["cases"].push_back(std::move(row));
  }
  return report;
}

}  // namespace cepro::metrics
