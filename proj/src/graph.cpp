#include "cepro/graph.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cepro/error.hpp"
#include "cepro/rng.hpp"

namespace cepro {

const EquipmentNode* AbstractGraph::find_node(const std::string& id) const {
  for (const auto& n : equipment)
    if (n.id == id) return &n;
  return nullptr;
}

EquipmentOntology EquipmentOntology::standard() {
  EquipmentOntology o;
  auto add = [&o](const std::string& cat, std::initializer_list<const char*> types) {
    for (const char* t : types) o.add_type(cat, t);
  };
  add("reaction", {"Reactor", "Fixed-bed reactor", "Fluidized-bed reactor", "Tubular reactor"});
  add("separation", {"Distillation column", "Gas-Liquid Separator", "Absorption column",
                     "Extraction column", "Flash drum", "Filter", "Dryer", "Centrifuge"});
  add("heat-exchange", {"Cooler/Condenser", "Heater", "Kettle HEX", "Heat exchanger", "Reboiler"});
  add("transport", {"Centrifugal pump", "Compressor", "Blower", "Valve"});
  add("storage", {"Storage tank", "Buffer vessel"});
  add("mixing-splitting", {"Mixer", "Splitter"});
  add("source-sink", {"Feed", "Product"});
  return o;
}

void EquipmentOntology::add_type(const std::string& category, const std::string& type) {
  if (type_to_category_.count(type))
    throw ConfigError("ontology type already present: " + type);
  auto it = std::find_if(categories_.begin(), categories_.end(),
                         [&](const auto& c) { return c.first == category; });
  if (it == categories_.end()) {
    categories_.push_back({category, {type}});
  } else {
    it->second.push_back(type);
  }
  type_to_category_[type] = category;
}

bool EquipmentOntology::contains(const std::string& type) const {
  return type_to_category_.count(type) != 0;
}

const std::string* EquipmentOntology::category_of(const std::string& type) const {
  auto it = type_to_category_.find(type);
  return it == type_to_category_.end() ? nullptr : &it->second;
}

std::vector<std::string> EquipmentOntology::vocabulary() const {
  std::vector<std::string> out;
  for (const auto& [cat, types] : categories_)
    out.insert(out.end(), types.begin(), types.end());
  return out;
}

AbstractGraph build_graph(std::vector<EquipmentNode> nodes, std::vector<Connection> edges) {
  std::unordered_set<std::string> seen;
  for (const auto& n : nodes) {
    if (n.id.empty()) throw ConfigError("equipment node with empty id");
    if (!seen.insert(n.id).second) throw ConfigError("duplicate id " + n.id);
  }
  for (const auto& e : edges) {
    if (e.from.empty() || e.to.empty())
      throw ConfigError("connection with empty endpoint (" + e.from + " -> " + e.to + ")");
  }
  return AbstractGraph{std::move(nodes), std::move(edges)};
}

namespace {

struct Degrees {
  int in = 0;
  int out = 0;
};

}  // namespace

ValidationReport validate_topology(const AbstractGraph& graph, const EquipmentOntology& ontology,
                                   const std::vector<std::string>& extra_rules) {
  ValidationReport report;
  auto add = [&report](const std::string& rule, Severity sev, std::vector<std::string> targets,
                       std::string message) {
    report.violations.push_back({rule, sev, std::move(targets), std::move(message)});
  };

  std::unordered_set<std::string> ids;
  for (const auto& n : graph.equipment) ids.insert(n.id);

  // L1: every connection endpoint exists.
  for (std::size_t i = 0; i < graph.connections.size(); ++i) {
    const auto& e = graph.connections[i];
    for (const std::string& end : {e.from, e.to}) {
      if (!ids.count(end))
        add("L1", Severity::Legality, {end, "connections[" + std::to_string(i) + "]"},
            "connections[" + std::to_string(i) + "]: endpoint '" + end + "' not in graph");
    }
  }

  // L2: undirected connectivity (single component) when nonempty.
  if (!graph.equipment.empty()) {
    auto comps = connected_components(graph);
    if (comps.size() > 1) {
      std::vector<std::string> firsts;
      for (const auto& c : comps) firsts.push_back(c.front());
      add("L2", Severity::Legality, firsts,
          "graph splits into " + std::to_string(comps.size()) + " components");
    }
  }

  // L3: every node type canonical or the masked sentinel.
  for (const auto& n : graph.equipment) {
    if (n.type != kMaskedType && !ontology.contains(n.type))
      add("L3", Severity::Legality, {n.id},
          "node '" + n.id + "' has type '" + n.type + "' outside the equipment vocabulary");
  }

  // C0: a process must contain at least one unit.
  if (graph.equipment.empty())
    add("C0", Severity::Compliance, {}, "graph has no equipment");

  std::unordered_map<std::string, Degrees> deg;
  for (const auto& e : graph.connections) {
    if (!ids.count(e.from) || !ids.count(e.to)) continue;  // already an L1 violation
    deg[e.from].out++;
    deg[e.to].in++;
  }

  for (const auto& n : graph.equipment) {
    const Degrees d = deg.count(n.id) ? deg.at(n.id) : Degrees{};
    if (n.type != "Feed" && d.in < 1)
      add("C1", Severity::Compliance, {n.id}, "node '" + n.id + "' has no inlet");
    if (n.type != "Product" && d.out < 1)
      add("C2", Severity::Compliance, {n.id}, "node '" + n.id + "' has no outlet");
    if (n.type == "Mixer" && d.in < 2)
      add("C3", Severity::Compliance, {n.id}, "mixer '" + n.id + "' has fewer than 2 inlets");
    if (n.type == "Splitter" && d.out < 2)
      add("C4", Severity::Compliance, {n.id}, "splitter '" + n.id + "' has fewer than 2 outlets");
    if (n.type == "Distillation column" && d.out < 2)
      add("C5", Severity::Compliance, {n.id}, "column '" + n.id + "' has fewer than 2 outlets");
  }

  for (std::size_t i = 0; i < graph.connections.size(); ++i) {
    const auto& e = graph.connections[i];
    if (!e.from.empty() && e.from == e.to)
      add("C6", Severity::Compliance, {e.from, "connections[" + std::to_string(i) + "]"},
          "self-loop on '" + e.from + "'");
  }

  for (const auto& rule : extra_rules) {
    if (rule == kExtraRuleFeedProduct) {
      bool has_feed = false, has_product = false;
      for (const auto& n : graph.equipment) {
        if (n.type == "Feed") has_feed = true;
        if (n.type == "Product") has_product = true;
      }
      if (!has_feed || !has_product)
        add("E1", Severity::Compliance, {},
            std::string("missing ") + (!has_feed ? "Feed" : "Product") + " node");
    } else if (rule == kExtraRuleReactorSeparation) {
      // Downstream reachability over directed edges.
      std::unordered_map<std::string, std::vector<std::string>> succ;
      for (const auto& e : graph.connections)
        if (ids.count(e.from) && ids.count(e.to)) succ[e.from].push_back(e.to);
      for (const auto& n : graph.equipment) {
        const std::string* cat = ontology.category_of(n.type);
        if (!cat || *cat != "reaction") continue;
        std::unordered_set<std::string> visited{n.id};
        std::vector<std::string> stack{n.id};
        bool found = false;
        while (!stack.empty() && !found) {
          std::string cur = stack.back();
          stack.pop_back();
          for (const auto& nxt : succ[cur]) {
            if (!visited.insert(nxt).second) continue;
            const EquipmentNode* node = graph.find_node(nxt);
            const std::string* c = node ? ontology.category_of(node->type) : nullptr;
            if (c && *c == "separation") {
              found = true;
              break;
            }
            stack.push_back(nxt);
          }
        }
        if (!found)
          add("E2", Severity::Compliance, {n.id},
              "reactor '" + n.id + "' has no downstream separation unit");
      }
    } else {
      throw ConfigError("unknown extra rule id: " + rule);
    }
  }

  for (const auto& v : report.violations)
    if (v.severity == Severity::Legality) report.legal = false;
  report.compliant = report.legal && std::all_of(report.violations.begin(),
                                                 report.violations.end(), [](const Violation& v) {
                                                   return v.severity != Severity::Compliance;
                                                 });
  return report;
}

MaskedGraph mask_node(const AbstractGraph& graph, std::optional<std::string> node_id,
                      std::optional<std::uint64_t> seed) {
  std::string target;
  if (node_id) {
    if (!graph.find_node(*node_id))
      throw ConfigError("mask target '" + *node_id + "' not in graph");
    target = *node_id;
  } else {
    if (!seed) throw ConfigError("mask_node requires a node id or a seed");
    std::vector<std::string> eligible;
    for (const auto& n : graph.equipment)
      if (n.type != "Feed" && n.type != "Product") eligible.push_back(n.id);
    if (eligible.empty()) throw ConfigError("no maskable node (all Feed/Product)");
    Rng rng(*seed);
    target = eligible[rng.index(eligible.size())];
  }

  MaskedGraph masked;
  masked.graph = graph;
  masked.masked_id = target;
  for (auto& n : masked.graph.equipment) {
    if (n.id == target) {
      masked.truth_type = n.type;
      n.type = kMaskedType;
      n.label = kMaskedType;
      break;
    }
  }
  return masked;
}

OJson graph_to_json(const AbstractGraph& graph) {
  OJson j;
  j["equipment"] = OJson::array();
  for (const auto& n : graph.equipment) {
    OJson node;
    node["id"] = n.id;
    node["type"] = n.type;
    node["label"] = n.label;
    node["attrs"] = OJson::object();
    for (const auto& [k, v] : n.attrs) node["attrs"][k] = v;
    j["equipment"].push_back(std::move(node));
  }
  j["connections"] = OJson::array();
  for (const auto& e : graph.connections) {
    OJson edge;
    edge["from"] = e.from;
    edge["to"] = e.to;
    if (e.stream)
      edge["stream"] = *e.stream;
    else
      edge["stream"] = nullptr;
    edge["attrs"] = OJson::object();
    for (const auto& [k, v] : e.attrs) edge["attrs"][k] = v;
    j["connections"].push_back(std::move(edge));
  }
  return j;
}

std::string serialize_graph(const AbstractGraph& graph) {
  return graph_to_json(graph).dump(2) + "\n";
}

namespace {

std::map<std::string, std::string> parse_attrs(const OJson& j, const std::string& where) {
  std::map<std::string, std::string> attrs;
  if (!j.is_object()) throw ParseError(where + ": 'attrs' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_string())
      throw ParseError(where + ": attr '" + it.key() + "' must be a string");
    attrs[it.key()] = it.value().get<std::string>();
  }
  return attrs;
}

void check_keys(const OJson& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ParseError(where + ": unknown key '" + it.key() + "'");
  }
}

std::string require_string(const OJson& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  if (!obj.at(key).is_string()) throw ParseError(where + ": field '" + key + "' must be a string");
  return obj.at(key).get<std::string>();
}

}  // namespace

AbstractGraph graph_from_json(const OJson& j, const std::string& what) {
  if (!j.is_object()) throw ParseError(what + ": top level must be an object");
  check_keys(j, {"equipment", "connections"}, what);
  if (!j.contains("equipment") || !j.at("equipment").is_array())
    throw ParseError(what + ": missing or non-array 'equipment'");
  if (!j.contains("connections") || !j.at("connections").is_array())
    throw ParseError(what + ": missing or non-array 'connections'");

  std::vector<EquipmentNode> nodes;
  std::size_t idx = 0;
  for (const auto& e : j.at("equipment")) {
    const std::string where = what + ": equipment[" + std::to_string(idx) + "]";
    if (!e.is_object()) throw ParseError(where + ": must be an object");
    check_keys(e, {"id", "type", "label", "attrs"}, where);
    EquipmentNode n;
    n.id = require_string(e, "id", where);
    n.type = require_string(e, "type", where);
    n.label = e.contains("label") ? require_string(e, "label", where) : "";
    if (e.contains("attrs")) n.attrs = parse_attrs(e.at("attrs"), where);
    nodes.push_back(std::move(n));
    ++idx;
  }

  std::vector<Connection> edges;
  idx = 0;
  for (const auto& e : j.at("connections")) {
    const std::string where = what + ": connections[" + std::to_string(idx) + "]";
    if (!e.is_object()) throw ParseError(where + ": must be an object");
    check_keys(e, {"from", "to", "stream", "attrs"}, where);
    Connection c;
    c.from = require_string(e, "from", where);
    c.to = require_string(e, "to", where);
    if (e.contains("stream") && !e.at("stream").is_null()) {
      if (!e.at("stream").is_string())
        throw ParseError(where + ": field 'stream' must be a string or null");
      c.stream = e.at("stream").get<std::string>();
    }
    if (e.contains("attrs")) c.attrs = parse_attrs(e.at("attrs"), where);
    edges.push_back(std::move(c));
    ++idx;
  }

  try {
    return build_graph(std::move(nodes), std::move(edges));
  } catch (const ConfigError& e) {
    throw ParseError(what + ": " + e.what());
  }
}

AbstractGraph parse_graph(const std::string& content) {
  return graph_from_json(io::parse_json(content, "graph"), "graph");
}

std::vector<std::vector<std::string>> connected_components(const AbstractGraph& graph) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < graph.equipment.size(); ++i) index[graph.equipment[i].id] = i;

  std::vector<std::vector<std::size_t>> adj(graph.equipment.size());
  for (const auto& e : graph.connections) {
    auto a = index.find(e.from);
    auto b = index.find(e.to);
    if (a == index.end() || b == index.end()) continue;
    adj[a->second].push_back(b->second);
    adj[b->second].push_back(a->second);
  }

  std::vector<int> comp(graph.equipment.size(), -1);
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < graph.equipment.size(); ++i) {
    if (comp[i] >= 0) continue;
    int c = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<std::size_t> stack{i};
    comp[i] = c;
    while (!stack.empty()) {
      std::size_t cur = stack.back();
      stack.pop_back();
      for (std::size_t nxt : adj[cur]) {
        if (comp[nxt] < 0) {
          comp[nxt] = c;
          stack.push_back(nxt);
        }
      }
    }
  }
  for (std::size_t i = 0; i < graph.equipment.size(); ++i)
    out[static_cast<std::size_t>(comp[i])].push_back(graph.equipment[i].id);
  return out;
}

}  // namespace cepro
