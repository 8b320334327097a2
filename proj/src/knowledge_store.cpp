#include "cepro/knowledge_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <queue>
#include <set>

#include "cepro/error.hpp"
#include "cepro/text.hpp"

namespace cepro::knowledge {

namespace fs = std::filesystem;

bool EmbeddingVector::zero() const {
  for (float v : values)
    if (v != 0.0f) return false;
  return true;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension())
    throw ConfigError("embedding dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                      std::to_string(b.dimension()));
  if (a.zero() || b.zero()) throw ConfigError("cosine similarity undefined for zero vector");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += static_cast<double>(a.values[i]) * b.values[i];
    na += static_cast<double>(a.values[i]) * a.values[i];
    nb += static_cast<double>(b.values[i]) * b.values[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

EmbeddingVector HashingEmbedder::embed(const std::string& input) const {
  EmbeddingVector v;
  v.values.assign(dim_, 0.0f);
  const std::string norm = text::collapse_ws(text::to_lower(input));
  if (norm.empty()) return v;

  for (const auto& word : text::split(norm, ' ')) {
    if (word.empty()) continue;
    const std::string padded = "^" + word + "$";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      const std::uint64_t h = text::fnv1a(padded.substr(i, 3), seed_);
      const std::size_t idx = static_cast<std::size_t>(h % dim_);
      const float sign = ((h >> 32) & 1) ? 1.0f : -1.0f;
      v.values[idx] += sign;
    }
  }

  double norm2 = 0.0;
  for (float x : v.values) norm2 += static_cast<double>(x) * x;
  if (norm2 > 0.0) {
    const float inv = static_cast<float>(1.0 / std::sqrt(norm2));
    for (float& x : v.values) x *= inv;
  }
  return v;
}

std::vector<Chunk> chunk_document(const std::string& doc_id, const std::string& document,
                                  const ChunkConfig& cfg) {
  if (cfg.target_chars == 0 || cfg.target_chars <= cfg.overlap_chars)
    throw ConfigError("chunking requires target_chars > overlap_chars >= 0");
  std::vector<Chunk> chunks;
  if (document.empty()) return chunks;

  const std::size_t snap_window = cfg.target_chars / 4;
  std::size_t start = 0;
  std::size_t index = 0;
  while (start < document.size()) {
    std::size_t end = std::min(start + cfg.target_chars, document.size());
    if (end < document.size() && snap_window > 0) {
      // Snap back to just after the nearest preceding paragraph break, as
      // long as the chunk stays longer than the overlap.
      std::size_t brk = document.rfind("\n\n", end >= 2 ? end - 2 : 0);
      if (brk != std::string::npos && brk + 2 > start) {
        const std::size_t snapped = brk + 2;
        if (snapped <= end && end - snapped <= snap_window && snapped - start > cfg.overlap_chars)
          end = snapped;
      }
    }

    Chunk c;
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "%05zu", index);
    c.id = doc_id + ":" + suffix;
    c.doc_id = doc_id;
    c.start = start;
    c.end = end;
    c.text = document.substr(start, end - start);
    chunks.push_back(std::move(c));
    ++index;

    if (end >= document.size()) break;
    start = end - cfg.overlap_chars;
  }
  return chunks;
}

const Chunk* ChunkStore::find(const std::string& id) const {
  for (const auto& c : chunks)
    if (c.id == id) return &c;
  return nullptr;
}

void ChunkStore::upsert(Chunk chunk) {
  for (auto& c : chunks) {
    if (c.id == chunk.id) {
      c = std::move(chunk);
      return;
    }
  }
  chunks.push_back(std::move(chunk));
}

void ChunkStore::save(const std::string& dir) const {
  fs::create_directories(dir);
  std::vector<OJson> rows;
  std::size_t dim = 0;
  for (const auto& c : chunks)
    if (c.embedding) dim = c.embedding->dimension();

  std::ofstream bin(fs::path(dir) / "embeddings.bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write embeddings in " + dir);
  const std::uint32_t header = static_cast<std::uint32_t>(dim);
  bin.write(reinterpret_cast<const char*>(&header), sizeof(header));

  for (const auto& c : chunks) {
    OJson row;
    row["id"] = c.id;
    row["doc_id"] = c.doc_id;
    row["span"] = OJson::array({c.start, c.end});
    row["text"] = c.text;
    row["embedded"] = c.embedding.has_value();
    rows.push_back(std::move(row));
    if (c.embedding) {
      if (c.embedding->dimension() != dim)
        throw ConfigError("chunk store holds mixed embedding dimensions");
      bin.write(reinterpret_cast<const char*>(c.embedding->values.data()),
                static_cast<std::streamsize>(dim * sizeof(float)));
    }
  }
  io::write_jsonl((fs::path(dir) / "chunks.jsonl").string(), rows);
}

ChunkStore ChunkStore::load(const std::string& dir) {
  ChunkStore store;
  const auto rows = io::read_jsonl((fs::path(dir) / "chunks.jsonl").string());

  std::ifstream bin(fs::path(dir) / "embeddings.bin", std::ios::binary);
  if (!bin) throw IoError("cannot open embeddings in " + dir);
  std::uint32_t dim = 0;
  bin.read(reinterpret_cast<char*>(&dim), sizeof(dim));

  for (const auto& row : rows) {
    Chunk c;
    c.id = row.at("id").get<std::string>();
    c.doc_id = row.at("doc_id").get<std::string>();
    c.start = row.at("span").at(0).get<std::size_t>();
    c.end = row.at("span").at(1).get<std::size_t>();
    c.text = row.at("text").get<std::string>();
    if (row.value("embedded", false)) {
      EmbeddingVector v;
      v.values.resize(dim);
      bin.read(reinterpret_cast<char*>(v.values.data()),
               static_cast<std::streamsize>(dim * sizeof(float)));
      if (!bin) throw ParseError("embeddings.bin truncated in " + dir);
      c.embedding = std::move(v);
    }
    store.chunks.push_back(std::move(c));
  }
  return store;
}

std::vector<ScoredChunk> vector_query(const ChunkStore& store, const EmbeddingProvider& provider,
                                      const std::string& query_text, std::size_t k) {
  std::vector<ScoredChunk> out;
  if (store.chunks.empty() || k == 0) return out;
  const EmbeddingVector q = provider.embed(query_text);
  if (q.zero()) return out;

  for (const auto& c : store.chunks) {
    if (!c.embedding || c.embedding->zero()) continue;
    out.push_back({c, cosine_similarity(q, *c.embedding)});
  }
  std::sort(out.begin(), out.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk.id < b.chunk.id;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

bool is_valid_layer(const std::string& layer) {
  return std::find(kOntologyLayers.begin(), kOntologyLayers.end(), layer) !=
         kOntologyLayers.end();
}

std::size_t KnowledgeGraph::root_count() const {
  std::size_t n = 0;
  for (const auto& [id, e] : entities)
    if (e.is_root()) ++n;
  return n;
}

std::string KnowledgeGraph::resolve_id(const std::string& id) const {
  auto it = entities.find(id);
  if (it == entities.end() || it->second.is_root()) return id;
  return *it->second.canonical_of;
}

SubgraphResult graph_query(const KnowledgeGraph& kg, const std::vector<std::string>& seeds,
                           int depth) {
  if (depth < 0) throw ConfigError("graph_query depth must be >= 0");
  SubgraphResult result;

  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& t : kg.triples) {
    adj[t.subject].push_back(t.object);
    adj[t.object].push_back(t.subject);
  }

  std::map<std::string, int> dist;
  std::queue<std::string> frontier;
  for (const auto& seed : seeds) {
    const std::string id = kg.resolve_id(seed);
    if (!kg.entities.count(id)) {
      result.warnings.push_back("unknown seed entity: " + seed);
      continue;
    }
    if (dist.emplace(id, 0).second) frontier.push(id);
  }
  while (!frontier.empty()) {
    const std::string cur = frontier.front();
    frontier.pop();
    if (dist[cur] >= depth) continue;
    for (const auto& nxt : adj[cur]) {
      if (dist.emplace(nxt, dist[cur] + 1).second) frontier.push(nxt);
    }
  }

  for (const auto& [id, d] : dist) {
    auto it = kg.entities.find(id);
    if (it != kg.entities.end()) result.kg.entities[id] = it->second;
  }
  for (const auto& t : kg.triples)
    if (dist.count(t.subject) && dist.count(t.object)) result.kg.triples.push_back(t);
  return result;
}

namespace {

void merge_aliases(EntityRecord& root, const EntityRecord& other) {
  auto add = [&root](const std::string& alias) {
    if (alias.empty() || alias == root.name) return;
    if (std::find(root.aliases.begin(), root.aliases.end(), alias) == root.aliases.end())
      root.aliases.push_back(alias);
  };
  add(other.name);
  for (const auto& a : other.aliases) add(a);
  std::sort(root.aliases.begin(), root.aliases.end());
}

void append_unique(std::vector<std::string>& dst, const std::vector<std::string>& src) {
  for (const auto& s : src)
    if (std::find(dst.begin(), dst.end(), s) == dst.end()) dst.push_back(s);
}

}  // namespace

KnowledgeGraph add_subgraph(KnowledgeGraph kg, const KnowledgeGraph& local) {
  for (const auto& [id, record] : local.entities) {
    auto it = kg.entities.find(id);
    if (it == kg.entities.end()) {
      kg.entities[id] = record;
    } else {
      merge_aliases(it->second, record);
      if (!it->second.embedding && record.embedding) it->second.embedding = record.embedding;
    }
  }

  for (const auto& incoming : local.triples) {
    Triple t = incoming;
    t.subject = kg.resolve_id(t.subject);
    t.object = kg.resolve_id(t.object);
    bool merged = false;
    for (auto& existing : kg.triples) {
      if (existing.subject == t.subject && existing.predicate == t.predicate &&
          existing.object == t.object && existing.layer == t.layer) {
        append_unique(existing.chunks, t.chunks);
        merged = true;
        break;
      }
    }
    if (!merged) kg.triples.push_back(std::move(t));
  }
  return kg;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::AutoMerge: return "AutoMerge";
    case Verdict::ReviewMerge: return "ReviewMerge";
    case Verdict::Distinct: return "Distinct";
  }
  return "Distinct";
}

void MergeThresholds::validate() const {
  if (!(0.0 <= t_review && t_review < t_auto && t_auto <= 1.0))
    throw ConfigError("merge thresholds require 0 <= t_review < t_auto <= 1 (got t_review=" +
                      std::to_string(t_review) + ", t_auto=" + std::to_string(t_auto) + ")");
}

Verdict MergeThresholds::classify(double s) const {
  if (s > t_auto) return Verdict::AutoMerge;
  if (s > t_review) return Verdict::ReviewMerge;
  return Verdict::Distinct;
}

ResolveResult resolve_entities(const KnowledgeGraph& kg, const MergeThresholds& thresholds,
                               const EmbeddingProvider& provider) {
  thresholds.validate();
  ResolveResult result;

  std::vector<const EntityRecord*> roots;
  for (const auto& [id, e] : kg.entities)
    if (e.is_root()) roots.push_back(&e);
  // std::map iteration already yields ids in ascending order.

  std::vector<EmbeddingVector> embeddings(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i)
    embeddings[i] = roots[i]->embedding ? *roots[i]->embedding : provider.embed(roots[i]->name);

  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      double s = 0.0;
      if (!embeddings[i].zero() && !embeddings[j].zero())
        s = cosine_similarity(embeddings[i], embeddings[j]);
      const Verdict verdict = thresholds.classify(s);
      if (verdict == Verdict::Distinct) {
        ++result.distinct_pairs;
        continue;
      }
      result.decisions.push_back({roots[i]->id, roots[j]->id, s, verdict, std::nullopt});
    }
  }
  return result;
}

KnowledgeGraph apply_merges(KnowledgeGraph kg, const std::vector<MergeDecision>& decisions,
                            const Adjudicator* adjudicator, MergeStats* stats,
                            std::vector<std::string>* warnings) {
  std::map<std::string, std::string> parent;
  for (const auto& [id, e] : kg.entities)
    if (e.is_root()) parent[id] = id;

  std::function<std::string(const std::string&)> find = [&](const std::string& id) -> std::string {
    auto it = parent.find(id);
    if (it == parent.end()) return id;
    if (it->second == id) return id;
    std::string root = find(it->second);
    parent[id] = root;
    return root;
  };
  auto unite = [&](const std::string& a, const std::string& b) {
    std::string ra = find(a), rb = find(b);
    if (ra == rb) return;
    // Smallest id wins as the canonical root.
    if (rb < ra) std::swap(ra, rb);
    parent[rb] = ra;
  };

  for (const auto& d : decisions) {
    if (!kg.entities.count(d.a) || !kg.entities.count(d.b)) {
      if (warnings) warnings->push_back("merge decision references unknown entity");
      continue;
    }
    if (d.verdict == Verdict::AutoMerge) {
      unite(d.a, d.b);
      if (stats) ++stats->auto_merged;
    } else if (d.verdict == Verdict::ReviewMerge) {
      std::optional<Adjudication> adjudication = d.adjudication;
      if (!adjudication && adjudicator && *adjudicator) adjudication = (*adjudicator)(d);
      if (!adjudication) {
        if (stats) ++stats->review_pending;
        if (warnings)
          warnings->push_back("review pair (" + d.a + ", " + d.b +
                              ") left unmerged: no adjudicator");
        continue;
      }
      if (adjudication->merged) {
        unite(d.a, d.b);
        if (stats) ++stats->review_merged;
      } else if (stats) {
        ++stats->review_rejected;
      }
    }
  }

  // Rewrite losers to tombstones pointing at their final roots.
  for (auto& [id, record] : kg.entities) {
    if (!record.is_root()) continue;
    const std::string root_id = find(id);
    if (root_id == id) continue;
    EntityRecord& root = kg.entities.at(root_id);
    merge_aliases(root, record);
    record.canonical_of = root_id;
  }
  // Collapse pre-existing tombstone chains to one hop.
  for (auto& [id, record] : kg.entities) {
    if (record.is_root()) continue;
    record.canonical_of = find(*record.canonical_of);
  }

  // Rewrite triples to roots and collapse exact duplicates.
  std::vector<Triple> rewritten;
  for (auto& t : kg.triples) {
    t.subject = find(kg.resolve_id(t.subject));
    t.object = find(kg.resolve_id(t.object));
    bool merged = false;
    for (auto& existing : rewritten) {
      if (existing.subject == t.subject && existing.predicate == t.predicate &&
          existing.object == t.object && existing.layer == t.layer) {
        append_unique(existing.chunks, t.chunks);
        merged = true;
        break;
      }
    }
    if (!merged) rewritten.push_back(std::move(t));
  }
  kg.triples = std::move(rewritten);
  return kg;
}

void save_kg(const KnowledgeGraph& kg, const std::string& dir) {
  fs::create_directories(dir);
  std::vector<OJson> entity_rows;
  for (const auto& [id, e] : kg.entities) {
    OJson row;
    row["id"] = e.id;
    row["name"] = e.name;
    row["aliases"] = e.aliases;
    row["canonical_of"] = e.canonical_of ? OJson(*e.canonical_of) : OJson(nullptr);
    entity_rows.push_back(std::move(row));
  }
  io::write_jsonl((fs::path(dir) / "entities.jsonl").string(), entity_rows);

  std::vector<OJson> triple_rows;
  for (const auto& t : kg.triples) {
    OJson row;
    row["subject"] = t.subject;
    row["predicate"] = t.predicate;
    row["object"] = t.object;
    row["layer"] = t.layer;
    row["chunks"] = t.chunks;
    triple_rows.push_back(std::move(row));
  }
  io::write_jsonl((fs::path(dir) / "triples.jsonl").string(), triple_rows);
}

KnowledgeGraph load_kg(const std::string& dir) {
  KnowledgeGraph kg;
  for (const auto& row : io::read_jsonl((fs::path(dir) / "entities.jsonl").string())) {
    EntityRecord e;
    e.id = row.at("id").get<std::string>();
    e.name = row.at("name").get<std::string>();
    if (row.contains("aliases")) e.aliases = row.at("aliases").get<std::vector<std::string>>();
    if (row.contains("canonical_of") && !row.at("canonical_of").is_null())
      e.canonical_of = row.at("canonical_of").get<std::string>();
    kg.entities[e.id] = std::move(e);
  }
  for (const auto& row : io::read_jsonl((fs::path(dir) / "triples.jsonl").string())) {
    Triple t;
    t.subject = row.at("subject").get<std::string>();
    t.predicate = row.at("predicate").get<std::string>();
    t.object = row.at("object").get<std::string>();
    t.layer = row.at("layer").get<std::string>();
    if (row.contains("chunks")) t.chunks = row.at("chunks").get<std::vector<std::string>>();
    kg.triples.push_back(std::move(t));
  }
  return kg;
}

}  // namespace cepro::knowledge
