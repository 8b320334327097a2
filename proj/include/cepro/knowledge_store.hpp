#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cepro/io.hpp"

namespace cepro::knowledge {

struct EmbeddingVector {
  std::vector<float> values;

  bool zero() const;
  std::size_t dimension() const { return values.size(); }
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingVector embed(const std::string& text) const = 0;
  virtual std::size_t dimension() const = 0;
};

// Deterministic stub: seeded feature hashing over character 3-grams of
// lowercased, whitespace-collapsed words, L2-normalized. Empty text maps to
// the all-zero (unusable) vector.
class HashingEmbedder : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::uint64_t seed = 1, std::size_t dim = 64)
      : seed_(seed), dim_(dim) {}
  EmbeddingVector embed(const std::string& text) const override;
  std::size_t dimension() const override { return dim_; }

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

struct ChunkConfig {
  std::size_t target_chars = 2000;
  std::size_t overlap_chars = 200;
};

struct Chunk {
  std::string id;
  std::string doc_id;
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
  std::optional<EmbeddingVector> embedding;
};

// Character-budgeted chunking with paragraph snapping: a boundary moves back
// to the nearest preceding blank-line break when one lies within
// target_chars/4, and consecutive chunks overlap by exactly overlap_chars.
std::vector<Chunk> chunk_document(const std::string& doc_id, const std::string& document,
                                  const ChunkConfig& cfg);

struct ChunkStore {
  std::vector<Chunk> chunks;

  const Chunk* find(const std::string& id) const;
  // Replaces an existing chunk with the same id.
  void upsert(Chunk chunk);
  void save(const std::string& dir) const;
  static ChunkStore load(const std::string& dir);
};

struct ScoredChunk {
  Chunk chunk;
  double score = 0.0;
};

// Top-k chunks by cosine similarity of the stub/provider embedding; ties
// broken by chunk id ascending.
std::vector<ScoredChunk> vector_query(const ChunkStore& store, const EmbeddingProvider& provider,
                                      const std::string& query_text, std::size_t k);

inline const std::array<std::string, 5> kOntologyLayers = {
    "Process", "Flowsheet Structure", "Reaction Mechanism", "Substance", "Constraints"};

bool is_valid_layer(const std::string& layer);

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;
  std::string layer;
  std::vector<std::string> chunks;  // provenance chunk ids
};

struct EntityRecord {
  std::string id;
  std::string name;
  std::vector<std::string> aliases;
  std::optional<EmbeddingVector> embedding;
  std::optional<std::string> canonical_of;

  bool is_root() const { return !canonical_of.has_value(); }
};

struct KnowledgeGraph {
  std::map<std::string, EntityRecord> entities;
  std::vector<Triple> triples;

  std::size_t root_count() const;
  // Follows canonical_of one hop (chains are collapsed after merges).
  std::string resolve_id(const std::string& id) const;
};

struct SubgraphResult {
  KnowledgeGraph kg;
  std::vector<std::string> warnings;
};

// Entities within `depth` triple-hops (undirected) of the seeds, plus all
// induced triples. Unknown seeds are skipped with a warning.
SubgraphResult graph_query(const KnowledgeGraph& kg, const std::vector<std::string>& seeds,
                           int depth);

// Union of entities and triples; incoming triple endpoints are canonicalized
// first, exact-duplicate triples (s,p,o,layer) collapse with provenance
// lists merged.
KnowledgeGraph add_subgraph(KnowledgeGraph kg, const KnowledgeGraph& local);

enum class Verdict { AutoMerge, ReviewMerge, Distinct };

std::string verdict_name(Verdict v);

struct Adjudication {
  bool merged = false;
  std::string rationale;
  bool flagged = false;  // reply was unparseable, treated as not merged
};

struct MergeDecision {
  std::string a;
  std::string b;
  double similarity = 0.0;
  Verdict verdict = Verdict::Distinct;
  std::optional<Adjudication> adjudication;
};

struct MergeThresholds {
  double t_auto = 0.95;
  double t_review = 0.85;

  void validate() const;  // 0 <= t_review < t_auto <= 1
  Verdict classify(double similarity) const;
};

struct ResolveResult {
  std::vector<MergeDecision> decisions;  // AutoMerge and ReviewMerge only
  std::size_t distinct_pairs = 0;
};

// Pairwise cosine over name embeddings of root entities. Records missing an
// embedding are embedded on the fly (the graph is not mutated).
ResolveResult resolve_entities(const KnowledgeGraph& kg, const MergeThresholds& thresholds,
                               const EmbeddingProvider& provider);

using Adjudicator = std::function<Adjudication(const MergeDecision&)>;

struct MergeStats {
  int auto_merged = 0;
  int review_merged = 0;
  int review_rejected = 0;
  int review_pending = 0;
  int distinct_pairs = 0;
};

// Union-find merge; the lexicographically smallest id of each class becomes
// the root, losers keep canonical_of tombstones and donate their names to
// the root's alias list (kept sorted). Triples are rewritten to roots.
KnowledgeGraph apply_merges(KnowledgeGraph kg, const std::vector<MergeDecision>& decisions,
                            const Adjudicator* adjudicator = nullptr, MergeStats* stats = nullptr,
                            std::vector<std::string>* warnings = nullptr);

void save_kg(const KnowledgeGraph& kg, const std::string& dir);
KnowledgeGraph load_kg(const std::string& dir);

}  // namespace cepro::knowledge
