#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cepro/knowledge_store.hpp"
#include "cepro/orchestration.hpp"

namespace cepro::knowledge {

struct WebResult {
  std::string title;
  std::string url;
  std::string snippet;
};

class WebSearch {
 public:
  virtual ~WebSearch() = default;
  virtual std::vector<WebResult> search(const std::string& query) = 0;
};

// Canned fixture stub keyed by exact query string; unknown queries return
// empty result lists.
class CannedWebSearch : public WebSearch {
 public:
  CannedWebSearch() = default;
  static CannedWebSearch from_file(const std::string& path);
  void add(const std::string& query, std::vector<WebResult> results);
  std::vector<WebResult> search(const std::string& query) override;

 private:
  std::map<std::string, std::vector<WebResult>> fixtures_;
};

// The cohort's in-process stores plus the embedding provider feeding them.
struct Stores {
  ChunkStore chunks;
  KnowledgeGraph kg;
  std::shared_ptr<EmbeddingProvider> embedder = std::make_shared<HashingEmbedder>();

  void save(const std::string& dir) const;
  static Stores load(const std::string& dir);
};

struct AblationFlags {
  bool web = true;
  bool kb = true;
  bool kg = true;

  int enabled_count() const { return (web ? 1 : 0) + (kb ? 1 : 0) + (kg ? 1 : 0); }
};

struct Citation {
  std::string stream;  // web | kb | kg
  std::string ref;     // web: 1-based index; kb: chunk id; kg: entity id
};

struct Report {
  std::string text;
  std::vector<Citation> citations;
  std::vector<std::string> conflicts;
  std::vector<std::string> notes;  // ablation and stream-error notes
};

struct RetrievalBundle {
  std::vector<WebResult> web;
  std::vector<ScoredChunk> kb;
  KnowledgeGraph kg;
  std::map<std::string, std::string> query_forms;  // q_web / q_kb / q_kg as used
};

struct AugmentConfig {
  AblationFlags ablation;
  int kb_k = 8;
  int kg_depth = 2;
  // Minimum name similarity for matching extracted mentions into the KG.
  double kg_match_threshold = 0.6;
};

struct AugmentResult {
  Report report;
  RetrievalBundle bundle;
  orch::Transcript transcript;
};

AugmentResult knowledge_augment(const std::string& query, Stores& stores, WebSearch& web,
                                orch::LlmClient& client, const AugmentConfig& cfg);

struct ExtractionResult {
  KnowledgeGraph local;
  int dropped_triples = 0;
  bool flagged = false;  // unparseable after reprompt
};

// Prompts the extraction agent with the five-layer schema and parses its
// fenced @@entities/@@triples output. Entity ids are namespaced by chunk id.
ExtractionResult extract_triples(const Chunk& chunk, orch::LlmClient& client,
                                 orch::Transcript& transcript);

struct UpdateResult {
  int chunk_count = 0;
  int entities_added = 0;
  int triples_added = 0;
  MergeStats merge_stats;
  std::vector<std::string> flags;
  orch::Transcript transcript;
};

// The update workflow: chunk -> (embed + extract) per chunk -> aggregate ->
// resolve/apply merges to fixpoint. Per-chunk failures are flagged, never
// abort the document.
UpdateResult knowledge_update(const std::string& doc_id, const std::string& document,
                              Stores& stores, orch::LlmClient& client,
                              const MergeThresholds& thresholds, bool use_merge_agent,
                              const ChunkConfig& chunk_cfg = {});

// Asks the merge agent to adjudicate a ReviewMerge pair; parses YES/NO plus
// rationale. Unparseable replies count as not merged, flagged.
Adjudication review_merge(const MergeDecision& pair, const std::vector<std::string>& context_chunks,
                          const KnowledgeGraph& kg, orch::LlmClient& client,
                          orch::Transcript& transcript);

}  // namespace cepro::knowledge
