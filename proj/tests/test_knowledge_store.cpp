#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "cepro/error.hpp"
#include "cepro/knowledge_store.hpp"
#include "cepro/rng.hpp"

using namespace cepro;
using namespace cepro::knowledge;

namespace fs = std::filesystem;

TEST_CASE("hashing embedder") {
  HashingEmbedder e;
  CHECK(e.dimension() == 64);

  auto a = e.embed("reactor");
  auto b = e.embed("reactor");
  CHECK(a.values == b.values);  // identical text, identical vector

  CHECK(e.embed("").zero());
  CHECK(cosine_similarity(e.embed("x"), e.embed("x")) == doctest::Approx(1.0));
  CHECK(cosine_similarity(e.embed("Pt catalyst"), e.embed("pt  CATALYST")) ==
        doctest::Approx(1.0));
}

TEST_CASE("cosine_similarity") {
  EmbeddingVector v{{1.0f, 0.0f}};
  EmbeddingVector w{{0.0f, 1.0f}};
  EmbeddingVector neg{{-1.0f, 0.0f}};
  CHECK(cosine_similarity(v, v) == doctest::Approx(1.0));
  CHECK(cosine_similarity(v, w) == doctest::Approx(0.0));
  CHECK(cosine_similarity(v, neg) == doctest::Approx(-1.0));

  EmbeddingVector three{{1.0f, 0.0f, 0.0f}};
  CHECK_THROWS_AS(cosine_similarity(v, three), ConfigError);
  EmbeddingVector zero{{0.0f, 0.0f}};
  CHECK_THROWS_AS(cosine_similarity(v, zero), ConfigError);
}

TEST_CASE("chunk_document") {
  SUBCASE("short text is one chunk") {
    std::string text(100, 'x');
    auto chunks = chunk_document("doc", text, {2000, 200});
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].start == 0);
    CHECK(chunks[0].end == 100);
    CHECK(chunks[0].text == text);
  }

  SUBCASE("5000 chars, target 2000, overlap 200") {
    std::string text(5000, 'a');
    auto chunks = chunk_document("doc", text, {2000, 200});
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[1].start == chunks[0].end - 200);
    CHECK(chunks[2].start == chunks[1].end - 200);
    CHECK(chunks[2].end == 5000);
  }

  SUBCASE("empty text") { CHECK(chunk_document("doc", "", {2000, 200}).empty()); }

  SUBCASE("paragraph snapping") {
    // break placed 100 chars before the 400-char budget: within target/4
    std::string text = std::string(300, 'a') + "\n\n" + std::string(600, 'b');
    auto chunks = chunk_document("doc", text, {400, 50});
    REQUIRE(chunks.size() >= 2);
    CHECK(chunks[0].end == 302);  // snapped to just after the break
  }

  SUBCASE("de-overlapped concatenation reproduces the document") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      std::string text;
      std::size_t len = rng.index(6000);
      for (std::size_t i = 0; i < len; ++i)
        text.push_back(rng.uniform() < 0.02 ? '\n' : static_cast<char>('a' + rng.index(26)));
      ChunkConfig cfg{600, 80};
      auto chunks = chunk_document("doc", text, cfg);
      std::string rebuilt;
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        const auto& c = chunks[i];
        CHECK(c.text == text.substr(c.start, c.end - c.start));
        if (i == 0) {
          rebuilt = c.text;
        } else {
          std::size_t overlap = chunks[i - 1].end - c.start;
          rebuilt += c.text.substr(overlap);
        }
      }
      CHECK(rebuilt == text);
    }
  }

  SUBCASE("bad config") {
    CHECK_THROWS_AS(chunk_document("doc", "abc", {100, 100}), ConfigError);
    CHECK_THROWS_AS(chunk_document("doc", "abc", {0, 0}), ConfigError);
  }
}

namespace {

ChunkStore store_with(const std::vector<std::pair<std::string, std::string>>& texts,
                      const EmbeddingProvider& provider) {
  ChunkStore store;
  for (const auto& [id, text] : texts) {
    Chunk c;
    c.id = id;
    c.doc_id = "doc";
    c.text = text;
    c.end = text.size();
    c.embedding = provider.embed(text);
    store.upsert(std::move(c));
  }
  return store;
}

}  // namespace

TEST_CASE("vector_query") {
  HashingEmbedder e;
  auto store = store_with({{"doc:00000", "isoprene extraction from C5 fraction"},
                           {"doc:00001", "catalyst deactivation by coking"},
                           {"doc:00002", "solvent recovery column design"}},
                          e);

  SUBCASE("exact text ranks first with similarity 1") {
    auto hits = vector_query(store, e, "catalyst deactivation by coking", 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].chunk.id == "doc:00001");
    CHECK(hits[0].score == doctest::Approx(1.0));
  }

  SUBCASE("k larger than store returns everything") {
    CHECK(vector_query(store, e, "catalyst", 10).size() == 3);
  }

  SUBCASE("equal scores break ties by id ascending") {
    auto dup = store_with({{"doc:00005", "reactor"}, {"doc:00001", "reactor"}}, e);
    auto hits = vector_query(dup, e, "reactor", 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].chunk.id == "doc:00001");
  }

  SUBCASE("empty store is empty, not an error") {
    CHECK(vector_query(ChunkStore{}, e, "anything", 3).empty());
  }

  SUBCASE("determinism: identical ranked lists") {
    auto a = vector_query(store, e, "recovery", 3);
    auto b = vector_query(store, e, "recovery", 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].chunk.id == b[i].chunk.id);
      CHECK(a[i].score == b[i].score);
    }
  }
}

namespace {

KnowledgeGraph chain_kg() {
  KnowledgeGraph kg;
  for (const char* id : {"e1", "e2", "e3"}) {
    EntityRecord e;
    e.id = id;
    e.name = id;
    kg.entities[id] = e;
  }
  kg.triples.push_back({"e1", "feeds", "e2", "Process", {"c1"}});
  kg.triples.push_back({"e2", "feeds", "e3", "Process", {"c1"}});
  return kg;
}

}  // namespace

TEST_CASE("graph_query") {
  auto kg = chain_kg();

  SUBCASE("depth 0 returns seeds only") {
    auto sub = graph_query(kg, {"e1"}, 0);
    CHECK(sub.kg.entities.size() == 1);
    CHECK(sub.kg.triples.empty());
  }

  SUBCASE("depth 1 walks one hop with the induced triple") {
    auto sub = graph_query(kg, {"e1"}, 1);
    CHECK(sub.kg.entities.size() == 2);
    REQUIRE(sub.kg.triples.size() == 1);
    CHECK(sub.kg.triples[0].subject == "e1");
  }

  SUBCASE("depth beyond diameter returns the whole component") {
    auto sub = graph_query(kg, {"e1"}, 10);
    CHECK(sub.kg.entities.size() == 3);
    CHECK(sub.kg.triples.size() == 2);
  }

  SUBCASE("unknown seed is skipped with a warning") {
    auto sub = graph_query(kg, {"nope", "e1"}, 1);
    CHECK(sub.kg.entities.size() == 2);
    REQUIRE(sub.warnings.size() == 1);
    CHECK(sub.warnings[0].find("nope") != std::string::npos);
  }
}

TEST_CASE("add_subgraph") {
  auto kg = chain_kg();

  SUBCASE("union with itself changes nothing") {
    auto merged = add_subgraph(kg, kg);
    CHECK(merged.entities.size() == kg.entities.size());
    CHECK(merged.triples.size() == kg.triples.size());
    CHECK(merged.triples[0].chunks == kg.triples[0].chunks);  // provenance not duplicated
  }

  SUBCASE("disjoint graphs add up") {
    KnowledgeGraph other;
    EntityRecord e;
    e.id = "x1";
    e.name = "x1";
    other.entities["x1"] = e;
    e.id = "x2";
    e.name = "x2";
    other.entities["x2"] = e;
    other.triples.push_back({"x1", "cools", "x2", "Process", {"c9"}});
    auto merged = add_subgraph(kg, other);
    CHECK(merged.entities.size() == 5);
    CHECK(merged.triples.size() == 3);
  }

  SUBCASE("same triple with different provenance keeps one triple, two chunks") {
    KnowledgeGraph other = chain_kg();
    other.triples.resize(1);
    other.triples[0].chunks = {"c2"};
    auto merged = add_subgraph(kg, other);
    CHECK(merged.triples.size() == 2);
    CHECK(merged.triples[0].chunks == std::vector<std::string>{"c1", "c2"});
  }
}

TEST_CASE("tri-state thresholds") {
  MergeThresholds t;  // defaults 0.95 / 0.85

  CHECK(t.classify(0.97) == Verdict::AutoMerge);
  CHECK(t.classify(0.90) == Verdict::ReviewMerge);
  CHECK(t.classify(0.50) == Verdict::Distinct);
  // boundary: s = t_auto is still review, s = t_review is distinct
  CHECK(t.classify(0.95) == Verdict::ReviewMerge);
  CHECK(t.classify(0.85) == Verdict::Distinct);

  CHECK_THROWS_AS((MergeThresholds{0.8, 0.9}.validate()), ConfigError);
  CHECK_THROWS_AS((MergeThresholds{1.2, 0.1}.validate()), ConfigError);

  SUBCASE("every similarity gets exactly one verdict, step function") {
    Rng rng(99);
    for (int i = 0; i < 2000; ++i) {
      double s = rng.uniform();
      Verdict v = t.classify(s);
      if (s > t.t_auto) CHECK(v == Verdict::AutoMerge);
      else if (s > t.t_review) CHECK(v == Verdict::ReviewMerge);
      else CHECK(v == Verdict::Distinct);
    }
  }
}

namespace {

KnowledgeGraph merge_fixture() {
  KnowledgeGraph kg;
  auto add = [&kg](const std::string& id, const std::string& name) {
    EntityRecord e;
    e.id = id;
    e.name = name;
    kg.entities[id] = e;
  };
  add("a1", "Pt catalyst");
  add("a2", "Pt Catalyst");               // sim 1.0 with a1 -> AutoMerge
  add("b1", "extractive distillation");
  add("b2", "extractive distilation");    // sim ~0.939 -> ReviewMerge
  add("c1", "formaldehyde");              // distinct from everything
  kg.triples.push_back({"a2", "catalyzes", "c1", "Reaction Mechanism", {"c1"}});
  return kg;
}

}  // namespace

TEST_CASE("resolve_entities verdicts from stub similarities") {
  HashingEmbedder e;
  auto kg = merge_fixture();
  auto resolved = resolve_entities(kg, MergeThresholds{}, e);

  bool auto_found = false, review_found = false;
  for (const auto& d : resolved.decisions) {
    if (d.a == "a1" && d.b == "a2") {
      CHECK(d.verdict == Verdict::AutoMerge);
      auto_found = true;
    }
    if (d.a == "b1" && d.b == "b2") {
      CHECK(d.verdict == Verdict::ReviewMerge);
      review_found = true;
    }
    CHECK(d.a < d.b);  // deterministic pair order
  }
  CHECK(auto_found);
  CHECK(review_found);
  CHECK(resolved.distinct_pairs > 0);
}

TEST_CASE("apply_merges") {
  HashingEmbedder e;

  SUBCASE("no decisions leaves the graph unchanged") {
    auto kg = merge_fixture();
    auto merged = apply_merges(kg, {});
    CHECK(merged.entities.size() == kg.entities.size());
    CHECK(merged.triples.size() == kg.triples.size());
  }

  SUBCASE("automerge rewrites triples and tombstones the loser") {
    auto kg = merge_fixture();
    MergeDecision d{"a1", "a2", 1.0, Verdict::AutoMerge, std::nullopt};
    auto merged = apply_merges(kg, {d});
    CHECK(merged.entities.at("a2").canonical_of == "a1");
    CHECK(merged.entities.at("a1").is_root());
    // the a2 triple now hangs off the root
    bool rewritten = false;
    for (const auto& t : merged.triples)
      if (t.subject == "a1" && t.object == "c1") rewritten = true;
    CHECK(rewritten);
    // loser name becomes an alias, list sorted
    const auto& aliases = merged.entities.at("a1").aliases;
    CHECK(std::find(aliases.begin(), aliases.end(), "Pt Catalyst") != aliases.end());
    CHECK(std::is_sorted(aliases.begin(), aliases.end()));
  }

  SUBCASE("union-find chain collapses to one root") {
    KnowledgeGraph kg;
    for (const char* id : {"a", "b", "c"}) {
      EntityRecord rec;
      rec.id = id;
      rec.name = id;
      kg.entities[id] = rec;
    }
    std::vector<MergeDecision> chain{{"a", "b", 1.0, Verdict::AutoMerge, std::nullopt},
                                     {"b", "c", 1.0, Verdict::AutoMerge, std::nullopt}};
    auto merged = apply_merges(kg, chain);
    CHECK(merged.entities.at("a").is_root());
    CHECK(merged.entities.at("b").canonical_of == "a");
    CHECK(merged.entities.at("c").canonical_of == "a");
  }

  SUBCASE("pending review without adjudicator stays unmerged with a warning") {
    auto kg = merge_fixture();
    MergeDecision d{"b1", "b2", 0.94, Verdict::ReviewMerge, std::nullopt};
    MergeStats stats;
    std::vector<std::string> warnings;
    auto merged = apply_merges(kg, {d}, nullptr, &stats, &warnings);
    CHECK(merged.entities.at("b2").is_root());
    CHECK(stats.review_pending == 1);
    CHECK(warnings.size() == 1);
  }

  SUBCASE("adjudicated review merges") {
    auto kg = merge_fixture();
    MergeDecision d{"b1", "b2", 0.94, Verdict::ReviewMerge, std::nullopt};
    Adjudicator yes = [](const MergeDecision&) { return Adjudication{true, "synonyms", false}; };
    MergeStats stats;
    auto merged = apply_merges(kg, {d}, &yes, &stats, nullptr);
    CHECK(merged.entities.at("b2").canonical_of == "b1");
    CHECK(stats.review_merged == 1);
  }

  SUBCASE("resolve+apply is idempotent and never grows the triple list") {
    Rng rng(31);
    const char* names[] = {"Pt catalyst",   "Pt Catalyst", "pt catalyst",
                           "Gas separator", "gas separator", "formaldehyde",
                           "methanal",      "solvent recovery", "isoprene"};
    for (int trial = 0; trial < 40; ++trial) {
      KnowledgeGraph kg;
      std::size_t n = 2 + rng.index(7);
      for (std::size_t i = 0; i < n; ++i) {
        EntityRecord rec;
        rec.id = "e" + std::to_string(i);
        rec.name = names[rng.index(9)];
        kg.entities[rec.id] = rec;
      }
      for (std::size_t i = 0, m = rng.index(6); i < m; ++i) {
        kg.triples.push_back({"e" + std::to_string(rng.index(n)), "rel",
                              "e" + std::to_string(rng.index(n)), "Process",
                              {"c" + std::to_string(i)}});
      }

      const std::size_t triples_before = kg.triples.size();
      auto once = apply_merges(kg, resolve_entities(kg, MergeThresholds{}, e).decisions);
      CHECK(once.triples.size() <= triples_before);

      auto resolved_again = resolve_entities(once, MergeThresholds{}, e);
      for (const auto& d : resolved_again.decisions) CHECK(d.verdict != Verdict::AutoMerge);

      auto twice = apply_merges(once, resolved_again.decisions);
      CHECK(once.entities.size() == twice.entities.size());
      CHECK(once.triples.size() == twice.triples.size());
      for (const auto& [id, rec] : once.entities) {
        CHECK(twice.entities.at(id).canonical_of == rec.canonical_of);
        CHECK(twice.entities.at(id).aliases == rec.aliases);
      }
    }
  }
}

TEST_CASE("store persistence round-trip") {
  HashingEmbedder e;
  const fs::path dir = fs::temp_directory_path() / "cepro_store_test";
  fs::remove_all(dir);

  auto chunks = store_with({{"d:00000", "alpha text"}, {"d:00001", "beta text"}}, e);
  chunks.save(dir.string());
  auto loaded = ChunkStore::load(dir.string());
  REQUIRE(loaded.chunks.size() == 2);
  CHECK(loaded.chunks[0].id == "d:00000");
  CHECK(loaded.chunks[0].text == "alpha text");
  REQUIRE(loaded.chunks[0].embedding.has_value());
  CHECK(loaded.chunks[0].embedding->values == chunks.chunks[0].embedding->values);

  auto kg = merge_fixture();
  kg.entities["a2"].canonical_of = "a1";
  save_kg(kg, dir.string());
  auto kg2 = load_kg(dir.string());
  CHECK(kg2.entities.size() == kg.entities.size());
  CHECK(kg2.entities.at("a2").canonical_of == "a1");
  REQUIRE(kg2.triples.size() == 1);
  CHECK(kg2.triples[0].chunks == kg.triples[0].chunks);

  fs::remove_all(dir);
}
