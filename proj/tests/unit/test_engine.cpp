#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "semcube/engine.hpp"
#include "semcube/error.hpp"
#include "support/oracles.hpp"

using namespace semcube;
using namespace semcube::engine;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("semcube-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EngineConfig tof_config(const fs::path& index) {
  auto c = load_config(testing::fixtures_dir() + "/tof/config.json");
  c.index = index;
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  auto c = parse_config(json{{"taxonomy", "t.jsonl"}, {"corpus", "/abs/c.jsonl"}, {"measure", "f1"}, {"contingency", "paper-literal"}},
                        "/base");
  CHECK(c.taxonomy == fs::path("/base/t.jsonl"));
  CHECK(c.corpus == fs::path("/abs/c.jsonl"));
  CHECK(c.alpha == 0.9);
  CHECK(c.delta == 1.0);
  CHECK(c.measure == cube::Measure::f1);
  CHECK(c.contingency == cube::Contingency::paper_literal);
  CHECK(c.map_ttl == std::chrono::minutes(30));
  CHECK_THROWS_AS(parse_config(json{{"alpha", 1.0}}), Error);
  CHECK_THROWS_AS(parse_config(json{{"alpha", -0.1}}), Error);
  CHECK_THROWS_AS(parse_config(json{{"measure", "lift"}}), Error);
  CHECK_THROWS_AS(parse_config(json{{"port", "x"}}), Error);
  CHECK_THROWS_AS(parse_config(json::array()), Error);
}

TEST_CASE("corpus readers") {
  std::istringstream in(R"({"doc_id":"a","object_type":"patient","iexml":"<s><e id=\"S:X:T\">x</e></s>"})"
                        "\n\n"
                        R"({"doc_id":"b","iexml":""})"
                        "\n");
  auto docs = parse_corpus_jsonl(in);
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].object_type == "patient");
  CHECK(docs[1].object_type == "document");

  std::istringstream bad(R"({"doc_id":"a"})");
  CHECK_THROWS_AS(parse_corpus_jsonl(bad), Error);

  TempDir dir;
  std::ofstream(dir.path / "d2.xml") << R"(<s><e id="S:X:T">x</e></s>)";
  std::ofstream(dir.path / "d1.xml") << R"(<s><e id="S:Y:T">y</e></s>)";
  std::ofstream(dir.path / "notes.txt") << "ignored";
  std::ofstream(dir.path / "m.json") << R"({"d2":"protein"})";
  auto fromdir = read_corpus(dir.path, dir.path / "m.json");
  REQUIRE(fromdir.size() == 2);
  CHECK(fromdir[0].doc_id == "d1");
  CHECK(fromdir[0].object_type == "document");
  CHECK(fromdir[1].object_type == "protein");
}

TEST_CASE("ingest writes a loadable, deterministic snapshot") {
  TempDir dir;
  auto config = tof_config(dir.path / "index");
  auto summary = ingest(config);
  CHECK(summary.documents == 12);
  CHECK(summary.flagged.empty());
  CHECK(fs::exists(dir.path / "index" / "snapshot.json"));
  CHECK_FALSE(fs::exists(dir.path / "index.staging"));

  auto first = slurp(dir.path / "index" / "facts.jsonl") + slurp(dir.path / "index" / "snapshot.json");
  ingest(config);
  auto second = slurp(dir.path / "index" / "facts.jsonl") + slurp(dir.path / "index" / "snapshot.json");
  CHECK(first == second);

  auto loaded = load_snapshot(dir.path / "index");
  auto built = testing::load_fixture("tof");
  CHECK(loaded.index->facts() == built.index->facts());
  CHECK(loaded.index->documents() == built.index->documents());
  REQUIRE(loaded.dimensions->size() == built.dimensions->size());
  for (std::size_t k = 0; k < loaded.dimensions->size(); ++k) {
    CHECK((*loaded.dimensions)[k].categories == (*built.dimensions)[k].categories);
  }
}

TEST_CASE("snapshot version and consistency checks") {
  TempDir dir;
  auto config = tof_config(dir.path / "index");
  ingest(config);
  auto meta_path = dir.path / "index" / "snapshot.json";
  auto meta = json::parse(slurp(meta_path));
  meta["format_version"] = kSnapshotVersion + 1;
  std::ofstream(meta_path) << meta.dump();
  try {
    load_snapshot(dir.path / "index");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_input);
    CHECK(std::string(e.message()).find("version") != std::string::npos);
  }

  ingest(config);
  std::ofstream(dir.path / "index" / "descriptors.tsv", std::ios::app) << "junk\n";
  CHECK_THROWS_AS(load_snapshot(dir.path / "index"), Error);
}

TEST_CASE("a malformed document aborts ingest without touching the index") {
  TempDir dir;
  auto config = tof_config(dir.path / "index");
  ingest(config);
  const auto before = slurp(dir.path / "index" / "facts.jsonl");

  auto corpus = dir.path / "corpus.jsonl";
  fs::copy_file(config.corpus, corpus);
  std::ofstream(corpus, std::ios::app) << R"({"doc_id":"broken7","iexml":"<e id=\"bad\">x</e>"})" << "\n";
  config.corpus = corpus;
  try {
    ingest(config);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("broken7") != std::string::npos);
  }
  CHECK(slurp(dir.path / "index" / "facts.jsonl") == before);
}

TEST_CASE("duplicate doc ids are rejected") {
  auto docs = std::vector<iexml::AnnotatedDocument>(2);
  docs[0].doc_id = docs[1].doc_id = "same";
  CHECK_THROWS_AS(build_snapshot(taxonomy::Ontology::build({}), docs, {}), Error);
}

TEST_CASE("fact json round trip") {
  facts::DocumentFact f{"d", {{"A", "x"}, {"B", std::nullopt}}, {{"x", 0.25}, {"y", 0.75}}, false};
  CHECK(fact_from_json(fact_to_json(f)) == f);
}
