#pragma once

// Ingestion pipeline and on-disk index snapshots.
//
// Index directory layout:
//   snapshot.json     format version, schema (dimensions + categories), corpus manifest
//   taxonomy.jsonl    the taxonomy records the index was built from
//   descriptors.tsv   labeling table, checked against a rebuild on load
//   facts.jsonl       {"doc_id","assignments","rank","flagged"} per document

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semcube/cube.hpp"
#include "semcube/facts.hpp"
#include "semcube/iexml.hpp"
#include "semcube/schema.hpp"
#include "semcube/taxonomy.hpp"

namespace semcube::engine {

inline constexpr int kSnapshotVersion = 1;

struct EngineConfig {
  std::filesystem::path taxonomy;
  std::filesystem::path corpus;    // .jsonl file or directory of IeXML files
  std::filesystem::path manifest;  // doc_id -> object_type for directory corpora; optional
  std::filesystem::path index;
  schema::GroupMap group_map;
  double alpha = facts::kDefaultAlpha;
  cube::Measure measure = cube::Measure::interest_factor;
  double delta = 1.0;
  cube::Contingency contingency = cube::Contingency::standard;
  cube::Scorer scorer = cube::Scorer::hits;
  int port = 8080;
  std::map<std::string, std::string> links;  // object_type -> URL template with {doc_id}
  std::chrono::seconds map_ttl{30 * 60};
};

// Relative paths resolve against `base_dir`. Throws Error(invalid_input).
EngineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
EngineConfig load_config(const std::filesystem::path& path);

// Corpus input: line-delimited {"doc_id","object_type","iexml"} objects, or a
// directory of *.xml files (doc_id = file stem) whose object types come from
// the manifest ({"<doc_id>": "<object_type>", ...}; missing entries get "document").
std::vector<iexml::AnnotatedDocument> read_corpus(const std::filesystem::path& corpus,
                                                  const std::filesystem::path& manifest = {});
std::vector<iexml::AnnotatedDocument> parse_corpus_jsonl(std::istream& in);

struct Snapshot {
  std::shared_ptr<const taxonomy::Ontology> ontology;
  std::shared_ptr<const std::vector<schema::Dimension>> dimensions;
  std::shared_ptr<const cube::CorpusIndex> index;

  std::vector<std::string> object_types() const;
};

struct IngestSummary {
  std::size_t documents = 0;
  std::size_t concepts = 0;
  std::size_t dropped_cuis = 0;
  std::vector<std::string> flagged;
};

// In-memory pipeline: schema from the corpus signature, facts per document
// (in parallel), then the corpus index.
Snapshot build_snapshot(taxonomy::Ontology ontology, const std::vector<iexml::AnnotatedDocument>& documents,
                        const schema::GroupMap& groups, double alpha = facts::kDefaultAlpha,
                        IngestSummary* summary = nullptr);

// Reads inputs, builds, and persists to config.index. The directory is
// replaced only after the new snapshot is fully written. Holds an exclusive
// lock on "<index>.lock" while running.
IngestSummary ingest(const EngineConfig& config);

void write_snapshot(const Snapshot& snapshot, const std::filesystem::path& dir);
// Throws Error(invalid_input) on version mismatch or an inconsistent snapshot.
Snapshot load_snapshot(const std::filesystem::path& dir);

nlohmann::json fact_to_json(const facts::DocumentFact& fact);
facts::DocumentFact fact_from_json(const nlohmann::json& j);

}  // namespace semcube::engine
