#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "semcube/facts.hpp"
#include "semcube/schema.hpp"
#include "semcube/taxonomy.hpp"

namespace semcube::cube {

enum class Measure { interest_factor, log_likelihood_ratio, mutual_information, f1 };
enum class Contingency { standard, paper_literal };
enum class Aggregator { sum, avg, max };
enum class Scorer { hits, score_sum };

std::string_view to_string(Measure m);
std::string_view to_string(Contingency c);
std::string_view to_string(Aggregator a);
std::string_view to_string(Scorer s);
Measure parse_measure(std::string_view s);
Contingency parse_contingency(std::string_view s);
Aggregator parse_aggregator(std::string_view s);
Scorer parse_scorer(std::string_view s);

struct DocumentInfo {
  std::string doc_id;
  std::string object_type;

  friend bool operator==(const DocumentInfo&, const DocumentInfo&) = default;
};

// Documents whose fact in a dimension is <= some concept, as a sorted list
// (for drill-through) and as a bitset over document positions (for counting).
struct Postings {
  std::vector<std::uint32_t> docs;
  std::vector<std::uint64_t> bits;

  std::size_t size() const noexcept { return docs.size(); }
};

// Immutable after build; safe for concurrent reads.
class CorpusIndex {
 public:
  CorpusIndex() = default;

  // `documents[k]` describes `facts[k]`. Throws Error(unknown_id) when a fact
  // names a dimension or concept the schema does not have.
  static CorpusIndex build(std::vector<DocumentInfo> documents, std::vector<facts::DocumentFact> facts,
                           std::shared_ptr<const taxonomy::Ontology> ontology,
                           std::shared_ptr<const std::vector<schema::Dimension>> dimensions);

  std::size_t size() const noexcept { return facts_.size(); }
  const std::vector<facts::DocumentFact>& facts() const noexcept { return facts_; }
  const std::vector<DocumentInfo>& documents() const noexcept { return documents_; }
  const taxonomy::Ontology& ontology() const noexcept { return *ontology_; }
  std::span<const schema::Dimension> dimensions() const noexcept { return *dimensions_; }

  const schema::Dimension& dimension(std::string_view id) const;  // throws unknown_id
  // The dimension holding the concept, or nullptr.
  const schema::Dimension* dimension_of(std::string_view concept_id) const;

  // Empty postings for a concept outside the dimension.
  const Postings& postings(std::string_view dimension, std::string_view concept_id) const;

  // Documents assigned exactly this concept, and the sum of their R^d[c].
  std::size_t point_hits(std::string_view dimension, std::string_view concept_id) const;
  double point_score(std::string_view dimension, std::string_view concept_id) const;

  std::size_t bitset_words() const noexcept { return (facts_.size() + 63) / 64; }

 private:
  struct PerConcept {
    Postings postings;
    std::size_t point_hits = 0;
    double point_score = 0.0;
  };
  const PerConcept* lookup(std::string_view dimension, std::string_view concept_id) const;

  std::vector<DocumentInfo> documents_;
  std::vector<facts::DocumentFact> facts_;
  std::shared_ptr<const taxonomy::Ontology> ontology_;
  std::shared_ptr<const std::vector<schema::Dimension>> dimensions_;
  std::map<std::string, std::unordered_map<std::string, PerConcept>, std::less<>> per_dimension_;
  std::unordered_map<std::string, std::size_t> dimension_of_;
};

// Builds the index; equivalent to CorpusIndex::build.
CorpusIndex index_corpus(std::vector<DocumentInfo> documents, std::vector<facts::DocumentFact> facts,
                         std::shared_ptr<const taxonomy::Ontology> ontology,
                         std::shared_ptr<const std::vector<schema::Dimension>> dimensions);

// Descendant-closed count of documents: |{d : fact(d)[D] <= c}|.
std::size_t hits(const CorpusIndex& index, std::string_view concept_id, std::string_view dimension);

// Sum of R^d[fact(d)[D]] over documents with fact(d)[D] <= c.
double score_sum(const CorpusIndex& index, std::string_view concept_id, std::string_view dimension);

// Aggregator over descendants(D, c) of the per-descendant score (documents
// assigned exactly that descendant). Each document is assigned one concept
// per dimension, so sum never counts a document twice, even in a DAG.
// Throws Error(unknown_id) when c is not in D.
double concept_relevance(const CorpusIndex& index, std::string_view concept_id, std::string_view dimension,
                         Aggregator aggregator = Aggregator::sum, Scorer scorer = Scorer::hits);

struct ContingencyCell {
  std::string c_i;
  std::string c_j;
  std::uint64_t n_ij = 0;
  std::uint64_t n_i = 0;
  std::uint64_t n_j = 0;

  friend bool operator==(const ContingencyCell&, const ContingencyCell&) = default;
};

struct Cube {
  std::string dimension_i;
  std::string dimension_j;
  std::uint64_t n_col = 0;
  std::vector<ContingencyCell> cells;  // only n_ij > 0, in (c_i input order, c_j input order)
  std::map<std::string, std::uint64_t> marginal_i;
  std::map<std::string, std::uint64_t> marginal_j;

  // Any (c_i, c_j) pair of the cube, including ones with n_ij = 0.
  ContingencyCell cell(const std::string& c_i, const std::string& c_j) const;
};

// Counts over arbitrary concept lists of two distinct dimensions.
Cube build_cube(const CorpusIndex& index, std::string_view dimension_i, std::span<const std::string> concepts_i,
                std::string_view dimension_j, std::span<const std::string> concepts_j);
Cube build_cube(const CorpusIndex& index, const schema::Category& level_i, const schema::Category& level_j);

// Throws Error(invalid_input) on a zero marginal. G^2 is NaN when the
// paper-literal table has a negative cell.
double measure_score(const ContingencyCell& cell, std::uint64_t n_col, Measure measure,
                     Contingency contingency = Contingency::standard);

struct Bridge {
  std::string c_i;
  std::string c_j;
  Measure measure = Measure::interest_factor;
  double score = 0.0;

  friend bool operator==(const Bridge&, const Bridge&) = default;
};

// Cells with score strictly above delta, by descending score then ids.
std::vector<Bridge> bridges(const Cube& cube, Measure measure, double delta,
                            Contingency contingency = Contingency::standard);

void sort_bridges(std::vector<Bridge>& items);

// Tab-separated rows: c_i, c_j, n_ij, n_i, n_j, score.
void write_cube_tsv(std::ostream& out, const Cube& cube, Measure measure, Contingency contingency);

// Lazily computed cubes per category pair. Concurrent readers; a miss may be
// computed by several threads at once, the first insert wins.
class CubeCache {
 public:
  explicit CubeCache(const CorpusIndex& index) : index_(&index) {}

  std::shared_ptr<const Cube> get(const schema::Category& level_i, const schema::Category& level_j);
  std::vector<Bridge> bridges(const schema::Category& level_i, const schema::Category& level_j, Measure measure,
                              double delta, Contingency contingency = Contingency::standard);
  std::size_t size() const;

 private:
  using Key = std::tuple<std::string, std::size_t, std::string, std::size_t>;
  const CorpusIndex* index_;
  mutable std::shared_mutex mutex_;
  std::map<Key, std::shared_ptr<const Cube>> cubes_;
};

}  // namespace semcube::cube
