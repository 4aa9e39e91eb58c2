#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semcube/cube.hpp"

namespace semcube::map {

enum class BallState { normal, expanded_child, query_match };
std::string_view to_string(BallState s);

struct Ball {
  std::string concept_id;
  std::string label;
  double relevance = 0.0;
  BallState state = BallState::normal;
  bool from_expansion = false;

  friend bool operator==(const Ball&, const Ball&) = default;
};

// One drill-down, kept so roll-up can restore the parent where it was.
struct Expansion {
  Ball parent;
  std::size_t position = 0;
  std::vector<std::string> children;

  friend bool operator==(const Expansion&, const Expansion&) = default;
};

struct MapLayer {
  std::string dimension;
  std::optional<std::size_t> category;  // set for category layers
  std::vector<std::string> query;       // set for keyword layers
  std::vector<Ball> balls;
  std::vector<Expansion> expansions;

  std::optional<std::size_t> position_of(std::string_view concept_id) const;
  std::vector<std::string> concepts() const;

  friend bool operator==(const MapLayer&, const MapLayer&) = default;
};

struct MapSettings {
  cube::Measure measure = cube::Measure::interest_factor;
  double delta = 1.0;
  cube::Contingency contingency = cube::Contingency::standard;
  cube::Scorer scorer = cube::Scorer::hits;
  cube::Aggregator aggregator = cube::Aggregator::sum;

  friend bool operator==(const MapSettings&, const MapSettings&) = default;
};

// bridges[k] links layer k (c_i side) with layer k + 1 (c_j side).
struct ConceptMap {
  std::string id;
  std::vector<MapLayer> layers;
  std::vector<std::vector<cube::Bridge>> bridges;
  MapSettings settings;
  std::vector<std::string> query;  // free-text marking over all layers

  friend bool operator==(const ConceptMap&, const ConceptMap&) = default;
};

// {c in D : c <= q and lex(c) matches keywords}. Throws unknown_id if q is not in D.
std::set<std::string> contains(const cube::CorpusIndex& index, std::string_view dimension, std::string_view q,
                               std::span<const std::string> keywords);

// One normal ball per category concept.
MapLayer define_layer(const cube::CorpusIndex& index, std::string_view dimension, std::size_t category,
                      const MapSettings& settings = {});

// Matching concepts with no matching proper descendant, marked query-match.
MapLayer define_layer_by_query(const cube::CorpusIndex& index, std::string_view dimension,
                               std::span<const std::string> keywords, const MapSettings& settings = {});

// Keyword layers for every dimension with at least one match, in dimension order.
std::vector<MapLayer> define_layers_by_query(const cube::CorpusIndex& index, std::span<const std::string> keywords,
                                             const MapSettings& settings = {});

// Assembles a map, applies free-text marking and computes all bridges.
// Throws invalid_operation when adjacent layers share a dimension.
ConceptMap build_map(const cube::CorpusIndex& index, std::string id, std::vector<MapLayer> layers,
                     const MapSettings& settings = {}, std::vector<std::string> query = {});

// Bridges between layers k and k + 1 from scratch.
std::vector<cube::Bridge> compute_bridges(const cube::CorpusIndex& index, const ConceptMap& map, std::size_t k);

// Replaces the ball by its children in the dimension and recomputes the
// affected bridges. A child already covered by another visible ball (itself
// or one of its ancestors) is not added. Throws invalid_operation on a leaf.
void drill_down(const cube::CorpusIndex& index, ConceptMap& map, std::size_t layer, std::string_view concept_id);

// Undoes the expansion that produced `concept_id` (or whose parent it is),
// removing every visible descendant of that parent.
void roll_up(const cube::CorpusIndex& index, ConceptMap& map, std::size_t layer, std::string_view concept_id);

enum class KeepScope { layer, adjacent };

// Keeps only the ball in its layer. With `adjacent`, neighbouring layers are
// also reduced to balls bridged to it.
void keep_only(const cube::CorpusIndex& index, ConceptMap& map, std::size_t layer, std::string_view concept_id,
               KeepScope scope = KeepScope::adjacent);

void remove_concept(const cube::CorpusIndex& index, ConceptMap& map, std::size_t layer, std::string_view concept_id);

struct RankedObject {
  std::string doc_id;
  std::string object_type;
  double relevance = 0.0;

  friend bool operator==(const RankedObject&, const RankedObject&) = default;
};

// Sum of R^d[c'] over annotated c' <= c, for documents whose fact in c's
// dimension lies below c. Descending relevance, ties by doc_id.
double concept_relevance_in(const cube::CorpusIndex& index, std::size_t doc, std::string_view concept_id);
std::vector<RankedObject> drill_through_concept(const cube::CorpusIndex& index, std::string_view concept_id);

// Product of the two concept relevances; documents missing either are dropped.
std::vector<RankedObject> drill_through_bridge(const cube::CorpusIndex& index, std::string_view c_i,
                                               std::string_view c_j);

}  // namespace semcube::map
