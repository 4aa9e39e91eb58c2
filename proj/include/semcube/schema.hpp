#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "semcube/taxonomy.hpp"

namespace semcube::schema {

struct Category {
  std::string dimension_id;
  std::size_t level = 0;
  std::vector<std::string> concepts;  // ascending topo_order within the fragment

  friend bool operator==(const Category&, const Category&) = default;
};

// A semantic space over the corpus-relevant concepts of some semantic groups.
// `fragment` is the ontology fragment carved for the dimension; all taxonomic
// questions about members are answered against it.
struct Dimension {
  std::string id;
  std::string name;
  std::set<std::string> member_concepts;
  taxonomy::Ontology fragment;
  std::vector<Category> categories;

  bool has(const std::string& concept_id) const { return member_concepts.count(concept_id) != 0; }
};

// group name -> dimension name. Several groups may feed one dimension.
using GroupMap = std::map<std::string, std::string>;

// One dimension per distinct dimension name in `groups`, ordered by name.
// Throws Error(invalid_input) when a fragment pulls in a concept whose group
// belongs to another dimension, or when two fragments share a concept.
std::vector<Dimension> build_dimensions(const taxonomy::Ontology& ontology,
                                        const std::set<std::string>& corpus_signature,
                                        const GroupMap& groups);

// Depth strata of the fragment's spanning tree; a concept comparable to one
// already accepted in its stratum is pushed down one level. Candidates are
// visited in ascending topo_order.
std::vector<Category> build_categories(const Dimension& dimension);

// build_dimensions followed by build_categories on each.
std::vector<Dimension> build_schema(const taxonomy::Ontology& ontology,
                                    const std::set<std::string>& corpus_signature,
                                    const GroupMap& groups);

struct Violation {
  enum class Kind { antichain, common_ancestor, partition };
  Kind kind;
  std::string dimension;
  std::vector<std::string> concepts;
  std::string message;
};

// Brute-force re-check of the category and partition constraints.
std::vector<Violation> validate_schema(std::span<const Dimension> dimensions);

}  // namespace semcube::schema
