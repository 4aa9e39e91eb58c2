#pragma once

// Taxonomy loading and the interval labeling schemes used for every
// taxonomic query in the engine. Descendant queries use the pre-order of a
// spanning tree (scheme L-), ancestor queries the pre-order of a spanning
// tree of the reversed graph (scheme L+). A concept's reachable set is stored
// as a merged list of closed intervals over the respective index space, so
// `a <= b` reduces to a binary search over b's intervals.

#include <cstdint>
#include <iosfwd>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semcube::taxonomy {

struct Concept {
  std::string id;
  std::string preferred;
  std::vector<std::string> lex;
  std::vector<std::string> semtypes;
  std::vector<std::string> parents;
  std::string group;

  friend bool operator==(const Concept&, const Concept&) = default;
};

struct Interval {
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;

  bool contains(std::uint32_t x) const noexcept { return lo <= x && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

using IntervalList = std::vector<Interval>;

// Sorts and merges overlapping or adjacent intervals ([1,2] + [3,4] -> [1,4]).
IntervalList merge_intervals(std::vector<Interval> intervals);

// Membership by binary search over a merged list.
bool covers(const IntervalList& list, std::uint32_t x) noexcept;

struct ConceptDescriptor {
  std::string concept_id;
  std::uint32_t pre_index = 0;
  std::uint32_t anc_index = 0;
  IntervalList desc_intervals;
  IntervalList anc_intervals;
  std::uint32_t topo_order = 0;

  friend bool operator==(const ConceptDescriptor&, const ConceptDescriptor&) = default;
};

// Immutable after construction. Concepts are held sorted by id; the dense
// position in that order is the node handle used by the index-level API.
class Ontology {
 public:
  using Node = std::uint32_t;

  Ontology() = default;

  // Validates ids, parent references and acyclicity, then builds the labeling.
  // Throws Error(invalid_input) on duplicate id, dangling parent or cycle.
  static Ontology build(std::vector<Concept> concepts);

  std::size_t size() const noexcept { return concepts_.size(); }
  bool empty() const noexcept { return concepts_.empty(); }
  bool has_virtual_root() const noexcept { return virtual_root_; }

  bool contains(std::string_view id) const noexcept { return index_of(id).has_value(); }
  std::optional<Node> index_of(std::string_view id) const noexcept;
  Node node(std::string_view id) const;  // throws unknown_id

  std::span<const Concept> concepts() const noexcept { return concepts_; }
  std::span<const ConceptDescriptor> descriptors() const noexcept { return descriptors_; }
  const Concept& concept_at(Node n) const { return concepts_[n]; }
  const Concept& concept_of(std::string_view id) const { return concepts_[node(id)]; }
  const ConceptDescriptor& descriptor(std::string_view id) const { return descriptors_[node(id)]; }
  const ConceptDescriptor& descriptor_at(Node n) const { return descriptors_[n]; }

  // a <= b (reflexive). Interval membership only, no traversal.
  bool is_descendant(std::string_view a, std::string_view b) const;
  bool is_descendant(Node a, Node b) const noexcept {
    return covers(descriptors_[b].desc_intervals, descriptors_[a].pre_index);
  }
  // Same relation answered from the ancestor scheme; used to cross-check L- against L+.
  bool is_ancestor(Node a, Node b) const noexcept {
    return covers(descriptors_[b].anc_intervals, descriptors_[a].anc_index);
  }

  // Both include the concept itself. Results are ordered by pre_index
  // (descendants) or anc_index (ancestors).
  std::vector<std::string> descendants_of(std::string_view id) const;
  std::vector<std::string> ancestors_of(std::string_view id) const;
  std::vector<Node> descendant_nodes(Node n) const;
  std::vector<Node> ancestor_nodes(Node n) const;

  // Direct sub-concepts ordered by (topo_order, id).
  std::vector<std::string> children_of(std::string_view id) const;
  std::span<const Node> child_nodes(Node n) const { return children_[n]; }
  std::span<const Node> parent_nodes(Node n) const { return parents_[n]; }

  // Concepts with no parents, ordered by topo_order.
  std::vector<std::string> roots() const;

  // Depth in the spanning tree; real roots are at depth 0.
  std::uint32_t tree_depth(Node n) const noexcept { return depth_[n]; }

  // Sub-ontology induced on signature plus all ancestors, relabeled.
  Ontology extract_fragment(const std::set<std::string>& signature) const;

  // Tab-separated descriptor table, one concept per line in id order.
  void write_descriptors(std::ostream& out) const;

 private:
  void label();

  std::vector<Concept> concepts_;
  std::unordered_map<std::string, Node> by_id_;
  std::vector<std::vector<Node>> parents_;
  std::vector<std::vector<Node>> children_;
  std::vector<ConceptDescriptor> descriptors_;
  std::vector<std::uint32_t> depth_;
  // Inverse maps from index space to node; kNone marks the virtual root/sink.
  std::vector<Node> pre_to_node_;
  std::vector<Node> anc_to_node_;
  bool virtual_root_ = false;
};

inline constexpr Ontology::Node kNone = static_cast<Ontology::Node>(-1);

// Line-delimited JSON records with fields
// {"id","preferred","lex","semtypes","parents","group"}. Blank lines skipped.
Ontology load_taxonomy(std::istream& in);
Ontology load_taxonomy_file(const std::filesystem::path& path);
Concept parse_concept_record(std::string_view line, std::size_t line_no = 0);
std::string to_record(const Concept& con);

// True iff one lexical variant (preferred label or lex entry) has, for every
// keyword, a whitespace token containing it, case-insensitively.
bool match_lexicon(const Concept& con, std::span<const std::string> keywords);

// Splits a free-text query on whitespace.
std::vector<std::string> split_keywords(std::string_view query);

}  // namespace semcube::taxonomy
