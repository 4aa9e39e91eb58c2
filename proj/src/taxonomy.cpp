#include "semcube/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "semcube/error.hpp"

namespace semcube::taxonomy {

using nlohmann::json;
using Node = Ontology::Node;

IntervalList merge_intervals(std::vector<Interval> intervals) {
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });
  IntervalList out;
  out.reserve(intervals.size());
  for (const auto& iv : intervals) {
    if (!out.empty() && iv.lo <= out.back().hi + 1) {
      out.back().hi = std::max(out.back().hi, iv.hi);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

bool covers(const IntervalList& list, std::uint32_t x) noexcept {
  // first interval with hi >= x
  auto it = std::lower_bound(list.begin(), list.end(), x,
                             [](const Interval& iv, std::uint32_t v) { return iv.hi < v; });
  return it != list.end() && it->lo <= x;
}

std::optional<Node> Ontology::index_of(std::string_view id) const noexcept {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Node Ontology::node(std::string_view id) const {
  auto n = index_of(id);
  if (!n) throw Error(ErrorCode::unknown_id, "unknown concept", std::string(id));
  return *n;
}

Ontology Ontology::build(std::vector<Concept> concepts) {
  Ontology o;
  std::sort(concepts.begin(), concepts.end(), [](const Concept& a, const Concept& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < concepts.size(); ++i) {
    if (concepts[i].id == concepts[i - 1].id) {
      throw Error(ErrorCode::invalid_input, "duplicate concept id", concepts[i].id);
    }
  }
  o.concepts_ = std::move(concepts);
  const auto n = o.concepts_.size();
  o.by_id_.reserve(n);
  for (Node i = 0; i < n; ++i) o.by_id_.emplace(o.concepts_[i].id, i);

  o.parents_.assign(n, {});
  o.children_.assign(n, {});
  for (Node i = 0; i < n; ++i) {
    auto& c = o.concepts_[i];
    std::sort(c.parents.begin(), c.parents.end());
    c.parents.erase(std::unique(c.parents.begin(), c.parents.end()), c.parents.end());
    for (const auto& p : c.parents) {
      auto it = o.by_id_.find(p);
      if (it == o.by_id_.end()) {
        throw Error(ErrorCode::invalid_input, "dangling parent reference '" + p + "'", c.id);
      }
      if (it->second == i) throw Error(ErrorCode::invalid_input, "cycle detected: " + c.id + " -> " + c.id, c.id);
      o.parents_[i].push_back(it->second);
      o.children_[it->second].push_back(i);
    }
  }
  o.label();
  return o;
}

namespace {

// Kahn's algorithm with the smallest ready id first.
std::vector<Node> topological_order(const std::vector<std::vector<Node>>& parents,
                                    const std::vector<std::vector<Node>>& children,
                                    const std::vector<Concept>& concepts) {
  const auto n = parents.size();
  std::vector<std::size_t> pending(n);
  std::priority_queue<Node, std::vector<Node>, std::greater<>> ready;
  for (Node i = 0; i < n; ++i) {
    pending[i] = parents[i].size();
    if (pending[i] == 0) ready.push(i);
  }
  std::vector<Node> order;
  order.reserve(n);
  while (!ready.empty()) {
    Node v = ready.top();
    ready.pop();
    order.push_back(v);
    for (Node c : children[v]) {
      if (--pending[c] == 0) ready.push(c);
    }
  }
  if (order.size() == n) return order;

  // Every unprocessed node has an unprocessed parent, so walking those
  // parents must revisit a node.
  Node start = 0;
  while (pending[start] == 0) ++start;
  std::vector<Node> path;
  std::vector<std::ptrdiff_t> seen_at(n, -1);
  Node v = start;
  while (seen_at[v] < 0) {
    seen_at[v] = static_cast<std::ptrdiff_t>(path.size());
    path.push_back(v);
    for (Node p : parents[v]) {
      if (pending[p] != 0) {
        v = p;
        break;
      }
    }
  }
  std::string cycle;
  std::string first;
  for (auto i = static_cast<std::size_t>(seen_at[v]); i < path.size(); ++i) {
    if (!cycle.empty()) cycle += " <- ";
    cycle += concepts[path[i]].id;
    if (first.empty()) first = concepts[path[i]].id;
  }
  cycle += " <- " + first;
  throw Error(ErrorCode::invalid_input, "cycle detected: " + cycle, first);
}

}  // namespace

void Ontology::label() {
  const auto n = static_cast<Node>(concepts_.size());
  descriptors_.assign(n, {});
  depth_.assign(n, 0);
  if (n == 0) {
    pre_to_node_.clear();
    anc_to_node_.clear();
    virtual_root_ = false;
    return;
  }

  const auto topo = topological_order(parents_, children_, concepts_);
  for (Node rank = 0; rank < n; ++rank) descriptors_[topo[rank]].topo_order = rank;
  for (Node i = 0; i < n; ++i) descriptors_[i].concept_id = concepts_[i].id;

  auto by_topo = [&](Node a, Node b) { return descriptors_[a].topo_order < descriptors_[b].topo_order; };
  for (auto& ch : children_) std::sort(ch.begin(), ch.end(), by_topo);

  // Spanning tree: the tree parent of a node is its smallest parent id,
  // which is the smallest node index since nodes are sorted by id.
  std::vector<std::vector<Node>> tree_children(n);
  std::vector<Node> top;
  for (Node v : topo) {
    if (parents_[v].empty()) {
      top.push_back(v);
    } else {
      tree_children[*std::min_element(parents_[v].begin(), parents_[v].end())].push_back(v);
    }
  }
  // topo iteration already yields each child list in topo order
  virtual_root_ = top.size() > 1;

  // Pre-order. Real nodes get 1..n; a virtual root, when present, takes 0.
  pre_to_node_.assign(n + 1, kNone);
  std::uint32_t next = 1;
  std::vector<std::pair<Node, std::uint32_t>> stack;
  for (auto it = top.rbegin(); it != top.rend(); ++it) stack.emplace_back(*it, 0);
  while (!stack.empty()) {
    auto [v, d] = stack.back();
    stack.pop_back();
    descriptors_[v].pre_index = next;
    pre_to_node_[next] = v;
    ++next;
    depth_[v] = d;
    const auto& tc = tree_children[v];
    for (auto it = tc.rbegin(); it != tc.rend(); ++it) stack.emplace_back(*it, d + 1);
  }

  // Reversed spanning tree: a node hangs below its smallest child id; leaves
  // hang below a virtual sink (index 0) in id order.
  std::vector<std::vector<Node>> rev_children(n);
  std::vector<Node> leaves;
  for (Node v = 0; v < n; ++v) {
    if (children_[v].empty()) {
      leaves.push_back(v);
    } else {
      rev_children[*std::min_element(children_[v].begin(), children_[v].end())].push_back(v);
    }
  }
  // v ascending, so rev_children lists are already in id order
  anc_to_node_.assign(n + 1, kNone);
  next = 1;
  std::vector<Node> rstack(leaves.rbegin(), leaves.rend());
  while (!rstack.empty()) {
    Node v = rstack.back();
    rstack.pop_back();
    descriptors_[v].anc_index = next;
    anc_to_node_[next] = v;
    ++next;
    const auto& rc = rev_children[v];
    for (auto it = rc.rbegin(); it != rc.rend(); ++it) rstack.push_back(*it);
  }

  // Descendant intervals bottom-up, ancestor intervals top-down.
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Node v = *it;
    std::vector<Interval> acc{{descriptors_[v].pre_index, descriptors_[v].pre_index}};
    for (Node c : children_[v]) {
      const auto& ci = descriptors_[c].desc_intervals;
      acc.insert(acc.end(), ci.begin(), ci.end());
    }
    descriptors_[v].desc_intervals = merge_intervals(std::move(acc));
  }
  for (Node v : topo) {
    std::vector<Interval> acc{{descriptors_[v].anc_index, descriptors_[v].anc_index}};
    for (Node p : parents_[v]) {
      const auto& pi = descriptors_[p].anc_intervals;
      acc.insert(acc.end(), pi.begin(), pi.end());
    }
    descriptors_[v].anc_intervals = merge_intervals(std::move(acc));
  }
}

bool Ontology::is_descendant(std::string_view a, std::string_view b) const {
  return is_descendant(node(a), node(b));
}

std::vector<Node> Ontology::descendant_nodes(Node n) const {
  std::vector<Node> out;
  for (const auto& iv : descriptors_[n].desc_intervals) {
    for (auto i = iv.lo; i <= iv.hi; ++i) {
      if (pre_to_node_[i] != kNone) out.push_back(pre_to_node_[i]);
    }
  }
  return out;
}

std::vector<Node> Ontology::ancestor_nodes(Node n) const {
  std::vector<Node> out;
  for (const auto& iv : descriptors_[n].anc_intervals) {
    for (auto i = iv.lo; i <= iv.hi; ++i) {
      if (anc_to_node_[i] != kNone) out.push_back(anc_to_node_[i]);
    }
  }
  return out;
}

std::vector<std::string> Ontology::descendants_of(std::string_view id) const {
  std::vector<std::string> out;
  for (Node v : descendant_nodes(node(id))) out.push_back(concepts_[v].id);
  return out;
}

std::vector<std::string> Ontology::ancestors_of(std::string_view id) const {
  std::vector<std::string> out;
  for (Node v : ancestor_nodes(node(id))) out.push_back(concepts_[v].id);
  return out;
}

std::vector<std::string> Ontology::children_of(std::string_view id) const {
  std::vector<std::string> out;
  for (Node c : children_[node(id)]) out.push_back(concepts_[c].id);
  return out;
}

std::vector<std::string> Ontology::roots() const {
  std::vector<Node> r;
  for (Node v = 0; v < concepts_.size(); ++v) {
    if (parents_[v].empty()) r.push_back(v);
  }
  std::sort(r.begin(), r.end(),
            [&](Node a, Node b) { return descriptors_[a].topo_order < descriptors_[b].topo_order; });
  std::vector<std::string> out;
  for (Node v : r) out.push_back(concepts_[v].id);
  return out;
}

Ontology Ontology::extract_fragment(const std::set<std::string>& signature) const {
  std::vector<bool> keep(concepts_.size(), false);
  for (const auto& id : signature) {
    for (Node a : ancestor_nodes(node(id))) keep[a] = true;
  }
  std::vector<Concept> picked;
  for (Node v = 0; v < concepts_.size(); ++v) {
    if (keep[v]) picked.push_back(concepts_[v]);
  }
  // Ancestor closure keeps every parent of a kept concept, so edges carry over unchanged.
  return build(std::move(picked));
}

namespace {

void write_intervals(std::ostream& out, const IntervalList& list) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (i) out << ',';
    out << list[i].lo << '-' << list[i].hi;
  }
}

std::vector<std::string> string_array(const json& j, const char* field, std::size_t line_no) {
  if (!j.contains(field)) return {};
  const auto& v = j.at(field);
  if (!v.is_array()) {
    throw Error(ErrorCode::invalid_input, std::string("field '") + field + "' must be an array",
                "line " + std::to_string(line_no));
  }
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) {
      throw Error(ErrorCode::invalid_input, std::string("field '") + field + "' must hold strings",
                  "line " + std::to_string(line_no));
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

bool variant_matches(std::string_view variant, std::span<const std::string> keywords) {
  std::vector<std::string> tokens;
  std::istringstream in{lower(variant)};
  for (std::string tok; in >> tok;) tokens.push_back(std::move(tok));
  for (const auto& kw : keywords) {
    const auto needle = lower(kw);
    bool hit = std::any_of(tokens.begin(), tokens.end(),
                           [&](const std::string& t) { return t.find(needle) != std::string::npos; });
    if (!hit) return false;
  }
  return true;
}

}  // namespace

void Ontology::write_descriptors(std::ostream& out) const {
  out << "id\tpre_index\tanc_index\tdesc_intervals\tanc_intervals\ttopo_order\n";
  for (const auto& d : descriptors_) {
    out << d.concept_id << '\t' << d.pre_index << '\t' << d.anc_index << '\t';
    write_intervals(out, d.desc_intervals);
    out << '\t';
    write_intervals(out, d.anc_intervals);
    out << '\t' << d.topo_order << '\n';
  }
}

Concept parse_concept_record(std::string_view line, std::size_t line_no) {
  const auto where = "line " + std::to_string(line_no);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::invalid_input, std::string("malformed taxonomy record: ") + e.what(), where);
  }
  if (!j.is_object()) throw Error(ErrorCode::invalid_input, "taxonomy record must be an object", where);
  static const std::set<std::string> allowed{"id", "preferred", "lex", "semtypes", "parents", "group"};
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw Error(ErrorCode::invalid_input, "unexpected field '" + key + "'", where);
  }
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
    throw Error(ErrorCode::invalid_input, "record needs a non-empty string id", where);
  }
  Concept c;
  c.id = j["id"].get<std::string>();
  if (j.contains("preferred")) c.preferred = j["preferred"].get<std::string>();
  c.lex = string_array(j, "lex", line_no);
  c.semtypes = string_array(j, "semtypes", line_no);
  c.parents = string_array(j, "parents", line_no);
  if (j.contains("group")) c.group = j["group"].get<std::string>();
  return c;
}

std::string to_record(const Concept& c) {
  json j;
  j["id"] = c.id;
  j["preferred"] = c.preferred;
  j["lex"] = c.lex;
  j["semtypes"] = c.semtypes;
  j["parents"] = c.parents;
  j["group"] = c.group;
  return j.dump();
}

Ontology load_taxonomy(std::istream& in) {
  std::vector<Concept> concepts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    concepts.push_back(parse_concept_record(line, line_no));
  }
  return Ontology::build(std::move(concepts));
}

Ontology load_taxonomy_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open taxonomy file", path.string());
  return load_taxonomy(in);
}

bool match_lexicon(const Concept& con, std::span<const std::string> keywords) {
  if (keywords.empty()) return true;
  if (variant_matches(con.preferred, keywords)) return true;
  return std::any_of(con.lex.begin(), con.lex.end(),
                     [&](const std::string& v) { return variant_matches(v, keywords); });
}

std::vector<std::string> split_keywords(std::string_view query) {
  std::vector<std::string> out;
  std::istringstream in{std::string(query)};
  for (std::string tok; in >> tok;) out.push_back(std::move(tok));
  return out;
}

}  // namespace semcube::taxonomy
