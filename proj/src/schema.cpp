#include "semcube/schema.hpp"

#include <algorithm>

#include "semcube/error.hpp"

namespace semcube::schema {

using taxonomy::Ontology;

std::vector<Dimension> build_dimensions(const Ontology& ontology, const std::set<std::string>& corpus_signature,
                                        const GroupMap& groups) {
  std::map<std::string, std::set<std::string>> signature_by_dim;
  for (const auto& [_, dim] : groups) signature_by_dim[dim];
  for (const auto& id : corpus_signature) {
    const auto& c = ontology.concept_of(id);
    auto g = groups.find(c.group);
    if (g != groups.end()) signature_by_dim[g->second].insert(id);
  }

  std::vector<Dimension> dims;
  std::map<std::string, std::string> owner;  // concept -> dimension
  for (auto& [name, signature] : signature_by_dim) {
    Dimension d;
    d.id = name;
    d.name = name;
    d.fragment = ontology.extract_fragment(signature);
    for (const auto& c : d.fragment.concepts()) {
      auto g = groups.find(c.group);
      if (g != groups.end() && g->second != name) {
        // find a signature concept below c to name the offending pair of groups
        std::string below;
        for (const auto& s : signature) {
          if (ontology.is_descendant(s, c.id)) {
            below = s;
            break;
          }
        }
        const auto& bc = ontology.concept_of(below);
        throw Error(ErrorCode::invalid_input,
                    "partition violation: concept " + below + " (group " + bc.group + ") has ancestor " + c.id +
                        " (group " + c.group + ")",
                    below);
      }
      auto [it, fresh] = owner.emplace(c.id, name);
      if (!fresh) {
        throw Error(ErrorCode::invalid_input,
                    "partition violation: concept " + c.id + " shared by dimensions " + it->second + " and " + name,
                    c.id);
      }
      d.member_concepts.insert(c.id);
    }
    dims.push_back(std::move(d));
  }
  return dims;
}

std::vector<Category> build_categories(const Dimension& dimension) {
  const auto& frag = dimension.fragment;
  std::vector<Category> out;
  if (frag.empty()) return out;

  std::vector<std::vector<Ontology::Node>> by_depth;
  for (Ontology::Node v = 0; v < frag.size(); ++v) {
    auto d = frag.tree_depth(v);
    if (by_depth.size() <= d) by_depth.resize(d + 1);
    by_depth[d].push_back(v);
  }
  auto by_topo = [&](Ontology::Node a, Ontology::Node b) {
    return frag.descriptor_at(a).topo_order < frag.descriptor_at(b).topo_order;
  };

  std::vector<Ontology::Node> deferred;
  for (std::size_t level = 0; level < by_depth.size() || !deferred.empty(); ++level) {
    std::vector<Ontology::Node> candidates = std::move(deferred);
    deferred.clear();
    if (level < by_depth.size()) candidates.insert(candidates.end(), by_depth[level].begin(), by_depth[level].end());
    std::sort(candidates.begin(), candidates.end(), by_topo);

    std::vector<Ontology::Node> accepted;
    for (auto c : candidates) {
      bool clash = std::any_of(accepted.begin(), accepted.end(), [&](Ontology::Node a) {
        return frag.is_descendant(c, a) || frag.is_descendant(a, c);
      });
      (clash ? deferred : accepted).push_back(c);
    }
    Category cat;
    cat.dimension_id = dimension.id;
    cat.level = out.size();
    for (auto a : accepted) cat.concepts.push_back(frag.concept_at(a).id);
    out.push_back(std::move(cat));
  }
  return out;
}

std::vector<Dimension> build_schema(const Ontology& ontology, const std::set<std::string>& corpus_signature,
                                    const GroupMap& groups) {
  auto dims = build_dimensions(ontology, corpus_signature, groups);
  for (auto& d : dims) d.categories = build_categories(d);
  return dims;
}

std::vector<Violation> validate_schema(std::span<const Dimension> dimensions) {
  std::vector<Violation> out;
  std::map<std::string, std::string> owner;
  for (const auto& dim : dimensions) {
    const auto& frag = dim.fragment;
    std::map<std::string, std::size_t> seen;
    for (const auto& cat : dim.categories) {
      std::vector<Ontology::Node> nodes;
      for (const auto& id : cat.concepts) {
        ++seen[id];
        auto n = frag.index_of(id);
        if (!n || !dim.has(id)) {
          out.push_back({Violation::Kind::partition, dim.id, {id},
                         "category " + std::to_string(cat.level) + " holds non-member " + id});
          continue;
        }
        nodes.push_back(*n);
      }
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        for (std::size_t b = a + 1; b < nodes.size(); ++b) {
          if (frag.is_descendant(nodes[a], nodes[b]) || frag.is_descendant(nodes[b], nodes[a])) {
            const auto& x = frag.concept_at(nodes[a]).id;
            const auto& y = frag.concept_at(nodes[b]).id;
            out.push_back({Violation::Kind::antichain, dim.id, {x, y},
                           "comparable concepts " + x + " and " + y + " in category " + std::to_string(cat.level)});
          }
        }
      }
      if (!nodes.empty() && !frag.has_virtual_root()) {
        bool common = false;
        for (Ontology::Node top = 0; top < frag.size() && !common; ++top) {
          common = std::all_of(nodes.begin(), nodes.end(), [&](Ontology::Node n) { return frag.is_descendant(n, top); });
        }
        if (!common) {
          out.push_back({Violation::Kind::common_ancestor, dim.id, cat.concepts,
                         "category " + std::to_string(cat.level) + " has no common super-concept"});
        }
      }
    }
    for (const auto& id : dim.member_concepts) {
      auto it = seen.find(id);
      std::size_t times = it == seen.end() ? 0 : it->second;
      if (times != 1) {
        out.push_back({Violation::Kind::partition, dim.id, {id},
                       id + " appears in " + std::to_string(times) + " categories"});
      }
      auto [o, fresh] = owner.emplace(id, dim.id);
      if (!fresh) {
        out.push_back({Violation::Kind::partition, dim.id, {id},
                       id + " belongs to dimensions " + o->second + " and " + dim.id});
      }
    }
  }
  return out;
}

}  // namespace semcube::schema
