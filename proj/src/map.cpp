#include "semcube/map.hpp"

#include <algorithm>

#include "semcube/error.hpp"

namespace semcube::map {

using cube::Bridge;
using cube::CorpusIndex;

std::string_view to_string(BallState s) {
  switch (s) {
    case BallState::normal: return "normal";
    case BallState::expanded_child: return "expanded-child";
    case BallState::query_match: return "query-match";
  }
  return "";
}

std::optional<std::size_t> MapLayer::position_of(std::string_view concept_id) const {
  for (std::size_t i = 0; i < balls.size(); ++i) {
    if (balls[i].concept_id == concept_id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> MapLayer::concepts() const {
  std::vector<std::string> out;
  out.reserve(balls.size());
  for (const auto& b : balls) out.push_back(b.concept_id);
  return out;
}

std::set<std::string> contains(const CorpusIndex& index, std::string_view dimension, std::string_view q,
                               std::span<const std::string> keywords) {
  const auto& dim = index.dimension(dimension);
  auto node = dim.fragment.index_of(q);
  if (!node) throw Error(ErrorCode::unknown_id, "concept not in dimension " + dim.id, std::string(q));
  std::set<std::string> out;
  for (auto v : dim.fragment.descendant_nodes(*node)) {
    const auto& c = dim.fragment.concept_at(v);
    if (taxonomy::match_lexicon(c, keywords)) out.insert(c.id);
  }
  return out;
}

namespace {

std::string label_of(const taxonomy::Concept& c) { return c.preferred.empty() ? c.id : c.preferred; }

Ball make_ball(const CorpusIndex& index, const schema::Dimension& dim, const std::string& concept_id,
               const MapSettings& settings, BallState state, bool from_expansion) {
  Ball b;
  b.concept_id = concept_id;
  b.label = label_of(dim.fragment.concept_of(concept_id));
  b.relevance = cube::concept_relevance(index, concept_id, dim.id, settings.aggregator, settings.scorer);
  b.state = state;
  b.from_expansion = from_expansion;
  return b;
}

BallState marked_state(const CorpusIndex& index, const MapLayer& layer, const std::vector<std::string>& map_query,
                       const Ball& ball) {
  auto hits = [&](const std::vector<std::string>& kw) {
    return !kw.empty() && !contains(index, layer.dimension, ball.concept_id, kw).empty();
  };
  if (hits(layer.query) || hits(map_query)) return BallState::query_match;
  return ball.from_expansion ? BallState::expanded_child : BallState::normal;
}

const MapLayer& layer_at(const ConceptMap& map, std::size_t k) {
  if (k >= map.layers.size()) throw Error(ErrorCode::unknown_id, "no layer " + std::to_string(k), map.id);
  return map.layers[k];
}

std::size_t ball_position(const ConceptMap& map, std::size_t k, std::string_view concept_id) {
  auto pos = layer_at(map, k).position_of(concept_id);
  if (!pos) {
    throw Error(ErrorCode::unknown_id, "no visible ball in layer " + std::to_string(k), std::string(concept_id));
  }
  return *pos;
}

std::vector<Bridge> bridges_between(const CorpusIndex& index, const ConceptMap& map, const MapLayer& left,
                                    std::span<const std::string> left_concepts, const MapLayer& right,
                                    std::span<const std::string> right_concepts) {
  auto cube = cube::build_cube(index, left.dimension, left_concepts, right.dimension, right_concepts);
  return cube::bridges(cube, map.settings.measure, map.settings.delta, map.settings.contingency);
}

// Drops bridges whose endpoint in layer k is in `gone`.
void drop_bridges(ConceptMap& map, std::size_t k, const std::set<std::string>& gone) {
  if (gone.empty()) return;
  if (k > 0) {
    std::erase_if(map.bridges[k - 1], [&](const Bridge& b) { return gone.count(b.c_j) != 0; });
  }
  if (k + 1 < map.layers.size()) {
    std::erase_if(map.bridges[k], [&](const Bridge& b) { return gone.count(b.c_i) != 0; });
  }
}

void refresh_bridges_around(const CorpusIndex& index, ConceptMap& map, std::size_t k) {
  if (k > 0) map.bridges[k - 1] = compute_bridges(index, map, k - 1);
  if (k + 1 < map.layers.size()) map.bridges[k] = compute_bridges(index, map, k);
}

// Removes balls and their bridges from layer k.
void remove_balls(ConceptMap& map, std::size_t k, const std::set<std::string>& gone) {
  std::erase_if(map.layers[k].balls, [&](const Ball& b) { return gone.count(b.concept_id) != 0; });
  drop_bridges(map, k, gone);
}

}  // namespace

MapLayer define_layer(const CorpusIndex& index, std::string_view dimension, std::size_t category,
                      const MapSettings& settings) {
  const auto& dim = index.dimension(dimension);
  if (category >= dim.categories.size()) {
    throw Error(ErrorCode::unknown_id, "unknown category " + std::to_string(category) + " of dimension " + dim.id);
  }
  MapLayer layer;
  layer.dimension = dim.id;
  layer.category = category;
  for (const auto& c : dim.categories[category].concepts) {
    layer.balls.push_back(make_ball(index, dim, c, settings, BallState::normal, false));
  }
  return layer;
}

MapLayer define_layer_by_query(const CorpusIndex& index, std::string_view dimension,
                               std::span<const std::string> keywords, const MapSettings& settings) {
  if (keywords.empty()) throw Error(ErrorCode::invalid_input, "keyword layer needs at least one keyword");
  const auto& dim = index.dimension(dimension);
  const auto& frag = dim.fragment;
  std::vector<taxonomy::Ontology::Node> matching;
  for (taxonomy::Ontology::Node v = 0; v < frag.size(); ++v) {
    if (taxonomy::match_lexicon(frag.concept_at(v), keywords)) matching.push_back(v);
  }
  std::vector<taxonomy::Ontology::Node> specific;
  for (auto m : matching) {
    bool has_matching_below = std::any_of(matching.begin(), matching.end(),
                                          [&](auto o) { return o != m && frag.is_descendant(o, m); });
    if (!has_matching_below) specific.push_back(m);
  }
  std::sort(specific.begin(), specific.end(),
            [&](auto a, auto b) { return frag.descriptor_at(a).topo_order < frag.descriptor_at(b).topo_order; });
  MapLayer layer;
  layer.dimension = dim.id;
  layer.query.assign(keywords.begin(), keywords.end());
  for (auto v : specific) {
    layer.balls.push_back(make_ball(index, dim, frag.concept_at(v).id, settings, BallState::query_match, false));
  }
  return layer;
}

std::vector<MapLayer> define_layers_by_query(const CorpusIndex& index, std::span<const std::string> keywords,
                                             const MapSettings& settings) {
  std::vector<MapLayer> out;
  for (const auto& dim : index.dimensions()) {
    auto layer = define_layer_by_query(index, dim.id, keywords, settings);
    if (!layer.balls.empty()) out.push_back(std::move(layer));
  }
  return out;
}

std::vector<Bridge> compute_bridges(const CorpusIndex& index, const ConceptMap& map, std::size_t k) {
  const auto& left = layer_at(map, k);
  const auto& right = layer_at(map, k + 1);
  return bridges_between(index, map, left, left.concepts(), right, right.concepts());
}

ConceptMap build_map(const CorpusIndex& index, std::string id, std::vector<MapLayer> layers,
                     const MapSettings& settings, std::vector<std::string> query) {
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    if (layers[k].dimension == layers[k + 1].dimension) {
      throw Error(ErrorCode::invalid_operation, "adjacent layers share dimension " + layers[k].dimension);
    }
  }
  ConceptMap map;
  map.id = std::move(id);
  map.layers = std::move(layers);
  map.settings = settings;
  map.query = std::move(query);
  for (auto& layer : map.layers) {
    for (auto& ball : layer.balls) ball.state = marked_state(index, layer, map.query, ball);
  }
  map.bridges.assign(map.layers.empty() ? 0 : map.layers.size() - 1, {});
  for (std::size_t k = 0; k + 1 < map.layers.size(); ++k) map.bridges[k] = compute_bridges(index, map, k);
  return map;
}

void drill_down(const CorpusIndex& index, ConceptMap& map, std::size_t k, std::string_view concept_id) {
  const auto pos = ball_position(map, k, concept_id);
  auto& layer = map.layers[k];
  const auto& dim = index.dimension(layer.dimension);
  const auto& frag = dim.fragment;
  const auto node = frag.node(concept_id);
  if (frag.child_nodes(node).empty()) {
    throw Error(ErrorCode::invalid_operation, "concept has no children to expand", std::string(concept_id));
  }

  Expansion exp{layer.balls[pos], pos, {}};
  std::vector<Ball> added;
  for (auto ch : frag.child_nodes(node)) {
    const auto& child_id = frag.concept_at(ch).id;
    // skip children already shown through another ball or reachable through a sibling
    bool covered = std::any_of(layer.balls.begin(), layer.balls.end(), [&](const Ball& b) {
      return b.concept_id != concept_id && frag.is_descendant(ch, frag.node(b.concept_id));
    });
    const auto& siblings = frag.child_nodes(node);
    covered = covered || std::any_of(siblings.begin(), siblings.end(),
                                     [&](auto sib) { return sib != ch && frag.is_descendant(ch, sib); });
    if (covered) continue;
    Ball b = make_ball(index, dim, child_id, map.settings, BallState::expanded_child, true);
    b.state = marked_state(index, layer, map.query, b);
    added.push_back(std::move(b));
    exp.children.push_back(child_id);
  }

  const std::string removed(concept_id);
  layer.balls.erase(layer.balls.begin() + static_cast<std::ptrdiff_t>(pos));
  layer.balls.insert(layer.balls.begin() + static_cast<std::ptrdiff_t>(pos), added.begin(), added.end());
  layer.expansions.push_back(std::move(exp));
  drop_bridges(map, k, {removed});

  const auto& fresh = layer.expansions.back().children;
  if (fresh.empty()) return;
  if (k > 0) {
    const auto& left = map.layers[k - 1];
    auto extra = bridges_between(index, map, left, left.concepts(), layer, fresh);
    auto& set = map.bridges[k - 1];
    set.insert(set.end(), extra.begin(), extra.end());
    cube::sort_bridges(set);
  }
  if (k + 1 < map.layers.size()) {
    const auto& right = map.layers[k + 1];
    auto extra = bridges_between(index, map, layer, fresh, right, right.concepts());
    auto& set = map.bridges[k];
    set.insert(set.end(), extra.begin(), extra.end());
    cube::sort_bridges(set);
  }
}

void roll_up(const CorpusIndex& index, ConceptMap& map, std::size_t k, std::string_view concept_id) {
  layer_at(map, k);
  auto& layer = map.layers[k];
  const auto& frag = index.dimension(layer.dimension).fragment;

  std::optional<std::size_t> entry;
  for (std::size_t e = layer.expansions.size(); e-- > 0 && !entry;) {
    const auto& x = layer.expansions[e];
    if (x.parent.concept_id == concept_id) entry = e;
  }
  if (!entry && layer.position_of(concept_id)) {
    for (std::size_t e = layer.expansions.size(); e-- > 0 && !entry;) {
      const auto& ch = layer.expansions[e].children;
      if (std::find(ch.begin(), ch.end(), concept_id) != ch.end()) entry = e;
    }
  }
  if (!entry) {
    throw Error(ErrorCode::invalid_operation, "no expansion to roll up", std::string(concept_id));
  }
  const Expansion exp = layer.expansions[*entry];
  const auto parent = frag.node(exp.parent.concept_id);
  if (layer.position_of(exp.parent.concept_id)) {
    throw Error(ErrorCode::invalid_operation, "concept is already visible", exp.parent.concept_id);
  }
  for (const auto& b : layer.balls) {
    if (frag.is_descendant(parent, frag.node(b.concept_id))) {
      throw Error(ErrorCode::invalid_operation, "an ancestor is visible in the layer", b.concept_id);
    }
  }

  std::set<std::string> gone;
  std::size_t insert_at = std::min(exp.position, layer.balls.size());
  for (std::size_t i = 0; i < layer.balls.size(); ++i) {
    if (frag.is_descendant(frag.node(layer.balls[i].concept_id), parent)) {
      gone.insert(layer.balls[i].concept_id);
      insert_at = std::min(insert_at, i);
    }
  }
  remove_balls(map, k, gone);
  insert_at = std::min(insert_at, layer.balls.size());
  layer.balls.insert(layer.balls.begin() + static_cast<std::ptrdiff_t>(insert_at), exp.parent);

  std::erase_if(layer.expansions, [&](const Expansion& x) {
    return frag.is_descendant(frag.node(x.parent.concept_id), parent);
  });
  refresh_bridges_around(index, map, k);
}

void keep_only(const CorpusIndex& index, ConceptMap& map, std::size_t k, std::string_view concept_id,
               KeepScope scope) {
  (void)index;
  ball_position(map, k, concept_id);
  std::set<std::string> gone;
  for (const auto& b : map.layers[k].balls) {
    if (b.concept_id != concept_id) gone.insert(b.concept_id);
  }
  remove_balls(map, k, gone);
  if (scope == KeepScope::layer) return;

  if (k > 0) {
    std::set<std::string> linked;
    for (const auto& b : map.bridges[k - 1]) linked.insert(b.c_i);
    std::set<std::string> drop;
    for (const auto& b : map.layers[k - 1].balls) {
      if (!linked.count(b.concept_id)) drop.insert(b.concept_id);
    }
    remove_balls(map, k - 1, drop);
  }
  if (k + 1 < map.layers.size()) {
    std::set<std::string> linked;
    for (const auto& b : map.bridges[k]) linked.insert(b.c_j);
    std::set<std::string> drop;
    for (const auto& b : map.layers[k + 1].balls) {
      if (!linked.count(b.concept_id)) drop.insert(b.concept_id);
    }
    remove_balls(map, k + 1, drop);
  }
}

void remove_concept(const CorpusIndex& index, ConceptMap& map, std::size_t k, std::string_view concept_id) {
  (void)index;
  ball_position(map, k, concept_id);
  remove_balls(map, k, {std::string(concept_id)});
}

double concept_relevance_in(const CorpusIndex& index, std::size_t doc, std::string_view concept_id) {
  const auto& onto = index.ontology();
  const auto target = onto.node(concept_id);
  double total = 0.0;
  for (const auto& [cui, r] : index.facts()[doc].rank) {
    auto n = onto.index_of(cui);
    if (n && onto.is_descendant(*n, target)) total += r;
  }
  return total;
}

namespace {

void sort_ranked(std::vector<RankedObject>& items) {
  std::sort(items.begin(), items.end(), [](const RankedObject& a, const RankedObject& b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    return a.doc_id < b.doc_id;
  });
}

const schema::Dimension& owning_dimension(const CorpusIndex& index, std::string_view concept_id) {
  const auto* dim = index.dimension_of(concept_id);
  if (!dim) throw Error(ErrorCode::unknown_id, "concept is not in any dimension", std::string(concept_id));
  return *dim;
}

}  // namespace

std::vector<RankedObject> drill_through_concept(const CorpusIndex& index, std::string_view concept_id) {
  const auto& dim = owning_dimension(index, concept_id);
  std::vector<RankedObject> out;
  for (auto d : index.postings(dim.id, concept_id).docs) {
    const auto& info = index.documents()[d];
    out.push_back({info.doc_id, info.object_type, concept_relevance_in(index, d, concept_id)});
  }
  sort_ranked(out);
  return out;
}

std::vector<RankedObject> drill_through_bridge(const CorpusIndex& index, std::string_view c_i, std::string_view c_j) {
  const auto& di = owning_dimension(index, c_i);
  const auto& dj = owning_dimension(index, c_j);
  const auto& pi = index.postings(di.id, c_i).docs;
  const auto& pj = index.postings(dj.id, c_j).docs;
  std::vector<std::uint32_t> both;
  std::set_intersection(pi.begin(), pi.end(), pj.begin(), pj.end(), std::back_inserter(both));
  std::vector<RankedObject> out;
  for (auto d : both) {
    double a = concept_relevance_in(index, d, c_i);
    double b = concept_relevance_in(index, d, c_j);
    if (a > 0.0 && b > 0.0) {
      const auto& info = index.documents()[d];
      out.push_back({info.doc_id, info.object_type, a * b});
    }
  }
  sort_ranked(out);
  return out;
}

}  // namespace semcube::map
