#include "semcube/api.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>

#include "semcube/error.hpp"

namespace semcube::api {

using nlohmann::json;

namespace {

std::vector<std::string> keywords_of(const json& q) {
  if (q.is_string()) return taxonomy::split_keywords(q.get<std::string>());
  if (q.is_array()) {
    std::vector<std::string> out;
    for (const auto& k : q) {
      if (!k.is_string()) throw Error(ErrorCode::invalid_input, "query keywords must be strings");
      auto parts = taxonomy::split_keywords(k.get<std::string>());
      out.insert(out.end(), parts.begin(), parts.end());
    }
    return out;
  }
  throw Error(ErrorCode::invalid_input, "query must be a string or an array of strings");
}

std::string param(const Params& params, const std::string& name) {
  auto it = params.find(name);
  return it == params.end() ? std::string() : it->second;
}

std::optional<std::size_t> limit_of(const Params& params) {
  auto s = param(params, "limit");
  if (s.empty()) return std::nullopt;
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::invalid_input, "limit must be a non-negative integer", s);
  }
  return v;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    auto j = json::parse(body);
    if (!j.is_object()) throw Error(ErrorCode::invalid_input, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::invalid_input, std::string("malformed JSON body: ") + e.what());
  }
}

// Which layer an operation targets: explicit, or the first one showing the concept.
std::size_t target_layer(const map::ConceptMap& m, const json& body, const std::string& concept_id) {
  if (body.contains("layer")) {
    if (!body["layer"].is_number_unsigned()) throw Error(ErrorCode::invalid_input, "layer must be an index");
    auto k = body["layer"].get<std::size_t>();
    if (k >= m.layers.size()) throw Error(ErrorCode::unknown_id, "no such layer", std::to_string(k));
    return k;
  }
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    if (m.layers[k].position_of(concept_id)) return k;
  }
  // Roll-up names a parent that is not visible; find the layer that expanded it.
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    for (const auto& x : m.layers[k].expansions) {
      if (x.parent.concept_id == concept_id) return k;
    }
  }
  throw Error(ErrorCode::unknown_id, "concept is not a visible ball", concept_id);
}

map::MapSettings settings_from(const json& body, map::MapSettings s) {
  if (body.contains("measure")) s.measure = cube::parse_measure(body["measure"].get<std::string>());
  if (body.contains("delta")) {
    if (!body["delta"].is_number()) throw Error(ErrorCode::invalid_input, "delta must be a number");
    s.delta = body["delta"].get<double>();
  }
  if (body.contains("scorer")) s.scorer = cube::parse_scorer(body["scorer"].get<std::string>());
  if (body.contains("contingency")) s.contingency = cube::parse_contingency(body["contingency"].get<std::string>());
  if (body.contains("aggregator")) s.aggregator = cube::parse_aggregator(body["aggregator"].get<std::string>());
  return s;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return 400;
    case ErrorCode::unknown_id: return 404;
    case ErrorCode::invalid_operation: return 409;
    default: return 500;
  }
}

json error_to_json(const Error& e) {
  return {{"error", {{"code", to_string(e.code())}, {"message", e.message()}, {"context", e.context()}}}};
}

json map_to_json(const cube::CorpusIndex& index, const map::ConceptMap& m) {
  (void)index;
  json layers = json::array();
  for (const auto& layer : m.layers) {
    json balls = json::array();
    for (const auto& b : layer.balls) {
      balls.push_back({{"concept", b.concept_id},
                       {"label", b.label},
                       {"relevance", b.relevance},
                       {"state", map::to_string(b.state)}});
    }
    json l = {{"dimension", layer.dimension}, {"balls", balls}};
    if (layer.category) l["category"] = *layer.category;
    if (!layer.query.empty()) l["query"] = layer.query;
    layers.push_back(std::move(l));
  }
  json bridges = json::array();
  for (std::size_t k = 0; k < m.bridges.size(); ++k) {
    json items = json::array();
    for (const auto& b : m.bridges[k]) items.push_back({{"from", b.c_i}, {"to", b.c_j}, {"score", number(b.score)}});
    bridges.push_back({{"layer_pair", {k, k + 1}}, {"items", items}});
  }
  json out = {{"map_id", m.id},
              {"layers", layers},
              {"bridges", bridges},
              {"provenance",
               {{"measure", cube::to_string(m.settings.measure)},
                {"delta", number(m.settings.delta)},
                {"scorer", cube::to_string(m.settings.scorer)},
                {"aggregator", cube::to_string(m.settings.aggregator)},
                {"contingency", cube::to_string(m.settings.contingency)}}}};
  if (!m.query.empty()) out["query"] = m.query;
  return out;
}

map::ConceptMap map_from_request(const cube::CorpusIndex& index, const json& body, std::string id,
                                 const map::MapSettings& defaults) {
  if (!body.contains("layers") || !body["layers"].is_array() || body["layers"].empty()) {
    throw Error(ErrorCode::invalid_input, "layers must be a non-empty array");
  }
  const auto settings = settings_from(body, defaults);
  std::vector<map::MapLayer> layers;
  for (const auto& spec : body["layers"]) {
    if (!spec.is_object()) throw Error(ErrorCode::invalid_input, "layer spec must be an object");
    const bool has_cat = spec.contains("category");
    const bool has_query = spec.contains("query");
    if (has_cat == has_query) throw Error(ErrorCode::invalid_input, "layer needs exactly one of category or query");
    if (has_cat) {
      if (!spec.contains("dimension")) throw Error(ErrorCode::invalid_input, "category layer needs a dimension");
      if (!spec["category"].is_number_unsigned()) throw Error(ErrorCode::invalid_input, "category must be an index");
      layers.push_back(map::define_layer(index, spec["dimension"].get<std::string>(),
                                         spec["category"].get<std::size_t>(), settings));
      continue;
    }
    auto kw = keywords_of(spec["query"]);
    if (kw.empty()) throw Error(ErrorCode::invalid_input, "query has no keywords");
    if (spec.contains("dimension")) {
      layers.push_back(map::define_layer_by_query(index, spec["dimension"].get<std::string>(), kw, settings));
    } else {
      auto more = map::define_layers_by_query(index, kw, settings);
      layers.insert(layers.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    }
  }
  std::vector<std::string> query;
  if (body.contains("query")) query = keywords_of(body["query"]);
  return map::build_map(index, std::move(id), std::move(layers), settings, std::move(query));
}

MapStore::MapStore(std::chrono::seconds ttl, Clock clock) : ttl_(ttl), clock_(std::move(clock)) {}

void MapStore::expire_locked(std::chrono::steady_clock::time_point now) {
  std::erase_if(maps_, [&](const auto& kv) {
    // An entry in use is never expired; its lock is held by the user.
    std::unique_lock lock(kv.second->mutex, std::try_to_lock);
    return lock.owns_lock() && now - kv.second->last_used > ttl_;
  });
}

std::string MapStore::insert(map::ConceptMap m) {
  std::lock_guard lock(mutex_);
  const auto now = clock_();
  expire_locked(now);
  auto id = "m" + std::to_string(next_id_++);
  auto entry = std::make_shared<Entry>();
  m.id = id;
  entry->map = std::move(m);
  entry->last_used = now;
  maps_.emplace(id, std::move(entry));
  return id;
}

std::shared_ptr<MapStore::Entry> MapStore::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  expire_locked(clock_());
  auto it = maps_.find(id);
  if (it == maps_.end()) throw Error(ErrorCode::unknown_id, "unknown map", id);
  return it->second;
}

std::size_t MapStore::size() {
  std::lock_guard lock(mutex_);
  expire_locked(clock_());
  return maps_.size();
}

Api::Api(engine::Snapshot snapshot, const engine::EngineConfig& config, MapStore::Clock clock)
    : snapshot_(std::move(snapshot)), links_(config.links), maps_(config.map_ttl, std::move(clock)) {
  defaults_.measure = config.measure;
  defaults_.delta = config.delta;
  defaults_.contingency = config.contingency;
  defaults_.scorer = config.scorer;
}

json Api::tree() const {
  const auto& onto = *snapshot_.ontology;
  json dims = json::array();
  for (const auto& d : *snapshot_.dimensions) {
    json cats = json::array();
    for (const auto& c : d.categories) {
      json concepts = json::array();
      for (const auto& id : c.concepts) {
        const auto& con = onto.concept_of(id);
        concepts.push_back({{"id", id}, {"label", con.preferred.empty() ? id : con.preferred}});
      }
      cats.push_back({{"index", c.level}, {"concepts", concepts}});
    }
    dims.push_back({{"id", d.id}, {"name", d.name}, {"categories", cats}});
  }
  return {{"dimensions", dims}, {"object_types", snapshot_.object_types()}};
}

json Api::export_map(const std::string& map_id) {
  return maps_.with(map_id, [&](map::ConceptMap& m) { return map_to_json(*snapshot_.index, m); });
}

json Api::create_map(const json& body) {
  auto m = map_from_request(*snapshot_.index, body, {}, defaults_);
  auto id = maps_.insert(std::move(m));
  return export_map(id);
}

json Api::mutate(const std::string& map_id, const std::string& op, const json& body) {
  if (!body.contains("concept") || !body["concept"].is_string()) {
    throw Error(ErrorCode::invalid_input, "body needs a concept id");
  }
  const auto concept_id = body["concept"].get<std::string>();
  const auto& index = *snapshot_.index;
  return maps_.with(map_id, [&](map::ConceptMap& m) {
    const auto k = target_layer(m, body, concept_id);
    if (op == "drill-down") {
      map::drill_down(index, m, k, concept_id);
    } else if (op == "roll-up") {
      map::roll_up(index, m, k, concept_id);
    } else if (op == "keep-only") {
      auto scope = map::KeepScope::adjacent;
      if (body.contains("scope")) {
        auto s = body["scope"].get<std::string>();
        if (s == "layer") scope = map::KeepScope::layer;
        else if (s != "adjacent") throw Error(ErrorCode::invalid_input, "scope must be layer or adjacent", s);
      }
      map::keep_only(index, m, k, concept_id, scope);
    } else {
      map::remove_concept(index, m, k, concept_id);
    }
    return map_to_json(index, m);
  });
}

json Api::objects_body(std::vector<map::RankedObject> items, const Params& params) const {
  const auto type = param(params, "type");
  if (!type.empty()) std::erase_if(items, [&](const auto& o) { return o.object_type != type; });
  if (auto limit = limit_of(params); limit && items.size() > *limit) items.resize(*limit);
  json out = json::array();
  for (const auto& o : items) {
    json j = {{"doc_id", o.doc_id}, {"object_type", o.object_type}, {"relevance", o.relevance}};
    if (auto it = links_.find(o.object_type); it != links_.end()) {
      auto link = it->second;
      for (auto p = link.find("{doc_id}"); p != std::string::npos; p = link.find("{doc_id}", p + o.doc_id.size())) {
        link.replace(p, 8, o.doc_id);
      }
      j["link"] = link;
    }
    out.push_back(std::move(j));
  }
  return {{"items", out}};
}

json Api::concept_objects(const std::string& map_id, const std::string& concept_id, const Params& params) {
  maps_.with(map_id, [&](map::ConceptMap& m) {
    for (const auto& layer : m.layers) {
      if (layer.position_of(concept_id)) return;
    }
    throw Error(ErrorCode::unknown_id, "concept is not a visible ball", concept_id);
  });
  return objects_body(map::drill_through_concept(*snapshot_.index, concept_id), params);
}

json Api::bridge_objects(const std::string& map_id, const Params& params) {
  auto from = param(params, "from");
  auto to = param(params, "to");
  if (from.empty() || to.empty()) throw Error(ErrorCode::invalid_input, "from and to are required");
  maps_.with(map_id, [&](map::ConceptMap& m) {
    for (const auto& set : m.bridges) {
      for (const auto& b : set) {
        if ((b.c_i == from && b.c_j == to) || (b.c_i == to && b.c_j == from)) return;
      }
    }
    throw Error(ErrorCode::unknown_id, "no such bridge in the map", from + "-" + to);
  });
  return objects_body(map::drill_through_bridge(*snapshot_.index, from, to), params);
}

Response Api::handle(const std::string& method, const std::string& path, const Params& params,
                     const std::string& body) {
  static const std::regex map_re("^/maps/([^/]+)$");
  static const std::regex op_re("^/maps/([^/]+)/(drill-down|roll-up|keep-only|remove)$");
  static const std::regex concept_re("^/maps/([^/]+)/concepts/([^/]+)/objects$");
  static const std::regex bridge_re("^/maps/([^/]+)/bridges/objects$");
  std::smatch m;
  try {
    json out;
    if (path == "/tree") {
      if (method != "GET") throw Error(ErrorCode::invalid_input, "method not allowed", method + " " + path);
      out = tree();
    } else if (path == "/maps") {
      if (method != "POST") throw Error(ErrorCode::invalid_input, "method not allowed", method + " " + path);
      out = create_map(parse_body(body));
    } else if (std::regex_match(path, m, map_re)) {
      if (method != "GET") throw Error(ErrorCode::invalid_input, "method not allowed", method + " " + path);
      out = export_map(m[1]);
    } else if (std::regex_match(path, m, op_re)) {
      if (method != "POST") throw Error(ErrorCode::invalid_input, "method not allowed", method + " " + path);
      out = mutate(m[1], m[2], parse_body(body));
    } else if (std::regex_match(path, m, concept_re)) {
      if (method != "GET") throw Error(ErrorCode::invalid_input, "method not allowed", method + " " + path);
      out = concept_objects(m[1], m[2], params);
    } else if (std::regex_match(path, m, bridge_re)) {
      if (method != "GET") throw Error(ErrorCode::invalid_input, "method not allowed", method + " " + path);
      out = bridge_objects(m[1], params);
    } else {
      throw Error(ErrorCode::unknown_id, "no such route", path);
    }
    return {200, out.dump()};
  } catch (const Error& e) {
    return {status_for(e.code()), error_to_json(e).dump()};
  } catch (const json::exception& e) {
    Error err(ErrorCode::invalid_input, std::string("bad request field: ") + e.what());
    return {400, error_to_json(err).dump()};
  }
}

}  // namespace semcube::api
