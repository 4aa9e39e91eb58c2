#pragma once

// Transport-independent request handling. The HTTP server and the tests both
// go through Api::handle, so every route is testable without a socket.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "semcube/engine.hpp"
#include "semcube/error.hpp"
#include "semcube/map.hpp"

namespace semcube::api {

nlohmann::json map_to_json(const cube::CorpusIndex& index, const map::ConceptMap& m);
nlohmann::json error_to_json(const Error& e);
int status_for(ErrorCode code);

// Builds the layers of a POST /maps body. Layer entries are
// {dimension, category} or {dimension?, query}; a query without a dimension
// expands to one layer per dimension with matches.
map::ConceptMap map_from_request(const cube::CorpusIndex& index, const nlohmann::json& body, std::string id,
                                 const map::MapSettings& defaults);

// Server-side maps with idle expiry. Operations on one map are serialized.
class MapStore {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  explicit MapStore(std::chrono::seconds ttl, Clock clock = std::chrono::steady_clock::now);

  std::string insert(map::ConceptMap m);  // assigns m.id

  // Runs fn under the map's lock. Throws unknown_id for a missing or expired map.
  template <class Fn>
  auto with(const std::string& id, Fn&& fn) {
    auto entry = find(id);
    std::lock_guard lock(entry->mutex);
    entry->last_used = clock_();
    return fn(entry->map);
  }

  std::size_t size();

 private:
  struct Entry {
    std::mutex mutex;
    map::ConceptMap map;
    std::chrono::steady_clock::time_point last_used;
  };
  std::shared_ptr<Entry> find(const std::string& id);
  void expire_locked(std::chrono::steady_clock::time_point now);

  std::chrono::seconds ttl_;
  Clock clock_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> maps_;
  std::uint64_t next_id_ = 1;
};

struct Response {
  int status = 200;
  std::string body;
};

using Params = std::multimap<std::string, std::string>;

class Api {
 public:
  Api(engine::Snapshot snapshot, const engine::EngineConfig& config, MapStore::Clock clock = std::chrono::steady_clock::now);

  Response handle(const std::string& method, const std::string& path, const Params& params = {},
                  const std::string& body = {});

  nlohmann::json tree() const;
  // Same body as GET /maps/{id}.
  nlohmann::json export_map(const std::string& map_id);

  const engine::Snapshot& snapshot() const { return snapshot_; }
  MapStore& maps() { return maps_; }

 private:
  nlohmann::json create_map(const nlohmann::json& body);
  nlohmann::json mutate(const std::string& map_id, const std::string& op, const nlohmann::json& body);
  nlohmann::json concept_objects(const std::string& map_id, const std::string& concept_id, const Params& params);
  nlohmann::json bridge_objects(const std::string& map_id, const Params& params);
  nlohmann::json objects_body(std::vector<map::RankedObject> items, const Params& params) const;

  engine::Snapshot snapshot_;
  map::MapSettings defaults_;
  std::map<std::string, std::string> links_;
  MapStore maps_;
};

}  // namespace semcube::api
