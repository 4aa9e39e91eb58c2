#pragma once

// Validator for the JSON Schema subset used under schemas/: type, enum,
// required, properties, additionalProperties: false, items, minimum,
// minItems, maxItems. Returns the first problem found, or an empty string.

#include <fstream>
#include <string>

#include <json.hpp>

namespace semcube::testing {

inline bool type_matches(const nlohmann::json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  return false;
}

inline std::string check_schema(const nlohmann::json& v, const nlohmann::json& s, const std::string& at = "$") {
  if (s.contains("type")) {
    bool ok = false;
    if (s["type"].is_array()) {
      for (const auto& t : s["type"]) ok = ok || type_matches(v, t.get<std::string>());
    } else {
      ok = type_matches(v, s["type"].get<std::string>());
    }
    if (!ok) return at + ": expected " + s["type"].dump() + ", got " + v.dump();
  }
  if (s.contains("enum") && std::find(s["enum"].begin(), s["enum"].end(), v) == s["enum"].end()) {
    return at + ": " + v.dump() + " not in " + s["enum"].dump();
  }
  if (s.contains("minimum") && v.is_number() && v.get<double>() < s["minimum"].get<double>()) {
    return at + ": below minimum";
  }
  if (v.is_object()) {
    for (const auto& r : s.value("required", nlohmann::json::array())) {
      if (!v.contains(r.get<std::string>())) return at + ": missing " + r.get<std::string>();
    }
    const auto props = s.value("properties", nlohmann::json::object());
    for (const auto& [k, sub] : v.items()) {
      if (props.contains(k)) {
        if (auto e = check_schema(sub, props[k], at + "." + k); !e.empty()) return e;
      } else if (s.contains("additionalProperties") && s["additionalProperties"] == false) {
        return at + ": unexpected property " + k;
      }
    }
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) return at + ": too few items";
    if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) return at + ": too many items";
    if (s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (auto e = check_schema(v[i], s["items"], at + "[" + std::to_string(i) + "]"); !e.empty()) return e;
      }
    }
  }
  return {};
}

inline nlohmann::json load_schema(const std::string& name) {
  std::ifstream in(std::string(SEMCUBE_SCHEMAS_DIR) + "/" + name + ".schema.json");
  return nlohmann::json::parse(in);
}

}  // namespace semcube::testing
