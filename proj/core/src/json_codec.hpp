#pragma once

// Internal JSON helpers shared by dgp, inference and harness. Not installed.

#include "maxzero/dgp.hpp"
#include "maxzero/errors.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace maxzero::detail {

using nlohmann::json;

[[nodiscard]] json dgp_to_json(const DgpSpec& spec);
[[nodiscard]] DgpSpec dgp_from_json(const json& j);

[[nodiscard]] inline json vector_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

[[nodiscard]] inline Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigInvalid(what + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigInvalid(what + ": expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

/// Typed lookup that raises ConfigInvalid naming the offending key.
template <class T>
[[nodiscard]] T get_or(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->template get<T>();
  } catch (const json::exception&) {
    throw ConfigInvalid(std::string("key '") + key + "' has the wrong type");
  }
}

/// Nonnegative integer lookup; rejects negative and fractional values.
[[nodiscard]] std::size_t get_count(const json& obj, const char* key, std::size_t fallback);

}  // namespace maxzero::detail
