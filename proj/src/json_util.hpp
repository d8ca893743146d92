#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "loglo/errors.hpp"

namespace loglo::detail {

using json = nlohmann::json;

/// Strict reader over a JSON object: typed getters with defaults, and
/// finish() rejects any key that was never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  long long get_int(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    return v.get<long long>();
  }

  double get_number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }

  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected a boolean");
    return v.get<bool>();
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }

  ObjectReader child(const std::string& key) {
    static const json empty = json::object();
    return ObjectReader(has(key) ? j_.at(key) : empty, where(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
    }
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace loglo::detail
