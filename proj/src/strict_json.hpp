#pragma once

// Strict reading of JSON objects: every key must be consumed, and values must
// have the expected type. Errors carry the dotted key path.

#include <cstdint>
#include <set>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "dtsurv/error.hpp"

namespace dtsurv::detail {

using json = nlohmann::json;

static_assert(std::is_same_v<std::uint64_t, std::size_t>,
              "seeds are read through the size_t overload");

class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::kConfig, "config key '" + where + "': " + what);
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void get(const std::string& key, double& out) {
    if (auto* v = child(key)) {
      if (!v->is_number()) fail(key_path(key), "expected a number");
      out = v->get<double>();
    }
  }
  void get(const std::string& key, int& out) {
    if (auto* v = child(key)) {
      if (!v->is_number_integer()) fail(key_path(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void get(const std::string& key, std::size_t& out) {
    if (auto* v = child(key)) {
      if (!v->is_number_unsigned()) fail(key_path(key), "expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void get(const std::string& key, bool& out) {
    if (auto* v = child(key)) {
      if (!v->is_boolean()) fail(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void get(const std::string& key, std::string& out) {
    if (auto* v = child(key)) {
      if (!v->is_string()) fail(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  // Rejects keys that were never asked for.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(key_path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace dtsurv::detail
