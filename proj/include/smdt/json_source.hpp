#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smdt/error.hpp"

namespace smdt {

using Json = nlohmann::json;
using JsonPointer = nlohmann::json::json_pointer;

/// A parsed JSON document that remembers the source line of every value, so
/// validation failures can point at the offending line instead of just a path.
class JsonSource {
 public:
  /// Parses `text`; syntax errors throw ConfigError("origin:line:col: ...").
  static JsonSource parse(std::string text, std::string origin);
  static JsonSource load(const std::filesystem::path& path);

  const Json& root() const { return root_; }
  const std::string& origin() const { return origin_; }

  /// 1-based line of the value at `ptr`, or 0 when the path is unknown.
  int line_of(const JsonPointer& ptr) const;

  [[noreturn]] void fail(const JsonPointer& ptr, const std::string& message) const;

 private:
  JsonSource() = default;

  std::string origin_;
  Json root_;
  std::map<std::string, int> lines_;
};

/// Typed, validating view into a JsonSource.
class JsonNode {
 public:
  JsonNode(const JsonSource& src, JsonPointer ptr);
  explicit JsonNode(const JsonSource& src) : JsonNode(src, JsonPointer{}) {}

  const Json& value() const;
  const JsonPointer& pointer() const { return ptr_; }

  bool has(std::string_view key) const;
  JsonNode at(std::string_view key) const;
  JsonNode at(std::size_t index) const;
  std::size_t size() const;

  bool is_object() const { return value().is_object(); }
  bool is_array() const { return value().is_array(); }

  double as_double() const;
  long long as_int() const;
  bool as_bool() const;
  std::string as_string() const;

  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  std::string get_string(std::string_view key, const std::string& fallback) const;

  /// Throws unless this node is an object/array.
  const JsonNode& expect_object() const;
  const JsonNode& expect_array() const;

  [[noreturn]] void fail(const std::string& message) const { src_->fail(ptr_, message); }

 private:
  const JsonSource* src_;
  JsonPointer ptr_;
};

}  // namespace smdt
