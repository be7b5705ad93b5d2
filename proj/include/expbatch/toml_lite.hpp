#ifndef EXPBATCH_TOML_LITE_HPP
#define EXPBATCH_TOML_LITE_HPP

// Minimal TOML reader covering the subset the manifests use:
//   - [table] and [dotted.table] headers
//   - key = value with bare or dotted keys
//   - basic strings "..." (escapes: \" \\ \n \t \r), integers, booleans
//   - arrays, possibly nested and multi-line, trailing comma tolerated
//   - # comments and blank lines
// Everything else is a ParseError. Values are stored under their full
// dotted path, e.g. [cluster] job_name = "x" -> "cluster.job_name".

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "expbatch/error.hpp"

namespace expbatch::toml {

struct Value {
  enum class Kind { String, Integer, Boolean, Array };
  Kind kind = Kind::String;
  std::string str;
  std::int64_t integer = 0;
  bool boolean = false;
  std::vector<Value> array;
};

class Document {
 public:
  static Document parse(const std::string& text);
  static Document parse_file(const std::string& path);

  bool contains(const std::string& dotted_key) const;
  const Value* find(const std::string& dotted_key) const;

  // Typed lookups; SchemaError when present with the wrong type.
  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<std::int64_t> get_integer(const std::string& key) const;
  std::optional<bool> get_boolean(const std::string& key) const;
  const Value* get_array(const std::string& key) const;
  std::vector<std::string> get_string_array(const std::string& key) const;

  // Immediate child segments under a dotted prefix, sorted. E.g. with keys
  // variables.a.transforms and variables.b.cases.x, children("variables")
  // is {"a","b"}.
  std::vector<std::string> children(const std::string& prefix) const;

  const std::map<std::string, Value>& entries() const { return entries_; }

 private:
  std::map<std::string, Value> entries_;
};

}  // namespace expbatch::toml

#endif  // EXPBATCH_TOML_LITE_HPP
