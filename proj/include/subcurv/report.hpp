#pragma once

#include <map>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace subcurv {

// Minimal JSON document for the run reports. Objects keep their keys in
// sorted order (std::map), doubles serialize with 17 significant digits,
// and non-finite numbers throw, so a dump of the same document is always
// byte-identical and every emitted report is valid JSON.
class Json {
 public:
  using Array = std::vector<Json>;
  using Object = std::map<std::string, Json>;

  Json() : v_(nullptr) {}
  Json(std::nullptr_t) : v_(nullptr) {}
  Json(bool b) : v_(b) {}
  Json(int i) : v_(static_cast<long long>(i)) {}
  Json(long long i) : v_(i) {}
  Json(std::size_t i) : v_(static_cast<long long>(i)) {}
  Json(double d) : v_(d) {}
  Json(const char* s) : v_(std::string(s)) {}
  Json(std::string s) : v_(std::move(s)) {}
  Json(Array a) : v_(std::move(a)) {}
  Json(Object o) : v_(std::move(o)) {}

  // Object access; a null value silently becomes an empty object first.
  Json& operator[](const std::string& key);
  // Array append; a null value silently becomes an empty array first.
  void push_back(Json v);

  bool is_null() const { return std::holds_alternative<std::nullptr_t>(v_); }

  // Two-space indented, keys sorted, no trailing newline.
  std::string dump() const;

 private:
  void write(std::ostream& os, int depth) const;

  std::variant<std::nullptr_t, bool, long long, double, std::string, Array,
               Object>
      v_;
};

// Serialize one double the way the report does (17 significant digits);
// exposed for tests and for anything matching report text.
std::string json_number(double d);

}  // namespace subcurv
