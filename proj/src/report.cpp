#include "subcurv/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "subcurv/errors.hpp"

namespace subcurv {

std::string json_number(double d) {
  if (!std::isfinite(d)) throw Error("non-finite number in JSON report");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

Json& Json::operator[](const std::string& key) {
  if (is_null()) v_ = Object{};
  auto* obj = std::get_if<Object>(&v_);
  if (!obj) throw Error("JSON value is not an object");
  return (*obj)[key];
}

void Json::push_back(Json v) {
  if (is_null()) v_ = Array{};
  auto* arr = std::get_if<Array>(&v_);
  if (!arr) throw Error("JSON value is not an array");
  arr->push_back(std::move(v));
}

namespace {

void write_string(std::ostream& os, const std::string& s) {
  os << '"';
  for (const char c : s) {
    switch (c) {
      case '"': os << "\\\""; break;
      case '\\': os << "\\\\"; break;
      case '\n': os << "\\n"; break;
      case '\t': os << "\\t"; break;
      case '\r': os << "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          os << buf;
        } else {
          os << c;
        }
    }
  }
  os << '"';
}

void indent(std::ostream& os, int depth) {
  for (int i = 0; i < depth; ++i) os << "  ";
}

}  // namespace

void Json::write(std::ostream& os, int depth) const {
  if (const auto* b = std::get_if<bool>(&v_)) {
    os << (*b ? "true" : "false");
  } else if (const auto* i = std::get_if<long long>(&v_)) {
    os << *i;
  } else if (const auto* d = std::get_if<double>(&v_)) {
    os << json_number(*d);
  } else if (const auto* s = std::get_if<std::string>(&v_)) {
    write_string(os, *s);
  } else if (const auto* a = std::get_if<Array>(&v_)) {
    if (a->empty()) {
      os << "[]";
      return;
    }
    os << "[\n";
    for (std::size_t k = 0; k < a->size(); ++k) {
      indent(os, depth + 1);
      (*a)[k].write(os, depth + 1);
      if (k + 1 < a->size()) os << ',';
      os << '\n';
    }
    indent(os, depth);
    os << ']';
  } else if (const auto* o = std::get_if<Object>(&v_)) {
    if (o->empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    std::size_t k = 0;
    for (const auto& [key, val] : *o) {
      indent(os, depth + 1);
      write_string(os, key);
      os << ": ";
      val.write(os, depth + 1);
      if (++k < o->size()) os << ',';
      os << '\n';
    }
    indent(os, depth);
    os << '}';
  } else {
    os << "null";
  }
}

std::string Json::dump() const {
  std::ostringstream os;
  write(os, 0);
  return os.str();
}

}  // namespace subcurv
