#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <json.hpp>

#include "rapd/common.hpp"

namespace rapd {

using json = nlohmann::json;

namespace detail {

// Canonical number form: integers print as integers; floats are rounded to 6
// significant digits and, when that rounding lands on a whole value, printed
// in integer form. Round-tripping a canonical file through parse + dump is
// therefore byte-stable.
inline std::string canonical_number(double v) {
  if (!std::isfinite(v)) fail(ErrorCode::Internal, "non-finite number in JSON output");
  if (v == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  const double rounded = std::strtod(buf, nullptr);
  if (rounded == std::floor(rounded) && std::abs(rounded) < 1e15) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(rounded));
  }
  return buf;
}

inline void canonical_dump_rec(const json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // nlohmann objects iterate sorted
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        out += json(it.key()).dump();
        out += ": ";
        canonical_dump_rec(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const json& item : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        canonical_dump_rec(item, out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float:
      out += canonical_number(j.get<double>());
      return;
    case json::value_t::number_integer:
      out += std::to_string(j.get<long long>());
      return;
    case json::value_t::number_unsigned:
      out += std::to_string(j.get<unsigned long long>());
      return;
    default:
      out += j.dump();  // strings, booleans, null
      return;
  }
}

}  // namespace detail

// Deterministic pretty-printer: sorted keys, two-space indent, canonical
// number formatting, trailing newline.
inline std::string canonical_dump(const json& j) {
  std::string out;
  detail::canonical_dump_rec(j, out, 0);
  out += "\n";
  return out;
}

}  // namespace rapd
