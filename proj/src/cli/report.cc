#include "cli/report.h"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace dirinfo::cli {
namespace {

using nlohmann::json;

void Write(const json& j, int indent, std::ostringstream& out) {
  const std::string pad(2 * (indent + 1), ' ');
  const std::string close(2 * indent, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      // nlohmann::json objects are ordered by key already.
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ",\n";
        first = false;
        out << pad << json(it.key()).dump() << ": ";
        Write(it.value(), indent + 1, out);
      }
      out << "\n" << close << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      bool scalars = true;
      for (const auto& e : j) scalars = scalars && !e.is_structured();
      if (scalars) {
        out << "[";
        for (size_t i = 0; i < j.size(); ++i) {
          if (i) out << ", ";
          Write(j[i], indent + 1, out);
        }
        out << "]";
        return;
      }
      out << "[\n";
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out << ",\n";
        out << pad;
        Write(j[i], indent + 1, out);
      }
      out << "\n" << close << "]";
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      out << (std::isfinite(x) ? FormatNumber(x) : std::string("null"));
      return;
    }
    default:
      out << j.dump();
  }
}

std::string CsvCell(const json& j) {
  if (j.is_number_float()) return FormatNumber(j.get<double>());
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    return quoted + "\"";
  }
  if (j.is_structured() || j.is_null()) return "";
  return j.dump();
}

}  // namespace

std::string FormatNumber(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x == 0.0 ? 0.0 : x);
  return buf;
}

std::string EmitJson(const json& doc) {
  std::ostringstream out;
  Write(doc, 0, out);
  out << "\n";
  return out.str();
}

std::string EmitCsv(const std::vector<json>& records,
                    const std::vector<std::string>& columns) {
  std::ostringstream out;
  for (size_t c = 0; c < columns.size(); ++c) {
    out << (c ? "," : "") << columns[c];
  }
  out << "\n";
  for (const auto& r : records) {
    for (size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ",";
      auto it = r.find(columns[c]);
      if (it != r.end()) out << CsvCell(*it);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace dirinfo::cli
