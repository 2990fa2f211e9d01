#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace dirinfo::cli {

/// Canonical JSON: object keys sorted, two-space indent, floats as %.12g,
/// non-finite floats as null. Ends with a newline.
std::string EmitJson(const nlohmann::json& doc);

/// One header line plus one line per record. Missing or non-scalar fields
/// are left empty; numbers use %.12g.
std::string EmitCsv(const std::vector<nlohmann::json>& records,
                    const std::vector<std::string>& columns);

std::string FormatNumber(double x);

}  // namespace dirinfo::cli
