#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli/config.h"

namespace dirinfo::cli {

struct RunOutcome {
  int exit_code = 0;      // 0 success, 1 solver or precondition failure
  nlohmann::json report;  // always populated
  std::string document;   // serialized report (JSON or sweep CSV)
  std::string error;      // message for stderr, empty on success
};

RunOutcome Run(const RunConfig& config);

/// Full command-line entry point. Exit codes: 0 success, 1 solver error,
/// 2 usage error.
int Main(const std::vector<std::string>& args, std::ostream& out,
         std::ostream& err);

}  // namespace dirinfo::cli
