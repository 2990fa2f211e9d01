#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace dirinfo::cli {

enum class Command { kCheck, kFtfi, kCapacity, kNofeedback, kSimulate, kSweep };
enum class Units { kNats, kBits };
enum class Format { kJson, kCsv };

const char* ToString(Command c);
const char* ToString(Units u);
const char* ToString(Format f);

struct RunConfig {
  Command command = Command::kCapacity;
  std::string model_path;
  std::optional<double> kappa;
  std::optional<int> horizon;
  std::optional<double> s;  // fixed multiplier, skips the constraint search
  int steps = 100000;
  int seeds = 8;
  uint64_t first_seed = 1;
  double rate_epsilon = 0.02;
  std::optional<double> cost_epsilon;  // default 0.05 max(kappa, 1)
  std::string sweep_param = "kappa";   // kappa | C
  std::vector<double> sweep_values;
  std::optional<int> threads;
  Units units = Units::kNats;
  Format format = Format::kJson;
  std::string output;     // empty: standard output
  std::string trace_csv;  // simulate: first trace as CSV
  bool dump_config = false;

  bool operator==(const RunConfig&) const = default;
};

/// Bad command line or config file; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParseResult {
  RunConfig config;
  bool help = false;  // `text` holds the help or version message
  std::string text;
};

/// Flags override the `--config` file, which overrides defaults. Arguments
/// exclude the program name. Throws UsageError.
ParseResult ParseConfig(const std::vector<std::string>& args);

/// The resolved configuration as a config file (without dump_config).
nlohmann::json ConfigToJson(const RunConfig& config);

/// Applies the keys of a config document on top of `base`.
RunConfig ApplyConfigJson(const nlohmann::json& doc, RunConfig base);

}  // namespace dirinfo::cli
