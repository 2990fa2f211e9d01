#include "cli/config.h"

#include <CLI11.hpp>

#include <fstream>
#include <map>
#include <set>

#include "dirinfo/version.h"

namespace dirinfo::cli {
namespace {

using nlohmann::json;

const std::map<std::string, Command> kCommands = {
    {"check", Command::kCheck},       {"ftfi", Command::kFtfi},
    {"capacity", Command::kCapacity}, {"nofeedback", Command::kNofeedback},
    {"simulate", Command::kSimulate}, {"sweep", Command::kSweep}};

Command ParseCommand(const std::string& name) {
  auto it = kCommands.find(name);
  if (it == kCommands.end()) throw UsageError("unknown command '" + name + "'");
  return it->second;
}

Units ParseUnits(const std::string& name) {
  if (name == "nats") return Units::kNats;
  if (name == "bits") return Units::kBits;
  throw UsageError("--units must be nats or bits, got '" + name + "'");
}

Format ParseFormat(const std::string& name) {
  if (name == "json") return Format::kJson;
  if (name == "csv") return Format::kCsv;
  throw UsageError("--format must be json or csv, got '" + name + "'");
}

template <typename T>
T Get(const json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config file: '" + key + "' has the wrong type");
  }
}

void Validate(const RunConfig& c) {
  if (c.model_path.empty()) throw UsageError("missing --model");
  if (c.kappa && !(*c.kappa >= 0.0)) throw UsageError("--kappa must be >= 0");
  if (c.horizon && *c.horizon < 0) throw UsageError("--horizon must be >= 0");
  if (c.s && !(*c.s > 0.0)) throw UsageError("--s must be > 0");
  if (c.steps < 1) throw UsageError("--steps must be >= 1");
  if (c.seeds < 1) throw UsageError("--seeds must be >= 1");
  if (c.threads && *c.threads < 1) throw UsageError("--threads must be >= 1");
  if (!(c.rate_epsilon > 0.0)) throw UsageError("--rate-epsilon must be > 0");
  if (c.cost_epsilon && !(*c.cost_epsilon > 0.0)) {
    throw UsageError("--cost-epsilon must be > 0");
  }
  if (c.format == Format::kCsv && c.command != Command::kSweep) {
    throw UsageError("--format csv is only available for sweep");
  }
  if (c.s && (c.command == Command::kCheck || c.command == Command::kNofeedback ||
              c.command == Command::kSweep)) {
    throw UsageError(std::string("--s conflicts with command ") +
                     ToString(c.command));
  }
  if (c.command == Command::kSweep) {
    if (c.sweep_values.empty()) throw UsageError("sweep needs --values");
    if (c.sweep_param != "kappa" && c.sweep_param != "C") {
      throw UsageError("--param must be kappa or C");
    }
    if (c.sweep_param == "kappa" && c.kappa) {
      throw UsageError("--kappa conflicts with a kappa sweep");
    }
  } else if (!c.sweep_values.empty()) {
    throw UsageError("--values is only valid for sweep");
  }
  if (!c.trace_csv.empty() && c.command != Command::kSimulate) {
    throw UsageError("--trace-csv is only valid for simulate");
  }
}

}  // namespace

const char* ToString(Command c) {
  for (const auto& [name, value] : kCommands) {
    if (value == c) return name.c_str();
  }
  return "?";
}

const char* ToString(Units u) { return u == Units::kBits ? "bits" : "nats"; }
const char* ToString(Format f) { return f == Format::kCsv ? "csv" : "json"; }

RunConfig ApplyConfigJson(const json& doc, RunConfig c) {
  static const std::set<std::string> kKeys = {
      "command", "model",  "kappa",  "horizon",      "s",
      "steps",   "seeds",  "seed",   "rate_epsilon", "cost_epsilon",
      "param",   "values", "threads", "units",       "format",
      "output",  "trace_csv"};
  if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.count(key)) {
      throw UsageError("config file: unknown key '" + key + "'");
    }
  }
  if (doc.contains("command")) c.command = ParseCommand(Get<std::string>(doc, "command"));
  if (doc.contains("model")) c.model_path = Get<std::string>(doc, "model");
  if (doc.contains("kappa")) c.kappa = Get<double>(doc, "kappa");
  if (doc.contains("horizon")) c.horizon = Get<int>(doc, "horizon");
  if (doc.contains("s")) c.s = Get<double>(doc, "s");
  if (doc.contains("steps")) c.steps = Get<int>(doc, "steps");
  if (doc.contains("seeds")) c.seeds = Get<int>(doc, "seeds");
  if (doc.contains("seed")) c.first_seed = Get<uint64_t>(doc, "seed");
  if (doc.contains("rate_epsilon")) c.rate_epsilon = Get<double>(doc, "rate_epsilon");
  if (doc.contains("cost_epsilon")) c.cost_epsilon = Get<double>(doc, "cost_epsilon");
  if (doc.contains("param")) c.sweep_param = Get<std::string>(doc, "param");
  if (doc.contains("values")) c.sweep_values = Get<std::vector<double>>(doc, "values");
  if (doc.contains("threads")) c.threads = Get<int>(doc, "threads");
  if (doc.contains("units")) c.units = ParseUnits(Get<std::string>(doc, "units"));
  if (doc.contains("format")) c.format = ParseFormat(Get<std::string>(doc, "format"));
  if (doc.contains("output")) c.output = Get<std::string>(doc, "output");
  if (doc.contains("trace_csv")) c.trace_csv = Get<std::string>(doc, "trace_csv");
  return c;
}

json ConfigToJson(const RunConfig& c) {
  json doc;
  doc["command"] = ToString(c.command);
  doc["model"] = c.model_path;
  if (c.kappa) doc["kappa"] = *c.kappa;
  if (c.horizon) doc["horizon"] = *c.horizon;
  if (c.s) doc["s"] = *c.s;
  doc["steps"] = c.steps;
  doc["seeds"] = c.seeds;
  doc["seed"] = c.first_seed;
  doc["rate_epsilon"] = c.rate_epsilon;
  if (c.cost_epsilon) doc["cost_epsilon"] = *c.cost_epsilon;
  doc["param"] = c.sweep_param;
  if (!c.sweep_values.empty()) doc["values"] = c.sweep_values;
  if (c.threads) doc["threads"] = *c.threads;
  doc["units"] = ToString(c.units);
  doc["format"] = ToString(c.format);
  if (!c.output.empty()) doc["output"] = c.output;
  if (!c.trace_csv.empty()) doc["trace_csv"] = c.trace_csv;
  return doc;
}

ParseResult ParseConfig(const std::vector<std::string>& args) {
  CLI::App app{"Feedback capacity of Gaussian linear channels with memory",
               "dirinfo"};
  app.set_version_flag("--version", std::string(kVersion));

  std::string command, model, units, format, output, config_path, param,
      trace_csv;
  double kappa = 0, s = 0, rate_eps = 0, cost_eps = 0;
  int horizon = 0, steps = 0, seeds = 0, threads = 0;
  uint64_t seed = 0;
  std::vector<double> values;
  bool dump = false;

  auto* o_command = app.add_option(
      "command", command, "check | ftfi | capacity | nofeedback | simulate | sweep");
  auto* o_model = app.add_option("--model", model, "model JSON file");
  auto* o_kappa = app.add_option("--kappa", kappa, "power budget override");
  auto* o_horizon = app.add_option("--horizon", horizon, "horizon n override");
  auto* o_s = app.add_option("--s", s, "fixed Lagrange multiplier");
  auto* o_steps = app.add_option("--steps", steps, "simulation length");
  auto* o_seeds = app.add_option("--seeds", seeds, "number of simulated traces");
  auto* o_seed = app.add_option("--seed", seed, "first seed");
  auto* o_rate_eps =
      app.add_option("--rate-epsilon", rate_eps, "rate tolerance, nats");
  auto* o_cost_eps = app.add_option("--cost-epsilon", cost_eps, "cost tolerance");
  auto* o_param = app.add_option("--param", param, "sweep parameter: kappa | C");
  auto* o_values = app.add_option("--values", values, "sweep grid")
                       ->delimiter(',');
  auto* o_threads = app.add_option("--threads", threads, "worker threads");
  auto* o_units = app.add_option("--units", units, "nats | bits");
  auto* o_format = app.add_option("--format", format, "json | csv");
  auto* o_output = app.add_option("--output", output, "output file");
  auto* o_trace = app.add_option("--trace-csv", trace_csv,
                                 "simulate: write the first trace as CSV");
  app.add_option("--config", config_path, "JSON config file");
  app.add_flag("--dump-config", dump, "print the resolved config and exit");

  std::vector<const char*> argv{"dirinfo"};
  for (const auto& a : args) argv.push_back(a.c_str());
  ParseResult result;
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    result.help = true;
    result.text = app.help();
    return result;
  } catch (const CLI::CallForVersion&) {
    result.help = true;
    result.text = std::string(kVersion) + "\n";
    return result;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunConfig c;
  bool have_command = false;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot open config file '" + config_path + "'");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError("malformed JSON in config file: " + std::string(e.what()));
    }
    c = ApplyConfigJson(doc, c);
    have_command = doc.contains("command");
  }
  if (o_command->count()) {
    c.command = ParseCommand(command);
    have_command = true;
  }
  if (!have_command) throw UsageError("missing command");
  if (o_model->count()) c.model_path = model;
  if (o_kappa->count()) c.kappa = kappa;
  if (o_horizon->count()) c.horizon = horizon;
  if (o_s->count()) c.s = s;
  if (o_steps->count()) c.steps = steps;
  if (o_seeds->count()) c.seeds = seeds;
  if (o_seed->count()) c.first_seed = seed;
  if (o_rate_eps->count()) c.rate_epsilon = rate_eps;
  if (o_cost_eps->count()) c.cost_epsilon = cost_eps;
  if (o_param->count()) c.sweep_param = param;
  if (o_values->count()) c.sweep_values = values;
  if (o_threads->count()) c.threads = threads;
  if (o_units->count()) c.units = ParseUnits(units);
  if (o_format->count()) c.format = ParseFormat(format);
  if (o_output->count()) c.output = output;
  if (o_trace->count()) c.trace_csv = trace_csv;
  c.dump_config = dump;
  Validate(c);
  result.config = c;
  return result;
}

}  // namespace dirinfo::cli
