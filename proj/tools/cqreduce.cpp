// cqreduce <experiment> [--config <path>] [--out <dir>] [--override key=value ...]
// cqreduce validate [--config <path>] [--override key=value ...]
//
// Exit status: 0 all checks passed, 1 a tolerance check failed,
// 2 usage or configuration error, 3 internal error.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cqreduce/config.hpp"
#include "cqreduce/error.hpp"
#include "cqreduce/experiments.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kToleranceFailure = 1;
constexpr int kUsageError = 2;
constexpr int kInternalError = 3;

std::vector<std::string> command_names() {
  std::vector<std::string> names{"validate"};
  for (const auto& choice : cqreduce::config_schema().front().choices) names.emplace_back(choice);
  return names;
}

// Errors raised by parameter checks mean the configuration asked for something
// outside the valid domain.
bool is_configuration_problem(cqreduce::ErrorKind kind) {
  using cqreduce::ErrorKind;
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidParameter:
    case ErrorKind::kInvalidTruncation:
    case ErrorKind::kTruncationInsufficient:
    case ErrorKind::kExcludedOrigin:
    case ErrorKind::kEnvelope:
      return true;
    default:
      return false;
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Coherent-state reduction experiments"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  app.add_option("command", command, "experiment name, or 'validate'")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("--config,-c", config_path, "configuration file (defaults apply if omitted)");
  app.add_option("--out,-o", out_dir, "output directory (overrides output.dir)");
  app.add_option("--override", overrides, "key=value, may be repeated")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsageError;
  }

  cqreduce::Config config =
      config_path.empty() ? cqreduce::Config() : cqreduce::Config::load(config_path);
  for (const auto& assignment : overrides) config.apply_override(assignment);

  if (command == "validate") {
    std::fputs(config.canonical().c_str(), stdout);
    return kPass;
  }

  config.set("experiment", command);
  if (!out_dir.empty()) config.set("output.dir", out_dir);

  const cqreduce::ResultRecord record = cqreduce::run_experiment(config);
  cqreduce::write_artifacts(record, config, config.text("output.dir"));

  for (const auto& check : record.checks) {
    fmt::print("{:<4} {} = {:.6e} {} {:.6e}\n", check.passed ? "ok" : "FAIL", check.name,
               check.value, check.relation, check.limit);
  }
  fmt::print("{} {} ({:.2f} s) -> {}\n", record.experiment, record.passed() ? "passed" : "FAILED",
             record.duration_seconds, config.text("output.dir"));
  return record.passed() ? kPass : kToleranceFailure;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cqreduce::Error& e) {
    fmt::print(stderr, "cqreduce: {}\n", e.what());
    return is_configuration_problem(e.kind()) ? kUsageError : kInternalError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "cqreduce: internal error: {}\n", e.what());
    return kInternalError;
  }
}
