// Runs each acceptance criterion through its experiment and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "cqreduce/config.hpp"
#include "cqreduce/experiments.hpp"

namespace fs = std::filesystem;
using namespace cqreduce;

namespace {

const fs::path kConfigDir = CQREDUCE_CONFIG_DIR;

struct Outcome {
  bool passed = false;
  std::string detail;
};

ResultRecord run(const std::string& file) { return run_experiment(Config::load(kConfigDir / file)); }

std::string failed_checks(const ResultRecord& r) {
  std::string out;
  for (const auto& c : r.checks) {
    if (!c.passed) out += fmt::format(" [{} = {:.3g} not {} {:.3g}]", c.name, c.value, c.relation, c.limit);
  }
  return out;
}

Outcome from_record(const ResultRecord& r, std::string detail) {
  return {r.passed(), detail + failed_checks(r)};
}

Outcome invariance(const std::string& file) {
  const auto r = run(file);
  return from_record(r, fmt::format("max infidelity {:.3g} over {} points x {} times", r.metric("max_infidelity"),
                                    r.metric("points"), r.metric("times")));
}

Outcome constants() {
  const auto r = run("constants.cfg");
  return from_record(r, fmt::format("projector drift {:.3g}, energy drift {:.3g}, wedge {:.3g}",
                                    r.metric("max_projector_drift"), r.metric("max_energy_drift"),
                                    r.metric("max_wedge")));
}

Outcome remark() {
  const auto r = run("remark_demo.cfg");
  return from_record(r, fmt::format("Lie error {:.3g}, Lambda error {:.3g}, max difference {:.4g}",
                                    r.metric("max_lie_error"), r.metric("max_lambda_error"),
                                    r.metric("max_difference")));
}

Outcome hamiltonian() {
  const auto r = run("hamiltonian_fit.cfg");
  return from_record(
      r, fmt::format("c = {:.12g} / {:.12g} / {:.12g}, spread {:.3g}, worst residual {:.3g}", r.metric("c_canonical"),
                     r.metric("c_deformed_a"), r.metric("c_deformed_b"), r.metric("c_relative_spread"),
                     std::max({r.metric("residual_canonical"), r.metric("residual_deformed_a"),
                               r.metric("residual_deformed_b")})));
}

Outcome energy() {
  const auto r = run("energy_profile.cfg");
  return from_record(r, fmt::format("energy difference {:.3g}, Touchard relative error {:.3g}, recurrence {:.3g}",
                                    r.metric("max_abs_difference"), r.metric("touchard_max_relative_error"),
                                    r.metric("touchard_max_recurrence_error")));
}

Outcome identity() {
  const auto r = run("identity_check.cfg");
  const bool shrinks = r.metric("deviation_check") < r.metric("deviation");
  Outcome out = from_record(r, fmt::format("deviation {:.3g} at R = 8, {:.3g} at R = 10", r.metric("deviation"),
                                           r.metric("deviation_check")));
  out.passed = out.passed && shrinks;
  return out;
}

Outcome ccr() {
  const auto r = run("identity_check.cfg");
  bool passed = true;
  for (const auto& c : r.checks) {
    if (c.name.starts_with("ccr_")) passed = passed && c.passed;
  }
  return {passed, fmt::format("max entry {:.3g}, corner relative error {:.3g}", r.metric("ccr_max_entry"),
                              r.metric("ccr_corner_relative_error"))};
}

Outcome madelung() {
  const auto r = run("wkb_residuals.cfg");
  return from_record(r, fmt::format("refinement ratios {:.4g} / {:.4g}, quantum-term slope {:.4g}",
                                    r.metric("phase_residual_ratio"), r.metric("amplitude_residual_ratio"),
                                    r.metric("quantum_term_slope")));
}

Outcome determinism() {
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(kConfigDir)) {
    if (entry.path().extension() != ".cfg") continue;
    const auto name = entry.path().filename().string();
    const auto config = Config::load(entry.path());
    auto a = run_experiment(config);
    auto b = run_experiment(config);
    a.duration_seconds = b.duration_seconds = 0.0;
    bool same = summary_json(a, config) == summary_json(b, config) && a.tables.size() == b.tables.size();
    for (std::size_t t = 0; same && t < a.tables.size(); ++t) {
      same = table_csv(a.tables[t]) == table_csv(b.tables[t]);
    }
    if (!same) return {false, fmt::format("outputs differ for {}", name)};
    ++compared;
  }
  return {compared > 0, fmt::format("summary.json and CSVs reproduced bit-for-bit for {} configurations", compared)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"canonical invariance", [] { return invariance("invariance_canonical.cfg"); }},
      {"deformed invariance", [] { return invariance("invariance_deformed.cfg"); }},
      {"constants of motion", constants},
      {"bracket counterexample", remark},
      {"Hamiltonian structure", hamiltonian},
      {"energy profile", energy},
      {"completeness", identity},
      {"truncated CCR", ccr},
      {"Madelung residuals", madelung},
      {"determinism", determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& [title, check] = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, fmt::format("threw: {}", e.what())};
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    if (!outcome.passed) ++failures;
    fmt::print("{} criterion {}: {}: {} ({:.2f} s)\n", outcome.passed ? "PASS" : "FAIL", i + 1, title,
               outcome.detail, elapsed.count());
    std::fflush(stdout);
  }
  return failures;
}
