#pragma once

// Named experiments driven by a Config. Each run produces scalar metrics,
// tolerance checks and sample tables; write_artifacts serialises them as
// summary.json plus one CSV per table.

#include <deque>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cqreduce/config.hpp"

namespace cqreduce {

struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  std::string relation;  // "<", "<=", ">", ">="
  bool passed = false;
};

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ResultRecord {
  std::string experiment;
  std::string config_hash;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::pair<std::string, std::string>> notes;
  std::vector<Check> checks;
  std::deque<Table> tables;  // stable references while tables are being filled
  double duration_seconds = 0.0;

  bool passed() const;
  double metric(std::string_view name) const;
};

ResultRecord run_experiment(const Config& config);

/// summary.json contents; metrics are written as shortest round-trip doubles.
std::string summary_json(const ResultRecord& record, const Config& config);
/// Header row, comma-separated, LF endings, reals as %.17g.
std::string table_csv(const Table& table);

/// Writes summary.json and <table>.csv into `dir`, creating it if needed.
void write_artifacts(const ResultRecord& record, const Config& config,
                     const std::filesystem::path& dir);

}  // namespace cqreduce
