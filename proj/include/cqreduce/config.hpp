#pragma once

// Flat dotted-key experiment configuration.
//
//   # comment
//   family.kind = deformed
//   family.epsilon = 0, 1, 0, 1
//
// Every key has a default; an empty file is the full default configuration.
// The canonical form lists every key once, in schema order, with values
// normalised (shortest round-trip reals, no redundant whitespace), so that
// parsing the canonical text reproduces it byte for byte.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cqreduce {

enum class ValueType {
  kText,        // free text
  kChoice,      // one of a fixed set of words
  kInteger,
  kReal,
  kIntegers,    // comma-separated, may be empty
  kReals,       // comma-separated, may be empty
  kRealLists,   // ';'-separated groups of comma-separated reals
};

struct FieldSpec {
  std::string_view key;
  ValueType type;
  std::string_view fallback;
  std::string_view doc;
  std::vector<std::string_view> choices{};
};

/// All recognised keys, in canonical order.
const std::vector<FieldSpec>& config_schema();

class Config {
 public:
  /// All defaults.
  Config();

  /// Throws Error(kConfig) naming the line and field on any problem.
  static Config parse(std::string_view text, std::string_view source = "<config>");
  static Config load(const std::filesystem::path& path);

  /// Replaces one value after normalising it; throws Error(kConfig).
  void set(std::string_view key, std::string_view value);
  /// "key=value" as given on the command line.
  void apply_override(std::string_view assignment);

  std::string canonical() const;
  /// FNV-1a 64 of the canonical text with output.dir blanked, as 16 hex digits.
  std::string hash() const;

  const std::string& raw(std::string_view key) const;
  std::string text(std::string_view key) const { return raw(key); }
  double real(std::string_view key) const;
  int integer(std::string_view key) const;
  std::vector<double> reals(std::string_view key) const;
  std::vector<int> integers(std::string_view key) const;
  std::vector<std::vector<double>> real_lists(std::string_view key) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace cqreduce
