#include "cqreduce/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cqreduce/error.hpp"

namespace cqreduce {
namespace {

using enum ValueType;

const std::vector<FieldSpec> kSchema = {
    {"experiment", kChoice, "invariance", "experiment to run",
     {"invariance", "constants", "hamiltonian-fit", "remark-demo", "identity-check",
      "touchard-table", "wkb-residuals", "energy-profile"}},
    {"seed", kInteger, "0", "seed for grid jitter"},
    {"output.dir", kText, "out", "directory receiving summary.json and the CSV tables"},

    {"family.kind", kChoice, "canonical", "coherent-state family", {"canonical", "deformed"}},
    {"family.epsilon", kReals, "0,1", "phase polynomial s(n) = sum_j eps_j n^j (deformed)"},
    {"family.hbar", kReal, "1", "Planck constant"},
    {"family.mass", kReal, "1", "oscillator mass"},
    {"family.omega", kReal, "1", "oscillator frequency"},
    {"family.truncation", kInteger, "64", "highest Fock level N"},
    {"spectrum.epsilon", kReals, "", "level polynomial of H; empty uses the family's"},

    {"grid.chart", kChoice, "auto", "sample grid: auto picks cartesian for canonical families",
     {"auto", "cartesian", "polar"}},
    {"grid.x_min", kReal, "-2", ""},
    {"grid.x_max", kReal, "2", ""},
    {"grid.x_steps", kInteger, "9", ""},
    {"grid.p_min", kReal, "-2", ""},
    {"grid.p_max", kReal, "2", ""},
    {"grid.p_steps", kInteger, "9", ""},
    {"grid.rho_min", kReal, "0.5", ""},
    {"grid.rho_max", kReal, "4", ""},
    {"grid.rho_steps", kInteger, "8", ""},
    {"grid.phi_steps", kInteger, "8", ""},
    {"grid.jitter", kReal, "0", "uniform jitter as a fraction of the grid spacing"},

    {"time.samples", kInteger, "16", "instants per run, both ends included"},
    {"time.periods", kReal, "1", "time span in periods 2 pi / omega"},

    {"constants.levels", kIntegers, "0,1,2,5", "projector levels k tracked along the flow"},

    {"fit.step", kReal, "1e-4", "initial finite-difference step"},
    {"fit.deformed_a", kReals, "0,0,1", "first deformed family fitted alongside the canonical one"},
    {"fit.deformed_b", kReals, "0,1,0,1", "second deformed family"},

    {"identity.levels", kInteger, "10", "block 0..K compared with the identity"},
    {"identity.radius", kReal, "8", "integration radius R"},
    {"identity.radius_check", kReal, "10", "larger radius for the monotonicity check"},
    {"identity.radial_nodes", kInteger, "200", ""},
    {"identity.angular_nodes", kInteger, "256", ""},

    {"touchard.max_order", kInteger, "10", "largest j tabulated"},
    {"touchard.x_max", kReal, "10", ""},
    {"touchard.x_steps", kInteger, "101", ""},

    {"energy.rho_min", kReal, "0.05", ""},
    {"energy.rho_max", kReal, "6", ""},
    {"energy.rho_steps", kInteger, "60", ""},
    {"energy.phi", kReal, "0.3", "angle of the sampled ray"},
    {"energy.epsilon_sets", kRealLists, "0,1;0.5,1;0,0,1;0,1,0,1;0.25,-0.5,0.125,0.0625",
     "level polynomials compared"},

    {"wkb.x_min", kReal, "-20", ""},
    {"wkb.x_max", kReal, "20", ""},
    {"wkb.nodes", kInteger, "1024", "coarse grid size, power of two"},
    {"wkb.dt", kReal, "1e-3", "coarse time step"},
    {"wkb.x0", kReal, "2", "packet centre at t = 0"},
    {"wkb.p0", kReal, "0", "packet momentum at t = 0"},
    {"wkb.t0", kReal, "0.5", "first sampled instant"},
    {"wkb.slices", kInteger, "5", "coarse slices; the refined run covers the same window"},
    {"wkb.hbar_scan", kReals, "1,0.5,0.25", "hbar values, omega scaled with hbar"},
    {"wkb.node_threshold", kReal, "1e-8", "relative amplitude below which nodes are masked"},
    {"wkb.evaluation_floor", kReal, "1e-4", "relative amplitude below which residuals are not scored"},
    {"wkb.evolve_steps", kInteger, "1000", "split-step steps for the norm check"},

    {"tolerance.invariance", kReal, "1e-12", "max infidelity"},
    {"tolerance.drift", kReal, "1e-12", "max drift of f_{E_k} and f_H"},
    {"tolerance.wedge", kReal, "1e-8", "max |det(df_H, df_{E_k})|"},
    {"tolerance.remark_match", kReal, "1e-8", "closed-form agreement"},
    {"tolerance.remark_gap", kReal, "0.1", "min bracket difference in units of 1/hbar"},
    {"tolerance.fit_residual", kReal, "1e-6", ""},
    {"tolerance.fit_agreement", kReal, "1e-6", "relative spread of c across families"},
    {"tolerance.energy", kReal, "1e-10", "closed form vs matrix expectation"},
    {"tolerance.touchard", kReal, "1e-12", "Stirling vs series, relative"},
    {"tolerance.touchard_recurrence", kReal, "1e-11", ""},
    {"tolerance.identity", kReal, "1e-6", "max deviation from the identity"},
    {"tolerance.ccr_entries", kReal, "1e-13", ""},
    {"tolerance.ccr_corner", kReal, "1e-10", "relative"},
    {"tolerance.wkb_ratio", kReal, "3.5", "min residual reduction under refinement"},
    {"tolerance.wkb_slope", kReal, "2", "expected log-log slope of the quantum term"},
    {"tolerance.wkb_slope_window", kReal, "0.05", ""},
    {"tolerance.norm", kReal, "1e-10", "norm drift of the split-step solver"},
};

const FieldSpec* find_field(std::string_view key) {
  const auto it = std::find_if(kSchema.begin(), kSchema.end(),
                               [&](const FieldSpec& f) { return f.key == key; });
  return it == kSchema.end() ? nullptr : &*it;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && end == s.data() + s.size();
}

std::string bad_value(const FieldSpec& field, std::string_view value, std::string_view what) {
  return fmt::format("field '{}': cannot read '{}' as {}", field.key, value, what);
}

std::string normalise_reals(const FieldSpec& field, std::string_view value) {
  if (value.empty()) return {};
  std::vector<std::string> parts;
  for (auto item : split(value, ',')) {
    double v = 0.0;
    if (!parse_number(item, v) || !std::isfinite(v)) {
      throw Error(ErrorKind::kConfig, bad_value(field, item, "a finite real"));
    }
    parts.push_back(fmt::format("{}", v));
  }
  return fmt::format("{}", fmt::join(parts, ","));
}

std::string normalise(const FieldSpec& field, std::string_view value) {
  switch (field.type) {
    case kText:
      return std::string(value);
    case kChoice:
      if (std::find(field.choices.begin(), field.choices.end(), value) == field.choices.end()) {
        throw Error(ErrorKind::kConfig,
                    fmt::format("field '{}': '{}' is not one of {}", field.key, value,
                                fmt::join(field.choices, ", ")));
      }
      return std::string(value);
    case kInteger: {
      long long v = 0;
      if (!parse_number(value, v) || v < std::numeric_limits<int>::min() ||
          v > std::numeric_limits<int>::max()) {
        throw Error(ErrorKind::kConfig, bad_value(field, value, "an integer"));
      }
      return fmt::format("{}", v);
    }
    case kReal: {
      double v = 0.0;
      if (!parse_number(value, v) || !std::isfinite(v)) {
        throw Error(ErrorKind::kConfig, bad_value(field, value, "a finite real"));
      }
      return fmt::format("{}", v);
    }
    case kIntegers: {
      if (value.empty()) return {};
      std::vector<long long> items;
      for (auto item : split(value, ',')) {
        long long v = 0;
        if (!parse_number(item, v)) throw Error(ErrorKind::kConfig, bad_value(field, item, "an integer"));
        items.push_back(v);
      }
      return fmt::format("{}", fmt::join(items, ","));
    }
    case kReals:
      return normalise_reals(field, value);
    case kRealLists: {
      if (value.empty()) return {};
      std::vector<std::string> groups;
      for (auto group : split(value, ';')) {
        if (group.empty()) throw Error(ErrorKind::kConfig, bad_value(field, value, "';'-separated lists"));
        groups.push_back(normalise_reals(field, group));
      }
      return fmt::format("{}", fmt::join(groups, ";"));
    }
  }
  return std::string(value);
}

}  // namespace

const std::vector<FieldSpec>& config_schema() { return kSchema; }

Config::Config() {
  for (const auto& field : kSchema) values_.emplace(field.key, normalise(field, field.fallback));
}

Config Config::parse(std::string_view text, std::string_view source) {
  Config config;
  std::vector<std::string> seen;
  int line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('\n', start), text.size());
    ++line_number;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto where = [&](const std::string& what) {
      return fmt::format("{}:{}: {}", source, line_number, what);
    };
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::kConfig, where(fmt::format("expected 'key = value', got '{}'", line)));
    }
    const std::string key(trim(line.substr(0, eq)));
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw Error(ErrorKind::kConfig, where(fmt::format("field '{}' given twice", key)));
    }
    seen.push_back(key);
    try {
      config.set(key, trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      // Drop the kind prefix from the message; the caller only needs position and field.
      std::string message = e.what();
      message.erase(0, message.find(": ") + 2);
      throw Error(ErrorKind::kConfig, where(message));
    }
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfig, fmt::format("cannot open config '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

void Config::set(std::string_view key, std::string_view value) {
  const FieldSpec* field = find_field(key);
  if (field == nullptr) throw Error(ErrorKind::kConfig, fmt::format("unknown field '{}'", key));
  values_[std::string(key)] = normalise(*field, trim(value));
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorKind::kConfig,
                fmt::format("override '{}' is not of the form key=value", assignment));
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& field : kSchema) {
    const auto& value = values_.find(field.key)->second;
    out += value.empty() ? fmt::format("{} =\n", field.key)
                         : fmt::format("{} = {}\n", field.key, value);
  }
  return out;
}

std::string Config::hash() const {
  Config placed = *this;
  placed.values_["output.dir"].clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : placed.canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

const std::string& Config::raw(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorKind::kConfig, fmt::format("unknown field '{}'", key));
  return it->second;
}

double Config::real(std::string_view key) const {
  double v = 0.0;
  parse_number(std::string_view(raw(key)), v);
  return v;
}

int Config::integer(std::string_view key) const {
  int v = 0;
  parse_number(std::string_view(raw(key)), v);
  return v;
}

std::vector<double> Config::reals(std::string_view key) const {
  std::vector<double> out;
  const auto& value = raw(key);
  if (value.empty()) return out;
  for (auto item : split(value, ',')) {
    double v = 0.0;
    parse_number(item, v);
    out.push_back(v);
  }
  return out;
}

std::vector<int> Config::integers(std::string_view key) const {
  std::vector<int> out;
  const auto& value = raw(key);
  if (value.empty()) return out;
  for (auto item : split(value, ',')) {
    int v = 0;
    parse_number(item, v);
    out.push_back(v);
  }
  return out;
}

std::vector<std::vector<double>> Config::real_lists(std::string_view key) const {
  std::vector<std::vector<double>> out;
  const auto& value = raw(key);
  if (value.empty()) return out;
  for (auto group : split(value, ';')) {
    std::vector<double> items;
    for (auto item : split(group, ',')) {
      double v = 0.0;
      parse_number(item, v);
      items.push_back(v);
    }
    out.push_back(std::move(items));
  }
  return out;
}

}  // namespace cqreduce
