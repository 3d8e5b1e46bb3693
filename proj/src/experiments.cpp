#include "cqreduce/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "cqreduce/coherent.hpp"
#include "cqreduce/dequantize.hpp"
#include "cqreduce/error.hpp"
#include "cqreduce/flow.hpp"
#include "cqreduce/fock.hpp"
#include "cqreduce/wkb.hpp"

namespace cqreduce {
namespace {

// Collects metrics, checks, notes and tables for one run.
class Recorder {
 public:
  explicit Recorder(ResultRecord& record) : record_(record) {}

  void metric(std::string name, double value) { record_.metrics.emplace_back(std::move(name), value); }
  void note(std::string name, std::string text) { record_.notes.emplace_back(std::move(name), std::move(text)); }

  void below(std::string name, double value, double limit) { add(std::move(name), value, limit, "<", value < limit); }
  void above(std::string name, double value, double limit) { add(std::move(name), value, limit, ">", value > limit); }
  void at_least(std::string name, double value, double limit) { add(std::move(name), value, limit, ">=", value >= limit); }

  Table& table(std::string name, std::vector<std::string> columns) {
    record_.tables.push_back(Table{std::move(name), std::move(columns), {}});
    return record_.tables.back();
  }

 private:
  void add(std::string name, double value, double limit, std::string relation, bool passed) {
    record_.checks.push_back(Check{std::move(name), value, limit, std::move(relation), passed});
  }

  ResultRecord& record_;
};

// Runs `build` and reports any library error as a configuration problem.
template <typename Build>
auto configured(Build&& build) {
  try {
    return build();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    throw Error(ErrorKind::kConfig, e.what());
  }
}

FamilySpec family_from(const Config& config) {
  return configured([&] {
    FamilySpec family;
    family.kind = config.text("family.kind") == "deformed" ? FamilyKind::kDeformed
                                                            : FamilyKind::kCanonical;
    family.epsilon = config.reals("family.epsilon");
    family.hbar = config.real("family.hbar");
    family.mass = config.real("family.mass");
    family.omega = config.real("family.omega");
    family.truncation = config.integer("family.truncation");
    family.validate();
    return family;
  });
}

SpectrumSpec spectrum_from(const Config& config, const FamilySpec& family) {
  return configured([&] {
    SpectrumSpec spec = family.matched_spectrum();
    if (auto eps = config.reals("spectrum.epsilon"); !eps.empty()) spec.epsilon = std::move(eps);
    spec.validate();
    return spec;
  });
}

// Deterministic uniform in [-1, 1) independent of the standard library's
// distribution implementations.
class Jitter {
 public:
  explicit Jitter(const Config& config)
      : engine_(static_cast<std::uint64_t>(config.integer("seed"))),
        amount_(config.real("grid.jitter")) {}

  double operator()(double spacing) {
    if (amount_ == 0.0) return 0.0;
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return amount_ * spacing * (2.0 * u - 1.0);
  }

 private:
  std::mt19937_64 engine_;
  double amount_;
};

GridSpec cartesian_grid(const Config& config) {
  return configured([&] {
    GridSpec grid;
    grid.x_min = config.real("grid.x_min");
    grid.x_max = config.real("grid.x_max");
    grid.x_steps = config.integer("grid.x_steps");
    grid.p_min = config.real("grid.p_min");
    grid.p_max = config.real("grid.p_max");
    grid.p_steps = config.integer("grid.p_steps");
    grid.validate();
    return grid;
  });
}

PolarGrid polar_grid(const Config& config) {
  return configured([&] {
    PolarGrid grid;
    grid.rho_min = config.real("grid.rho_min");
    grid.rho_max = config.real("grid.rho_max");
    grid.rho_steps = config.integer("grid.rho_steps");
    grid.phi_steps = config.integer("grid.phi_steps");
    grid.validate();
    return grid;
  });
}

bool use_polar(const Config& config, const FamilySpec& family) {
  const auto& chart = config.text("grid.chart");
  if (chart == "auto") return family.kind == FamilyKind::kDeformed;
  return chart == "polar";
}

std::vector<PhasePoint> sample_points(const Config& config, const FamilySpec& family) {
  Jitter jitter(config);
  std::vector<PhasePoint> out;
  if (use_polar(config, family)) {
    const PolarGrid grid = polar_grid(config);
    const double d_rho = grid.rho_steps > 1 ? (grid.rho_max - grid.rho_min) / (grid.rho_steps - 1) : 0.0;
    const double d_phi = 2.0 * std::numbers::pi / grid.phi_steps;
    for (const auto& p : grid.points()) {
      out.push_back(PhasePoint::polar(std::max(kRhoMin, p.rho() + jitter(d_rho)), p.phi() + jitter(d_phi)));
    }
  } else {
    const GridSpec grid = cartesian_grid(config);
    const double dx = grid.x_steps > 1 ? (grid.x_max - grid.x_min) / (grid.x_steps - 1) : 0.0;
    const double dp = grid.p_steps > 1 ? (grid.p_max - grid.p_min) / (grid.p_steps - 1) : 0.0;
    for (const auto& p : grid.points()) {
      out.push_back(PhasePoint::cartesian(p.x() + jitter(dx), p.p() + jitter(dp)));
    }
  }
  return out;
}

std::vector<double> sample_times(const Config& config, const FamilySpec& family) {
  const int samples = config.integer("time.samples");
  if (samples < 1) throw Error(ErrorKind::kConfig, "time.samples must be positive");
  return period_times(family.omega, samples, config.real("time.periods"));
}

double max_tail(const std::vector<PhasePoint>& points, int truncation) {
  double tail = 0.0;
  for (const auto& p : points) tail = std::max(tail, truncation_tail(p.rho(), truncation));
  return tail;
}

void run_invariance(const Config& config, Recorder& out) {
  const FamilySpec family = family_from(config);
  const SpectrumSpec spec = spectrum_from(config, family);
  const auto points = sample_points(config, family);
  const auto times = sample_times(config, family);

  const InvarianceReport report = check_invariance(family, spec, points, times);

  Table& table = out.table("invariance", {"x", "p", "rho", "phi", "t", "infidelity"});
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto& m = points[i];
      table.rows.push_back({m.x(), m.p(), m.rho(), m.phi(), times[k],
                            report.infidelities[i * times.size() + k]});
    }
  }
  out.metric("max_infidelity", report.max_infidelity);
  out.metric("max_truncation_tail", max_tail(points, family.truncation));
  out.metric("points", static_cast<double>(points.size()));
  out.metric("times", static_cast<double>(times.size()));
  out.below("max_infidelity", report.max_infidelity, config.real("tolerance.invariance"));
}

void run_constants(const Config& config, Recorder& out) {
  const FamilySpec family = family_from(config);
  const SpectrumSpec spec = spectrum_from(config, family);
  const auto points = sample_points(config, family);
  const auto times = sample_times(config, family);
  const auto levels = config.integers("constants.levels");
  if (levels.empty()) throw Error(ErrorKind::kConfig, "constants.levels is empty");
  for (int k : levels) {
    if (k < 0 || k > family.truncation) {
      throw Error(ErrorKind::kConfig, fmt::format("constants.levels entry {} outside 0..N", k));
    }
  }

  const ConstantsReport report = constants_check(family, spec, levels, points, times);

  Table& table = out.table("constants", {"level", "max_drift"});
  for (std::size_t i = 0; i < levels.size(); ++i) {
    table.rows.push_back({static_cast<double>(levels[i]), report.level_drift[i]});
  }
  out.metric("max_projector_drift", report.max_projector_drift);
  out.metric("max_energy_drift", report.max_energy_drift);
  out.metric("max_wedge", report.max_wedge);
  const double drift = config.real("tolerance.drift");
  out.below("max_projector_drift", report.max_projector_drift, drift);
  out.below("max_energy_drift", report.max_energy_drift, drift);
  out.below("max_wedge", report.max_wedge, config.real("tolerance.wedge"));
}

// Lambda(df_H, .) as a vector, compared with the generator of the rotation:
// returns <v, Gamma> / <Gamma, Gamma>.
double poisson_generator_ratio(const FamilySpec& family, const SpectrumSpec& spec,
                               const std::vector<PhasePoint>& points) {
  const MatrixOperator h = hamiltonian(spec, family.truncation);
  const PointFunction f_h = [&](const PhasePoint& m) { return expectation(h, family, m).real(); };
  const Eigen::Matrix2d lambda = canonical_poisson_tensor(family.hbar);
  double num = 0.0;
  double den = 0.0;
  for (const auto& m : points) {
    const PhasePoint point = PhasePoint::cartesian(m.x(), m.p());
    const Covector df = differential(f_h, point, Chart::kCartesian);
    const Eigen::Vector2d v = lambda.transpose() * Eigen::Vector2d(df.value[0], df.value[1]);
    const auto gamma = generator_extract(family, spec, point, 1e-5 / family.omega);
    num += v[0] * gamma[0] + v[1] * gamma[1];
    den += gamma[0] * gamma[0] + gamma[1] * gamma[1];
  }
  return num / den;
}

void run_hamiltonian_fit(const Config& config, Recorder& out) {
  const FamilySpec base = family_from(config);
  const PolarGrid grid = polar_grid(config);
  const double step = config.real("fit.step");
  if (!(step > 0.0)) throw Error(ErrorKind::kConfig, "fit.step must be positive");

  struct Member {
    std::string name;
    FamilySpec family;
  };
  std::vector<Member> members;
  FamilySpec canonical = base;
  canonical.kind = FamilyKind::kCanonical;
  canonical.epsilon = {0.0, 1.0};
  members.push_back({"canonical", canonical});
  for (const auto* key : {"fit.deformed_a", "fit.deformed_b"}) {
    FamilySpec deformed = base;
    deformed.kind = FamilyKind::kDeformed;
    deformed.epsilon = config.reals(key);
    configured([&] { deformed.validate(); return 0; });
    members.push_back({std::string(key).substr(4), deformed});
  }

  const auto points = grid.points();
  std::vector<double> constants;
  const double tolerance = config.real("tolerance.fit_residual");
  for (const auto& member : members) {
    const SpectrumSpec spec = member.family.matched_spectrum();
    const HamiltonianFitReport report = hamiltonian_fit(member.family, spec, points, step);
    Table& table = out.table(
        "hamiltonian_fit_" + member.name,
        {"rho", "phi", "contracted_rho", "contracted_phi", "df_rho", "df_phi", "residual"});
    for (const auto& s : report.samples) {
      table.rows.push_back({s.rho, s.phi, s.contracted[0], s.contracted[1],
                            s.energy_differential[0], s.energy_differential[1], s.residual});
    }
    out.metric("c_" + member.name, report.c);
    out.metric("c_over_hbar_" + member.name, report.c_over_hbar);
    out.metric("residual_" + member.name, report.residual);
    out.below("residual_" + member.name, report.residual, tolerance);
    if (member.name == "canonical") out.note("convention", report.convention);
    constants.push_back(report.c);
  }

  double spread = 0.0;
  for (double c : constants) spread = std::max(spread, std::abs(c - constants.front()) / std::abs(constants.front()));
  out.metric("c_relative_spread", spread);
  out.below("c_relative_spread", spread, config.real("tolerance.fit_agreement"));

  const double ratio = poisson_generator_ratio(canonical, canonical.matched_spectrum(), points);
  out.metric("poisson_generator_ratio", ratio);
  out.note("poisson_generator_ratio",
           "<Lambda(df_H, .), Gamma> / <Gamma, Gamma> on the canonical family with "
           "Lambda^{xp} = 1/(2 hbar); Gamma is the velocity of the rotation by -omega t");
}

void run_remark_demo(const Config& config, Recorder& out) {
  const FamilySpec family = family_from(config);
  if (family.kind != FamilyKind::kCanonical) {
    throw Error(ErrorKind::kConfig, "remark-demo needs family.kind = canonical");
  }
  const GridSpec grid = cartesian_grid(config);
  const RemarkReport report = remark_demo(family, grid);

  Table& table = out.table("remark", {"x", "p", "f_lie", "lambda_bracket", "difference",
                                      "closed_lie", "closed_lambda"});
  for (std::size_t i = 0; i < report.x.size(); ++i) {
    table.rows.push_back({report.x[i], report.p[i], report.f_lie[i], report.lambda_bracket[i],
                          report.difference[i], report.closed_lie[i], report.closed_lambda[i]});
  }
  out.metric("max_lie_error", report.max_lie_error);
  out.metric("max_lambda_error", report.max_lambda_error);
  out.metric("max_difference", report.max_difference);
  const double match = config.real("tolerance.remark_match");
  out.below("max_lie_error", report.max_lie_error, match);
  out.below("max_lambda_error", report.max_lambda_error, match);
  out.above("max_difference", report.max_difference,
            config.real("tolerance.remark_gap") / family.hbar);
}

void run_identity_check(const Config& config, Recorder& out) {
  const FamilySpec family = family_from(config);
  const int levels = config.integer("identity.levels");
  const double radius = config.real("identity.radius");
  const double radius_check = config.real("identity.radius_check");
  const int radial = config.integer("identity.radial_nodes");
  const int angular = config.integer("identity.angular_nodes");
  if (!(radius_check > radius)) {
    throw Error(ErrorKind::kConfig, "identity.radius_check must exceed identity.radius");
  }

  const auto resolve = [&](double r) {
    return configured([&] {
      return identity_resolution_check(levels, r, radial, angular, family.truncation);
    });
  };
  const IdentityResolution base = resolve(radius);
  const IdentityResolution wider = resolve(radius_check);

  Table& diag = out.table("identity_diagonal", {"level", "diagonal", "diagonal_check"});
  for (int n = 0; n <= levels; ++n) {
    diag.rows.push_back({static_cast<double>(n), base.diagonal[static_cast<std::size_t>(n)],
                         wider.diagonal[static_cast<std::size_t>(n)]});
  }
  out.metric("deviation", base.deviation);
  out.metric("deviation_check", wider.deviation);
  out.metric("deviation_refined", base.deviation_refined);
  out.metric("quadrature_error", base.quadrature_error);
  out.metric("under_resolved", base.under_resolved ? 1.0 : 0.0);
  out.metric("max_offdiagonal", base.max_offdiagonal);
  out.below("deviation", base.deviation, config.real("tolerance.identity"));
  out.below("deviation_check", wider.deviation, base.deviation);

  // Truncated canonical commutation relation.
  const int n = family.truncation;
  const auto [x, p] = configured([&] {
    return quadratures(n, family.hbar, family.mass, family.omega);
  });
  const ComplexMatrix bracket = (x * p - p * x).entries();
  const ComplexMatrix defect =
      bracket - Complex(0.0, family.hbar) * ComplexMatrix::Identity(n + 1, n + 1);
  double worst = 0.0;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      if (i == n && j == n) continue;
      worst = std::max(worst, std::abs(defect(i, j)));
    }
  }
  const Complex corner_expected(0.0, -family.hbar * n);
  const double corner_error = std::abs(bracket(n, n) - corner_expected) / std::abs(corner_expected);
  Table& ccr = out.table("ccr_diagonal", {"level", "re_bracket", "im_bracket"});
  for (int i = 0; i <= n; ++i) {
    ccr.rows.push_back({static_cast<double>(i), bracket(i, i).real(), bracket(i, i).imag()});
  }
  out.metric("ccr_max_entry", worst);
  out.metric("ccr_corner_relative_error", corner_error);
  out.below("ccr_max_entry", worst, config.real("tolerance.ccr_entries"));
  out.below("ccr_corner_relative_error", corner_error, config.real("tolerance.ccr_corner"));
}

struct TouchardStats {
  double max_relative_error = 0.0;
  double max_recurrence_error = 0.0;
  double max_t1_error = 0.0;
};

std::vector<double> touchard_abscissae(const Config& config) {
  const int steps = config.integer("touchard.x_steps");
  const double x_max = config.real("touchard.x_max");
  if (steps < 2 || !(x_max > 0.0) || x_max > kTouchardMaxArgument) {
    throw Error(ErrorKind::kConfig,
                fmt::format("touchard.x_steps must be >= 2 and touchard.x_max in (0, {}]",
                            kTouchardMaxArgument));
  }
  std::vector<double> xs;
  for (int i = 0; i < steps; ++i) xs.push_back(x_max * i / (steps - 1));
  return xs;
}

TouchardStats touchard_stats(int max_order, const std::vector<double>& xs) {
  TouchardStats stats;
  const auto binomial = [](int n, int k) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
  };
  for (double x : xs) {
    for (int j = 0; j <= max_order; ++j) {
      const double stirling = touchard(j, x);
      const double series = touchard_series(j, x);
      const double scale = std::max(std::abs(series), 1e-300);
      if (series != 0.0 || stirling != 0.0) {
        stats.max_relative_error = std::max(stats.max_relative_error, std::abs(stirling - series) / scale);
      }
      if (j < max_order) {
        double rhs = 0.0;
        for (int k = 0; k <= j; ++k) rhs += binomial(j, k) * touchard(k, x);
        rhs *= x;
        const double lhs = touchard(j + 1, x);
        if (lhs != 0.0) {
          stats.max_recurrence_error = std::max(stats.max_recurrence_error, std::abs(lhs - rhs) / std::abs(lhs));
        }
      }
    }
    stats.max_t1_error = std::max(stats.max_t1_error, std::abs(touchard(1, x) - x));
  }
  return stats;
}

int touchard_order(const Config& config) {
  const int order = config.integer("touchard.max_order");
  if (order < 0 || order > kTouchardMaxOrder) {
    throw Error(ErrorKind::kConfig,
                fmt::format("touchard.max_order must lie in 0..{}", kTouchardMaxOrder));
  }
  return order;
}

void run_touchard_table(const Config& config, Recorder& out) {
  const int order = touchard_order(config);
  const auto xs = touchard_abscissae(config);
  std::vector<std::string> columns{"x"};
  for (int j = 0; j <= order; ++j) columns.push_back(fmt::format("T_{}", j));
  Table& table = out.table("touchard", columns);
  for (double x : xs) {
    std::vector<double> row{x};
    for (int j = 0; j <= order; ++j) row.push_back(touchard(j, x));
    table.rows.push_back(std::move(row));
  }
  const TouchardStats stats = touchard_stats(order, xs);
  out.metric("max_relative_error", stats.max_relative_error);
  out.metric("max_recurrence_error", stats.max_recurrence_error);
  out.metric("max_t1_error", stats.max_t1_error);
  out.below("max_relative_error", stats.max_relative_error, config.real("tolerance.touchard"));
  out.below("max_recurrence_error", stats.max_recurrence_error,
            config.real("tolerance.touchard_recurrence"));
}

void run_energy_profile(const Config& config, Recorder& out) {
  const FamilySpec base = family_from(config);
  const auto sets = config.real_lists("energy.epsilon_sets");
  if (sets.empty()) throw Error(ErrorKind::kConfig, "energy.epsilon_sets is empty");
  const double rho_min = config.real("energy.rho_min");
  const double rho_max = config.real("energy.rho_max");
  const int steps = config.integer("energy.rho_steps");
  const double phi = config.real("energy.phi");
  if (steps < 2 || !(rho_max > rho_min) || rho_min < kRhoMin) {
    throw Error(ErrorKind::kConfig, "energy rho range must be increasing, above the origin cut, "
                                    "with at least two steps");
  }

  Table& table = out.table("energy_profile", {"set", "rho", "closed_form", "matrix", "difference", "tail"});
  double worst = 0.0;
  double tail = 0.0;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    FamilySpec family = base;
    family.kind = FamilyKind::kDeformed;
    family.epsilon = sets[s];
    configured([&] { family.validate(); return 0; });
    const SpectrumSpec spec = family.matched_spectrum();
    const MatrixOperator h = hamiltonian(spec, family.truncation);
    for (int i = 0; i < steps; ++i) {
      const double rho = rho_min + (rho_max - rho_min) * i / (steps - 1);
      const PhasePoint m = PhasePoint::polar(rho, phi);
      const double closed = energy_deformed(rho, spec);
      const double matrix = expectation(h, family, m).real();
      const double t = truncation_tail(rho, family.truncation);
      worst = std::max(worst, std::abs(closed - matrix));
      tail = std::max(tail, t);
      table.rows.push_back({static_cast<double>(s), rho, closed, matrix, closed - matrix, t});
    }
  }
  out.metric("max_abs_difference", worst);
  out.metric("max_truncation_tail", tail);
  out.below("max_abs_difference", worst, config.real("tolerance.energy"));

  const TouchardStats stats = touchard_stats(touchard_order(config), touchard_abscissae(config));
  out.metric("touchard_max_relative_error", stats.max_relative_error);
  out.metric("touchard_max_recurrence_error", stats.max_recurrence_error);
  out.below("touchard_max_relative_error", stats.max_relative_error, config.real("tolerance.touchard"));
  out.below("touchard_max_recurrence_error", stats.max_recurrence_error,
            config.real("tolerance.touchard_recurrence"));
}

struct WkbSetup {
  double x_min, x_max, dt, x0, p0, t0, threshold, floor;
  int nodes, slices;
};

WkbSetup wkb_setup(const Config& config) {
  WkbSetup w{config.real("wkb.x_min"), config.real("wkb.x_max"), config.real("wkb.dt"),
             config.real("wkb.x0"),    config.real("wkb.p0"),    config.real("wkb.t0"),
             config.real("wkb.node_threshold"), config.real("wkb.evaluation_floor"),
             config.integer("wkb.nodes"), config.integer("wkb.slices")};
  if (w.slices < 3) throw Error(ErrorKind::kConfig, "wkb.slices must be at least 3");
  if (!(w.dt > 0.0)) throw Error(ErrorKind::kConfig, "wkb.dt must be positive");
  return w;
}

void run_wkb_residuals(const Config& config, Recorder& out) {
  const FamilySpec family = family_from(config);
  const WkbSetup w = wkb_setup(config);
  const double omega = family.omega;

  const auto trajectory = [&](double hbar, double omega_h, int nodes, double dt, int slices) {
    return configured([&] {
      const WaveGrid1D grid = harmonic_grid(omega_h, hbar, family.mass, nodes, w.x_min, w.x_max);
      return harmonic_trajectory(grid, omega_h, w.x0, w.p0, w.t0, dt, slices);
    });
  };

  const WaveGrid1D coarse = trajectory(family.hbar, omega, w.nodes, w.dt, w.slices);
  const WaveGrid1D fine = trajectory(family.hbar, omega, 2 * w.nodes, w.dt / 2, 2 * w.slices - 1);
  const MadelungReport rc = madelung_residuals(coarse, w.threshold, w.floor);
  const MadelungReport rf = madelung_residuals(fine, w.threshold, w.floor);

  Table& conv = out.table("wkb_convergence",
                          {"nodes", "dt", "max_phase_residual", "l2_phase_residual",
                           "max_amplitude_residual", "l2_amplitude_residual",
                           "max_divergence_gap", "max_quantum_term", "max_classical_residual"});
  for (const auto& [grid, r] : {std::pair{&coarse, &rc}, std::pair{&fine, &rf}}) {
    conv.rows.push_back({static_cast<double>(grid->nodes), grid->times[1] - grid->times[0],
                         r->max_phase_residual, r->l2_phase_residual, r->max_amplitude_residual,
                         r->l2_amplitude_residual, r->max_divergence_gap, r->max_quantum_term,
                         r->max_classical_residual});
  }
  const double phase_ratio = rc.max_phase_residual / rf.max_phase_residual;
  const double amplitude_ratio = rc.max_amplitude_residual / rf.max_amplitude_residual;
  out.metric("max_phase_residual", rc.max_phase_residual);
  out.metric("max_amplitude_residual", rc.max_amplitude_residual);
  out.metric("max_phase_residual_refined", rf.max_phase_residual);
  out.metric("max_amplitude_residual_refined", rf.max_amplitude_residual);
  out.metric("phase_residual_ratio", phase_ratio);
  out.metric("amplitude_residual_ratio", amplitude_ratio);
  out.metric("max_divergence_gap", rc.max_divergence_gap);
  out.metric("max_quantum_term", rc.max_quantum_term);
  out.metric("max_classical_residual", rc.max_classical_residual);
  out.metric("evaluated_nodes", rc.evaluated_nodes);
  const double ratio = config.real("tolerance.wkb_ratio");
  out.at_least("phase_residual_ratio", phase_ratio, ratio);
  out.at_least("amplitude_residual_ratio", amplitude_ratio, ratio);
  // Without the quantum term the phase balance is off by at most that term.
  out.below("classical_excess", rc.max_classical_residual - rc.max_quantum_term,
            rc.max_phase_residual + 1e-12);

  // Amplitude profile, phase and quantum potential on the middle coarse slice.
  {
    const std::size_t mid = coarse.slices.size() / 2;
    const PolarFields fields = polar_decompose(coarse.slices[mid], coarse.hbar, w.threshold);
    const QuantumPotential q = quantum_potential(fields, coarse);
    Table& profile = out.table("wkb_profile", {"x", "amplitude", "phase", "quantum_potential", "masked"});
    for (int i = 0; i < coarse.nodes; ++i) {
      const auto k = static_cast<std::size_t>(i);
      profile.rows.push_back({coarse.x_at(i), fields.amplitude[k], fields.phase[k], q.values[k],
                              fields.node_mask[k] ? 1.0 : 0.0});
    }
  }

  // hbar scan with omega proportional to hbar, which keeps the Gaussian
  // width hbar / (m omega) and hence the amplitude profile fixed.
  const auto scan = config.reals("wkb.hbar_scan");
  if (scan.size() < 2) throw Error(ErrorKind::kConfig, "wkb.hbar_scan needs at least two values");
  Table& hs = out.table("wkb_hbar_scan", {"hbar", "omega", "max_quantum_term", "max_phase_residual",
                                          "max_classical_residual"});
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double hbar : scan) {
    if (!(hbar > 0.0)) throw Error(ErrorKind::kConfig, "wkb.hbar_scan values must be positive");
    const double omega_h = omega * hbar / family.hbar;
    const MadelungReport r =
        madelung_residuals(trajectory(hbar, omega_h, w.nodes, w.dt, w.slices), w.threshold, w.floor);
    hs.rows.push_back({hbar, omega_h, r.max_quantum_term, r.max_phase_residual, r.max_classical_residual});
    const double lx = std::log(hbar);
    const double ly = std::log(r.max_quantum_term);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double count = static_cast<double>(scan.size());
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  out.metric("quantum_term_slope", slope);
  out.below("quantum_term_slope_offset", std::abs(slope - config.real("tolerance.wkb_slope")),
            config.real("tolerance.wkb_slope_window"));

  // Split-step evolution of the same packet: norm conservation and agreement
  // with the exact solution.
  const int steps = config.integer("wkb.evolve_steps");
  if (steps < 1) throw Error(ErrorKind::kConfig, "wkb.evolve_steps must be positive");
  const WaveGrid1D start = trajectory(family.hbar, omega, w.nodes, w.dt, 1);
  const WaveGrid1D evolved = evolve_schrodinger(start, steps, w.dt, steps);
  const double n0 = start.norm(start.slices.front());
  const double n1 = evolved.norm(evolved.slices.back());
  const Samples exact =
      harmonic_coherent_packet(start, omega, w.x0, w.p0, w.t0 + steps * w.dt);
  double deviation = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    deviation = std::max(deviation, std::abs(exact[i] - evolved.slices.back()[i]));
  }
  out.metric("evolution_norm_drift", std::abs(n1 - n0));
  out.metric("evolution_max_deviation", deviation);
  out.below("evolution_norm_drift", std::abs(n1 - n0), config.real("tolerance.norm"));
}

using Runner = void (*)(const Config&, Recorder&);

const std::map<std::string, Runner, std::less<>>& runners() {
  static const std::map<std::string, Runner, std::less<>> table = {
      {"invariance", run_invariance},         {"constants", run_constants},
      {"hamiltonian-fit", run_hamiltonian_fit}, {"remark-demo", run_remark_demo},
      {"identity-check", run_identity_check}, {"touchard-table", run_touchard_table},
      {"wkb-residuals", run_wkb_residuals},   {"energy-profile", run_energy_profile},
  };
  return table;
}

}  // namespace

bool ResultRecord::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

double ResultRecord::metric(std::string_view name) const {
  for (const auto& [key, value] : metrics) {
    if (key == name) return value;
  }
  throw Error(ErrorKind::kIndex, fmt::format("no metric '{}'", name));
}

ResultRecord run_experiment(const Config& config) {
  const auto start = std::chrono::steady_clock::now();
  ResultRecord record;
  record.experiment = config.text("experiment");
  record.config_hash = config.hash();
  const auto it = runners().find(record.experiment);
  if (it == runners().end()) {
    throw Error(ErrorKind::kConfig, fmt::format("unknown experiment '{}'", record.experiment));
  }
  Recorder recorder(record);
  it->second(config, recorder);
  record.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

std::string summary_json(const ResultRecord& record, const Config& config) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["experiment"] = record.experiment;
  j["config_hash"] = record.config_hash;
  j["passed"] = record.passed();
  ordered_json metrics = ordered_json::object();
  for (const auto& [name, value] : record.metrics) metrics[name] = value;
  j["metrics"] = metrics;
  ordered_json checks = ordered_json::array();
  for (const auto& c : record.checks) {
    checks.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation},
                      {"limit", c.limit}, {"passed", c.passed}});
  }
  j["checks"] = checks;
  ordered_json notes = ordered_json::object();
  for (const auto& [name, text] : record.notes) notes[name] = text;
  j["notes"] = notes;
  ordered_json tables = ordered_json::array();
  for (const auto& t : record.tables) tables.push_back(t.name + ".csv");
  j["tables"] = tables;
  ordered_json echo = ordered_json::object();
  for (const auto& field : config_schema()) echo[std::string(field.key)] = config.raw(field.key);
  j["config"] = echo;
  j["duration_seconds"] = record.duration_seconds;
  return j.dump(2) + "\n";
}

std::string table_csv(const Table& table) {
  std::string out = fmt::format("{}\n", fmt::join(table.columns, ","));
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += fmt::format("{:.17g}", row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_artifacts(const ResultRecord& record, const Config& config,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto write = [&](const std::filesystem::path& path, const std::string& body) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    file << body;
    if (!file) throw Error(ErrorKind::kConfig, fmt::format("cannot write '{}'", path.string()));
  };
  for (const auto& table : record.tables) write(dir / (table.name + ".csv"), table_csv(table));
  write(dir / "summary.json", summary_json(record, config));
}

}  // namespace cqreduce
