#include "cqreduce/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "cqreduce/error.hpp"

namespace cqreduce {
namespace {

using StirlingTable = std::array<std::array<std::uint64_t, kTouchardMaxOrder + 1>,
                                 kTouchardMaxOrder + 1>;

StirlingTable build_stirling_table() {
  StirlingTable s{};
  s[0][0] = 1;
  for (int n = 1; n <= kTouchardMaxOrder; ++n) {
    for (int k = 1; k <= n; ++k) {
      s[n][k] = static_cast<std::uint64_t>(k) * s[n - 1][k] + s[n - 1][k - 1];
    }
  }
  return s;
}

const StirlingTable& stirling_table() {
  static const StirlingTable table = build_stirling_table();
  return table;
}

void require_envelope(int j, double x) {
  if (j < 0 || j > kTouchardMaxOrder || !(x >= 0.0) || x > kTouchardMaxArgument) {
    throw Error(ErrorKind::kEnvelope,
                fmt::format("Touchard T_{}({}) outside j <= {}, 0 <= x <= {}", j, x,
                            kTouchardMaxOrder, kTouchardMaxArgument));
  }
}

std::vector<double> trimmed(std::vector<double> eps) {
  while (eps.size() > 1 && eps.back() == 0.0) eps.pop_back();
  return eps;
}

void require_pairing(const FamilySpec& family, const SpectrumSpec& spec) {
  family.validate();
  spec.validate();
  if (spec.omega != family.omega || spec.hbar != family.hbar) {
    throw Error(ErrorKind::kInvalidParameter, "family and spectrum must share hbar and omega");
  }
  const auto eps = trimmed(spec.epsilon);
  if (family.kind == FamilyKind::kDeformed) {
    if (eps != trimmed(family.epsilon)) {
      throw Error(ErrorKind::kInvalidParameter,
                  "deformed family and spectrum must share epsilon");
    }
    return;
  }
  const bool harmonic = eps == std::vector<double>{0.0, 1.0} ||
                        eps == std::vector<double>{0.5, 1.0};
  if (!harmonic) {
    throw Error(ErrorKind::kInvalidParameter,
                "canonical family pairs with epsilon = (0, 1) or (1/2, 1)");
  }
}

// Point predicted by the reduced flow; deformed families rotate in the polar
// chart so the phase argument stays exact.
PhasePoint flowed_point(const FamilySpec& family, const PhasePoint& point, double t) {
  if (family.kind == FamilyKind::kDeformed) {
    return PhasePoint::polar(point.rho(), point.phi() - family.omega * t);
  }
  return predicted_flow(point, family.omega, t);
}

}  // namespace

std::uint64_t stirling2(int j, int k) {
  if (j < 0 || j > kTouchardMaxOrder) {
    throw Error(ErrorKind::kEnvelope, fmt::format("Stirling order {} outside 0..{}", j,
                                                  kTouchardMaxOrder));
  }
  if (k < 0 || k > j) return 0;
  return stirling_table()[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
}

double touchard(int j, double x) {
  require_envelope(j, x);
  double acc = 0.0;
  for (int k = j; k >= 0; --k) acc = acc * x + static_cast<double>(stirling2(j, k));
  return acc;
}

double touchard_series(int j, double x) {
  require_envelope(j, x);
  if (x == 0.0) return j == 0 ? 1.0 : 0.0;
  const long double lx = x;
  long double weight = std::exp(-lx);
  long double sum = j == 0 ? weight : 0.0L;
  for (int k = 1;; ++k) {
    weight *= lx / k;
    const long double term = weight * std::pow(static_cast<long double>(k), j);
    sum += term;
    if (k > x && term < 1e-22L * sum) break;
  }
  return static_cast<double>(sum);
}

double touchard_derivative(int j, double x) {
  require_envelope(j, x);
  double acc = 0.0;
  for (int k = j; k >= 1; --k) acc = acc * x + k * static_cast<double>(stirling2(j, k));
  return acc;
}

PhasePoint predicted_flow(const PhasePoint& point, double omega, double t) {
  const double c = std::cos(omega * t);
  const double s = std::sin(omega * t);
  return PhasePoint::cartesian(point.x() * c + point.p() * s, point.p() * c - point.x() * s);
}

FlowTrace flow_trace(const PhasePoint& initial, double omega, const std::vector<double>& times) {
  FlowTrace trace{initial, times, {}};
  trace.points.reserve(times.size());
  for (double t : times) trace.points.push_back(predicted_flow(initial, omega, t));
  return trace;
}

std::vector<double> period_times(double omega, int samples, double periods) {
  if (samples < 1 || !(omega > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "need omega > 0 and at least one sample");
  }
  const double span = periods * 2.0 * std::numbers::pi / omega;
  std::vector<double> t(static_cast<std::size_t>(samples), 0.0);
  for (int k = 0; k < samples && samples > 1; ++k) t[k] = span * k / (samples - 1);
  return t;
}

void PolarGrid::validate() const {
  if (rho_steps < 1 || phi_steps < 1 || !(rho_min > 0.0) || rho_max < rho_min) {
    throw Error(ErrorKind::kInvalidParameter, "invalid polar grid");
  }
}

std::vector<PhasePoint> PolarGrid::points() const {
  validate();
  std::vector<PhasePoint> out;
  for (int i = 0; i < rho_steps; ++i) {
    const double rho =
        rho_steps == 1 ? rho_min : rho_min + (rho_max - rho_min) * i / (rho_steps - 1);
    for (int k = 0; k < phi_steps; ++k) {
      out.push_back(PhasePoint::polar(rho, 2.0 * std::numbers::pi * k / phi_steps));
    }
  }
  return out;
}

InvarianceReport check_invariance(const FamilySpec& family, const SpectrumSpec& spec,
                                  const std::vector<PhasePoint>& points,
                                  const std::vector<double>& times) {
  require_pairing(family, spec);
  InvarianceReport report{points, times, {}, 0.0};
  report.infidelities.reserve(points.size() * times.size());
  for (const auto& point : points) {
    const TruncatedVector initial = family_state(family, point);
    for (double t : times) {
      const TruncatedVector evolved = evolve(initial, spec, t);
      const TruncatedVector predicted = family_state(family, flowed_point(family, point, t));
      const double infidelity = std::clamp(1.0 - std::abs(predicted.inner(evolved)), 0.0, 1.0);
      report.infidelities.push_back(infidelity);
      report.max_infidelity = std::max(report.max_infidelity, infidelity);
    }
  }
  return report;
}

ConstantsReport constants_check(const FamilySpec& family, const SpectrumSpec& spec,
                                const std::vector<int>& levels,
                                const std::vector<PhasePoint>& points,
                                const std::vector<double>& times) {
  require_pairing(family, spec);
  const int n = family.truncation;
  std::vector<MatrixOperator> projectors;
  for (int k : levels) projectors.push_back(projector(k, n));
  const MatrixOperator h = hamiltonian(spec, n);

  ConstantsReport report;
  report.levels = levels;
  report.level_drift.assign(levels.size(), 0.0);

  for (const auto& point : points) {
    const TruncatedVector base = family_state(family, point);
    std::vector<double> base_values;
    for (const auto& e : projectors) base_values.push_back(e.expectation(base).real());
    const double base_energy = h.expectation(base).real();

    for (double t : times) {
      const TruncatedVector moved = family_state(family, flowed_point(family, point, t));
      for (std::size_t k = 0; k < projectors.size(); ++k) {
        const double drift = std::fabs(projectors[k].expectation(moved).real() - base_values[k]);
        report.level_drift[k] = std::max(report.level_drift[k], drift);
        report.max_projector_drift = std::max(report.max_projector_drift, drift);
      }
      report.max_energy_drift =
          std::max(report.max_energy_drift, std::fabs(h.expectation(moved).real() - base_energy));
    }

    const auto f_h = [&](const PhasePoint& m) { return expectation(h, family, m).real(); };
    const Covector dh = differential(f_h, point);
    for (const auto& e : projectors) {
      const auto f_e = [&](const PhasePoint& m) { return expectation(e, family, m).real(); };
      const Covector de = differential(f_e, point);
      const double wedge = dh.value[0] * de.value[1] - dh.value[1] * de.value[0];
      report.max_wedge = std::max(report.max_wedge, std::fabs(wedge));
    }
  }
  return report;
}

double energy_deformed(double rho, const SpectrumSpec& spec) {
  spec.validate();
  if (spec.epsilon.size() > static_cast<std::size_t>(kTouchardMaxOrder) + 1) {
    throw Error(ErrorKind::kEnvelope, "spectrum degree exceeds the Touchard envelope");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < spec.epsilon.size(); ++j) {
    if (spec.epsilon[j] != 0.0) acc += spec.epsilon[j] * touchard(static_cast<int>(j), rho);
  }
  return spec.hbar_omega() * acc;
}

std::array<double, 2> generator_extract(const FamilySpec& family, const SpectrumSpec& spec,
                                        const PhasePoint& point, double dt, Chart chart) {
  require_pairing(family, spec);
  if (!(dt > 0.0) || spec.omega * dt > 1e-2) {
    throw Error(ErrorKind::kAccuracy,
                fmt::format("dt = {} is not small against 1/omega = {}", dt, 1.0 / spec.omega));
  }
  const PhasePoint ahead = flowed_point(family, point, dt);
  const PhasePoint behind = flowed_point(family, point, -dt);
  if (chart == Chart::kCartesian) {
    return {(ahead.x() - behind.x()) / (2.0 * dt), (ahead.p() - behind.p()) / (2.0 * dt)};
  }
  const double dphi = std::remainder(ahead.phi() - behind.phi(), 2.0 * std::numbers::pi);
  return {(ahead.rho() - behind.rho()) / (2.0 * dt), dphi / (2.0 * dt)};
}

namespace {

double max_normalised_residual(const std::vector<HamiltonianFitSample>& samples, double c) {
  double worst = 0.0;
  for (const auto& s : samples) {
    const double r0 = c * s.contracted[0] - s.energy_differential[0];
    const double r1 = c * s.contracted[1] - s.energy_differential[1];
    const double norm = std::hypot(s.energy_differential[0], s.energy_differential[1]);
    worst = std::max(worst, std::hypot(r0, r1) / norm);
  }
  return worst;
}

}  // namespace

HamiltonianFitReport hamiltonian_fit(const FamilySpec& family, const SpectrumSpec& spec,
                                     const std::vector<PhasePoint>& grid, double step) {
  require_pairing(family, spec);
  if (grid.empty()) throw Error(ErrorKind::kInvalidParameter, "empty fit grid");

  HamiltonianFitReport report;
  report.chart = Chart::kPolar;
  const auto f_h = [&spec](const PhasePoint& m) { return energy_deformed(m.rho(), spec); };
  const double dt = 1e-4 / spec.omega;

  for (const auto& point : grid) {
    if (point.rho() < kRhoMin + 10.0 * step) {
      throw Error(ErrorKind::kExcludedOrigin, "fit grid must avoid the rho_min neighbourhood");
    }
    const auto gamma = generator_extract(family, spec, point, dt, Chart::kPolar);
    const TensorSample tensor = pullback_hermitean(family, point, Chart::kPolar, step);
    if (std::fabs(tensor.omega_prime(0, 1)) < 1e-10) {
      throw Error(ErrorKind::kDegenerateStructure,
                  fmt::format("omega' vanishes at rho = {}", point.rho()));
    }
    HamiltonianFitSample sample;
    sample.rho = point.rho();
    sample.phi = point.phi();
    for (int b = 0; b < 2; ++b) {
      sample.contracted[b] =
          gamma[0] * tensor.omega_prime(0, b) + gamma[1] * tensor.omega_prime(1, b);
    }
    sample.energy_differential = differential(f_h, point, Chart::kPolar, step).value;
    report.samples.push_back(sample);
  }

  // The objective is convex in c; its minimiser lies between the smallest and
  // largest pointwise least-squares constants.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : report.samples) {
    const double vv = s.contracted[0] * s.contracted[0] + s.contracted[1] * s.contracted[1];
    const double vd = s.contracted[0] * s.energy_differential[0] +
                      s.contracted[1] * s.energy_differential[1];
    lo = std::min(lo, vd / vv);
    hi = std::max(hi, vd / vv);
  }
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  for (int iter = 0; iter < 200 && b - a > 1e-16 * std::max(1.0, std::fabs(b)); ++iter) {
    const double c1 = b - golden * (b - a);
    const double c2 = a + golden * (b - a);
    if (max_normalised_residual(report.samples, c1) <= max_normalised_residual(report.samples, c2)) {
      b = c2;
    } else {
      a = c1;
    }
  }
  report.c = 0.5 * (a + b);
  report.residual = max_normalised_residual(report.samples, report.c);
  for (auto& s : report.samples) {
    const double r0 = report.c * s.contracted[0] - s.energy_differential[0];
    const double r1 = report.c * s.contracted[1] - s.energy_differential[1];
    s.residual = std::hypot(r0, r1) / std::hypot(s.energy_differential[0], s.energy_differential[1]);
  }
  report.c_over_hbar = report.c / family.hbar;
  report.convention = fmt::format(
      "polar chart (rho, phi); h = (g + i omega')/2; Gamma = -omega d_phi; "
      "c * omega'(Gamma, .) = df_H with c = {:.17g} = {:.17g} hbar; "
      "c/hbar = 1 means Omega = hbar Omega' holds in this normalisation.",
      report.c, report.c_over_hbar);
  return report;
}

}  // namespace cqreduce
