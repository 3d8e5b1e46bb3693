#pragma once

// Reduction of the unitary dynamics to a flow on the plane: invariance of
// the immersed family, constants of motion, Touchard energies and the
// Hamiltonian structure of the induced rotation.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cqreduce/coherent.hpp"
#include "cqreduce/dequantize.hpp"
#include "cqreduce/fock.hpp"

namespace cqreduce {

inline constexpr int kTouchardMaxOrder = 20;
inline constexpr double kTouchardMaxArgument = 50.0;

/// Stirling numbers of the second kind, exact for j <= 20.
std::uint64_t stirling2(int j, int k);

/// T_j(x) = sum_k S(j,k) x^k.
double touchard(int j, double x);
double touchard_derivative(int j, double x);
/// e^{-x} sum_k x^k k^j / k!, summed directly in extended precision.
double touchard_series(int j, double x);

/// Rotation by -omega*t: (x cos wt + p sin wt, p cos wt - x sin wt).
PhasePoint predicted_flow(const PhasePoint& point, double omega, double t);

struct FlowTrace {
  PhasePoint initial;
  std::vector<double> times;
  std::vector<PhasePoint> points;
};

FlowTrace flow_trace(const PhasePoint& initial, double omega, const std::vector<double>& times);

/// n equally spaced instants covering [0, periods * 2pi/omega], both ends included.
std::vector<double> period_times(double omega, int samples = 16, double periods = 1.0);

struct PolarGrid {
  double rho_min = 0.5;
  double rho_max = 4.0;
  int rho_steps = 8;
  int phi_steps = 8;

  void validate() const;
  /// Built in the polar chart; phi_k = 2 pi k / phi_steps.
  std::vector<PhasePoint> points() const;
};

struct InvarianceReport {
  std::vector<PhasePoint> points;
  std::vector<double> times;
  std::vector<double> infidelities;  // index = point * times.size() + time
  double max_infidelity = 0.0;
};

/// Compares U_t|m> with the family state at the flowed point; the global
/// phase is discarded through |<.|.>|.
InvarianceReport check_invariance(const FamilySpec& family, const SpectrumSpec& spec,
                                  const std::vector<PhasePoint>& points,
                                  const std::vector<double>& times);

struct ConstantsReport {
  std::vector<int> levels;
  std::vector<double> level_drift;  // max |f_{E_k}(gamma_t m) - f_{E_k}(m)| per level
  double max_projector_drift = 0.0;
  double max_energy_drift = 0.0;
  double max_wedge = 0.0;  // max |det(df_H, df_{E_k})|
};

ConstantsReport constants_check(const FamilySpec& family, const SpectrumSpec& spec,
                                const std::vector<int>& levels,
                                const std::vector<PhasePoint>& points,
                                const std::vector<double>& times);

/// hbar*omega * sum_j epsilon_j T_j(rho)
double energy_deformed(double rho, const SpectrumSpec& spec);

/// Central-difference velocity of the predicted flow at t = 0, in chart
/// components: (omega p, -omega x) or (0, -omega).
std::array<double, 2> generator_extract(const FamilySpec& family, const SpectrumSpec& spec,
                                        const PhasePoint& point, double dt,
                                        Chart chart = Chart::kCartesian);

struct HamiltonianFitSample {
  double rho = 0.0;
  double phi = 0.0;
  std::array<double, 2> contracted{};  // omega'(Gamma, .) in (rho, phi)
  std::array<double, 2> energy_differential{};  // df_H in (rho, phi)
  double residual = 0.0;
};

struct HamiltonianFitReport {
  double c = 0.0;
  double residual = 0.0;  // max_i |c omega'(Gamma,.) - df_H| / |df_H|
  double c_over_hbar = 0.0;
  Chart chart = Chart::kPolar;
  std::string convention;
  std::vector<HamiltonianFitSample> samples;
};

/// Fits the single constant c in c * omega'(Gamma, .) = df_H over the grid by
/// minimising the largest normalised residual.
HamiltonianFitReport hamiltonian_fit(const FamilySpec& family, const SpectrumSpec& spec,
                                     const std::vector<PhasePoint>& grid,
                                     double step = kDefaultStep);

}  // namespace cqreduce
