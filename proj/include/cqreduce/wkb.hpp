#pragma once

// One-dimensional Madelung laboratory on a periodic grid: split-step
// Schrodinger evolution, polar decomposition psi = A exp(-i W / hbar), the
// quantum potential and the residuals of the coupled amplitude/phase system
//
//   dW/dt = |W'|^2 / 2m + V - (hbar^2/2m) A''/A
//   dA/dt = (2 A' W' + A W'') / 2m
//
// which hold exactly (with these signs) for solutions of
// i hbar psi_t = -(hbar^2/2m) psi'' + V psi under the e^{-iW/hbar} convention.

#include <functional>
#include <vector>

#include "cqreduce/fock.hpp"

namespace cqreduce {

using Samples = std::vector<Complex>;

struct WaveGrid1D {
  double x_min = -20.0;
  double x_max = 20.0;
  int nodes = 1024;  // power of two
  double hbar = 1.0;
  double mass = 1.0;
  std::function<double(double)> potential = [](double) { return 0.0; };
  std::vector<double> times;
  std::vector<Samples> slices;

  void validate() const;
  double length() const { return x_max - x_min; }
  double dx() const { return length() / nodes; }
  /// Periodic grid: x_i = x_min + i dx, i = 0..nodes-1.
  double x_at(int i) const { return x_min + i * dx(); }
  std::vector<double> coordinates() const;
  /// Discrete L2 norm of a slice, sqrt(dx sum |psi|^2).
  double norm(const Samples& slice) const;
};

/// Grid geometry with V = m omega^2 x^2 / 2 and no slices.
WaveGrid1D harmonic_grid(double omega, double hbar = 1.0, double mass = 1.0, int nodes = 1024,
                         double x_min = -20.0, double x_max = 20.0);

/// Exact coherent packet of the harmonic oscillator with initial centre x0 and
/// momentum p0 (omega must match the grid potential):
/// (m w / pi hbar)^{1/4} exp(-(m w/2 hbar)(x - x_c)^2 + i p_c x/hbar - i p_c x_c/2hbar - i w t/2).
Samples harmonic_coherent_packet(const WaveGrid1D& grid, double omega, double x0, double p0,
                                 double t);

/// Exact packet sampled at t_start + k dt, k = 0..slices-1.
WaveGrid1D harmonic_trajectory(const WaveGrid1D& grid, double omega, double x0, double p0,
                               double t_start, double dt, int slices);

/// Spectral derivative of a periodic sample vector.
Samples spectral_derivative(const Samples& f, double length, int order);

/// Strang split-step Fourier evolution from the last slice of `initial`.
/// Records a slice every `record_every` steps (and always the final one).
WaveGrid1D evolve_schrodinger(const WaveGrid1D& initial, int steps, double dt,
                              int record_every = 1);

inline constexpr double kNodeThreshold = 1e-8;
/// Below this relative amplitude, rounding in the spectral derivatives divided
/// by |psi| outweighs the discretisation error of the residuals.
inline constexpr double kEvaluationFloor = 1e-4;

struct PolarFields {
  std::vector<double> amplitude;  // A = |psi|
  std::vector<double> phase;      // W = -hbar unwrap(arg psi); 0 on masked nodes
  std::vector<bool> node_mask;    // true where |psi| < threshold * max |psi|
};

/// Masked nodes inside the packet support (between the first and last
/// unmasked sample) may not exceed 20% of that support.
PolarFields polar_decompose(const Samples& slice, double hbar,
                            double node_threshold = kNodeThreshold);

struct QuantumPotential {
  std::vector<double> values;  // NaN on masked nodes
  std::vector<bool> mask;

  /// Throws kMaskedRegion on masked nodes.
  double at(int i) const;
};

/// -(hbar^2/2m) A''/A with a spectral second derivative.
QuantumPotential quantum_potential(const PolarFields& fields, const WaveGrid1D& grid);

struct MadelungReport {
  double max_phase_residual = 0.0;      // dW/dt balance
  double l2_phase_residual = 0.0;
  double max_amplitude_residual = 0.0;  // dA/dt balance
  double l2_amplitude_residual = 0.0;
  double max_quantum_term = 0.0;        // max |(hbar^2/2m) A''/A|
  double max_classical_residual = 0.0;  // phase balance without the quantum term
  double max_divergence_gap = 0.0;      // |amplitude residual - divergence form|
  int evaluated_nodes = 0;
  int evaluated_slices = 0;
};

/// Residuals at interior slices (central time differences) on nodes whose
/// amplitude is at least `evaluation_floor` times the slice maximum.
MadelungReport madelung_residuals(const WaveGrid1D& trajectory,
                                  double node_threshold = kNodeThreshold,
                                  double evaluation_floor = kEvaluationFloor);

}  // namespace cqreduce
