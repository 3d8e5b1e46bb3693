#include "cqreduce/wkb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include <fftw3.h>
#include <fmt/format.h>

#include "cqreduce/error.hpp"

namespace cqreduce {
namespace {

// In-place complex FFT of fixed size. FFTW_ESTIMATE keeps the chosen
// algorithm, and therefore the output bits, identical across runs.
class FftPlan {
 public:
  explicit FftPlan(int n)
      : n_(n), buffer_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    forward_ = fftw_plan_dft_1d(n, buffer_.get(), buffer_.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(n, buffer_.get(), buffer_.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  Complex* data() { return reinterpret_cast<Complex*>(buffer_.get()); }
  int size() const { return n_; }
  void forward() { fftw_execute(forward_); }
  /// Unnormalised inverse; callers divide by n.
  void backward() { fftw_execute(backward_); }

 private:
  struct Free {
    void operator()(fftw_complex* p) const { fftw_free(p); }
  };
  int n_;
  std::unique_ptr<fftw_complex[], Free> buffer_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

double wavenumber(int j, int n, double length) {
  const int signed_index = j < n / 2 ? j : j - n;
  return 2.0 * std::numbers::pi * signed_index / length;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require_domain(const WaveGrid1D& grid, const Samples& slice, double t) {
  const int n = grid.nodes;
  const int band = n / 10;
  double edge = 0.0, total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = std::norm(slice[static_cast<std::size_t>(i)]);
    total += w;
    if (i < band || i >= n - band) edge += w;
  }
  if (edge > 1e-10 * total) {
    throw Error(ErrorKind::kDomainEscape,
                fmt::format("packet mass {:.3e} within 10% of the boundary at t = {}",
                            edge / total, t));
  }
}

}  // namespace

void WaveGrid1D::validate() const {
  if (!is_power_of_two(nodes) || nodes < 8) {
    throw Error(ErrorKind::kInvalidParameter,
                fmt::format("node count must be a power of two >= 8, got {}", nodes));
  }
  if (!(x_max > x_min)) throw Error(ErrorKind::kInvalidParameter, "x_max must exceed x_min");
  if (!(hbar > 0.0) || !(mass > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "hbar and mass must be positive");
  }
  if (times.size() != slices.size()) {
    throw Error(ErrorKind::kShape, "times and slices differ in length");
  }
  for (const auto& s : slices) {
    if (s.size() != static_cast<std::size_t>(nodes)) {
      throw Error(ErrorKind::kShape, "slice length differs from node count");
    }
  }
}

std::vector<double> WaveGrid1D::coordinates() const {
  std::vector<double> xs(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) xs[static_cast<std::size_t>(i)] = x_at(i);
  return xs;
}

double WaveGrid1D::norm(const Samples& slice) const {
  double acc = 0.0;
  for (const auto& c : slice) acc += std::norm(c);
  return std::sqrt(acc * dx());
}

WaveGrid1D harmonic_grid(double omega, double hbar, double mass, int nodes, double x_min,
                         double x_max) {
  WaveGrid1D grid;
  grid.x_min = x_min;
  grid.x_max = x_max;
  grid.nodes = nodes;
  grid.hbar = hbar;
  grid.mass = mass;
  grid.potential = [mass, omega](double x) { return 0.5 * mass * omega * omega * x * x; };
  grid.validate();
  return grid;
}

Samples harmonic_coherent_packet(const WaveGrid1D& grid, double omega, double x0, double p0,
                                 double t) {
  const double m = grid.mass;
  const double hbar = grid.hbar;
  const double c = std::cos(omega * t);
  const double s = std::sin(omega * t);
  const double xc = x0 * c + p0 / (m * omega) * s;
  const double pc = p0 * c - m * omega * x0 * s;
  const double alpha = m * omega / (2.0 * hbar);
  const double prefactor = std::pow(m * omega / (std::numbers::pi * hbar), 0.25);
  Samples out(static_cast<std::size_t>(grid.nodes));
  for (int i = 0; i < grid.nodes; ++i) {
    const double x = grid.x_at(i);
    const double d = x - xc;
    const double phase = pc * x / hbar - pc * xc / (2.0 * hbar) - omega * t / 2.0;
    out[static_cast<std::size_t>(i)] = std::polar(prefactor * std::exp(-alpha * d * d), phase);
  }
  return out;
}

WaveGrid1D harmonic_trajectory(const WaveGrid1D& grid, double omega, double x0, double p0,
                               double t_start, double dt, int slices) {
  WaveGrid1D out = grid;
  out.times.clear();
  out.slices.clear();
  for (int k = 0; k < slices; ++k) {
    const double t = t_start + k * dt;
    out.times.push_back(t);
    out.slices.push_back(harmonic_coherent_packet(grid, omega, x0, p0, t));
  }
  return out;
}

Samples spectral_derivative(const Samples& f, double length, int order) {
  const int n = static_cast<int>(f.size());
  if (!is_power_of_two(n)) {
    throw Error(ErrorKind::kInvalidParameter, "spectral derivative needs a power-of-two length");
  }
  FftPlan plan(n);
  std::copy(f.begin(), f.end(), plan.data());
  plan.forward();
  for (int j = 0; j < n; ++j) {
    Complex factor = std::pow(Complex(0.0, wavenumber(j, n, length)), order);
    if (j == n / 2 && order % 2 == 1) factor = 0.0;  // Nyquist mode has no odd derivative
    plan.data()[j] *= factor / static_cast<double>(n);
  }
  plan.backward();
  return Samples(plan.data(), plan.data() + n);
}

WaveGrid1D evolve_schrodinger(const WaveGrid1D& initial, int steps, double dt, int record_every) {
  initial.validate();
  if (initial.slices.empty()) throw Error(ErrorKind::kShape, "no initial slice");
  if (steps < 0 || !(dt > 0.0) || record_every < 1) {
    throw Error(ErrorKind::kInvalidParameter, "steps, dt and record_every must be positive");
  }

  const int n = initial.nodes;
  const double hbar = initial.hbar;
  std::vector<Complex> half_potential(static_cast<std::size_t>(n));
  std::vector<Complex> kinetic(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double v = initial.potential(initial.x_at(i));
    half_potential[static_cast<std::size_t>(i)] = std::polar(1.0, -v * dt / (2.0 * hbar));
    const double k = wavenumber(i, n, initial.length());
    kinetic[static_cast<std::size_t>(i)] =
        std::polar(1.0 / n, -hbar * k * k * dt / (2.0 * initial.mass));
  }

  WaveGrid1D out = initial;
  out.times = {initial.times.back()};
  out.slices = {initial.slices.back()};
  require_domain(out, out.slices.back(), out.times.back());

  FftPlan plan(n);
  Complex* psi = plan.data();
  std::copy(out.slices.back().begin(), out.slices.back().end(), psi);
  const double t0 = out.times.back();
  for (int step = 1; step <= steps; ++step) {
    for (int i = 0; i < n; ++i) psi[i] *= half_potential[static_cast<std::size_t>(i)];
    plan.forward();
    for (int i = 0; i < n; ++i) psi[i] *= kinetic[static_cast<std::size_t>(i)];
    plan.backward();
    for (int i = 0; i < n; ++i) psi[i] *= half_potential[static_cast<std::size_t>(i)];
    if (step % record_every == 0 || step == steps) {
      out.times.push_back(t0 + step * dt);
      out.slices.emplace_back(psi, psi + n);
      require_domain(out, out.slices.back(), out.times.back());
    }
  }
  return out;
}

PolarFields polar_decompose(const Samples& slice, double hbar, double node_threshold) {
  const std::size_t n = slice.size();
  PolarFields fields;
  fields.amplitude.resize(n);
  fields.phase.assign(n, 0.0);
  fields.node_mask.assign(n, false);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fields.amplitude[i] = std::abs(slice[i]);
    peak = std::max(peak, fields.amplitude[i]);
  }
  if (peak == 0.0) {
    throw Error(ErrorKind::kIllConditionedDecomposition, "slice vanishes identically");
  }

  std::size_t first = n, last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fields.node_mask[i] = fields.amplitude[i] < node_threshold * peak;
    if (!fields.node_mask[i]) {
      first = std::min(first, i);
      last = i;
    }
  }
  std::size_t interior_masked = 0;
  for (std::size_t i = first; i <= last; ++i) interior_masked += fields.node_mask[i] ? 1 : 0;
  const std::size_t support = last - first + 1;
  if (interior_masked * 5 > support) {
    throw Error(ErrorKind::kIllConditionedDecomposition,
                fmt::format("{} of {} samples inside the packet support are nodes",
                            interior_masked, support));
  }

  // Unwrap along each unmasked run.
  bool in_run = false;
  double unwrapped = 0.0, previous = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (fields.node_mask[i]) {
      in_run = false;
      continue;
    }
    const double arg = std::arg(slice[i]);
    unwrapped = in_run ? unwrapped + std::remainder(arg - previous, 2.0 * std::numbers::pi) : arg;
    previous = arg;
    in_run = true;
    fields.phase[i] = -hbar * unwrapped;
  }
  return fields;
}

double QuantumPotential::at(int i) const {
  if (i < 0 || static_cast<std::size_t>(i) >= values.size()) {
    throw Error(ErrorKind::kIndex, fmt::format("node {} out of range", i));
  }
  if (mask[static_cast<std::size_t>(i)]) {
    throw Error(ErrorKind::kMaskedRegion, fmt::format("node {} is masked", i));
  }
  return values[static_cast<std::size_t>(i)];
}

QuantumPotential quantum_potential(const PolarFields& fields, const WaveGrid1D& grid) {
  if (fields.amplitude.size() != static_cast<std::size_t>(grid.nodes)) {
    throw Error(ErrorKind::kShape, "polar fields do not match the grid");
  }
  const Samples a(fields.amplitude.begin(), fields.amplitude.end());
  const Samples a_xx = spectral_derivative(a, grid.length(), 2);
  QuantumPotential q;
  q.mask = fields.node_mask;
  q.values.assign(fields.amplitude.size(), std::numeric_limits<double>::quiet_NaN());
  const double scale = grid.hbar * grid.hbar / (2.0 * grid.mass);
  for (std::size_t i = 0; i < q.values.size(); ++i) {
    if (!q.mask[i]) q.values[i] = -scale * a_xx[i].real() / fields.amplitude[i];
  }
  return q;
}

MadelungReport madelung_residuals(const WaveGrid1D& trajectory, double node_threshold,
                                  double evaluation_floor) {
  trajectory.validate();
  const std::size_t slices = trajectory.slices.size();
  if (slices < 3) throw Error(ErrorKind::kShape, "need at least 3 slices");
  const double dt = trajectory.times[1] - trajectory.times[0];
  for (std::size_t k = 1; k < slices; ++k) {
    const double step = trajectory.times[k] - trajectory.times[k - 1];
    if (std::fabs(step - dt) > 1e-9 * std::fabs(dt)) {
      throw Error(ErrorKind::kInvalidParameter, "slices must be uniformly spaced in time");
    }
  }

  const double hbar = trajectory.hbar;
  const double m = trajectory.mass;
  const double dx = trajectory.dx();
  const double length = trajectory.length();
  MadelungReport report;
  double sum_phase = 0.0, sum_amplitude = 0.0;

  for (std::size_t k = 1; k + 1 < slices; ++k) {
    const Samples& before = trajectory.slices[k - 1];
    const Samples& psi = trajectory.slices[k];
    const Samples& after = trajectory.slices[k + 1];
    // Checks the decomposition (node count) of the centre slice.
    (void)polar_decompose(psi, hbar, node_threshold);

    const Samples psi_x = spectral_derivative(psi, length, 1);
    const Samples psi_xx = spectral_derivative(psi, length, 2);
    Samples flux(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
      flux[i] = -hbar * (std::conj(psi[i]) * psi_x[i]).imag();  // A^2 W'
    }
    const Samples flux_x = spectral_derivative(flux, length, 1);

    double peak = 0.0;
    for (const auto& c : psi) peak = std::max(peak, std::abs(c));

    for (std::size_t i = 0; i < psi.size(); ++i) {
      const double a = std::abs(psi[i]);
      if (a < evaluation_floor * peak || a < node_threshold * peak ||
          std::abs(before[i]) < node_threshold * peak ||
          std::abs(after[i]) < node_threshold * peak) {
        continue;
      }
      const Complex u = psi_x[i] / psi[i];
      const Complex v = psi_xx[i] / psi[i];
      const double a_x = a * u.real();
      const double w_x = -hbar * u.imag();
      const double a_xx_over_a = v.real() + u.imag() * u.imag();
      const double w_xx = -hbar * v.imag() + 2.0 * hbar * u.real() * u.imag();

      const double w_t = -hbar * std::arg(after[i] * std::conj(before[i])) / (2.0 * dt);
      const double a_t = (std::abs(after[i]) - std::abs(before[i])) / (2.0 * dt);
      const double quantum = -hbar * hbar / (2.0 * m) * a_xx_over_a;
      const double potential = trajectory.potential(trajectory.x_at(static_cast<int>(i)));

      const double classical = w_t - w_x * w_x / (2.0 * m) - potential;
      const double phase_residual = classical - quantum;
      const double amplitude_residual = a_t - (2.0 * a_x * w_x + a * w_xx) / (2.0 * m);
      const double density_t = (std::norm(after[i]) - std::norm(before[i])) / (2.0 * dt);
      const double divergence_form = (density_t - flux_x[i].real() / m) / (2.0 * a);

      report.max_phase_residual = std::max(report.max_phase_residual, std::fabs(phase_residual));
      report.max_amplitude_residual =
          std::max(report.max_amplitude_residual, std::fabs(amplitude_residual));
      report.max_quantum_term = std::max(report.max_quantum_term, std::fabs(quantum));
      report.max_classical_residual =
          std::max(report.max_classical_residual, std::fabs(classical));
      report.max_divergence_gap =
          std::max(report.max_divergence_gap, std::fabs(amplitude_residual - divergence_form));
      sum_phase += phase_residual * phase_residual * dx;
      sum_amplitude += amplitude_residual * amplitude_residual * dx;
      ++report.evaluated_nodes;
    }
    ++report.evaluated_slices;
  }
  report.l2_phase_residual = std::sqrt(sum_phase / report.evaluated_slices);
  report.l2_amplitude_residual = std::sqrt(sum_amplitude / report.evaluated_slices);
  return report;
}

}  // namespace cqreduce
