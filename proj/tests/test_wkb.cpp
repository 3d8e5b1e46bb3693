#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cqreduce/error.hpp"
#include "cqreduce/wkb.hpp"
#include "oracles.hpp"

using namespace cqreduce;

namespace {

constexpr double kPi = std::numbers::pi;

WaveGrid1D free_grid(int nodes = 512, double x_min = -20.0, double x_max = 20.0) {
  WaveGrid1D grid;
  grid.nodes = nodes;
  grid.x_min = x_min;
  grid.x_max = x_max;
  return grid;
}

Samples gaussian(const WaveGrid1D& grid, double centre, double sigma, double k = 0.0) {
  Samples out;
  for (double x : grid.coordinates()) {
    out.push_back(std::exp(-(x - centre) * (x - centre) / (4 * sigma * sigma)) *
                  std::exp(Complex(0, k * x)));
  }
  return out;
}

}  // namespace

TEST_CASE("grid geometry and validation") {
  const auto grid = free_grid(256, -4, 4);
  CHECK(grid.dx() == doctest::Approx(8.0 / 256));
  CHECK(grid.x_at(0) == -4.0);
  CHECK(grid.coordinates().size() == 256);
  CHECK_THROWS_AS(free_grid(100).validate(), Error);
  CHECK_THROWS_AS(free_grid(4).validate(), Error);
  CHECK_THROWS_AS(free_grid(256, 1, -1).validate(), Error);
  auto bad = free_grid();
  bad.hbar = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("spectral derivatives of periodic functions are exact") {
  const auto grid = free_grid(128, 0.0, 2 * kPi);
  Samples f;
  for (double x : grid.coordinates()) f.push_back(std::sin(3 * x) + Complex(0, 1) * std::cos(2 * x));
  const auto d1 = spectral_derivative(f, grid.length(), 1);
  const auto d2 = spectral_derivative(f, grid.length(), 2);
  for (int i = 0; i < grid.nodes; ++i) {
    const double x = grid.x_at(i);
    const Complex e1 = 3 * std::cos(3 * x) - Complex(0, 2) * std::sin(2 * x);
    const Complex e2 = -9 * std::sin(3 * x) - Complex(0, 4) * std::cos(2 * x);
    CHECK(std::abs(d1[static_cast<std::size_t>(i)] - e1) < 1e-12);
    CHECK(std::abs(d2[static_cast<std::size_t>(i)] - e2) < 1e-11);
  }
  CHECK_THROWS_AS(spectral_derivative(Samples(12, 1.0), 1.0, 1), Error);
}

TEST_CASE("polar decomposition of a plane wave and a real Gaussian") {
  const auto grid = free_grid(256, 0.0, 10.0);
  const double hbar = 0.7;
  const double k = 2 * kPi * 3 / grid.length();
  Samples wave;
  for (double x : grid.coordinates()) wave.push_back(std::exp(Complex(0, k * x)));
  const auto fields = polar_decompose(wave, hbar);
  for (int i = 0; i < grid.nodes; ++i) {
    const auto u = static_cast<std::size_t>(i);
    CHECK(fields.amplitude[u] == doctest::Approx(1.0));
    // W + hbar k x is constant
    CHECK(fields.phase[u] + hbar * k * grid.x_at(i) ==
          doctest::Approx(fields.phase[0] + hbar * k * grid.x_at(0)).epsilon(1e-12));
  }

  const auto g = gaussian(free_grid(), 0.0, 1.5);
  const auto real = polar_decompose(g, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!real.node_mask[i]) CHECK(real.phase[i] == 0.0);
  }
}

TEST_CASE("polar decomposition reconstructs the samples and rejects nodal slices") {
  const auto grid = free_grid();
  const double hbar = 1.3;
  const auto psi = gaussian(grid, 1.0, 1.2, 0.8);
  const auto f = polar_decompose(psi, hbar);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (f.node_mask[i]) continue;
    const Complex rebuilt = f.amplitude[i] * std::exp(Complex(0, -f.phase[i] / hbar));
    CHECK(std::abs(rebuilt - psi[i]) < 1e-10);
  }

  // A node every other sample inside the support.
  Samples comb = gaussian(grid, 0.0, 2.0);
  for (std::size_t i = 0; i < comb.size(); i += 2) comb[i] = 0.0;
  try {
    (void)polar_decompose(comb, 1.0);
    FAIL("expected ill-conditioned-decomposition");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIllConditionedDecomposition);
  }
  CHECK_THROWS_AS(polar_decompose(Samples(64, 0.0), 1.0), Error);
}

TEST_CASE("quantum potential of a Gaussian amplitude") {
  const auto grid = free_grid(1024);
  const double sigma = 1.4;
  for (double hbar : {1.0, 0.5}) {
    auto g = grid;
    g.hbar = hbar;
    g.mass = 1.7;
    const auto fields = polar_decompose(gaussian(g, 0.0, sigma), hbar);
    const auto q = quantum_potential(fields, g);
    for (int i = 0; i < g.nodes; ++i) {
      const double x = g.x_at(i);
      if (std::abs(x) > 6.0) continue;
      CHECK(std::abs(q.at(i) - oracle::gaussian_quantum_potential(x, sigma, hbar, g.mass)) < 1e-9);
    }
  }

  // Scaling hbar by 3 at fixed amplitude scales Q by 9.
  auto g1 = grid, g3 = grid;
  g3.hbar = 3.0;
  const auto fields = polar_decompose(gaussian(grid, 0.5, 2.0), 1.0);
  const auto q1 = quantum_potential(fields, g1);
  const auto q3 = quantum_potential(fields, g3);
  for (int i = 400; i < 600; ++i) CHECK(q3.at(i) == doctest::Approx(9.0 * q1.at(i)).epsilon(1e-12));

  const auto flat = polar_decompose(Samples(128, Complex(2.0, 0.0)), 1.0);
  const auto q0 = quantum_potential(flat, free_grid(128));
  for (int i = 0; i < 128; ++i) CHECK(std::abs(q0.at(i)) < 1e-12);
}

TEST_CASE("quantum potential of the harmonic ground state is affine in x^2") {
  const double omega = 1.3, hbar = 0.9, mass = 1.1;
  const auto grid = harmonic_grid(omega, hbar, mass, 1024);
  const auto psi = harmonic_coherent_packet(grid, omega, 0.0, 0.0, 0.0);
  const auto q = quantum_potential(polar_decompose(psi, hbar), grid);
  // Q = hbar omega / 2 - m omega^2 x^2 / 2
  for (int i = 0; i < grid.nodes; ++i) {
    const double x = grid.x_at(i);
    if (std::abs(x) > 2.0) continue;
    CHECK(std::abs(q.at(i) - (0.5 * hbar * omega - 0.5 * mass * omega * omega * x * x)) < 1e-9);
  }
}

TEST_CASE("masked nodes cannot be queried") {
  const auto grid = free_grid(512);
  const auto fields = polar_decompose(gaussian(grid, 0.0, 1.0), 1.0);
  const auto q = quantum_potential(fields, grid);
  REQUIRE(q.mask[0]);
  CHECK(std::isnan(q.values[0]));
  try {
    (void)q.at(0);
    FAIL("expected masked-region");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMaskedRegion);
  }
}

TEST_CASE("split-step evolution conserves the norm and follows exact solutions") {
  SUBCASE("harmonic coherent packet") {
    const auto grid = harmonic_grid(1.0, 1.0, 1.0, 1024);
    const auto start = harmonic_trajectory(grid, 1.0, 2.0, 0.5, 0.0, 1e-3, 1);
    const auto run = evolve_schrodinger(start, 1000, 1e-3, 250);
    REQUIRE(run.slices.size() == 5);
    const double n0 = run.norm(run.slices.front());
    for (const auto& s : run.slices) CHECK(std::abs(run.norm(s) - n0) < 1e-10);
    CHECK(n0 == doctest::Approx(1.0).epsilon(1e-12));
    const auto exact = harmonic_coherent_packet(grid, 1.0, 2.0, 0.5, 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) worst = std::max(worst, std::abs(exact[i] - run.slices.back()[i]));
    CHECK(worst < 1e-6);
  }
  SUBCASE("free Gaussian spreads by the width law") {
    auto grid = free_grid(2048, -40, 40);
    grid.hbar = 0.8;
    grid.mass = 1.5;
    const double sigma0 = 1.0;
    grid.times = {0.0};
    grid.slices = {gaussian(grid, 0.0, sigma0)};
    const double t = 3.0;
    const auto run = evolve_schrodinger(grid, 3000, 1e-3, 3000);
    const auto& psi = run.slices.back();
    double mass = 0.0, second = 0.0;
    for (int i = 0; i < run.nodes; ++i) {
      const double w = std::norm(psi[static_cast<std::size_t>(i)]);
      mass += w;
      second += w * run.x_at(i) * run.x_at(i);
    }
    const double width = std::sqrt(second / mass);
    const double spread = grid.hbar * t / (2 * grid.mass * sigma0 * sigma0);
    CHECK(width == doctest::Approx(sigma0 * std::sqrt(1 + spread * spread)).epsilon(1e-8));
  }
}

TEST_CASE("packets reaching the boundary are reported") {
  auto grid = free_grid(256, -10, 10);
  grid.times = {0.0};
  grid.slices = {gaussian(grid, 6.0, 0.7, 8.0)};
  try {
    (void)evolve_schrodinger(grid, 2000, 1e-3);
    FAIL("expected domain-escape");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDomainEscape);
  }
}

TEST_CASE("Madelung residuals of the exact harmonic packet") {
  const auto coarse = harmonic_trajectory(harmonic_grid(1.0), 1.0, 2.0, 0.0, 0.5, 1e-3, 5);
  const auto fine = harmonic_trajectory(harmonic_grid(1.0, 1.0, 1.0, 2048), 1.0, 2.0, 0.0, 0.5, 5e-4, 9);
  const auto rc = madelung_residuals(coarse);
  const auto rf = madelung_residuals(fine);
  CHECK(rc.evaluated_slices == 3);
  CHECK(rc.evaluated_nodes > 0);
  CHECK(rc.max_phase_residual < 1e-5);
  CHECK(rc.max_amplitude_residual < 1e-5);
  CHECK(rc.max_phase_residual / rf.max_phase_residual >= 3.5);
  CHECK(rc.max_amplitude_residual / rf.max_amplitude_residual >= 3.5);
  CHECK(rc.l2_phase_residual <= rc.max_phase_residual * std::sqrt(coarse.length()));
  CHECK(rc.max_divergence_gap < 1e-5);
  CHECK(rc.max_classical_residual <= rc.max_quantum_term + rc.max_phase_residual);
  CHECK(rc.max_classical_residual >= rc.max_quantum_term - rc.max_phase_residual);

  auto short_run = coarse;
  short_run.slices.resize(2);
  short_run.times.resize(2);
  CHECK_THROWS_AS(madelung_residuals(short_run), Error);
}

TEST_CASE("the conjugated trajectory leaves large residuals") {
  // Flip the phase of every slice: psi -> conj(psi) solves the time-reversed
  // equation, so the residuals must become large.
  auto reversed = harmonic_trajectory(harmonic_grid(1.0), 1.0, 2.0, 0.7, 0.5, 1e-3, 5);
  for (auto& s : reversed.slices) {
    for (auto& v : s) v = std::conj(v);
  }
  const auto r = madelung_residuals(reversed);
  CHECK(r.max_phase_residual > 1e-2);
}
