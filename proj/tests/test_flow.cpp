#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cqreduce/error.hpp"
#include "cqreduce/flow.hpp"
#include "oracles.hpp"

using namespace cqreduce;

TEST_CASE("Stirling numbers match the alternating-sum formula") {
  for (int j = 0; j <= 20; ++j) {
    for (int k = 0; k <= j; ++k) {
      const long double expected = oracle::stirling2(j, k);
      if (expected < 1e18L) CHECK(static_cast<long double>(stirling2(j, k)) == expected);
    }
  }
  CHECK(stirling2(20, 10) == 5917584964655ULL);
  CHECK(stirling2(5, 7) == 0);
  CHECK_THROWS_AS(stirling2(21, 3), Error);
}

TEST_CASE("Touchard polynomials") {
  for (double x : {0.0, 0.5, 3.0, 17.0}) {
    CHECK(touchard(0, x) == 1.0);
    CHECK(touchard(1, x) == x);
  }
  CHECK(touchard(2, 5.0) == 30.0);
  CHECK(static_cast<double>(oracle::touchard(2, 5.0L)) == doctest::Approx(30.0).epsilon(1e-15));
  CHECK(touchard(3, 0.0) == 0.0);

  for (int j = 0; j <= 10; ++j) {
    for (double x = 0.0; x <= 10.0; x += 0.25) {
      const double expected = static_cast<double>(oracle::touchard(j, x));
      if (expected == 0.0) continue;
      CHECK(std::abs(touchard(j, x) - expected) <= 1e-13 * expected);
      CHECK(std::abs(touchard_series(j, x) - expected) <= 1e-13 * expected);
    }
  }
  // Derivative against a central difference of the polynomial itself.
  for (int j = 1; j <= 8; ++j) {
    const double x = 1.7, h = 1e-5;
    const double fd = (touchard(j, x + h) - touchard(j, x - h)) / (2 * h);
    CHECK(touchard_derivative(j, x) == doctest::Approx(fd).epsilon(1e-7));
  }
  CHECK_THROWS_AS(touchard(21, 1.0), Error);
  CHECK_THROWS_AS(touchard(3, 51.0), Error);
  CHECK_THROWS_AS(touchard(3, -0.1), Error);
  try {
    (void)touchard(2, 60.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEnvelope);
  }
}

TEST_CASE("predicted flow is a rotation group") {
  const auto m = predicted_flow(PhasePoint::cartesian(1, 0), 1.0, std::numbers::pi / 2);
  CHECK(std::abs(m.x()) < 1e-15);
  CHECK(m.p() == doctest::Approx(-1.0));
  const auto same = predicted_flow(PhasePoint::cartesian(0.3, -0.7), 2.0, 0.0);
  CHECK(same.x() == 0.3);
  CHECK(same.p() == -0.7);

  oracle::Sampler s(21);
  for (int i = 0; i < 50; ++i) {
    const auto m0 = PhasePoint::cartesian(s.uniform(-3, 3), s.uniform(-3, 3));
    const double omega = s.uniform(0.2, 3), t1 = s.uniform(-4, 4), t2 = s.uniform(-4, 4);
    const auto a = predicted_flow(predicted_flow(m0, omega, t1), omega, t2);
    const auto b = predicted_flow(m0, omega, t1 + t2);
    CHECK(std::abs(a.x() - b.x()) < 1e-13);
    CHECK(std::abs(a.p() - b.p()) < 1e-13);
    const auto back = predicted_flow(predicted_flow(m0, omega, t1), omega, -t1);
    CHECK(std::abs(back.x() - m0.x()) < 1e-13);
    CHECK(std::abs(back.p() - m0.p()) < 1e-13);
  }

  const auto trace = flow_trace(PhasePoint::cartesian(1.2, 0.4), 1.3, period_times(1.3));
  REQUIRE(trace.points.size() == 16);
  for (const auto& p : trace.points) CHECK(std::abs(p.rho() - trace.initial.rho()) < 1e-13);
}

TEST_CASE("period sampling covers one period inclusively") {
  const auto t = period_times(2.0, 16);
  REQUIRE(t.size() == 16);
  CHECK(t.front() == 0.0);
  CHECK(t.back() == doctest::Approx(std::numbers::pi));
  CHECK(period_times(1.0, 1).size() == 1);
  CHECK_THROWS_AS(period_times(0.0, 16), Error);
}

TEST_CASE("canonical family is invariant under the harmonic evolution") {
  const auto family = FamilySpec::canonical(64);
  const GridSpec grid;
  for (const auto& eps : {std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 1.0}}) {
    const SpectrumSpec spec{eps, 1.0, 1.0};
    const auto r = check_invariance(family, spec, grid.points(), period_times(1.0));
    CHECK(r.max_infidelity < 1e-12);
    CHECK(r.infidelities.size() == 81 * 16);
    for (double f : r.infidelities) {
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
  }
}

TEST_CASE("invariance against an independent overlap oracle") {
  // <z e^{-iwt}| U_t |z> with U_t|z> = e^{-iwt/2}|z e^{-iwt}>: unit modulus.
  const int n = 64;
  const Complex z(0.9, -1.3);
  const double omega = 1.0, t = 0.77;
  const auto state = canonical_state(PhasePoint::cartesian(z.real(), z.imag()), n);
  const auto evolved = evolve(state, SpectrumSpec{{0.5, 1.0}, 1.0, omega}, t);
  const Complex zt = z * std::exp(Complex(0, -omega * t));
  const auto target = canonical_state(PhasePoint::cartesian(zt.real(), zt.imag()), n);
  const Complex overlap = target.inner(evolved);
  CHECK(std::abs(overlap - std::exp(Complex(0, -omega * t / 2))) < 1e-13);
}

TEST_CASE("deformed family with a cubic spectrum is invariant") {
  const auto family = FamilySpec::deformed({0.0, 1.0, 0.0, 1.0}, 64);
  const auto r = check_invariance(family, family.matched_spectrum(), PolarGrid{}.points(),
                                  period_times(1.0));
  CHECK(r.max_infidelity < 1e-12);

  // Mismatched pairings are rejected.
  const SpectrumSpec wrong{{0.0, 1.0, 0.0, 2.0}, 1.0, 1.0};
  CHECK_THROWS_AS(check_invariance(family, wrong, PolarGrid{}.points(), period_times(1.0)), Error);
  CHECK_THROWS_AS(check_invariance(FamilySpec::canonical(), SpectrumSpec{{0, 0, 1}, 1, 1},
                                   GridSpec{}.points(), period_times(1.0)),
                  Error);
}

TEST_CASE("constants of motion along the flow") {
  const auto family = FamilySpec::canonical(64);
  const SpectrumSpec spec{{0.5, 1.0}, 1.0, 1.0};
  const auto r = constants_check(family, spec, {0, 1, 2, 5}, GridSpec{}.points(), period_times(1.0));
  CHECK(r.max_projector_drift < 1e-13);
  CHECK(r.max_energy_drift < 1e-12);
  CHECK(r.max_wedge < 1e-8);
  REQUIRE(r.level_drift.size() == 4);

  // f_{E_k} depends only on rho.
  const auto e3 = projector(3, 64);
  const auto a = PhasePoint::cartesian(1.1, 0.4);
  const auto b = predicted_flow(a, 1.0, 2.2);
  CHECK(std::abs(expectation(e3, family, a).real() - expectation(e3, family, b).real()) < 1e-15);
}

TEST_CASE("deformed energy equals the matrix expectation") {
  for (const auto& eps : {std::vector<double>{0.0, 1.0}, std::vector<double>{0.0, 0.0, 1.0},
                          std::vector<double>{0.3, -0.2, 0.1, 0.05}}) {
    const auto family = FamilySpec::deformed(eps, 64);
    const SpectrumSpec spec{eps, 0.8, 1.4};
    const auto h = hamiltonian(spec, 64);
    for (double rho = 0.05; rho <= 6.0; rho += 0.35) {
      const double matrix = expectation(h, family, PhasePoint::polar(rho, 0.9)).real();
      CHECK(std::abs(energy_deformed(rho, spec) - matrix) < 1e-10);
    }
  }
  CHECK(energy_deformed(2.0, SpectrumSpec{{0, 0, 1}, 1, 1}) == doctest::Approx(6.0));
  CHECK(energy_deformed(3.0, SpectrumSpec{{0, 1}, 2, 1}) == doctest::Approx(6.0));
  CHECK(energy_deformed(0.0, SpectrumSpec{{0.7, 1, 1}, 1, 1}) == doctest::Approx(0.7));
}

TEST_CASE("generator of the reduced flow") {
  const auto family = FamilySpec::canonical();
  const SpectrumSpec spec{{0.5, 1.0}, 1.0, 1.0};
  const auto v = generator_extract(family, spec, PhasePoint::cartesian(1, 0), 1e-4);
  CHECK(std::abs(v[0]) < 1e-8);
  CHECK(std::abs(v[1] + 1.0) < 1e-8);
  oracle::Sampler s(5);
  for (int i = 0; i < 10; ++i) {
    const auto m = PhasePoint::cartesian(s.uniform(-2, 2), s.uniform(-2, 2));
    const auto g = generator_extract(family, spec, m, 1e-4);
    CHECK(std::abs(g[0] * m.x() + g[1] * m.p()) < 1e-8);
    // Finite difference of matched points from the invariance construction.
    const auto ahead = predicted_flow(m, 1.0, 1e-3);
    const auto behind = predicted_flow(m, 1.0, -1e-3);
    CHECK(g[0] == doctest::Approx((ahead.x() - behind.x()) / 2e-3).epsilon(1e-6));
  }
  const auto deformed = FamilySpec::deformed({0, 1, 0, 1});
  const auto polar = generator_extract(deformed, deformed.matched_spectrum(),
                                       PhasePoint::polar(2.0, 0.4), 1e-4, Chart::kPolar);
  CHECK(std::abs(polar[0]) < 1e-12);
  CHECK(polar[1] == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK_THROWS_AS(generator_extract(family, spec, PhasePoint::cartesian(1, 0), 0.1), Error);
}

TEST_CASE("Hamiltonian structure: one constant for all families") {
  const auto grid = PolarGrid{}.points();
  std::vector<double> constants;
  for (const auto& family : {FamilySpec::canonical(), FamilySpec::deformed({0, 0, 1}),
                             FamilySpec::deformed({0, 1, 0, 1})}) {
    const auto r = hamiltonian_fit(family, family.matched_spectrum(), grid);
    CHECK(r.residual < 1e-6);
    CHECK(r.chart == Chart::kPolar);
    CHECK(std::isfinite(r.c));
    CHECK_FALSE(r.convention.empty());
    constants.push_back(r.c);
  }
  for (double c : constants) CHECK(std::abs(c - constants.front()) < 1e-6 * constants.front());
  CHECK(constants.front() == doctest::Approx(1.0).epsilon(1e-6));

  // Scaling epsilon leaves the constant unchanged.
  const auto base = FamilySpec::deformed({0, 1, 0, 1});
  const auto scaled = FamilySpec::deformed({0, 0.5, 0, 0.5});
  CHECK(hamiltonian_fit(base, base.matched_spectrum(), grid).c ==
        doctest::Approx(hamiltonian_fit(scaled, scaled.matched_spectrum(), grid).c).epsilon(1e-8));

  // c tracks hbar.
  FamilySpec half = FamilySpec::canonical();
  half.hbar = 0.5;
  CHECK(hamiltonian_fit(half, half.matched_spectrum(), grid).c == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("degenerate structure is reported") {
  // sum_j eps_j T_j'(rho) = 1 - (2 rho + 1)/20 vanishes at rho = 9.5.
  const auto family = FamilySpec::deformed({0.0, 1.0, -0.05}, 96);
  const std::vector<PhasePoint> grid{PhasePoint::polar(9.5, 0.3)};
  try {
    (void)hamiltonian_fit(family, family.matched_spectrum(), grid);
    FAIL("expected degenerate-structure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDegenerateStructure);
  }
}
