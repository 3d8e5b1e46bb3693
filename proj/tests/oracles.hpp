#pragma once

// Reference values computed independently of the library: direct series in
// extended precision, closed forms and explicit sums.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace oracle {

// Poisson mass beyond level n at mean rho, summed term by term.
inline long double poisson_tail(long double rho, int n) {
  if (rho == 0.0L) return 0.0L;
  long double term = std::exp(-rho);
  for (int k = 1; k <= n; ++k) term *= rho / k;
  long double sum = 0.0L;
  for (int k = n + 1; k < n + 2000; ++k) {
    term *= rho / k;
    sum += term;
    if (term < 1e-40L * sum) break;
  }
  return sum;
}

// P(n + 1, x) = 1 - e^{-x} sum_{k<=n} x^k / k!
inline long double gamma_p_integer(int n, long double x) {
  long double term = std::exp(-x);
  long double sum = term;
  for (int k = 1; k <= n; ++k) {
    term *= x / k;
    sum += term;
  }
  return 1.0L - sum;
}

// <z|w> truncated at level n: e^{-|z|^2/2 - |w|^2/2} sum_k (conj(z) w)^k / k!
inline std::complex<long double> coherent_overlap(std::complex<double> z, std::complex<double> w,
                                                  int n) {
  const std::complex<long double> zz(z.real(), z.imag());
  const std::complex<long double> ww(w.real(), w.imag());
  const std::complex<long double> q = std::conj(zz) * ww;
  std::complex<long double> term = 1.0L;
  std::complex<long double> sum = term;
  for (int k = 1; k <= n; ++k) {
    term *= q / static_cast<long double>(k);
    sum += term;
  }
  return std::exp(-0.5L * std::norm(zz) - 0.5L * std::norm(ww)) * sum;
}

// Stirling numbers of the second kind from the explicit alternating sum.
inline long double stirling2(int j, int k) {
  long double sum = 0.0L;
  long double binom = 1.0L;
  for (int i = 0; i <= k; ++i) {
    const long double sign = (i % 2 == 0) ? 1.0L : -1.0L;
    sum += sign * binom * std::pow(static_cast<long double>(k - i), j);
    binom = binom * (k - i) / (i + 1);
  }
  long double factorial = 1.0L;
  for (int i = 2; i <= k; ++i) factorial *= i;
  return std::round(sum / factorial);
}

// e^{-x} sum_k x^k k^j / k! with Poisson weights from log-gamma.
inline long double touchard(int j, long double x) {
  if (x == 0.0L) return j == 0 ? 1.0L : 0.0L;
  long double sum = 0.0L;
  for (int k = 0; k < 400; ++k) {
    const long double w = std::exp(-x + k * std::log(x) - std::lgamma(k + 1.0L));
    sum += w * std::pow(static_cast<long double>(k), j);
  }
  return sum;
}

// -(hbar^2/2m) A''/A for A proportional to exp(-x^2 / (4 sigma^2)).
inline double gaussian_quantum_potential(double x, double sigma, double hbar, double mass) {
  const double s2 = sigma * sigma;
  return -(hbar * hbar / (2.0 * mass)) * (x * x / (4.0 * s2 * s2) - 1.0 / (2.0 * s2));
}

// Seeded sampler for property tests.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  int integer(int lo, int hi) { return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  std::complex<double> complex(double radius) {
    return {uniform(-radius, radius), uniform(-radius, radius)};
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace oracle
