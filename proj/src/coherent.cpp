#include "cqreduce/coherent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "cqreduce/error.hpp"

namespace cqreduce {
namespace {

// Gauss-Legendre rule on [0, b]; Newton iteration on P_n in long double.
void gauss_legendre(int n, long double b, std::vector<long double>& nodes,
                    std::vector<long double>& weights) {
  nodes.assign(n, 0.0L);
  weights.assign(n, 0.0L);
  const long double pi = std::numbers::pi_v<long double>;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    long double x = std::cos(pi * (i + 0.75L) / (n + 0.5L));
    long double dp = 0.0L;
    for (int iter = 0; iter < 100; ++iter) {
      long double p0 = 1.0L, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const long double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      // n == 1 leaves p1 = x, p0 = 1
      dp = n * (x * p1 - p0) / (x * x - 1.0L);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) break;
    }
    const long double w = 2.0L / ((1.0L - x * x) * dp * dp);
    nodes[i] = 0.5L * b * (1.0L - x);
    nodes[n - 1 - i] = 0.5L * b * (1.0L + x);
    weights[i] = weights[n - 1 - i] = 0.5L * b * w;
  }
}

// Moduli e^{-rho/2} rho^{n/2}/sqrt(n!) via log-gamma.
template <typename Real>
std::vector<Real> poisson_moduli(Real rho, int truncation) {
  std::vector<Real> out(truncation + 1, Real(0));
  if (rho == Real(0)) {
    out[0] = Real(1);
    return out;
  }
  const Real log_rho = std::log(rho);
  for (int n = 0; n <= truncation; ++n) {
    const Real log_mod = -rho / 2 + Real(n) / 2 * log_rho - std::lgamma(Real(n + 1)) / 2;
    out[n] = std::exp(log_mod);
  }
  return out;
}

void require_tail(double rho, int truncation) {
  const double tail = truncation_tail(rho, truncation);
  if (tail > kTailLimit) {
    throw Error(ErrorKind::kTruncationInsufficient,
                fmt::format("tail {:.3e} at rho = {} exceeds {:.0e} for N = {}", tail, rho,
                            kTailLimit, truncation));
  }
}

TruncatedVector phase_state(const std::vector<double>& moduli,
                            const std::vector<double>& coefficients, double phi) {
  const SpectrumSpec poly{coefficients};
  ComplexVector amps(moduli.size());
  for (std::size_t n = 0; n < moduli.size(); ++n) {
    amps(static_cast<Eigen::Index>(n)) =
        std::polar(moduli[n], poly.level_polynomial(static_cast<double>(n)) * phi);
  }
  return TruncatedVector(std::move(amps));
}

}  // namespace

void FamilySpec::validate() const {
  if (truncation < 1) {
    throw Error(ErrorKind::kInvalidTruncation,
                fmt::format("truncation must be >= 1, got {}", truncation));
  }
  if (!(hbar > 0.0) || !(mass > 0.0) || !(omega > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "family constants must be positive");
  }
  if (kind == FamilyKind::kDeformed) {
    const bool has_dynamic_term =
        epsilon.size() > 1 &&
        std::any_of(epsilon.begin() + 1, epsilon.end(), [](double e) { return e != 0.0; });
    if (!has_dynamic_term) {
      throw Error(ErrorKind::kInvalidParameter,
                  "deformed family needs a nonzero epsilon_j with j >= 1");
    }
    for (double e : epsilon) {
      if (!std::isfinite(e)) throw Error(ErrorKind::kInvalidParameter, "non-finite epsilon");
    }
  }
}

std::vector<double> FamilySpec::phase_coefficients() const {
  if (kind == FamilyKind::kCanonical) return {0.0, 1.0};
  return epsilon;
}

SpectrumSpec FamilySpec::matched_spectrum() const {
  return SpectrumSpec{phase_coefficients(), hbar, omega};
}

FamilySpec FamilySpec::canonical(int truncation) {
  FamilySpec f;
  f.truncation = truncation;
  return f;
}

FamilySpec FamilySpec::deformed(std::vector<double> epsilon, int truncation) {
  FamilySpec f;
  f.kind = FamilyKind::kDeformed;
  f.epsilon = std::move(epsilon);
  f.truncation = truncation;
  f.validate();
  return f;
}

PhasePoint PhasePoint::cartesian(double x, double p) {
  return PhasePoint(x, p, x * x + p * p, std::atan2(p, x));
}

PhasePoint PhasePoint::polar(double rho, double phi) {
  if (!(rho >= 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, fmt::format("rho must be >= 0, got {}", rho));
  }
  const double r = std::sqrt(rho);
  return PhasePoint(r * std::cos(phi), r * std::sin(phi), rho, phi);
}

double truncation_tail(double rho, int truncation) {
  if (!(rho >= 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, fmt::format("rho must be >= 0, got {}", rho));
  }
  if (rho == 0.0) return 0.0;
  // P(N+1, rho) = probability that a Poisson(rho) variable exceeds N.
  return boost::math::gamma_p(static_cast<double>(truncation) + 1.0, rho);
}

TruncatedVector canonical_state(const PhasePoint& point, int truncation) {
  if (truncation < 1) {
    throw Error(ErrorKind::kInvalidTruncation,
                fmt::format("truncation must be >= 1, got {}", truncation));
  }
  require_tail(point.rho(), truncation);
  return phase_state(poisson_moduli(point.rho(), truncation), {0.0, 1.0}, point.phi());
}

TruncatedVector deformed_state(const PhasePoint& point, const FamilySpec& family) {
  family.validate();
  if (family.kind != FamilyKind::kDeformed) {
    throw Error(ErrorKind::kInvalidParameter, "deformed_state needs a deformed family");
  }
  if (point.rho() < kRhoMin) {
    throw Error(ErrorKind::kExcludedOrigin,
                fmt::format("rho = {:.3e} is inside the excluded disk rho < {:.0e}", point.rho(),
                            kRhoMin));
  }
  require_tail(point.rho(), family.truncation);
  return phase_state(poisson_moduli(point.rho(), family.truncation), family.epsilon, point.phi());
}

TruncatedVector family_state(const FamilySpec& family, const PhasePoint& point) {
  if (family.kind == FamilyKind::kCanonical) {
    family.validate();
    return canonical_state(point, family.truncation);
  }
  return deformed_state(point, family);
}

namespace {

using LongMatrix = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;

LongMatrix integrate_projectors(int levels, long double radius, int radial_nodes,
                                int angular_nodes) {
  std::vector<long double> r, w;
  gauss_legendre(radial_nodes, radius, r, w);
  const long double pi = std::numbers::pi_v<long double>;

  // Angular factor (1/pi) * (2 pi / n_phi) * sum_k e^{i d phi_k} for d = m - n.
  std::vector<std::complex<long double>> angular(2 * levels + 1);
  for (int d = -levels; d <= levels; ++d) {
    std::complex<long double> acc = 0.0L;
    for (int k = 0; k < angular_nodes; ++k) {
      const long double phi = 2.0L * pi * k / angular_nodes;
      acc += std::polar(1.0L, d * phi);
    }
    angular[d + levels] = acc * (2.0L / angular_nodes);
  }

  LongMatrix integral = LongMatrix::Zero(levels + 1, levels + 1);
  for (int i = 0; i < radial_nodes; ++i) {
    const long double rho = r[i] * r[i];
    const auto mod = poisson_moduli<long double>(rho, levels);
    const long double jacobian = w[i] * r[i];  // d^2z = r dr dphi
    for (int m = 0; m <= levels; ++m) {
      for (int n = 0; n <= levels; ++n) {
        integral(m, n) += jacobian * mod[m] * mod[n] * angular[m - n + levels];
      }
    }
  }
  return integral;
}

}  // namespace

IdentityResolution identity_resolution_check(int levels, double radius, int radial_nodes,
                                             int angular_nodes, int truncation) {
  if (levels < 0 || levels > truncation) {
    throw Error(ErrorKind::kIndex,
                fmt::format("level cap {} outside 0..{}", levels, truncation));
  }
  if (!(radius > 0.0) || radial_nodes < 1 || angular_nodes < 1) {
    throw Error(ErrorKind::kInvalidParameter, "radius and node counts must be positive");
  }

  const auto deviation_of = [levels](const LongMatrix& m, double* diag_gap, double* off) {
    long double worst = 0.0L, worst_diag = 0.0L, worst_off = 0.0L;
    for (int i = 0; i <= levels; ++i) {
      for (int j = 0; j <= levels; ++j) {
        const long double target = i == j ? 1.0L : 0.0L;
        const long double gap = std::abs(m(i, j) - target);
        worst = std::max(worst, gap);
        if (i == j) {
          worst_diag = std::max(worst_diag, gap);
        } else {
          worst_off = std::max(worst_off, gap);
        }
      }
    }
    if (diag_gap) *diag_gap = static_cast<double>(worst_diag);
    if (off) *off = static_cast<double>(worst_off);
    return static_cast<double>(worst);
  };

  const LongMatrix base = integrate_projectors(levels, radius, radial_nodes, angular_nodes);
  const LongMatrix refined =
      integrate_projectors(levels, radius, 2 * radial_nodes, 2 * angular_nodes);

  IdentityResolution out;
  out.deviation = deviation_of(base, &out.max_diagonal_gap, &out.max_offdiagonal);
  out.deviation_refined = deviation_of(refined, nullptr, nullptr);
  out.quadrature_error = static_cast<double>((refined - base).cwiseAbs().maxCoeff());
  out.diagonal.resize(levels + 1);
  for (int n = 0; n <= levels; ++n) out.diagonal[n] = static_cast<double>(base(n, n).real());
  // Under-resolved when the node count, not the radius, controls the deviation.
  out.under_resolved = out.quadrature_error > 1e-15 && out.quadrature_error > 0.5 * out.deviation;
  return out;
}

}  // namespace cqreduce
