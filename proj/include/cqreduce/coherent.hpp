#pragma once

// Coherent-state families m -> |m> of the plane into the truncated Fock
// space, with Poisson-tail accounting for the truncation error.

#include <vector>

#include "cqreduce/fock.hpp"

namespace cqreduce {

enum class FamilyKind { kCanonical, kDeformed };

inline constexpr double kRhoMin = 1e-6;
inline constexpr double kTailLimit = 1e-8;

struct FamilySpec {
  FamilyKind kind = FamilyKind::kCanonical;
  std::vector<double> epsilon{0.0, 1.0};  // deformed only
  double hbar = 1.0;
  double mass = 1.0;
  double omega = 1.0;
  int truncation = kDefaultTruncation;

  void validate() const;
  /// Phase polynomial of the immersion; canonical families use (0, 1).
  std::vector<double> phase_coefficients() const;
  /// Spectrum sharing this family's phase polynomial and constants.
  SpectrumSpec matched_spectrum() const;

  static FamilySpec canonical(int truncation = kDefaultTruncation);
  static FamilySpec deformed(std::vector<double> epsilon, int truncation = kDefaultTruncation);
};

/// A point of the plane, z = x + ip = sqrt(rho) e^{i phi}. Whichever chart
/// the point is constructed in is kept exactly; the other is derived.
class PhasePoint {
 public:
  static PhasePoint cartesian(double x, double p);
  static PhasePoint polar(double rho, double phi);

  double x() const noexcept { return x_; }
  double p() const noexcept { return p_; }
  double rho() const noexcept { return rho_; }
  double phi() const noexcept { return phi_; }
  Complex z() const noexcept { return {x_, p_}; }

 private:
  PhasePoint(double x, double p, double rho, double phi) : x_(x), p_(p), rho_(rho), phi_(phi) {}

  double x_, p_, rho_, phi_;
};

/// sum_{n>N} e^{-rho} rho^n / n!
double truncation_tail(double rho, int truncation);

/// e^{-|z|^2/2} z^n / sqrt(n!), n = 0..N.
TruncatedVector canonical_state(const PhasePoint& point, int truncation);

/// e^{-rho/2} rho^{n/2}/sqrt(n!) e^{i s(n) phi} with s(n) = sum_j epsilon_j n^j.
TruncatedVector deformed_state(const PhasePoint& point, const FamilySpec& family);

/// Dispatches on family.kind.
TruncatedVector family_state(const FamilySpec& family, const PhasePoint& point);

struct IdentityResolution {
  double deviation = 0.0;          // max |I - integral| over the (K+1)x(K+1) block
  double max_diagonal_gap = 0.0;
  double max_offdiagonal = 0.0;
  std::vector<double> diagonal;    // integral entries (n,n), n = 0..K
  double deviation_refined = 0.0;  // same quadrature with both node counts doubled
  double quadrature_error = 0.0;   // max entry change between the two resolutions
  bool under_resolved = false;
};

/// Integrates |z><z| d^2z/pi over |z| <= radius with Gauss-Legendre radial
/// nodes times uniform angular nodes and compares the upper-left block with
/// the identity. Accumulation is carried out in extended precision.
IdentityResolution identity_resolution_check(int levels, double radius, int radial_nodes,
                                             int angular_nodes,
                                             int truncation = kDefaultTruncation);

}  // namespace cqreduce
