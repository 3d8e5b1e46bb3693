#pragma once

// Truncated Fock-space linear algebra. Levels run 0..N; every in-scope
// Hamiltonian is diagonal in this basis, so time evolution is applied as
// per-level phases.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace cqreduce {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr int kDefaultTruncation = 64;
inline constexpr double kHermitianTolerance = 1e-14;

/// Amplitudes c_0..c_N of a vector in the truncated Fock space.
class TruncatedVector {
 public:
  explicit TruncatedVector(int truncation);
  explicit TruncatedVector(ComplexVector amplitudes);

  static TruncatedVector basis(int level, int truncation);

  int truncation() const noexcept { return static_cast<int>(amplitudes_.size()) - 1; }
  int dimension() const noexcept { return static_cast<int>(amplitudes_.size()); }
  const ComplexVector& amplitudes() const noexcept { return amplitudes_; }
  Complex operator[](int level) const { return amplitudes_(level); }

  double norm() const { return amplitudes_.norm(); }
  double squared_norm() const { return amplitudes_.squaredNorm(); }

  /// <this|other>, antilinear in this.
  Complex inner(const TruncatedVector& other) const;

 private:
  ComplexVector amplitudes_;
};

/// Dense (N+1)x(N+1) operator. The hermitian flag is a declaration; the
/// constructor rejects a declared-hermitian matrix whose defect exceeds
/// kHermitianTolerance.
class MatrixOperator {
 public:
  explicit MatrixOperator(ComplexMatrix entries, bool hermitian = false);

  static MatrixOperator identity(int truncation);
  static MatrixOperator zero(int truncation);

  int truncation() const noexcept { return static_cast<int>(entries_.rows()) - 1; }
  int dimension() const noexcept { return static_cast<int>(entries_.rows()); }
  const ComplexMatrix& entries() const noexcept { return entries_; }
  Complex operator()(int row, int col) const { return entries_(row, col); }
  bool hermitian_flag() const noexcept { return hermitian_; }

  /// max_ij |A_ij - conj(A_ji)|
  double hermiticity_defect() const;
  MatrixOperator adjoint() const;
  Complex trace() const { return entries_.trace(); }

  TruncatedVector apply(const TruncatedVector& v) const;
  /// <v|A|v>
  Complex expectation(const TruncatedVector& v) const;

  friend MatrixOperator operator+(const MatrixOperator& a, const MatrixOperator& b);
  friend MatrixOperator operator-(const MatrixOperator& a, const MatrixOperator& b);
  friend MatrixOperator operator*(const MatrixOperator& a, const MatrixOperator& b);
  friend MatrixOperator operator*(double s, const MatrixOperator& a);
  friend MatrixOperator operator*(Complex s, const MatrixOperator& a);

 private:
  ComplexMatrix entries_;
  bool hermitian_;
};

void require_same_shape(const MatrixOperator& a, const MatrixOperator& b);
void require_same_shape(const MatrixOperator& a, const TruncatedVector& v);

/// Polynomial spectrum E(n) = hbar*omega * sum_j epsilon_j n^j.
struct SpectrumSpec {
  std::vector<double> epsilon;
  double hbar = 1.0;
  double omega = 1.0;

  double hbar_omega() const { return hbar * omega; }
  /// sum_j epsilon_j n^j (dimensionless level function).
  double level_polynomial(double n) const;
  double energy(int n) const { return hbar_omega() * level_polynomial(n); }
  /// Throws kInvalidParameter on empty epsilon, non-finite entries or non-positive constants.
  void validate() const;
};

MatrixOperator annihilation(int truncation);
MatrixOperator creation(int truncation);
MatrixOperator number_operator(int truncation);

struct Quadratures {
  MatrixOperator x;
  MatrixOperator p;
};

/// X = sqrt(hbar/2 m w)(a^+ + a), P = i sqrt(hbar m w/2)(a^+ - a).
Quadratures quadratures(int truncation, double hbar, double mass, double omega);

MatrixOperator hamiltonian(const SpectrumSpec& spec, int truncation);

/// Applies U_t = exp(-i H t / hbar) level by level.
TruncatedVector evolve(const TruncatedVector& state, const SpectrumSpec& spec, double t);

/// E_k = |k><k|
MatrixOperator projector(int level, int truncation);

MatrixOperator commutator(const MatrixOperator& a, const MatrixOperator& b);

}  // namespace cqreduce
