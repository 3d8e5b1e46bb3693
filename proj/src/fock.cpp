#include "cqreduce/fock.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "cqreduce/error.hpp"

namespace cqreduce {
namespace {

void require_truncation(int truncation) {
  if (truncation < 1) {
    throw Error(ErrorKind::kInvalidTruncation,
                fmt::format("truncation must be >= 1, got {}", truncation));
  }
}

}  // namespace

TruncatedVector::TruncatedVector(int truncation) {
  require_truncation(truncation);
  amplitudes_ = ComplexVector::Zero(truncation + 1);
}

TruncatedVector::TruncatedVector(ComplexVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  require_truncation(static_cast<int>(amplitudes_.size()) - 1);
}

TruncatedVector TruncatedVector::basis(int level, int truncation) {
  TruncatedVector v(truncation);
  if (level < 0 || level > truncation) {
    throw Error(ErrorKind::kIndex, fmt::format("level {} outside 0..{}", level, truncation));
  }
  v.amplitudes_(level) = 1.0;
  return v;
}

Complex TruncatedVector::inner(const TruncatedVector& other) const {
  if (other.dimension() != dimension()) {
    throw Error(ErrorKind::kShape, fmt::format("inner product of dimensions {} and {}",
                                               dimension(), other.dimension()));
  }
  return amplitudes_.dot(other.amplitudes_);  // Eigen conjugates the left operand
}

MatrixOperator::MatrixOperator(ComplexMatrix entries, bool hermitian)
    : entries_(std::move(entries)), hermitian_(hermitian) {
  if (entries_.rows() != entries_.cols()) {
    throw Error(ErrorKind::kShape, fmt::format("operator must be square, got {}x{}",
                                               entries_.rows(), entries_.cols()));
  }
  require_truncation(static_cast<int>(entries_.rows()) - 1);
  if (hermitian_ && hermiticity_defect() > kHermitianTolerance) {
    throw Error(ErrorKind::kInvalidParameter,
                fmt::format("declared hermitian but defect is {:.3e}", hermiticity_defect()));
  }
}

MatrixOperator MatrixOperator::identity(int truncation) {
  require_truncation(truncation);
  return MatrixOperator(ComplexMatrix::Identity(truncation + 1, truncation + 1), true);
}

MatrixOperator MatrixOperator::zero(int truncation) {
  require_truncation(truncation);
  return MatrixOperator(ComplexMatrix::Zero(truncation + 1, truncation + 1), true);
}

double MatrixOperator::hermiticity_defect() const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

MatrixOperator MatrixOperator::adjoint() const {
  return MatrixOperator(entries_.adjoint(), hermitian_);
}

TruncatedVector MatrixOperator::apply(const TruncatedVector& v) const {
  require_same_shape(*this, v);
  return TruncatedVector(ComplexVector(entries_ * v.amplitudes()));
}

Complex MatrixOperator::expectation(const TruncatedVector& v) const {
  require_same_shape(*this, v);
  return v.amplitudes().dot(entries_ * v.amplitudes());
}

MatrixOperator operator+(const MatrixOperator& a, const MatrixOperator& b) {
  require_same_shape(a, b);
  return MatrixOperator(a.entries_ + b.entries_, a.hermitian_ && b.hermitian_);
}

MatrixOperator operator-(const MatrixOperator& a, const MatrixOperator& b) {
  require_same_shape(a, b);
  return MatrixOperator(a.entries_ - b.entries_, a.hermitian_ && b.hermitian_);
}

MatrixOperator operator*(const MatrixOperator& a, const MatrixOperator& b) {
  require_same_shape(a, b);
  return MatrixOperator(a.entries_ * b.entries_);
}

MatrixOperator operator*(double s, const MatrixOperator& a) {
  return MatrixOperator(s * a.entries_, a.hermitian_);
}

MatrixOperator operator*(Complex s, const MatrixOperator& a) {
  return MatrixOperator(s * a.entries_);
}

void require_same_shape(const MatrixOperator& a, const MatrixOperator& b) {
  if (a.dimension() != b.dimension()) {
    throw Error(ErrorKind::kShape, fmt::format("operator dimensions differ: {} vs {}",
                                               a.dimension(), b.dimension()));
  }
}

void require_same_shape(const MatrixOperator& a, const TruncatedVector& v) {
  if (a.dimension() != v.dimension()) {
    throw Error(ErrorKind::kShape, fmt::format("operator dimension {} vs vector dimension {}",
                                               a.dimension(), v.dimension()));
  }
}

double SpectrumSpec::level_polynomial(double n) const {
  double acc = 0.0;
  for (auto it = epsilon.rbegin(); it != epsilon.rend(); ++it) acc = acc * n + *it;
  return acc;
}

void SpectrumSpec::validate() const {
  if (epsilon.empty()) {
    throw Error(ErrorKind::kInvalidParameter, "spectrum needs at least one coefficient");
  }
  for (double e : epsilon) {
    if (!std::isfinite(e)) throw Error(ErrorKind::kInvalidParameter, "non-finite epsilon");
  }
  if (!(hbar > 0.0) || !(omega > 0.0) || !std::isfinite(hbar) || !std::isfinite(omega)) {
    throw Error(ErrorKind::kInvalidParameter,
                fmt::format("hbar and omega must be positive, got {} and {}", hbar, omega));
  }
}

MatrixOperator annihilation(int truncation) {
  require_truncation(truncation);
  ComplexMatrix a = ComplexMatrix::Zero(truncation + 1, truncation + 1);
  for (int n = 1; n <= truncation; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return MatrixOperator(std::move(a));
}

MatrixOperator creation(int truncation) { return annihilation(truncation).adjoint(); }

MatrixOperator number_operator(int truncation) {
  require_truncation(truncation);
  ComplexMatrix n = ComplexMatrix::Zero(truncation + 1, truncation + 1);
  for (int k = 0; k <= truncation; ++k) n(k, k) = static_cast<double>(k);
  return MatrixOperator(std::move(n), true);
}

Quadratures quadratures(int truncation, double hbar, double mass, double omega) {
  if (!(hbar > 0.0) || !(mass > 0.0) || !(omega > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter,
                fmt::format("hbar, mass, omega must be positive (got {}, {}, {})", hbar, mass,
                            omega));
  }
  const ComplexMatrix a = annihilation(truncation).entries();
  const ComplexMatrix ad = a.adjoint();
  const double x_scale = std::sqrt(hbar / (2.0 * mass * omega));
  const double p_scale = std::sqrt(hbar * mass * omega / 2.0);
  ComplexMatrix x = x_scale * (ad + a);
  ComplexMatrix p = Complex(0.0, p_scale) * (ad - a);
  return {MatrixOperator(std::move(x), true), MatrixOperator(std::move(p), true)};
}

MatrixOperator hamiltonian(const SpectrumSpec& spec, int truncation) {
  spec.validate();
  require_truncation(truncation);
  ComplexMatrix h = ComplexMatrix::Zero(truncation + 1, truncation + 1);
  for (int n = 0; n <= truncation; ++n) {
    const double e = spec.energy(n);
    if (!std::isfinite(e)) {
      throw Error(ErrorKind::kInvalidParameter, fmt::format("E({}) is not finite", n));
    }
    h(n, n) = e;
  }
  return MatrixOperator(std::move(h), true);
}

TruncatedVector evolve(const TruncatedVector& state, const SpectrumSpec& spec, double t) {
  spec.validate();
  // E(n) t / hbar = omega * s(n) * t; hbar cancels exactly.
  ComplexVector out = state.amplitudes();
  for (int n = 0; n < state.dimension(); ++n) {
    const double phase = spec.omega * spec.level_polynomial(n) * t;
    out(n) *= std::polar(1.0, -phase);
  }
  return TruncatedVector(std::move(out));
}

MatrixOperator projector(int level, int truncation) {
  require_truncation(truncation);
  if (level < 0 || level > truncation) {
    throw Error(ErrorKind::kIndex, fmt::format("projector level {} outside 0..{}", level,
                                               truncation));
  }
  ComplexMatrix e = ComplexMatrix::Zero(truncation + 1, truncation + 1);
  e(level, level) = 1.0;
  return MatrixOperator(std::move(e), true);
}

MatrixOperator commutator(const MatrixOperator& a, const MatrixOperator& b) {
  return a * b - b * a;
}

}  // namespace cqreduce
