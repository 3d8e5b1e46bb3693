#include "cqreduce/dequantize.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cqreduce/error.hpp"

namespace cqreduce {
namespace {

void check_step(double step, double coordinate) {
  if (!(step > 0.0) || step < 1e-12 * std::max(1.0, std::fabs(coordinate))) {
    throw Error(ErrorKind::kAccuracy, fmt::format("step {:.3e} underflows at coordinate {}",
                                                  step, coordinate));
  }
}

double magnitude(double v) { return std::fabs(v); }
double magnitude(const ComplexVector& v) { return v.norm(); }

// Central difference at h and h/2 followed by one Richardson step. Returns
// the extrapolated derivative and |extrapolated - fine|.
template <typename Eval>
auto richardson(const Eval& eval, Chart chart, const std::array<double, 2>& at, int axis,
                double step) {
  check_step(step, at[axis]);
  auto shifted = [&](double delta) {
    std::array<double, 2> c = at;
    c[axis] += delta;
    return eval(chart_point(chart, c[0], c[1]));
  };
  using Value = std::decay_t<decltype(eval(chart_point(chart, at[0], at[1])))>;
  const double half = step / 2.0;
  const Value coarse = (shifted(step) - shifted(-step)) / (2.0 * step);
  const Value fine = (shifted(half) - shifted(-half)) / (2.0 * half);
  const Value extrapolated = (4.0 * fine - coarse) / 3.0;
  const Value gap = extrapolated - fine;
  const double error = magnitude(gap);
  return std::pair<Value, double>{extrapolated, error};
}

template <typename Value>
struct Estimate {
  Value value;
  double error;
  double step;
};

// Halves the step until the Richardson error estimate meets the tolerance
// (relative to max(1, |value|)); fast phase oscillations of deformed states
// need steps well below the default.
template <typename Eval>
auto adaptive_richardson(const Eval& eval, Chart chart, const std::array<double, 2>& at,
                         int axis, double step, double tolerance) {
  constexpr int kMaxHalvings = 8;
  for (int halving = 0;; ++halving) {
    auto [value, error] = richardson(eval, chart, at, axis, step);
    const double scale = std::max(1.0, magnitude(value));
    if (error <= tolerance * scale) {
      return Estimate<decltype(value)>{std::move(value), error, step};
    }
    if (halving == kMaxHalvings) {
      throw Error(ErrorKind::kAccuracy,
                  fmt::format("derivative error estimate {:.3e} exceeds tolerance {:.1e} "
                              "at step {:.3e}",
                              error, tolerance, step));
    }
    step /= 2.0;
  }
}

}  // namespace

std::string_view to_string(Chart chart) {
  return chart == Chart::kCartesian ? "cartesian" : "polar";
}

std::array<double, 2> chart_coordinates(Chart chart, const PhasePoint& point) {
  if (chart == Chart::kCartesian) return {point.x(), point.p()};
  return {point.rho(), point.phi()};
}

PhasePoint chart_point(Chart chart, double u, double v) {
  return chart == Chart::kCartesian ? PhasePoint::cartesian(u, v) : PhasePoint::polar(u, v);
}

void GridSpec::validate() const {
  if (x_steps < 1 || p_steps < 1) {
    throw Error(ErrorKind::kInvalidParameter, "grid step counts must be positive");
  }
  if ((x_steps > 1 && !(x_max > x_min)) || (p_steps > 1 && !(p_max > p_min))) {
    throw Error(ErrorKind::kInvalidParameter, "grid ranges must be increasing");
  }
}

double GridSpec::x_at(int i) const {
  return x_steps == 1 ? x_min : x_min + (x_max - x_min) * i / (x_steps - 1);
}

double GridSpec::p_at(int j) const {
  return p_steps == 1 ? p_min : p_min + (p_max - p_min) * j / (p_steps - 1);
}

std::vector<PhasePoint> GridSpec::points() const {
  validate();
  std::vector<PhasePoint> out;
  out.reserve(static_cast<std::size_t>(x_steps) * p_steps);
  for (int i = 0; i < x_steps; ++i) {
    for (int j = 0; j < p_steps; ++j) out.push_back(PhasePoint::cartesian(x_at(i), p_at(j)));
  }
  return out;
}

Complex expectation(const MatrixOperator& op, const FamilySpec& family, const PhasePoint& point) {
  if (op.truncation() != family.truncation) {
    throw Error(ErrorKind::kShape, fmt::format("operator truncation {} vs family truncation {}",
                                               op.truncation(), family.truncation));
  }
  const Complex value = op.expectation(family_state(family, point));
  if (op.hermitian_flag()) return {value.real(), 0.0};
  return value;
}

MatrixOperator jordan(const MatrixOperator& a, const MatrixOperator& b) {
  require_same_shape(a, b);
  const ComplexMatrix sym = 0.5 * (a.entries() * b.entries() + b.entries() * a.entries());
  if (a.hermitian_flag() && b.hermitian_flag()) {
    // AB + BA is hermitian exactly; remove the rounding asymmetry.
    return MatrixOperator(ComplexMatrix(0.5 * (sym + sym.adjoint())), true);
  }
  return MatrixOperator(sym);
}

MatrixOperator lie(const MatrixOperator& a, const MatrixOperator& b, double hbar) {
  require_same_shape(a, b);
  if (!(hbar > 0.0)) throw Error(ErrorKind::kInvalidParameter, "hbar must be positive");
  const ComplexMatrix c = a.entries() * b.entries() - b.entries() * a.entries();
  const ComplexMatrix out = Complex(0.0, -1.0 / hbar) * c;
  if (a.hermitian_flag() && b.hermitian_flag()) {
    return MatrixOperator(ComplexMatrix(0.5 * (out + out.adjoint())), true);
  }
  return MatrixOperator(out);
}

ScalarField scalar_field(const MatrixOperator& op, const FamilySpec& family, const GridSpec& grid,
                         std::string label) {
  ScalarField field;
  field.grid = grid;
  field.label = std::move(label);
  field.family = family;
  for (const auto& point : grid.points()) {
    field.max_tail = std::max(field.max_tail, truncation_tail(point.rho(), family.truncation));
    field.values.push_back(expectation(op, family, point));
  }
  return field;
}

MatrixOperator spectral_term(int level, double hbar_omega, int truncation) {
  return (hbar_omega * level) * projector(level, truncation);
}

double projector_symbol(int level, double rho) {
  if (level < 0) throw Error(ErrorKind::kIndex, "negative level");
  if (rho == 0.0) return level == 0 ? 1.0 : 0.0;
  return std::exp(-rho + level * std::log(rho) - std::lgamma(level + 1.0));
}

double spectral_term_symbol(int level, double rho, double hbar_omega) {
  if (level < 1) throw Error(ErrorKind::kIndex, "spectral term symbol needs k >= 1");
  if (rho == 0.0) return 0.0;
  return hbar_omega * std::exp(-rho + level * std::log(rho) - std::lgamma(static_cast<double>(level)));
}

Covector differential(const PointFunction& f, const PhasePoint& point, Chart chart, double step,
                      double tolerance) {
  const auto at = chart_coordinates(chart, point);
  Covector out;
  for (int axis = 0; axis < 2; ++axis) {
    const auto est = adaptive_richardson(f, chart, at, axis, step, tolerance);
    out.value[axis] = est.value;
    out.error[axis] = est.error;
    out.step[axis] = est.step;
  }
  return out;
}

double contract(const Eigen::Matrix2d& tensor, const std::array<double, 2>& a,
                const std::array<double, 2>& b) {
  const Eigen::Vector2d va(a[0], a[1]);
  const Eigen::Vector2d vb(b[0], b[1]);
  return va.dot(tensor * vb);
}

Eigen::Matrix2d canonical_poisson_tensor(double hbar) {
  Eigen::Matrix2d lambda;
  lambda << 0.0, 0.5 / hbar, -0.5 / hbar, 0.0;
  return lambda;
}

TensorAssembly tensor_assemble(const std::vector<MatrixOperator>& basis, const FamilySpec& family,
                               const PhasePoint& point, double step) {
  if (basis.size() != 2) {
    throw Error(ErrorKind::kShape,
                fmt::format("need exactly 2 basis operators, got {}", basis.size()));
  }
  for (const auto& op : basis) {
    if (op.hermiticity_defect() > kHermitianTolerance) {
      throw Error(ErrorKind::kInvalidParameter, "basis operators must be hermitian");
    }
  }

  TensorAssembly out;
  for (int j = 0; j < 2; ++j) {
    const auto& op = basis[static_cast<std::size_t>(j)];
    const auto df = differential(
        [&](const PhasePoint& m) { return expectation(op, family, m).real(); }, point,
        Chart::kCartesian, step);
    out.differentials(j, 0) = df.value[0];
    out.differentials(j, 1) = df.value[1];
    out.max_derivative_error =
        std::max({out.max_derivative_error, df.error[0], df.error[1]});
  }
  const double det = out.differentials.determinant();
  if (std::fabs(det) < kDegenerateBasisThreshold) {
    throw Error(ErrorKind::kDegenerateBasis,
                fmt::format("df_A1 ^ df_A2 = {:.3e} at ({}, {})", det, point.x(), point.p()));
  }
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(out.differentials);
  out.condition = svd.singularValues()(0) / svd.singularValues()(1);

  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) {
      const auto& a = basis[static_cast<std::size_t>(j)];
      const auto& b = basis[static_cast<std::size_t>(k)];
      out.basis_g(j, k) = expectation(jordan(a, b), family, point).real();
      out.basis_lambda(j, k) =
          j == k ? 0.0 : expectation(lie(a, b, family.hbar), family, point).real();
    }
  }
  // A covector alpha has basis coefficients c = J^{-T} alpha, so the
  // coordinate components are J^{-1} T_basis J^{-T}.
  const Eigen::Matrix2d inv = out.differentials.inverse();
  out.g = inv * out.basis_g * inv.transpose();
  out.lambda = inv * out.basis_lambda * inv.transpose();
  return out;
}

TensorSample pullback_hermitean(const FamilySpec& family, const PhasePoint& point, Chart chart,
                                double step, double tolerance) {
  const auto at = chart_coordinates(chart, point);
  const auto state = [&family](const PhasePoint& m) {
    return ComplexVector(family_state(family, m).amplitudes());
  };
  const ComplexVector psi = state(point);
  std::array<ComplexVector, 2> partial;
  double worst = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    auto est = adaptive_richardson(state, chart, at, axis, step, tolerance);
    worst = std::max(worst, est.error);
    partial[static_cast<std::size_t>(axis)] = std::move(est.value);
  }

  const double n2 = psi.squaredNorm();
  TensorSample out{point, chart, Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero(), worst};
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) {
      const auto& dj = partial[static_cast<std::size_t>(j)];
      const auto& dk = partial[static_cast<std::size_t>(k)];
      const Complex h = dj.dot(dk) / n2 - dj.dot(psi) * psi.dot(dk) / (n2 * n2);
      out.g(j, k) = 2.0 * h.real();
      out.omega_prime(j, k) = 2.0 * h.imag();
    }
  }
  return out;
}

RemarkOperators remark_operators(int truncation) {
  ComplexMatrix a = ComplexMatrix::Zero(truncation + 1, truncation + 1);
  ComplexMatrix b = ComplexMatrix::Zero(truncation + 1, truncation + 1);
  a(1, 0) = 0.5;
  a(0, 1) = 0.5;
  b(1, 0) = Complex(0.0, 0.5);
  b(0, 1) = Complex(0.0, -0.5);
  return {MatrixOperator(std::move(a), true), MatrixOperator(std::move(b), true)};
}

RemarkReport remark_demo(const FamilySpec& family, const GridSpec& grid) {
  if (family.kind != FamilyKind::kCanonical) {
    throw Error(ErrorKind::kInvalidParameter, "remark demo runs on the canonical family");
  }
  const auto ops = remark_operators(family.truncation);
  const MatrixOperator bracket = lie(ops.a, ops.b, family.hbar);
  const Eigen::Matrix2d lambda = canonical_poisson_tensor(family.hbar);
  const auto f_a = [&](const PhasePoint& m) { return expectation(ops.a, family, m).real(); };
  const auto f_b = [&](const PhasePoint& m) { return expectation(ops.b, family, m).real(); };

  RemarkReport report;
  for (const auto& point : grid.points()) {
    const double rho = point.rho();
    const double lie_value = expectation(bracket, family, point).real();
    const double lambda_value =
        contract(lambda, differential(f_a, point).value, differential(f_b, point).value);
    const double closed_lie = std::exp(-rho) * (1.0 - rho) / (2.0 * family.hbar);
    const double closed_lambda = std::exp(-2.0 * rho) * (1.0 - 2.0 * rho) / (2.0 * family.hbar);

    report.x.push_back(point.x());
    report.p.push_back(point.p());
    report.f_lie.push_back(lie_value);
    report.lambda_bracket.push_back(lambda_value);
    report.difference.push_back(lambda_value - lie_value);
    report.closed_lie.push_back(closed_lie);
    report.closed_lambda.push_back(closed_lambda);
    report.max_lie_error = std::max(report.max_lie_error, std::fabs(lie_value - closed_lie));
    report.max_lambda_error =
        std::max(report.max_lambda_error, std::fabs(lambda_value - closed_lambda));
    report.max_difference = std::max(report.max_difference, std::fabs(lambda_value - lie_value));
  }
  return report;
}

}  // namespace cqreduce
