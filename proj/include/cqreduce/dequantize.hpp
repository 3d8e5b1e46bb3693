#pragma once

// Dequantized symbols f_A(m) = <m|A|m>, the Jordan and Lie brackets, and the
// 2x2 tensors they induce on the plane.
//
// Conventions used throughout:
//   * the wedge of two vectors is u^v = (u(x)v - v(x)u)/2, so the bracket
//     tensor recovered from (X, P) on canonical states has component
//     Lambda^{xp} = 1/(2 hbar), i.e. Lambda = (1/hbar) d_x ^ d_p;
//   * the pulled-back hermitean tensor is split as h = (g + i omega')/2.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cqreduce/coherent.hpp"
#include "cqreduce/fock.hpp"

namespace cqreduce {

enum class Chart { kCartesian, kPolar };

std::string_view to_string(Chart chart);

/// Chart coordinates of a point: (x, p) or (rho, phi).
std::array<double, 2> chart_coordinates(Chart chart, const PhasePoint& point);
PhasePoint chart_point(Chart chart, double u, double v);

struct GridSpec {
  double x_min = -2.0;
  double x_max = 2.0;
  int x_steps = 9;
  double p_min = -2.0;
  double p_max = 2.0;
  int p_steps = 9;

  void validate() const;
  double x_at(int i) const;
  double p_at(int j) const;
  /// Row-major over x, then p.
  std::vector<PhasePoint> points() const;
};

struct ScalarField {
  GridSpec grid;
  std::string label;
  FamilySpec family;
  double max_tail = 0.0;
  std::vector<Complex> values;  // same order as grid.points()

  Complex at(int i, int j) const { return values[static_cast<std::size_t>(i * grid.p_steps + j)]; }
};

Complex expectation(const MatrixOperator& op, const FamilySpec& family, const PhasePoint& point);

/// (AB + BA)/2
MatrixOperator jordan(const MatrixOperator& a, const MatrixOperator& b);
/// -(i/hbar)[A, B]
MatrixOperator lie(const MatrixOperator& a, const MatrixOperator& b, double hbar);

ScalarField scalar_field(const MatrixOperator& op, const FamilySpec& family, const GridSpec& grid,
                         std::string label);

/// hbar*omega*k*E_k, the k-th term of the spectral sum of a*a scaled by hbar*omega.
MatrixOperator spectral_term(int level, double hbar_omega, int truncation);

/// <z|E_k|z> on canonical states: e^{-rho} rho^k / k!.
double projector_symbol(int level, double rho);
/// hbar*omega e^{-rho} rho^k / (k-1)!, the symbol of spectral_term (k >= 1).
double spectral_term_symbol(int level, double rho, double hbar_omega);

inline constexpr double kDefaultStep = 1e-4;
inline constexpr double kDefaultDerivativeTolerance = 1e-6;

struct Covector {
  std::array<double, 2> value{};
  std::array<double, 2> error{};  // |Richardson - fine stencil|
  std::array<double, 2> step{};   // step finally used per axis
};

using PointFunction = std::function<double(const PhasePoint&)>;

/// Central differences at steps h and h/2 with one Richardson step, along the
/// coordinate lines of the chart. The step is halved (up to 8 times) while the
/// error estimate exceeds tolerance * max(1, |derivative|).
Covector differential(const PointFunction& f, const PhasePoint& point,
                      Chart chart = Chart::kCartesian, double step = kDefaultStep,
                      double tolerance = kDefaultDerivativeTolerance);

/// a^T T b for a (2,0) tensor given by its component matrix.
double contract(const Eigen::Matrix2d& tensor, const std::array<double, 2>& a,
                const std::array<double, 2>& b);

/// Lambda = (1/hbar) d_x ^ d_p in components.
Eigen::Matrix2d canonical_poisson_tensor(double hbar);

struct TensorAssembly {
  Eigen::Matrix2d g;             // (x, p) components
  Eigen::Matrix2d lambda;        // (x, p) components
  Eigen::Matrix2d basis_g;       // f_{A_j . A_k}
  Eigen::Matrix2d basis_lambda;  // f_{[[A_j, A_k]]}
  Eigen::Matrix2d differentials; // row j = df_{A_j} in (x, p)
  double condition = 0.0;        // 2-norm condition number of the differential matrix
  double max_derivative_error = 0.0;
};

inline constexpr double kDegenerateBasisThreshold = 1e-8;

/// Builds G and Lambda from two hermitian operators whose differentials span
/// the cotangent plane, and expresses them in the (x, p) coordinate basis.
TensorAssembly tensor_assemble(const std::vector<MatrixOperator>& basis, const FamilySpec& family,
                               const PhasePoint& point, double step = kDefaultStep);

struct TensorSample {
  PhasePoint point;
  Chart chart;
  Eigen::Matrix2d g;
  Eigen::Matrix2d omega_prime;
  double max_derivative_error = 0.0;
};

/// Pulls back h = <dpsi|dpsi>/<psi|psi> - <dpsi|psi><psi|dpsi>/<psi|psi>^2
/// along the immersion using finite-difference partials in the given chart.
TensorSample pullback_hermitean(const FamilySpec& family, const PhasePoint& point, Chart chart,
                                double step = kDefaultStep,
                                double tolerance = kDefaultDerivativeTolerance);

struct RemarkOperators {
  MatrixOperator a;  // (|1><0| + |0><1|)/2
  MatrixOperator b;  // (i/2)(|1><0| - |0><1|)
};

RemarkOperators remark_operators(int truncation);

struct RemarkReport {
  std::vector<double> x, p;
  std::vector<double> f_lie;           // f_{[[A,B]]}
  std::vector<double> lambda_bracket;  // Lambda(df_A, df_B)
  std::vector<double> difference;      // lambda_bracket - f_lie
  std::vector<double> closed_lie;      // e^{-rho}(1 - rho)/(2 hbar)
  std::vector<double> closed_lambda;   // e^{-2 rho}(1 - 2 rho)/(2 hbar)
  double max_lie_error = 0.0;
  double max_lambda_error = 0.0;
  double max_difference = 0.0;
};

/// Contrasts the symbol of the operator bracket with the Poisson bracket of
/// the symbols for the pair A, B above on canonical states.
RemarkReport remark_demo(const FamilySpec& family, const GridSpec& grid);

}  // namespace cqreduce
