#include "defcon/reformulate.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "defcon/errors.hpp"

namespace defcon {

namespace {

enum class BoundKind { Free, LowerOnly, UpperOnly, Both };

BoundKind classify(double lower, double upper) {
  const bool has_lower = std::isfinite(lower);
  const bool has_upper = std::isfinite(upper);
  if (has_lower && has_upper) return BoundKind::Both;
  if (has_lower) return BoundKind::LowerOnly;
  if (has_upper) return BoundKind::UpperOnly;
  return BoundKind::Free;
}

}  // namespace

const char* to_string(NcpFunctionKind kind) noexcept {
  switch (kind) {
    case NcpFunctionKind::FischerBurmeister: return "fb";
    case NcpFunctionKind::MinMax: return "mp";
  }
  return "unknown";
}

MixedComplementarityProblem::MixedComplementarityProblem(std::string name, std::size_t dimension,
                                                         ResidualMap residual, DerivativeMap derivative,
                                                         Vector lower, Vector upper,
                                                         std::optional<double> parameter)
    : name_(std::move(name)),
      dimension_(dimension),
      residual_(std::move(residual)),
      derivative_(std::move(derivative)),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      parameter_(parameter) {
  if (!residual_) throw Error(ErrorCode::InvalidArgument, "MCP: residual map is required");
  if (lower_.size() != dimension_ || upper_.size() != dimension_) {
    throw Error(ErrorCode::InvalidArgument, "MCP: bound vectors must have the problem dimension");
  }
  for (std::size_t i = 0; i < dimension_; ++i) {
    if (std::isnan(lower_[i]) || std::isnan(upper_[i]) || lower_[i] > upper_[i] ||
        lower_[i] == kInfinity || upper_[i] == -kInfinity) {
      throw Error(ErrorCode::InvalidArgument, "MCP: inconsistent bounds at index " + std::to_string(i));
    }
  }
}

MixedComplementarityProblem MixedComplementarityProblem::ncp(std::string name, std::size_t dimension,
                                                             ResidualMap residual, DerivativeMap derivative,
                                                             std::optional<double> parameter) {
  return MixedComplementarityProblem(std::move(name), dimension, std::move(residual), std::move(derivative),
                                     Vector(dimension, 0.0), Vector(dimension, kInfinity), parameter);
}

Vector MixedComplementarityProblem::evaluate(std::span<const double> z) const {
  if (z.size() != dimension_) throw Error(ErrorCode::InvalidArgument, "MCP: point has wrong dimension");
  Vector f = residual_(z);
  if (f.size() != dimension_) throw Error(ErrorCode::InvalidArgument, "MCP: residual has wrong dimension");
  for (double v : f) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteResidual, "MCP: residual is not finite");
  }
  return f;
}

DenseMatrix MixedComplementarityProblem::evaluate_derivative(std::span<const double> z) const {
  if (derivative_) {
    DenseMatrix d = derivative_(z);
    if (d.rows() != dimension_ || d.cols() != dimension_) {
      throw Error(ErrorCode::InvalidArgument, "MCP: derivative has wrong shape");
    }
    return d;
  }
  if (!allow_finite_differences) {
    throw Error(ErrorCode::DerivativeUnavailable, "MCP: no analytic derivative and finite differences disabled");
  }
  const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
  const Vector f0 = evaluate(z);
  DenseMatrix d(dimension_, dimension_);
  Vector shifted(z.begin(), z.end());
  for (std::size_t j = 0; j < dimension_; ++j) {
    const double step = root_eps * (1.0 + std::abs(z[j]));
    shifted[j] = z[j] + step;
    const Vector f1 = evaluate(shifted);
    shifted[j] = z[j];
    for (std::size_t i = 0; i < dimension_; ++i) d(i, j) = (f1[i] - f0[i]) / step;
  }
  return d;
}

double phi(NcpFunctionKind kind, double a, double b) {
  switch (kind) {
    case NcpFunctionKind::FischerBurmeister: return std::hypot(a, b) - a - b;
    case NcpFunctionKind::MinMax: return b - std::max(0.0, b - a);
  }
  return 0.0;
}

std::pair<double, double> phi_derivative(NcpFunctionKind kind, double a, double b) {
  switch (kind) {
    case NcpFunctionKind::FischerBurmeister: {
      const double r = std::hypot(a, b);
      if (r == 0.0) {
        const double c = 1.0 / std::sqrt(2.0) - 1.0;
        return {c, c};
      }
      return {a / r - 1.0, b / r - 1.0};
    }
    case NcpFunctionKind::MinMax:
      if (b - a > 0.0) return {1.0, 0.0};
      return {0.0, 1.0};
  }
  return {0.0, 0.0};
}

namespace {

// MinMax keeps the sign of min(a, b) and Fischer-Burmeister reverses it, so
// the inner upper-bound term is negated only for MinMax.
double inner_sign(NcpFunctionKind kind) { return kind == NcpFunctionKind::MinMax ? -1.0 : 1.0; }

}  // namespace

Vector assemble_residual(const MixedComplementarityProblem& problem, std::span<const double> z,
                         NcpFunctionKind kind) {
  const Vector f = problem.evaluate(z);
  const Vector& l = problem.lower();
  const Vector& u = problem.upper();
  Vector out(problem.dimension());
  for (std::size_t i = 0; i < out.size(); ++i) {
    switch (classify(l[i], u[i])) {
      case BoundKind::Free: out[i] = f[i]; break;
      case BoundKind::LowerOnly: out[i] = phi(kind, z[i] - l[i], f[i]); break;
      case BoundKind::UpperOnly: out[i] = -phi(kind, u[i] - z[i], -f[i]); break;
      case BoundKind::Both:
        out[i] = phi(kind, z[i] - l[i], inner_sign(kind) * phi(kind, u[i] - z[i], -f[i]));
        break;
    }
  }
  return out;
}

DenseMatrix assemble_newton_derivative(const MixedComplementarityProblem& problem,
                                       std::span<const double> z, NcpFunctionKind kind) {
  const Vector f = problem.evaluate(z);
  const DenseMatrix jac = problem.evaluate_derivative(z);
  const Vector& l = problem.lower();
  const Vector& u = problem.upper();
  const std::size_t n = problem.dimension();
  DenseMatrix h(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    // Row i = d_diag * e_i^T + d_row * F'_i(z).
    double d_diag = 0.0;
    double d_row = 1.0;
    switch (classify(l[i], u[i])) {
      case BoundKind::Free: break;
      case BoundKind::LowerOnly: std::tie(d_diag, d_row) = phi_derivative(kind, z[i] - l[i], f[i]); break;
      case BoundKind::UpperOnly: std::tie(d_diag, d_row) = phi_derivative(kind, u[i] - z[i], -f[i]); break;
      case BoundKind::Both: {
        const auto [ia, ib] = phi_derivative(kind, u[i] - z[i], -f[i]);
        const double c = inner_sign(kind);
        const auto [oa, ob] = phi_derivative(kind, z[i] - l[i], c * phi(kind, u[i] - z[i], -f[i]));
        d_diag = oa - c * ob * ia;
        d_row = -c * ob * ib;
        break;
      }
    }
    for (std::size_t j = 0; j < n; ++j) h(i, j) = d_row * jac(i, j);
    h(i, i) += d_diag;
  }
  return h;
}

NonlinearSystem reformulated_system(MixedComplementarityProblem problem, NcpFunctionKind kind) {
  auto shared = std::make_shared<const MixedComplementarityProblem>(std::move(problem));
  NonlinearSystem system;
  system.dimension = shared->dimension();
  system.residual = [shared, kind](std::span<const double> z) { return assemble_residual(*shared, z, kind); };
  system.derivative = [shared, kind](std::span<const double> z) -> AnyMatrix {
    return assemble_newton_derivative(*shared, z, kind);
  };
  return system;
}

}  // namespace defcon
