#pragma once

// Semismooth reformulation of mixed complementarity problems.
//
// MCP(F, l, u): find z with, for every index i, exactly one of
//   l_i <= z_i <= u_i and F_i(z) = 0,
//   z_i = l_i and F_i(z) > 0,
//   z_i = u_i and F_i(z) < 0.
// An NCP function phi turns this into the square nonsmooth system Phi(z) = 0.

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "defcon/linalg.hpp"
#include "defcon/solver.hpp"

namespace defcon {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class NcpFunctionKind { FischerBurmeister, MinMax };

const char* to_string(NcpFunctionKind kind) noexcept;

using ResidualMap = std::function<Vector(std::span<const double>)>;
using DerivativeMap = std::function<DenseMatrix(std::span<const double>)>;

class MixedComplementarityProblem {
 public:
  // `derivative` may be empty; assembly then falls back to forward differences
  // unless `allow_finite_differences` is false.
  MixedComplementarityProblem(std::string name, std::size_t dimension, ResidualMap residual,
                              DerivativeMap derivative, Vector lower, Vector upper,
                              std::optional<double> parameter = std::nullopt);

  // NCP(F): l = 0, u = +inf.
  static MixedComplementarityProblem ncp(std::string name, std::size_t dimension, ResidualMap residual,
                                         DerivativeMap derivative,
                                         std::optional<double> parameter = std::nullopt);

  const std::string& name() const noexcept { return name_; }
  std::size_t dimension() const noexcept { return dimension_; }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }
  std::optional<double> parameter() const noexcept { return parameter_; }
  bool has_analytic_derivative() const noexcept { return static_cast<bool>(derivative_); }

  bool allow_finite_differences = true;

  // Throws Error(NonFiniteResidual) if F(z) has a NaN or infinity.
  Vector evaluate(std::span<const double> z) const;
  // Analytic F'(z), or forward differences with step sqrt(eps) * (1 + |z_j|).
  DenseMatrix evaluate_derivative(std::span<const double> z) const;

 private:
  std::string name_;
  std::size_t dimension_;
  ResidualMap residual_;
  DerivativeMap derivative_;
  Vector lower_;
  Vector upper_;
  std::optional<double> parameter_;
};

double phi(NcpFunctionKind kind, double a, double b);

// One element of the generalized derivative of phi at (a, b).
// Fischer-Burmeister at the origin uses the (1, 1)/sqrt(2) direction; MinMax
// picks (0, 1) on the tie b == a.
std::pair<double, double> phi_derivative(NcpFunctionKind kind, double a, double b);

Vector assemble_residual(const MixedComplementarityProblem& problem, std::span<const double> z,
                         NcpFunctionKind kind);

DenseMatrix assemble_newton_derivative(const MixedComplementarityProblem& problem,
                                       std::span<const double> z, NcpFunctionKind kind);

// Phi and its Newton derivative packaged for the solver and deflated search.
NonlinearSystem reformulated_system(MixedComplementarityProblem problem, NcpFunctionKind kind);

}  // namespace defcon
