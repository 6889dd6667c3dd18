#pragma once

// Semismooth Newton driver: z_{k+1} = z_k - H(z_k)^{-1} G(z_k), optionally
// damped by backtracking on the merit function 0.5 * ||G||^2.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "defcon/linalg.hpp"

namespace defcon {

// A square nonsmooth system together with a Newton derivative.
struct NonlinearSystem {
  std::size_t dimension = 0;
  std::function<Vector(std::span<const double>)> residual;
  std::function<AnyMatrix(std::span<const double>)> derivative;
};

// The Newton matrix scale * matrix + u w^T. Empty u/w means no rank-one term.
struct LinearizedSystem {
  double scale = 1.0;
  AnyMatrix matrix;
  Vector rank_one_u;
  Vector rank_one_w;
};

using ResidualFn = std::function<Vector(std::span<const double>)>;
using LinearizationFn = std::function<LinearizedSystem(std::span<const double>)>;

// Backtracking halves the step; Cubic fits a quadratic, then cubic, model of
// the merit function and safeguards the new step to [0.1, 0.5] of the last.
enum class LineSearch { None, Backtracking, Cubic };

struct BacktrackingOptions {
  double reduction = 0.5;
  double sufficient_decrease = 1e-4;
  double min_step = 1e-10;
};

struct SolverConfig {
  double atol = 1e-10;
  double rtol = 1e-8;
  std::size_t max_iter = 100;
  double divergence_tol = 1e8;
  LineSearch line_search = LineSearch::None;
  BacktrackingOptions backtracking;
  // With a line search, a singular Newton matrix H falls back to the
  // Levenberg-Marquardt step (H^T H + mu I) d = -H^T G, mu = this * max|H^T H|.
  // Zero reports SingularJacobian instead.
  double singular_regularization = 1e-10;
  FactorOptions factor;
  RankOneOptions rank_one;

  // Throws Error(InvalidArgument) for non-positive tolerances or max_iter == 0.
  void validate() const;
};

enum class SolveStatus {
  Converged,
  MaxIterations,
  SingularJacobian,
  Diverged,
  DeflatedRootHit,
  LineSearchFailed,
};

const char* to_string(SolveStatus status) noexcept;

struct SolveResult {
  SolveStatus status = SolveStatus::MaxIterations;
  Vector solution;
  std::size_t iterations = 0;
  std::vector<double> residual_history;  // ||G(z_k)||_2, k = 0..iterations

  bool converged() const noexcept { return status == SolveStatus::Converged; }
};

SolveResult solve(const ResidualFn& residual, const LinearizationFn& linearize, std::span<const double> z0,
                  const SolverConfig& config);

// Undeflated convenience overload.
SolveResult solve(const NonlinearSystem& system, std::span<const double> z0, const SolverConfig& config);

}  // namespace defcon
