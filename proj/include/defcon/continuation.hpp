#pragma once

// Deflated search over a pool of initial guesses, and zero-order parameter
// continuation that re-runs the deflated search at every step.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "defcon/deflation.hpp"
#include "defcon/solver.hpp"

namespace defcon {

struct DeflationSettings {
  double power = 2.0;
  double shift = 1.0;
  NormSpec norm;
  double guard = 1e-10;
};

struct SearchOptions {
  std::size_t max_roots = std::numeric_limits<std::size_t>::max();
  // Roots closer than tol * (||r|| + 1) to a known root are rejected.
  double distinctness_tolerance = 1e-6;
  // Undeflated Newton steps applied to a converged deflated solution whose
  // undeflated residual misses the acceptance threshold; 0 disables.
  std::size_t polish_iterations = 3;
};

struct FoundRoot {
  Vector z;
  std::size_t iterations = 0;
  double residual_norm = 0.0;  // undeflated ||Phi(z)||_2
  std::optional<double> parameter;
  double distinctness_radius = 0.0;
};

struct Event {
  std::string kind;  // "solve", "branch", "branch-lost", "newcomer", "step", ...
  std::size_t step = 0;
  long branch = -1;  // -1 when not tied to a branch
  std::optional<SolveStatus> status;
  std::size_t iterations = 0;
  std::optional<double> parameter;
};

struct SolutionSet {
  std::vector<FoundRoot> roots;
  std::vector<Event> events;

  std::size_t size() const noexcept { return roots.size(); }
  std::vector<Vector> points() const;
};

// Semismooth Newton on G = alpha * Phi, with the rank-one structured derivative.
SolveResult deflated_solve(const NonlinearSystem& system, const DeflationState& state,
                           std::span<const double> z0, const SolverConfig& config);

// Threshold the undeflated residual must meet for a deflated solve to count
// as a root: max(atol, rtol * ||Phi(guess)||).
double acceptance_threshold(const SolverConfig& config, double initial_residual_norm);

// Runs the deflated search with `known` already deflated, appending every new
// root to `known` (tagged with `parameter`). Returns the number added.
std::size_t extend_by_deflated_search(const NonlinearSystem& system, const std::vector<Vector>& guesses,
                                      const DeflationSettings& deflation, const SolverConfig& config,
                                      const SearchOptions& options, SolutionSet& known,
                                      std::optional<double> parameter = std::nullopt, std::size_t step = 0);

// For each guess: solve the deflated problem; on convergence verify the
// undeflated residual, record and deflate the root, then retry the same guess.
// Any other outcome moves on to the next guess.
SolutionSet deflated_search(const NonlinearSystem& system, const std::vector<Vector>& guesses,
                            const DeflationSettings& deflation, const SolverConfig& config,
                            const SearchOptions& options = {}, std::optional<double> parameter = std::nullopt);

// One continuation step on `system`: re-solves branch b of `current` from
// starts[b] without deflation, drops branches that fail or converge onto a
// branch already re-solved ("branch-merged"), then runs a newcomer deflated
// search from `starts` with every surviving branch deflated. Events carry over.
// Throws Error(AllBranchesLost) if no branch survives.
SolutionSet advance_branches(const NonlinearSystem& system, SolutionSet current, const std::vector<Vector>& starts,
                             const DeflationSettings& deflation, const SolverConfig& config,
                             const SearchOptions& options, double parameter, std::size_t step);

struct ContinuationPlan {
  double start = 0.0;
  double end = 1.0;
  std::size_t steps = 1;
  SolverConfig solver;
  DeflationSettings deflation;
  SearchOptions search;
};

using SystemFamily = std::function<NonlinearSystem(double parameter)>;

// Zero-order continuation from plan.start to plan.end in equispaced steps,
// one advance_branches call per step with the previous points as starts.
// Throws Error(AllBranchesLost) if a step ends with no branch alive.
SolutionSet continue_parameter(const SystemFamily& family, const ContinuationPlan& plan,
                               const SolutionSet& initial);

}  // namespace defcon
