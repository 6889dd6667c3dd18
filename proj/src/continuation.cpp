#include "defcon/continuation.hpp"

#include <algorithm>
#include <cmath>

#include "defcon/errors.hpp"

namespace defcon {

namespace {

DeflationState make_state(const DeflationSettings& s, const SolutionSet& known) {
  DeflationState state(s.power, s.shift, s.norm, s.guard);
  for (const FoundRoot& r : known.roots) state.add_root(r.z);
  return state;
}

std::optional<double> residual_norm_or_none(const NonlinearSystem& system, std::span<const double> z) {
  try {
    const double n = norm2(system.residual(z));
    if (std::isfinite(n)) return n;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::NonFiniteResidual) throw;
  }
  return std::nullopt;
}

// Outcome of checking a converged deflated solve against the undeflated system.
enum class Verdict { Accepted, ResidualTooLarge, TooClose };

Verdict verify(const NonlinearSystem& system, const DeflationState& state, const SolverConfig& config,
               const SearchOptions& options, double initial_norm, std::span<const double> z,
               double& residual_norm) {
  const auto n = residual_norm_or_none(system, z);
  if (!n || *n > acceptance_threshold(config, initial_norm)) return Verdict::ResidualTooLarge;
  residual_norm = *n;
  const double radius = options.distinctness_tolerance * (state.norm().norm(z) + 1.0);
  if (state.min_distance(z) <= radius) return Verdict::TooClose;
  return Verdict::Accepted;
}

}  // namespace

std::vector<Vector> SolutionSet::points() const {
  std::vector<Vector> out;
  out.reserve(roots.size());
  for (const FoundRoot& r : roots) out.push_back(r.z);
  return out;
}

SolveResult deflated_solve(const NonlinearSystem& system, const DeflationState& state,
                           std::span<const double> z0, const SolverConfig& config) {
  if (state.empty()) return solve(system, z0, config);
  auto residual = [&](std::span<const double> z) {
    return deflated_residual(state, system.residual(z), z);
  };
  auto linearize = [&](std::span<const double> z) {
    const Vector phi = system.residual(z);
    DeflatedDerivativeParts parts = deflated_derivative_parts(state, phi, z);
    LinearizedSystem lin;
    lin.scale = parts.scale;
    lin.matrix = system.derivative(z);
    lin.rank_one_u = std::move(parts.rank_one_u);
    lin.rank_one_w = std::move(parts.rank_one_w);
    return lin;
  };
  return solve(residual, linearize, z0, config);
}

double acceptance_threshold(const SolverConfig& config, double initial_residual_norm) {
  return std::max(config.atol, config.rtol * initial_residual_norm);
}

std::size_t extend_by_deflated_search(const NonlinearSystem& system, const std::vector<Vector>& guesses,
                                      const DeflationSettings& deflation, const SolverConfig& config,
                                      const SearchOptions& options, SolutionSet& known,
                                      std::optional<double> parameter, std::size_t step) {
  DeflationState state = make_state(deflation, known);
  std::size_t added = 0;
  for (std::size_t g = 0; g < guesses.size(); ++g) {
    const Vector& guess = guesses[g];
    if (guess.size() != system.dimension) {
      throw Error(ErrorCode::InvalidArgument, "deflated_search: guess has wrong dimension");
    }
    while (known.roots.size() < options.max_roots) {
      Event event{"solve", step, static_cast<long>(g), std::nullopt, 0, parameter};
      if (state.min_distance(guess) <= state.guard()) {
        event.kind = "guess-on-root";
        known.events.push_back(event);
        break;
      }
      const auto initial_norm = residual_norm_or_none(system, guess);
      if (!initial_norm) {
        event.kind = "guess-not-finite";
        known.events.push_back(event);
        break;
      }
      const SolveResult result = deflated_solve(system, state, guess, config);
      event.status = result.status;
      event.iterations = result.iterations;
      if (!result.converged()) {
        known.events.push_back(event);
        break;
      }
      double residual = 0.0;
      Vector candidate = result.solution;
      Verdict verdict = verify(system, state, config, options, *initial_norm, candidate, residual);
      if (verdict == Verdict::ResidualTooLarge && options.polish_iterations > 0) {
        SolverConfig polish = config;
        polish.max_iter = options.polish_iterations;
        candidate = solve(system, candidate, polish).solution;
        verdict = verify(system, state, config, options, *initial_norm, candidate, residual);
      }
      if (verdict == Verdict::ResidualTooLarge) {
        event.kind = "rejected";
        known.events.push_back(event);
        break;
      }
      if (verdict == Verdict::TooClose) {
        event.status = SolveStatus::DeflatedRootHit;
        known.events.push_back(event);
        break;
      }
      known.events.push_back(event);
      FoundRoot root;
      root.z = std::move(candidate);
      root.iterations = result.iterations;
      root.residual_norm = residual;
      root.parameter = parameter;
      root.distinctness_radius = options.distinctness_tolerance * (state.norm().norm(root.z) + 1.0);
      state.add_root(root.z);
      known.roots.push_back(std::move(root));
      ++added;
    }
  }
  return added;
}

SolutionSet deflated_search(const NonlinearSystem& system, const std::vector<Vector>& guesses,
                            const DeflationSettings& deflation, const SolverConfig& config,
                            const SearchOptions& options, std::optional<double> parameter) {
  if (guesses.empty()) throw Error(ErrorCode::InvalidArgument, "deflated_search: no initial guesses");
  SolutionSet set;
  extend_by_deflated_search(system, guesses, deflation, config, options, set, parameter);
  return set;
}

SolutionSet advance_branches(const NonlinearSystem& system, SolutionSet current, const std::vector<Vector>& starts,
                             const DeflationSettings& deflation, const SolverConfig& config,
                             const SearchOptions& options, double parameter, std::size_t step) {
  if (starts.size() != current.roots.size()) {
    throw Error(ErrorCode::InvalidArgument, "advance_branches: one start point per branch required");
  }
  DeflationState state(deflation.power, deflation.shift, deflation.norm, deflation.guard);
  SolutionSet next;
  next.events = std::move(current.events);
  next.events.push_back(Event{"step", step, -1, std::nullopt, 0, parameter});
  for (std::size_t b = 0; b < current.roots.size(); ++b) {
    const Vector& start = starts[b];
    Event event{"branch", step, static_cast<long>(b), std::nullopt, 0, parameter};
    const auto initial_norm = residual_norm_or_none(system, start);
    if (!initial_norm) {
      event.kind = "branch-lost";
      next.events.push_back(event);
      continue;
    }
    const SolveResult result = solve(system, start, config);
    event.status = result.status;
    event.iterations = result.iterations;
    double residual = 0.0;
    const Verdict verdict = result.converged()
                                ? verify(system, state, config, options, *initial_norm, result.solution, residual)
                                : Verdict::ResidualTooLarge;
    if (verdict != Verdict::Accepted) {
      event.kind = verdict == Verdict::TooClose ? "branch-merged" : "branch-lost";
      next.events.push_back(event);
      continue;
    }
    next.events.push_back(event);
    FoundRoot continued = std::move(current.roots[b]);
    continued.z = result.solution;
    continued.residual_norm = residual;
    continued.distinctness_radius = options.distinctness_tolerance * (state.norm().norm(continued.z) + 1.0);
    state.add_root(continued.z);
    next.roots.push_back(std::move(continued));
  }
  if (next.roots.empty()) {
    throw Error(ErrorCode::AllBranchesLost,
                "every branch failed at parameter " + std::to_string(parameter));
  }
  extend_by_deflated_search(system, starts, deflation, config, options, next, parameter, step);
  return next;
}

SolutionSet continue_parameter(const SystemFamily& family, const ContinuationPlan& plan,
                               const SolutionSet& initial) {
  if (plan.steps < 1) throw Error(ErrorCode::InvalidArgument, "continue_parameter: need at least one step");
  if (initial.roots.empty()) throw Error(ErrorCode::InvalidArgument, "continue_parameter: no initial branches");
  plan.solver.validate();

  SolutionSet current = initial;
  for (std::size_t step = 1; step <= plan.steps; ++step) {
    const double mu = step == plan.steps
                          ? plan.end
                          : plan.start + (plan.end - plan.start) * static_cast<double>(step) /
                                             static_cast<double>(plan.steps);
    const std::vector<Vector> starts = current.points();
    current = advance_branches(family(mu), std::move(current), starts, plan.deflation, plan.solver, plan.search,
                               mu, step);
  }
  return current;
}

}  // namespace defcon
