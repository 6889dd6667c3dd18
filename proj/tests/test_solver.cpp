#include <doctest.h>

#include <cmath>
#include <limits>

#include "defcon/errors.hpp"
#include "defcon/solver.hpp"

using namespace defcon;

namespace {

NonlinearSystem scalar(std::function<double(double)> f, std::function<double(double)> df) {
  NonlinearSystem s;
  s.dimension = 1;
  s.residual = [f](std::span<const double> z) { return Vector{f(z[0])}; };
  s.derivative = [df](std::span<const double> z) -> AnyMatrix { return DenseMatrix(1, 1, {df(z[0])}); };
  return s;
}

NonlinearSystem linear_system() {
  NonlinearSystem s;
  s.dimension = 2;
  s.residual = [](std::span<const double> z) { return Vector{3 * z[0] + z[1] - 9, z[0] + 2 * z[1] - 8}; };
  s.derivative = [](std::span<const double>) -> AnyMatrix { return DenseMatrix(2, 2, {3, 1, 1, 2}); };
  return s;
}

SolverConfig with_line_search(LineSearch ls) {
  SolverConfig c;
  c.line_search = ls;
  return c;
}

}  // namespace

TEST_CASE("a linear system converges in one iteration") {
  const SolveResult r = solve(linear_system(), Vector{0.0, 0.0}, SolverConfig{});
  CHECK(r.status == SolveStatus::Converged);
  CHECK(r.iterations == 1);
  CHECK(r.solution[0] == doctest::Approx(2.0));
  CHECK(r.solution[1] == doctest::Approx(3.0));
}

TEST_CASE("smooth problems converge quadratically") {
  const auto sys = scalar([](double x) { return x * x - 2.0; }, [](double x) { return 2.0 * x; });
  const SolveResult r = solve(sys, Vector{3.0}, SolverConfig{});
  REQUIRE(r.status == SolveStatus::Converged);
  CHECK(r.solution[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  const auto& h = r.residual_history;
  REQUIRE(h.size() == r.iterations + 1);
  for (std::size_t k = 2; k + 1 < h.size(); ++k) {
    if (h[k] < 1e-6) CHECK(h[k + 1] <= 10.0 * h[k] * h[k]);
  }
}

TEST_CASE("convergence test uses max(atol, rtol * ||G0||)") {
  const auto sys = scalar([](double x) { return x * x - 2.0; }, [](double x) { return 2.0 * x; });
  SolverConfig c;
  c.atol = 1e-3;
  c.rtol = 1e-12;
  const SolveResult r = solve(sys, Vector{3.0}, c);
  REQUIRE(r.converged());
  CHECK(r.residual_history.back() <= 1e-3);
  CHECK(r.residual_history[r.residual_history.size() - 2] > 1e-3);
  const SolveResult at_root = solve(sys, Vector{std::sqrt(2.0)}, SolverConfig{});
  CHECK(at_root.converged());
  CHECK(at_root.iterations == 0);
}

TEST_CASE("atan from far away: plain Newton fails, line searches converge") {
  const auto sys = scalar([](double x) { return std::atan(x); }, [](double x) { return 1.0 / (1.0 + x * x); });
  const SolveResult plain = solve(sys, Vector{3.0}, SolverConfig{});
  CHECK_FALSE(plain.converged());
  for (LineSearch ls : {LineSearch::Backtracking, LineSearch::Cubic}) {
    const SolveResult r = solve(sys, Vector{3.0}, with_line_search(ls));
    CHECK(r.status == SolveStatus::Converged);
    CHECK(r.residual_history.back() <= 1e-8 * std::atan(3.0));
    for (std::size_t k = 1; k < r.residual_history.size(); ++k) {
      CHECK(r.residual_history[k] < r.residual_history[k - 1]);
    }
  }
}

TEST_CASE("iteration cap is reported") {
  const auto sys = scalar([](double x) { return std::atan(x); }, [](double x) { return 1.0 / (1.0 + x * x); });
  SolverConfig c;
  c.max_iter = 2;
  c.line_search = LineSearch::Backtracking;
  const SolveResult r = solve(sys, Vector{3.0}, c);
  CHECK(r.status == SolveStatus::MaxIterations);
  CHECK(r.iterations == 2);
}

TEST_CASE("singular derivative without a line search") {
  const auto sys = scalar([](double x) { return x * x + 1.0; }, [](double x) { return 2.0 * x; });
  const SolveResult r = solve(sys, Vector{0.0}, SolverConfig{});
  CHECK(r.status == SolveStatus::SingularJacobian);
  CHECK(r.iterations == 0);
}

TEST_CASE("regularized step leaves a singular point when the merit gradient is nonzero") {
  // F = (x^2 - 1, y - x) is singular on x = 0, where the merit gradient
  // (-3, 3) at (0, 3) still points off the singular line.
  NonlinearSystem s;
  s.dimension = 2;
  s.residual = [](std::span<const double> z) { return Vector{z[0] * z[0] - 1.0, z[1] - z[0]}; };
  s.derivative = [](std::span<const double> z) -> AnyMatrix { return DenseMatrix(2, 2, {2 * z[0], 0, -1, 1}); };
  CHECK(solve(s, Vector{0.0, 3.0}, SolverConfig{}).status == SolveStatus::SingularJacobian);
  const SolveResult r = solve(s, Vector{0.0, 3.0}, with_line_search(LineSearch::Backtracking));
  CHECK(r.status == SolveStatus::Converged);
  CHECK(r.solution[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.solution[1] == doctest::Approx(1.0).epsilon(1e-9));
  SolverConfig off = with_line_search(LineSearch::Backtracking);
  off.singular_regularization = 0.0;
  CHECK(solve(s, Vector{0.0, 3.0}, off).status == SolveStatus::SingularJacobian);
}

TEST_CASE("a vanishing derivative stays singular even with a line search") {
  const auto sys = scalar([](double x) { return x * x + 1.0; }, [](double x) { return 2.0 * x; });
  const SolveResult r = solve(sys, Vector{0.0}, with_line_search(LineSearch::Backtracking));
  CHECK(r.status == SolveStatus::SingularJacobian);
}

TEST_CASE("divergence and non-finite residuals") {
  const auto big = scalar([](double x) { return 1e9 + x; }, [](double) { return 1.0; });
  CHECK(solve(big, Vector{0.0}, SolverConfig{}).status == SolveStatus::Diverged);
  const auto bad = scalar([](double) { return std::numeric_limits<double>::quiet_NaN(); }, [](double) { return 1.0; });
  CHECK(solve(bad, Vector{0.0}, SolverConfig{}).status == SolveStatus::Diverged);
  const auto thrower = scalar(
      [](double) -> double { throw Error(ErrorCode::NonFiniteResidual, "overflow"); }, [](double) { return 1.0; });
  CHECK(solve(thrower, Vector{0.0}, SolverConfig{}).status == SolveStatus::Diverged);
}

TEST_CASE("configuration is validated") {
  const auto sys = linear_system();
  SolverConfig c;
  c.atol = 0.0;
  CHECK_THROWS_AS(solve(sys, Vector{0.0, 0.0}, c), Error);
  c = SolverConfig{};
  c.max_iter = 0;
  CHECK_THROWS_AS(solve(sys, Vector{0.0, 0.0}, c), Error);
  c = SolverConfig{};
  c.backtracking.reduction = 1.0;
  CHECK_THROWS_AS(solve(sys, Vector{0.0, 0.0}, c), Error);
}

TEST_CASE("status names") {
  CHECK(std::string(to_string(SolveStatus::Converged)) == "Converged");
  CHECK(std::string(to_string(SolveStatus::LineSearchFailed)) == "LineSearchFailed");
}
