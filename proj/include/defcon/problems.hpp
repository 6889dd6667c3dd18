#pragma once

// Finite-dimensional complementarity benchmarks with analytic derivatives.

#include <optional>
#include <string_view>
#include <vector>

#include "defcon/reformulate.hpp"
#include "defcon/solver.hpp"

namespace defcon {

enum class BenchmarkId { KojimaShindoh, Gould, Aggarwal, Gerard };

struct BenchmarkInfo {
  BenchmarkId id;
  std::string_view slug;  // command-line name
  std::string_view description;
  std::size_t dimension;
  NcpFunctionKind ncp;
  double power;
  double shift;
  LineSearch line_search;
  Vector default_guess;
  bool parameterized;
};

const std::vector<BenchmarkInfo>& benchmark_registry();
const BenchmarkInfo& benchmark_info(BenchmarkId id);

// Throws Error(UnknownBenchmark).
BenchmarkId parse_benchmark(std::string_view slug);

// `mu` is only meaningful for Aggarwal (default 1); passing it for any other
// benchmark throws Error(InvalidArgument).
MixedComplementarityProblem build(BenchmarkId id, std::optional<double> mu = std::nullopt);

// Index of (pi_1, pi_2) in the Gerard unknown vector
// z = (x0, x11, x12, y1, y2, pi1, pi2, u4, u5, theta_P).
inline constexpr std::size_t kGerardPrice1 = 5;
inline constexpr std::size_t kGerardPrice2 = 6;

}  // namespace defcon
