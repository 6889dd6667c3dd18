#include "defcon/problems.hpp"

#include <string>

#include "defcon/errors.hpp"

namespace defcon {

namespace {

MixedComplementarityProblem kojima_shindoh() {
  auto f = [](std::span<const double> z) -> Vector {
    const double z1 = z[0], z2 = z[1], z3 = z[2], z4 = z[3];
    return {3 * z1 * z1 + 2 * z1 * z2 + 2 * z2 * z2 + z3 + 3 * z4 - 6,
            2 * z1 * z1 + z2 * z2 + z1 + 10 * z3 + 2 * z4 - 2,
            3 * z1 * z1 + z1 * z2 + 2 * z2 * z2 + 2 * z3 + 9 * z4 - 9,
            z1 * z1 + 3 * z2 * z2 + 2 * z3 + 3 * z4 - 3};
  };
  auto df = [](std::span<const double> z) {
    const double z1 = z[0], z2 = z[1];
    return DenseMatrix(4, 4,
                       {6 * z1 + 2 * z2, 2 * z1 + 4 * z2, 1, 3,  //
                        4 * z1 + 1, 2 * z2, 10, 2,               //
                        6 * z1 + z2, z1 + 4 * z2, 2, 9,          //
                        2 * z1, 6 * z2, 2, 3});
  };
  return MixedComplementarityProblem::ncp("kojima-shindoh", 4, f, df);
}

// z = (x1, x2, lambda1, lambda2); KKT system of a nonconvex QP with
// constraints 3/2 - 3 x1 - x2 >= 0 and 1 - x1 - x2 >= 0.
MixedComplementarityProblem gould() {
  auto f = [](std::span<const double> z) -> Vector {
    const double x1 = z[0], x2 = z[1], l1 = z[2], l2 = z[3];
    return {-4 * (x1 - 0.25) + 3 * l1 + l2,  //
            4 * (x2 - 0.5) + l1 + l2,        //
            1.5 - 3 * x1 - x2,               //
            1 - x1 - x2};
  };
  auto df = [](std::span<const double>) {
    return DenseMatrix(4, 4,
                       {-4, 0, 3, 1,   //
                        0, 4, 1, 1,    //
                        -3, -1, 0, 0,  //
                        -1, -1, 0, 0});
  };
  return MixedComplementarityProblem::ncp("gould", 4, f, df);
}

// Bimatrix game as an NCP; z = (x, y), F_mu(z) = (mu A y - e, mu B^T x - e).
MixedComplementarityProblem aggarwal(double mu) {
  static constexpr double a[2][2] = {{30, 20}, {10, 25}};
  static constexpr double b[2][2] = {{30, 10}, {20, 25}};
  auto f = [mu](std::span<const double> z) -> Vector {
    const double x1 = z[0], x2 = z[1], y1 = z[2], y2 = z[3];
    return {mu * (a[0][0] * y1 + a[0][1] * y2) - 1,  //
            mu * (a[1][0] * y1 + a[1][1] * y2) - 1,  //
            mu * (b[0][0] * x1 + b[1][0] * x2) - 1,  //
            mu * (b[0][1] * x1 + b[1][1] * x2) - 1};
  };
  auto df = [mu](std::span<const double>) {
    return DenseMatrix(4, 4,
                       {0, 0, mu * a[0][0], mu * a[0][1],  //
                        0, 0, mu * a[1][0], mu * a[1][1],  //
                        mu * b[0][0], mu * b[1][0], 0, 0,  //
                        mu * b[0][1], mu * b[1][1], 0, 0});
  };
  return MixedComplementarityProblem::ncp("aggarwal", 4, f, df, mu);
}

// Risk-averse two-agent market; z = (x0, x11, x12, y1, y2, pi1, pi2, u4, u5, thetaP).
MixedComplementarityProblem gerard() {
  auto f = [](std::span<const double> z) -> Vector {
    const double x0 = z[0], x11 = z[1], x12 = z[2], y1 = z[3], y2 = z[4];
    const double p1 = z[5], p2 = z[6], u4 = z[7], u5 = z[8], theta = z[9];
    const double a1 = p1 - 11.5 * x0;
    const double a2 = p2 - 11.5 * x0;
    const double b = p1 - x11;
    const double c = p2 - 3.5 * x12;
    const double s1 = p1 * (x0 + x11) - 5.75 * x0 * x0 - 0.5 * x11 * x11;
    const double s2 = p2 * (x0 + x12) - 5.75 * x0 * x0 - 1.75 * x12 * x12;
    return {-(0.75 * a1 + 0.25 * a2) * u4 - (0.25 * a1 + 0.75 * a2) * u5,
            -0.75 * b * u4 - 0.25 * b * u5,
            -0.25 * c * u4 - 0.75 * c * u5,
            -(4 - p1 - 2 * y1),
            -(9.6 - p2 - 10 * y2),
            x0 + x11 - y1,
            x0 + x12 - y2,
            0.75 * s1 + 0.25 * s2 - theta,
            0.25 * s1 + 0.75 * s2 - theta,
            u4 + u5 - 1};
  };
  auto df = [](std::span<const double> z) {
    const double x0 = z[0], x11 = z[1], x12 = z[2];
    const double p1 = z[5], p2 = z[6], u4 = z[7], u5 = z[8];
    const double a1 = p1 - 11.5 * x0;
    const double a2 = p2 - 11.5 * x0;
    const double b = p1 - x11;
    const double c = p2 - 3.5 * x12;
    const double w1 = 0.75 * u4 + 0.25 * u5;
    const double w2 = 0.25 * u4 + 0.75 * u5;
    DenseMatrix d(10, 10);
    d(0, 0) = 11.5 * (u4 + u5);
    d(0, 5) = -w1;
    d(0, 6) = -w2;
    d(0, 7) = -(0.75 * a1 + 0.25 * a2);
    d(0, 8) = -(0.25 * a1 + 0.75 * a2);
    d(1, 1) = w1;
    d(1, 5) = -w1;
    d(1, 7) = -0.75 * b;
    d(1, 8) = -0.25 * b;
    d(2, 2) = 3.5 * w2;
    d(2, 6) = -w2;
    d(2, 7) = -0.25 * c;
    d(2, 8) = -0.75 * c;
    d(3, 3) = 2;
    d(3, 5) = 1;
    d(4, 4) = 10;
    d(4, 6) = 1;
    d(5, 0) = 1;
    d(5, 1) = 1;
    d(5, 3) = -1;
    d(6, 0) = 1;
    d(6, 2) = 1;
    d(6, 4) = -1;
    // Gradients of the two agents' surplus terms.
    const double s1_x0 = p1 - 11.5 * x0, s1_x11 = p1 - x11, s1_p1 = x0 + x11;
    const double s2_x0 = p2 - 11.5 * x0, s2_x12 = p2 - 3.5 * x12, s2_p2 = x0 + x12;
    const double weights[2][2] = {{0.75, 0.25}, {0.25, 0.75}};
    for (std::size_t r = 0; r < 2; ++r) {
      const std::size_t row = 7 + r;
      const double c1 = weights[r][0], c2 = weights[r][1];
      d(row, 0) = c1 * s1_x0 + c2 * s2_x0;
      d(row, 1) = c1 * s1_x11;
      d(row, 2) = c2 * s2_x12;
      d(row, 5) = c1 * s1_p1;
      d(row, 6) = c2 * s2_p2;
      d(row, 9) = -1;
    }
    d(9, 7) = 1;
    d(9, 8) = 1;
    return d;
  };
  Vector lower(10, 0.0);
  lower[9] = -kInfinity;
  return MixedComplementarityProblem("gerard", 10, f, df, std::move(lower), Vector(10, kInfinity));
}

}  // namespace

const std::vector<BenchmarkInfo>& benchmark_registry() {
  static const std::vector<BenchmarkInfo> registry = {
      {BenchmarkId::KojimaShindoh, "kojima-shindoh", "4-variable NCP with two solutions, one degenerate", 4,
       NcpFunctionKind::FischerBurmeister, 2.0, 1.0, LineSearch::None, Vector(4, 0.7), false},
      {BenchmarkId::Gould, "gould", "KKT system of a nonconvex QP: saddle point and two minima", 4,
       NcpFunctionKind::FischerBurmeister, 2.0, 1.0, LineSearch::None, Vector{0.2, 0.2, 0.0, 0.0}, false},
      {BenchmarkId::Aggarwal, "aggarwal", "bimatrix game with three Nash equilibria (parameter mu)", 4,
       NcpFunctionKind::FischerBurmeister, 2.0, 1.0, LineSearch::None, Vector(4, 0.0), true},
      {BenchmarkId::Gerard, "gerard", "risk-averse market MCP with three equilibria", 10, NcpFunctionKind::MinMax,
       1.0, 1.0, LineSearch::Backtracking, Vector(10, 0.0), false},
  };
  return registry;
}

const BenchmarkInfo& benchmark_info(BenchmarkId id) {
  for (const BenchmarkInfo& info : benchmark_registry()) {
    if (info.id == id) return info;
  }
  throw Error(ErrorCode::UnknownBenchmark, "unknown benchmark id");
}

BenchmarkId parse_benchmark(std::string_view slug) {
  for (const BenchmarkInfo& info : benchmark_registry()) {
    if (info.slug == slug) return info.id;
  }
  throw Error(ErrorCode::UnknownBenchmark, "unknown benchmark '" + std::string(slug) + "'");
}

MixedComplementarityProblem build(BenchmarkId id, std::optional<double> mu) {
  if (mu && id != BenchmarkId::Aggarwal) {
    throw Error(ErrorCode::InvalidArgument, "only the aggarwal benchmark takes a parameter");
  }
  switch (id) {
    case BenchmarkId::KojimaShindoh: return kojima_shindoh();
    case BenchmarkId::Gould: return gould();
    case BenchmarkId::Aggarwal: return aggarwal(mu.value_or(1.0));
    case BenchmarkId::Gerard: return gerard();
  }
  throw Error(ErrorCode::UnknownBenchmark, "unknown benchmark id");
}

}  // namespace defcon
