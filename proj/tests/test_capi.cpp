#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "defcon/defcon.h"

namespace {

defcon_search_settings settings_for(const char* slug) {
  defcon_search_settings s{};
  REQUIRE(defcon_benchmark_settings(slug, &s) == DEFCON_OK);
  return s;
}

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::strlen(defcon_version()) > 0);
  CHECK(std::string(defcon_status_string(DEFCON_OK)) == "ok");
  CHECK(std::strlen(defcon_status_string(DEFCON_ERR_ALL_BRANCHES_LOST)) > 0);
  CHECK(std::string(defcon_solve_status_string(DEFCON_SOLVE_CONVERGED)) == "Converged");
}

TEST_CASE("registry through the C API") {
  REQUIRE(defcon_benchmark_count() == 4);
  for (size_t i = 0; i < 4; ++i) {
    const char* slug = nullptr;
    REQUIRE(defcon_benchmark_slug(i, &slug) == DEFCON_OK);
    const char* description = nullptr;
    size_t dim = 0;
    int parameterized = -1;
    CHECK(defcon_benchmark_describe(slug, &description, &dim, &parameterized) == DEFCON_OK);
    CHECK(dim >= 4);
    CHECK((std::string(slug) == "aggarwal") == (parameterized == 1));
  }
  const char* slug = nullptr;
  CHECK(defcon_benchmark_slug(4, &slug) == DEFCON_ERR_OUT_OF_RANGE);
  CHECK(defcon_benchmark_settings("nope", nullptr) != DEFCON_OK);
  defcon_search_settings s{};
  CHECK(defcon_benchmark_settings("nope", &s) == DEFCON_ERR_UNKNOWN_BENCHMARK);
  CHECK(std::strlen(defcon_last_error()) > 0);
}

TEST_CASE("evaluate matches a hand-computed residual") {
  const double z[4] = {1, 0, 3, 0};
  double f[4] = {};
  REQUIRE(defcon_benchmark_evaluate("kojima-shindoh", 0, 0.0, z, f, 4) == DEFCON_OK);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 31.0);
  CHECK(f[2] == 0.0);
  CHECK(f[3] == 4.0);
  double phi[4] = {};
  REQUIRE(defcon_benchmark_residual("kojima-shindoh", DEFCON_NCP_FISCHER_BURMEISTER, 0, 0.0, z, phi, 4) ==
          DEFCON_OK);
  for (double v : phi) CHECK(std::abs(v) <= 1e-12);
  CHECK(defcon_benchmark_evaluate("kojima-shindoh", 0, 0.0, z, f, 3) == DEFCON_ERR_INVALID_ARGUMENT);
  CHECK(defcon_benchmark_evaluate("kojima-shindoh", 1, 2.0, z, f, 4) == DEFCON_ERR_INVALID_ARGUMENT);
}

TEST_CASE("deflated search on Kojima-Shindoh finds both solutions") {
  const defcon_search_settings s = settings_for("kojima-shindoh");
  defcon_result* result = nullptr;
  REQUIRE(defcon_solve("kojima-shindoh", &s, nullptr, 0, 0, 0.0, &result) == DEFCON_OK);
  REQUIRE(result != nullptr);
  CHECK(defcon_result_dimension(result) == 4);
  REQUIRE(defcon_result_root_count(result) == 2);
  double z[4];
  REQUIRE(defcon_result_root(result, 0, z, 4) == DEFCON_OK);
  CHECK(z[0] == doctest::Approx(1.0));
  CHECK(z[2] == doctest::Approx(3.0));
  REQUIRE(defcon_result_root(result, 1, z, 4) == DEFCON_OK);
  CHECK(z[0] == doctest::Approx(std::sqrt(6.0) / 2));
  CHECK(z[3] == doctest::Approx(0.5));
  defcon_root_info info{};
  REQUIRE(defcon_result_root_info(result, 0, &info) == DEFCON_OK);
  CHECK(info.iterations > 0);
  CHECK(info.residual_norm <= 1e-8);
  CHECK(info.has_parameter == 0);
  CHECK(defcon_result_root(result, 2, z, 4) == DEFCON_ERR_OUT_OF_RANGE);
  CHECK(defcon_result_root(result, 0, z, 3) == DEFCON_ERR_INVALID_ARGUMENT);
  REQUIRE(defcon_result_event_count(result) >= 2);
  defcon_event e{};
  REQUIRE(defcon_result_event(result, 0, &e) == DEFCON_OK);
  CHECK(std::string(e.kind) == "solve");
  CHECK(e.status == DEFCON_SOLVE_CONVERGED);
  defcon_result_destroy(result);
}

TEST_CASE("root cap, explicit guesses and settings validation") {
  defcon_search_settings s = settings_for("gould");
  s.max_roots = 1;
  defcon_result* result = nullptr;
  const double guess[4] = {0.2, 0.2, 0.0, 0.0};
  REQUIRE(defcon_solve("gould", &s, guess, 4, 0, 0.0, &result) == DEFCON_OK);
  CHECK(defcon_result_root_count(result) == 1);
  defcon_result_destroy(result);

  result = nullptr;
  CHECK(defcon_solve("gould", &s, guess, 3, 0, 0.0, &result) == DEFCON_ERR_INVALID_ARGUMENT);
  CHECK(result == nullptr);
  s.power = 0.0;
  CHECK(defcon_solve("gould", &s, guess, 4, 0, 0.0, &result) == DEFCON_ERR_INVALID_ARGUMENT);
  s = settings_for("gould");
  s.atol = -1.0;
  CHECK(defcon_solve("gould", &s, guess, 4, 0, 0.0, &result) == DEFCON_ERR_INVALID_ARGUMENT);
  CHECK(defcon_solve("nope", &s, guess, 4, 0, 0.0, &result) == DEFCON_ERR_UNKNOWN_BENCHMARK);
  CHECK(defcon_solve("gould", &s, guess, 4, 0, 0.0, nullptr) == DEFCON_ERR_INVALID_ARGUMENT);
}

TEST_CASE("parameter continuation through the C API") {
  const defcon_search_settings s = settings_for("aggarwal");
  defcon_result* result = nullptr;
  REQUIRE(defcon_continue("aggarwal", &s, 1e-3, 1.0, 50, &result) == DEFCON_OK);
  REQUIRE(defcon_result_root_count(result) == 3);
  double z[4];
  for (size_t i = 0; i < 3; ++i) {
    REQUIRE(defcon_result_root(result, i, z, 4) == DEFCON_OK);
    double phi[4];
    REQUIRE(defcon_benchmark_residual("aggarwal", s.ncp, 1, 1.0, z, phi, 4) == DEFCON_OK);
    for (double v : phi) CHECK(std::abs(v) <= 1e-8);
  }
  defcon_result_destroy(result);
  CHECK(defcon_continue("gould", &s, 0.0, 1.0, 10, &result) == DEFCON_ERR_INVALID_ARGUMENT);
  CHECK(defcon_continue("aggarwal", &s, 1e-3, 1.0, 0, &result) == DEFCON_ERR_INVALID_ARGUMENT);
}

TEST_CASE("beam path-following through the C API") {
  defcon_beam_settings s{};
  defcon_beam_default_settings(&s);
  s.gamma_max = 1e3;
  defcon_beam_result* result = nullptr;
  REQUIRE(defcon_beam_run(&s, &result) == DEFCON_OK);
  CHECK(defcon_beam_result_gamma(result) == doctest::Approx(1e3));
  const size_t elements = defcon_beam_result_elements(result);
  const size_t dim = defcon_beam_result_dimension(result);
  CHECK(dim == 2 * elements);
  REQUIRE(defcon_beam_result_solution_count(result) == 3);
  std::vector<double> dofs(dim), x(elements + 1), y(elements + 1), dy(elements + 1);
  for (size_t i = 0; i < 3; ++i) {
    REQUIRE(defcon_beam_result_solution(result, i, dofs.data(), dim) == DEFCON_OK);
    REQUIRE(defcon_beam_result_profile(result, i, x.data(), y.data(), dy.data(), elements + 1) == DEFCON_OK);
    CHECK(x.front() == 0.0);
    CHECK(x.back() == doctest::Approx(s.length));
    CHECK(y.front() == 0.0);
    CHECK(y.back() == 0.0);
    CHECK(y[1] == dofs[1]);
    CHECK(dy[0] == dofs[0]);
    defcon_beam_solution_info info{};
    REQUIRE(defcon_beam_result_solution_info(result, i, &info) == DEFCON_OK);
    double lo = 0.0, hi = 0.0;
    for (double v : y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(info.min_value <= lo + 1e-15);
    CHECK(info.max_value >= hi - 1e-15);
    CHECK(info.discovered_at_gamma == doctest::Approx(s.gamma0));
  }
  defcon_beam_solution_info first{};
  REQUIRE(defcon_beam_result_solution_info(result, 0, &first) == DEFCON_OK);
  CHECK(first.active_fraction == 0.0);
  const size_t steps = defcon_beam_result_step_count(result);
  REQUIRE(steps >= 2);
  defcon_beam_step_info step{};
  REQUIRE(defcon_beam_result_step(result, steps - 1, &step) == DEFCON_OK);
  CHECK(step.gamma == doctest::Approx(1e3));
  std::vector<size_t> its(step.branches);
  CHECK(defcon_beam_result_step_iterations(result, steps - 1, its.data(), step.branches) == DEFCON_OK);
  CHECK(defcon_beam_result_step(result, steps, &step) == DEFCON_ERR_OUT_OF_RANGE);
  CHECK(defcon_beam_result_event_count(result) > 0);
  CHECK(defcon_beam_result_profile(result, 0, x.data(), y.data(), dy.data(), elements) ==
        DEFCON_ERR_INVALID_ARGUMENT);
  defcon_beam_result_destroy(result);

  s.half_width = -1.0;
  result = nullptr;
  CHECK(defcon_beam_run(&s, &result) == DEFCON_ERR_INVALID_ARGUMENT);
  CHECK(result == nullptr);
}

TEST_CASE("destroying null handles is a no-op") {
  defcon_result_destroy(nullptr);
  defcon_beam_result_destroy(nullptr);
  CHECK(defcon_result_root_count(nullptr) == 0);
}
