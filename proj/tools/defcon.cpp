#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "defcon/defcon.h"

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitNoRoots = 1;
constexpr int kExitUsage = 2;

// Status from the library, mapped to an exit code by main.
struct LibraryFailure {
  defcon_status status;
  std::string message;
};

void check(defcon_status status) {
  if (status != DEFCON_OK) throw LibraryFailure{status, defcon_last_error()};
}

std::string number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_scalar(const json& j) { return !j.is_array() && !j.is_object(); }

// Pretty printer with 17 significant digits for floats; arrays of scalars stay on one line.
void write(std::ostream& os, const json& j, int depth) {
  const std::string pad(2 * depth, ' ');
  const std::string inner(2 * depth + 2, ' ');
  if (j.is_number_float()) {
    os << number(j.get<double>());
  } else if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) os << ",\n";
      first = false;
      os << inner << json(it.key()).dump() << ": ";
      write(os, it.value(), depth + 1);
    }
    os << '\n' << pad << '}';
  } else if (j.is_array()) {
    if (std::all_of(j.begin(), j.end(), is_scalar)) {
      os << '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ", ";
        write(os, j[i], depth);
      }
      os << ']';
      return;
    }
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) os << ",\n";
      os << inner;
      write(os, j[i], depth + 1);
    }
    os << '\n' << pad << ']';
  } else {
    os << j.dump();
  }
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

void emit(json doc, const std::string& out, bool deterministic) {
  if (!deterministic) doc["timestamp"] = timestamp();
  std::ostringstream text;
  write(text, doc, 0);
  text << '\n';
  if (out.empty()) {
    std::cout << text.str();
    return;
  }
  std::ofstream file(out);
  if (!file) throw LibraryFailure{DEFCON_ERR_INVALID_ARGUMENT, "cannot open " + out};
  file << text.str();
}

json optional_number(int has, double value) { return has ? json(value) : json(nullptr); }

json event_json(const defcon_event& e) {
  json j;
  j["kind"] = e.kind;
  j["step"] = e.step;
  j["branch"] = e.branch;
  j["status"] = e.status == DEFCON_SOLVE_NONE ? json(nullptr) : json(defcon_solve_status_string(e.status));
  j["iterations"] = e.iterations;
  j["parameter"] = optional_number(e.has_parameter, e.parameter);
  return j;
}

const char* ncp_name(int ncp) { return ncp == DEFCON_NCP_MINMAX ? "mp" : "fb"; }

const char* line_search_name(int ls) {
  switch (ls) {
    case DEFCON_LINE_SEARCH_BACKTRACKING: return "backtracking";
    case DEFCON_LINE_SEARCH_CUBIC: return "cubic";
    default: return "none";
  }
}

// Flags shared by solve, continue and beam. Unset flags keep the defaults.
struct SearchFlags {
  std::string ncp;
  double p = 0.0;
  int shift = 1;
  bool line_search = false;
  bool no_line_search = false;
  bool cubic = false;
  std::size_t max_roots = 0;
  double atol = 0.0;
  double rtol = 0.0;
  std::size_t max_iter = 0;
  std::string out;
  bool deterministic = false;

  CLI::App* app = nullptr;

  void attach(CLI::App* sub, bool with_ncp) {
    app = sub;
    if (with_ncp) {
      sub->add_option("--ncp", ncp, "NCP function: fb (Fischer-Burmeister) or mp (min-max)")
          ->check(CLI::IsMember({"fb", "mp"}));
    }
    sub->add_option("--p", p, "deflation power")->check(CLI::PositiveNumber);
    sub->add_option("--shift", shift, "deflation shift sigma")->check(CLI::IsMember({0, 1}));
    auto* on = sub->add_flag("--line-search", line_search, "backtracking line search");
    auto* off = sub->add_flag("--no-line-search", no_line_search, "plain Newton steps")->excludes(on);
    sub->add_flag("--cubic", cubic, "cubic-interpolating line search")->excludes(off);
    sub->add_option("--max-roots", max_roots, "stop after this many roots")->check(CLI::PositiveNumber);
    sub->add_option("--atol", atol, "absolute residual tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--rtol", rtol, "relative residual tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", max_iter, "Newton iterations per solve")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "write JSON here instead of stdout");
    sub->add_flag("--deterministic", deterministic, "omit the timestamp");
  }

  bool given(const char* name) const { return app->count(name) > 0; }

  void apply_line_search(int& mode) const {
    if (line_search) mode = DEFCON_LINE_SEARCH_BACKTRACKING;
    if (no_line_search) mode = DEFCON_LINE_SEARCH_NONE;
    if (cubic) mode = DEFCON_LINE_SEARCH_CUBIC;
  }

  void apply(defcon_search_settings& s) const {
    if (!ncp.empty()) s.ncp = ncp == "mp" ? DEFCON_NCP_MINMAX : DEFCON_NCP_FISCHER_BURMEISTER;
    if (given("--p")) s.power = p;
    if (given("--shift")) s.shift = shift;
    apply_line_search(s.line_search);
    if (given("--max-roots")) s.max_roots = max_roots;
    if (given("--atol")) s.atol = atol;
    if (given("--rtol")) s.rtol = rtol;
    if (given("--max-iter")) s.max_iter = max_iter;
  }
};

json settings_json(const defcon_search_settings& s) {
  json j;
  j["ncp"] = ncp_name(s.ncp);
  j["p"] = s.power;
  j["shift"] = s.shift;
  j["line_search"] = line_search_name(s.line_search);
  j["max_roots"] = s.max_roots == 0 ? json(nullptr) : json(s.max_roots);
  j["atol"] = s.atol;
  j["rtol"] = s.rtol;
  j["max_iter"] = s.max_iter;
  return j;
}

struct ResultHandle {
  defcon_result* ptr = nullptr;
  ~ResultHandle() { defcon_result_destroy(ptr); }
};

struct BeamHandle {
  defcon_beam_result* ptr = nullptr;
  ~BeamHandle() { defcon_beam_result_destroy(ptr); }
};

// Appends roots and events of `r` to `doc`; returns the number of roots.
std::size_t add_result(json& doc, const defcon_result* r) {
  const std::size_t n = defcon_result_dimension(r);
  json roots = json::array();
  for (std::size_t i = 0; i < defcon_result_root_count(r); ++i) {
    std::vector<double> z(n);
    defcon_root_info info{};
    check(defcon_result_root(r, i, z.data(), n));
    check(defcon_result_root_info(r, i, &info));
    json root;
    root["z"] = z;
    root["iterations"] = info.iterations;
    root["residual_norm"] = info.residual_norm;
    root["discovered_at_parameter"] = optional_number(info.has_parameter, info.parameter);
    roots.push_back(std::move(root));
  }
  json events = json::array();
  for (std::size_t i = 0; i < defcon_result_event_count(r); ++i) {
    defcon_event e{};
    check(defcon_result_event(r, i, &e));
    events.push_back(event_json(e));
  }
  doc["roots"] = std::move(roots);
  doc["events"] = std::move(events);
  return defcon_result_root_count(r);
}

std::vector<std::string> benchmark_slugs() {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < defcon_benchmark_count(); ++i) {
    const char* slug = nullptr;
    check(defcon_benchmark_slug(i, &slug));
    out.emplace_back(slug);
  }
  return out;
}

int run_list() {
  for (const std::string& slug : benchmark_slugs()) {
    const char* description = nullptr;
    std::size_t dimension = 0;
    int parameterized = 0;
    check(defcon_benchmark_describe(slug.c_str(), &description, &dimension, &parameterized));
    std::cout << slug << "\t" << dimension << "\t" << description << "\n";
  }
  std::cout << "beam\t-\tbuckling beam in a channel, Moreau-Yosida path-following (command: beam)\n";
  return kExitOk;
}

int run_solve(const std::string& slug, const SearchFlags& flags, const std::vector<double>& guess,
              std::optional<double> mu) {
  defcon_search_settings s{};
  check(defcon_benchmark_settings(slug.c_str(), &s));
  flags.apply(s);
  ResultHandle r;
  check(defcon_solve(slug.c_str(), &s, guess.empty() ? nullptr : guess.data(), guess.size(), mu ? 1 : 0,
                     mu.value_or(0.0), &r.ptr));
  json doc;
  doc["problem"] = slug;
  json settings = settings_json(s);
  settings["mu"] = mu ? json(*mu) : json(nullptr);
  doc["settings"] = std::move(settings);
  const std::size_t roots = add_result(doc, r.ptr);
  emit(std::move(doc), flags.out, flags.deterministic);
  return roots > 0 ? kExitOk : kExitNoRoots;
}

int run_continue(const std::string& slug, const SearchFlags& flags, double mu_start, double mu_end,
                 std::size_t steps) {
  defcon_search_settings s{};
  check(defcon_benchmark_settings(slug.c_str(), &s));
  flags.apply(s);
  ResultHandle r;
  check(defcon_continue(slug.c_str(), &s, mu_start, mu_end, steps, &r.ptr));
  json doc;
  doc["problem"] = slug;
  json settings = settings_json(s);
  settings["mu_start"] = mu_start;
  settings["mu_end"] = mu_end;
  settings["mu_steps"] = steps;
  doc["settings"] = std::move(settings);
  const std::size_t roots = add_result(doc, r.ptr);
  emit(std::move(doc), flags.out, flags.deterministic);
  return roots > 0 ? kExitOk : kExitNoRoots;
}

void dump_profiles(const defcon_beam_result* r, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw LibraryFailure{DEFCON_ERR_INVALID_ARGUMENT, "cannot open " + path};
  const std::size_t nodes = defcon_beam_result_elements(r) + 1;
  std::vector<double> x(nodes), y(nodes), dy(nodes);
  char line[96];
  for (std::size_t i = 0; i < defcon_beam_result_solution_count(r); ++i) {
    defcon_beam_solution_info info{};
    check(defcon_beam_result_solution_info(r, i, &info));
    check(defcon_beam_result_profile(r, i, x.data(), y.data(), dy.data(), nodes));
    if (i) file << "\n\n";
    file << "# solution " << i << " gamma " << number(defcon_beam_result_gamma(r)) << " active_fraction "
         << number(info.active_fraction) << "\n# x y dy\n";
    for (std::size_t k = 0; k < nodes; ++k) {
      std::snprintf(line, sizeof line, "%.17g %.17g %.17g\n", x[k], y[k], dy[k]);
      file << line;
    }
  }
}

struct BeamFlags {
  double gamma0 = 0.0;
  double gamma_max = 0.0;
  double q = 0.0;
  std::size_t mesh = 0;
  double load = 0.0;
  double half_width = 0.0;
  std::string dump;
};

int run_beam(const SearchFlags& flags, const BeamFlags& beam) {
  defcon_beam_settings s{};
  defcon_beam_default_settings(&s);
  if (flags.given("--gamma0")) s.gamma0 = beam.gamma0;
  if (flags.given("--gamma-max")) s.gamma_max = beam.gamma_max;
  if (flags.given("--q")) s.ratio = beam.q;
  if (flags.given("--mesh")) s.initial_elements = beam.mesh;
  if (flags.given("--load")) s.load = beam.load;
  if (flags.given("--alpha")) s.half_width = beam.half_width;
  if (flags.given("--p")) s.power = flags.p;
  if (flags.given("--shift")) s.shift = flags.shift;
  flags.apply_line_search(s.line_search);
  if (flags.given("--max-roots")) s.max_roots = flags.max_roots;
  if (flags.given("--atol")) s.atol = flags.atol;
  if (flags.given("--rtol")) s.rtol = flags.rtol;
  if (flags.given("--max-iter")) s.max_iter = flags.max_iter;
  if (!(s.gamma_max >= s.gamma0)) throw CLI::ValidationError("--gamma-max", "must be at least --gamma0");
  if (flags.given("--q") && !(s.ratio > 1.0)) throw CLI::ValidationError("--q", "must exceed 1");

  BeamHandle r;
  check(defcon_beam_run(&s, &r.ptr));

  json doc;
  doc["problem"] = "beam";
  json settings;
  settings["bending"] = s.bending;
  settings["load"] = s.load;
  settings["density"] = s.density;
  settings["gravity"] = s.gravity;
  settings["length"] = s.length;
  settings["alpha"] = s.half_width;
  settings["gamma0"] = s.gamma0;
  settings["gamma_max"] = s.gamma_max;
  settings["q"] = s.ratio != 0.0 ? s.ratio : std::pow(s.gamma_max / s.gamma0, 1.0 / 9.0);
  settings["mesh"] = s.initial_elements;
  settings["p"] = s.power;
  settings["shift"] = s.shift;
  settings["line_search"] = line_search_name(s.line_search);
  settings["max_roots"] = s.max_roots == 0 ? json(nullptr) : json(s.max_roots);
  settings["atol"] = s.atol;
  settings["rtol"] = s.rtol;
  settings["max_iter"] = s.max_iter;
  doc["settings"] = std::move(settings);
  doc["gamma"] = defcon_beam_result_gamma(r.ptr);
  doc["elements"] = defcon_beam_result_elements(r.ptr);

  const std::size_t n = defcon_beam_result_dimension(r.ptr);
  const std::size_t nodes = defcon_beam_result_elements(r.ptr) + 1;
  json roots = json::array();
  for (std::size_t i = 0; i < defcon_beam_result_solution_count(r.ptr); ++i) {
    std::vector<double> z(n), x(nodes), y(nodes), dy(nodes);
    defcon_beam_solution_info info{};
    check(defcon_beam_result_solution(r.ptr, i, z.data(), n));
    check(defcon_beam_result_solution_info(r.ptr, i, &info));
    check(defcon_beam_result_profile(r.ptr, i, x.data(), y.data(), dy.data(), nodes));
    json root;
    root["z"] = z;
    root["iterations"] = info.iterations;
    root["residual_norm"] = info.residual_norm;
    root["discovered_at_parameter"] = info.discovered_at_gamma;
    root["gamma"] = defcon_beam_result_gamma(r.ptr);
    root["active_fraction"] = info.active_fraction;
    root["min_value"] = info.min_value;
    root["max_value"] = info.max_value;
    json table = json::array();
    for (std::size_t k = 0; k < nodes; ++k) table.push_back(json::array({x[k], y[k], dy[k]}));
    root["profile"] = std::move(table);
    roots.push_back(std::move(root));
  }
  const std::size_t found = roots.size();
  doc["roots"] = std::move(roots);

  json history = json::array();
  for (std::size_t i = 0; i < defcon_beam_result_step_count(r.ptr); ++i) {
    defcon_beam_step_info step{};
    check(defcon_beam_result_step(r.ptr, i, &step));
    std::vector<std::size_t> its(step.branches);
    check(defcon_beam_result_step_iterations(r.ptr, i, its.data(), its.size()));
    json h;
    h["step"] = step.step;
    h["gamma"] = step.gamma;
    h["elements"] = step.elements;
    h["branch_iterations"] = its;
    h["newcomers"] = step.newcomers;
    history.push_back(std::move(h));
  }
  doc["history"] = std::move(history);

  json events = json::array();
  for (std::size_t i = 0; i < defcon_beam_result_event_count(r.ptr); ++i) {
    defcon_event e{};
    check(defcon_beam_result_event(r.ptr, i, &e));
    events.push_back(event_json(e));
  }
  doc["events"] = std::move(events);

  if (!beam.dump.empty()) dump_profiles(r.ptr, beam.dump);
  emit(std::move(doc), flags.out, flags.deterministic);
  return found > 0 ? kExitOk : kExitNoRoots;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple solutions of complementarity problems by deflation"};
  app.require_subcommand(1);

  std::vector<std::string> slugs;
  try {
    slugs = benchmark_slugs();
  } catch (const LibraryFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return kExitNoRoots;
  }

  auto* list = app.add_subcommand("list", "list the benchmark problems");

  std::string slug;
  std::vector<double> guess;
  double mu = 0.0;
  SearchFlags solve_flags;
  auto* solve = app.add_subcommand("solve", "deflated search on a benchmark");
  solve->add_option("benchmark", slug, "benchmark name")->required()->check(CLI::IsMember(slugs));
  solve->add_option("--guess", guess, "initial guess, comma separated")->delimiter(',');
  solve->add_option("--mu", mu, "benchmark parameter (aggarwal)")->check(CLI::PositiveNumber);
  solve_flags.attach(solve, true);

  SearchFlags cont_flags;
  double mu_start = 1e-3;
  double mu_end = 1.0;
  std::size_t mu_steps = 50;
  auto* cont = app.add_subcommand("continue", "deflated search then zero-order continuation in mu");
  cont->add_option("benchmark", slug, "parameterized benchmark name")->required()->check(CLI::IsMember(slugs));
  cont->add_option("--mu-start", mu_start, "initial parameter")->check(CLI::PositiveNumber);
  cont->add_option("--mu-end", mu_end, "final parameter")->check(CLI::PositiveNumber);
  cont->add_option("--mu-steps", mu_steps, "number of equispaced steps")->check(CLI::PositiveNumber);
  cont_flags.attach(cont, true);

  SearchFlags beam_flags;
  BeamFlags beam;
  auto* beam_cmd = app.add_subcommand("beam", "beam in a channel, path-following in the penalty gamma");
  beam_cmd->add_option("--gamma0", beam.gamma0, "initial penalty")->check(CLI::PositiveNumber);
  beam_cmd->add_option("--gamma-max", beam.gamma_max, "final penalty")->check(CLI::PositiveNumber);
  beam_cmd->add_option("--q", beam.q, "penalty ratio per step")->check(CLI::PositiveNumber);
  beam_cmd->add_option("--mesh", beam.mesh, "initial number of elements")->check(CLI::PositiveNumber);
  beam_cmd->add_option("--load", beam.load, "axial load P")->check(CLI::NonNegativeNumber);
  beam_cmd->add_option("--alpha", beam.half_width, "channel half width")->check(CLI::PositiveNumber);
  beam_cmd->add_option("--dump", beam.dump, "plain-text profiles (x y dy) for plotting");
  beam_flags.attach(beam_cmd, false);

  try {
    app.parse(argc, argv);
    if (*list) return run_list();
    if (*solve) {
      return run_solve(slug, solve_flags, guess, solve->count("--mu") ? std::optional<double>(mu) : std::nullopt);
    }
    if (*cont) return run_continue(slug, cont_flags, mu_start, mu_end, mu_steps);
    return run_beam(beam_flags, beam);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const LibraryFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.status == DEFCON_ERR_INVALID_ARGUMENT || f.status == DEFCON_ERR_UNKNOWN_BENCHMARK ? kExitUsage
                                                                                                 : kExitNoRoots;
  }
}
