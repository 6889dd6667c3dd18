#ifndef DEFCON_DEFCON_H
#define DEFCON_DEFCON_H

/* C interface to the defcon solver library.
 *
 * Results are returned through opaque handles that the caller releases with
 * the matching *_destroy function. Every fallible call returns a
 * defcon_status; on failure defcon_last_error() describes the problem
 * (thread-local, valid until the next call on the same thread). */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(DEFCON_BUILDING_LIBRARY)
#    define DEFCON_API __declspec(dllexport)
#  else
#    define DEFCON_API __declspec(dllimport)
#  endif
#else
#  define DEFCON_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum defcon_status {
  DEFCON_OK = 0,
  DEFCON_ERR_INVALID_ARGUMENT = 1,
  DEFCON_ERR_SINGULAR_MATRIX = 2,
  DEFCON_ERR_SINGULAR_UPDATE = 3,
  DEFCON_ERR_NON_FINITE_RESIDUAL = 4,
  DEFCON_ERR_DERIVATIVE_UNAVAILABLE = 5,
  DEFCON_ERR_AT_DEFLATED_ROOT = 6,
  DEFCON_ERR_UNKNOWN_BENCHMARK = 7,
  DEFCON_ERR_ALL_BRANCHES_LOST = 8,
  DEFCON_ERR_OUT_OF_RANGE = 9,
  DEFCON_ERR_INTERNAL = 10
} defcon_status;

typedef enum defcon_ncp { DEFCON_NCP_FISCHER_BURMEISTER = 0, DEFCON_NCP_MINMAX = 1 } defcon_ncp;

typedef enum defcon_line_search {
  DEFCON_LINE_SEARCH_NONE = 0,
  DEFCON_LINE_SEARCH_BACKTRACKING = 1,
  DEFCON_LINE_SEARCH_CUBIC = 2
} defcon_line_search;

/* Solve outcome attached to events; DEFCON_SOLVE_NONE when an event has none. */
typedef enum defcon_solve_status {
  DEFCON_SOLVE_NONE = -1,
  DEFCON_SOLVE_CONVERGED = 0,
  DEFCON_SOLVE_MAX_ITERATIONS = 1,
  DEFCON_SOLVE_SINGULAR_JACOBIAN = 2,
  DEFCON_SOLVE_DIVERGED = 3,
  DEFCON_SOLVE_DEFLATED_ROOT_HIT = 4,
  DEFCON_SOLVE_LINE_SEARCH_FAILED = 5
} defcon_solve_status;

typedef struct defcon_search_settings {
  int ncp;          /* defcon_ncp */
  double power;     /* deflation power p */
  double shift;     /* deflation shift sigma */
  int line_search;  /* defcon_line_search */
  size_t max_roots; /* 0 means unlimited */
  double atol;
  double rtol;
  size_t max_iter;
} defcon_search_settings;

typedef struct defcon_event {
  const char* kind; /* owned by the result handle */
  size_t step;
  long branch; /* -1 when not tied to a branch */
  int status;  /* defcon_solve_status */
  size_t iterations;
  int has_parameter;
  double parameter;
} defcon_event;

typedef struct defcon_root_info {
  size_t iterations;
  double residual_norm;
  int has_parameter;
  double parameter; /* parameter value at discovery */
} defcon_root_info;

typedef struct defcon_result defcon_result;
typedef struct defcon_beam_result defcon_beam_result;

DEFCON_API const char* defcon_version(void);
DEFCON_API const char* defcon_last_error(void);
DEFCON_API const char* defcon_status_string(defcon_status status);
DEFCON_API const char* defcon_solve_status_string(int status);

/* Benchmark registry. */
DEFCON_API size_t defcon_benchmark_count(void);
DEFCON_API defcon_status defcon_benchmark_slug(size_t index, const char** slug);
DEFCON_API defcon_status defcon_benchmark_describe(const char* slug, const char** description, size_t* dimension,
                                                   int* parameterized);
/* Recommended settings for a benchmark. */
DEFCON_API defcon_status defcon_benchmark_settings(const char* slug, defcon_search_settings* out);
/* Writes the default initial guess into guess[0 .. dimension). */
DEFCON_API defcon_status defcon_benchmark_guess(const char* slug, double* guess, size_t dimension);
/* F(z) of the benchmark, written to out[0 .. dimension).
 * has_mu = 0 uses the benchmark's default parameter. */
DEFCON_API defcon_status defcon_benchmark_evaluate(const char* slug, int has_mu, double mu, const double* z,
                                                   double* out, size_t dimension);
/* Residual of the reformulated system at z, written to out[0 .. dimension). */
DEFCON_API defcon_status defcon_benchmark_residual(const char* slug, int ncp, int has_mu, double mu, const double* z,
                                                   double* out, size_t dimension);

/* Deflated search. guess = NULL uses the benchmark's default guess;
 * has_mu = 0 uses the default parameter (only Aggarwal is parameterized). */
DEFCON_API defcon_status defcon_solve(const char* slug, const defcon_search_settings* settings, const double* guess,
                                      size_t dimension, int has_mu, double mu, defcon_result** out);

/* Deflated search at mu_start from the default guess, then zero-order
 * continuation to mu_end in `steps` equispaced steps. */
DEFCON_API defcon_status defcon_continue(const char* slug, const defcon_search_settings* settings, double mu_start,
                                         double mu_end, size_t steps, defcon_result** out);

DEFCON_API void defcon_result_destroy(defcon_result* result);
DEFCON_API size_t defcon_result_dimension(const defcon_result* result);
DEFCON_API size_t defcon_result_root_count(const defcon_result* result);
DEFCON_API defcon_status defcon_result_root(const defcon_result* result, size_t index, double* z, size_t dimension);
DEFCON_API defcon_status defcon_result_root_info(const defcon_result* result, size_t index, defcon_root_info* out);
DEFCON_API size_t defcon_result_event_count(const defcon_result* result);
DEFCON_API defcon_status defcon_result_event(const defcon_result* result, size_t index, defcon_event* out);

/* Linearized buckling beam in the channel |y| <= half_width, followed in the
 * Moreau-Yosida penalty gamma from gamma0 to gamma_max. */
typedef struct defcon_beam_settings {
  double bending;
  double load;
  double density;
  double gravity;
  double length;
  double half_width;
  double gamma0;
  double gamma_max;
  double ratio; /* 0 means (gamma_max / gamma0)^(1/9) */
  size_t initial_elements;
  double power;
  double shift;
  size_t max_roots; /* 0 means unlimited */
  double atol;
  double rtol;
  size_t max_iter;
  int line_search;
} defcon_beam_settings;

typedef struct defcon_beam_solution_info {
  size_t iterations;
  double residual_norm;
  double discovered_at_gamma;
  double active_fraction;
  double min_value;
  double max_value;
} defcon_beam_solution_info;

typedef struct defcon_beam_step_info {
  size_t step;
  double gamma;
  size_t elements;
  size_t branches;
  size_t newcomers;
} defcon_beam_step_info;

DEFCON_API void defcon_beam_default_settings(defcon_beam_settings* out);
DEFCON_API defcon_status defcon_beam_run(const defcon_beam_settings* settings, defcon_beam_result** out);

DEFCON_API void defcon_beam_result_destroy(defcon_beam_result* result);
DEFCON_API double defcon_beam_result_gamma(const defcon_beam_result* result);
DEFCON_API size_t defcon_beam_result_elements(const defcon_beam_result* result);
DEFCON_API size_t defcon_beam_result_dimension(const defcon_beam_result* result);
DEFCON_API size_t defcon_beam_result_solution_count(const defcon_beam_result* result);
DEFCON_API defcon_status defcon_beam_result_solution(const defcon_beam_result* result, size_t index, double* dofs,
                                                     size_t dimension);
DEFCON_API defcon_status defcon_beam_result_solution_info(const defcon_beam_result* result, size_t index,
                                                          defcon_beam_solution_info* out);
/* Nodal profile: x, y(x) and y'(x) at the elements + 1 mesh nodes. */
DEFCON_API defcon_status defcon_beam_result_profile(const defcon_beam_result* result, size_t index, double* x,
                                                    double* y, double* dy, size_t nodes);
DEFCON_API size_t defcon_beam_result_step_count(const defcon_beam_result* result);
DEFCON_API defcon_status defcon_beam_result_step(const defcon_beam_result* result, size_t index,
                                                 defcon_beam_step_info* out);
/* Re-solve iterations of each branch surviving the step, written to iterations[0 .. branches). */
DEFCON_API defcon_status defcon_beam_result_step_iterations(const defcon_beam_result* result, size_t index,
                                                            size_t* iterations, size_t branches);
DEFCON_API size_t defcon_beam_result_event_count(const defcon_beam_result* result);
DEFCON_API defcon_status defcon_beam_result_event(const defcon_beam_result* result, size_t index, defcon_event* out);

#ifdef __cplusplus
}
#endif

#endif
