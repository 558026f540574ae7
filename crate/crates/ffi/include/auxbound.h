#ifndef AUXBOUND_H
#define AUXBOUND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Return codes.
 */
typedef enum AbStatus {
  AB_STATUS_OK = 0,
  AB_STATUS_NULL_POINTER = 1,
  AB_STATUS_INVALID_ARGUMENT = 2,
  AB_STATUS_PARSE_ERROR = 3,
  AB_STATUS_INVALID_PROBLEM = 4,
  AB_STATUS_SOLVER_ERROR = 5,
  AB_STATUS_NUMERICAL_ERROR = 6,
  AB_STATUS_IO_ERROR = 7,
  AB_STATUS_PANIC = 8,
} AbStatus;

/**
 * Solver outcome of a bound computation.
 */
typedef enum AbSolverStatus {
  AB_SOLVER_STATUS_OPTIMAL = 0,
  AB_SOLVER_STATUS_PRIMAL_INFEASIBLE = 1,
  AB_SOLVER_STATUS_DUAL_INFEASIBLE = 2,
  AB_SOLVER_STATUS_SLOW_PROGRESS = 3,
  AB_SOLVER_STATUS_ITERATION_LIMIT = 4,
} AbSolverStatus;

/**
 * The outcome of a bound computation.
 */
typedef struct AbBound AbBound;

/**
 * A bounding problem.
 */
typedef struct AbProblem AbProblem;

/**
 * Result of a lower-bound search.
 */
typedef struct AbLowerBound {
  double value;
  double time;
} AbLowerBound;

/**
 * Result of a certificate check.
 */
typedef struct AbCheckReport {
  double max_lie_violation;
  double max_phi_violation;
  size_t grid_size;
  bool pass;
} AbCheckReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` and returns its
 * full length; 0 if there is none.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t ab_last_error(char *buf, size_t len);

/**
 * Instantiates a builtin problem with default parameters.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AbStatus ab_problem_builtin(const char *name, struct AbProblem **out);

/**
 * Parses a JSON problem file.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AbStatus ab_problem_from_json(const char *json, struct AbProblem **out);

/**
 * Number of state variables.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t ab_problem_nstate(const struct AbProblem *problem);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void ab_problem_free(struct AbProblem *problem);

/**
 * Computes an SOS upper bound with a degree-`degree` auxiliary function.
 * A non-optimal solver outcome is still `AB_STATUS_OK`; inspect it with
 * [`ab_bound_status`].
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum AbStatus ab_compute_bound(const struct AbProblem *problem,
                               uint32_t degree,
                               bool time_independent,
                               double gap_tol,
                               struct AbBound **out);

/**
 * # Safety
 * `bound` must be a live handle.
 */
double ab_bound_lambda(const struct AbBound *bound);

/**
 * # Safety
 * `bound` must be a live handle.
 */
enum AbSolverStatus ab_bound_status(const struct AbBound *bound);

/**
 * Copies the auxiliary function as polynomial text into `buf` and returns
 * its full length.
 *
 * # Safety
 * `bound` must be a live handle; `buf` null or `len` writable bytes.
 */
size_t ab_bound_v(const struct AbBound *bound, char *buf, size_t len);

/**
 * # Safety
 * `bound` must be null or a handle not yet freed.
 */
void ab_bound_free(struct AbBound *bound);

/**
 * Multistart search for the largest `Φ` along trajectories from `X0`.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum AbStatus ab_lower_bound(const struct AbProblem *problem,
                             size_t starts,
                             uint64_t seed,
                             struct AbLowerBound *out);

/**
 * Checks a polynomial auxiliary function on a grid. `box_spec` is
 * `"lo:hi,..."` over `t,x` or `x`; `res_spec` is `"n,..."` or one `"n"`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `problem` live; `out` valid.
 */
enum AbStatus ab_check_certificate(const struct AbProblem *problem,
                                   const char *v,
                                   const char *box_spec,
                                   const char *res_spec,
                                   double tol,
                                   struct AbCheckReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUXBOUND_H */
