#ifndef SPLITPRO_H
#define SPLITPRO_H

/* Generated from the splitpro-ffi crate by cbindgen; edit the Rust source instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call. `Ok` is zero; anything else leaves an
// explanation readable through [`splitpro_last_error_message`].
typedef enum SplitproStatus {
  SPLITPRO_STATUS_OK = 0,
  // A required pointer argument was null.
  SPLITPRO_STATUS_NULL_ARGUMENT = 1,
  // Dimensions, lengths, or parameter values do not fit together.
  SPLITPRO_STATUS_INVALID_ARGUMENT = 2,
  // The state-space pair (A, C) is not observable.
  SPLITPRO_STATUS_NOT_OBSERVABLE = 3,
  // Recorded data is too short or not rich enough to span the behavior.
  SPLITPRO_STATUS_DATA_NOT_RICH = 4,
  // The constraints (prefix included) admit no solution.
  SPLITPRO_STATUS_INFEASIBLE = 5,
  // A matrix factorization or weight-matrix check failed.
  SPLITPRO_STATUS_NUMERIC = 6,
  // Step size outside the stability interval of the iteration.
  SPLITPRO_STATUS_STEP_SIZE = 7,
  // The iteration budget ran out before the tolerance was met.
  SPLITPRO_STATUS_NOT_CONVERGED = 8,
  // A panic was caught at the boundary; library state is still valid.
  SPLITPRO_STATUS_PANICKED = 9,
} SplitproStatus;

// Solver selection for [`splitpro_solve`]; passed as a plain `int` so an
// out-of-range value can be rejected instead of being undefined behavior.
typedef enum SplitproSolver {
  // Projected-gradient iteration on the prefix-pinned behavior slice.
  SPLITPRO_SOLVER_FORWARD_BACKWARD = 0,
  // Three-operator splitting; the default choice.
  SPLITPRO_SOLVER_THREE_OPERATOR = 1,
  // Direct saddle-point solution, no iteration.
  SPLITPRO_SOLVER_DIRECT = 2,
} SplitproSolver;

// Orthonormal basis of one behavior's window slice (opaque).
typedef struct SplitproBehavior SplitproBehavior;

// One finite-horizon tracking problem (opaque).
typedef struct SplitproProblem SplitproProblem;

// Solution suffix plus solve diagnostics (opaque).
typedef struct SplitproSolution SplitproSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *splitpro_version(void);

// Copies the current thread's most recent error message into `buf` (always
// NUL-terminated, truncated to `cap` bytes) and returns the full message
// length in bytes, excluding the terminator. Call with a null `buf` or zero
// `cap` to query the length alone. The message is only meaningful after a
// call on the same thread returned a non-`Ok` status.
//
// # Safety
//
// `buf` must be null or point to at least `cap` writable bytes.
size_t splitpro_last_error_message(char *buf, size_t cap);

// Builds a behavior from a discrete-time state-space model
// `x+ = A x + B u`, `y = C x + D u` by spanning every input/output window
// of `horizon` samples. The signal stacks inputs before outputs, so
// `q = m + p`. Fails if `(A, C)` is not observable or the horizon is
// shorter than the model's lag.
//
// # Safety
//
// `a`, `b`, `c`, `d` must point to row-major arrays of `n*n`, `n*m`,
// `p*n`, and `p*m` doubles respectively, and `out` to a writable pointer
// slot. On `Ok` the caller owns the handle written to `out` and must
// release it with [`splitpro_behavior_free`].
enum SplitproStatus splitpro_behavior_from_state_space(size_t n,
                                                       size_t m,
                                                       size_t p,
                                                       const double *a,
                                                       const double *b,
                                                       const double *c,
                                                       const double *d,
                                                       size_t horizon,
                                                       struct SplitproBehavior **out);

// Builds a behavior from recorded data alone: `samples` holds `t_len`
// consecutive signal samples of dimension `q`, time-major. The window span
// is taken from the depth-`horizon` Hankel matrix of the record, which must
// have rank `m*horizon + n` (`m` inputs, state order `n`) — i.e. the data
// must be long and rich enough to excite the whole behavior. A
// non-positive `rank_rel_tol` selects the default cutoff.
//
// # Safety
//
// `samples` must point to `q*t_len` doubles and `out` to a writable
// pointer slot. On `Ok` the caller owns the handle written to `out`.
enum SplitproStatus splitpro_behavior_from_data(size_t q,
                                                size_t m,
                                                size_t n,
                                                const double *samples,
                                                size_t t_len,
                                                size_t horizon,
                                                double rank_rel_tol,
                                                struct SplitproBehavior **out);

// Length of the stacked window vector the behavior lives in (`q*horizon`);
// zero for a null handle.
//
// # Safety
//
// `behavior` must be null or a live handle from a constructor.
size_t splitpro_behavior_dim(const struct SplitproBehavior *behavior);

// Dimension of the behavior's window slice as a subspace (the basis rank);
// zero for a null handle.
//
// # Safety
//
// `behavior` must be null or a live handle from a constructor.
size_t splitpro_behavior_rank(const struct SplitproBehavior *behavior);

// Signal dimension `q`; zero for a null handle.
//
// # Safety
//
// `behavior` must be null or a live handle from a constructor.
size_t splitpro_behavior_signal_dim(const struct SplitproBehavior *behavior);

// Window length in samples; zero for a null handle.
//
// # Safety
//
// `behavior` must be null or a live handle from a constructor.
size_t splitpro_behavior_horizon(const struct SplitproBehavior *behavior);

// Orthogonally projects a stacked window vector onto the behavior. `len`
// must equal [`splitpro_behavior_dim`]. `point` and `result` may alias.
//
// # Safety
//
// `behavior` must be a live handle; `point` and `result` must each point
// to `len` doubles, `result` writable.
enum SplitproStatus splitpro_behavior_project(const struct SplitproBehavior *behavior,
                                              const double *point,
                                              size_t len,
                                              double *result);

// Releases a behavior handle; a null pointer is ignored.
//
// # Safety
//
// `behavior` must be null or an unreleased handle from a constructor.
void splitpro_behavior_free(struct SplitproBehavior *behavior);

// Assembles a tracking problem over one window: the first `t_ini` samples
// are pinned to the measured prefix `w_ini`, the remaining `t_f` samples
// chase `w_ref` under the per-sample weight `phi` (symmetric positive
// definite, `q*q` row-major). The behavior's horizon must equal
// `t_ini + t_f`. The problem copies everything it needs, so the behavior
// handle may be freed afterwards.
//
// # Safety
//
// `behavior` must be a live handle; `w_ini`, `w_ref`, and `phi` must point
// to `q*t_ini`, `q*t_f`, and `q*q` doubles; `out` must be a writable
// pointer slot. On `Ok` the caller owns the handle written to `out`.
enum SplitproStatus splitpro_problem_new(const struct SplitproBehavior *behavior,
                                         const double *w_ini,
                                         size_t t_ini,
                                         const double *w_ref,
                                         size_t t_f,
                                         const double *phi,
                                         struct SplitproProblem **out);

// Releases a problem handle; a null pointer is ignored.
//
// # Safety
//
// `problem` must be null or an unreleased handle from
// [`splitpro_problem_new`].
void splitpro_problem_free(struct SplitproProblem *problem);

// Solves a tracking problem. `solver` takes a [`SplitproSolver`] value;
// non-positive `alpha`, `tol`, or `max_iterations` select the defaults
// (half the stability bound, `1e-9`, and `50000`). On `Ok` the solution
// handle carries the suffix trajectory plus diagnostics; if the iteration
// budget runs out first, the call returns `NotConverged` and writes
// nothing.
//
// # Safety
//
// `problem` must be a live handle and `out` a writable pointer slot. On
// `Ok` the caller owns the handle written to `out` and must release it
// with [`splitpro_solution_free`].
enum SplitproStatus splitpro_solve(const struct SplitproProblem *problem,
                                   int solver,
                                   double alpha,
                                   double tol,
                                   size_t max_iterations,
                                   struct SplitproSolution **out);

// Signal dimension of the solution suffix; zero for a null handle.
//
// # Safety
//
// `solution` must be null or a live handle from [`splitpro_solve`].
size_t splitpro_solution_q(const struct SplitproSolution *solution);

// Number of samples in the solution suffix; zero for a null handle.
//
// # Safety
//
// `solution` must be null or a live handle from [`splitpro_solve`].
size_t splitpro_solution_t_len(const struct SplitproSolution *solution);

// Iterations the solver spent (zero for the direct solver); zero for a
// null handle.
//
// # Safety
//
// `solution` must be null or a live handle from [`splitpro_solve`].
size_t splitpro_solution_iterations(const struct SplitproSolution *solution);

// Whether the residual met the tolerance; false for a null handle.
//
// # Safety
//
// `solution` must be null or a live handle from [`splitpro_solve`].
bool splitpro_solution_converged(const struct SplitproSolution *solution);

// Weighted tracking cost of the suffix against the reference; NaN for a
// null handle.
//
// # Safety
//
// `solution` must be null or a live handle from [`splitpro_solve`].
double splitpro_solution_cost(const struct SplitproSolution *solution);

// Copies the solution suffix, time-major, into `buf`. `len` must equal
// `q * t_len` as reported by the accessors.
//
// # Safety
//
// `solution` must be a live handle and `buf` must point to `len` writable
// doubles.
enum SplitproStatus splitpro_solution_copy(const struct SplitproSolution *solution,
                                           double *buf,
                                           size_t len);

// Releases a solution handle; a null pointer is ignored.
//
// # Safety
//
// `solution` must be null or an unreleased handle from [`splitpro_solve`].
void splitpro_solution_free(struct SplitproSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLITPRO_H */
