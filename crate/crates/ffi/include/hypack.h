#ifndef HYPACK_H
#define HYPACK_H

/* This file is generated by cbindgen from the hypack-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Solver selection for `hypack_solve`.
typedef enum {
  HYPACK_SOLVER_NEWTON = 0,
  HYPACK_SOLVER_CALABI = 1,
} HypackSolver;

// Time integrator for the Calabi flow solver.
typedef enum {
  HYPACK_INTEGRATOR_EULER = 0,
  HYPACK_INTEGRATOR_RK4 = 1,
} HypackIntegrator;

// Status codes returned by every fallible entry point.
typedef enum {
  HYPACK_OK = 0,
  // A required pointer argument was null.
  HYPACK_NULL_ARGUMENT = 1,
  // Input text was not valid UTF-8.
  HYPACK_INVALID_UTF8 = 2,
  // JSON parsing or schema validation failed.
  HYPACK_PARSE_ERROR = 3,
  // The mesh violates a structural invariant.
  HYPACK_INVALID_MESH = 4,
  // Curvature or target data is out of range.
  HYPACK_INVALID_DATA = 5,
  // The target lies outside the feasibility polytope.
  HYPACK_INFEASIBLE = 6,
  // The solver exhausted its budget without converging.
  HYPACK_NOT_CONVERGED = 7,
  // Internal numerical failure.
  HYPACK_NUMERICAL_ERROR = 8,
  // A panic was caught at the boundary.
  HYPACK_PANIC = 9,
} HypackStatus;

// Opaque problem handle: validated mesh, boundary data and target.
typedef struct HypackProblem HypackProblem;

// Opaque result handle.
typedef struct HypackResult HypackResult;

// Options for `hypack_solve`; obtain defaults from
// `hypack_solve_options_default` and override fields as needed.
typedef struct {
  HypackSolver solver;
  // Residual sup-norm tolerance.
  double tol;
  // Newton iteration cap.
  uint64_t max_iter;
  // Calabi flow time horizon.
  double t_max;
  // Calabi flow initial step size.
  double dt_init;
  HypackIntegrator integrator;
  // Check feasibility before solving.
  bool check_feasibility;
} HypackSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Default solve options (Newton, tolerance 1e-10, feasibility checked).
HypackSolveOptions hypack_solve_options_default(void);

// Parse a problem JSON document (same schema as the CLI) into a handle.
// On success writes a pointer the caller must free with
// `hypack_problem_free`.
//
// # Safety
// `json` must point to a NUL-terminated string; `out` must be a valid
// pointer to pointer.
HypackStatus hypack_problem_parse(const char *json, HypackProblem **out);

// Release a problem handle. Null is a no-op.
//
// # Safety
// `problem` must come from `hypack_problem_parse` and not be freed twice.
void hypack_problem_free(HypackProblem *problem);

// Numbers of interior vertices, boundary vertices and faces.
//
// # Safety
// All pointers must be valid; `problem` must be a live handle.
HypackStatus hypack_problem_sizes(const HypackProblem *problem,
                                  uint64_t *interior,
                                  uint64_t *boundary,
                                  uint64_t *faces);

// Test whether the target lies in the feasibility polytope (enumeration up
// to 20 interior vertices, max-flow beyond).
//
// # Safety
// `problem` must be a live handle; `feasible` must be valid.
HypackStatus hypack_problem_feasible(const HypackProblem *problem, bool *feasible);

// Solve the problem. `HYPACK_OK` and `HYPACK_NOT_CONVERGED` both produce a
// result handle (the latter carrying the abandoned state); the caller
// frees it with `hypack_result_free`. Passing a null `options` uses the
// defaults.
//
// # Safety
// `problem` must be a live handle; `out` must be valid; `options` may be
// null.
HypackStatus hypack_solve(const HypackProblem *problem,
                          const HypackSolveOptions *options,
                          HypackResult **out);

// Release a result handle. Null is a no-op.
//
// # Safety
// `result` must come from `hypack_solve` and not be freed twice.
void hypack_result_free(HypackResult *result);

// Convergence flag of a result.
//
// # Safety
// Pointers must be valid.
HypackStatus hypack_result_converged(const HypackResult *result, bool *converged);

// Final residual sup-norm of a result.
//
// # Safety
// Pointers must be valid.
HypackStatus hypack_result_residual(const HypackResult *result, double *residual);

// Solved geodesic curvature at the vertex with external id `vertex`.
//
// # Safety
// Pointers must be valid.
HypackStatus hypack_result_curvature(const HypackResult *result,
                                     uint64_t vertex,
                                     double *curvature);

// Serialize the result to JSON (same schema as the CLI writes). The caller
// frees the string with `hypack_string_free`.
//
// # Safety
// Pointers must be valid.
HypackStatus hypack_result_to_json(const HypackResult *result, char **out);

// Free a string allocated by this library. Null is a no-op.
//
// # Safety
// `s` must come from a hypack function and not be freed twice.
void hypack_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPACK_H */
