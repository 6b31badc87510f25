//! C ABI for the hypack solver.
//!
//! All functions are panic-safe, return a status code from `HypackStatus`,
//! and transfer ownership only through paired parse/free calls. Problems
//! and results are opaque handles; bulk data moves as JSON strings in the
//! same schemas the CLI reads and writes.
//!
//! Typical use from C:
//!
//! ```c
//! HypackProblem *problem = NULL;
//! if (hypack_problem_parse(json, &problem) != HYPACK_OK) { ... }
//! HypackSolveOptions opts = hypack_solve_options_default();
//! HypackResult *result = NULL;
//! if (hypack_solve(problem, &opts, &result) == HYPACK_OK) {
//!     char *out = NULL;
//!     hypack_result_to_json(result, &out);
//!     /* ... */
//!     hypack_string_free(out);
//! }
//! hypack_result_free(result);
//! hypack_problem_free(problem);
//! ```

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hypack::io::{ProblemJson, ResultJson};
use hypack::solver::{
    calabi_flow, feasibility_check, newton_solve, CalabiConfig, Feasibility, FeasibilityMode,
    Integrator, NewtonConfig, SolveResult, SolverError, System,
};
use hypack::{BoundaryData, Target, Triangulation};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HypackStatus {
    HypackOk = 0,
    /// A required pointer argument was null.
    HypackNullArgument = 1,
    /// Input text was not valid UTF-8.
    HypackInvalidUtf8 = 2,
    /// JSON parsing or schema validation failed.
    HypackParseError = 3,
    /// The mesh violates a structural invariant.
    HypackInvalidMesh = 4,
    /// Curvature or target data is out of range.
    HypackInvalidData = 5,
    /// The target lies outside the feasibility polytope.
    HypackInfeasible = 6,
    /// The solver exhausted its budget without converging.
    HypackNotConverged = 7,
    /// Internal numerical failure.
    HypackNumericalError = 8,
    /// A panic was caught at the boundary.
    HypackPanic = 9,
}

use HypackStatus::*;

/// Opaque problem handle: validated mesh, boundary data and target.
pub struct HypackProblem {
    mesh: Triangulation,
    boundary: BoundaryData,
    target: Target,
}

/// Opaque result handle.
pub struct HypackResult {
    result: SolveResult,
    json: ResultJson,
}

/// Solver selection for `hypack_solve`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HypackSolver {
    HypackSolverNewton = 0,
    HypackSolverCalabi = 1,
}

/// Time integrator for the Calabi flow solver.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HypackIntegrator {
    HypackIntegratorEuler = 0,
    HypackIntegratorRk4 = 1,
}

/// Options for `hypack_solve`; obtain defaults from
/// `hypack_solve_options_default` and override fields as needed.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct HypackSolveOptions {
    pub solver: HypackSolver,
    /// Residual sup-norm tolerance.
    pub tol: f64,
    /// Newton iteration cap.
    pub max_iter: u64,
    /// Calabi flow time horizon.
    pub t_max: f64,
    /// Calabi flow initial step size.
    pub dt_init: f64,
    pub integrator: HypackIntegrator,
    /// Check feasibility before solving.
    pub check_feasibility: bool,
}

fn default_options() -> HypackSolveOptions {
    HypackSolveOptions {
        solver: HypackSolver::HypackSolverNewton,
        tol: 1e-10,
        max_iter: 100,
        t_max: 1e4,
        dt_init: 0.05,
        integrator: HypackIntegrator::HypackIntegratorEuler,
        check_feasibility: true,
    }
}

/// Default solve options (Newton, tolerance 1e-10, feasibility checked).
#[no_mangle]
pub extern "C" fn hypack_solve_options_default() -> HypackSolveOptions {
    default_options()
}

fn classify(err: &SolverError) -> HypackStatus {
    match err {
        SolverError::NotConverged { .. } => HypackNotConverged,
        SolverError::InfeasibleTarget { .. } => HypackInfeasible,
        SolverError::SingularSystem | SolverError::AsymmetricJacobian(_) => HypackNumericalError,
        _ => HypackInvalidData,
    }
}

fn guard<F: FnOnce() -> HypackStatus>(f: F) -> HypackStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(HypackPanic)
}

fn auto_mode(mesh: &Triangulation) -> FeasibilityMode {
    if mesh.interior_count() <= 20 {
        FeasibilityMode::Enumerate
    } else {
        FeasibilityMode::Flow
    }
}

/// Parse a problem JSON document (same schema as the CLI) into a handle.
/// On success writes a pointer the caller must free with
/// `hypack_problem_free`.
///
/// # Safety
/// `json` must point to a NUL-terminated string; `out` must be a valid
/// pointer to pointer.
#[no_mangle]
pub unsafe extern "C" fn hypack_problem_parse(
    json: *const c_char,
    out: *mut *mut HypackProblem,
) -> HypackStatus {
    if json.is_null() || out.is_null() {
        return HypackNullArgument;
    }
    let text = match unsafe { CStr::from_ptr(json) }.to_str() {
        Ok(t) => t,
        Err(_) => return HypackInvalidUtf8,
    };
    guard(|| {
        let parsed: ProblemJson = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(_) => return HypackParseError,
        };
        let loaded = match parsed.load() {
            Ok(l) => l,
            Err(hypack::io::IoError::Mesh(_)) => return HypackInvalidMesh,
            Err(hypack::io::IoError::Solver(_)) => return HypackInvalidData,
            Err(_) => return HypackParseError,
        };
        let handle = Box::new(HypackProblem {
            mesh: loaded.mesh,
            boundary: loaded.boundary,
            target: loaded.target,
        });
        unsafe { *out = Box::into_raw(handle) };
        HypackOk
    })
}

/// Release a problem handle. Null is a no-op.
///
/// # Safety
/// `problem` must come from `hypack_problem_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hypack_problem_free(problem: *mut HypackProblem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// Numbers of interior vertices, boundary vertices and faces.
///
/// # Safety
/// All pointers must be valid; `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hypack_problem_sizes(
    problem: *const HypackProblem,
    interior: *mut u64,
    boundary: *mut u64,
    faces: *mut u64,
) -> HypackStatus {
    if problem.is_null() || interior.is_null() || boundary.is_null() || faces.is_null() {
        return HypackNullArgument;
    }
    let p = unsafe { &*problem };
    unsafe {
        *interior = p.mesh.interior_count() as u64;
        *boundary = p.mesh.boundary_count() as u64;
        *faces = p.mesh.face_count() as u64;
    }
    HypackOk
}

/// Test whether the target lies in the feasibility polytope (enumeration up
/// to 20 interior vertices, max-flow beyond).
///
/// # Safety
/// `problem` must be a live handle; `feasible` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hypack_problem_feasible(
    problem: *const HypackProblem,
    feasible: *mut bool,
) -> HypackStatus {
    if problem.is_null() || feasible.is_null() {
        return HypackNullArgument;
    }
    let p = unsafe { &*problem };
    guard(
        || match feasibility_check(&p.mesh, &p.target, auto_mode(&p.mesh)) {
            Ok(verdict) => {
                unsafe { *feasible = verdict.is_feasible() };
                HypackOk
            }
            Err(err) => classify(&err),
        },
    )
}

/// Solve the problem. `HYPACK_OK` and `HYPACK_NOT_CONVERGED` both produce a
/// result handle (the latter carrying the abandoned state); the caller
/// frees it with `hypack_result_free`. Passing a null `options` uses the
/// defaults.
///
/// # Safety
/// `problem` must be a live handle; `out` must be valid; `options` may be
/// null.
#[no_mangle]
pub unsafe extern "C" fn hypack_solve(
    problem: *const HypackProblem,
    options: *const HypackSolveOptions,
    out: *mut *mut HypackResult,
) -> HypackStatus {
    if problem.is_null() || out.is_null() {
        return HypackNullArgument;
    }
    let p = unsafe { &*problem };
    let opts = if options.is_null() {
        default_options()
    } else {
        unsafe { *options }
    };
    guard(|| {
        if opts.check_feasibility {
            match feasibility_check(&p.mesh, &p.target, auto_mode(&p.mesh)) {
                Ok(Feasibility::Feasible) => {}
                Ok(Feasibility::Infeasible(_)) => return HypackInfeasible,
                Err(err) => return classify(&err),
            }
        }
        let system = match System::new(&p.mesh, &p.boundary) {
            Ok(s) => s,
            Err(err) => return classify(&err),
        };
        let solved = match opts.solver {
            HypackSolver::HypackSolverNewton => newton_solve(
                &system,
                &p.target,
                &NewtonConfig {
                    tol: opts.tol,
                    max_iter: opts.max_iter,
                    initial_s: None,
                },
            ),
            HypackSolver::HypackSolverCalabi => calabi_flow(
                &system,
                &p.target,
                &CalabiConfig {
                    tol: opts.tol,
                    integrator: match opts.integrator {
                        HypackIntegrator::HypackIntegratorEuler => Integrator::Euler,
                        HypackIntegrator::HypackIntegratorRk4 => Integrator::Rk4,
                    },
                    dt_init: opts.dt_init,
                    t_max: opts.t_max,
                    ..CalabiConfig::default()
                },
            ),
        };
        let (result, status) = match solved {
            Ok(result) => (result, HypackOk),
            Err(SolverError::NotConverged { result, .. }) => (*result, HypackNotConverged),
            Err(err) => return classify(&err),
        };
        let json = ResultJson::from_result(&p.mesh, &result);
        let handle = Box::new(HypackResult { result, json });
        unsafe { *out = Box::into_raw(handle) };
        status
    })
}

/// Release a result handle. Null is a no-op.
///
/// # Safety
/// `result` must come from `hypack_solve` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hypack_result_free(result: *mut HypackResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

/// Convergence flag of a result.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hypack_result_converged(
    result: *const HypackResult,
    converged: *mut bool,
) -> HypackStatus {
    if result.is_null() || converged.is_null() {
        return HypackNullArgument;
    }
    unsafe { *converged = (*result).result.converged };
    HypackOk
}

/// Final residual sup-norm of a result.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hypack_result_residual(
    result: *const HypackResult,
    residual: *mut f64,
) -> HypackStatus {
    if result.is_null() || residual.is_null() {
        return HypackNullArgument;
    }
    unsafe { *residual = (*result).result.residual_inf };
    HypackOk
}

/// Solved geodesic curvature at the vertex with external id `vertex`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hypack_result_curvature(
    result: *const HypackResult,
    vertex: u64,
    curvature: *mut f64,
) -> HypackStatus {
    if result.is_null() || curvature.is_null() {
        return HypackNullArgument;
    }
    let r = unsafe { &*result };
    match r.json.k.get(&vertex) {
        Some(value) => {
            unsafe { *curvature = *value };
            HypackOk
        }
        None => HypackInvalidData,
    }
}

/// Serialize the result to JSON (same schema as the CLI writes). The caller
/// frees the string with `hypack_string_free`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hypack_result_to_json(
    result: *const HypackResult,
    out: *mut *mut c_char,
) -> HypackStatus {
    if result.is_null() || out.is_null() {
        return HypackNullArgument;
    }
    let r = unsafe { &*result };
    guard(|| match serde_json::to_string(&r.json) {
        Ok(text) => match CString::new(text) {
            Ok(cstring) => {
                unsafe { *out = cstring.into_raw() };
                HypackOk
            }
            Err(_) => HypackNumericalError,
        },
        Err(_) => HypackNumericalError,
    })
}

/// Free a string allocated by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from a hypack function and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hypack_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
