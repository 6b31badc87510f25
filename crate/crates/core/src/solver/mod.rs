//! Boundary value solver for generalized circle packings.
//!
//! With boundary curvatures fixed, the interior total geodesic curvatures
//! define a map `T : R^{|V_int|} -> R_{>0}^{|V_int|}` of the interior
//! log-curvatures `s = ln k`. Its Jacobian
//!
//! ```text
//!   M = (dT_i/ds_j)
//! ```
//!
//! is the Hessian of a strictly convex potential, symmetric and strictly
//! diagonally dominant with positive diagonal, so `T(s) = T_hat` has at most
//! one solution and both damped Newton descent and the curvature flow
//!
//! ```text
//!   ds/dt = -M (T - T_hat)
//! ```
//!
//! find it whenever the target lies in the feasibility polytope (every
//! interior subset `I` must satisfy `sum_{v in I} T_hat_v < pi |F_I|`).

mod calabi;
mod feasibility;
mod newton;

pub use calabi::{calabi_flow, CalabiConfig, Integrator};
pub use feasibility::{feasibility_check, Feasibility, FeasibilityMode, InfeasibilityWitness};
pub use newton::{newton_solve, NewtonConfig};

use thiserror::Error;

use crate::geometry::{self, FaceGeometry};
use crate::linalg::{gauss_legendre_unit, SymmetricCsr};
use crate::mesh::{Triangulation, VertexId};

/// Interior log-curvatures beyond this magnitude are treated as divergence
/// toward the boundary of the feasibility polytope. Beyond it (curvatures
/// past 2e17) the Jacobian diagonal loses most of its significant digits to
/// cancellation, so the solve could not continue reliably anyway.
pub const DIVERGENCE_LIMIT: f64 = 40.0;

#[derive(Clone, Debug, Error)]
pub enum SolverError {
    #[error("boundary data has {got} entries, mesh has {expected} boundary vertices")]
    BoundaryLengthMismatch { got: usize, expected: usize },
    #[error("target has {got} entries, mesh has {expected} interior vertices")]
    TargetLengthMismatch { got: usize, expected: usize },
    #[error("curvature for boundary vertex {index} must be positive and finite, got {value}")]
    InvalidBoundaryCurvature { index: usize, value: f64 },
    #[error("target total curvature for interior vertex {index} must be positive, got {value}")]
    InvalidTarget { index: usize, value: f64 },
    #[error("solver did not converge (residual {residual_inf:.3e} after {iterations} steps, diverged: {diverged})")]
    NotConverged {
        result: Box<SolveResult>,
        residual_inf: f64,
        iterations: u64,
        diverged: bool,
    },
    #[error(
        "linear system is numerically singular; the assembled Jacobian lost positive definiteness"
    )]
    SingularSystem,
    #[error("assembled Jacobian is asymmetric beyond tolerance ({0:.3e} relative)")]
    AsymmetricJacobian(f64),
    #[error("target is infeasible; witness subset of {} interior vertices with total {total:.6} >= pi * {faces}",
            .witness.len())]
    InfeasibleTarget {
        witness: Vec<VertexId>,
        total: f64,
        faces: usize,
    },
    #[error("enumeration feasibility check limited to 20 interior vertices, mesh has {0}")]
    TooLargeForEnumeration(usize),
    #[error("initial guess has {got} entries, expected {expected}")]
    InitialGuessLengthMismatch { got: usize, expected: usize },
}

/// Prescribed geodesic curvatures on the boundary vertices, indexed by the
/// dense boundary re-index.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    k_hat: Vec<f64>,
}

impl BoundaryData {
    pub fn new(mesh: &Triangulation, k_hat: Vec<f64>) -> Result<Self, SolverError> {
        if k_hat.len() != mesh.boundary_count() {
            return Err(SolverError::BoundaryLengthMismatch {
                got: k_hat.len(),
                expected: mesh.boundary_count(),
            });
        }
        for (index, &value) in k_hat.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SolverError::InvalidBoundaryCurvature { index, value });
            }
        }
        Ok(BoundaryData { k_hat })
    }

    pub fn k_hat(&self) -> &[f64] {
        &self.k_hat
    }

    /// Entrywise scaled copy, for comparison experiments.
    pub fn scaled(&self, factor: f64) -> Self {
        BoundaryData {
            k_hat: self.k_hat.iter().map(|k| k * factor).collect(),
        }
    }
}

/// Prescribed total geodesic curvatures on the interior vertices, indexed by
/// the dense interior re-index. Positivity is checked here; membership in
/// the feasibility polytope is a separate query.
#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    t_hat: Vec<f64>,
}

impl Target {
    pub fn new(mesh: &Triangulation, t_hat: Vec<f64>) -> Result<Self, SolverError> {
        if t_hat.len() != mesh.interior_count() {
            return Err(SolverError::TargetLengthMismatch {
                got: t_hat.len(),
                expected: mesh.interior_count(),
            });
        }
        for (index, &value) in t_hat.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SolverError::InvalidTarget { index, value });
            }
        }
        Ok(Target { t_hat })
    }

    pub fn t_hat(&self) -> &[f64] {
        &self.t_hat
    }
}

/// One accepted step of a solve, in the order written to the trace CSV.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub step: u64,
    /// Flow time for the Calabi flow, iteration count for Newton.
    pub time: f64,
    pub residual_inf: f64,
    /// Energy monitor at this state: the potential relative to the initial
    /// point for Newton, the quadratic form `g' M g` for the flow.
    pub energy_monitor: f64,
    /// Step size taken to reach this state (flow dt or Newton step factor).
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Newton,
    Calabi,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Newton => "newton",
            SolverKind::Calabi => "calabi",
        }
    }
}

/// A converged (or abandoned) solve with everything needed to rebuild the
/// packing: curvatures for all vertices, per-face geometry, achieved totals
/// and the step trace.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub solver: SolverKind,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: u64,
    pub tol: f64,
    pub residual_inf: f64,
    /// Interior log-curvatures, dense interior order.
    pub s: Vec<f64>,
    /// Curvature per vertex, dense vertex order (boundary entries are the
    /// prescribed data).
    pub k: Vec<f64>,
    /// Achieved interior totals, dense interior order.
    pub totals: Vec<f64>,
    /// Per-face geometry at the final state.
    pub faces: Vec<FaceGeometry>,
    pub trace: Vec<TraceRow>,
}

/// Pattern plus boundary data for repeated assemblies on one mesh.
pub struct System<'a> {
    mesh: &'a Triangulation,
    boundary: &'a BoundaryData,
    /// Interior adjacency lists (dense interior indices) defining the
    /// Jacobian pattern.
    interior_adjacency: Vec<Vec<usize>>,
}

/// Interior totals, Jacobian and per-face geometry at one state.
pub struct Assembly {
    pub totals: Vec<f64>,
    pub jacobian: SymmetricCsr,
    pub faces: Vec<FaceGeometry>,
}

impl<'a> System<'a> {
    pub fn new(mesh: &'a Triangulation, boundary: &'a BoundaryData) -> Result<Self, SolverError> {
        if boundary.k_hat.len() != mesh.boundary_count() {
            return Err(SolverError::BoundaryLengthMismatch {
                got: boundary.k_hat.len(),
                expected: mesh.boundary_count(),
            });
        }
        let mut interior_adjacency = vec![Vec::new(); mesh.interior_count()];
        for &v in mesh.interior_vertices() {
            let vi = mesh.interior_index(v).expect("interior vertex");
            for &w in mesh.neighbors(v).expect("vertex in mesh") {
                if let Some(wi) = mesh.interior_index(w) {
                    interior_adjacency[vi].push(wi);
                }
            }
        }
        Ok(System {
            mesh,
            boundary,
            interior_adjacency,
        })
    }

    pub fn mesh(&self) -> &Triangulation {
        self.mesh
    }

    pub fn boundary(&self) -> &BoundaryData {
        self.boundary
    }

    pub fn interior_count(&self) -> usize {
        self.mesh.interior_count()
    }

    /// Curvature of every vertex at interior log-curvatures `s`.
    pub fn curvatures(&self, s: &[f64]) -> Vec<f64> {
        let mesh = self.mesh;
        (0..mesh.vertex_count())
            .map(|i| {
                let v = VertexId(i);
                match mesh.interior_index(v) {
                    Some(ii) => s[ii].exp(),
                    None => self.boundary.k_hat[mesh.boundary_index(v).expect("boundary vertex")],
                }
            })
            .collect()
    }

    fn face_curvatures(&self, k: &[f64], face: usize) -> [f64; 3] {
        let vs = self.mesh.face(face).vertices;
        [k[vs[0].0], k[vs[1].0], k[vs[2].0]]
    }

    /// Interior totals only; the cheap evaluation used by line searches and
    /// quadrature.
    pub fn interior_totals(&self, s: &[f64]) -> Vec<f64> {
        let mesh = self.mesh;
        let k = self.curvatures(s);
        let mut totals = vec![0.0; mesh.interior_count()];
        for f in 0..mesh.face_count() {
            let kf = geometry::dual_curvature_raw(self.face_curvatures(&k, f));
            for v in mesh.face(f).vertices {
                if let Some(vi) = mesh.interior_index(v) {
                    totals[vi] += k[v.0] * geometry::arc_length_raw(k[v.0], kf);
                }
            }
        }
        totals
    }

    /// Totals, Jacobian and per-face geometry at `s`. The Jacobian pattern is
    /// the interior adjacency plus diagonal; boundary vertices contribute to
    /// totals but own no row or column. Symmetry is asserted, not assumed.
    pub fn assemble(&self, s: &[f64]) -> Result<Assembly, SolverError> {
        let mesh = self.mesh;
        let k = self.curvatures(s);
        let mut totals = vec![0.0; mesh.interior_count()];
        let mut jacobian =
            SymmetricCsr::from_pattern(mesh.interior_count(), &self.interior_adjacency);
        let mut faces = Vec::with_capacity(mesh.face_count());
        for f in 0..mesh.face_count() {
            let geom = geometry::face_geometry_raw(self.face_curvatures(&k, f));
            let vs = mesh.face(f).vertices;
            for (slot_v, &v) in vs.iter().enumerate() {
                let Some(vi) = mesh.interior_index(v) else {
                    continue;
                };
                totals[vi] += geom.totals[slot_v];
                for (slot_u, &u) in vs.iter().enumerate() {
                    if let Some(ui) = mesh.interior_index(u) {
                        jacobian.add(vi, ui, geom.dt_ds[slot_v][slot_u]);
                    }
                }
            }
            faces.push(geom);
        }
        let asym = jacobian.asymmetry();
        if asym > 1e-10 {
            return Err(SolverError::AsymmetricJacobian(asym));
        }
        Ok(Assembly {
            totals,
            jacobian,
            faces,
        })
    }

    /// Package a final state as a `SolveResult`, re-verifying the residual
    /// with a fresh assembly.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn finish(
        &self,
        solver: SolverKind,
        s: Vec<f64>,
        target: &Target,
        tol: f64,
        iterations: u64,
        diverged: bool,
        trace: Vec<TraceRow>,
    ) -> Result<SolveResult, SolverError> {
        let assembly = self.assemble(&s)?;
        let residual_inf = residual_inf(&assembly.totals, target.t_hat());
        let converged = residual_inf <= tol && !diverged;
        let result = SolveResult {
            solver,
            converged,
            diverged,
            iterations,
            tol,
            residual_inf,
            k: self.curvatures(&s),
            s,
            totals: assembly.totals,
            faces: assembly.faces,
            trace,
        };
        if converged {
            Ok(result)
        } else {
            Err(SolverError::NotConverged {
                residual_inf,
                iterations,
                diverged,
                result: Box::new(result),
            })
        }
    }
}

pub(crate) fn residual_inf(totals: &[f64], t_hat: &[f64]) -> f64 {
    totals
        .iter()
        .zip(t_hat)
        .map(|(t, th)| (t - th).abs())
        .fold(0.0, f64::max)
}

/// Potential difference `Theta(s) - Theta(reference_s)` by 32-point
/// Gauss-Legendre quadrature of the closed 1-form `sum (T_i - T_hat_i) ds_i`
/// along the straight segment; closedness makes the path choice immaterial.
pub fn potential_energy(system: &System, target: &Target, s: &[f64], reference_s: &[f64]) -> f64 {
    segment_energy(system, target, reference_s, s, 32)
}

/// Same line integral with a caller-chosen node count.
pub(crate) fn segment_energy(
    system: &System,
    target: &Target,
    from: &[f64],
    to: &[f64],
    nodes: usize,
) -> f64 {
    let n = system.interior_count();
    debug_assert_eq!(from.len(), n);
    debug_assert_eq!(to.len(), n);
    let delta: Vec<f64> = to.iter().zip(from).map(|(a, b)| a - b).collect();
    if delta.iter().all(|d| *d == 0.0) {
        return 0.0;
    }
    let (xs, ws) = gauss_legendre_unit(nodes);
    let mut acc = 0.0;
    let mut point = vec![0.0; n];
    for (&x, &w) in xs.iter().zip(&ws) {
        for i in 0..n {
            point[i] = from[i] + x * delta[i];
        }
        let totals = system.interior_totals(&point);
        let mut dot = 0.0;
        for i in 0..n {
            dot += (totals[i] - target.t_hat()[i]) * delta[i];
        }
        acc += w * dot;
    }
    acc
}
