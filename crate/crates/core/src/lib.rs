//! Generalized circle packings on triangulated hyperbolic surfaces with
//! boundary.
//!
//! Given a triangulation of a surface with boundary, prescribed geodesic
//! curvatures on the boundary vertices and prescribed total geodesic
//! curvatures at the interior vertices, this crate finds the unique
//! generalized circle packing (a mix of circles, horocycles and hypercycles)
//! realizing the data, by damped Newton descent or by a combinatorial Calabi
//! flow on the convex curvature potential. It also verifies the structural
//! properties of the solution map (feasibility polytope membership, Jacobian
//! positivity, flow descent, a discrete maximum principle and Schwarz-Pick
//! style monotonicity between packings) and renders per-face packings in the
//! Poincare disk.

pub mod analysis;
pub mod fixture;
pub mod geometry;
pub mod io;
pub mod layout;
pub mod linalg;
pub mod mesh;
pub mod render;
pub mod solver;

pub use geometry::{CircleKind, Curvature, FaceGeometry, GeometryError, LogCurvature};
pub use mesh::{Face, MeshError, Triangulation, VertexId};
pub use solver::{
    calabi_flow, feasibility_check, newton_solve, potential_energy, BoundaryData, CalabiConfig,
    Feasibility, FeasibilityMode, Integrator, NewtonConfig, SolveResult, SolverError, SolverKind,
    System, Target,
};
