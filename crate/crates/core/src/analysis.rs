//! Comparison of two packings sharing the same mesh and interior targets.
//!
//! For packings `P` and `P*` realizing boundary data `k_hat` and
//! `k_hat_star` with identical interior totals, three structural statements
//! are checked:
//!
//! * maximum principle: the maximum of `k*(v)/k(v)`, when above 1, is
//!   attained at a boundary vertex; if `k_hat* <= k_hat` on the boundary
//!   then `k* <= k` everywhere;
//! * dual monotonicity: `k* <= k` everywhere forces `k_f* <= k_f` on every
//!   face;
//! * Schwarz-Pick monotonicity: under `k_hat* <= k_hat`, every face region
//!   grows (`Area* >= Area`), every sub-arc grows (`l* >= l`), and sums of
//!   sub-arc lengths along any chain grow with them.
//!
//! All reported quantities are recomputed from the stored curvatures, never
//! read back from solver caches.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry;
use crate::mesh::{Triangulation, VertexId};
use crate::solver::{SolveResult, Target};

/// Ratio tolerance for locating the argmax band of `k*/k`.
const ARGMAX_BAND: f64 = 1e-12;
/// Threshold above which the maximum ratio counts as exceeding 1.
const RATIO_EXCESS: f64 = 1e-12;
/// Relative tolerance for ordering conclusions; ties satisfy every
/// comparison.
const ORDER_TOL: f64 = 1e-10;
/// Tighter tolerance for the dual curvature comparison.
const DUAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Error)]
pub enum AnalysisError {
    #[error("packings live on different meshes ({left} vs {right} vertices)")]
    MeshMismatch { left: usize, right: usize },
    #[error("packings have different interior targets at index {0}")]
    TargetMismatch(usize),
    #[error("comparison requires converged packings")]
    NotConverged,
    #[error("boundary hypothesis violated at vertex {id}: k* = {k_star} > k = {k}")]
    HypothesisViolated { id: u64, k_star: f64, k: f64 },
    #[error("vertexwise ordering not established (vertex {id}: k* = {k_star} > k = {k})")]
    OrderingNotEstablished { id: u64, k_star: f64, k: f64 },
    #[error("chain {chain}: vertex {vertex} is not a vertex of face {face}")]
    InvalidChainElement {
        chain: usize,
        face: usize,
        vertex: u64,
    },
    #[error("chain {chain}: face index {face} out of range")]
    UnknownChainFace { chain: usize, face: usize },
}

/// Two converged packings on one mesh with one interior target.
pub struct PackingPair<'a> {
    pub mesh: &'a Triangulation,
    pub base: &'a SolveResult,
    pub star: &'a SolveResult,
}

impl<'a> PackingPair<'a> {
    pub fn new(
        mesh: &'a Triangulation,
        target: &Target,
        base: &'a SolveResult,
        star: &'a SolveResult,
    ) -> Result<Self, AnalysisError> {
        if base.k.len() != mesh.vertex_count() || star.k.len() != mesh.vertex_count() {
            return Err(AnalysisError::MeshMismatch {
                left: base.k.len(),
                right: star.k.len(),
            });
        }
        if !base.converged || !star.converged {
            return Err(AnalysisError::NotConverged);
        }
        // both solves must share the target exactly; they were checked
        // against it at convergence tolerance already
        for (i, t) in target.t_hat().iter().enumerate() {
            if (base.totals[i] - t).abs() > base.tol * 10.0
                || (star.totals[i] - t).abs() > star.tol * 10.0
            {
                return Err(AnalysisError::TargetMismatch(i));
            }
        }
        Ok(PackingPair { mesh, base, star })
    }

    fn face_curvatures(&self, result: &SolveResult, face: usize) -> [f64; 3] {
        let vs = self.mesh.face(face).vertices;
        [result.k[vs[0].0], result.k[vs[1].0], result.k[vs[2].0]]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioViolation {
    pub vertex: u64,
    pub k: f64,
    pub k_star: f64,
    pub ratio: f64,
}

/// Outcome of the maximum principle checks.
#[derive(Clone, Debug, Serialize)]
pub struct MaxPrincipleReport {
    /// Whether `k_hat* <= k_hat` holds entrywise on the boundary.
    pub boundary_hypothesis: bool,
    /// Whether `k* <= k (1 + tol)` holds on every vertex.
    pub ordered: bool,
    pub max_ratio: f64,
    /// Whether the maximum ratio exceeds 1 beyond tolerance, making the
    /// argmax localization statement non-vacuous.
    pub exceeds_one: bool,
    /// External id of a vertex attaining the maximum ratio (boundary one
    /// preferred when the band contains both).
    pub max_ratio_vertex: u64,
    /// Vertices within the argmax tolerance band.
    pub argmax_band: Vec<u64>,
    /// Whether the argmax band contains a boundary vertex; meaningful when
    /// `max_ratio > 1`.
    pub argmax_contains_boundary: bool,
    /// Interior vertices violating the ordering conclusion when the
    /// boundary hypothesis holds (always empty when the theorems hold).
    pub violations: Vec<RatioViolation>,
}

/// Ratios `k*(v)/k(v)` with the argmax localization and, under the boundary
/// hypothesis, the vertexwise ordering conclusion.
pub fn max_principle_check(pair: &PackingPair) -> Result<MaxPrincipleReport, AnalysisError> {
    let mesh = pair.mesh;
    let n = mesh.vertex_count();
    let ratios: Vec<f64> = (0..n).map(|i| pair.star.k[i] / pair.base.k[i]).collect();
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let band_floor = max_ratio * (1.0 - ARGMAX_BAND);
    let argmax_band: Vec<u64> = (0..n)
        .filter(|&i| ratios[i] >= band_floor)
        .map(|i| mesh.external_id(VertexId(i)))
        .collect();
    let argmax_contains_boundary = (0..n)
        .filter(|&i| ratios[i] >= band_floor)
        .any(|i| mesh.is_boundary(VertexId(i)));
    let max_ratio_vertex = (0..n)
        .filter(|&i| ratios[i] >= band_floor)
        .max_by_key(|&i| mesh.is_boundary(VertexId(i)))
        .map(|i| mesh.external_id(VertexId(i)))
        .expect("mesh has vertices");

    let boundary_hypothesis = mesh
        .boundary_vertices()
        .iter()
        .all(|&v| pair.star.k[v.0] <= pair.base.k[v.0]);

    let mut violations = Vec::new();
    if boundary_hypothesis {
        for (i, &ratio) in ratios.iter().enumerate() {
            if ratio > 1.0 + ORDER_TOL {
                violations.push(RatioViolation {
                    vertex: mesh.external_id(VertexId(i)),
                    k: pair.base.k[i],
                    k_star: pair.star.k[i],
                    ratio,
                });
            }
        }
    }
    let ordered = ratios.iter().all(|r| *r <= 1.0 + ORDER_TOL);

    Ok(MaxPrincipleReport {
        boundary_hypothesis,
        ordered,
        max_ratio,
        exceeds_one: max_ratio > 1.0 + RATIO_EXCESS,
        max_ratio_vertex,
        argmax_band,
        argmax_contains_boundary,
        violations,
    })
}

/// `k_f* <= k_f` on every face, available once the vertexwise ordering has
/// been established.
pub fn dual_monotonicity_check(pair: &PackingPair) -> Result<bool, AnalysisError> {
    let mesh = pair.mesh;
    for i in 0..mesh.vertex_count() {
        if pair.star.k[i] > pair.base.k[i] * (1.0 + ORDER_TOL) {
            return Err(AnalysisError::OrderingNotEstablished {
                id: mesh.external_id(VertexId(i)),
                k_star: pair.star.k[i],
                k: pair.base.k[i],
            });
        }
    }
    for f in 0..mesh.face_count() {
        let kf = geometry::dual_curvature_raw(pair.face_curvatures(pair.base, f));
        let kf_star = geometry::dual_curvature_raw(pair.face_curvatures(pair.star, f));
        if kf_star > kf * (1.0 + DUAL_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A chain of sub-arcs, each addressed by face index and vertex id.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArcChain {
    pub elements: Vec<(usize, u64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexRow {
    pub id: u64,
    pub boundary: bool,
    pub k: f64,
    pub k_star: f64,
    pub ratio: f64,
    pub ordered: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ArcRow {
    pub vertex: u64,
    pub l: f64,
    pub l_star: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FaceRow {
    pub face: usize,
    pub vertices: [u64; 3],
    pub area: f64,
    pub area_star: f64,
    pub area_ok: bool,
    pub k_f: f64,
    pub k_f_star: f64,
    pub dual_ok: bool,
    pub arcs: [ArcRow; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainRow {
    pub elements: Vec<(usize, u64)>,
    pub d: f64,
    pub d_star: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ComparisonSummary {
    pub vertex_violations: usize,
    pub area_violations: usize,
    pub arc_violations: usize,
    pub dual_violations: usize,
    pub chain_violations: usize,
}

/// Full monotonicity report between two packings under the boundary
/// hypothesis `k_hat* <= k_hat`.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub vertices: Vec<VertexRow>,
    pub faces: Vec<FaceRow>,
    pub chains: Vec<ChainRow>,
    pub summary: ComparisonSummary,
}

/// Compare areas, sub-arc lengths, dual curvatures and chain distances.
/// Errors out (rather than reporting) when the boundary hypothesis fails:
/// the monotonicity statements are conditional on it.
pub fn schwarz_pick_report(
    pair: &PackingPair,
    chains: &[ArcChain],
) -> Result<ComparisonReport, AnalysisError> {
    let mesh = pair.mesh;
    for &v in mesh.boundary_vertices() {
        if pair.star.k[v.0] > pair.base.k[v.0] {
            return Err(AnalysisError::HypothesisViolated {
                id: mesh.external_id(v),
                k_star: pair.star.k[v.0],
                k: pair.base.k[v.0],
            });
        }
    }

    let mut summary = ComparisonSummary::default();

    let vertices: Vec<VertexRow> = (0..mesh.vertex_count())
        .map(|i| {
            let ratio = pair.star.k[i] / pair.base.k[i];
            let ordered = ratio <= 1.0 + ORDER_TOL;
            if !ordered {
                summary.vertex_violations += 1;
            }
            VertexRow {
                id: mesh.external_id(VertexId(i)),
                boundary: mesh.is_boundary(VertexId(i)),
                k: pair.base.k[i],
                k_star: pair.star.k[i],
                ratio,
                ordered,
            }
        })
        .collect();

    let mut base_arcs: Vec<[f64; 3]> = Vec::with_capacity(mesh.face_count());
    let mut star_arcs: Vec<[f64; 3]> = Vec::with_capacity(mesh.face_count());
    let faces: Vec<FaceRow> = (0..mesh.face_count())
        .map(|f| {
            let kb = pair.face_curvatures(pair.base, f);
            let ks = pair.face_curvatures(pair.star, f);
            let gb = geometry::face_geometry_raw(kb);
            let gs = geometry::face_geometry_raw(ks);
            base_arcs.push(gb.arc_lengths);
            star_arcs.push(gs.arc_lengths);
            let area_ok = gs.area >= gb.area * (1.0 - ORDER_TOL);
            if !area_ok {
                summary.area_violations += 1;
            }
            let dual_ok = gs.k_f <= gb.k_f * (1.0 + DUAL_TOL);
            if !dual_ok {
                summary.dual_violations += 1;
            }
            let vs = mesh.face(f).vertices;
            let arcs = std::array::from_fn(|slot| {
                let ok = gs.arc_lengths[slot] >= gb.arc_lengths[slot] * (1.0 - ORDER_TOL);
                if !ok {
                    summary.arc_violations += 1;
                }
                ArcRow {
                    vertex: mesh.external_id(vs[slot]),
                    l: gb.arc_lengths[slot],
                    l_star: gs.arc_lengths[slot],
                    ok,
                }
            });
            FaceRow {
                face: f,
                vertices: [
                    mesh.external_id(vs[0]),
                    mesh.external_id(vs[1]),
                    mesh.external_id(vs[2]),
                ],
                area: gb.area,
                area_star: gs.area,
                area_ok,
                k_f: gb.k_f,
                k_f_star: gs.k_f,
                dual_ok,
                arcs,
            }
        })
        .collect();

    let mut chain_rows = Vec::with_capacity(chains.len());
    for (ci, chain) in chains.iter().enumerate() {
        let mut d = 0.0;
        let mut d_star = 0.0;
        for &(face, vertex) in &chain.elements {
            if face >= mesh.face_count() {
                return Err(AnalysisError::UnknownChainFace { chain: ci, face });
            }
            let v = mesh
                .vertex_by_id(vertex)
                .and_then(|v| mesh.face(face).slot_of(v))
                .ok_or(AnalysisError::InvalidChainElement {
                    chain: ci,
                    face,
                    vertex,
                })?;
            d += base_arcs[face][v];
            d_star += star_arcs[face][v];
        }
        let ok = d_star >= d * (1.0 - ORDER_TOL);
        if !ok {
            summary.chain_violations += 1;
        }
        chain_rows.push(ChainRow {
            elements: chain.elements.clone(),
            d,
            d_star,
            ok,
        });
    }

    Ok(ComparisonReport {
        vertices,
        faces,
        chains: chain_rows,
        summary,
    })
}

impl ComparisonReport {
    pub fn all_hold(&self) -> bool {
        let s = &self.summary;
        s.vertex_violations == 0
            && s.area_violations == 0
            && s.arc_violations == 0
            && s.dual_violations == 0
            && s.chain_violations == 0
    }
}
