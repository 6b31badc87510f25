//! File formats: problem and result JSON, comparison JSON, trace CSV.
//!
//! Numbers are serialized with the shortest representation that round-trips
//! through `f64` exactly, so re-reading output reproduces the bits and
//! identical runs produce byte-identical files. Vertex keys in JSON maps are
//! external vertex ids, ordered numerically.

use std::collections::BTreeMap;
use std::io::Write as IoWrite;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::ComparisonReport;
use crate::mesh::{MeshError, Triangulation, VertexId};
use crate::solver::{BoundaryData, SolveResult, SolverError, Target, TraceRow};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure on {path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse failure: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("boundary_k is missing vertex {0}")]
    MissingBoundaryCurvature(u64),
    #[error("boundary_k lists vertex {0} which is not a boundary vertex")]
    ExtraBoundaryCurvature(u64),
    #[error("target_T is missing vertex {0}")]
    MissingTarget(u64),
    #[error("target_T lists vertex {0} which is not an interior vertex")]
    ExtraTarget(u64),
    #[error("result file was produced by an unconverged solve")]
    UnconvergedResult,
    #[error("result file is inconsistent: {0}")]
    InconsistentResult(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexJson {
    pub id: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshJson {
    pub vertices: Vec<VertexJson>,
    pub faces: Vec<[u64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<u64>>,
}

impl MeshJson {
    pub fn build(&self) -> Result<Triangulation, MeshError> {
        let ids: Vec<u64> = self.vertices.iter().map(|v| v.id).collect();
        Triangulation::build(&ids, &self.faces, self.boundary.as_deref())
    }

    pub fn from_mesh(mesh: &Triangulation) -> Self {
        MeshJson {
            vertices: (0..mesh.vertex_count())
                .map(|i| VertexJson {
                    id: mesh.external_id(VertexId(i)),
                })
                .collect(),
            faces: mesh
                .faces()
                .iter()
                .map(|f| {
                    [
                        mesh.external_id(f.vertices[0]),
                        mesh.external_id(f.vertices[1]),
                        mesh.external_id(f.vertices[2]),
                    ]
                })
                .collect(),
            boundary: Some(
                mesh.boundary_vertices()
                    .iter()
                    .map(|&v| mesh.external_id(v))
                    .collect(),
            ),
        }
    }
}

/// A full problem instance: mesh, boundary curvatures, interior targets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemJson {
    pub mesh: MeshJson,
    pub boundary_k: BTreeMap<u64, f64>,
    pub target_t: BTreeMap<u64, f64>,
}

/// Boundary curvatures alone, for comparison runs on a shared mesh.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryJson {
    pub boundary_k: BTreeMap<u64, f64>,
}

/// Chains for the comparison report, as (face index, vertex id) pairs.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ChainsJson {
    pub chains: Vec<Vec<(usize, u64)>>,
}

pub struct LoadedProblem {
    pub mesh: Triangulation,
    pub boundary: BoundaryData,
    pub target: Target,
}

impl ProblemJson {
    pub fn load(&self) -> Result<LoadedProblem, IoError> {
        let mesh = self.mesh.build()?;
        let boundary = boundary_from_map(&mesh, &self.boundary_k)?;
        let mut t_hat = vec![0.0; mesh.interior_count()];
        for &v in mesh.interior_vertices() {
            let id = mesh.external_id(v);
            let value = self
                .target_t
                .get(&id)
                .copied()
                .ok_or(IoError::MissingTarget(id))?;
            t_hat[mesh.interior_index(v).expect("interior")] = value;
        }
        for id in self.target_t.keys() {
            let v = mesh.vertex_by_id(*id).ok_or(IoError::ExtraTarget(*id))?;
            if mesh.interior_index(v).is_none() {
                return Err(IoError::ExtraTarget(*id));
            }
        }
        let target = Target::new(&mesh, t_hat)?;
        Ok(LoadedProblem {
            mesh,
            boundary,
            target,
        })
    }

    pub fn from_parts(mesh: &Triangulation, boundary: &BoundaryData, target: &Target) -> Self {
        let boundary_k = mesh
            .boundary_vertices()
            .iter()
            .map(|&v| {
                (
                    mesh.external_id(v),
                    boundary.k_hat()[mesh.boundary_index(v).expect("boundary")],
                )
            })
            .collect();
        let target_t = mesh
            .interior_vertices()
            .iter()
            .map(|&v| {
                (
                    mesh.external_id(v),
                    target.t_hat()[mesh.interior_index(v).expect("interior")],
                )
            })
            .collect();
        ProblemJson {
            mesh: MeshJson::from_mesh(mesh),
            boundary_k,
            target_t,
        }
    }
}

/// Resolve an id-keyed curvature map against the mesh's derived boundary.
pub fn boundary_from_map(
    mesh: &Triangulation,
    map: &BTreeMap<u64, f64>,
) -> Result<BoundaryData, IoError> {
    let mut k_hat = vec![0.0; mesh.boundary_count()];
    for &v in mesh.boundary_vertices() {
        let id = mesh.external_id(v);
        let value = map
            .get(&id)
            .copied()
            .ok_or(IoError::MissingBoundaryCurvature(id))?;
        k_hat[mesh.boundary_index(v).expect("boundary")] = value;
    }
    for id in map.keys() {
        let v = mesh
            .vertex_by_id(*id)
            .ok_or(IoError::ExtraBoundaryCurvature(*id))?;
        if mesh.boundary_index(v).is_none() {
            return Err(IoError::ExtraBoundaryCurvature(*id));
        }
    }
    Ok(BoundaryData::new(mesh, k_hat)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaceGeometryJson {
    pub vertices: [u64; 3],
    pub k_f: f64,
    pub l: [f64; 3],
    #[serde(rename = "T")]
    pub t: [f64; 3],
    pub area: f64,
}

/// Serialized solve outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultJson {
    pub solver: String,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: u64,
    pub tol: f64,
    pub residual_inf: f64,
    /// Curvature of every vertex, boundary entries repeating the input data.
    pub k: BTreeMap<u64, f64>,
    /// Achieved interior totals.
    #[serde(rename = "T")]
    pub t: BTreeMap<u64, f64>,
    pub faces: Vec<FaceGeometryJson>,
    pub trace_len: usize,
}

impl ResultJson {
    pub fn from_result(mesh: &Triangulation, result: &SolveResult) -> Self {
        ResultJson {
            solver: result.solver.as_str().to_string(),
            converged: result.converged,
            diverged: result.diverged,
            iterations: result.iterations,
            tol: result.tol,
            residual_inf: result.residual_inf,
            k: (0..mesh.vertex_count())
                .map(|i| (mesh.external_id(VertexId(i)), result.k[i]))
                .collect(),
            t: mesh
                .interior_vertices()
                .iter()
                .map(|&v| {
                    (
                        mesh.external_id(v),
                        result.totals[mesh.interior_index(v).expect("interior")],
                    )
                })
                .collect(),
            faces: mesh
                .faces()
                .iter()
                .zip(&result.faces)
                .map(|(f, g)| FaceGeometryJson {
                    vertices: [
                        mesh.external_id(f.vertices[0]),
                        mesh.external_id(f.vertices[1]),
                        mesh.external_id(f.vertices[2]),
                    ],
                    k_f: g.k_f,
                    l: g.arc_lengths,
                    t: g.totals,
                    area: g.area,
                })
                .collect(),
            trace_len: result.trace.len(),
        }
    }

    /// Curvatures of the face at `index`, in slot order.
    pub fn face_curvatures(&self, index: usize) -> Result<[f64; 3], IoError> {
        let face = self
            .faces
            .get(index)
            .ok_or_else(|| IoError::InconsistentResult(format!("face {index} out of range")))?;
        let mut k = [0.0; 3];
        for (slot, id) in face.vertices.iter().enumerate() {
            k[slot] = *self.k.get(id).ok_or_else(|| {
                IoError::InconsistentResult(format!("missing curvature for vertex {id}"))
            })?;
        }
        Ok(k)
    }
}

/// Comparison output: both solves' metadata plus the monotonicity report.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonJson {
    pub hypothesis_boundary_ordered: bool,
    pub max_principle: crate::analysis::MaxPrincipleReport,
    pub dual_monotone: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ComparisonReport>,
}

/// Write the trace CSV: `step,time,residual_inf,energy_monitor,dt`.
pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<(), IoError> {
    let mut out = String::from("step,time,residual_inf,energy_monitor,dt\n");
    for row in trace {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.step, row.time, row.residual_inf, row.energy_monitor, row.dt
        ));
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    let mut file = std::fs::File::create(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(text.as_bytes())
        .map_err(|source| IoError::File {
            path: path.display().to_string(),
            source,
        })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}
