//! Immutable triangulated surface with boundary.
//!
//! Vertices are classified as interior or boundary purely from edge
//! multiplicity: an edge shared by exactly one face is a boundary edge and
//! both of its endpoints are boundary vertices. Declared boundary flags are
//! cross-checked against this derived classification, never trusted.
//!
//! Two structural rules are enforced at build time: every face has at most
//! two boundary vertices, and the surface has at least one boundary edge.
//! Interior and boundary vertices each get a dense re-index so that solver
//! vectors are plain arrays.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("duplicate vertex id {0}")]
    DuplicateVertexId(u64),
    #[error("face {face} references unknown vertex id {id}")]
    UnknownVertexId { face: usize, id: u64 },
    #[error("declared boundary lists unknown vertex id {0}")]
    UnknownDeclaredBoundary(u64),
    #[error("unknown vertex index {0}")]
    UnknownVertex(usize),
    #[error("face {face} repeats vertex id {id}")]
    DegenerateFace { face: usize, id: u64 },
    #[error("edge ({a}, {b}) belongs to {count} faces, at most 2 allowed")]
    NonManifoldEdge { a: u64, b: u64, count: usize },
    #[error("mesh has no boundary edge")]
    NoBoundary,
    #[error("face {face} has all three vertices on the boundary")]
    FaceAllBoundary { face: usize },
    #[error("interior vertex {0} belongs to no face")]
    IsolatedInteriorVertex(u64),
    #[error("vertex {id}: declared boundary flag {declared} contradicts derived flag {derived}")]
    BoundaryMismatch {
        id: u64,
        declared: bool,
        derived: bool,
    },
    #[error("vertex {0} is not an interior vertex")]
    NotInteriorVertex(u64),
    #[error("edge query requires two distinct vertices, got {0} twice")]
    SelfEdgeQuery(usize),
}

/// Dense internal vertex index, stable for the lifetime of a triangulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

/// Ordered vertex triple; all incidence queries treat it as a set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Face {
    pub vertices: [VertexId; 3],
}

impl Face {
    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    /// Slot (0..3) of `v` within this face.
    pub fn slot_of(&self, v: VertexId) -> Option<usize> {
        self.vertices.iter().position(|&w| w == v)
    }
}

/// Validated triangulated surface with boundary.
#[derive(Clone, Debug)]
pub struct Triangulation {
    external_ids: Vec<u64>,
    id_to_index: BTreeMap<u64, VertexId>,
    faces: Vec<Face>,
    is_boundary: Vec<bool>,
    interior: Vec<VertexId>,
    boundary: Vec<VertexId>,
    interior_index: Vec<Option<usize>>,
    boundary_index: Vec<Option<usize>>,
    stars: Vec<Vec<usize>>,
    neighbors: Vec<Vec<VertexId>>,
    edge_faces: BTreeMap<(VertexId, VertexId), Vec<usize>>,
}

impl Triangulation {
    /// Validate raw input and derive all incidence structure.
    pub fn build(
        raw_vertices: &[u64],
        raw_faces: &[[u64; 3]],
        declared_boundary: Option<&[u64]>,
    ) -> Result<Self, MeshError> {
        let n = raw_vertices.len();
        let mut id_to_index = BTreeMap::new();
        for (i, &id) in raw_vertices.iter().enumerate() {
            if id_to_index.insert(id, VertexId(i)).is_some() {
                return Err(MeshError::DuplicateVertexId(id));
            }
        }

        let mut faces = Vec::with_capacity(raw_faces.len());
        for (fi, raw) in raw_faces.iter().enumerate() {
            let mut vs = [VertexId(0); 3];
            for (slot, &id) in raw.iter().enumerate() {
                vs[slot] = *id_to_index
                    .get(&id)
                    .ok_or(MeshError::UnknownVertexId { face: fi, id })?;
            }
            if vs[0] == vs[1] || vs[1] == vs[2] || vs[0] == vs[2] {
                let dup = if vs[0] == vs[1] || vs[0] == vs[2] {
                    raw[0]
                } else {
                    raw[1]
                };
                return Err(MeshError::DegenerateFace { face: fi, id: dup });
            }
            faces.push(Face { vertices: vs });
        }

        let mut edge_faces: BTreeMap<(VertexId, VertexId), Vec<usize>> = BTreeMap::new();
        for (fi, face) in faces.iter().enumerate() {
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                let key = order(face.vertices[a], face.vertices[b]);
                edge_faces.entry(key).or_default().push(fi);
            }
        }
        for (&(a, b), fs) in &edge_faces {
            if fs.len() > 2 {
                return Err(MeshError::NonManifoldEdge {
                    a: raw_vertices[a.0],
                    b: raw_vertices[b.0],
                    count: fs.len(),
                });
            }
        }

        let mut is_boundary = vec![false; n];
        let mut any_boundary_edge = false;
        for (&(a, b), fs) in &edge_faces {
            if fs.len() == 1 {
                any_boundary_edge = true;
                is_boundary[a.0] = true;
                is_boundary[b.0] = true;
            }
        }
        if !any_boundary_edge {
            return Err(MeshError::NoBoundary);
        }

        if let Some(declared) = declared_boundary {
            let mut flag = vec![false; n];
            for &id in declared {
                let v = id_to_index
                    .get(&id)
                    .ok_or(MeshError::UnknownDeclaredBoundary(id))?;
                flag[v.0] = true;
            }
            for i in 0..n {
                if flag[i] != is_boundary[i] {
                    return Err(MeshError::BoundaryMismatch {
                        id: raw_vertices[i],
                        declared: flag[i],
                        derived: is_boundary[i],
                    });
                }
            }
        }

        for (fi, face) in faces.iter().enumerate() {
            if face.vertices.iter().all(|v| is_boundary[v.0]) {
                return Err(MeshError::FaceAllBoundary { face: fi });
            }
        }

        let mut stars: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (fi, face) in faces.iter().enumerate() {
            for v in face.vertices {
                stars[v.0].push(fi);
            }
        }
        for (i, star) in stars.iter().enumerate() {
            if star.is_empty() && !is_boundary[i] {
                return Err(MeshError::IsolatedInteriorVertex(raw_vertices[i]));
            }
        }

        let mut neighbors: Vec<Vec<VertexId>> = vec![Vec::new(); n];
        for &(a, b) in edge_faces.keys() {
            neighbors[a.0].push(b);
            neighbors[b.0].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut interior_index = vec![None; n];
        let mut boundary_index = vec![None; n];
        for i in 0..n {
            if is_boundary[i] {
                boundary_index[i] = Some(boundary.len());
                boundary.push(VertexId(i));
            } else {
                interior_index[i] = Some(interior.len());
                interior.push(VertexId(i));
            }
        }

        Ok(Triangulation {
            external_ids: raw_vertices.to_vec(),
            id_to_index,
            faces,
            is_boundary,
            interior,
            boundary,
            interior_index,
            boundary_index,
            stars,
            neighbors,
            edge_faces,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.external_ids.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, index: usize) -> &Face {
        &self.faces[index]
    }

    /// External id of an internal vertex index.
    pub fn external_id(&self, v: VertexId) -> u64 {
        self.external_ids[v.0]
    }

    pub fn vertex_by_id(&self, id: u64) -> Option<VertexId> {
        self.id_to_index.get(&id).copied()
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.is_boundary[v.0]
    }

    /// Interior vertices in dense re-index order.
    pub fn interior_vertices(&self) -> &[VertexId] {
        &self.interior
    }

    /// Boundary vertices in dense re-index order.
    pub fn boundary_vertices(&self) -> &[VertexId] {
        &self.boundary
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.len()
    }

    /// Dense interior index of `v`, if interior.
    pub fn interior_index(&self, v: VertexId) -> Option<usize> {
        self.interior_index[v.0]
    }

    /// Dense boundary index of `v`, if boundary.
    pub fn boundary_index(&self, v: VertexId) -> Option<usize> {
        self.boundary_index[v.0]
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), MeshError> {
        if v.0 < self.external_ids.len() {
            Ok(())
        } else {
            Err(MeshError::UnknownVertex(v.0))
        }
    }

    /// Faces containing `v`, in face-insertion order.
    pub fn star(&self, v: VertexId) -> Result<&[usize], MeshError> {
        self.check_vertex(v)?;
        Ok(&self.stars[v.0])
    }

    /// Faces containing both `i` and `j` (0, 1 or 2 of them).
    pub fn edge_star(&self, i: VertexId, j: VertexId) -> Result<&[usize], MeshError> {
        self.check_vertex(i)?;
        self.check_vertex(j)?;
        if i == j {
            return Err(MeshError::SelfEdgeQuery(i.0));
        }
        Ok(self
            .edge_faces
            .get(&order(i, j))
            .map(|v| v.as_slice())
            .unwrap_or(&[]))
    }

    /// Vertices sharing an edge with `v`.
    pub fn neighbors(&self, v: VertexId) -> Result<&[VertexId], MeshError> {
        self.check_vertex(v)?;
        Ok(&self.neighbors[v.0])
    }

    /// Number of faces incident to at least one vertex of the interior
    /// subset `set`.
    pub fn coverage(&self, set: &[VertexId]) -> Result<usize, MeshError> {
        let mut seen = vec![false; self.faces.len()];
        let mut count = 0;
        for &v in set {
            self.check_vertex(v)?;
            if self.is_boundary[v.0] {
                return Err(MeshError::NotInteriorVertex(self.external_ids[v.0]));
            }
            for &f in &self.stars[v.0] {
                if !seen[f] {
                    seen[f] = true;
                    count += 1;
                }
            }
        }
        Ok(count)
    }

    /// Per-interior-vertex bitmask of incident faces, one `u64` word per 64
    /// faces. Used by the exhaustive feasibility test.
    pub(crate) fn star_masks(&self) -> Vec<Vec<u64>> {
        let words = self.faces.len().div_ceil(64);
        self.interior
            .iter()
            .map(|&v| {
                let mut mask = vec![0u64; words];
                for &f in &self.stars[v.0] {
                    mask[f / 64] |= 1 << (f % 64);
                }
                mask
            })
            .collect()
    }
}

fn order(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a.0 <= b.0 {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    fn annulus() -> Triangulation {
        let (vs, fs) = fixture::annulus_mesh(4, 1);
        Triangulation::build(&vs, &fs, None).unwrap()
    }

    #[test]
    fn annulus_classification() {
        let m = annulus();
        assert_eq!(m.vertex_count(), 12);
        assert_eq!(m.face_count(), 16);
        assert_eq!(m.interior_count(), 4);
        assert_eq!(m.boundary_count(), 8);
        // ring 0 and ring 2 are boundary, ring 1 interior
        for s in 0..4 {
            assert!(m.is_boundary(m.vertex_by_id(s).unwrap()));
            assert!(!m.is_boundary(m.vertex_by_id(4 + s).unwrap()));
            assert!(m.is_boundary(m.vertex_by_id(8 + s).unwrap()));
        }
    }

    #[test]
    fn single_triangle_rejected() {
        let err = Triangulation::build(&[0, 1, 2], &[[0, 1, 2]], None).unwrap_err();
        assert_eq!(err, MeshError::FaceAllBoundary { face: 0 });
    }

    #[test]
    fn torus_rejected() {
        // 3x3 grid torus: every edge lies in exactly two faces
        let n = 3;
        let vid = |r: u64, c: u64| (r % n) * n + (c % n);
        let mut faces = Vec::new();
        for r in 0..n {
            for c in 0..n {
                faces.push([vid(r, c), vid(r, c + 1), vid(r + 1, c)]);
                faces.push([vid(r, c + 1), vid(r + 1, c + 1), vid(r + 1, c)]);
            }
        }
        let vs: Vec<u64> = (0..9).collect();
        let err = Triangulation::build(&vs, &faces, None).unwrap_err();
        assert_eq!(err, MeshError::NoBoundary);
    }

    #[test]
    fn nonmanifold_edge_rejected() {
        // three faces share edge (0,1)
        let err = Triangulation::build(&[0, 1, 2, 3, 4], &[[0, 1, 2], [0, 1, 3], [0, 1, 4]], None)
            .unwrap_err();
        assert!(matches!(err, MeshError::NonManifoldEdge { count: 3, .. }));
    }

    #[test]
    fn degenerate_face_rejected() {
        let err = Triangulation::build(&[0, 1, 2], &[[0, 1, 1]], None).unwrap_err();
        assert!(matches!(err, MeshError::DegenerateFace { .. }));
    }

    #[test]
    fn isolated_interior_vertex_rejected() {
        let (mut vs, fs) = fixture::annulus_mesh(4, 1);
        vs.push(99);
        let err = Triangulation::build(&vs, &fs, None).unwrap_err();
        assert_eq!(err, MeshError::IsolatedInteriorVertex(99));
    }

    #[test]
    fn declared_boundary_cross_checked() {
        let (vs, fs) = fixture::annulus_mesh(4, 1);
        let good: Vec<u64> = (0..4).chain(8..12).collect();
        assert!(Triangulation::build(&vs, &fs, Some(&good)).is_ok());
        let bad: Vec<u64> = (0..4).collect();
        let err = Triangulation::build(&vs, &fs, Some(&bad)).unwrap_err();
        assert!(matches!(err, MeshError::BoundaryMismatch { .. }));
    }

    #[test]
    fn star_and_edge_star() {
        let m = annulus();
        let v = m.vertex_by_id(4).unwrap(); // interior
        let star = m.star(v).unwrap();
        assert_eq!(star.len(), 6);
        for &f in star {
            assert!(m.face(f).contains(v));
        }
        // interior edge between two interior vertices
        let w = m.vertex_by_id(5).unwrap();
        assert_eq!(m.edge_star(v, w).unwrap().len(), 2);
        // boundary edge
        let b0 = m.vertex_by_id(0).unwrap();
        let b1 = m.vertex_by_id(1).unwrap();
        assert_eq!(m.edge_star(b0, b1).unwrap().len(), 1);
        // non-adjacent pair
        let b2 = m.vertex_by_id(2).unwrap();
        assert_eq!(m.edge_star(b0, b2).unwrap().len(), 0);
        assert!(m.edge_star(v, v).is_err());
        assert!(m.star(VertexId(999)).is_err());
        // boundary vertex: its incident fan (3 faces on the outer ring here)
        let fan = m.star(b0).unwrap();
        assert_eq!(fan.len(), 3);
        for &f in fan {
            assert!(m.face(f).contains(b0));
        }
    }

    #[test]
    fn coverage_examples() {
        let m = annulus();
        assert_eq!(m.coverage(&[]).unwrap(), 0);
        let v = m.vertex_by_id(4).unwrap();
        assert_eq!(m.coverage(&[v]).unwrap(), m.star(v).unwrap().len());
        let w = m.vertex_by_id(5).unwrap();
        let union = m.coverage(&[v, w]).unwrap();
        let shared = m.edge_star(v, w).unwrap().len();
        assert_eq!(
            union,
            m.star(v).unwrap().len() + m.star(w).unwrap().len() - shared
        );
        let b = m.vertex_by_id(0).unwrap();
        assert!(m.coverage(&[b]).is_err());
    }

    #[test]
    fn coverage_monotone_and_submodular() {
        let m = annulus();
        let vs: Vec<VertexId> = m.interior_vertices().to_vec();
        let n = vs.len();
        assert!(n <= 8);
        let cov = |mask: usize| {
            let set: Vec<VertexId> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| vs[i])
                .collect();
            m.coverage(&set).unwrap()
        };
        for small in 0..1usize << n {
            for big in 0..1usize << n {
                if small & big != small {
                    continue;
                }
                assert!(cov(small) <= cov(big));
                for v in 0..n {
                    if big >> v & 1 == 1 {
                        continue;
                    }
                    let gain_small = cov(small | 1 << v) - cov(small);
                    let gain_big = cov(big | 1 << v) - cov(big);
                    assert!(gain_small >= gain_big, "submodularity failed");
                }
            }
        }
    }

    #[test]
    fn edge_star_counts_double_cover_interior_star() {
        let m = annulus();
        for &v in m.interior_vertices() {
            let total: usize = m
                .neighbors(v)
                .unwrap()
                .iter()
                .map(|&w| m.edge_star(v, w).unwrap().len())
                .sum();
            assert_eq!(total, 2 * m.star(v).unwrap().len());
        }
    }

    #[test]
    fn rebuild_is_idempotent() {
        let m = annulus();
        let vs: Vec<u64> = (0..m.vertex_count() as u64).collect();
        let fs: Vec<[u64; 3]> = m
            .faces()
            .iter()
            .map(|f| {
                [
                    m.external_id(f.vertices[0]),
                    m.external_id(f.vertices[1]),
                    m.external_id(f.vertices[2]),
                ]
            })
            .collect();
        let rebuilt = Triangulation::build(&vs, &fs, None).unwrap();
        for i in 0..m.vertex_count() {
            assert_eq!(m.is_boundary(VertexId(i)), rebuilt.is_boundary(VertexId(i)));
        }
    }

    #[test]
    fn disk_fixture_is_valid() {
        let (vs, fs) = fixture::disk_mesh(5, 1);
        let m = Triangulation::build(&vs, &fs, None).unwrap();
        assert_eq!(m.interior_count(), 1);
        assert_eq!(m.boundary_count(), 5);
        let hub = m.vertex_by_id(0).unwrap();
        assert_eq!(m.star(hub).unwrap().len(), 5);
    }
}
