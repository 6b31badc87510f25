//! Test-fixture meshes and seeded problem generators.
//!
//! Annuli and disks-with-hub are the smallest triangulations satisfying the
//! structural rules (boundary present, no all-boundary face), so they serve
//! as the standard instances for tests and for the `fixture` CLI command.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mesh::Triangulation;
use crate::solver::{BoundaryData, System, Target};

/// Triangulated annulus: `interior_rings + 2` concentric rings of `segments`
/// vertices each; innermost and outermost rings are the two boundary loops.
///
/// Vertex ids are `ring * segments + s`. Requires `segments >= 3` and
/// `interior_rings >= 1` (with no interior ring every face would have all
/// three vertices on the boundary).
pub fn annulus_mesh(segments: u64, interior_rings: u64) -> (Vec<u64>, Vec<[u64; 3]>) {
    assert!(segments >= 3, "annulus needs at least 3 segments");
    assert!(
        interior_rings >= 1,
        "annulus needs at least 1 interior ring"
    );
    let rings = interior_rings + 2;
    let vertices: Vec<u64> = (0..rings * segments).collect();
    let mut faces = Vec::new();
    let vid = |r: u64, s: u64| r * segments + s % segments;
    for r in 0..rings - 1 {
        for s in 0..segments {
            faces.push([vid(r, s), vid(r, s + 1), vid(r + 1, s)]);
            faces.push([vid(r, s + 1), vid(r + 1, s + 1), vid(r + 1, s)]);
        }
    }
    (vertices, faces)
}

/// Triangulated disk: a hub vertex, `rings - 1` interior rings and one
/// boundary ring of `segments` vertices. `rings = 1` is the wheel (hub only
/// interior vertex).
pub fn disk_mesh(segments: u64, rings: u64) -> (Vec<u64>, Vec<[u64; 3]>) {
    assert!(segments >= 3, "disk needs at least 3 segments");
    assert!(rings >= 1, "disk needs at least 1 ring");
    let vertices: Vec<u64> = (0..1 + rings * segments).collect();
    let vid = |r: u64, s: u64| 1 + (r - 1) * segments + s % segments;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, vid(1, s), vid(1, s + 1)]);
    }
    for r in 1..rings {
        for s in 0..segments {
            faces.push([vid(r, s), vid(r, s + 1), vid(r + 1, s)]);
            faces.push([vid(r, s + 1), vid(r + 1, s + 1), vid(r + 1, s)]);
        }
    }
    (vertices, faces)
}

/// A generated problem instance: mesh plus boundary curvatures plus an
/// interior target produced by the forward map, hence always realizable.
pub struct FixtureProblem {
    pub mesh: Triangulation,
    pub boundary: BoundaryData,
    pub target: Target,
    /// The log-curvatures the target was generated from.
    pub source_s: Vec<f64>,
}

/// Deterministic sampler for boundary curvatures and interior targets.
pub struct FixtureSampler {
    rng: ChaCha8Rng,
}

impl FixtureSampler {
    pub fn new(seed: u64) -> Self {
        FixtureSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Log-uniform curvature in `[lo, hi]`.
    pub fn curvature(&mut self, lo: f64, hi: f64) -> f64 {
        let t: f64 = self.rng.random();
        (lo.ln() + t * (hi.ln() - lo.ln())).exp()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    /// Sample a full problem on the given mesh: boundary curvatures
    /// log-uniform in `[0.2, 5]`, target from the forward map at interior
    /// log-curvatures uniform in `[-1, 1]`.
    pub fn problem(&mut self, mesh: Triangulation) -> FixtureProblem {
        let k_hat: Vec<f64> = (0..mesh.boundary_count())
            .map(|_| self.curvature(0.2, 5.0))
            .collect();
        let source_s: Vec<f64> = (0..mesh.interior_count())
            .map(|_| self.uniform(-1.0, 1.0))
            .collect();
        let boundary = BoundaryData::new(&mesh, k_hat).expect("sampled curvatures are positive");
        let target = {
            let system = System::new(&mesh, &boundary).expect("fixture mesh is consistent");
            Target::new(&mesh, system.interior_totals(&source_s))
                .expect("forward map produces positive totals")
        };
        FixtureProblem {
            mesh,
            boundary,
            target,
            source_s,
        }
    }

    /// Random annulus problem with `segments` in `[4, 9]` and interior rings
    /// chosen so the interior vertex count does not exceed `max_interior`.
    pub fn annulus_problem(&mut self, max_interior: usize) -> FixtureProblem {
        let segments = self.range(4, 9);
        let max_rings = (max_interior / segments).max(1);
        let rings = self.range(1, max_rings.min(5));
        let (vs, fs) = annulus_mesh(segments as u64, rings as u64);
        let mesh = Triangulation::build(&vs, &fs, None).expect("generated annulus is valid");
        self.problem(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_meshes_validate() {
        for segments in [3u64, 4, 7] {
            for rings in [1u64, 2, 3] {
                let (vs, fs) = annulus_mesh(segments, rings);
                let m = Triangulation::build(&vs, &fs, None).unwrap();
                assert_eq!(m.interior_count() as u64, segments * rings);
                let (vs, fs) = disk_mesh(segments, rings);
                let m = Triangulation::build(&vs, &fs, None).unwrap();
                assert_eq!(m.interior_count() as u64, 1 + segments * (rings - 1));
            }
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let mut a = FixtureSampler::new(7);
        let mut b = FixtureSampler::new(7);
        for _ in 0..32 {
            assert_eq!(a.curvature(0.2, 5.0), b.curvature(0.2, 5.0));
        }
        let pa = a.annulus_problem(20);
        let pb = b.annulus_problem(20);
        assert_eq!(pa.boundary.k_hat(), pb.boundary.k_hat());
        assert_eq!(pa.target.t_hat(), pb.target.t_hat());
    }
}
