//! Membership test for the feasibility polytope.
//!
//! A target is realizable exactly when every nonempty interior subset `I`
//! satisfies `sum_{v in I} T_hat_v < pi |F_I|`, with `F_I` the faces meeting
//! `I`. Two routes are implemented:
//!
//! * `Enumerate` walks all subsets (up to 20 interior vertices) with
//!   per-vertex face bitmasks.
//! * `Flow` solves a max-flow problem on the bipartite network
//!   `source -> vertex (cap T_hat_v) -> incident faces (cap inf) -> sink
//!   (cap pi)`: all source edges saturate iff every subset inequality holds
//!   weakly, and strictness is certified by re-running with the target
//!   inflated by `1 + 1e-9`. A failed run yields the min-cut witness.

use std::f64::consts::PI;

use crate::mesh::{Triangulation, VertexId};

use super::{SolverError, Target};

/// Strictness margin for the subset inequalities in enumeration mode.
const ENUMERATION_MARGIN: f64 = 1e-12;
/// Relative inflation certifying strict feasibility in flow mode.
const FLOW_EPSILON: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeasibilityMode {
    /// Exhaustive subset enumeration; rejected above 20 interior vertices.
    Enumerate,
    /// Max-flow saturation test with epsilon-inflation strictness check.
    Flow,
}

/// A subset violating (or exhausting) its inequality.
#[derive(Clone, Debug)]
pub struct InfeasibilityWitness {
    pub subset: Vec<VertexId>,
    pub total: f64,
    pub face_count: usize,
}

#[derive(Clone, Debug)]
pub enum Feasibility {
    Feasible,
    Infeasible(InfeasibilityWitness),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

/// Decide whether `target` lies in the open feasibility polytope.
pub fn feasibility_check(
    mesh: &Triangulation,
    target: &Target,
    mode: FeasibilityMode,
) -> Result<Feasibility, SolverError> {
    match mode {
        FeasibilityMode::Enumerate => enumerate_check(mesh, target),
        FeasibilityMode::Flow => flow_check(mesh, target),
    }
}

fn enumerate_check(mesh: &Triangulation, target: &Target) -> Result<Feasibility, SolverError> {
    let n = mesh.interior_count();
    if n > 20 {
        return Err(SolverError::TooLargeForEnumeration(n));
    }
    let masks = mesh.star_masks();
    let words = mesh.face_count().div_ceil(64);
    let t_hat = target.t_hat();

    // worst subset by violation margin, deterministic tie-break on the mask
    let mut worst: Option<(f64, usize)> = None;
    let mut union = vec![0u64; words];
    for mask in 1usize..(1 << n) {
        union.iter_mut().for_each(|w| *w = 0);
        let mut total = 0.0;
        for v in 0..n {
            if mask >> v & 1 == 1 {
                total += t_hat[v];
                for (w, m) in union.iter_mut().zip(&masks[v]) {
                    *w |= m;
                }
            }
        }
        let faces: u32 = union.iter().map(|w| w.count_ones()).sum();
        let margin = total - PI * faces as f64;
        if margin >= -ENUMERATION_MARGIN && worst.map(|(m, _)| margin > m).unwrap_or(true) {
            worst = Some((margin, mask));
        }
    }

    match worst {
        None => Ok(Feasibility::Feasible),
        Some((_, mask)) => {
            let subset: Vec<VertexId> = (0..n)
                .filter(|v| mask >> v & 1 == 1)
                .map(|v| mesh.interior_vertices()[v])
                .collect();
            let total = (0..n)
                .filter(|v| mask >> v & 1 == 1)
                .map(|v| t_hat[v])
                .sum();
            let face_count = mesh.coverage(&subset).expect("subset is interior");
            Ok(Feasibility::Infeasible(InfeasibilityWitness {
                subset,
                total,
                face_count,
            }))
        }
    }
}

fn flow_check(mesh: &Triangulation, target: &Target) -> Result<Feasibility, SolverError> {
    // Saturation at the nominal target, then at the inflated target; both
    // must pass for strict membership.
    if let Some(witness) = saturation_failure(mesh, target.t_hat(), 1.0) {
        return Ok(Feasibility::Infeasible(witness));
    }
    if let Some(witness) = saturation_failure(mesh, target.t_hat(), 1.0 + FLOW_EPSILON) {
        return Ok(Feasibility::Infeasible(witness));
    }
    Ok(Feasibility::Feasible)
}

/// Run the max-flow saturation test with the target scaled by `scale`;
/// return the min-cut witness if some source edge stays unsaturated.
fn saturation_failure(
    mesh: &Triangulation,
    t_hat: &[f64],
    scale: f64,
) -> Option<InfeasibilityWitness> {
    let n = mesh.interior_count();
    let f = mesh.face_count();
    let total_demand: f64 = t_hat.iter().sum::<f64>() * scale;
    let eps = 1e-13 * total_demand.max(1.0);

    // nodes: 0 = source, 1..=n interior vertices, n+1..=n+f faces, n+f+1 sink
    let source = 0;
    let sink = n + f + 1;
    let mut net = Dinic::new(n + f + 2);
    let infinite = total_demand + 1.0;
    for (vi, &v) in mesh.interior_vertices().iter().enumerate() {
        net.add_edge(source, 1 + vi, t_hat[vi] * scale);
        for &face in mesh.star(v).expect("interior vertex") {
            net.add_edge(1 + vi, 1 + n + face, infinite);
        }
    }
    for face in 0..f {
        net.add_edge(1 + n + face, sink, PI);
    }
    let flow = net.max_flow(source, sink, eps);
    if flow >= total_demand - eps {
        return None;
    }
    // min-cut side reachable from the source in the residual graph
    let reachable = net.reachable(source, eps);
    let subset: Vec<VertexId> = (0..n)
        .filter(|vi| reachable[1 + vi])
        .map(|vi| mesh.interior_vertices()[vi])
        .collect();
    let total: f64 = (0..n)
        .filter(|vi| reachable[1 + vi])
        .map(|vi| t_hat[vi])
        .sum();
    let face_count = mesh.coverage(&subset).expect("subset is interior");
    Some(InfeasibilityWitness {
        subset,
        total,
        face_count,
    })
}

/// Dinic max-flow on real-valued capacities.
struct Dinic {
    // edge arrays: to, capacity (residual), paired reverse edge index
    to: Vec<usize>,
    cap: Vec<f64>,
    head: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(nodes: usize) -> Self {
        Dinic {
            to: Vec::new(),
            cap: Vec::new(),
            head: vec![Vec::new(); nodes],
            level: vec![0; nodes],
            iter: vec![0; nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        let e = self.to.len();
        self.to.push(to);
        self.cap.push(cap);
        self.head[from].push(e);
        self.to.push(from);
        self.cap.push(0.0);
        self.head[to].push(e + 1);
    }

    fn bfs(&mut self, source: usize, sink: usize, eps: f64) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut queue = std::collections::VecDeque::new();
        self.level[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > eps && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[sink] >= 0
    }

    fn dfs(&mut self, u: usize, sink: usize, limit: f64, eps: f64) -> f64 {
        if u == sink {
            return limit;
        }
        while self.iter[u] < self.head[u].len() {
            let e = self.head[u][self.iter[u]];
            let v = self.to[e];
            if self.cap[e] > eps && self.level[v] == self.level[u] + 1 {
                let pushed = self.dfs(v, sink, limit.min(self.cap[e]), eps);
                if pushed > eps {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            self.iter[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, source: usize, sink: usize, eps: f64) -> f64 {
        let mut flow = 0.0;
        while self.bfs(source, sink, eps) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let pushed = self.dfs(source, sink, f64::INFINITY, eps);
                if pushed <= eps {
                    break;
                }
                flow += pushed;
            }
        }
        flow
    }

    fn reachable(&self, source: usize, eps: f64) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[source] = true;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > eps && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::{self, FixtureSampler};
    use crate::mesh::Triangulation;
    use crate::solver::BoundaryData;

    fn wheel() -> Triangulation {
        let (vs, fs) = fixture::disk_mesh(5, 1);
        Triangulation::build(&vs, &fs, None).unwrap()
    }

    #[test]
    fn single_vertex_witness() {
        let mesh = wheel();
        // 5 pi = 15.70796...; anything at or above it on the lone interior
        // vertex is unrealizable, anything strictly below is fine
        let target = Target::new(&mesh, vec![16.0]).unwrap();
        for mode in [FeasibilityMode::Enumerate, FeasibilityMode::Flow] {
            match feasibility_check(&mesh, &target, mode).unwrap() {
                Feasibility::Infeasible(w) => {
                    assert_eq!(w.subset.len(), 1);
                    assert_eq!(w.face_count, 5);
                    assert!(w.total >= PI * w.face_count as f64 - 1e-9);
                }
                Feasibility::Feasible => panic!("16 >= 5 pi must be infeasible ({mode:?})"),
            }
        }
        let below = Target::new(&mesh, vec![15.0]).unwrap();
        for mode in [FeasibilityMode::Enumerate, FeasibilityMode::Flow] {
            assert!(
                feasibility_check(&mesh, &below, mode)
                    .unwrap()
                    .is_feasible(),
                "15 < 5 pi stays inside the polytope ({mode:?})"
            );
        }
    }

    #[test]
    fn small_target_feasible() {
        let mesh = wheel();
        let target = Target::new(&mesh, vec![1.0]).unwrap();
        for mode in [FeasibilityMode::Enumerate, FeasibilityMode::Flow] {
            assert!(feasibility_check(&mesh, &target, mode)
                .unwrap()
                .is_feasible());
        }
    }

    #[test]
    fn forward_map_targets_always_feasible() {
        let mut sampler = FixtureSampler::new(41);
        for _ in 0..10 {
            let p = sampler.annulus_problem(12);
            for mode in [FeasibilityMode::Enumerate, FeasibilityMode::Flow] {
                assert!(
                    feasibility_check(&p.mesh, &p.target, mode)
                        .unwrap()
                        .is_feasible(),
                    "forward-generated target must be feasible"
                );
            }
        }
    }

    #[test]
    fn modes_agree_on_inflated_targets() {
        let mut sampler = FixtureSampler::new(43);
        for round in 0..20 {
            let p = sampler.annulus_problem(12);
            // inflate one entry beyond its star bound to force infeasibility
            let mut t = p.target.t_hat().to_vec();
            let idx = round % t.len();
            let v = p.mesh.interior_vertices()[idx];
            let degree = p.mesh.star(v).unwrap().len();
            t[idx] = PI * degree as f64 * sampler.uniform(1.0, 1.8);
            let target = Target::new(&p.mesh, t).unwrap();
            let a = feasibility_check(&p.mesh, &target, FeasibilityMode::Enumerate).unwrap();
            let b = feasibility_check(&p.mesh, &target, FeasibilityMode::Flow).unwrap();
            assert_eq!(a.is_feasible(), b.is_feasible());
            if let Feasibility::Infeasible(w) = &a {
                assert!(w.total >= PI * w.face_count as f64 - 1e-9);
            }
            if let Feasibility::Infeasible(w) = &b {
                assert!(w.total >= PI * w.face_count as f64 - 1e-9);
            }
        }
    }

    #[test]
    fn enumeration_size_limit() {
        let (vs, fs) = fixture::annulus_mesh(11, 2); // 22 interior vertices
        let mesh = Triangulation::build(&vs, &fs, None).unwrap();
        let boundary = BoundaryData::new(&mesh, vec![1.0; mesh.boundary_count()]).unwrap();
        let _ = boundary;
        let target = Target::new(&mesh, vec![1.0; mesh.interior_count()]).unwrap();
        assert!(matches!(
            feasibility_check(&mesh, &target, FeasibilityMode::Enumerate),
            Err(SolverError::TooLargeForEnumeration(22))
        ));
        assert!(feasibility_check(&mesh, &target, FeasibilityMode::Flow)
            .unwrap()
            .is_feasible());
    }

    #[test]
    fn boundary_of_polytope_is_infeasible() {
        // exactly pi * degree on a single vertex sits on the closure boundary
        let mesh = wheel();
        let target = Target::new(&mesh, vec![5.0 * PI]).unwrap();
        for mode in [FeasibilityMode::Enumerate, FeasibilityMode::Flow] {
            assert!(
                !feasibility_check(&mesh, &target, mode)
                    .unwrap()
                    .is_feasible(),
                "closed-boundary target must be rejected ({mode:?})"
            );
        }
    }
}
