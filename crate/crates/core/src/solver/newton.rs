//! Damped Newton descent on the convex curvature potential.
//!
//! The search direction solves `M d = -(T - T_hat)` with the SPD Jacobian;
//! steps are accepted under the Armijo rule on the potential difference,
//! which is evaluated exactly (up to quadrature) as a line integral of the
//! residual 1-form along the step segment.

use crate::linalg::{cholesky_solve, conjugate_gradient};

use super::{
    residual_inf, segment_energy, SolveResult, SolverError, SolverKind, System, Target, TraceRow,
    DIVERGENCE_LIMIT,
};

/// Systems up to this size use dense Cholesky; larger ones fall back to
/// Jacobi-preconditioned conjugate gradients.
const DENSE_LIMIT: usize = 1024;
const ARMIJO_SLOPE: f64 = 1e-4;
/// 2^-30, the smallest admissible Armijo step factor.
const MIN_STEP: f64 = 1.0 / (1u64 << 30) as f64;
/// Per-iteration cap on the sup-norm of the Newton step, so infeasible
/// targets produce a readable divergence trace instead of an overflow.
const MAX_STEP_INF: f64 = 50.0;

#[derive(Clone, Debug)]
pub struct NewtonConfig {
    /// Convergence tolerance on the residual sup-norm.
    pub tol: f64,
    pub max_iter: u64,
    /// Initial interior log-curvatures; all zeros (all horocycles) if unset.
    pub initial_s: Option<Vec<f64>>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-10,
            max_iter: 100,
            initial_s: None,
        }
    }
}

/// Solve `T(s) = T_hat` by damped Newton. The target is assumed feasible or
/// caller-checked; an infeasible target ends in `NotConverged` with a
/// diverging trace.
pub fn newton_solve(
    system: &System,
    target: &Target,
    config: &NewtonConfig,
) -> Result<SolveResult, SolverError> {
    let n = system.interior_count();
    let mut s = match &config.initial_s {
        Some(init) => {
            if init.len() != n {
                return Err(SolverError::InitialGuessLengthMismatch {
                    got: init.len(),
                    expected: n,
                });
            }
            init.clone()
        }
        None => vec![0.0; n],
    };

    let mut trace = Vec::new();
    let mut theta = 0.0; // potential relative to the initial point
    let mut last_alpha = 0.0;
    let mut diverged = false;

    for iter in 0..=config.max_iter {
        let assembly = system.assemble(&s)?;
        let gradient: Vec<f64> = assembly
            .totals
            .iter()
            .zip(target.t_hat())
            .map(|(t, th)| t - th)
            .collect();
        let residual = residual_inf(&assembly.totals, target.t_hat());
        trace.push(TraceRow {
            step: iter,
            time: iter as f64,
            residual_inf: residual,
            energy_monitor: theta,
            dt: last_alpha,
        });
        if residual <= config.tol {
            return system.finish(
                SolverKind::Newton,
                s,
                target,
                config.tol,
                iter,
                false,
                trace,
            );
        }
        if iter == config.max_iter {
            break;
        }

        let rhs: Vec<f64> = gradient.iter().map(|g| -g).collect();
        let solved = if n <= DENSE_LIMIT {
            cholesky_solve(n, &assembly.jacobian.to_dense(), &rhs)
        } else {
            conjugate_gradient(&assembly.jacobian, &rhs, 1e-13, 20 * n.max(100))
        };
        let mut direction = match solved {
            Some(d) => d,
            // positive definiteness can only degrade once the state has run
            // far toward the polytope boundary; treat that as divergence
            None if s.iter().any(|v| v.abs() > DIVERGENCE_LIMIT / 2.0) => {
                diverged = true;
                break;
            }
            None => return Err(SolverError::SingularSystem),
        };

        let step_inf = direction.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if step_inf > MAX_STEP_INF {
            let scale = MAX_STEP_INF / step_inf;
            direction.iter_mut().for_each(|d| *d *= scale);
        }
        let slope: f64 = gradient.iter().zip(&direction).map(|(g, d)| g * d).sum();

        // Armijo backtracking on the potential difference along the segment
        let mut alpha = 1.0;
        let mut candidate;
        let mut delta_theta;
        loop {
            candidate = s
                .iter()
                .zip(&direction)
                .map(|(si, di)| si + alpha * di)
                .collect::<Vec<f64>>();
            delta_theta = segment_energy(system, target, &s, &candidate, 16);
            if delta_theta <= ARMIJO_SLOPE * alpha * slope {
                break;
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                break;
            }
        }
        s = candidate;
        theta += delta_theta;
        last_alpha = alpha;

        if s.iter().any(|v| v.abs() > DIVERGENCE_LIMIT) {
            diverged = true;
            break;
        }
    }

    let iterations = trace.last().map(|r| r.step).unwrap_or(0);
    system.finish(
        SolverKind::Newton,
        s,
        target,
        config.tol,
        iterations,
        diverged,
        trace,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::FixtureSampler;
    use crate::mesh::Triangulation;
    use crate::solver::{potential_energy, BoundaryData, Target};

    #[test]
    fn recovers_forward_map_source() {
        let mut sampler = FixtureSampler::new(3);
        for _ in 0..5 {
            let p = sampler.annulus_problem(16);
            let system = System::new(&p.mesh, &p.boundary).unwrap();
            let result = newton_solve(&system, &p.target, &NewtonConfig::default()).unwrap();
            assert!(result.converged);
            assert!(result.residual_inf <= 1e-10);
            for (got, want) in result.s.iter().zip(&p.source_s) {
                assert!(
                    (got - want).abs() < 1e-8,
                    "recovered {got} vs source {want}"
                );
            }
        }
    }

    #[test]
    fn zero_residual_converges_in_zero_iterations() {
        let mut sampler = FixtureSampler::new(5);
        let p = sampler.annulus_problem(8);
        let system = System::new(&p.mesh, &p.boundary).unwrap();
        // target evaluated exactly at the default initial guess s = 0
        let t0 = system.interior_totals(&vec![0.0; system.interior_count()]);
        let target = Target::new(&p.mesh, t0).unwrap();
        let result = newton_solve(&system, &target, &NewtonConfig::default()).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 0);
    }

    #[test]
    fn warm_start_shortens_the_solve() {
        let mut sampler = FixtureSampler::new(7);
        let p = sampler.annulus_problem(10);
        let system = System::new(&p.mesh, &p.boundary).unwrap();
        let cold = newton_solve(&system, &p.target, &NewtonConfig::default()).unwrap();
        let near: Vec<f64> = p.source_s.iter().map(|s| s + 1e-5).collect();
        let warm = newton_solve(
            &system,
            &p.target,
            &NewtonConfig {
                initial_s: Some(near),
                ..NewtonConfig::default()
            },
        )
        .unwrap();
        assert!(warm.iterations <= 2);
        assert!(warm.iterations < cold.iterations);
        assert!(matches!(
            newton_solve(
                &system,
                &p.target,
                &NewtonConfig {
                    initial_s: Some(vec![0.0; 3]),
                    ..NewtonConfig::default()
                },
            ),
            Err(SolverError::InitialGuessLengthMismatch { .. })
        ));
    }

    #[test]
    fn infeasible_target_diverges() {
        // wheel with one interior vertex of degree 5: any target >= 5 pi is
        // outside the feasibility polytope
        let (vs, fs) = crate::fixture::disk_mesh(5, 1);
        let mesh = Triangulation::build(&vs, &fs, None).unwrap();
        let boundary = BoundaryData::new(&mesh, vec![1.0; 5]).unwrap();
        let target = Target::new(&mesh, vec![15.0 * std::f64::consts::PI]).unwrap();
        let system = System::new(&mesh, &boundary).unwrap();
        let err = newton_solve(&system, &target, &NewtonConfig::default()).unwrap_err();
        match err {
            SolverError::NotConverged {
                diverged, result, ..
            } => {
                assert!(diverged);
                assert!(
                    result.s[0] > 10.0,
                    "curvature should blow up, s = {}",
                    result.s[0]
                );
            }
            other => panic!("expected NotConverged, got {other}"),
        }
    }

    #[test]
    fn potential_decreases_along_trace() {
        let mut sampler = FixtureSampler::new(9);
        let p = sampler.annulus_problem(10);
        let system = System::new(&p.mesh, &p.boundary).unwrap();
        let result = newton_solve(&system, &p.target, &NewtonConfig::default()).unwrap();
        for pair in result.trace.windows(2) {
            assert!(
                pair[1].energy_monitor <= pair[0].energy_monitor + 1e-12,
                "potential rose from {} to {}",
                pair[0].energy_monitor,
                pair[1].energy_monitor
            );
        }
        // the accumulated monitor agrees with a direct quadrature of Theta
        let zero = vec![0.0; system.interior_count()];
        let direct = potential_energy(&system, &p.target, &result.s, &zero);
        let accumulated = result.trace.last().unwrap().energy_monitor;
        assert!(
            (direct - accumulated).abs() < 1e-8 * direct.abs().max(1.0),
            "direct {direct} vs accumulated {accumulated}"
        );
    }

    #[test]
    fn solves_disk_meshes() {
        let (vs, fs) = crate::fixture::disk_mesh(6, 3);
        let mesh = Triangulation::build(&vs, &fs, None).unwrap();
        assert_eq!(mesh.interior_count(), 13);
        let mut sampler = FixtureSampler::new(17);
        let p = sampler.problem(mesh);
        let system = System::new(&p.mesh, &p.boundary).unwrap();
        let result = newton_solve(&system, &p.target, &NewtonConfig::default()).unwrap();
        assert!(result.converged);
        for (got, want) in result.s.iter().zip(&p.source_s) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn distinct_solves_run_concurrently() {
        let mut sampler = FixtureSampler::new(19);
        let p = sampler.annulus_problem(10);
        let q = sampler.annulus_problem(10);
        let (a, b) = std::thread::scope(|scope| {
            let first = scope.spawn(|| {
                let system = System::new(&p.mesh, &p.boundary).unwrap();
                newton_solve(&system, &p.target, &NewtonConfig::default()).unwrap()
            });
            let second = scope.spawn(|| {
                let system = System::new(&q.mesh, &q.boundary).unwrap();
                newton_solve(&system, &q.target, &NewtonConfig::default()).unwrap()
            });
            (first.join().unwrap(), second.join().unwrap())
        });
        assert!(a.converged && b.converged);
    }

    #[test]
    fn relabeling_permutes_solution() {
        let (vs, fs) = crate::fixture::annulus_mesh(5, 1);
        let mesh = Triangulation::build(&vs, &fs, None).unwrap();
        let k_hat: Vec<f64> = (0..mesh.boundary_count())
            .map(|i| 0.5 + 0.3 * i as f64)
            .collect();
        let boundary = BoundaryData::new(&mesh, k_hat.clone()).unwrap();
        let t_hat: Vec<f64> = (0..mesh.interior_count())
            .map(|i| 1.0 + 0.2 * i as f64)
            .collect();
        let target = Target::new(&mesh, t_hat.clone()).unwrap();
        let system = System::new(&mesh, &boundary).unwrap();
        let base = newton_solve(&system, &target, &NewtonConfig::default()).unwrap();

        // relabel vertices by reversing ids; permute faces too
        let n = vs.len() as u64;
        let relabel = |v: u64| n - 1 - v;
        let vs2: Vec<u64> = vs.iter().map(|&v| relabel(v)).collect();
        let fs2: Vec<[u64; 3]> = fs
            .iter()
            .rev()
            .map(|f| [relabel(f[0]), relabel(f[1]), relabel(f[2])])
            .collect();
        let mesh2 = Triangulation::build(&vs2, &fs2, None).unwrap();
        // rebuild boundary/target data against the new dense orders
        let mut k_hat2 = vec![0.0; mesh2.boundary_count()];
        for &v in mesh.boundary_vertices() {
            let id = mesh.external_id(v);
            let w = mesh2.vertex_by_id(id).unwrap();
            k_hat2[mesh2.boundary_index(w).unwrap()] = k_hat[mesh.boundary_index(v).unwrap()];
        }
        let mut t_hat2 = vec![0.0; mesh2.interior_count()];
        for &v in mesh.interior_vertices() {
            let id = mesh.external_id(v);
            let w = mesh2.vertex_by_id(id).unwrap();
            t_hat2[mesh2.interior_index(w).unwrap()] = t_hat[mesh.interior_index(v).unwrap()];
        }
        let boundary2 = BoundaryData::new(&mesh2, k_hat2).unwrap();
        let target2 = Target::new(&mesh2, t_hat2).unwrap();
        let system2 = System::new(&mesh2, &boundary2).unwrap();
        let permuted = newton_solve(&system2, &target2, &NewtonConfig::default()).unwrap();

        for &v in mesh.interior_vertices() {
            let id = mesh.external_id(v);
            let w = mesh2.vertex_by_id(id).unwrap();
            let a = base.s[mesh.interior_index(v).unwrap()];
            let b = permuted.s[mesh2.interior_index(w).unwrap()];
            assert!((a - b).abs() < 1e-9, "vertex {id}: {a} vs {b}");
        }
    }
}
