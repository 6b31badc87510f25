//! Combinatorial Calabi flow `ds/dt = -M (T - T_hat)`.
//!
//! The flow descends the same convex potential as Newton and converges to
//! the unique realization of a feasible target. Time stepping is explicit
//! (Euler or classical Runge-Kutta) with a step controller driven by the
//! Lyapunov monitor `g' M g`, `g = T - T_hat`: a step that increases the
//! monitor is rejected and retried with half the step, and ten consecutive
//! accepted steps grow it again. Accepted steps therefore never increase
//! the monitor, and the recorded trace is non-increasing by construction.

use super::{
    residual_inf, SolveResult, SolverError, SolverKind, System, Target, TraceRow, DIVERGENCE_LIMIT,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
}

impl Integrator {
    pub fn as_str(self) -> &'static str {
        match self {
            Integrator::Euler => "euler",
            Integrator::Rk4 => "rk4",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CalabiConfig {
    pub tol: f64,
    pub integrator: Integrator,
    pub dt_init: f64,
    pub t_max: f64,
    pub max_steps: u64,
    pub initial_s: Option<Vec<f64>>,
    /// Smallest step before the flow gives up; rejections halve the step.
    pub dt_min: f64,
    /// Largest step the controller will grow to.
    pub dt_max: f64,
    /// Consecutive accepted steps before the step grows.
    pub grow_after: u32,
    /// Growth factor applied after `grow_after` accepted steps.
    pub grow_factor: f64,
}

impl Default for CalabiConfig {
    fn default() -> Self {
        CalabiConfig {
            tol: 1e-10,
            integrator: Integrator::Euler,
            dt_init: 0.05,
            t_max: 1e4,
            max_steps: 2_000_000,
            initial_s: None,
            dt_min: 1e-12,
            dt_max: 10.0,
            grow_after: 10,
            grow_factor: 1.2,
        }
    }
}

/// Relative slack when comparing monitor values; accepted steps may not
/// increase the monitor beyond this.
const MONITOR_SLACK: f64 = 1e-12;

struct Evaluation {
    /// Flow velocity `-M g`.
    velocity: Vec<f64>,
    /// Lyapunov monitor `g' M g`.
    monitor: f64,
    residual: f64,
}

fn evaluate(system: &System, target: &Target, s: &[f64]) -> Result<Evaluation, SolverError> {
    let assembly = system.assemble(s)?;
    let gradient: Vec<f64> = assembly
        .totals
        .iter()
        .zip(target.t_hat())
        .map(|(t, th)| t - th)
        .collect();
    let mg = assembly.jacobian.matvec_alloc(&gradient);
    let monitor: f64 = gradient.iter().zip(&mg).map(|(g, m)| g * m).sum();
    let residual = residual_inf(&assembly.totals, target.t_hat());
    Ok(Evaluation {
        velocity: mg.iter().map(|v| -v).collect(),
        monitor,
        residual,
    })
}

/// Flow velocity alone, for the inner Runge-Kutta stages.
fn velocity(system: &System, target: &Target, s: &[f64]) -> Result<Vec<f64>, SolverError> {
    let assembly = system.assemble(s)?;
    let gradient: Vec<f64> = assembly
        .totals
        .iter()
        .zip(target.t_hat())
        .map(|(t, th)| t - th)
        .collect();
    Ok(assembly
        .jacobian
        .matvec_alloc(&gradient)
        .into_iter()
        .map(|v| -v)
        .collect())
}

fn step(
    system: &System,
    target: &Target,
    s: &[f64],
    eval: &Evaluation,
    dt: f64,
    integrator: Integrator,
) -> Result<Vec<f64>, SolverError> {
    let n = s.len();
    match integrator {
        Integrator::Euler => Ok((0..n).map(|i| s[i] + dt * eval.velocity[i]).collect()),
        Integrator::Rk4 => {
            let k1 = &eval.velocity;
            let mid1: Vec<f64> = (0..n).map(|i| s[i] + 0.5 * dt * k1[i]).collect();
            let k2 = velocity(system, target, &mid1)?;
            let mid2: Vec<f64> = (0..n).map(|i| s[i] + 0.5 * dt * k2[i]).collect();
            let k3 = velocity(system, target, &mid2)?;
            let end: Vec<f64> = (0..n).map(|i| s[i] + dt * k3[i]).collect();
            let k4 = velocity(system, target, &end)?;
            Ok((0..n)
                .map(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect())
        }
    }
}

/// Integrate the flow until the residual sup-norm reaches `tol` or the time
/// budget runs out.
pub fn calabi_flow(
    system: &System,
    target: &Target,
    config: &CalabiConfig,
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

    let mut eval = evaluate(system, target, &s)?;
    let mut t = 0.0;
    let mut dt = config.dt_init;
    let mut accepted: u64 = 0;
    let mut consecutive: u32 = 0;
    let mut diverged = false;
    let mut trace = vec![TraceRow {
        step: 0,
        time: 0.0,
        residual_inf: eval.residual,
        energy_monitor: eval.monitor,
        dt,
    }];

    while eval.residual > config.tol && t < config.t_max && accepted < config.max_steps {
        let candidate = step(system, target, &s, &eval, dt, config.integrator)?;
        if candidate.iter().any(|v| v.abs() > DIVERGENCE_LIMIT) {
            diverged = true;
            break;
        }
        let cand_eval = evaluate(system, target, &candidate)?;
        if cand_eval.monitor <= eval.monitor * (1.0 + MONITOR_SLACK) {
            s = candidate;
            eval = cand_eval;
            t += dt;
            accepted += 1;
            consecutive += 1;
            trace.push(TraceRow {
                step: accepted,
                time: t,
                residual_inf: eval.residual,
                energy_monitor: eval.monitor,
                dt,
            });
            if consecutive >= config.grow_after {
                dt = (dt * config.grow_factor).min(config.dt_max);
                consecutive = 0;
            }
        } else {
            dt *= 0.5;
            consecutive = 0;
            if dt < config.dt_min {
                break;
            }
        }
    }

    system.finish(
        SolverKind::Calabi,
        s,
        target,
        config.tol,
        accepted,
        diverged,
        trace,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::FixtureSampler;
    use crate::solver::{newton_solve, NewtonConfig};

    #[test]
    fn fixed_point_converges_immediately() {
        let mut sampler = FixtureSampler::new(21);
        let p = sampler.annulus_problem(8);
        let system = System::new(&p.mesh, &p.boundary).unwrap();
        let t0 = system.interior_totals(&vec![0.0; system.interior_count()]);
        let target = Target::new(&p.mesh, t0).unwrap();
        let result = calabi_flow(&system, &target, &CalabiConfig::default()).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 0);
    }

    #[test]
    fn flow_agrees_with_newton() {
        let mut sampler = FixtureSampler::new(23);
        for _ in 0..3 {
            let p = sampler.annulus_problem(10);
            let system = System::new(&p.mesh, &p.boundary).unwrap();
            let newton = newton_solve(&system, &p.target, &NewtonConfig::default()).unwrap();
            let flow = calabi_flow(&system, &p.target, &CalabiConfig::default()).unwrap();
            assert!(flow.converged);
            for (a, b) in flow.s.iter().zip(&newton.s) {
                assert!((a - b).abs() < 1e-8, "flow {a} vs newton {b}");
            }
        }
    }

    #[test]
    fn rk4_agrees_with_euler() {
        let mut sampler = FixtureSampler::new(29);
        let p = sampler.annulus_problem(8);
        let system = System::new(&p.mesh, &p.boundary).unwrap();
        let euler = calabi_flow(&system, &p.target, &CalabiConfig::default()).unwrap();
        let rk4 = calabi_flow(
            &system,
            &p.target,
            &CalabiConfig {
                integrator: Integrator::Rk4,
                ..CalabiConfig::default()
            },
        )
        .unwrap();
        for (a, b) in euler.s.iter().zip(&rk4.s) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn monitor_never_increases_on_accepted_steps() {
        let mut sampler = FixtureSampler::new(31);
        let p = sampler.annulus_problem(12);
        let system = System::new(&p.mesh, &p.boundary).unwrap();
        let result = calabi_flow(&system, &p.target, &CalabiConfig::default()).unwrap();
        assert!(result.trace.len() > 2);
        for pair in result.trace.windows(2) {
            assert!(
                pair[1].energy_monitor <= pair[0].energy_monitor * (1.0 + 1e-12),
                "monitor rose from {} to {}",
                pair[0].energy_monitor,
                pair[1].energy_monitor
            );
        }
    }
}
