//! Poincare-disk embedding of a single face's packing.
//!
//! The dual circle is normalized to be centered at the origin with the first
//! tangent point on the positive x-axis. A Euclidean circle with center `c`
//! and radius `rho` inside the unit disk represents a generalized circle of
//! geodesic curvature
//!
//! ```text
//!   k = (1 - |c|^2 + rho^2) / (2 rho),
//! ```
//!
//! measured toward the side containing the origin (a diameter gives 0, an
//! origin-centered circle gives coth of its hyperbolic radius, an internally
//! tangent circle gives 1). A circle orthogonal to the dual circle of
//! Euclidean radius `R` whose crossing points subtend the angle `2 phi` at
//! the origin has center distance `R / cos phi`, radius `R tan phi` and
//! recovered curvature `(1 - R^2) / (2 R tan phi)`; the layout solves for
//! the tangent-point angles making the three recovered curvatures match the
//! prescribed ones.
//!
//! Arc lengths measured here by quadrature of the disk metric
//! `2 |dx| / (1 - |x|^2)` provide a geometric cross-check of the closed-form
//! kernel, independent of its derivation.

use std::f64::consts::PI;
use thiserror::Error;

use crate::geometry::{self, CircleKind, Curvature};
use crate::linalg::adaptive_simpson;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("layout did not converge: residual {residual:.3e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: u32 },
}

/// What a Euclidean circle in the disk stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiskCircleKind {
    Hypercycle,
    Horocycle,
    Circle,
    Dual,
}

impl From<CircleKind> for DiskCircleKind {
    fn from(kind: CircleKind) -> Self {
        match kind {
            CircleKind::Hypercycle => DiskCircleKind::Hypercycle,
            CircleKind::Horocycle => DiskCircleKind::Horocycle,
            CircleKind::Circle => DiskCircleKind::Circle,
        }
    }
}

/// Euclidean circle representing a generalized circle in the unit disk.
#[derive(Clone, Copy, Debug)]
pub struct DiskCircle {
    pub center: [f64; 2],
    pub radius: f64,
    pub kind: DiskCircleKind,
}

impl DiskCircle {
    /// Geodesic curvature recovered from the Euclidean data.
    pub fn recovered_curvature(&self) -> f64 {
        let d2 = self.center[0] * self.center[0] + self.center[1] * self.center[1];
        (1.0 - d2 + self.radius * self.radius) / (2.0 * self.radius)
    }
}

/// A laid-out face: dual circle at the origin, three vertex circles, three
/// tangent points on the dual circle.
#[derive(Clone, Debug)]
pub struct FaceLayout {
    pub curvatures: [f64; 3],
    pub dual: DiskCircle,
    pub circles: [DiskCircle; 3],
    /// Tangent point `i` joins circle `i` and circle `(i+1) % 3`.
    pub tangent_points: [[f64; 2]; 3],
    pub tangent_angles: [f64; 3],
}

const NEWTON_TOL: f64 = 1e-13;
const MAX_ITER: u32 = 200;
const RESIDUAL_LIMIT: f64 = 1e-9;

/// Angular spans of the three circles: circle `i` spans from tangent angle
/// `a_i` to `a_{i+1}` (with `a_0 = 0` and wrap-around at `2 pi`).
fn spans(theta: [f64; 2]) -> [f64; 3] {
    [theta[0], theta[1] - theta[0], 2.0 * PI - theta[1]]
}

/// Recovered curvature of the circle spanning half-angle `phi` on a dual
/// circle of Euclidean radius `r_dual`.
fn recovered(r_dual: f64, phi: f64) -> f64 {
    (1.0 - r_dual * r_dual) / (2.0 * r_dual * (phi).tan())
}

/// Embed one face in the Poincare disk by solving for the two free
/// tangent-point angles with a damped Newton iteration from the symmetric
/// (equal arcs) initial guess.
pub fn layout_face(k1: Curvature, k2: Curvature, k3: Curvature) -> Result<FaceLayout, LayoutError> {
    let k = [k1.get(), k2.get(), k3.get()];
    let k_f = geometry::dual_curvature_raw(k);
    // Euclidean radius of the dual circle: tanh(r_f / 2) with coth r_f = k_f
    let r_dual = k_f - (k_f * k_f - 1.0).sqrt();

    // unknowns: tangent angles a_1, a_2 (a_0 = 0 fixed); residuals are the
    // recovered-curvature mismatches of circles 0 and 1, each a function of
    // its own span only, so the Newton system is triangular
    let mut theta = [2.0 * PI / 3.0, 4.0 * PI / 3.0];
    let mut iterations = 0;
    let mut residual_norm = f64::INFINITY;
    while iterations < MAX_ITER {
        let sp = spans(theta);
        let r = [
            recovered(r_dual, sp[0] / 2.0) - k[0],
            recovered(r_dual, sp[1] / 2.0) - k[1],
        ];
        residual_norm = r[0].abs().max(r[1].abs());
        if residual_norm < NEWTON_TOL * (1.0 + k[0].abs().max(k[1].abs())) {
            break;
        }
        // d recovered / d phi = -(1 - R^2) / (2 R sin^2 phi)
        let x = (1.0 - r_dual * r_dual) / (2.0 * r_dual);
        let d0 = -x / (sp[0] / 2.0).sin().powi(2) * 0.5;
        let d1 = -x / (sp[1] / 2.0).sin().powi(2) * 0.5;
        // r0 depends on theta0 alone; r1 on (theta1 - theta0)
        let mut dt0 = -r[0] / d0;
        let mut dt1 = dt0 - r[1] / d1;
        // damping: keep 0 < theta0 < theta1 < 2 pi
        let mut scale = 1.0;
        loop {
            let t0 = theta[0] + scale * dt0;
            let t1 = theta[1] + scale * dt1;
            if t0 > 1e-9 && t1 - t0 > 1e-9 && t1 < 2.0 * PI - 1e-9 {
                break;
            }
            scale *= 0.5;
            if scale < 1e-12 {
                break;
            }
        }
        dt0 *= scale;
        dt1 *= scale;
        theta[0] += dt0;
        theta[1] += dt1;
        iterations += 1;
    }

    // consistency of the third circle certifies the dual-curvature relation
    let sp = spans(theta);
    let third = recovered(r_dual, sp[2] / 2.0) - k[2];
    let residual = residual_norm.max(third.abs() / (1.0 + k[2].abs()));
    // NaN-aware: a NaN residual must also fail
    if residual.is_nan() || residual >= RESIDUAL_LIMIT {
        return Err(LayoutError::NotConverged {
            residual,
            iterations,
        });
    }

    let tangent_angles = [0.0, theta[0], theta[1]];
    let tangent_points = std::array::from_fn(|i| {
        [
            r_dual * tangent_angles[i].cos(),
            r_dual * tangent_angles[i].sin(),
        ]
    });

    let circles = std::array::from_fn(|i| {
        let phi = sp[i] / 2.0;
        let mid = tangent_angles[i] + phi;
        let dist = r_dual / phi.cos();
        DiskCircle {
            center: [dist * mid.cos(), dist * mid.sin()],
            radius: r_dual * phi.tan(),
            kind: Curvature::new(k[i]).expect("validated above").kind().into(),
        }
    });

    Ok(FaceLayout {
        curvatures: k,
        dual: DiskCircle {
            center: [0.0, 0.0],
            radius: r_dual,
            kind: DiskCircleKind::Dual,
        },
        circles,
        tangent_points,
        tangent_angles,
    })
}

impl FaceLayout {
    /// Tangent points bounding the sub-arc of circle `slot`: the one shared
    /// with the previous circle and the one shared with the next.
    fn arc_endpoints(&self, slot: usize) -> ([f64; 2], [f64; 2]) {
        (
            self.tangent_points[slot],
            self.tangent_points[(slot + 1) % 3],
        )
    }

    /// Largest of the tangency and orthogonality defects; converged layouts
    /// stay below 1e-9.
    pub fn max_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            let c = &self.circles[i];
            // recovered curvature matches input
            worst = worst.max((c.recovered_curvature() - self.curvatures[i]).abs());
            // orthogonality with the dual circle
            let d2 = c.center[0] * c.center[0] + c.center[1] * c.center[1];
            let orth = d2 - c.radius * c.radius - self.dual.radius * self.dual.radius;
            worst = worst.max(orth.abs());
            // external tangency with the next circle at the shared point
            let j = (i + 1) % 3;
            let n = &self.circles[j];
            let dx = c.center[0] - n.center[0];
            let dy = c.center[1] - n.center[1];
            let gap = (dx * dx + dy * dy).sqrt() - c.radius - n.radius;
            worst = worst.max(gap.abs());
            // the shared tangent point lies on both circles
            let p = self.tangent_points[j];
            for circle in [c, n] {
                let px = p[0] - circle.center[0];
                let py = p[1] - circle.center[1];
                worst = worst.max(((px * px + py * py).sqrt() - circle.radius).abs());
            }
        }
        worst
    }
}

/// Hyperbolic length element along a circle of radius `rho` centered at `c`,
/// parametrized by center angle `t`.
fn metric_speed(c: [f64; 2], rho: f64, t: f64) -> f64 {
    let x = c[0] + rho * t.cos();
    let y = c[1] + rho * t.sin();
    2.0 * rho / (1.0 - x * x - y * y)
}

/// Hyperbolic length of the sub-arc of circle `slot` between its two tangent
/// points, measured by adaptive quadrature of the disk metric.
pub fn measure_subarc(layout: &FaceLayout, slot: usize) -> f64 {
    let circle = &layout.circles[slot];
    let (p_from, p_to) = layout.arc_endpoints(slot);
    let (t_from, t_to) = arc_interval_inside(circle, p_from, p_to);
    adaptive_simpson(
        &|t| metric_speed(circle.center, circle.radius, t),
        t_from,
        t_to,
        1e-10,
    )
    .abs()
}

/// Center-angle interval traversing the arc between the two points that
/// stays inside the dual circle (the side facing the origin).
fn arc_interval_inside(circle: &DiskCircle, from: [f64; 2], to: [f64; 2]) -> (f64, f64) {
    let a = (from[1] - circle.center[1]).atan2(from[0] - circle.center[0]);
    let b = (to[1] - circle.center[1]).atan2(to[0] - circle.center[0]);
    // candidate arc running counterclockwise from a
    let ccw = if b > a { b } else { b + 2.0 * PI };
    let mid_ccw = 0.5 * (a + ccw);
    let mid_cw = mid_ccw + PI;
    let radius_at = |t: f64| {
        let x = circle.center[0] + circle.radius * t.cos();
        let y = circle.center[1] + circle.radius * t.sin();
        (x * x + y * y).sqrt()
    };
    if radius_at(mid_ccw) <= radius_at(mid_cw) {
        (a, ccw)
    } else {
        (a, a - (2.0 * PI - (ccw - a)))
    }
}

/// Hyperbolic circumference of the dual circle, `2 pi sinh(r_f)`, by the
/// same quadrature; a calibration check for the metric integrand.
pub fn measure_dual_circumference(layout: &FaceLayout) -> f64 {
    adaptive_simpson(
        &|t| metric_speed([0.0, 0.0], layout.dual.radius, t),
        0.0,
        2.0 * PI,
        1e-10,
    )
}

/// Hyperbolic area of the region bounded by the three sub-arcs, by the
/// boundary integral of the primitive `2 r^2/(1 - r^2) dtheta` traversed
/// counterclockwise around the origin.
pub fn measure_region_area(layout: &FaceLayout) -> f64 {
    let mut area = 0.0;
    for slot in 0..3 {
        let circle = &layout.circles[slot];
        let (p_from, p_to) = layout.arc_endpoints(slot);
        let (t0, t1) = arc_interval_inside(circle, p_from, p_to);
        let c = circle.center;
        let rho = circle.radius;
        // f(r) theta'(t) with theta the polar angle about the origin:
        // theta' = rho (c . e(t) + rho) / r^2, so the integrand is
        // 2 rho (c . e(t) + rho) / (1 - r^2)
        area += adaptive_simpson(
            &|t: f64| {
                let ex = t.cos();
                let ey = t.sin();
                let x = c[0] + rho * ex;
                let y = c[1] + rho * ey;
                let r2 = x * x + y * y;
                2.0 * rho * (c[0] * ex + c[1] * ey + rho) / (1.0 - r2)
            },
            t0,
            t1,
            1e-10,
        );
    }
    // traversal above runs each arc from tangent point i to i+1, which goes
    // counterclockwise around the enclosed region
    area
}
