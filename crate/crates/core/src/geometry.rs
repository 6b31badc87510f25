//! Closed-form kernel for generalized circles in the hyperbolic plane.
//!
//! A generalized circle is a curve of constant geodesic curvature `k > 0`:
//! a hypercycle for `k < 1`, a horocycle for `k = 1`, a circle for `k > 1`.
//! Radius and curvature are related by
//!
//! ```text
//!   r(k) = arctanh k   (k < 1),    +inf   (k = 1),    arccoth k   (k > 1).
//! ```
//!
//! Three mutually externally tangent generalized circles with curvatures
//! `(k1, k2, k3)` admit a dual circle through their three tangent points and
//! orthogonal to all three, with curvature
//!
//! ```text
//!   k_f = sqrt(k1*k2 + k2*k3 + k1*k3 + 1) > 1.
//! ```
//!
//! The sub-arc of the circle at a vertex `v` cut out by the dual circle has
//! hyperbolic length
//!
//! ```text
//!   l(k_v, k_f) = 2/sqrt(k_v^2-1) * atan(sqrt(k_v^2-1)/k_f)    (k_v > 1)
//!               = 2/k_f                                        (k_v = 1)
//!               = 2/sqrt(1-k_v^2) * atanh(sqrt(1-k_v^2)/k_f)   (k_v < 1)
//! ```
//!
//! with total geodesic curvature `T = k_v * l` and, by Gauss-Bonnet, region
//! area `pi - T_1 - T_2 - T_3`. All three branches of `l` are one analytic
//! function of `u = k_v^2 - 1`,
//!
//! ```text
//!   l = (2/k_f) * sum_{n>=0} (-u/k_f^2)^n / (2n+1),
//! ```
//!
//! which is how `l` and its `k_v`-derivative are evaluated near the horocycle
//! transition, where the direct formulas cancel in `(k_v^2-1)^{3/2}`
//! denominators. The exact partial derivatives used everywhere downstream are
//!
//! ```text
//!   dl/dk_f = 2 / (1 - k_v^2 - k_f^2)
//!   dl/dk_v = +- 2 k_v / |u|^{3/2} * ( k_f sqrt(|u|)/(k_v^2+k_f^2-1) - atan-or-atanh(sqrt(|u|)/k_f) )
//! ```
//!
//! and are certified in the test suite against finite differences of `l`,
//! against the series, and against a quadrature reconstruction of `l` from the
//! derivative formulas alone.

use std::f64::consts::PI;
use thiserror::Error;

/// Relative size of `u/k_f^2` below which the power series replaces the
/// direct branch formulas.
const SERIES_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("geodesic curvature must be positive and finite, got {0}")]
    NonPositiveCurvature(f64),
    #[error("dual curvature {k_f} out of range for vertex curvature {k_v} (need k_f > max(1, sqrt(1-k_v^2)))")]
    DualCurvatureOutOfRange { k_v: f64, k_f: f64 },
    #[error("log-curvature must be finite, got {0}")]
    NonFiniteLogCurvature(f64),
}

/// The three species of constant-geodesic-curvature curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircleKind {
    /// `k < 1`; equidistant curve of a geodesic, infinite length.
    Hypercycle,
    /// `k = 1`; tangent to the ideal boundary, infinite radius.
    Horocycle,
    /// `k > 1`; an ordinary hyperbolic circle.
    Circle,
}

/// Positive, finite geodesic curvature of a generalized circle.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(k: f64) -> Result<Self, GeometryError> {
        if k > 0.0 && k.is_finite() {
            Ok(Curvature(k))
        } else {
            Err(GeometryError::NonPositiveCurvature(k))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn kind(self) -> CircleKind {
        if self.0 < 1.0 {
            CircleKind::Hypercycle
        } else if self.0 == 1.0 {
            CircleKind::Horocycle
        } else {
            CircleKind::Circle
        }
    }

    pub fn log(self) -> LogCurvature {
        LogCurvature(self.0.ln())
    }
}

/// Log-coordinate `s = ln k`; the solver's working variable.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogCurvature(f64);

impl LogCurvature {
    pub fn new(s: f64) -> Result<Self, GeometryError> {
        if s.is_finite() {
            Ok(LogCurvature(s))
        } else {
            Err(GeometryError::NonFiniteLogCurvature(s))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn exp(self) -> Curvature {
        Curvature(self.0.exp())
    }
}

/// Radius of the generalized circle with curvature `k`; `+inf` for horocycles.
pub fn radius(k: Curvature) -> f64 {
    let k = k.get();
    if k < 1.0 {
        k.atanh()
    } else if k == 1.0 {
        f64::INFINITY
    } else {
        // arccoth k
        (1.0 / k).atanh()
    }
}

/// Distance between the centers of two externally tangent generalized
/// circles, `r(k_i) + r(k_j)`; infinite as soon as one is a horocycle.
pub fn edge_length(k_i: Curvature, k_j: Curvature) -> f64 {
    radius(k_i) + radius(k_j)
}

/// Curvature of the dual circle of a face with vertex curvatures
/// `(k1, k2, k3)`: the positive root of `k_f^2 = k1 k2 + k2 k3 + k1 k3 + 1`.
pub fn dual_curvature(k1: Curvature, k2: Curvature, k3: Curvature) -> f64 {
    dual_curvature_raw([k1.get(), k2.get(), k3.get()])
}

#[inline]
pub(crate) fn dual_curvature_raw(k: [f64; 3]) -> f64 {
    (k[0] * k[1] + k[1] * k[2] + k[0] * k[2] + 1.0).sqrt()
}

fn check_dual_range(k_v: f64, k_f: f64) -> Result<(), GeometryError> {
    let lower = if k_v < 1.0 {
        (1.0 - k_v * k_v).sqrt().max(1.0)
    } else {
        1.0
    };
    if k_f > lower && k_f.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::DualCurvatureOutOfRange { k_v, k_f })
    }
}

/// Hyperbolic length of the sub-arc of the vertex circle inside the dual
/// circle. Continuous in `k_v` across the horocycle value `k_v = 1`.
pub fn arc_length(k_v: Curvature, k_f: f64) -> Result<f64, GeometryError> {
    check_dual_range(k_v.get(), k_f)?;
    Ok(arc_length_raw(k_v.get(), k_f))
}

/// Total geodesic curvature `T = k_v * l(k_v, k_f)` of the sub-arc; always in
/// `(0, pi)`.
pub fn total_curvature(k_v: Curvature, k_f: f64) -> Result<f64, GeometryError> {
    check_dual_range(k_v.get(), k_f)?;
    Ok(k_v.get() * arc_length_raw(k_v.get(), k_f))
}

/// `l = (2/k_f) * sum_{n>=0} (-w)^n / (2n+1)` with `w = u/k_f^2`.
fn series_arc_length(k_f: f64, w: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..64 {
        term *= -w;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    2.0 / k_f * sum
}

/// `dl/du = -(2/k_f^3) * sum_{m>=0} (m+1) (-w)^m / (2m+3)` with `w = u/k_f^2`.
fn series_arc_length_du(k_f: f64, w: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0 / 3.0;
    for m in 1..64 {
        term *= -w;
        let add = (m + 1) as f64 * term / (2 * m + 3) as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -2.0 / (k_f * k_f * k_f) * sum
}

pub(crate) fn arc_length_raw(k_v: f64, k_f: f64) -> f64 {
    let u = k_v * k_v - 1.0;
    let w = u / (k_f * k_f);
    if w.abs() < SERIES_THRESHOLD {
        series_arc_length(k_f, w)
    } else if u > 0.0 {
        let su = u.sqrt();
        2.0 / su * (su / k_f).atan()
    } else {
        let su = (-u).sqrt();
        2.0 / su * (su / k_f).atanh()
    }
}

/// Partial derivative of the sub-arc length with respect to the dual
/// curvature: `dl/dk_f = 2 / (1 - k_v^2 - k_f^2)`, always negative.
#[inline]
pub fn arc_length_dkf(k_v: f64, k_f: f64) -> f64 {
    2.0 / (1.0 - k_v * k_v - k_f * k_f)
}

/// Partial derivative of the sub-arc length with respect to the vertex
/// curvature, continuous across `k_v = 1` where it equals `-4/(3 k_f^3)`.
pub fn arc_length_dkv(k_v: f64, k_f: f64) -> f64 {
    let u = k_v * k_v - 1.0;
    let w = u / (k_f * k_f);
    if w.abs() < SERIES_THRESHOLD {
        2.0 * k_v * series_arc_length_du(k_f, w)
    } else if u > 0.0 {
        let su = u.sqrt();
        2.0 * k_v / (u * su) * (k_f * su / (k_v * k_v + k_f * k_f - 1.0) - (su / k_f).atan())
    } else {
        let nu = -u;
        let su = nu.sqrt();
        -2.0 * k_v / (nu * su) * (k_f * su / (k_v * k_v + k_f * k_f - 1.0) - (su / k_f).atanh())
    }
}

/// All per-face quantities derived from the three vertex curvatures.
///
/// `dt_ds[v][u]` is the derivative of the total curvature at vertex slot `v`
/// with respect to the log-curvature `s_u = ln k_u` at slot `u`. It is the
/// per-face Hessian block: symmetric, positive diagonal, negative
/// off-diagonal, positive row sums.
#[derive(Clone, Debug)]
pub struct FaceGeometry {
    /// Dual circle curvature, `> 1`.
    pub k_f: f64,
    /// Sub-arc lengths `l_v` per vertex slot.
    pub arc_lengths: [f64; 3],
    /// Total geodesic curvatures `T_v = k_v * l_v` per vertex slot.
    pub totals: [f64; 3],
    /// Hyperbolic area of the region bounded by the three sub-arcs,
    /// `pi - T_1 - T_2 - T_3`.
    pub area: f64,
    /// `dt_ds[v][u] = d T_v / d s_u`.
    pub dt_ds: [[f64; 3]; 3],
}

/// Evaluate the full face kernel at curvatures `(k1, k2, k3)`.
pub fn face_geometry(
    k1: Curvature,
    k2: Curvature,
    k3: Curvature,
) -> Result<FaceGeometry, GeometryError> {
    Ok(face_geometry_raw([k1.get(), k2.get(), k3.get()]))
}

pub(crate) fn face_geometry_raw(k: [f64; 3]) -> FaceGeometry {
    let k_f = dual_curvature_raw(k);
    let mut arc_lengths = [0.0; 3];
    let mut totals = [0.0; 3];
    let mut dl_dkv = [0.0; 3];
    let mut dl_dkf = [0.0; 3];
    for v in 0..3 {
        arc_lengths[v] = arc_length_raw(k[v], k_f);
        totals[v] = k[v] * arc_lengths[v];
        dl_dkv[v] = arc_length_dkv(k[v], k_f);
        dl_dkf[v] = arc_length_dkf(k[v], k_f);
    }
    let area = PI - totals[0] - totals[1] - totals[2];

    // dT_v/ds_u = k_u * [ delta_uv (l_v + k_v dl/dk_v) + k_v dl/dk_f * dk_f/dk_u ]
    // with dk_f/dk_u = (sum of the other two curvatures) / (2 k_f).
    let mut dt_ds = [[0.0; 3]; 3];
    for u in 0..3 {
        let dkf_dku = (k[(u + 1) % 3] + k[(u + 2) % 3]) / (2.0 * k_f);
        for v in 0..3 {
            let mut d = k[v] * dl_dkf[v] * dkf_dku;
            if u == v {
                d += arc_lengths[v] + k[v] * dl_dkv[v];
            }
            dt_ds[v][u] = k[u] * d;
        }
    }

    FaceGeometry {
        k_f,
        arc_lengths,
        totals,
        area,
        dt_ds,
    }
}
