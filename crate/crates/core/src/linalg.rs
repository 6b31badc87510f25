//! Small numerical toolbox: symmetric sparse matrices, Cholesky, conjugate
//! gradients and quadrature rules.
//!
//! The curvature Jacobian is strictly diagonally dominant with positive
//! diagonal, hence symmetric positive definite; Cholesky never needs
//! pivoting and Jacobi-preconditioned CG converges without safeguards.

/// Symmetric sparse matrix in CSR layout storing both triangles.
///
/// The sparsity pattern is fixed at construction; assembly only writes
/// values. Rows are sorted by column.
#[derive(Clone, Debug)]
pub struct SymmetricCsr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymmetricCsr {
    /// Build the pattern from per-row column lists (diagonal added
    /// automatically), values zeroed.
    pub fn from_pattern(n: usize, rows: &[Vec<usize>]) -> Self {
        assert_eq!(rows.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for (i, row) in rows.iter().enumerate() {
            let mut entries: Vec<usize> = row.clone();
            entries.push(i);
            entries.sort_unstable();
            entries.dedup();
            cols.extend_from_slice(&entries);
            row_ptr.push(cols.len());
        }
        let vals = vec![0.0; cols.len()];
        SymmetricCsr {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn zero_values(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.cols[lo..hi].binary_search(&j).ok().map(|p| lo + p)
    }

    /// Accumulate into entry `(i, j)`; the pair must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let slot = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i},{j}) outside the assembled pattern"));
        self.vals[slot] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map(|s| self.vals[s]).unwrap_or(0.0)
    }

    /// Row iteration as (column, value) pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.cols[lo..hi]
            .iter()
            .zip(&self.vals[lo..hi])
            .map(|(&c, &v)| (c, v))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            *out = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Largest relative deviation from symmetry,
    /// `max |a_ij - a_ji| / max |a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let mut max_abs = 0.0f64;
        let mut max_dev = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                max_abs = max_abs.max(v.abs());
                if j > i {
                    max_dev = max_dev.max((v - self.get(j, i)).abs());
                }
            }
        }
        if max_abs == 0.0 {
            0.0
        } else {
            max_dev / max_abs
        }
    }

    /// Per-row dominance margins `|a_ii| - sum_{j != i} |a_ij|`.
    pub fn dominance_margins(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let mut diag = 0.0;
                let mut off = 0.0;
                for (j, v) in self.row(i) {
                    if j == i {
                        diag = v.abs();
                    } else {
                        off += v.abs();
                    }
                }
                diag - off
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                dense[i * self.n + j] = v;
            }
        }
        dense
    }
}

/// Dense Cholesky solve of an SPD system; `None` if a pivot is not positive.
pub fn cholesky_solve(n: usize, dense: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(dense.len(), n * n);
    let mut l = dense.to_vec();
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut v = l[i * n + j];
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / d;
        }
    }
    // forward then backward substitution
    let mut x = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= l[i * n + k] * x[k];
        }
        x[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= l[k * n + i] * x[k];
        }
        x[i] /= l[i * n + i];
    }
    Some(x)
}

/// Jacobi-preconditioned conjugate gradients; `None` when the relative
/// residual fails to reach `tol` within `max_iter` iterations.
pub fn conjugate_gradient(
    m: &SymmetricCsr,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Option<Vec<f64>> {
    let n = m.n();
    let diag = m.diagonal();
    let b_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Some(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        m.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return None;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= tol * b_norm {
            return Some(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    None
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    // map from [-1, 1] to [0, 1]
    for i in 0..n {
        nodes[i] = 0.5 * (nodes[i] + 1.0);
        weights[i] *= 0.5;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 52)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SymmetricCsr {
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut r = Vec::new();
                if i > 0 {
                    r.push(i - 1);
                }
                if i + 1 < n {
                    r.push(i + 1);
                }
                r
            })
            .collect();
        let mut m = SymmetricCsr::from_pattern(n, &rows);
        for i in 0..n {
            m.add(i, i, 2.5);
            if i > 0 {
                m.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.add(i, i + 1, -1.0);
            }
        }
        m
    }

    #[test]
    fn cholesky_and_cg_agree() {
        let n = 40;
        let m = laplacian_1d(n);
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let dense = cholesky_solve(n, &m.to_dense(), &rhs).unwrap();
        let iterative = conjugate_gradient(&m, &rhs, 1e-13, 10 * n).unwrap();
        for i in 0..n {
            assert!((dense[i] - iterative[i]).abs() < 1e-10);
        }
        let check = m.matvec_alloc(&dense);
        for i in 0..n {
            assert!((check[i] - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let dense = vec![1.0, 2.0, 2.0, 1.0]; // eigenvalues 3, -1
        assert!(cholesky_solve(2, &dense, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn dominance_and_symmetry_helpers() {
        let m = laplacian_1d(5);
        assert!(m.asymmetry() == 0.0);
        for margin in m.dominance_margins() {
            assert!(margin >= 0.5 - 1e-15);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre_unit(32);
        // degree-63 polynomial x^63 integrates exactly: 1/64
        let p: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(63)).sum();
        assert!((p - 1.0 / 64.0).abs() < 1e-15);
        let e: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.exp()).sum();
        assert!((e - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn adaptive_simpson_matches_known_integral() {
        let v = adaptive_simpson(&|t: f64| 1.0 / (1.0 + t * t), 0.0, 1.0, 1e-12);
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-11);
    }
}
