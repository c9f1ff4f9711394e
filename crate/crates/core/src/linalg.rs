//! Small dense complex linear algebra.
//!
//! Everything downstream of the Gram product lives in T×T, with T at most a
//! few dozen, so plain row-major storage and textbook loops are enough.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Outer product `u v^H`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Complex64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * k).collect() }
    }

    /// Subtract `u v^H` in place.
    pub fn sub_outer(&mut self, u: &[Complex64], v: &[Complex64]) {
        for i in 0..self.rows {
            let ui = u[i];
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (x, vj) in row.iter_mut().zip(v) {
                *x -= ui * vj.conj();
            }
        }
    }

    /// Sum of squared magnitudes of all entries.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Solve A·X = B by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        let n = self.rows;
        if self.cols != n || b.rows != n {
            return Err(Error::DimensionMismatch(format!(
                "solve {}x{} against {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut a = self.clone();
        let mut x = b.clone();
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
                .unwrap_or(k);
            if a[(piv, k)].norm() <= 1e-14 * scale || scale == 0.0 {
                return Err(Error::Singular);
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                }
                for j in 0..x.cols {
                    x.data.swap(k * x.cols + j, piv * x.cols + j);
                }
            }
            let inv = a[(k, k)].inv();
            for i in k + 1..n {
                let f = a[(i, k)] * inv;
                if f == ZERO {
                    continue;
                }
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
                for j in 0..x.cols {
                    let v = x[(k, j)];
                    x[(i, j)] -= f * v;
                }
            }
        }
        for k in (0..n).rev() {
            let inv = a[(k, k)].inv();
            for j in 0..x.cols {
                let mut v = x[(k, j)];
                for i in k + 1..n {
                    v -= a[(k, i)] * x[(i, j)];
                }
                x[(k, j)] = v * inv;
            }
        }
        Ok(x)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square Hermitian matrix. Symmetry is enforced on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Symmetrize `m` as (m + m^H)/2; the diagonal becomes exactly real.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.rows != m.cols || m.rows == 0 {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square and nonempty, got {}x{}",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        let mut out = m;
        for i in 0..n {
            out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
            for j in i + 1..n {
                let avg = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        Ok(Self(out))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// Quadratic form v^H A v (real for Hermitian A).
    pub fn quadratic_form(&self, v: &[Complex64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let row = self.0.row(i);
            let av: Complex64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            acc += (v[i].conj() * av).re;
        }
        acc
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

/// Upper-triangular factor with a nonnegative real diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperTriangular(CMatrix);

impl UpperTriangular {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::DimensionMismatch("factor must be square".into()));
        }
        let n = m.rows;
        for i in 0..n {
            let d = m[(i, i)];
            if d.im != 0.0 || d.re < 0.0 {
                return Err(Error::DimensionMismatch(format!(
                    "diagonal entry {i} is not a nonnegative real"
                )));
            }
            for j in 0..i {
                if m[(i, j)] != ZERO {
                    return Err(Error::DimensionMismatch(format!("nonzero entry below diagonal at ({i},{j})")));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        self.0.row(i)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    /// R^H R.
    pub fn gram(&self) -> CMatrix {
        self.0.adjoint().matmul(&self.0).expect("square factor")
    }

    /// Perturb diagonal entry `i` by `delta`. Only meant for fault-injection checks.
    pub fn perturb_diagonal(&mut self, i: usize, delta: f64) {
        let v = (self.0[(i, i)].re + delta).max(0.0);
        self.0[(i, i)] = Complex64::new(v, 0.0);
    }
}

impl Index<(usize, usize)> for UpperTriangular {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

/// X^H X / N for an N×T sample matrix.
pub fn gram_normalized(x: &CMatrix) -> Result<HermitianMatrix> {
    let (n, t) = (x.rows, x.cols);
    if n == 0 || t == 0 {
        return Err(Error::DimensionMismatch(format!("empty sample matrix {n}x{t}")));
    }
    let mut g = CMatrix::zeros(t, t);
    // Accumulate the upper triangle row by row of X: G_ij += conj(x_ki) x_kj.
    for k in 0..n {
        let row = x.row(k);
        for i in 0..t {
            let a = row[i].conj();
            let dst = &mut g.data[i * t..(i + 1) * t];
            for j in i..t {
                dst[j] += a * row[j];
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for i in 0..t {
        g[(i, i)] = Complex64::new(g[(i, i)].re * inv_n, 0.0);
        for j in i + 1..t {
            let v = g[(i, j)] * inv_n;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(HermitianMatrix(g))
}

/// Largest eigenvalue of a Hermitian matrix.
///
/// Householder reduction to a real symmetric tridiagonal matrix, then Sturm
/// bisection on the top of the spectrum.
pub fn max_eigenvalue(h: &HermitianMatrix) -> Result<f64> {
    let (diag, off) = tridiagonalize(h);
    largest_tridiagonal_eigenvalue(&diag, &off)
}

/// Reduce to tridiagonal form; returns the real diagonal and the moduli of
/// the sub-diagonal (a diagonal unitary similarity makes those real).
fn tridiagonalize(h: &HermitianMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = h.dim();
    let mut a = h.0.clone();
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];

    for k in 0..n.saturating_sub(1) {
        let xnorm = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            off.push(0.0);
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;

        // v = x - alpha e1, normalized
        for i in 0..n {
            v[i] = ZERO;
        }
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            off.push(xnorm);
            continue;
        }
        for i in k + 1..n {
            v[i] /= vnorm;
        }

        // p = A v over the active block (rows/cols k..n)
        for i in k..n {
            p[i] = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum();
        }
        let kk: f64 = (k + 1..n).map(|i| (v[i].conj() * p[i]).re).sum();
        // w = p - K v ; A <- A - 2 v w^H - 2 w v^H
        for i in k..n {
            p[i] -= v[i] * kk;
        }
        for i in k..n {
            for j in k..n {
                let upd = v[i] * p[j].conj() + p[i] * v[j].conj();
                a[(i, j)] -= upd * 2.0;
            }
        }
        off.push(xnorm);
    }
    let diag = (0..n).map(|i| a[(i, i)].re).collect();
    (diag, off)
}

fn sturm_count_above(diag: &[f64], off: &[f64], x: f64) -> usize {
    // Number of eigenvalues strictly greater than x is n minus the number of
    // negative pivots of (T - xI); we count eigenvalues < x.
    let mut count_below = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count_below += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * (off[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count_below += 1;
        }
    }
    diag.len() - count_below
}

fn largest_tridiagonal_eigenvalue(diag: &[f64], off: &[f64]) -> Result<f64> {
    const MAX_ITER: usize = 2000;
    let n = diag.len();
    if n == 1 {
        return Ok(diag[0]);
    }
    // Gershgorin interval
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * scale || mid <= lo || mid >= hi {
            return Ok(hi);
        }
        if sturm_count_above(diag, off, mid) >= 1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::EigenNoConvergence(MAX_ITER))
}

/// rho·I − H.
pub fn shifted_matrix(h: &HermitianMatrix, rho: f64) -> HermitianMatrix {
    let n = h.dim();
    let mut m = h.0.scale(-1.0);
    for i in 0..n {
        m[(i, i)] = Complex64::new(rho - h.0[(i, i)].re, 0.0);
    }
    HermitianMatrix(m)
}

/// Outcome of [`cholesky_psd`]: the factor and the diagonal loading used.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub r: UpperTriangular,
    /// δ with R^H R = M + δI.
    pub shift: f64,
}

/// Cholesky factorization M + δI = R^H R of a positive-semidefinite matrix.
///
/// δ is the first of {0, jitter, 10·jitter, ...} (capped at 1e−6·trace) for
/// which no pivot drops below −jitter. Pivots smaller than `jitter` are
/// clamped to zero and the rest of their row is zeroed.
pub fn cholesky_psd(m: &HermitianMatrix, jitter: f64) -> Result<CholeskyFactor> {
    let cap = 1e-6 * m.trace().abs().max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    let mut last_err;
    loop {
        match cholesky_clamped(m, shift, jitter) {
            Ok(r) => return Ok(CholeskyFactor { r, shift }),
            Err(e) => last_err = e,
        }
        shift = if shift == 0.0 { jitter } else { shift * 10.0 };
        if shift > cap || jitter <= 0.0 {
            return Err(last_err);
        }
    }
}

fn cholesky_clamped(m: &HermitianMatrix, shift: f64, jitter: f64) -> Result<UpperTriangular> {
    let n = m.dim();
    let mut r = CMatrix::zeros(n, n);
    for i in 0..n {
        let mut d = m.0[(i, i)].re + shift;
        for k in 0..i {
            d -= r[(k, i)].norm_sqr();
        }
        if d < -jitter {
            return Err(Error::NotPositiveSemidefinite { row: i, pivot: d });
        }
        if d < jitter {
            // Clamped pivot: row stays zero (0/0 convention).
            continue;
        }
        let lii = d.sqrt();
        r[(i, i)] = Complex64::new(lii, 0.0);
        for j in i + 1..n {
            let mut s = m.0[(i, j)];
            for k in 0..i {
                s -= r[(k, i)].conj() * r[(k, j)];
            }
            r[(i, j)] = s / lii;
        }
    }
    Ok(UpperTriangular(r))
}

/// √(Σ|entry|²).
pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.norm_sqr().sqrt()
}
