//! Closed-form reference quantities for checking the numerical pipeline.
//!
//! Everything here assumes the channel statistics are known, which a real
//! receiver never has; these functions exist for tests and `verify` only.

use num_complex::Complex64;

use crate::constellation::Constellation;
use crate::detect::{normalized_partial_metrics, partial_metrics, GramDecomposition, MetricMode};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, gram_normalized, CMatrix, HermitianMatrix};

/// E[X^H X]/N for unit-variance channels: s s^H + σ² I.
pub fn expected_gram(s: &[Complex64], sigma_w_sq: f64) -> HermitianMatrix {
    let t = s.len();
    let m = CMatrix::from_fn(t, t, |i, j| {
        s[i] * s[j].conj() + if i == j { Complex64::new(sigma_w_sq, 0.0) } else { Complex64::new(0.0, 0.0) }
    });
    HermitianMatrix::from_matrix(m).expect("square by construction")
}

/// Largest eigenvalue of the expected Gram matrix: ‖s‖² + σ².
pub fn expected_rho(s: &[Complex64], sigma_w_sq: f64) -> f64 {
    s.iter().map(|z| z.norm_sqr()).sum::<f64>() + sigma_w_sq
}

/// Factor ρ_E I − E[X^H X]/N = t I − s s^H. Its last pivot is exactly zero,
/// so pivots below ~1e−10·t are clamped.
pub fn expected_decomposition(s: &[Complex64], sigma_w_sq: f64) -> Result<GramDecomposition> {
    let rho = expected_rho(s, sigma_w_sq);
    let t: f64 = s.iter().map(|z| z.norm_sqr()).sum();
    GramDecomposition::with_rho(expected_gram(s, sigma_w_sq), rho, 1e-10 * t.max(1.0))
}

/// Diagonal of R for unit-modulus s: L_ii = √(T − T/(T − i + 1)), i = 1..T.
pub fn expected_cholesky_diag_cm(t: usize) -> Vec<f64> {
    let tf = t as f64;
    (1..=t).map(|i| (tf - tf / (tf - i as f64 + 1.0)).max(0.0).sqrt()).collect()
}

/// Diagonal of R for general s: L_ii = √(t·(1 − |s_i|²/‖s_{i:T}‖²)).
pub fn expected_cholesky_diag_ncm(s: &[Complex64]) -> Vec<f64> {
    let total: f64 = s.iter().map(|z| z.norm_sqr()).sum();
    let mut tail = 0.0;
    let mut out = vec![0.0; s.len()];
    for i in (0..s.len()).rev() {
        tail += s[i].norm_sqr();
        out[i] = (total * (1.0 - s[i].norm_sqr() / tail)).max(0.0).sqrt();
    }
    out
}

/// Partial-metric floor for wrong sequences at their divergence layer,
/// constant-modulus case: T·D_min/2.
pub fn lemma1_bound(c: &Constellation, t: usize) -> Result<f64> {
    if !c.is_constant_modulus() {
        return Err(Error::NonConstantModulus);
    }
    Ok(t as f64 * c.d_min_sq() / 2.0)
}

/// Normalized-metric floor for 16-QAM: 4·(T/5)/(18T) = 2/45.
pub fn lemma2_bound() -> f64 {
    2.0 / 45.0
}

/// var((X^H X)_ij / N) = (1 + σ²)²/N for unit-modulus symbols.
pub fn gram_entry_variance(sigma_w_sq: f64, n: usize) -> f64 {
    (1.0 + sigma_w_sq).powi(2) / n as f64
}

/// ‖X^H X/N − E[X^H X]/N‖_F.
pub fn gram_deviation(x: &CMatrix, s: &[Complex64], sigma_w_sq: f64) -> Result<f64> {
    let g = gram_normalized(x)?;
    Ok(frobenius_norm(&g.as_matrix().sub(expected_gram(s, sigma_w_sq).as_matrix())?))
}

/// Outcome of a brute-force separation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    /// Smallest metric at the divergence layer over all (true, wrong) pairs.
    pub min_wrong: f64,
    /// Largest partial metric of a transmitted sequence at any layer.
    pub max_true: f64,
    pub pairs: u64,
}

fn odometer(q: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = q.pow(len as u32);
    (0..total).map(move |mut n| {
        (0..len)
            .map(|_| {
                let d = n % q;
                n /= q;
                d
            })
            .collect()
    })
}

/// Under the expected Gram matrix of every transmitted s (last symbol pinned
/// to `pilot_index`), enumerate every wrong sequence with the same pilot and
/// record its metric at the highest position where it differs from s.
pub fn brute_force_separation(
    c: &Constellation,
    t: usize,
    pilot_index: usize,
    mode: MetricMode,
    sigma_w_sq: f64,
) -> Result<Separation> {
    let q = c.len();
    let total = (q as u128).saturating_pow(2 * (t as u32 - 1));
    if total > 1 << 26 {
        return Err(Error::SearchSpaceTooLarge(total));
    }
    let metrics = |r: &crate::linalg::UpperTriangular, s: &[Complex64]| match mode {
        MetricMode::ConstantModulus => partial_metrics(r, s),
        MetricMode::Normalized => normalized_partial_metrics(r, s, c.e_max()),
    };
    let mut sep = Separation { min_wrong: f64::INFINITY, max_true: 0.0, pairs: 0 };
    for mut truth in odometer(q, t - 1) {
        truth.push(pilot_index);
        let s = c.symbols(&truth);
        let g = expected_decomposition(&s, sigma_w_sq)?;
        let r = g.r_factor();
        for v in metrics(r, &s) {
            sep.max_true = sep.max_true.max(v);
        }
        for mut wrong in odometer(q, t - 1) {
            wrong.push(pilot_index);
            let Some(div) = (0..t).rev().find(|&p| wrong[p] != truth[p]) else {
                continue;
            };
            let m = metrics(r, &c.symbols(&wrong));
            sep.min_wrong = sep.min_wrong.min(m[div]);
            sep.pairs += 1;
        }
    }
    Ok(sep)
}

/// Number of tree nodes (partial sequences consistent with `pinning`, the
/// pinned ones included) whose search key does not exceed `bound`.
///
/// Keys never decrease from parent to child, so subtrees above the bound are
/// skipped without changing the count.
pub fn count_nodes_within(
    g: &GramDecomposition,
    c: &Constellation,
    pinning: &crate::detect::Pinning,
    mode: MetricMode,
    bound: f64,
) -> Result<u64> {
    let tree = crate::detect::tree::SearchTree::new(g, c, pinning, mode)?;
    let t = tree.t;
    let mut s = vec![Complex64::new(0.0, 0.0); t];
    fn walk(
        tree: &crate::detect::tree::SearchTree<'_>,
        pos: usize,
        metric: f64,
        energy: f64,
        s: &mut [Complex64],
        bound: f64,
    ) -> u64 {
        let base = tree.row_base(pos, s);
        let mut count = 0;
        for sym in tree.candidates(pos) {
            let m = tree.child_metric(pos, base, metric, sym);
            let e = energy + tree.energies[sym];
            if tree.search_key(pos, m, e) > bound {
                continue;
            }
            count += 1;
            if pos > 0 {
                s[pos] = tree.points[sym];
                count += walk(tree, pos - 1, m, e, s, bound);
            }
        }
        count
    }
    Ok(walk(&tree, t - 1, 0.0, 0.0, &mut s, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_eigenvalue;

    #[test]
    fn cm_diagonal_examples() {
        let d = expected_cholesky_diag_cm(4);
        let want = [3f64.sqrt(), (8.0f64 / 3.0).sqrt(), 2f64.sqrt(), 0.0];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        for t in 2..30 {
            let d = expected_cholesky_diag_cm(t);
            assert_eq!(d[t - 1], 0.0);
            let floor = (t as f64 / 2.0).sqrt();
            assert!(d[..t - 1].iter().all(|&v| v >= floor - 1e-12));
            assert!((d[t - 2] - floor).abs() < 1e-12);
        }
    }

    #[test]
    fn ncm_diagonal_reduces_to_cm() {
        let c = Constellation::qpsk();
        let s = c.symbols(&[1, 2, 3, 0, 0]);
        let a = expected_cholesky_diag_ncm(&s);
        let b = expected_cholesky_diag_cm(5);
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn expected_gram_spectrum() {
        let c = Constellation::qam16();
        let s = c.symbols(&[3, 7, 11, 0]);
        let g = expected_gram(&s, 0.3);
        let lam = max_eigenvalue(&g).unwrap();
        assert!((lam - expected_rho(&s, 0.3)).abs() < 1e-9 * lam);
        assert!((g.as_matrix()[(1, 1)].re - s[1].norm_sqr() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn small_bounds() {
        assert!((lemma1_bound(&Constellation::qpsk(), 20).unwrap() - 20.0).abs() < 1e-12);
        assert!(lemma1_bound(&Constellation::qam16(), 3).is_err());
        assert!((gram_entry_variance(1.0, 100) - 0.04).abs() < 1e-15);
        assert_eq!(gram_entry_variance(0.0, 1), 1.0);
        assert!((lemma2_bound() - Constellation::qam16().ncm_separation_bound()).abs() < 1e-15);
    }

    #[test]
    fn bpsk_separation_t5() {
        let c = Constellation::bpsk();
        let sep = brute_force_separation(&c, 5, 0, MetricMode::ConstantModulus, 0.5).unwrap();
        assert!(sep.min_wrong >= lemma1_bound(&c, 5).unwrap() - 1e-9);
        assert!(sep.max_true <= 1e-10);
        assert_eq!(sep.pairs, 16 * 15);
    }
}
