//! Self-check suite comparing the numerical pipeline with closed forms and
//! brute force.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{draw_block_with, draw_block_with_symbols, ChannelConfig};
use crate::constellation::Constellation;
use crate::detect::{exhaustive_detect, sphere_detect, tsa_detect, GramDecomposition, MetricMode, Pinning, RestartPolicy};
use crate::error::Result;
use crate::linalg::gram_normalized;
use crate::oracles::{
    brute_force_separation, count_nodes_within, expected_cholesky_diag_cm, expected_cholesky_diag_ncm,
    expected_decomposition, gram_entry_variance, lemma1_bound, lemma2_bound,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    Quick,
    Full,
}

/// One check: its name, verdict and the measured quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Run the suite. `fault` adds the given offset to R[1][1] of every factor
/// the closed-form checks compute, to show that they can fail.
pub fn verify(level: VerifyLevel, fault: Option<f64>) -> Result<VerifyReport> {
    let full = level == VerifyLevel::Full;
    let mut report = VerifyReport::default();
    report.checks.push(cholesky_cm(fault)?);
    report.checks.push(cholesky_ncm(if full { 2..=30 } else { 12..=12 }, fault)?);
    report.checks.push(exactness(if full { 8 } else { 1 })?);
    report.checks.push(gram_variance(if full { 100_000 } else { 20_000 }, full)?);
    report.checks.push(tsa_node_bound(if full { 60 } else { 15 })?);
    if full {
        report.checks.push(separation(&Constellation::bpsk(), 5, MetricMode::ConstantModulus)?);
        report.checks.push(separation(&Constellation::qpsk(), 5, MetricMode::ConstantModulus)?);
        report.checks.push(separation(&Constellation::qam16(), 3, MetricMode::Normalized)?);
    } else {
        report.checks.push(separation(&Constellation::qpsk(), 3, MetricMode::ConstantModulus)?);
    }
    Ok(report)
}

fn factor_diagonal(s: &[Complex64], fault: Option<f64>) -> Result<Vec<f64>> {
    let mut g = expected_decomposition(s, 0.5)?;
    if let Some(d) = fault {
        g.r_factor_mut().perturb_diagonal(0, d);
    }
    Ok(g.r_factor().diagonal())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Diagonal of the factor of ρ_E I − E[X^H X]/N against √(T − T/(T−i+1)).
pub fn cholesky_cm(fault: Option<f64>) -> Result<Check> {
    let c = Constellation::qpsk();
    let mut rng = ChaCha8Rng::seed_from_u64(0xc401);
    let mut worst = 0.0f64;
    for t in 2..=30 {
        let idx: Vec<usize> = (0..t).map(|_| rng.random_range(0..c.len())).collect();
        let d = factor_diagonal(&c.symbols(&idx), fault)?;
        worst = worst.max(max_abs_diff(&d, &expected_cholesky_diag_cm(t)));
    }
    Ok(Check {
        name: "cholesky_closed_form_cm",
        passed: worst <= 1e-8,
        detail: format!("max |L_ii - closed form| = {worst:.3e} over T = 2..30"),
    })
}

/// Same for 16-QAM against √(t(1 − |s_i|²/‖s_{i:T}‖²)), 20 sequences per T.
pub fn cholesky_ncm(ts: std::ops::RangeInclusive<usize>, fault: Option<f64>) -> Result<Check> {
    let c = Constellation::qam16();
    let mut rng = ChaCha8Rng::seed_from_u64(0xc402);
    let mut worst = 0.0f64;
    let (lo, hi) = (*ts.start(), *ts.end());
    for t in ts {
        for _ in 0..20 {
            let idx: Vec<usize> = (0..t).map(|_| rng.random_range(0..c.len())).collect();
            let s = c.symbols(&idx);
            let d = factor_diagonal(&s, fault)?;
            worst = worst.max(max_abs_diff(&d, &expected_cholesky_diag_ncm(&s)));
        }
    }
    Ok(Check {
        name: "cholesky_closed_form_ncm",
        passed: worst <= 1e-8,
        detail: format!("max |L_ii - closed form| = {worst:.3e} over T = {lo}..{hi}, 20 16-QAM sequences each"),
    })
}

/// Result of the detector-versus-exhaustive sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactnessSummary {
    pub blocks: usize,
    pub failures: usize,
    pub worst_rel: f64,
}

/// Sphere decoder and best-first search against the exhaustive oracle over
/// `reps` blocks per (constellation, T, SNR) cell.
pub fn exactness_sweep(reps: usize, seed: u64) -> Result<ExactnessSummary> {
    let cells: Vec<(Constellation, Vec<usize>)> = vec![
        (Constellation::bpsk(), (3..=7).collect()),
        (Constellation::qpsk(), (3..=7).collect()),
        (Constellation::qam16(), vec![3, 4]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = ExactnessSummary { blocks: 0, failures: 0, worst_rel: 0.0 };
    for (c, ts) in &cells {
        let mode = MetricMode::for_constellation(c);
        for &t in ts {
            for snr in [-10.0, 0.0, 10.0] {
                for _ in 0..reps {
                    let n = rng.random_range(2..=24);
                    let cfg = ChannelConfig::new(n, t, snr, c.clone(), 0);
                    let b = draw_block_with(&cfg, &mut rng)?;
                    let g = GramDecomposition::prepare(&b.x)?;
                    let p = Pinning::pilot(0);
                    let ex = exhaustive_detect(&g, c, &p, mode)?;
                    let sd = sphere_detect(&g, c, &p, mode, mode.default_radius_sq(c, t), RestartPolicy::Double)?;
                    let ts_ = tsa_detect(&g, c, &p, mode)?;
                    let energy: f64 = c.symbols(&ex.s_hat).iter().map(|z| z.norm_sqr()).sum();
                    // Roundoff floor of evaluating ρ‖s‖² − s^H G s.
                    let floor = 1e-12 * g.rho() * energy;
                    for s_hat in [&sd.s_hat, &ts_.s_hat] {
                        let v = g.objective(&c.symbols(s_hat), mode);
                        let diff = (v - ex.metric).abs();
                        let rel = diff / ex.metric.abs().max(floor);
                        sum.worst_rel = sum.worst_rel.max(rel);
                        if diff > 1e-9 * ex.metric.abs() + floor {
                            sum.failures += 1;
                        }
                    }
                    sum.blocks += 1;
                }
            }
        }
    }
    Ok(sum)
}

fn exactness(reps: usize) -> Result<Check> {
    let s = exactness_sweep(reps, 0xe1ac7)?;
    Ok(Check {
        name: "exact_ml_vs_exhaustive",
        passed: s.failures == 0,
        detail: format!("{} blocks, {} mismatches, worst relative gap {:.3e}", s.blocks, s.failures, s.worst_rel),
    })
}

/// Empirical variance of (X^H X)_{12}/N over `draws` QPSK blocks against
/// (1 + σ²)²/N. Returns (σ², N, empirical, formula) per case.
pub fn gram_variance_cases(draws: usize, sigmas: &[f64], ns: &[usize], seed: u64) -> Result<Vec<(f64, usize, f64, f64)>> {
    let c = Constellation::qpsk();
    let mut out = Vec::new();
    for &sigma in sigmas {
        for &n in ns {
            let snr = -10.0 * sigma.log10();
            let cfg = ChannelConfig::new(n, 2, snr, c.clone(), 0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 8) ^ sigma.to_bits());
            let idx = [1usize, 0];
            let s = c.symbols(&idx);
            let mean = s[0] * s[1].conj();
            let mut acc = 0.0;
            for _ in 0..draws {
                let b = draw_block_with_symbols(&cfg, &idx, &mut rng)?;
                let g = gram_normalized(&b.x)?;
                acc += (g.as_matrix()[(0, 1)] - mean).norm_sqr();
            }
            out.push((cfg.noise_variance(), n, acc / draws as f64, gram_entry_variance(cfg.noise_variance(), n)));
        }
    }
    Ok(out)
}

fn gram_variance(draws: usize, full: bool) -> Result<Check> {
    let (sigmas, ns): (&[f64], &[usize]) = if full { (&[0.25, 1.0, 4.0], &[10, 100]) } else { (&[1.0], &[10]) };
    let cases = gram_variance_cases(draws, sigmas, ns, 0x7a7)?;
    let worst = cases.iter().map(|&(_, _, e, f)| (e / f - 1.0).abs()).fold(0.0, f64::max);
    Ok(Check {
        name: "gram_entry_variance",
        passed: worst <= 0.05,
        detail: format!("{} cases x {draws} draws, worst relative deviation {:.2}%", cases.len(), 100.0 * worst),
    })
}

/// Best-first visits ≤ sphere visits and ≤ (|Ω| + 1)·l, where l counts the
/// nodes whose metric does not exceed the optimum.
pub fn tsa_node_bound_sweep(reps: usize, seed: u64) -> Result<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    let mut blocks = 0;
    for c in [Constellation::bpsk(), Constellation::qpsk(), Constellation::qam16()] {
        let mode = MetricMode::for_constellation(&c);
        for t in 3..=5 {
            for _ in 0..reps {
                let snr = rng.random_range(-10.0..10.0);
                let b = draw_block_with(&ChannelConfig::new(rng.random_range(2..=50), t, snr, c.clone(), 0), &mut rng)?;
                let g = GramDecomposition::prepare(&b.x)?;
                let p = Pinning::pilot(0);
                let ts = tsa_detect(&g, &c, &p, mode)?;
                let sd = sphere_detect(&g, &c, &p, mode, mode.default_radius_sq(&c, t), RestartPolicy::Double)?;
                let l = count_nodes_within(&g, &c, &p, mode, ts.metric)?;
                if ts.visited_nodes > sd.visited_nodes || ts.visited_nodes > (c.len() as u64 + 1) * l {
                    bad += 1;
                }
                blocks += 1;
            }
        }
    }
    Ok((blocks, bad))
}

fn tsa_node_bound(reps: usize) -> Result<Check> {
    let (blocks, bad) = tsa_node_bound_sweep(reps, 0x75a)?;
    Ok(Check {
        name: "tsa_node_bounds",
        passed: bad == 0,
        detail: format!("{blocks} blocks, {bad} violations"),
    })
}

fn separation(c: &Constellation, t: usize, mode: MetricMode) -> Result<Check> {
    let sep = brute_force_separation(c, t, 0, mode, 0.5)?;
    let bound = match mode {
        MetricMode::ConstantModulus => lemma1_bound(c, t)?,
        MetricMode::Normalized => lemma2_bound(),
    };
    Ok(Check {
        name: match mode {
            MetricMode::ConstantModulus => "separation_constant_modulus",
            MetricMode::Normalized => "separation_normalized",
        },
        passed: sep.min_wrong >= bound - 1e-9 && sep.max_true <= 1e-10,
        detail: format!(
            "{c} T={t}: min wrong metric {:.6} vs bound {bound:.6}, max true {:.1e}, {} pairs",
            sep.min_wrong, sep.max_true, sep.pairs
        ),
    })
}
