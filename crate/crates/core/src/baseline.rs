//! Pilot-based LS/MMSE channel estimation with coherent detection, and the
//! data-aided iterative refinement of both.
//!
//! Under the column convention X = h·s^H + W, column k is h·conj(s_k) plus
//! noise, so every estimator and detector here works with conjugates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Upper bound on `BaselineConfig::iterations`.
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Ls,
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineConfig {
    pub estimator: Estimator,
    /// Data-aided refinement rounds; 0 means pilot-only.
    pub iterations: usize,
}

impl BaselineConfig {
    pub fn new(estimator: Estimator, iterations: usize) -> Self {
        Self { estimator, iterations }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations > MAX_ITERATIONS {
            return Err(Error::InvalidConfig(format!(
                "iterations {} exceeds {MAX_ITERATIONS}",
                self.iterations
            )));
        }
        Ok(())
    }
}

/// Result of a baseline detector.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub s_hat: Vec<usize>,
    pub h_hat: Vec<Complex64>,
    /// Refinement rounds actually run before a fixed point was reached.
    pub iterations_run: usize,
}

/// Channel estimate from the pilot column x_T.
///
/// LS: x_T·p/|p|². MMSE with a CN(0, 1) prior: x_T·p/(|p|² + σ²).
pub fn pilot_estimate(
    x_pilot: &[Complex64],
    pilot: Complex64,
    sigma_w_sq: f64,
    estimator: Estimator,
) -> Result<Vec<Complex64>> {
    let e = pilot.norm_sqr();
    if e == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let denom = match estimator {
        Estimator::Ls => e,
        Estimator::Mmse => e + sigma_w_sq,
    };
    Ok(x_pilot.iter().map(|z| z * pilot / denom).collect())
}

/// Matched-filter each column with ĥ and quantize; position T is forced to
/// the pilot.
pub fn coherent_detect(
    x: &CMatrix,
    h_hat: &[Complex64],
    constellation: &Constellation,
    pilot_index: usize,
) -> Result<Vec<usize>> {
    if h_hat.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "channel estimate of length {} for {} antennas",
            h_hat.len(),
            x.rows()
        )));
    }
    let hh: f64 = h_hat.iter().map(|z| z.norm_sqr()).sum();
    if hh == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let t = x.cols();
    let mut y = vec![Complex64::new(0.0, 0.0); t];
    for i in 0..x.rows() {
        let hc = h_hat[i].conj();
        for (yk, xik) in y.iter_mut().zip(x.row(i)) {
            *yk += hc * xik;
        }
    }
    let mut s: Vec<usize> = y.iter().map(|yk| constellation.nearest((yk / hh).conj())).collect();
    s[t - 1] = pilot_index;
    Ok(s)
}

/// Data-aided channel estimate X ŝ/‖ŝ‖² (LS) or X ŝ/(‖ŝ‖² + σ²) (MMSE).
pub fn data_aided_estimate(x: &CMatrix, s: &[Complex64], sigma_w_sq: f64, estimator: Estimator) -> Result<Vec<Complex64>> {
    let e: f64 = s.iter().map(|z| z.norm_sqr()).sum();
    let denom = match estimator {
        Estimator::Ls => e,
        Estimator::Mmse => e + sigma_w_sq,
    };
    if denom == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    Ok(x.mul_vec(s)?.into_iter().map(|z| z / denom).collect())
}

/// Pilot estimate + coherent detection, then up to `cfg.iterations` rounds of
/// re-estimating the channel from the detected block and detecting again.
/// Stops early once a round reproduces the previous sequence.
pub fn iterative_detect(
    x: &CMatrix,
    sigma_w_sq: f64,
    cfg: BaselineConfig,
    constellation: &Constellation,
    pilot_index: usize,
) -> Result<BaselineOutcome> {
    cfg.validate()?;
    let t = x.cols();
    if t < 2 {
        return Err(Error::DimensionMismatch("coherence length must be at least 2".into()));
    }
    let pilot = constellation.point(pilot_index);
    let mut h = pilot_estimate(&x.column(t - 1), pilot, sigma_w_sq, cfg.estimator)?;
    let mut s = coherent_detect(x, &h, constellation, pilot_index)?;
    let mut rounds = 0;
    while rounds < cfg.iterations {
        rounds += 1;
        h = data_aided_estimate(x, &constellation.symbols(&s), sigma_w_sq, cfg.estimator)?;
        let next = coherent_detect(x, &h, constellation, pilot_index)?;
        if next == s {
            break;
        }
        s = next;
    }
    Ok(BaselineOutcome { s_hat: s, h_hat: h, iterations_run: rounds })
}
