//! Simulated SIMO coherence blocks X = h·s^H + W.
//!
//! Symbols use the column convention: `s_true` holds s, and the row that was
//! actually transmitted is its conjugate transpose. Channel and noise entries
//! are circularly-symmetric complex Gaussian.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use rand::SeedableRng;

/// Parameters of one simulated link.
#[derive(Debug, Clone)]
pub struct ChannelConfig {
    pub n_rx: usize,
    pub t_coh: usize,
    pub snr_db: f64,
    pub constellation: Constellation,
    /// Index into the constellation of the symbol known at position T.
    pub pilot_index: usize,
    pub seed: u64,
}

impl ChannelConfig {
    /// Config with the pilot fixed to the first constellation point.
    pub fn new(n_rx: usize, t_coh: usize, snr_db: f64, constellation: Constellation, seed: u64) -> Self {
        Self { n_rx, t_coh, snr_db, constellation, pilot_index: 0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rx == 0 {
            return Err(Error::InvalidConfig("n_rx must be positive".into()));
        }
        if self.t_coh < 2 {
            return Err(Error::InvalidConfig("t_coh must be at least 2".into()));
        }
        if self.pilot_index >= self.constellation.len() {
            return Err(Error::InvalidConfig("pilot symbol is not a constellation point".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidConfig("snr_db must be finite".into()));
        }
        Ok(())
    }

    /// Per-entry noise variance σ_w² = e_avg · 10^(−SNR/10).
    pub fn noise_variance(&self) -> f64 {
        noise_variance(&self.constellation, self.snr_db)
    }

    /// Generator seeded from `seed` alone.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// σ_w² for a given constellation and per-antenna SNR in dB.
pub fn noise_variance(constellation: &Constellation, snr_db: f64) -> f64 {
    constellation.e_avg() * 10f64.powf(-snr_db / 10.0)
}

/// One received coherence block with its ground truth.
#[derive(Debug, Clone)]
pub struct ReceivedBlock {
    pub x: CMatrix,
    pub h_true: Vec<Complex64>,
    pub s_true: Vec<Complex64>,
    /// Constellation indices of `s_true`.
    pub s_index: Vec<usize>,
    pub sigma_w_sq: f64,
}

/// Counter-based generator for trial `trial` of grid point `grid`.
///
/// Each (grid, trial) pair gets its own ChaCha stream under the master seed,
/// so trials can be drawn in any order or on any thread.
pub fn trial_rng(master_seed: u64, grid: u32, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((grid as u64) << 32) | trial as u64);
    rng
}

/// CN(0, var) sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let sd = (0.5 * var).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * sd, im * sd)
}

/// Draw a block from the seed stored in `cfg`.
pub fn draw_block(cfg: &ChannelConfig) -> Result<ReceivedBlock> {
    draw_block_with(cfg, &mut cfg.rng())
}

/// Draw a block with uniform i.i.d. data symbols and the pilot at position T.
pub fn draw_block_with<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> Result<ReceivedBlock> {
    cfg.validate()?;
    let q = cfg.constellation.len();
    let mut s_index: Vec<usize> = (0..cfg.t_coh - 1).map(|_| rng.random_range(0..q)).collect();
    s_index.push(cfg.pilot_index);
    draw_block_with_symbols(cfg, &s_index, rng)
}

/// Draw channel and noise for a fixed symbol sequence (given as indices).
pub fn draw_block_with_symbols<R: Rng + ?Sized>(
    cfg: &ChannelConfig,
    s_index: &[usize],
    rng: &mut R,
) -> Result<ReceivedBlock> {
    if s_index.len() != cfg.t_coh {
        return Err(Error::DimensionMismatch(format!(
            "{} symbols for coherence length {}",
            s_index.len(),
            cfg.t_coh
        )));
    }
    let sigma_w_sq = cfg.noise_variance();
    let s_true = cfg.constellation.symbols(s_index);
    let h_true: Vec<Complex64> = (0..cfg.n_rx).map(|_| complex_gaussian(rng, 1.0)).collect();
    let mut x = CMatrix::outer(&h_true, &s_true);
    for i in 0..cfg.n_rx {
        for j in 0..cfg.t_coh {
            x[(i, j)] += complex_gaussian(rng, sigma_w_sq);
        }
    }
    Ok(ReceivedBlock { x, h_true, s_true, s_index: s_index.to_vec(), sigma_w_sq })
}

fn energy(s: &[Complex64]) -> f64 {
    s.iter().map(|z| z.norm_sqr()).sum()
}

/// ML channel estimate for a given sequence: ĥ = X s / ‖s‖².
pub fn ml_channel_estimate(x: &CMatrix, s: &[Complex64]) -> Result<Vec<Complex64>> {
    let e = energy(s);
    if e == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    Ok(x.mul_vec(s)?.into_iter().map(|z| z / e).collect())
}

/// Residual ‖X − ĥ s^H‖² evaluated as tr(XX^H) − ‖Xs‖²/‖s‖².
pub fn residual_metric(x: &CMatrix, s: &[Complex64]) -> Result<f64> {
    let e = energy(s);
    if e == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let xs = x.mul_vec(s)?;
    Ok(x.norm_sqr() - energy(&xs) / e)
}
