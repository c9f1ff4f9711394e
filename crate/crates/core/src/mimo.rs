//! Multi-user uplink built around the single-user joint ML detector.
//!
//! M users share the block: X = Σ_j h_j·s_j^H + W. The first M positions of
//! every user's sequence carry orthogonal (Hadamard) training symbols. The
//! ML-augmented receiver starts from linear MMSE estimates and then, for each
//! user in turn, cancels the other users' reconstructed signals and runs the
//! SIMO joint detector with that user's training symbols pinned.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{complex_gaussian, noise_variance};
use crate::constellation::Constellation;
use crate::detect::{tsa_detect, DetectionOutcome, GramDecomposition, MetricMode, Pinning};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Default number of cancellation/re-estimation rounds.
pub const DEFAULT_ROUNDS: usize = 10;

/// Multi-user link parameters.
#[derive(Debug, Clone)]
pub struct MimoConfig {
    pub n_rx: usize,
    pub t_coh: usize,
    pub m_users: usize,
    pub snr_db: f64,
    pub constellation: Constellation,
    /// Base training symbol; user j sends Hadamard row j times this point.
    pub pilot_index: usize,
}

impl MimoConfig {
    pub fn new(n_rx: usize, t_coh: usize, m_users: usize, snr_db: f64, constellation: Constellation) -> Self {
        Self { n_rx, t_coh, m_users, snr_db, constellation, pilot_index: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rx == 0 {
            return Err(Error::InvalidConfig("n_rx must be positive".into()));
        }
        if self.m_users == 0 || !self.m_users.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "m_users must be a power of two, got {}",
                self.m_users
            )));
        }
        if self.t_coh <= self.m_users {
            return Err(Error::InvalidConfig("t_coh must exceed m_users".into()));
        }
        if self.pilot_index >= self.constellation.len() {
            return Err(Error::InvalidConfig("pilot symbol is not a constellation point".into()));
        }
        if self.m_users > 1 && self.constellation.negation_of(self.pilot_index).is_none() {
            return Err(Error::InvalidConfig("Hadamard training needs a constellation closed under negation".into()));
        }
        Ok(())
    }
}

/// One received multi-user block with its ground truth.
#[derive(Debug, Clone)]
pub struct MimoBlock {
    pub x: CMatrix,
    pub m_users: usize,
    /// Transmitted training block (M×M, row j is user j): P·P^H = M·|p|²·I.
    pub pilots: CMatrix,
    /// Constellation indices, one length-T sequence per user.
    pub s_index: Vec<Vec<usize>>,
    pub h_true: CMatrix,
    pub sigma_w_sq: f64,
}

impl MimoBlock {
    pub fn t_coh(&self) -> usize {
        self.x.cols()
    }

    /// Symbol errors over the data positions of all users.
    pub fn symbol_errors(&self, s_hat: &[Vec<usize>]) -> usize {
        let m = self.m_users;
        self.s_index
            .iter()
            .zip(s_hat)
            .map(|(a, b)| a[m..].iter().zip(&b[m..]).filter(|(x, y)| x != y).count())
            .sum()
    }
}

/// Sylvester Hadamard matrix of order `m` (a power of two), entries ±1.
pub fn hadamard(m: usize) -> Vec<Vec<i8>> {
    let mut h = vec![vec![1i8]];
    while h.len() < m {
        let n = h.len();
        let mut next = vec![vec![0i8; 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = h[i][j];
                next[i][j + n] = h[i][j];
                next[i + n][j] = h[i][j];
                next[i + n][j + n] = -h[i][j];
            }
        }
        h = next;
    }
    h
}

/// Training symbol indices: `out[j][k]` is user j's symbol at position k < M.
pub fn training_indices(c: &Constellation, pilot_index: usize, m: usize) -> Result<Vec<Vec<usize>>> {
    let neg = if m > 1 {
        c.negation_of(pilot_index)
            .ok_or_else(|| Error::InvalidConfig("constellation is not closed under negation".into()))?
    } else {
        pilot_index
    };
    Ok(hadamard(m)
        .into_iter()
        .map(|row| row.into_iter().map(|v| if v > 0 { pilot_index } else { neg }).collect())
        .collect())
}

/// Transmitted matrix S^H (M×T) for per-user index sequences.
fn transmitted(c: &Constellation, s_index: &[Vec<usize>]) -> CMatrix {
    let t = s_index[0].len();
    CMatrix::from_fn(s_index.len(), t, |j, k| c.point(s_index[j][k]).conj())
}

/// Draw a block: CN(0,1) channels, uniform data, Hadamard training.
pub fn draw_mimo_block<R: Rng + ?Sized>(cfg: &MimoConfig, rng: &mut R) -> Result<MimoBlock> {
    cfg.validate()?;
    let (n, t, m) = (cfg.n_rx, cfg.t_coh, cfg.m_users);
    let c = &cfg.constellation;
    let q = c.len();
    let train = training_indices(c, cfg.pilot_index, m)?;
    let s_index: Vec<Vec<usize>> = train
        .into_iter()
        .map(|mut s| {
            s.extend((m..t).map(|_| rng.random_range(0..q)));
            s
        })
        .collect();
    let sigma_w_sq = noise_variance(c, cfg.snr_db);
    let h_true = CMatrix::from_fn(n, m, |_, _| complex_gaussian(rng, 1.0));
    let sh = transmitted(c, &s_index);
    let mut x = h_true.matmul(&sh)?;
    for i in 0..n {
        for k in 0..t {
            x[(i, k)] += complex_gaussian(rng, sigma_w_sq);
        }
    }
    let pilots = CMatrix::from_fn(m, m, |j, k| sh[(j, k)]);
    Ok(MimoBlock { x, m_users: m, pilots, s_index, h_true, sigma_w_sq })
}

/// Linear MMSE channel estimate from columns `0..cols` of X and the matching
/// transmitted symbols A (M×cols): Ĥ = X A^H (A A^H + σ²I)⁻¹.
///
/// If the system is singular the loading is doubled until it is not.
pub fn mmse_channel_estimate(x: &CMatrix, a: &CMatrix, sigma_w_sq: f64) -> Result<CMatrix> {
    let (m, cols) = (a.rows(), a.cols());
    let xs = CMatrix::from_fn(x.rows(), cols, |i, k| x[(i, k)]);
    let ah = a.adjoint();
    let aah = a.matmul(&ah)?;
    // Ĥ^H = (A A^H + σ²I)⁻¹ (X A^H)^H
    let rhs = xs.matmul(&ah)?.adjoint();
    let mut load = sigma_w_sq;
    for _ in 0..60 {
        let mut g = aah.clone();
        for j in 0..m {
            g[(j, j)] += load;
        }
        match g.solve(&rhs) {
            Ok(y) => return Ok(y.adjoint()),
            Err(Error::Singular) => load = if load > 0.0 { 2.0 * load } else { 1e-12 * (1.0 + aah.norm_sqr().sqrt()) },
            Err(e) => return Err(e),
        }
    }
    Err(Error::Singular)
}

/// Linear MMSE detection of every data column (positions M..T); training
/// positions are copied from the known pilots.
pub fn mmse_data_detect(block: &MimoBlock, h_hat: &CMatrix, c: &Constellation, train: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let m = block.m_users;
    let t = block.t_coh();
    let hh = h_hat.adjoint();
    let mut g = hh.matmul(h_hat)?;
    for j in 0..m {
        g[(j, j)] += block.sigma_w_sq / c.e_avg();
    }
    let w = match g.solve(&hh) {
        Ok(w) => w,
        Err(Error::Singular) => {
            for j in 0..m {
                g[(j, j)] += block.sigma_w_sq.max(1e-12);
            }
            g.solve(&hh)?
        }
        Err(e) => return Err(e),
    };
    let z = w.matmul(&block.x)?;
    Ok((0..m)
        .map(|j| {
            let mut s = train[j].clone();
            s.extend((m..t).map(|k| c.nearest(z[(j, k)].conj())));
            s
        })
        .collect())
}

/// Result of a multi-user detector.
#[derive(Debug, Clone)]
pub struct MimoOutcome {
    pub s_hat: Vec<Vec<usize>>,
    pub h_hat: CMatrix,
    /// Per-user outcomes of the last ML stage (empty for the linear receivers).
    pub per_user: Vec<DetectionOutcome>,
    pub rounds_run: usize,
}

impl MimoOutcome {
    pub fn visited_nodes(&self) -> u64 {
        self.per_user.iter().map(|o| o.visited_nodes).sum()
    }
}

/// One-shot receiver: pilot MMSE channel estimate, MMSE detection.
pub fn mimo_mmse(block: &MimoBlock, c: &Constellation, pilot_index: usize) -> Result<MimoOutcome> {
    let train = training_indices(c, pilot_index, block.m_users)?;
    let h = mmse_channel_estimate(&block.x, &block.pilots, block.sigma_w_sq)?;
    let s = mmse_data_detect(block, &h, c, &train)?;
    Ok(MimoOutcome { s_hat: s, h_hat: h, per_user: Vec::new(), rounds_run: 0 })
}

/// MMSE receiver that re-estimates the channel from training plus detected
/// data and detects again, up to `iterations` times.
pub fn mimo_mmse_iter(block: &MimoBlock, c: &Constellation, pilot_index: usize, iterations: usize) -> Result<MimoOutcome> {
    let train = training_indices(c, pilot_index, block.m_users)?;
    let mut out = mimo_mmse(block, c, pilot_index)?;
    for _ in 0..iterations {
        out.rounds_run += 1;
        out.h_hat = mmse_channel_estimate(&block.x, &transmitted(c, &out.s_hat), block.sigma_w_sq)?;
        let next = mmse_data_detect(block, &out.h_hat, c, &train)?;
        if next == out.s_hat {
            break;
        }
        out.s_hat = next;
    }
    Ok(out)
}

/// ML-augmented receiver.
///
/// After the MMSE initialization, each round visits users in order: user j's
/// interference-cancelled block X − Σ_{i≠j} ĥ_i ŝ_i^H is handed to the SIMO
/// best-first detector with the training positions pinned, and (ĥ_j, ŝ_j) are
/// replaced by its output. The round ends with an MMSE channel refresh from
/// all detected data. Stops early when a round leaves every sequence unchanged.
pub fn mimo_detect(block: &MimoBlock, c: &Constellation, pilot_index: usize, rounds: usize) -> Result<MimoOutcome> {
    if rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be at least 1".into()));
    }
    let m = block.m_users;
    let t = block.t_coh();
    let n = block.x.rows();
    let train = training_indices(c, pilot_index, m)?;
    let mode = MetricMode::for_constellation(c);

    let init = mimo_mmse(block, c, pilot_index)?;
    let mut s_hat = init.s_hat;
    let mut h_hat = mmse_channel_estimate(&block.x, &transmitted(c, &s_hat), block.sigma_w_sq)?;
    let mut per_user = Vec::with_capacity(m);
    let mut rounds_run = 0;

    // Permutation moving the training columns to the end.
    let order: Vec<usize> = (m..t).chain(0..m).collect();

    for _ in 0..rounds {
        rounds_run += 1;
        per_user.clear();
        let before = s_hat.clone();
        for j in 0..m {
            let mut xbar = CMatrix::from_fn(n, t, |i, k| block.x[(i, order[k])]);
            for u in (0..m).filter(|&u| u != j) {
                let h_u = h_hat.column(u);
                let s_u: Vec<Complex64> = order.iter().map(|&k| c.point(s_hat[u][k])).collect();
                xbar.sub_outer(&h_u, &s_u);
            }
            let g = GramDecomposition::prepare(&xbar)?;
            let out = tsa_detect(&g, c, &Pinning::trailing(train[j].clone()), mode)?;
            let mut s = vec![0; t];
            for (k, &pos) in order.iter().enumerate() {
                s[pos] = out.s_hat[k];
            }
            s_hat[j] = s;
            h_hat.set_column(j, &out.h_hat);
            per_user.push(out);
        }
        h_hat = mmse_channel_estimate(&block.x, &transmitted(c, &s_hat), block.sigma_w_sq)?;
        if s_hat == before {
            break;
        }
    }
    Ok(MimoOutcome { s_hat, h_hat, per_user, rounds_run })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{sphere_detect_cm, RestartPolicy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hadamard_rows_are_orthogonal() {
        let c = Constellation::qpsk();
        for m in [1, 2, 4, 8] {
            let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
            let b = draw_mimo_block(&MimoConfig::new(4, m + 3, m, 10.0, c.clone()), &mut rng).unwrap();
            let pph = b.pilots.matmul(&b.pilots.adjoint()).unwrap();
            for i in 0..m {
                for j in 0..m {
                    let want = if i == j { m as f64 } else { 0.0 };
                    assert!((pph[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }
        assert!(MimoConfig::new(4, 8, 3, 0.0, c.clone()).validate().is_err());
        assert!(MimoConfig::new(4, 4, 4, 0.0, c).validate().is_err());
    }

    #[test]
    fn noiseless_is_exact() {
        let c = Constellation::qpsk();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = draw_mimo_block(&MimoConfig::new(32, 12, 4, 300.0, c.clone()), &mut rng).unwrap();
        let h = mmse_channel_estimate(&b.x, &b.pilots, b.sigma_w_sq).unwrap();
        assert!((h.sub(&b.h_true).unwrap()).norm_sqr() < 1e-20);
        let out = mimo_detect(&b, &c, 0, DEFAULT_ROUNDS).unwrap();
        assert_eq!(out.s_hat, b.s_index);
        assert_eq!(mimo_mmse(&b, &c, 0).unwrap().s_hat, b.s_index);
    }

    #[test]
    fn single_user_reduces_to_simo() {
        let c = Constellation::qpsk();
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = draw_mimo_block(&MimoConfig::new(16, 8, 1, 0.0, c.clone()), &mut rng).unwrap();
            let out = mimo_detect(&b, &c, 0, 1).unwrap();
            let order: Vec<usize> = (1..8).chain([0]).collect();
            let xp = CMatrix::from_fn(16, 8, |i, k| b.x[(i, order[k])]);
            let g = GramDecomposition::prepare(&xp).unwrap();
            let sd = sphere_detect_cm(&g, &c, &Pinning::pilot(0), c.default_cm_radius_sq(8), RestartPolicy::Double)
                .unwrap();
            assert_eq!(out.per_user[0].s_hat, sd.s_hat);
        }
    }

    #[test]
    fn block_diagonal_channels_decouple() {
        let c = Constellation::qpsk();
        let (n, t, m) = (24, 10, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut b = draw_mimo_block(&MimoConfig::new(n, t, m, 12.0, c.clone()), &mut rng).unwrap();
        // user j only reaches antennas j·n/m..(j+1)·n/m
        let sh = transmitted(&c, &b.s_index);
        for i in 0..n {
            b.h_true[(i, 1 - i * m / n)] = Complex64::new(0.0, 0.0);
        }
        let mut x = b.h_true.matmul(&sh).unwrap();
        for i in 0..n {
            for k in 0..t {
                x[(i, k)] += complex_gaussian(&mut rng, b.sigma_w_sq);
            }
        }
        b.x = x;
        let out = mimo_detect(&b, &c, 0, DEFAULT_ROUNDS).unwrap();
        let train = training_indices(&c, 0, m).unwrap();
        for j in 0..m {
            let rows = j * n / m..(j + 1) * n / m;
            let order: Vec<usize> = (m..t).chain(0..m).collect();
            let xj = CMatrix::from_fn(rows.len(), t, |i, k| b.x[(rows.start + i, order[k])]);
            let g = GramDecomposition::prepare(&xj).unwrap();
            let single = tsa_detect(&g, &c, &Pinning::trailing(train[j].clone()), MetricMode::ConstantModulus).unwrap();
            let mut s = vec![0; t];
            for (k, &pos) in order.iter().enumerate() {
                s[pos] = single.s_hat[k];
            }
            assert_eq!(out.s_hat[j], s);
        }
    }

    #[test]
    fn iterative_mmse_stops_at_fixed_point() {
        let c = Constellation::qpsk();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = draw_mimo_block(&MimoConfig::new(20, 12, 2, 300.0, c.clone()), &mut rng).unwrap();
        let out = mimo_mmse_iter(&b, &c, 0, 10).unwrap();
        assert_eq!(out.rounds_run, 1);
        assert_eq!(b.symbol_errors(&out.s_hat), 0);
    }
}
