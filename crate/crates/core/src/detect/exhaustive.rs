//! Brute-force reference detector.

use super::{DetectionOutcome, GramDecomposition, MetricMode, Pinning};
use crate::constellation::Constellation;
use crate::error::{Error, Result};

/// Largest number of sequences the exhaustive detector will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 1 << 24;

/// Enumerate every sequence consistent with `pinning` and return the argmin
/// of the objective evaluated directly from the Gram matrix.
///
/// Sequences are enumerated with position 1 varying fastest, the same order
/// in which the tree searches reach their leaves; exact ties keep the first.
/// All evaluations are counted at layer 1.
pub fn exhaustive_detect(
    g: &GramDecomposition,
    constellation: &Constellation,
    pinning: &Pinning,
    mode: MetricMode,
) -> Result<DetectionOutcome> {
    let t = g.t_coh();
    pinning.validate(t, constellation)?;
    if mode == MetricMode::ConstantModulus && !constellation.is_constant_modulus() {
        return Err(Error::NonConstantModulus);
    }
    let q = constellation.len();
    let free = t - pinning.len();
    let total = (q as u128).checked_pow(free as u32).unwrap_or(u128::MAX);
    if total > EXHAUSTIVE_LIMIT {
        return Err(Error::SearchSpaceTooLarge(total));
    }

    let mut idx: Vec<usize> = (0..t).map(|p| pinning.at(p, t).unwrap_or(0)).collect();
    let mut s = constellation.symbols(&idx);
    let mut best_idx = idx.clone();
    let mut best = f64::INFINITY;
    let mut count = 0u64;
    loop {
        let v = g.objective(&s, mode);
        count += 1;
        if v < best {
            best = v;
            best_idx.copy_from_slice(&idx);
        }
        // odometer over the free positions
        let mut p = 0;
        loop {
            if p == free {
                break;
            }
            idx[p] += 1;
            if idx[p] < q {
                s[p] = constellation.point(idx[p]);
                break;
            }
            idx[p] = 0;
            s[p] = constellation.point(0);
            p += 1;
        }
        if p == free {
            break;
        }
    }

    let mut per_layer = vec![0u64; t];
    per_layer[0] = count;
    let s_best = constellation.symbols(&best_idx);
    Ok(DetectionOutcome {
        h_hat: g.channel_estimate(&s_best),
        s_hat: best_idx,
        metric: best,
        visited_nodes: count,
        visited_per_layer: per_layer,
        radius_restarts: 0,
        radius_history: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_block, draw_block_with_symbols, ChannelConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_bpsk_t3() {
        let c = Constellation::bpsk();
        let cfg = ChannelConfig::new(4, 3, 400.0, c.clone(), 1);
        let b = draw_block_with_symbols(&cfg, &[1, 1, 0], &mut cfg.rng()).unwrap();
        let g = GramDecomposition::prepare(&b.x).unwrap();
        let out = exhaustive_detect(&g, &c, &Pinning::pilot(0), MetricMode::ConstantModulus).unwrap();
        assert_eq!(out.s_hat, vec![1, 1, 0]);
        assert_eq!(out.visited_nodes, 4);
    }

    #[test]
    fn counts_every_sequence() {
        for (c, t) in [(Constellation::qpsk(), 5usize), (Constellation::qam16(), 3)] {
            let b = draw_block(&ChannelConfig::new(3, t, 0.0, c.clone(), 0)).unwrap();
            let g = GramDecomposition::prepare(&b.x).unwrap();
            let out = exhaustive_detect(&g, &c, &Pinning::pilot(0), MetricMode::Normalized).unwrap();
            assert_eq!(out.visited_nodes, (c.len() as u64).pow(t as u32 - 1));
            assert_eq!(out.visited_per_layer.iter().sum::<u64>(), out.visited_nodes);
        }
    }

    #[test]
    fn argmin_beats_random_probes() {
        let c = Constellation::qpsk();
        let b = draw_block(&ChannelConfig::new(8, 6, -2.0, c.clone(), 12)).unwrap();
        let g = GramDecomposition::prepare(&b.x).unwrap();
        let out = exhaustive_detect(&g, &c, &Pinning::pilot(0), MetricMode::ConstantModulus).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut idx: Vec<usize> = (0..5).map(|_| rng.random_range(0..4)).collect();
            idx.push(0);
            let v = g.objective(&c.symbols(&idx), MetricMode::ConstantModulus);
            assert!(out.metric <= v);
        }
    }

    #[test]
    fn size_guard() {
        let c = Constellation::qam16();
        let b = draw_block(&ChannelConfig::new(3, 8, 0.0, c.clone(), 0)).unwrap();
        let g = GramDecomposition::prepare(&b.x).unwrap();
        assert!(matches!(
            exhaustive_detect(&g, &c, &Pinning::pilot(0), MetricMode::Normalized),
            Err(Error::SearchSpaceTooLarge(_))
        ));
    }
}
