//! Depth-first sphere decoder with radius shrinking and restarts.

use num_complex::Complex64;

use super::tree::SearchTree;
use super::{DetectionOutcome, GramDecomposition, MetricMode, Pinning, RadiusEvent, RestartPolicy};
use crate::constellation::Constellation;
use crate::error::{Error, Result};

/// Sphere decoder for constant-modulus constellations.
pub fn sphere_detect_cm(
    g: &GramDecomposition,
    constellation: &Constellation,
    pinning: &Pinning,
    r0_sq: f64,
    policy: RestartPolicy,
) -> Result<DetectionOutcome> {
    sphere_detect(g, constellation, pinning, MetricMode::ConstantModulus, r0_sq, policy)
}

/// Sphere decoder on the energy-normalized metric; exact for any constellation.
pub fn sphere_detect_ncm(
    g: &GramDecomposition,
    constellation: &Constellation,
    pinning: &Pinning,
    r0_sq: f64,
    policy: RestartPolicy,
) -> Result<DetectionOutcome> {
    sphere_detect(g, constellation, pinning, MetricMode::Normalized, r0_sq, policy)
}

struct Incumbent {
    symbols: Vec<usize>,
    key: f64,
}

/// Sphere decoding in either metric mode.
///
/// Each pass walks the tree from position T down to position 1 in index
/// order, pruning children whose key exceeds r². A full sequence within the
/// radius becomes the incumbent (only if strictly better than the current
/// one) and r² shrinks to its key. A pass that stores nothing enlarges the
/// radius per `policy` and starts over; visit counts accumulate across passes.
pub fn sphere_detect(
    g: &GramDecomposition,
    constellation: &Constellation,
    pinning: &Pinning,
    mode: MetricMode,
    r0_sq: f64,
    policy: RestartPolicy,
) -> Result<DetectionOutcome> {
    if !(r0_sq > 0.0) {
        return Err(Error::InvalidConfig(format!("initial radius r² must be positive, got {r0_sq}")));
    }
    let tree = SearchTree::new(g, constellation, pinning, mode)?;
    let t = tree.t;
    let mut visited = vec![0u64; t];
    let mut history = Vec::new();
    let mut restarts = 0u32;
    let mut r2 = r0_sq;

    let incumbent = loop {
        history.push(RadiusEvent::Start(r2));
        if let Some(best) = radius_pass(&tree, &mut r2, &mut visited, &mut history) {
            break best;
        }
        restarts += 1;
        r2 = match policy {
            RestartPolicy::Double => 4.0 * r2,
            RestartPolicy::Modified => f64::INFINITY,
        };
    };

    let s = constellation.symbols(&incumbent.symbols);
    Ok(DetectionOutcome {
        h_hat: g.channel_estimate(&s),
        s_hat: incumbent.symbols,
        metric: incumbent.key,
        visited_nodes: visited.iter().sum(),
        visited_per_layer: visited,
        radius_restarts: restarts,
        radius_history: history,
    })
}

fn radius_pass(
    tree: &SearchTree<'_>,
    r2: &mut f64,
    visited: &mut [u64],
    history: &mut Vec<RadiusEvent>,
) -> Option<Incumbent> {
    let t = tree.t;
    let zero = Complex64::new(0.0, 0.0);
    // Per-position state of the current path.
    let mut s = vec![zero; t];
    let mut idx = vec![0usize; t];
    let mut metric = vec![0.0f64; t + 1]; // metric[p + 1] is the parent's
    let mut energy = vec![0.0f64; t + 1];
    let mut base = vec![zero; t];
    let mut next = vec![0usize; t];
    let mut end = vec![0usize; t];
    let mut best: Option<Incumbent> = None;

    let mut pos = t - 1;
    let range = tree.candidates(pos);
    next[pos] = range.start;
    end[pos] = range.end;
    base[pos] = zero;

    loop {
        if next[pos] == end[pos] {
            // Children of this parent exhausted: backtrack.
            pos += 1;
            if pos == t {
                break;
            }
            continue;
        }
        let sym = next[pos];
        next[pos] += 1;

        let m = tree.child_metric(pos, base[pos], metric[pos + 1], sym);
        let e = energy[pos + 1] + tree.energies[sym];
        let key = tree.search_key(pos, m, e);
        visited[pos] += 1;
        if key > *r2 {
            continue;
        }
        idx[pos] = sym;
        s[pos] = tree.points[sym];
        if pos == 0 {
            if best.as_ref().map_or(true, |b| key < b.key) {
                best = Some(Incumbent { symbols: idx.clone(), key });
                *r2 = key;
                history.push(RadiusEvent::Shrink(key));
            }
            continue;
        }
        metric[pos] = m;
        energy[pos] = e;
        pos -= 1;
        base[pos] = tree.row_base(pos, &s);
        let range = tree.candidates(pos);
        next[pos] = range.start;
        end[pos] = range.end;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_block, ChannelConfig};
    use crate::detect::exhaustive_detect;
    use crate::linalg::CMatrix;

    fn noiseless(c: &Constellation, n: usize, s_index: &[usize], seed: u64) -> CMatrix {
        let cfg = ChannelConfig::new(n, s_index.len(), 300.0, c.clone(), seed);
        crate::channel::draw_block_with_symbols(&cfg, s_index, &mut cfg.rng()).unwrap().x
    }

    #[test]
    fn noiseless_qpsk_recovers_sequence() {
        let c = Constellation::qpsk();
        for t in [3usize, 6, 12] {
            let s: Vec<usize> = (0..t).map(|k| (k * 7 + 1) % 4).chain([0]).skip(1).collect();
            let x = noiseless(&c, 16, &s, t as u64);
            let g = GramDecomposition::prepare(&x).unwrap();
            let out = sphere_detect_cm(&g, &c, &Pinning::pilot(s[t - 1]), c.default_cm_radius_sq(t), RestartPolicy::Double)
                .unwrap();
            assert_eq!(out.s_hat, s);
            assert!(out.metric <= 1e-6, "metric {}", out.metric);
            assert_eq!(out.visited_per_layer[t - 1], 1);
        }
    }

    #[test]
    fn noiseless_16qam_recovers_sequence() {
        let c = Constellation::qam16();
        let s = vec![3, 15, 0, 9, 6, 0];
        let x = noiseless(&c, 20, &s, 1);
        let g = GramDecomposition::prepare(&x).unwrap();
        let out = sphere_detect_ncm(&g, &c, &Pinning::pilot(0), 2.0 / 45.0, RestartPolicy::Double).unwrap();
        assert_eq!(out.s_hat, s);
        assert!(out.metric <= 1e-6);
    }

    #[test]
    fn bpsk_matches_exhaustive() {
        let c = Constellation::bpsk();
        for seed in 0..40 {
            let b = draw_block(&ChannelConfig::new(6, 4, -3.0, c.clone(), seed)).unwrap();
            let g = GramDecomposition::prepare(&b.x).unwrap();
            let p = Pinning::pilot(0);
            let sd = sphere_detect_cm(&g, &c, &p, 0.01, RestartPolicy::Double).unwrap();
            let ex = exhaustive_detect(&g, &c, &p, MetricMode::ConstantModulus).unwrap();
            let obj_sd = g.objective(&c.symbols(&sd.s_hat), MetricMode::ConstantModulus);
            assert!((obj_sd - ex.metric).abs() <= 1e-9 * ex.metric.abs().max(1e-9));
            assert_eq!(ex.visited_nodes, 8);
        }
    }

    #[test]
    fn ncm_on_constant_modulus_agrees_with_cm() {
        let c = Constellation::qpsk();
        for seed in 0..30 {
            let b = draw_block(&ChannelConfig::new(10, 5, 0.0, c.clone(), seed)).unwrap();
            let g = GramDecomposition::prepare(&b.x).unwrap();
            let p = Pinning::pilot(0);
            let a = sphere_detect_cm(&g, &c, &p, 5.0 / 3.0, RestartPolicy::Double).unwrap();
            let n = sphere_detect_ncm(&g, &c, &p, 1.0, RestartPolicy::Double).unwrap();
            assert_eq!(a.s_hat, n.s_hat);
        }
    }

    #[test]
    fn restart_policies_agree_and_count() {
        let c = Constellation::qpsk();
        let b = draw_block(&ChannelConfig::new(8, 6, -6.0, c.clone(), 3)).unwrap();
        let g = GramDecomposition::prepare(&b.x).unwrap();
        let p = Pinning::pilot(0);
        let d = sphere_detect_cm(&g, &c, &p, 1e-6, RestartPolicy::Double).unwrap();
        let m = sphere_detect_cm(&g, &c, &p, 1e-6, RestartPolicy::Modified).unwrap();
        assert_eq!(d.s_hat, m.s_hat);
        assert!(d.radius_restarts >= 1);
        assert_eq!(m.radius_restarts, 1);
        assert_eq!(d.visited_nodes, d.visited_per_layer.iter().sum::<u64>());
    }

    #[test]
    fn incumbents_strictly_decrease_within_a_pass() {
        let c = Constellation::qpsk();
        for seed in 0..20 {
            let b = draw_block(&ChannelConfig::new(6, 6, -5.0, c.clone(), seed)).unwrap();
            let g = GramDecomposition::prepare(&b.x).unwrap();
            let out = sphere_detect_cm(&g, &c, &Pinning::pilot(0), 1e3, RestartPolicy::Double).unwrap();
            let mut last = f64::INFINITY;
            for ev in &out.radius_history {
                match *ev {
                    RadiusEvent::Start(_) => last = f64::INFINITY,
                    RadiusEvent::Shrink(v) => {
                        assert!(v < last);
                        last = v;
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = Constellation::qam16();
        let b = draw_block(&ChannelConfig::new(6, 3, 0.0, c.clone(), 0)).unwrap();
        let g = GramDecomposition::prepare(&b.x).unwrap();
        assert_eq!(
            sphere_detect_cm(&g, &c, &Pinning::pilot(0), 1.0, RestartPolicy::Double).unwrap_err(),
            Error::NonConstantModulus
        );
        assert!(sphere_detect_ncm(&g, &c, &Pinning::pilot(0), 0.0, RestartPolicy::Double).is_err());
    }
}
