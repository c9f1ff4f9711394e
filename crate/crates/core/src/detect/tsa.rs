//! Best-first tree search.
//!
//! The frontier holds every unexpanded node. The node with the smallest key
//! is always expanded next; the first full-length sequence to reach the top
//! of the frontier is optimal because keys never decrease from parent to
//! child. No initial radius is needed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use super::tree::SearchTree;
use super::{DetectionOutcome, GramDecomposition, MetricMode, Pinning, RadiusEvent};
use crate::constellation::Constellation;
use crate::error::Result;

const ROOT: u32 = u32::MAX;

struct Node {
    parent: u32,
    sym: u16,
    pos: u16,
    metric: f64,
    energy: f64,
}

/// Frontier entry. `BinaryHeap` is a max-heap, so `Ord` is reversed: the
/// greatest entry has the smallest key, then the highest position (layer),
/// then the earliest insertion.
struct Entry {
    key: f64,
    pos: u16,
    seq: u64,
    node: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then(self.pos.cmp(&other.pos))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Best-first search in the given metric mode.
pub fn tsa_detect(
    g: &GramDecomposition,
    constellation: &Constellation,
    pinning: &Pinning,
    mode: MetricMode,
) -> Result<DetectionOutcome> {
    let tree = SearchTree::new(g, constellation, pinning, mode)?;
    let t = tree.t;
    let mut visited = vec![0u64; t];
    let mut nodes: Vec<Node> = Vec::new();
    let mut frontier = BinaryHeap::new();
    let mut seq = 0u64;
    let mut path = vec![Complex64::new(0.0, 0.0); t];
    let mut idx = vec![0usize; t];

    // Seed node = root (metric 0); expanding it creates the position-T nodes.
    let mut seed: Option<u32> = None;
    let (final_node, final_key) = loop {
        let (child_pos, parent_metric, parent_energy, base) = match seed {
            None => (t - 1, 0.0, 0.0, Complex64::new(0.0, 0.0)),
            Some(id) => {
                let n = &nodes[id as usize];
                let (m, e) = (n.metric, n.energy);
                let pos = n.pos as usize;
                fill_path(&nodes, id, tree.points, &mut path, &mut idx);
                (pos - 1, m, e, tree.row_base(pos - 1, &path))
            }
        };
        for sym in tree.candidates(child_pos) {
            let m = tree.child_metric(child_pos, base, parent_metric, sym);
            let e = parent_energy + tree.energies[sym];
            let key = tree.search_key(child_pos, m, e);
            visited[child_pos] += 1;
            let id = nodes.len() as u32;
            nodes.push(Node {
                parent: seed.unwrap_or(ROOT),
                sym: sym as u16,
                pos: child_pos as u16,
                metric: m,
                energy: e,
            });
            frontier.push(Entry { key, pos: child_pos as u16, seq, node: id });
            seq += 1;
        }
        let top = frontier.pop().expect("frontier never empties before a leaf is reached");
        if top.pos == 0 {
            break (top.node, top.key);
        }
        seed = Some(top.node);
    };

    fill_path(&nodes, final_node, tree.points, &mut path, &mut idx);
    let s = constellation.symbols(&idx);
    Ok(DetectionOutcome {
        h_hat: g.channel_estimate(&s),
        s_hat: idx,
        metric: final_key,
        visited_nodes: visited.iter().sum(),
        visited_per_layer: visited,
        radius_restarts: 0,
        radius_history: vec![RadiusEvent::Shrink(final_key)],
    })
}

/// Write the symbols fixed by `id` (positions node.pos..T) into `path`/`idx`.
fn fill_path(nodes: &[Node], mut id: u32, points: &[Complex64], path: &mut [Complex64], idx: &mut [usize]) {
    while id != ROOT {
        let n = &nodes[id as usize];
        path[n.pos as usize] = points[n.sym as usize];
        idx[n.pos as usize] = n.sym as usize;
        id = n.parent;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_block, ChannelConfig};
    use crate::detect::{exhaustive_detect, sphere_detect, RestartPolicy};

    #[test]
    fn matches_sphere_and_visits_no_more() {
        for (c, t, n) in [(Constellation::qpsk(), 6, 10), (Constellation::qam16(), 4, 12), (Constellation::bpsk(), 7, 5)] {
            let mode = MetricMode::for_constellation(&c);
            for seed in 0..25 {
                let b = draw_block(&ChannelConfig::new(n, t, -2.0, c.clone(), seed)).unwrap();
                let g = GramDecomposition::prepare(&b.x).unwrap();
                let p = Pinning::pilot(0);
                let r0 = mode.default_radius_sq(&c, t);
                let sd = sphere_detect(&g, &c, &p, mode, r0, RestartPolicy::Double).unwrap();
                let ts = tsa_detect(&g, &c, &p, mode).unwrap();
                assert!((sd.metric - ts.metric).abs() <= 1e-9 * sd.metric.abs().max(1e-12));
                assert!(ts.visited_nodes <= sd.visited_nodes, "{c} seed {seed}");
                let ex = exhaustive_detect(&g, &c, &p, mode).unwrap();
                let obj = g.objective(&c.symbols(&ts.s_hat), mode);
                assert!((obj - ex.metric).abs() <= 1e-9 * ex.metric.abs().max(1e-9));
            }
        }
    }

    #[test]
    fn pilot_layer_has_one_node_and_h_hat_is_filled() {
        let c = Constellation::qpsk();
        let b = draw_block(&ChannelConfig::new(40, 8, 0.0, c.clone(), 4)).unwrap();
        let g = GramDecomposition::prepare(&b.x).unwrap();
        let out = tsa_detect(&g, &c, &Pinning::pilot(0), MetricMode::ConstantModulus).unwrap();
        assert_eq!(out.visited_per_layer[7], 1);
        assert_eq!(out.s_hat[7], 0);
        assert_eq!(out.h_hat.len(), 40);
        assert_eq!(out.visited_nodes, out.visited_per_layer.iter().sum::<u64>());
    }

    #[test]
    fn frontier_order() {
        let a = Entry { key: 1.0, pos: 3, seq: 5, node: 0 };
        let b = Entry { key: 2.0, pos: 9, seq: 0, node: 1 };
        assert!(a > b);
        let c = Entry { key: 1.0, pos: 4, seq: 9, node: 2 };
        assert!(c > a);
        let d = Entry { key: 1.0, pos: 3, seq: 1, node: 3 };
        assert!(d > a);
    }
}
