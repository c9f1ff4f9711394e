use num_complex::Complex64;

/// Changes of the sphere radius during a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusEvent {
    /// A radius pass started with this r².
    Start(f64),
    /// A full sequence was stored and r² shrank to its metric.
    Shrink(f64),
}

/// Result of one detection.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    /// Constellation indices of the detected sequence.
    pub s_hat: Vec<usize>,
    /// Objective value of `s_hat` as computed by the detector.
    pub metric: f64,
    /// ML channel estimate X ŝ / ‖ŝ‖² (empty if the samples were not kept).
    pub h_hat: Vec<Complex64>,
    /// Partial sequences whose metric was computed.
    pub visited_nodes: u64,
    /// Visited nodes by position (index 0 is layer 1).
    pub visited_per_layer: Vec<u64>,
    /// Number of times the radius was enlarged.
    pub radius_restarts: u32,
    pub radius_history: Vec<RadiusEvent>,
}

impl DetectionOutcome {
    /// Number of positions where `s_hat` differs from `truth`, ignoring the
    /// last `skip_tail` (pinned) positions.
    pub fn symbol_errors(&self, truth: &[usize], skip_tail: usize) -> usize {
        let t = self.s_hat.len().saturating_sub(skip_tail);
        self.s_hat[..t].iter().zip(&truth[..t]).filter(|(a, b)| a != b).count()
    }
}
