//! Exact joint ML channel estimation and non-coherent sequence detection.
//!
//! All detectors minimise the same objective over symbol sequences whose
//! trailing positions are pinned to known symbols:
//!
//! * constant modulus: s^H (ρI − X^H X/N) s = ‖R s‖²
//! * general constellations: ‖R s‖² / ‖s‖²
//!
//! where R is the upper Cholesky factor of ρI − X^H X/N. The search tree is
//! rooted above position T and grows towards position 1; a node at position
//! p fixes s_p..s_T and carries the partial metric Σ_{l ≥ p} |(R s)_l|².
//!
//! Positions are 0-based in code: position `p` is layer `p + 1`.

mod exhaustive;
mod outcome;
mod sphere;
pub(crate) mod tree;
mod tsa;

pub use exhaustive::{exhaustive_detect, EXHAUSTIVE_LIMIT};
pub use outcome::{DetectionOutcome, RadiusEvent};
pub use sphere::{sphere_detect, sphere_detect_cm, sphere_detect_ncm};
pub use tree::{normalized_partial_metrics, partial_metrics};
pub use tsa::tsa_detect;


use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ml_channel_estimate;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_psd, gram_normalized, max_eigenvalue, shifted_matrix, CMatrix, HermitianMatrix, UpperTriangular,
};

/// Which objective a search minimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    /// ‖R s‖²; exact only when every point has the same energy.
    ConstantModulus,
    /// ‖R s‖² / ‖s‖², pruned with the energy-bounded partial metric.
    Normalized,
}

impl MetricMode {
    /// The natural mode for a constellation.
    pub fn for_constellation(c: &Constellation) -> Self {
        if c.is_constant_modulus() {
            MetricMode::ConstantModulus
        } else {
            MetricMode::Normalized
        }
    }

    /// Default initial radius r² for the sphere decoder.
    pub fn default_radius_sq(self, c: &Constellation, t_coh: usize) -> f64 {
        match self {
            MetricMode::ConstantModulus => c.default_cm_radius_sq(t_coh),
            MetricMode::Normalized => c.ncm_separation_bound(),
        }
    }
}

/// What the sphere decoder does when a radius pass finds no sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartPolicy {
    /// Double r (r² × 4) and search again.
    #[default]
    Double,
    /// Search again with an unbounded radius.
    Modified,
}

/// Symbols fixed at the trailing positions of the sequence.
///
/// `symbols[k]` pins position `T − symbols.len() + k`; a single pilot pins
/// position T.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pinning {
    symbols: Vec<usize>,
}

impl Pinning {
    pub fn pilot(index: usize) -> Self {
        Self { symbols: vec![index] }
    }

    pub fn trailing(symbols: Vec<usize>) -> Self {
        Self { symbols }
    }

    /// No pinned symbols: the objective keeps its phase ambiguity.
    pub fn none() -> Self {
        Self { symbols: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    /// Pinned symbol at `pos` for a length-`t` sequence.
    pub fn at(&self, pos: usize, t: usize) -> Option<usize> {
        let first = t - self.symbols.len();
        (pos >= first).then(|| self.symbols[pos - first])
    }

    pub(crate) fn validate(&self, t: usize, c: &Constellation) -> Result<()> {
        if self.symbols.len() > t {
            return Err(Error::InvalidConfig(format!("{} pinned symbols for length {t}", self.symbols.len())));
        }
        if self.symbols.iter().any(|&i| i >= c.len()) {
            return Err(Error::InvalidConfig("pinned symbol is not a constellation index".into()));
        }
        Ok(())
    }
}

/// The per-block preprocessing shared by every tree search: Gram matrix,
/// shift ρ and the Cholesky factor of ρI − Gram.
#[derive(Debug, Clone)]
pub struct GramDecomposition {
    samples: Option<CMatrix>,
    gram: HermitianMatrix,
    rho: f64,
    r: UpperTriangular,
    loading: f64,
}

/// ρ = λ_max·(1 + 1e−9) + 1e−12.
pub fn shift_for(lambda_max: f64) -> f64 {
    lambda_max * (1.0 + 1e-9) + 1e-12
}

impl GramDecomposition {
    /// Preprocess a received block X (N×T).
    pub fn prepare(x: &CMatrix) -> Result<Self> {
        if x.cols() < 2 {
            return Err(Error::DimensionMismatch("coherence length must be at least 2".into()));
        }
        let gram = gram_normalized(x)?;
        let mut g = Self::from_gram(gram)?;
        g.samples = Some(x.clone());
        Ok(g)
    }

    /// Preprocess a Gram matrix directly, with the default shift.
    pub fn from_gram(gram: HermitianMatrix) -> Result<Self> {
        let rho = shift_for(max_eigenvalue(&gram)?);
        Self::with_rho(gram, rho, 1e-11 * rho.abs().max(f64::MIN_POSITIVE))
    }

    /// Preprocess with an explicit shift and Cholesky clamping threshold.
    pub fn with_rho(gram: HermitianMatrix, rho: f64, jitter: f64) -> Result<Self> {
        let f = cholesky_psd(&shifted_matrix(&gram, rho), jitter)?;
        Ok(Self { samples: None, gram, rho, r: f.r, loading: f.shift })
    }

    pub fn t_coh(&self) -> usize {
        self.gram.dim()
    }

    pub fn gram(&self) -> &HermitianMatrix {
        &self.gram
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn r_factor(&self) -> &UpperTriangular {
        &self.r
    }

    /// Replace the factor. Used by fault-injection checks.
    pub fn r_factor_mut(&mut self) -> &mut UpperTriangular {
        &mut self.r
    }

    /// Diagonal loading δ the factorization needed (R^H R = ρI − Gram + δI).
    pub fn loading(&self) -> f64 {
        self.loading
    }

    pub fn samples(&self) -> Option<&CMatrix> {
        self.samples.as_ref()
    }

    /// Objective evaluated straight from the Gram matrix, without R.
    pub fn objective(&self, s: &[Complex64], mode: MetricMode) -> f64 {
        let energy: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        let quad = self.rho * energy - self.gram.quadratic_form(s);
        match mode {
            MetricMode::ConstantModulus => quad,
            MetricMode::Normalized => quad / energy,
        }
    }

    /// ĥ = X s / ‖s‖² when the samples are available.
    pub(crate) fn channel_estimate(&self, s: &[Complex64]) -> Vec<Complex64> {
        match &self.samples {
            Some(x) => ml_channel_estimate(x, s).unwrap_or_default(),
            None => Vec::new(),
        }
    }
}

/// Prepare a block and run the best-first search in the constellation's
/// natural metric mode. The usual entry point for a single block.
pub fn detect_block(x: &CMatrix, constellation: &Constellation, pilot_index: usize) -> Result<DetectionOutcome> {
    let g = GramDecomposition::prepare(x)?;
    tsa_detect(&g, constellation, &Pinning::pilot(pilot_index), MetricMode::for_constellation(constellation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_block, ChannelConfig};

    #[test]
    fn rho_dominates_lambda_max() {
        for seed in 0..10 {
            let b = draw_block(&ChannelConfig::new(20, 6, 0.0, Constellation::qpsk(), seed)).unwrap();
            let g = GramDecomposition::prepare(&b.x).unwrap();
            assert!(g.rho() >= max_eigenvalue(g.gram()).unwrap());
            assert_eq!(g.loading(), 0.0);
        }
    }

    #[test]
    fn r_metric_equals_quadratic_form() {
        for seed in 0..10 {
            let b = draw_block(&ChannelConfig::new(30, 7, -2.0, Constellation::qam16(), seed)).unwrap();
            let g = GramDecomposition::prepare(&b.x).unwrap();
            let via_r = partial_metrics(g.r_factor(), &b.s_true)[0];
            let direct = g.objective(&b.s_true, MetricMode::ConstantModulus);
            assert!((via_r - direct).abs() <= 1e-8 * direct.abs().max(1.0), "{via_r} vs {direct}");
        }
    }

    #[test]
    fn pinning_positions() {
        let p = Pinning::trailing(vec![3, 1]);
        assert_eq!(p.at(4, 6), Some(3));
        assert_eq!(p.at(5, 6), Some(1));
        assert_eq!(p.at(3, 6), None);
        assert_eq!(Pinning::none().at(5, 6), None);
        assert!(Pinning::pilot(7).validate(4, &Constellation::qpsk()).is_err());
    }

    #[test]
    fn short_blocks_are_rejected() {
        assert!(GramDecomposition::prepare(&CMatrix::zeros(4, 1)).is_err());
    }

    #[test]
    fn default_radii() {
        let q = Constellation::qpsk();
        assert!((MetricMode::ConstantModulus.default_radius_sq(&q, 20) - 20.0 / 3.0).abs() < 1e-12);
        let m = Constellation::qam16();
        assert!((MetricMode::Normalized.default_radius_sq(&m, 12) - 2.0 / 45.0).abs() < 1e-15);
    }
}
