use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::detect::RestartPolicy;
use crate::error::{Error, Result};
use crate::mimo::DEFAULT_ROUNDS;

/// Detector run by an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    SphereCm,
    SphereNcm,
    Tsa,
    Exhaustive,
    Ls,
    Mmse,
    LsIter,
    MmseIter,
    MimoMl,
    MimoMmseIter,
    MimoMmse,
}

impl Detector {
    pub const ALL: [Detector; 11] = [
        Detector::SphereCm,
        Detector::SphereNcm,
        Detector::Tsa,
        Detector::Exhaustive,
        Detector::Ls,
        Detector::Mmse,
        Detector::LsIter,
        Detector::MmseIter,
        Detector::MimoMl,
        Detector::MimoMmseIter,
        Detector::MimoMmse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Detector::SphereCm => "sphere_cm",
            Detector::SphereNcm => "sphere_ncm",
            Detector::Tsa => "tsa",
            Detector::Exhaustive => "exhaustive",
            Detector::Ls => "ls",
            Detector::Mmse => "mmse",
            Detector::LsIter => "ls_iter",
            Detector::MmseIter => "mmse_iter",
            Detector::MimoMl => "mimo_ml",
            Detector::MimoMmseIter => "mimo_mmse_iter",
            Detector::MimoMmse => "mimo_mmse",
        }
    }

    pub fn is_mimo(self) -> bool {
        matches!(self, Detector::MimoMl | Detector::MimoMmseIter | Detector::MimoMmse)
    }

    /// Iteration count used when the spec leaves it unset.
    pub fn default_iterations(self) -> usize {
        if self.is_mimo() {
            DEFAULT_ROUNDS
        } else {
            100
        }
    }
}

fn default_trials() -> usize {
    10_000
}

/// One experiment: a detector swept over a grid of (N, T, SNR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub detector: Detector,
    /// "bpsk", "qpsk" or "16qam".
    pub constellation: String,
    pub n_rx: Vec<usize>,
    pub t_coh: Vec<usize>,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Initial sphere radius r²; the metric mode's default when absent.
    #[serde(default)]
    pub radius_override: Option<f64>,
    #[serde(default)]
    pub restart_policy: RestartPolicy,
    /// Refinement iterations (SIMO baselines) or rounds (MIMO receivers).
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub m_users: Option<usize>,
    /// Record wall-clock time per grid point. Off by default so output is a
    /// pure function of the spec.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn new(name: impl Into<String>, detector: Detector, constellation: &str) -> Self {
        Self {
            name: name.into(),
            detector,
            constellation: constellation.to_string(),
            n_rx: Vec::new(),
            t_coh: Vec::new(),
            snr_db: Vec::new(),
            trials: default_trials(),
            seed: 0,
            radius_override: None,
            restart_policy: RestartPolicy::Double,
            iterations: None,
            m_users: None,
            timing: false,
        }
    }

    pub fn with_grid(mut self, n_rx: &[usize], t_coh: &[usize], snr_db: &[f64]) -> Self {
        self.n_rx = n_rx.to_vec();
        self.t_coh = t_coh.to_vec();
        self.snr_db = snr_db.to_vec();
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn constellation(&self) -> Result<Constellation> {
        Constellation::from_name(&self.constellation)
    }

    pub fn iterations(&self) -> usize {
        self.iterations.unwrap_or_else(|| self.detector.default_iterations())
    }

    pub fn m_users(&self) -> usize {
        self.m_users.unwrap_or(4)
    }

    /// Grid points in N-major, then T, then SNR order.
    pub fn grid(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.n_rx.len() * self.t_coh.len() * self.snr_db.len());
        for &n in &self.n_rx {
            for &t in &self.t_coh {
                for &snr in &self.snr_db {
                    out.push((n, t, snr));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let c = self.constellation()?;
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_rx.is_empty() || self.t_coh.is_empty() || self.snr_db.is_empty() {
            return bad("n_rx, t_coh and snr_db must be nonempty".into());
        }
        if self.n_rx.contains(&0) {
            return bad("n_rx entries must be positive".into());
        }
        if self.t_coh.iter().any(|&t| t < 2) {
            return bad("t_coh entries must be at least 2".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db entries must be finite".into());
        }
        if self.trials > u32::MAX as usize || self.grid().len() > u32::MAX as usize {
            return bad("too many trials or grid points".into());
        }
        if let Some(r) = self.radius_override {
            if !(r > 0.0) {
                return bad(format!("radius_override must be positive, got {r}"));
            }
        }
        if self.detector == Detector::SphereCm && !c.is_constant_modulus() {
            return bad(format!("sphere_cm needs a constant-modulus constellation, got {c}"));
        }
        if self.iterations() > crate::baseline::MAX_ITERATIONS {
            return bad("iterations exceeds 10000".into());
        }
        if self.detector.is_mimo() {
            let m = self.m_users();
            if m == 0 || !m.is_power_of_two() {
                return bad(format!("m_users must be a power of two, got {m}"));
            }
            if self.t_coh.iter().any(|&t| t <= m) {
                return bad("t_coh must exceed m_users".into());
            }
            if m > 1 && c.negation_of(0).is_none() {
                return bad("MIMO training needs a constellation closed under negation".into());
            }
            if self.detector == Detector::MimoMl && self.iterations() == 0 {
                return bad("mimo_ml needs at least one round".into());
            }
        } else if self.m_users.is_some() {
            return bad("m_users only applies to MIMO detectors".into());
        }
        if self.detector == Detector::Exhaustive {
            for &t in &self.t_coh {
                let total = (c.len() as u128).saturating_pow(t as u32 - 1);
                if total > crate::detect::EXHAUSTIVE_LIMIT {
                    return Err(Error::SearchSpaceTooLarge(total));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order_is_n_then_t_then_snr() {
        let s = ExperimentSpec::new("g", Detector::Tsa, "qpsk").with_grid(&[10, 20], &[4], &[0.0, 5.0]);
        assert_eq!(s.grid(), vec![(10, 4, 0.0), (10, 4, 5.0), (20, 4, 0.0), (20, 4, 5.0)]);
    }

    #[test]
    fn validation() {
        let ok = ExperimentSpec::new("v", Detector::SphereCm, "qpsk").with_grid(&[10], &[4], &[0.0]);
        assert!(ok.validate().is_ok());
        let mut s = ok.clone();
        s.constellation = "16qam".into();
        assert!(s.validate().is_err());
        let mut s = ok.clone();
        s.trials = 0;
        assert!(s.validate().is_err());
        let mut s = ok.clone();
        s.t_coh = vec![1];
        assert!(s.validate().is_err());
        let mut s = ok.clone();
        s.detector = Detector::MimoMl;
        assert!(s.validate().is_err(), "t_coh 4 with 4 users");
        s.t_coh = vec![8];
        assert!(s.validate().is_ok());
        let mut s = ok.clone();
        s.detector = Detector::Exhaustive;
        s.t_coh = vec![20];
        assert!(matches!(s.validate(), Err(Error::SearchSpaceTooLarge(_))));
        let mut s = ok;
        s.constellation = "8psk".into();
        assert!(s.validate().is_err());
    }

    #[test]
    fn detector_names_match_serde() {
        for d in Detector::ALL {
            let v = serde_json::to_string(&d).unwrap();
            assert_eq!(v, format!("\"{}\"", d.name()));
        }
    }
}
