//! Bundled experiment specs approximating the published figures at desk scale.
//!
//! Figure 1 is the search-tree illustration and has no spec; figures 2 to 9
//! are simulation results.

use super::spec::{Detector, ExperimentSpec};
use crate::error::{Error, Result};

pub const FIGURES: [&str; 8] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

fn snr_range(lo: i32, hi: i32, step: usize) -> Vec<f64> {
    (lo..=hi).step_by(step).map(f64::from).collect()
}

fn ser_curves(name: &str, c: &str, t: usize, n: &[usize], snr: &[f64], detectors: &[Detector], trials: usize) -> Vec<ExperimentSpec> {
    detectors
        .iter()
        .map(|&d| {
            ExperimentSpec::new(name, d, c)
                .with_grid(n, &[t], snr)
                .with_trials(trials)
                .with_seed(0x5eed_0000 + t as u64)
        })
        .collect()
}

/// Specs for one figure. `trials` overrides the bundled per-point count.
pub fn figure_specs(name: &str, trials: Option<usize>) -> Result<Vec<ExperimentSpec>> {
    let qpsk_snr = snr_range(-14, 4, 1);
    let mut specs = match name {
        "fig2" => ser_curves(name, "qpsk", 8, &[100], &qpsk_snr, &[Detector::Tsa, Detector::LsIter, Detector::Ls], 20_000),
        "fig3" => ser_curves(name, "qpsk", 20, &[100], &qpsk_snr, &[Detector::Tsa, Detector::LsIter, Detector::Ls], 10_000),
        "fig4" => ser_curves(name, "qpsk", 8, &[100], &qpsk_snr, &[Detector::Tsa, Detector::MmseIter, Detector::Mmse], 20_000),
        "fig5" => ser_curves(name, "qpsk", 20, &[100], &qpsk_snr, &[Detector::Tsa, Detector::MmseIter, Detector::Mmse], 10_000),
        "fig6" => {
            let mut sd = ExperimentSpec::new(name, Detector::SphereCm, "qpsk")
                .with_grid(&[10, 50, 100, 500], &[20], &snr_range(-10, 10, 2))
                .with_trials(200)
                .with_seed(0xf16);
            sd.radius_override = Some(20.0 / 3.0);
            let mut tsa = sd.clone();
            tsa.detector = Detector::Tsa;
            tsa.radius_override = None;
            vec![sd, tsa]
        }
        "fig7" => ser_curves(name, "16qam", 12, &[50, 100], &snr_range(-8, 10, 1), &[Detector::Tsa, Detector::MmseIter], 5_000),
        "fig8" => {
            let sd = ExperimentSpec::new(name, Detector::SphereNcm, "16qam")
                .with_grid(&[500], &[12], &snr_range(-4, 10, 2))
                .with_trials(100)
                .with_seed(0xf18);
            let mut tsa = sd.clone();
            tsa.detector = Detector::Tsa;
            vec![sd, tsa]
        }
        "fig9" => [Detector::MimoMl, Detector::MimoMmseIter, Detector::MimoMmse]
            .into_iter()
            .map(|d| {
                let mut s = ExperimentSpec::new(name, d, "qpsk")
                    .with_grid(&[50, 100], &[20], &snr_range(-14, 0, 1))
                    .with_trials(2_000)
                    .with_seed(0xf19);
                s.m_users = Some(4);
                s
            })
            .collect(),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown figure {other:?}; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    };
    if let Some(t) = trials {
        for s in &mut specs {
            s.trials = t;
        }
    }
    Ok(specs)
}

/// Visited-node sweep over N for QPSK (T = 20, r² = T/3) and 16-QAM
/// (T = 12, best-first search) at −4 dB.
pub fn complexity_specs(trials: Option<usize>) -> Vec<ExperimentSpec> {
    let n = [10, 50, 100, 500];
    let mut qpsk = ExperimentSpec::new("complexity", Detector::SphereCm, "qpsk")
        .with_grid(&n, &[20], &[-4.0])
        .with_trials(trials.unwrap_or(200))
        .with_seed(0xc0);
    qpsk.radius_override = Some(20.0 / 3.0);
    let mut qpsk_tsa = qpsk.clone();
    qpsk_tsa.detector = Detector::Tsa;
    qpsk_tsa.radius_override = None;
    let qam = ExperimentSpec::new("complexity", Detector::Tsa, "16qam")
        .with_grid(&n, &[12], &[-4.0])
        .with_trials(trials.unwrap_or(100))
        .with_seed(0xc1);
    vec![qpsk, qpsk_tsa, qam]
}
