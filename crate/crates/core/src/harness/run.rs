use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::spec::{Detector, ExperimentSpec};
use crate::baseline::{iterative_detect, BaselineConfig, Estimator};
use crate::channel::{draw_block_with, trial_rng, ChannelConfig};
use crate::constellation::Constellation;
use crate::detect::{exhaustive_detect, sphere_detect, tsa_detect, GramDecomposition, MetricMode, Pinning};
use crate::error::{Error, Result};
use crate::mimo::{draw_mimo_block, mimo_detect, mimo_mmse, mimo_mmse_iter, MimoConfig};

/// Aggregated statistics of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub name: String,
    pub detector: String,
    pub constellation: String,
    pub n_rx: usize,
    pub t_coh: usize,
    pub snr_db: f64,
    pub trials: usize,
    pub ser: f64,
    pub ser_stderr: f64,
    pub mean_visited: f64,
    pub visited_stderr: f64,
    pub mean_restarts: f64,
    pub wall_time_s: f64,
}

/// What one simulated block contributes to a row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub errors: usize,
    /// Data symbols the errors are counted over.
    pub symbols: usize,
    pub visited: u64,
    pub restarts: u32,
}

/// Run one trial of `spec` at grid point `grid` = (N, T, SNR).
pub fn run_trial(
    spec: &ExperimentSpec,
    c: &Constellation,
    grid: (usize, usize, f64),
    rng: &mut ChaCha8Rng,
) -> Result<TrialResult> {
    let (n, t, snr) = grid;
    if spec.detector.is_mimo() {
        let cfg = MimoConfig::new(n, t, spec.m_users(), snr, c.clone());
        let b = draw_mimo_block(&cfg, rng)?;
        let out = match spec.detector {
            Detector::MimoMl => mimo_detect(&b, c, 0, spec.iterations())?,
            Detector::MimoMmseIter => mimo_mmse_iter(&b, c, 0, spec.iterations())?,
            _ => mimo_mmse(&b, c, 0)?,
        };
        return Ok(TrialResult {
            errors: b.symbol_errors(&out.s_hat),
            symbols: b.m_users * (t - b.m_users),
            visited: out.visited_nodes(),
            restarts: out.per_user.iter().map(|o| o.radius_restarts).sum(),
        });
    }

    let cfg = ChannelConfig::new(n, t, snr, c.clone(), 0);
    let b = draw_block_with(&cfg, rng)?;
    let pilot = Pinning::pilot(cfg.pilot_index);
    let count = |s_hat: &[usize]| s_hat[..t - 1].iter().zip(&b.s_index).filter(|(a, b)| a != b).count();
    let baseline = |estimator, iterations| -> Result<TrialResult> {
        let out = iterative_detect(&b.x, b.sigma_w_sq, BaselineConfig::new(estimator, iterations), c, cfg.pilot_index)?;
        Ok(TrialResult { errors: count(&out.s_hat), symbols: t - 1, visited: 0, restarts: 0 })
    };
    let out = match spec.detector {
        Detector::Ls => return baseline(Estimator::Ls, 0),
        Detector::Mmse => return baseline(Estimator::Mmse, 0),
        Detector::LsIter => return baseline(Estimator::Ls, spec.iterations()),
        Detector::MmseIter => return baseline(Estimator::Mmse, spec.iterations()),
        Detector::SphereCm | Detector::SphereNcm => {
            let mode = if spec.detector == Detector::SphereCm {
                MetricMode::ConstantModulus
            } else {
                MetricMode::Normalized
            };
            let g = GramDecomposition::prepare(&b.x)?;
            let r0 = spec.radius_override.unwrap_or_else(|| mode.default_radius_sq(c, t));
            sphere_detect(&g, c, &pilot, mode, r0, spec.restart_policy)?
        }
        Detector::Tsa => {
            let g = GramDecomposition::prepare(&b.x)?;
            tsa_detect(&g, c, &pilot, MetricMode::for_constellation(c))?
        }
        Detector::Exhaustive => {
            let g = GramDecomposition::prepare(&b.x)?;
            exhaustive_detect(&g, c, &pilot, MetricMode::for_constellation(c))?
        }
        Detector::MimoMl | Detector::MimoMmseIter | Detector::MimoMmse => unreachable!("handled above"),
    };
    Ok(TrialResult {
        errors: count(&out.s_hat),
        symbols: t - 1,
        visited: out.visited_nodes,
        restarts: out.radius_restarts,
    })
}

fn mean_stderr(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Reduce per-trial results (in trial order) to a row.
pub fn aggregate(spec: &ExperimentSpec, grid: (usize, usize, f64), trials: &[TrialResult], wall_time_s: f64) -> ResultRow {
    let errors: usize = trials.iter().map(|r| r.errors).sum();
    let symbols: usize = trials.iter().map(|r| r.symbols).sum();
    let (_, ser_stderr) = mean_stderr(trials.iter().map(|r| r.errors as f64 / r.symbols as f64));
    let (mean_visited, visited_stderr) = mean_stderr(trials.iter().map(|r| r.visited as f64));
    let (mean_restarts, _) = mean_stderr(trials.iter().map(|r| r.restarts as f64));
    ResultRow {
        name: spec.name.clone(),
        detector: spec.detector.name().to_string(),
        constellation: spec.constellation.clone(),
        n_rx: grid.0,
        t_coh: grid.1,
        snr_db: grid.2,
        trials: trials.len(),
        ser: errors as f64 / symbols as f64,
        ser_stderr,
        mean_visited,
        visited_stderr,
        mean_restarts,
        wall_time_s,
    }
}

/// Per-trial results of every grid point, in grid then trial order.
pub fn run_trials(spec: &ExperimentSpec, workers: Option<usize>) -> Result<Vec<Vec<TrialResult>>> {
    spec.validate()?;
    let c = spec.constellation()?;
    let grid = spec.grid();
    let work = || -> Result<Vec<Vec<TrialResult>>> {
        grid.iter()
            .enumerate()
            .map(|(gi, &point)| {
                (0..spec.trials)
                    .into_par_iter()
                    .map(|k| run_trial(spec, &c, point, &mut trial_rng(spec.seed, gi as u32, k as u32)))
                    .collect()
            })
            .collect()
    };
    with_workers(workers, work)
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(f),
    }
}

/// Run every grid point of `spec`. `workers` sets the thread count (the
/// global rayon pool when `None`); results do not depend on it.
pub fn run(spec: &ExperimentSpec, workers: Option<usize>) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let c = spec.constellation()?;
    with_workers(workers, || {
        spec.grid()
            .into_iter()
            .enumerate()
            .map(|(gi, point)| {
                let start = Instant::now();
                let trials: Vec<TrialResult> = (0..spec.trials)
                    .into_par_iter()
                    .map(|k| run_trial(spec, &c, point, &mut trial_rng(spec.seed, gi as u32, k as u32)))
                    .collect::<Result<_>>()?;
                let wall = if spec.timing { start.elapsed().as_secs_f64() } else { 0.0 };
                Ok(aggregate(spec, point, &trials, wall))
            })
            .collect()
    })
}

/// SNR at which a curve first falls to `target` SER, interpolating linearly
/// in (SNR, log10 SER) between the bracketing points. `points` must be sorted
/// by SNR.
pub fn snr_at_ser(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let lt = target.log10();
    for w in points.windows(2) {
        let ((s0, p0), (s1, p1)) = (w[0], w[1]);
        if p0 >= target && p1 <= target {
            if p1 <= 0.0 {
                // log scale undefined at zero: fall back to linear.
                let f = (p0 - target) / (p0 - p1);
                return Some(s0 + f * (s1 - s0));
            }
            let (l0, l1) = (p0.log10(), p1.log10());
            if l0 == l1 {
                return Some(s0);
            }
            return Some(s0 + (l0 - lt) / (l0 - l1) * (s1 - s0));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_single_trial_has_zero_ser() {
        for d in Detector::ALL {
            let (c, t) = if d == Detector::Exhaustive { ("qpsk", 5) } else { ("qpsk", 8) };
            let s = ExperimentSpec::new("z", d, c).with_grid(&[16], &[t], &[200.0]).with_trials(1);
            let rows = run(&s, Some(1)).unwrap();
            assert_eq!(rows[0].ser, 0.0, "{}", d.name());
        }
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let s = ExperimentSpec::new("d", Detector::Tsa, "qpsk").with_grid(&[8, 16], &[6], &[-2.0, 4.0]).with_trials(40);
        let a = run(&s, Some(1)).unwrap();
        let b = run(&s, Some(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, run(&s, Some(1)).unwrap());
    }

    #[test]
    fn ser_denominator_excludes_pilot() {
        let s = ExperimentSpec::new("p", Detector::Ls, "qpsk").with_grid(&[2], &[5], &[-30.0]).with_trials(7);
        let trials = run_trials(&s, Some(1)).unwrap();
        assert!(trials[0].iter().all(|r| r.symbols == 4));
        let row = aggregate(&s, (2, 5, -30.0), &trials[0], 0.0);
        let errs: usize = trials[0].iter().map(|r| r.errors).sum();
        assert_eq!(row.ser, errs as f64 / 28.0);
    }

    #[test]
    fn crossing_interpolation() {
        let pts = [(0.0, 1e-1), (2.0, 1e-3), (4.0, 1e-4)];
        assert!((snr_at_ser(&pts, 1e-2).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(snr_at_ser(&pts, 1e-6), None);
        assert!((snr_at_ser(&[(0.0, 0.02), (1.0, 0.0)], 1e-2).unwrap() - 0.5).abs() < 1e-12);
    }
}
