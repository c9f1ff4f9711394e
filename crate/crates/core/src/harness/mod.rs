//! Monte-Carlo experiment engine: specs, parallel deterministic runs, CSV
//! output, bundled figure sweeps and the self-check suite.

pub mod csv;
pub mod figures;
pub mod run;
pub mod spec;
#[cfg(feature = "oracles")]
pub mod verify;

pub use csv::{emit_csv, parse_csv, to_csv, HEADER};
pub use figures::{complexity_specs, figure_specs, FIGURES};
pub use run::{aggregate, run, run_trial, run_trials, snr_at_ser, ResultRow, TrialResult};
pub use spec::{Detector, ExperimentSpec};
