//! Joint ML channel estimation and non-coherent detection for SIMO links.

pub mod baseline;
pub mod channel;
pub mod constellation;
pub mod detect;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mimo;
#[cfg(feature = "oracles")]
pub mod oracles;

pub use baseline::{BaselineConfig, Estimator};
pub use channel::{draw_block, trial_rng, ChannelConfig, ReceivedBlock};
pub use constellation::Constellation;
pub use detect::{
    exhaustive_detect, sphere_detect, tsa_detect, DetectionOutcome, GramDecomposition, MetricMode, Pinning,
    RestartPolicy,
};
pub use error::{Error, Result};
pub use harness::{Detector, ExperimentSpec, ResultRow};
pub use linalg::{CMatrix, HermitianMatrix, UpperTriangular};
pub use mimo::{MimoBlock, MimoConfig};
pub use num_complex::Complex64;
