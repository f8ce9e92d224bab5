//! Numerical model of multiplexed photon-number-resolving detectors: states
//! in a truncated Fock space, click statistics of ON-OFF detector arrays,
//! moment estimation and heralded cat-state breeding.

pub mod breeding;
pub mod detector;
pub mod error;
pub mod fock;
pub mod math;
pub mod regression;
pub mod statistics;

pub use breeding::{breed, BreedingConfig, BreedingResult, Detector, Scheme};
pub use detector::{click_matrix, ClickMatrix, DetectorSpec};
pub use error::{Error, Result};
pub use fock::{DensityMatrix, FockVector, Parity, SqueezeParam, Truncation, TwoModeState};
pub use num_complex::Complex64;
pub use statistics::{MomentReport, ScalingFit};
