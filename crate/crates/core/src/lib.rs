//! Rotation-equivariant angular analysis of anisotropic images.
//!
//! The pipeline is: image -> windowed periodogram -> angular power profile
//! under an oriented filter bank -> principal orientation, angular
//! registration and equivariance metrics.

pub mod error;
pub mod filterbank;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod profile;
pub mod registration;
pub mod synth;

pub use error::{Error, Result};
pub use filterbank::{CakeParams, FilterBank, FilterParams, Method, RadialBand, RidgeParams};
pub use grid::{periodogram, rotate_bilinear, FrequencyGrid, Image, Psd, Spectrum, WindowSpec};
pub use metrics::MetricReport;
pub use profile::{AngularProfile, OrientationEstimate};
pub use registration::{register, Registrar, RegistrationResult};
pub use synth::{GaborMixSpec, GroundTruth, TruthKind};
