//! Angular registration of two rotated copies of an image.
//!
//! The estimate `gamma` is the counter-clockwise rotation taking `x1` to `x2`:
//! for `x2 = rotate_bilinear(x1, g)` the result is close to `g`. The two
//! principal orientations fix `gamma` up to a half turn; the candidate whose
//! back-rotation of `x2` best matches `x1` on a central disk wins.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::filterbank::{FilterBank, FilterParams, Method};
use crate::grid::{rotate_any, Image, WindowSpec};
use crate::profile::{image_profile, principal_orientation, AngularProfile};

/// Disk radius for the disambiguation error, as a fraction of `min(H, W) / 2`.
pub const MSE_DISK_FRACTION: f64 = 0.9;

/// Profiles flatter than this peak-to-mean ratio trigger a warning.
pub const ISOTROPY_WARNING_RATIO: f64 = 1.05;

/// Relative MSE difference below which the two candidates count as tied;
/// ties keep the first candidate. Content symmetric under a half turn
/// (gratings) produces such ties.
pub const MSE_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    /// Estimated rotation in `[0, 360)` degrees.
    pub gamma: f64,
    pub candidates: (f64, f64),
    pub mse: (f64, f64),
    pub theta1: f64,
    pub theta2: f64,
    pub warnings: Vec<String>,
}

impl RegistrationResult {
    /// Flat `key=value` record, one pair per line.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        let pairs = [
            ("gamma_deg", self.gamma),
            ("candidate1_deg", self.candidates.0),
            ("candidate2_deg", self.candidates.1),
            ("mse1", self.mse.0),
            ("mse2", self.mse.1),
            ("theta1_deg", self.theta1),
            ("theta2_deg", self.theta2),
        ];
        for (k, v) in pairs {
            let _ = writeln!(out, "{k}={v:.16e}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning={w}");
        }
        out
    }
}

fn wrap_turn(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Mean squared difference between `x1` and `x2` rotated back by `gamma`,
/// over the central disk of radius `0.9 * min(H, W) / 2`.
pub fn masked_mse(x1: &Image, x2: &Image, gamma: f64) -> Result<f64> {
    if x1.shape() != x2.shape() {
        return Err(Error::ShapeMismatch {
            expected: x1.shape(),
            found: x2.shape(),
        });
    }
    if !gamma.is_finite() {
        return Err(Error::invalid("rotation angle must be finite"));
    }
    let back = rotate_any(x2, wrap_turn(-gamma));
    let (cx, cy) = x1.center();
    let radius = MSE_DISK_FRACTION * x1.width().min(x1.height()) as f64 / 2.0;
    let (mut sum, mut count) = (0.0, 0usize);
    for row in 0..x1.height() {
        for col in 0..x1.width() {
            let (dx, dy) = (col as f64 - cx, row as f64 - cy);
            if dx * dx + dy * dy <= radius * radius {
                let d = x1.get(row, col) - back.get(row, col);
                sum += d * d;
                count += 1;
            }
        }
    }
    Ok(sum / count as f64)
}

/// Registration with a prebuilt bank, reusable across many image pairs.
#[derive(Debug, Clone)]
pub struct Registrar {
    bank: FilterBank,
    window: WindowSpec,
    refine: bool,
}

impl Registrar {
    pub fn new(bank: FilterBank, window: WindowSpec) -> Self {
        Self {
            bank,
            window,
            refine: true,
        }
    }

    pub fn with_refine(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    fn orientation(&self, image: &Image, which: &str, warnings: &mut Vec<String>) -> Result<f64> {
        let profile: AngularProfile = image_profile(image, &self.bank, &self.window)?;
        let est = principal_orientation(&profile, self.refine).map_err(|e| {
            Error::DegenerateProfile(format!("registration failed on {which}: {e}"))
        })?;
        let ratio = profile.peak_to_mean();
        if ratio < ISOTROPY_WARNING_RATIO {
            warnings.push(format!(
                "{which} is nearly isotropic (peak/mean {ratio:.4}); orientation is unreliable"
            ));
        }
        Ok(est.eta)
    }

    pub fn register(&self, x1: &Image, x2: &Image) -> Result<RegistrationResult> {
        if x1.shape() != x2.shape() {
            return Err(Error::ShapeMismatch {
                expected: x1.shape(),
                found: x2.shape(),
            });
        }
        let mut warnings = Vec::new();
        let theta1 = self.orientation(x1, "image 1", &mut warnings)?;
        let theta2 = self.orientation(x2, "image 2", &mut warnings)?;
        let c1 = wrap_turn(theta2 - theta1);
        let c2 = wrap_turn(c1 + 180.0);
        let m1 = masked_mse(x1, x2, c1)?;
        let m2 = masked_mse(x1, x2, c2)?;
        Ok(RegistrationResult {
            gamma: if m2 < m1 * (1.0 - MSE_TIE_TOLERANCE) { c2 } else { c1 },
            candidates: (c1, c2),
            mse: (m1, m2),
            theta1,
            theta2,
            warnings,
        })
    }
}

/// One-shot registration with default filter parameters.
pub fn register(
    x1: &Image,
    x2: &Image,
    method: Method,
    window: WindowSpec,
    num_angles: usize,
) -> Result<RegistrationResult> {
    let bank = FilterBank::new(
        method,
        x1.height(),
        x1.width(),
        num_angles,
        &FilterParams::default(),
    )?;
    Registrar::new(bank, window).register(x1, x2)
}
