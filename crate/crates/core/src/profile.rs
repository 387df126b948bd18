//! Angular power profiles and principal orientation.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::grid::{periodogram, Image, Psd, WindowSpec};

/// Energy per analysis angle `theta_m = m * 180 / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularProfile {
    values: Vec<f64>,
    normalized: bool,
}

impl AngularProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a profile needs at least one angle"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(format!(
                "profile value {i} is negative or not finite: {}",
                values[i]
            )));
        }
        Ok(Self {
            values,
            normalized: false,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Grid spacing `180 / M` in degrees.
    pub fn step(&self) -> f64 {
        180.0 / self.len() as f64
    }

    pub fn angle(&self, m: usize) -> f64 {
        m as f64 * self.step()
    }

    pub fn angles_deg(&self) -> Vec<f64> {
        (0..self.len()).map(|m| self.angle(m)).collect()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Ratio of the largest value to the mean; 1 for a flat profile.
    pub fn peak_to_mean(&self) -> f64 {
        let mean = self.sum() / self.len() as f64;
        let peak = self.values.iter().cloned().fold(0.0, f64::max);
        if mean > 0.0 {
            peak / mean
        } else {
            0.0
        }
    }

    /// CSV with header `angle_deg,value`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle_deg,value\n");
        for (m, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e}", self.angle(m), v);
        }
        out
    }

    /// Parses the CSV produced by [`AngularProfile::to_csv`]. Angles must lie
    /// on the uniform grid implied by the row count.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "angle_deg,value" => {}
            _ => return Err(Error::Format("expected header 'angle_deg,value'".into())),
        }
        let mut rows = Vec::new();
        for line in lines {
            let (a, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("bad profile row '{line}'")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad number '{s}'")))
            };
            rows.push((parse(a)?, parse(v)?));
        }
        let step = 180.0 / rows.len().max(1) as f64;
        for (m, (a, _)) in rows.iter().enumerate() {
            if (a - m as f64 * step).abs() > 1e-9 {
                return Err(Error::Format(format!(
                    "row {m} has angle {a}, expected {}",
                    m as f64 * step
                )));
            }
        }
        let values: Vec<f64> = rows.into_iter().map(|(_, v)| v).collect();
        let mut profile = Self::new(values)?;
        profile.normalized = (profile.sum() - 1.0).abs() <= 1e-9;
        Ok(profile)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// `rho_m = sum over xi of mask_m(xi) * psd(xi)`, not normalized.
pub fn angular_profile(psd: &Psd, bank: &FilterBank) -> Result<AngularProfile> {
    if psd.shape() != bank.shape() {
        return Err(Error::ShapeMismatch {
            expected: bank.shape(),
            found: psd.shape(),
        });
    }
    let mut values = vec![0.0; bank.num_angles()];
    for (i, &p) in psd.bins().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for e in bank.entries_at(i) {
            values[e.angle as usize] += e.weight * p;
        }
    }
    AngularProfile::new(values)
}

/// Windowed periodogram followed by [`angular_profile`].
pub fn image_profile(
    image: &Image,
    bank: &FilterBank,
    window: &WindowSpec,
) -> Result<AngularProfile> {
    angular_profile(&periodogram(image, window), bank)
}

pub fn normalize(profile: &AngularProfile) -> Result<AngularProfile> {
    if profile.normalized {
        return Ok(profile.clone());
    }
    let sum = profile.sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateProfile(
            "profile has no energy (empty or constant image?)".into(),
        ));
    }
    Ok(AngularProfile {
        values: profile.values.iter().map(|v| v / sum).collect(),
        normalized: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationEstimate {
    /// Principal orientation in `[0, 180)` degrees.
    pub eta: f64,
    pub refined: bool,
    pub peak: f64,
}

/// Grid argmax (ties to the smallest index), optionally refined by a
/// three-point parabola through the circular neighbours.
pub fn principal_orientation(profile: &AngularProfile, refine: bool) -> Result<OrientationEstimate> {
    let v = profile.values();
    let (m, peak) = v
        .iter()
        .enumerate()
        .fold((0, v[0]), |best, (i, &x)| if x > best.1 { (i, x) } else { best });
    if !(peak > 0.0) {
        return Err(Error::DegenerateProfile(
            "profile is identically zero".into(),
        ));
    }
    let n = v.len();
    let mut eta = profile.angle(m);
    if refine && n >= 3 {
        let (lo, hi) = (v[(m + n - 1) % n], v[(m + 1) % n]);
        let den = lo - 2.0 * peak + hi;
        let delta = if den.abs() < 1e-12 {
            0.0
        } else {
            (0.5 * (lo - hi) / den).clamp(-0.5, 0.5)
        };
        eta = wrap_half_turn(eta + delta * profile.step());
    }
    Ok(OrientationEstimate {
        eta,
        refined: refine,
        peak,
    })
}

/// Maps degrees into `[0, 180)`.
pub fn wrap_half_turn(deg: f64) -> f64 {
    let w = deg.rem_euclid(180.0);
    if w >= 180.0 {
        0.0
    } else {
        w
    }
}

/// Resamples the profile at `theta_m - delta` by circular linear
/// interpolation, so a feature at `theta` moves to `theta + delta`.
pub fn circular_shift_profile(profile: &AngularProfile, delta: f64) -> AngularProfile {
    let n = profile.len();
    let v = profile.values();
    let shift = delta / profile.step();
    let values = if (shift - shift.round()).abs() < 1e-9 {
        let k = (shift.round() as i64).rem_euclid(n as i64) as usize;
        (0..n).map(|m| v[(m + n - k) % n]).collect()
    } else {
        (0..n)
            .map(|m| {
                let q = (m as f64 - shift).rem_euclid(n as f64);
                let i = (q.floor() as usize) % n;
                let t = q - q.floor();
                (1.0 - t) * v[i] + t * v[(i + 1) % n]
            })
            .collect()
    };
    AngularProfile {
        values,
        normalized: profile.normalized,
    }
}
