//! Synthetic test images with known angular content.
//!
//! Every generator is a pure function of its arguments (including the seed)
//! and returns a standardized image: zero mean, unit max-abs.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{dft2, inverse_dft2_real, FrequencyGrid, Image};
use crate::metrics::von_mises_reference_profile;
use crate::profile::AngularProfile;

/// Deterministic generator used throughout the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Known angular content of a generated image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruthKind {
    Isotropic,
    SingleAngle(f64),
    VonMises { mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub kind: TruthKind,
    /// Generator parameters, in insertion order.
    pub params: Vec<(String, String)>,
}

impl GroundTruth {
    fn new(kind: TruthKind) -> Self {
        Self {
            kind,
            params: Vec::new(),
        }
    }

    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    /// Angle the principal orientation should recover, if any.
    pub fn mode(&self) -> Option<f64> {
        match self.kind {
            TruthKind::Isotropic => None,
            TruthKind::SingleAngle(a) => Some(a),
            TruthKind::VonMises { mu, .. } => Some(mu),
        }
    }

    /// Normalized reference profile on the `M`-angle grid. A single angle
    /// is split linearly between its two neighbouring grid angles.
    pub fn reference_profile(&self, num_angles: usize) -> Result<AngularProfile> {
        if num_angles == 0 {
            return Err(Error::invalid("profile needs at least one angle"));
        }
        let values = match self.kind {
            TruthKind::Isotropic => vec![1.0 / num_angles as f64; num_angles],
            TruthKind::SingleAngle(a) => {
                let q = a.rem_euclid(180.0) / (180.0 / num_angles as f64);
                let i = q.floor() as usize % num_angles;
                let t = q - q.floor();
                let mut v = vec![0.0; num_angles];
                v[i] += 1.0 - t;
                v[(i + 1) % num_angles] += t;
                v
            }
            TruthKind::VonMises { mu, sigma } => {
                return von_mises_reference_profile(mu, sigma, num_angles)
            }
        };
        crate::profile::normalize(&AngularProfile::new(values)?)
    }

    /// Flat `key=value` record: `kind`, then the generator parameters.
    pub fn to_record(&self) -> String {
        let kind = match self.kind {
            TruthKind::Isotropic => "isotropic",
            TruthKind::SingleAngle(_) => "single_angle",
            TruthKind::VonMises { .. } => "von_mises",
        };
        let mut out = format!("kind={kind}\n");
        for (k, v) in &self.params {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

/// Oscillating atom profile `exp(-a^2 - b^2) cos(a sin(theta) - b cos(theta))`,
/// `theta` in degrees.
pub fn gabor_h(a: f64, b: f64, theta_deg: f64) -> f64 {
    let (sin, cos) = theta_deg.to_radians().sin_cos();
    (-a * a - b * b).exp() * (a * sin - b * cos).cos()
}

fn check_scale(s: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::invalid(format!("atom scale must be positive, got {s}")));
    }
    Ok(())
}

/// Atom `h_theta((a - u) / s, (b - v) / s)` on the pixel grid, with `a` the
/// row and `b` the column coordinate.
pub fn gabor_atom(
    theta_deg: f64,
    s: f64,
    u: f64,
    v: f64,
    width: usize,
    height: usize,
) -> Result<Image> {
    check_scale(s)?;
    Image::from_fn(width, height, |row, col| {
        gabor_h((row as f64 - u) / s, (col as f64 - v) / s, theta_deg)
    })
}

/// Beyond this many scales the atom envelope is below `exp(-49)`.
const ATOM_SUPPORT: f64 = 7.0;

fn add_atom(acc: &mut [f64], width: usize, height: usize, theta_deg: f64, s: f64, u: f64, v: f64) {
    let reach = ATOM_SUPPORT * s;
    let r0 = (u - reach).floor().max(0.0) as usize;
    let r1 = ((u + reach).ceil().max(0.0) as usize).min(height - 1);
    let c0 = (v - reach).floor().max(0.0) as usize;
    let c1 = ((v + reach).ceil().max(0.0) as usize).min(width - 1);
    for row in r0..=r1 {
        let a = (row as f64 - u) / s;
        for col in c0..=c1 {
            let b = (col as f64 - v) / s;
            acc[row * width + col] += gabor_h(a, b, theta_deg);
        }
    }
}

/// Draws an angle in `[0, 180)` degrees whose doubled angle follows a von
/// Mises law with mode `2 * mu` and concentration `sigma` (Best-Fisher
/// rejection sampling).
pub fn sample_von_mises_angle<R: Rng + ?Sized>(mu: f64, sigma: f64, rng: &mut R) -> f64 {
    let psi = if sigma < 1e-8 {
        PI * (2.0 * rng.random::<f64>() - 1.0)
    } else {
        let tau = 1.0 + (1.0 + 4.0 * sigma * sigma).sqrt();
        let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * sigma);
        let r = (1.0 + rho * rho) / (2.0 * rho);
        loop {
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let u3: f64 = rng.random();
            let z = (PI * u1).cos();
            let f = (1.0 + r * z) / (r + z);
            let c = sigma * (r - f);
            if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
                let angle = f.clamp(-1.0, 1.0).acos();
                break if u3 > 0.5 { angle } else { -angle };
            }
        }
    };
    let theta = (mu + psi * 90.0 / PI).rem_euclid(180.0);
    if theta >= 180.0 {
        0.0
    } else {
        theta
    }
}

/// Parameters of a Gabor-atom mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborMixSpec {
    pub atoms: usize,
    pub mu: f64,
    /// Von Mises concentration of the atom orientations.
    pub sigma: f64,
    /// Atom scales are uniform on `[lo, hi)` pixels.
    pub scale: (f64, f64),
    /// Atom centers are uniform over this central fraction of each axis.
    pub center_fraction: f64,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl Default for GaborMixSpec {
    fn default() -> Self {
        Self {
            atoms: 300,
            mu: 60.0,
            sigma: 20.0,
            scale: (4.0, 12.0),
            center_fraction: 0.8,
            width: 256,
            height: 256,
            seed: 0,
        }
    }
}

impl GaborMixSpec {
    pub fn validate(&self) -> Result<()> {
        if self.atoms == 0 {
            return Err(Error::invalid("a mixture needs at least one atom"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid(format!(
                "concentration must be >= 0, got {}",
                self.sigma
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::invalid("mu must be finite"));
        }
        let (lo, hi) = self.scale;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::invalid(format!(
                "scale interval must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
            )));
        }
        if !(self.center_fraction > 0.0 && self.center_fraction <= 1.0) {
            return Err(Error::invalid("center fraction must lie in (0, 1]"));
        }
        if self.width < Image::MIN_SIDE || self.height < Image::MIN_SIDE {
            return Err(Error::ImageTooSmall {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Sum of `atoms` Gabor atoms with von Mises orientations around `mu`.
pub fn gen_gabor_image(spec: &GaborMixSpec) -> Result<(Image, GroundTruth)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = seeded_rng(spec.seed);
    let margin = |n: usize| 0.5 * (1.0 - spec.center_fraction) * (n - 1) as f64;
    let (mr, mc) = (margin(h), margin(w));
    let mut acc = vec![0.0; w * h];
    for _ in 0..spec.atoms {
        let theta = sample_von_mises_angle(spec.mu, spec.sigma, &mut rng);
        let s = uniform(&mut rng, spec.scale.0, spec.scale.1);
        let u = uniform(&mut rng, mr, (h - 1) as f64 - mr);
        let v = uniform(&mut rng, mc, (w - 1) as f64 - mc);
        add_atom(&mut acc, w, h, theta, s, u, v);
    }
    let image = Image::new(w, h, acc)?.standardized();
    let truth = GroundTruth::new(TruthKind::VonMises {
        mu: spec.mu,
        sigma: spec.sigma,
    })
    .with("generator", "gabor")
    .with("atoms", spec.atoms)
    .with("mu", spec.mu)
    .with("sigma", spec.sigma)
    .with("scale_lo", spec.scale.0)
    .with("scale_hi", spec.scale.1)
    .with("center_fraction", spec.center_fraction)
    .with("width", w)
    .with("height", h)
    .with("seed", spec.seed);
    Ok((image, truth))
}

/// Plane wave `cos(2 pi (x cos(angle) + y sin(angle)) / wavelength)` in
/// centered coordinates (`x` to the right, `y` up). Its spectral power lies
/// on the profile angle `angle`.
pub fn gen_oriented_oscillation(
    angle_deg: f64,
    wavelength: f64,
    width: usize,
    height: usize,
) -> Result<(Image, GroundTruth)> {
    if !(wavelength.is_finite() && wavelength >= 3.0) {
        return Err(Error::invalid(format!(
            "wavelength must be at least 3 pixels, got {wavelength}"
        )));
    }
    if !angle_deg.is_finite() {
        return Err(Error::invalid("angle must be finite"));
    }
    let (sin, cos) = crate::grid::sin_cos_deg(angle_deg);
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let image = Image::from_fn(width, height, |row, col| {
        let (x, y) = (col as f64 - cx, cy - row as f64);
        (2.0 * PI * (x * cos + y * sin) / wavelength).cos()
    })?
    .standardized();
    let truth = GroundTruth::new(TruthKind::SingleAngle(angle_deg.rem_euclid(180.0)))
        .with("generator", "oscillation")
        .with("angle", angle_deg)
        .with("wavelength", wavelength)
        .with("width", width)
        .with("height", height);
    Ok((image, truth))
}

/// Pass band of the isotropic generator, as fractions of the Nyquist radius.
pub const ISOTROPIC_BAND: (f64, f64) = (0.2, 0.8);
/// Width of the Hann roll-off on each side of the band.
pub const ISOTROPIC_EDGE: f64 = 0.05;

fn isotropic_gain(t: f64) -> f64 {
    let (lo, hi) = ISOTROPIC_BAND;
    let e = ISOTROPIC_EDGE;
    if t < lo - e || t > hi + e {
        0.0
    } else if t < lo {
        0.5 * (1.0 - (PI * (t - (lo - e)) / e).cos())
    } else if t > hi {
        0.5 * (1.0 + (PI * (t - hi) / e).cos())
    } else {
        1.0
    }
}

/// White Gaussian noise through a radially symmetric band-pass filter.
pub fn gen_isotropic(width: usize, height: usize, seed: u64) -> Result<(Image, GroundTruth)> {
    let mut rng = seeded_rng(seed);
    let noise = Image::from_fn(width, height, |_, _| rng.sample(StandardNormal))?;
    let spectrum = dft2(&noise);
    let grid = FrequencyGrid::new(width, height);
    let nyquist = grid.nyquist_radius();
    let filtered: Vec<Complex64> = spectrum
        .bins()
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let (a, b) = grid.coords(i);
            let t = ((a * a + b * b) as f64).sqrt() / nyquist;
            c * isotropic_gain(t)
        })
        .collect();
    let image = Image::new(width, height, inverse_dft2_real(width, height, &filtered))?
        .standardized();
    let truth = GroundTruth::new(TruthKind::Isotropic)
        .with("generator", "isotropic")
        .with("band_lo", ISOTROPIC_BAND.0)
        .with("band_hi", ISOTROPIC_BAND.1)
        .with("width", width)
        .with("height", height)
        .with("seed", seed);
    Ok((image, truth))
}
