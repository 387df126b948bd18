//! Oriented spectral filter banks: cake wavelets, ridge filters and the
//! angular binning baseline.
//!
//! A bank holds `M` nonnegative weight masks over the centered frequency grid,
//! one per analysis angle `theta_m = m * 180 / M` degrees. All banks work on
//! frequency angles folded to `[0, 180)`, so every mask is centrally
//! symmetric. Angles are counter-clockwise with the vertical axis pointing up
//! (see [`crate::grid`]).
//!
//! Masks are stored sparsely per frequency bin: each bin lists the angles it
//! contributes to together with its weight.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, Image};

/// Profile estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    CakeWavelet,
    Ridge,
    Binning,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::CakeWavelet, Method::Ridge, Method::Binning];

    pub fn name(&self) -> &'static str {
        match self {
            Method::CakeWavelet => "cake",
            Method::Ridge => "ridge",
            Method::Binning => "binning",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cake" | "cake-wavelet" | "cakewavelet" => Ok(Method::CakeWavelet),
            "ridge" => Ok(Method::Ridge),
            "binning" | "bin" => Ok(Method::Binning),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// Radial pass band as fractions of the Nyquist radius `min(H, W) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBand {
    pub lo: f64,
    pub hi: f64,
}

impl Default for RadialBand {
    fn default() -> Self {
        Self { lo: 0.02, hi: 1.0 }
    }
}

impl RadialBand {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo >= 0.0 && self.lo < self.hi && self.hi <= 1.0) {
            return Err(Error::invalid(format!(
                "radial band must satisfy 0 <= lo < hi <= 1, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// Whether a frequency at `radius` lies in the band. DC never does.
    pub fn contains(&self, radius: f64, nyquist: f64) -> bool {
        radius > 0.0 && radius >= self.lo * nyquist && radius <= self.hi * nyquist
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CakeParams {
    /// Power `p` of the raised-cosine angular window.
    pub exponent: f64,
    pub band: RadialBand,
}

impl Default for CakeParams {
    fn default() -> Self {
        Self {
            exponent: 2.0,
            band: RadialBand::default(),
        }
    }
}

impl CakeParams {
    /// Angular half-width of a wedge, in grid steps.
    pub const OVERLAP: f64 = 2.0;

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent.is_finite() && self.exponent >= 1.0) {
            return Err(Error::invalid(format!(
                "cake exponent must be >= 1, got {}",
                self.exponent
            )));
        }
        self.band.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeParams {
    /// Perpendicular Gaussian width in frequency bins.
    pub sigma: f64,
    pub band: RadialBand,
}

impl Default for RidgeParams {
    fn default() -> Self {
        Self {
            sigma: 1.5,
            band: RadialBand::default(),
        }
    }
}

impl RidgeParams {
    /// Ridge weights below this are not stored.
    pub const WEIGHT_FLOOR: f64 = 1e-12;

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::invalid(format!(
                "ridge sigma must be positive, got {}",
                self.sigma
            )));
        }
        self.band.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterParams {
    pub cake: CakeParams,
    pub ridge: RidgeParams,
}

/// An angle in `[0, 180)` split as `quarter * 90 + rem` with `rem` in
/// `[0, 90)`. Differences are taken quarter-wise first, which keeps
/// quarter-turn rotations of the frequency grid exact in floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct QuarterAngle {
    quarter: u8,
    rem: f64,
}

impl QuarterAngle {
    fn degrees(self) -> f64 {
        self.quarter as f64 * 90.0 + self.rem
    }

    /// Signed offset `self - other` wrapped to `[-90, 90)`. Only the parity
    /// of the quarter difference enters, so adding a quarter turn to both
    /// sides leaves the result bit-identical.
    fn offset_from(self, other: QuarterAngle) -> f64 {
        let r = self.rem - other.rem;
        if (self.quarter + other.quarter) % 2 == 0 {
            r
        } else if r >= 0.0 {
            r - 90.0
        } else {
            r + 90.0
        }
    }
}

/// Folded angle of a nonzero frequency `(fx, fy)` given with `fy` pointing up.
fn folded_angle(fx: i64, fy: i64) -> QuarterAngle {
    let (x, y) = if fy < 0 || (fy == 0 && fx < 0) {
        (-fx, -fy)
    } else {
        (fx, fy)
    };
    if x > 0 {
        QuarterAngle {
            quarter: 0,
            rem: (y as f64).atan2(x as f64).to_degrees(),
        }
    } else {
        // (x, y) rotated by -90 degrees lands in the first quadrant
        QuarterAngle {
            quarter: 1,
            rem: ((-x) as f64).atan2(y as f64).to_degrees(),
        }
    }
}

/// Analysis angle grid `theta_m = m * 180 / M`.
#[derive(Debug, Clone)]
struct AngleGrid {
    count: usize,
    step: f64,
    angles: Vec<QuarterAngle>,
}

impl AngleGrid {
    fn new(count: usize) -> Self {
        let step = 180.0 / count as f64;
        let angles = (0..count)
            .map(|m| {
                if count % 2 == 0 {
                    let half = count / 2;
                    QuarterAngle {
                        quarter: (m / half) as u8,
                        rem: (m % half) as f64 * step,
                    }
                } else {
                    let theta = m as f64 * step;
                    if theta >= 90.0 {
                        QuarterAngle {
                            quarter: 1,
                            rem: theta - 90.0,
                        }
                    } else {
                        QuarterAngle {
                            quarter: 0,
                            rem: theta,
                        }
                    }
                }
            })
            .collect();
        Self {
            count,
            step,
            angles,
        }
    }

    /// Grid index just below `angle`; shifts by exactly `M / 2` under a
    /// quarter turn when `M` is even.
    fn floor_index(&self, angle: QuarterAngle) -> usize {
        if self.count % 2 == 0 {
            let below = ((angle.rem / self.step).floor() as usize).min(self.count / 2 - 1);
            angle.quarter as usize * (self.count / 2) + below
        } else {
            ((angle.degrees() / self.step).floor() as usize).min(self.count - 1)
        }
    }

    /// `span` consecutive grid indices (mod M) centered on the floor index.
    fn around(&self, angle: QuarterAngle, span: usize) -> impl Iterator<Item = usize> {
        let span = span.min(self.count);
        let start = (self.floor_index(angle) + self.count - span / 2) % self.count;
        let count = self.count;
        (0..span).map(move |j| (start + j) % count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankEntry {
    pub angle: u32,
    pub weight: f64,
}

/// `M` oriented spectral masks over a `height x width` frequency grid.
#[derive(Debug, Clone)]
pub struct FilterBank {
    method: Method,
    grid: FrequencyGrid,
    angles_deg: Vec<f64>,
    offsets: Vec<usize>,
    entries: Vec<BankEntry>,
}

impl FilterBank {
    pub const MIN_ANGLES: usize = 4;

    /// Builds the bank for `method`, taking its parameters from `params`.
    pub fn new(
        method: Method,
        height: usize,
        width: usize,
        count: usize,
        params: &FilterParams,
    ) -> Result<Self> {
        match method {
            Method::CakeWavelet => make_cake_bank(height, width, count, &params.cake),
            Method::Ridge => make_ridge_bank(height, width, count, &params.ridge),
            Method::Binning => make_binning_bank(height, width, count),
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    /// `(height, width)` of the frequency grid.
    pub fn shape(&self) -> (usize, usize) {
        (self.grid.height, self.grid.width)
    }

    pub fn num_angles(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    /// Nonzero weights of the frequency bin at `index`.
    pub fn entries_at(&self, index: usize) -> &[BankEntry] {
        &self.entries[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn weight(&self, angle: usize, index: usize) -> f64 {
        self.entries_at(index)
            .iter()
            .find(|e| e.angle as usize == angle)
            .map_or(0.0, |e| e.weight)
    }

    /// Dense mask of angle `m` in the centered layout.
    pub fn mask(&self, angle: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (i, v) in out.iter_mut().enumerate() {
            for e in self.entries_at(i) {
                if e.angle as usize == angle {
                    *v = e.weight;
                }
            }
        }
        out
    }

    /// Mask of angle `m` as an image, for visual inspection.
    pub fn mask_image(&self, angle: usize) -> Result<Image> {
        Image::new(self.grid.width, self.grid.height, self.mask(angle))
    }

    fn build(
        method: Method,
        height: usize,
        width: usize,
        count: usize,
        mut weights_at: impl FnMut(i64, i64, &mut Vec<BankEntry>),
    ) -> Result<Self> {
        if count < Self::MIN_ANGLES {
            return Err(Error::invalid(format!(
                "at least {} analysis angles are required, got {count}",
                Self::MIN_ANGLES
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::invalid("frequency grid must be nonempty"));
        }
        let grid = FrequencyGrid::new(width, height);
        let mut offsets = Vec::with_capacity(grid.len() + 1);
        let mut entries = Vec::new();
        let mut scratch = Vec::new();
        offsets.push(0);
        for i in 0..grid.len() {
            let (xi1, xi2) = grid.coords(i);
            scratch.clear();
            if (xi1, xi2) != (0, 0) {
                weights_at(xi1, -xi2, &mut scratch);
            }
            entries.extend(scratch.iter().filter(|e| e.weight > 0.0));
            offsets.push(entries.len());
        }
        if entries.is_empty() {
            return Err(Error::invalid(
                "the radial band contains no frequency of the grid",
            ));
        }
        let step = 180.0 / count as f64;
        Ok(Self {
            method,
            grid,
            angles_deg: (0..count).map(|m| m as f64 * step).collect(),
            offsets,
            entries,
        })
    }
}

/// Cake wavelet bank: raised-cosine wedges `cos^p(pi d / (2 D))` with
/// half-width `D = 2 * 180 / M`, restricted to the radial band and normalized
/// to a partition of unity on it.
pub fn make_cake_bank(
    height: usize,
    width: usize,
    count: usize,
    params: &CakeParams,
) -> Result<FilterBank> {
    params.validate()?;
    let grid = AngleGrid::new(count.max(1));
    let half_width = CakeParams::OVERLAP * grid.step;
    let span = 2 * (CakeParams::OVERLAP.ceil() as usize + 1) + 1;
    let nyquist = FrequencyGrid::new(width, height).nyquist_radius();
    FilterBank::build(
        Method::CakeWavelet,
        height,
        width,
        count,
        |fx, fy, out| {
            let radius = ((fx * fx + fy * fy) as f64).sqrt();
            if !params.band.contains(radius, nyquist) {
                return;
            }
            let alpha = folded_angle(fx, fy);
            let mut total = 0.0;
            for m in grid.around(alpha, span) {
                let d = alpha.offset_from(grid.angles[m]).abs();
                if d < half_width {
                    let w = (std::f64::consts::PI * d / (2.0 * half_width))
                        .cos()
                        .powf(params.exponent);
                    total += w;
                    out.push(BankEntry {
                        angle: m as u32,
                        weight: w,
                    });
                }
            }
            if total > 0.0 {
                out.iter_mut().for_each(|e| e.weight /= total);
            }
        },
    )
}

/// Ridge bank: Gaussian of the perpendicular distance to the line through
/// the origin at `theta_m`, restricted to the radial band.
pub fn make_ridge_bank(
    height: usize,
    width: usize,
    count: usize,
    params: &RidgeParams,
) -> Result<FilterBank> {
    params.validate()?;
    let grid = AngleGrid::new(count.max(1));
    let trig: Vec<(f64, f64)> = grid.angles.iter().map(|a| a.rem.to_radians().sin_cos()).collect();
    let nyquist = FrequencyGrid::new(width, height).nyquist_radius();
    let two_var = 2.0 * params.sigma * params.sigma;
    let cutoff = params.sigma * (-2.0 * RidgeParams::WEIGHT_FLOOR.ln()).sqrt();
    FilterBank::build(Method::Ridge, height, width, count, |fx, fy, out| {
        let radius = ((fx * fx + fy * fy) as f64).sqrt();
        if !params.band.contains(radius, nyquist) {
            return;
        }
        for (m, angle) in grid.angles.iter().enumerate() {
            // undo the quarter turns exactly, then measure against `rem`
            let (x, y) = if angle.quarter == 0 {
                (fx as f64, fy as f64)
            } else {
                (fy as f64, -fx as f64)
            };
            let (sin, cos) = trig[m];
            let d = (-x * sin + y * cos).abs();
            if d <= cutoff {
                let w = (-d * d / two_var).exp();
                if w >= RidgeParams::WEIGHT_FLOOR {
                    out.push(BankEntry {
                        angle: m as u32,
                        weight: w,
                    });
                }
            }
        }
    })
}

/// Binning bank: every nonzero frequency goes to the grid angle nearest to its
/// folded angle (ties to the smaller index).
pub fn make_binning_bank(height: usize, width: usize, count: usize) -> Result<FilterBank> {
    let grid = AngleGrid::new(count.max(1));
    FilterBank::build(Method::Binning, height, width, count, |fx, fy, out| {
        let alpha = folded_angle(fx, fy);
        let mut best: Option<(f64, usize)> = None;
        for m in grid.around(alpha, 5) {
            let d = alpha.offset_from(grid.angles[m]).abs();
            best = match best {
                Some((bd, bm)) if bd < d || (bd == d && bm < m) => Some((bd, bm)),
                _ => Some((d, m)),
            };
        }
        let (_, m) = best.expect("angle grid is nonempty");
        out.push(BankEntry {
            angle: m as u32,
            weight: 1.0,
        });
    })
}

/// Integer Bresenham rasterization from `p0` to `p1`, both included.
pub fn bresenham_line(p0: (i64, i64), p1: (i64, i64)) -> Vec<(i64, i64)> {
    let dx = (p1.0 - p0.0).abs();
    let dy = -(p1.1 - p0.1).abs();
    let sx = if p0.0 < p1.0 { 1 } else { -1 };
    let sy = if p0.1 < p1.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = p0;
    let mut points = Vec::with_capacity(dx.max(-dy) as usize + 1);
    loop {
        points.push((x, y));
        if (x, y) == p1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    points
}

/// Binary mask of the Bresenham line through the zero frequency at
/// `angle_deg`, drawn out to the Nyquist radius in both directions. The zero
/// frequency itself is left at 0.
pub fn rasterized_line_mask(height: usize, width: usize, angle_deg: f64) -> Vec<f64> {
    let grid = FrequencyGrid::new(width, height);
    let r = grid.nyquist_radius();
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let end = ((r * cos).round() as i64, (r * sin).round() as i64);
    let mut mask = vec![0.0; grid.len()];
    for sign in [1, -1] {
        for (fx, fy) in bresenham_line((0, 0), (sign * end.0, sign * end.1)) {
            if let Some(i) = grid.index(fx, -fy) {
                mask[i] = 1.0;
            }
        }
    }
    mask[grid.dc_index()] = 0.0;
    mask
}
