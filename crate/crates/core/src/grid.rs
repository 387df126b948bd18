//! Images, windowing, rotation, the 2D DFT and periodogram estimation.
//!
//! Pixel and frequency conventions used across the crate:
//!
//! * Images are row-major, `height` rows of `width` samples.
//! * The image plane uses Cartesian coordinates centered on the pixel-grid
//!   center `((width - 1) / 2, (height - 1) / 2)`, with `x` growing with the
//!   column index and `y` pointing *up* (decreasing row index). Positive
//!   rotation angles are counter-clockwise as displayed.
//! * Spectra use a centered layout: bin `(row, col)` holds the frequency
//!   `(xi1, xi2) = (col - width / 2, row - height / 2)` (integer division), so
//!   `xi_i` ranges over `-floor(n/2) ..= ceil(n/2) - 1` cycles per image.
//!   `xi2` follows the row direction, so the frequency angle measured in the
//!   same counter-clockwise convention as the image plane is
//!   `atan2(-xi2, xi1)`.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// A real-valued image with finite samples, at least 8x8.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl Image {
    pub const MIN_SIDE: usize = 8;

    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width < Self::MIN_SIDE || height < Self::MIN_SIDE {
            return Err(Error::ImageTooSmall { width, height });
        }
        if samples.len() != width * height {
            return Err(Error::SampleCount {
                expected: width * height,
                found: samples.len(),
            });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    /// Builds an image by evaluating `f(row, col)` on every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                samples.push(f(row, col));
            }
        }
        Self::new(width, height, samples)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.samples[row * self.width + col]
    }

    /// Geometric center `(cx, cy)` in (column, row) index units.
    pub fn center(&self) -> (f64, f64) {
        (
            (self.width as f64 - 1.0) / 2.0,
            (self.height as f64 - 1.0) / 2.0,
        )
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// Shifts to zero mean and scales to unit max-abs. Constant images are
    /// only shifted.
    pub fn standardized(mut self) -> Self {
        let mean = self.mean();
        self.samples.iter_mut().for_each(|v| *v -= mean);
        let peak = self.max_abs();
        if peak > 0.0 {
            self.samples.iter_mut().for_each(|v| *v /= peak);
        }
        self
    }
}

/// Centered frequency grid of a `height x width` DFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyGrid {
    pub width: usize,
    pub height: usize,
}

impl FrequencyGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(xi1, xi2)` of the bin stored at `index`.
    pub fn coords(&self, index: usize) -> (i64, i64) {
        let row = index / self.width;
        let col = index % self.width;
        (
            col as i64 - (self.width / 2) as i64,
            row as i64 - (self.height / 2) as i64,
        )
    }

    /// Storage index of frequency `(xi1, xi2)`, if it lies on the grid.
    pub fn index(&self, xi1: i64, xi2: i64) -> Option<usize> {
        let col = xi1 + (self.width / 2) as i64;
        let row = xi2 + (self.height / 2) as i64;
        if col < 0 || row < 0 || col >= self.width as i64 || row >= self.height as i64 {
            return None;
        }
        Some(row as usize * self.width + col as usize)
    }

    /// Index of `-xi` using DFT periodicity, defined for every bin.
    pub fn mirror(&self, index: usize) -> usize {
        let (xi1, xi2) = self.coords(index);
        let w = self.width as i64;
        let h = self.height as i64;
        let wrap = |v: i64, n: i64| {
            let lo = -(n / 2);
            (v - lo).rem_euclid(n) + lo
        };
        self.index(wrap(-xi1, w), wrap(-xi2, h))
            .expect("wrapped frequency lies on the grid")
    }

    pub fn dc_index(&self) -> usize {
        (self.height / 2) * self.width + self.width / 2
    }

    /// Radius of the Nyquist disk in frequency bins, `min(H, W) / 2`.
    pub fn nyquist_radius(&self) -> f64 {
        self.width.min(self.height) as f64 / 2.0
    }
}

/// Complex DFT coefficients in the centered layout.
#[derive(Debug, Clone)]
pub struct Spectrum {
    width: usize,
    height: usize,
    bins: Vec<Complex64>,
}

impl Spectrum {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn grid(&self) -> FrequencyGrid {
        FrequencyGrid::new(self.width, self.height)
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn at(&self, xi1: i64, xi2: i64) -> Option<Complex64> {
        self.grid().index(xi1, xi2).map(|i| self.bins[i])
    }
}

/// Nonnegative power spectral density on the centered frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    width: usize,
    height: usize,
    bins: Vec<f64>,
}

impl Psd {
    pub fn new(width: usize, height: usize, bins: Vec<f64>) -> Result<Self> {
        if bins.len() != width * height {
            return Err(Error::SampleCount {
                expected: width * height,
                found: bins.len(),
            });
        }
        if let Some(i) = bins.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Format(format!(
                "psd bin {i} is negative or not finite"
            )));
        }
        Ok(Self {
            width,
            height,
            bins,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bins: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn grid(&self) -> FrequencyGrid {
        FrequencyGrid::new(self.width, self.height)
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn at(&self, xi1: i64, xi2: i64) -> Option<f64> {
        self.grid().index(xi1, xi2).map(|i| self.bins[i])
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Radial Hann taper `0.5 (1 + cos(pi r / R))` on a disk of radius `R`.
    DiskHann,
    None,
}

/// Spatial window applied before the DFT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    kind: WindowKind,
    radius: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            kind: WindowKind::DiskHann,
            radius: 1.0,
        }
    }
}

impl WindowSpec {
    pub fn none() -> Self {
        Self {
            kind: WindowKind::None,
            radius: 1.0,
        }
    }

    /// Disk Hann window whose support radius is `radius * min(H, W) / 2`.
    pub fn disk_hann(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!(
                "window radius fraction must be positive, got {radius}"
            )));
        }
        Ok(Self {
            kind: WindowKind::DiskHann,
            radius,
        })
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Window weight at pixel `(row, col)` of a `height x width` grid.
    pub fn weight(&self, width: usize, height: usize, row: usize, col: usize) -> f64 {
        match self.kind {
            WindowKind::None => 1.0,
            WindowKind::DiskHann => {
                let cx = (width as f64 - 1.0) / 2.0;
                let cy = (height as f64 - 1.0) / 2.0;
                let support = self.radius * width.min(height) as f64 / 2.0;
                let r = (col as f64 - cx).hypot(row as f64 - cy);
                if r <= support {
                    0.5 * (1.0 + (std::f64::consts::PI * r / support).cos())
                } else {
                    0.0
                }
            }
        }
    }
}

/// Multiplies the image by the window field.
pub fn apply_window(image: &Image, spec: &WindowSpec) -> Image {
    if spec.kind == WindowKind::None {
        return image.clone();
    }
    let (w, h) = (image.width, image.height);
    let samples = image
        .samples
        .iter()
        .enumerate()
        .map(|(i, v)| v * spec.weight(w, h, i / w, i % w))
        .collect();
    Image {
        width: w,
        height: h,
        samples,
    }
}

/// `(sin, cos)` of an angle in degrees, exact on multiples of 90 degrees.
pub(crate) fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    if r == 0.0 {
        (0.0, 1.0)
    } else if r == 90.0 {
        (1.0, 0.0)
    } else if r == 180.0 {
        (0.0, -1.0)
    } else if r == 270.0 {
        (-1.0, 0.0)
    } else {
        r.to_radians().sin_cos()
    }
}

// Positions this close outside the sample lattice are snapped onto it so that
// exact rotations do not lose border pixels to rounding.
const EDGE_SNAP: f64 = 1e-9;

fn bilinear(image: &Image, x: f64, y: f64) -> f64 {
    let xmax = (image.width - 1) as f64;
    let ymax = (image.height - 1) as f64;
    let snap = |v: f64, max: f64| {
        if v < 0.0 && v >= -EDGE_SNAP {
            0.0
        } else if v > max && v <= max + EDGE_SNAP {
            max
        } else {
            v
        }
    };
    let x = snap(x, xmax);
    let y = snap(y, ymax);
    if !(0.0..=xmax).contains(&x) || !(0.0..=ymax).contains(&y) {
        return 0.0;
    }
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let c0 = x0 as usize;
    let r0 = y0 as usize;
    let c1 = (c0 + 1).min(image.width - 1);
    let r1 = (r0 + 1).min(image.height - 1);
    let top = image.get(r0, c0) * (1.0 - fx) + image.get(r0, c1) * fx;
    let bottom = image.get(r1, c0) * (1.0 - fx) + image.get(r1, c1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Rotates counter-clockwise by `angle_deg` about the pixel-grid center with
/// bilinear interpolation; pixels sampled from outside the input are 0.
pub fn rotate_bilinear(image: &Image, angle_deg: f64) -> Result<Image> {
    if !(0.0..360.0).contains(&angle_deg) {
        return Err(Error::invalid(format!(
            "rotation angle must lie in [0, 360), got {angle_deg}"
        )));
    }
    Ok(rotate_any(image, angle_deg))
}

pub(crate) fn rotate_any(image: &Image, angle_deg: f64) -> Image {
    if angle_deg.rem_euclid(360.0) == 0.0 {
        return image.clone();
    }
    let (sin, cos) = sin_cos_deg(angle_deg);
    let (cx, cy) = image.center();
    let mut samples = Vec::with_capacity(image.samples.len());
    for row in 0..image.height {
        let uy = cy - row as f64;
        for col in 0..image.width {
            let ux = col as f64 - cx;
            // inverse rotation of the output position
            let sx = cos * ux + sin * uy;
            let sy = -sin * ux + cos * uy;
            samples.push(bilinear(image, cx + sx, cy - sy));
        }
    }
    Image {
        width: image.width,
        height: image.height,
        samples,
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
    dst
}

/// Unnormalized 2D FFT of a row-major buffer, natural (uncentered) order.
fn fft2_in_place(data: &mut Vec<Complex64>, width: usize, height: usize, inverse: bool) {
    plan(width, inverse).process(data);
    let mut t = transpose(data, height, width);
    plan(height, inverse).process(&mut t);
    *data = transpose(&t, width, height);
}

fn centered_to_natural(n: usize, j: usize) -> usize {
    (j + n - n / 2) % n
}

fn shift_to_centered(natural: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(natural.len());
    for row in 0..height {
        let r = centered_to_natural(height, row);
        for col in 0..width {
            out.push(natural[r * width + centered_to_natural(width, col)]);
        }
    }
    out
}

/// Unnormalized forward 2D DFT in the centered frequency layout.
pub fn dft2(image: &Image) -> Spectrum {
    let (w, h) = (image.width, image.height);
    let mut data: Vec<Complex64> = image
        .samples
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft2_in_place(&mut data, w, h, false);
    Spectrum {
        width: w,
        height: h,
        bins: shift_to_centered(&data, w, h),
    }
}

/// Real part of the normalized inverse DFT of centered-layout coefficients.
pub(crate) fn inverse_dft2_real(width: usize, height: usize, centered: &[Complex64]) -> Vec<f64> {
    let mut natural = vec![Complex64::new(0.0, 0.0); centered.len()];
    for row in 0..height {
        let r = centered_to_natural(height, row);
        for col in 0..width {
            natural[r * width + centered_to_natural(width, col)] = centered[row * width + col];
        }
    }
    fft2_in_place(&mut natural, width, height, true);
    let scale = 1.0 / (width * height) as f64;
    natural.iter().map(|c| c.re * scale).collect()
}

/// Squared magnitudes of a spectrum, DC included.
pub fn power_spectrum(spectrum: &Spectrum) -> Psd {
    Psd {
        width: spectrum.width,
        height: spectrum.height,
        bins: spectrum.bins.iter().map(|c| c.norm_sqr()).collect(),
    }
}

/// Windowed periodogram `|DFT(w x)|^2` with the DC bin zeroed.
pub fn periodogram(image: &Image, window: &WindowSpec) -> Psd {
    let windowed = apply_window(image, window);
    let mut psd = power_spectrum(&dft2(&windowed));
    let dc = psd.grid().dc_index();
    psd.bins[dc] = 0.0;
    psd
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |r, c| (r * w + c) as f64 * 0.01 + ((r * 7 + c * 3) % 5) as f64)
            .unwrap()
    }

    #[test]
    fn rejects_small_and_nonfinite_images() {
        assert!(matches!(
            Image::filled(7, 8, 0.0),
            Err(Error::ImageTooSmall { .. })
        ));
        let mut s = vec![0.0; 64];
        s[10] = f64::NAN;
        assert!(matches!(Image::new(8, 8, s), Err(Error::NonFinite(10))));
        assert!(matches!(
            Image::new(8, 8, vec![0.0; 63]),
            Err(Error::SampleCount { .. })
        ));
    }

    #[test]
    fn no_window_is_identity() {
        let img = ramp(12, 9);
        assert_eq!(apply_window(&img, &WindowSpec::none()), img);
    }

    #[test]
    fn disk_hann_center_and_corners() {
        let ones = Image::filled(65, 65, 1.0).unwrap();
        let w = apply_window(&ones, &WindowSpec::default());
        assert_eq!(w.get(32, 32), 1.0);
        for (r, c) in [(0, 0), (0, 64), (64, 0), (64, 64)] {
            assert_eq!(w.get(r, c), 0.0);
        }
        assert!(w.samples().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn disk_hann_sum_matches_closed_form() {
        let ones = Image::filled(64, 64, 1.0).unwrap();
        let total: f64 = apply_window(&ones, &WindowSpec::default())
            .samples()
            .iter()
            .sum();
        let mut oracle = 0.0;
        for row in 0..64 {
            for col in 0..64 {
                let r = (col as f64 - 31.5).hypot(row as f64 - 31.5);
                if r <= 32.0 {
                    oracle += 0.5 * (1.0 + (std::f64::consts::PI * r / 32.0).cos());
                }
            }
        }
        assert!((total - oracle).abs() <= 1e-9 * oracle);
    }

    #[test]
    fn window_is_radial_and_zero_outside_support() {
        let spec = WindowSpec::disk_hann(0.8).unwrap();
        let (w, h) = (40, 30);
        let support = 0.8 * 15.0;
        for row in 0..h {
            for col in 0..w {
                let v = spec.weight(w, h, row, col);
                let r = (col as f64 - 19.5).hypot(row as f64 - 14.5);
                if r > support {
                    assert_eq!(v, 0.0);
                }
                // mirrored pixel has the same radius
                assert_eq!(v, spec.weight(w, h, h - 1 - row, w - 1 - col));
            }
        }
        assert!(WindowSpec::disk_hann(0.0).is_err());
    }

    #[test]
    fn rotation_by_zero_is_identity() {
        let img = ramp(16, 11);
        assert_eq!(rotate_bilinear(&img, 0.0).unwrap(), img);
    }

    #[test]
    fn quarter_turns_match_index_permutations() {
        let n = 13;
        let img = ramp(n, n);
        let r90 = rotate_bilinear(&img, 90.0).unwrap();
        let r180 = rotate_bilinear(&img, 180.0).unwrap();
        let r270 = rotate_bilinear(&img, 270.0).unwrap();
        for row in 0..n {
            for col in 0..n {
                assert!((r90.get(row, col) - img.get(col, n - 1 - row)).abs() < 1e-6);
                assert!((r180.get(row, col) - img.get(n - 1 - row, n - 1 - col)).abs() < 1e-6);
                assert!((r270.get(row, col) - img.get(n - 1 - col, row)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rotation_rejects_out_of_range_angles() {
        let img = ramp(8, 8);
        assert!(rotate_bilinear(&img, 360.0).is_err());
        assert!(rotate_bilinear(&img, -1.0).is_err());
        assert!(rotate_bilinear(&img, f64::NAN).is_err());
    }

    #[test]
    fn dc_only_spectrum_of_constant() {
        let img = Image::filled(10, 12, 2.5).unwrap();
        let s = dft2(&img);
        let dc = s.grid().dc_index();
        for (i, b) in s.bins().iter().enumerate() {
            if i == dc {
                assert!((b.re - 2.5 * 120.0).abs() < 1e-9 && b.im.abs() < 1e-9);
            } else {
                assert!(b.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut s = vec![0.0; 81];
        s[0] = 1.0;
        let spec = dft2(&Image::new(9, 9, s).unwrap());
        assert!(spec.bins().iter().all(|b| (b.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn cosine_periodogram_without_window() {
        let img = Image::from_fn(16, 16, |_, c| {
            (2.0 * std::f64::consts::PI * 3.0 * c as f64 / 16.0).cos()
        })
        .unwrap();
        let psd = periodogram(&img, &WindowSpec::none());
        for (i, v) in psd.bins().iter().enumerate() {
            let (a, b) = psd.grid().coords(i);
            if b == 0 && a.abs() == 3 {
                assert!((v - 16384.0).abs() < 1e-6);
            } else {
                assert!(*v < 1e-9);
            }
        }
        let constant = periodogram(&Image::filled(16, 16, 3.0).unwrap(), &WindowSpec::none());
        assert!(constant.bins().iter().all(|v| *v < 1e-12));
    }

    #[test]
    fn frequency_grid_layout_and_mirror() {
        let g = FrequencyGrid::new(5, 4);
        assert_eq!(g.coords(0), (-2, -2));
        assert_eq!(g.coords(g.dc_index()), (0, 0));
        assert_eq!(g.index(2, 1), Some(19));
        assert_eq!(g.index(3, 0), None);
        // -(-2) wraps back to -2 on the even axis
        assert_eq!(g.coords(g.mirror(0)), (2, -2));
        for i in 0..g.len() {
            assert_eq!(g.mirror(g.mirror(i)), i);
        }
    }

    #[test]
    fn standardized_has_zero_mean_unit_peak() {
        let img = ramp(20, 20).standardized();
        assert!(img.mean().abs() < 1e-12);
        assert!((img.max_abs() - 1.0).abs() < 1e-15);
    }
}
