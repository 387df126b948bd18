//! Evaluation metrics: angular distances, profile distances in dB, reference
//! profiles and rotation-equivariance errors.

use rand::Rng;

use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::grid::{rotate_any, Image, WindowSpec};
use crate::profile::{circular_shift_profile, image_profile, normalize, AngularProfile};
use crate::registration::Registrar;

/// Score reported for (near) identical profiles.
pub const DB_CAP: f64 = 300.0;

/// Distance on a circle of circumference `period`, in `[0, period / 2]`.
pub fn angular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(period);
    d.min(period - d)
}

fn check_normalized(p: &AngularProfile, which: &str) -> Result<()> {
    if (p.sum() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "{which} profile must be normalized (sum {})",
            p.sum()
        )));
    }
    Ok(())
}

/// Mean squared error between two normalized profiles as `-10 log10(MSE)`
/// (larger is better), capped at 300 dB.
pub fn profile_distance_db(estimated: &AngularProfile, reference: &AngularProfile) -> Result<f64> {
    if estimated.len() != reference.len() {
        return Err(Error::invalid(format!(
            "profiles have {} and {} angles",
            estimated.len(),
            reference.len()
        )));
    }
    check_normalized(estimated, "estimated")?;
    check_normalized(reference, "reference")?;
    Ok(db_from_mse(mse(estimated.values(), reference.values())))
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

fn db_from_mse(mse: f64) -> f64 {
    -10.0 * mse.max(1e-30).log10()
}

/// Normalized `exp(sigma cos(2 (theta_m - mu)))` on the `M`-angle grid.
pub fn von_mises_reference_profile(mu: f64, sigma: f64, num_angles: usize) -> Result<AngularProfile> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(format!(
            "concentration must be >= 0, got {sigma}"
        )));
    }
    if num_angles == 0 {
        return Err(Error::invalid("profile needs at least one angle"));
    }
    let step = 180.0 / num_angles as f64;
    // shifted by -sigma so large concentrations do not overflow
    let values = (0..num_angles)
        .map(|m| {
            let d = (m as f64 * step - mu).to_radians();
            (sigma * ((2.0 * d).cos() - 1.0)).exp()
        })
        .collect();
    normalize(&AngularProfile::new(values)?)
}

/// Mean and spread of one metric for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub method: String,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation (0 for a single sample).
    pub std: f64,
    pub n: usize,
    /// Samples that could not be computed.
    pub failures: usize,
    pub params: String,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "method,metric,mean,std,n,failures,params";

    pub fn from_samples(
        method: impl Into<String>,
        metric: impl Into<String>,
        samples: &[f64],
        params: impl Into<String>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("a report needs at least one sample"));
        }
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            method: method.into(),
            metric: metric.into(),
            mean,
            std,
            n,
            failures: 0,
            params: params.into(),
        })
    }

    pub fn with_failures(mut self, failures: usize) -> Self {
        self.failures = failures;
        self
    }

    /// CSV row matching [`MetricReport::CSV_HEADER`]. The params field is
    /// quoted.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:.16e},{:.16e},{},{},\"{}\"",
            self.method,
            self.metric,
            self.mean,
            self.std,
            self.n,
            self.failures,
            self.params.replace('"', "'")
        )
    }
}

/// Rotation angles `(k + U_k) * range / trials`, one per stratum.
pub fn stratified_angles<R: Rng + ?Sized>(trials: usize, range: f64, rng: &mut R) -> Vec<f64> {
    (0..trials)
        .map(|k| {
            let a = (k as f64 + rng.random::<f64>()) * range / trials as f64;
            if a >= range {
                0.0
            } else {
                a
            }
        })
        .collect()
}

/// Comparison of the profile of a rotated image with the shifted profile of
/// the original.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivarianceSample {
    pub alpha: f64,
    pub db: f64,
    pub max_abs: f64,
}

/// Equivariance of one rotation by `alpha` in `[0, 360)` degrees, against a
/// precomputed normalized profile of `image`.
pub fn equivariance_sample(
    image: &Image,
    base: &AngularProfile,
    bank: &FilterBank,
    window: &WindowSpec,
    alpha: f64,
) -> Result<EquivarianceSample> {
    if !(0.0..360.0).contains(&alpha) {
        return Err(Error::invalid(format!(
            "rotation angle must lie in [0, 360), got {alpha}"
        )));
    }
    let rotated = normalize(&image_profile(&rotate_any(image, alpha), bank, window)?)?;
    Ok(compare_shifted(&rotated, base, alpha))
}

/// Compares the normalized profile of a rotated image with the normalized
/// profile of the original shifted by `alpha`.
pub fn compare_shifted(
    rotated: &AngularProfile,
    base: &AngularProfile,
    alpha: f64,
) -> EquivarianceSample {
    let expected = circular_shift_profile(base, alpha);
    let max_abs = rotated
        .values()
        .iter()
        .zip(expected.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    EquivarianceSample {
        alpha,
        db: db_from_mse(mse(rotated.values(), expected.values())),
        max_abs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEquivariance {
    /// dB scores over the trials.
    pub report: MetricReport,
    /// Largest max-abs deviation over all trials.
    pub max_abs: f64,
    pub samples: Vec<EquivarianceSample>,
}

/// Profile equivariance over `trials` stratified rotations in `[0, 180)`.
pub fn profile_equivariance_error<R: Rng + ?Sized>(
    image: &Image,
    bank: &FilterBank,
    window: &WindowSpec,
    trials: usize,
    rng: &mut R,
) -> Result<ProfileEquivariance> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let angles = stratified_angles(trials, 180.0, rng);
    profile_equivariance_at(image, bank, window, &angles)
}

/// Profile equivariance at the given rotation angles.
pub fn profile_equivariance_at(
    image: &Image,
    bank: &FilterBank,
    window: &WindowSpec,
    angles: &[f64],
) -> Result<ProfileEquivariance> {
    let base = normalize(&image_profile(image, bank, window)?)?;
    let samples = angles
        .iter()
        .map(|&a| equivariance_sample(image, &base, bank, window, a))
        .collect::<Result<Vec<_>>>()?;
    let dbs: Vec<f64> = samples.iter().map(|s| s.db).collect();
    let report = MetricReport::from_samples(
        bank.method().name(),
        "profile_equivariance_db",
        &dbs,
        format!("M={} trials={}", bank.num_angles(), angles.len()),
    )?;
    let max_abs = samples.iter().fold(0.0f64, |m, s| m.max(s.max_abs));
    Ok(ProfileEquivariance {
        report,
        max_abs,
        samples,
    })
}

/// Mean angular error (period 360) between the registration of a rotated
/// pair and that of the original pair, over stratified rotations in
/// `[0, 180)`. Failed trials are counted, not fatal.
pub fn registration_equivariance_error<R: Rng + ?Sized>(
    x1: &Image,
    x2: &Image,
    registrar: &Registrar,
    trials: usize,
    rng: &mut R,
) -> Result<MetricReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let angles = stratified_angles(trials, 180.0, rng);
    registration_equivariance_at(x1, x2, registrar, &angles)
}

pub fn registration_equivariance_at(
    x1: &Image,
    x2: &Image,
    registrar: &Registrar,
    angles: &[f64],
) -> Result<MetricReport> {
    let gamma0 = registrar.register(x1, x2)?.gamma;
    let mut errors = Vec::with_capacity(angles.len());
    let mut failures = 0;
    for &alpha in angles {
        let r1 = rotate_any(x1, alpha);
        let r2 = rotate_any(x2, alpha);
        match registrar.register(&r1, &r2) {
            Ok(r) => errors.push(angular_distance(r.gamma, gamma0, 360.0)),
            Err(Error::DegenerateProfile(_)) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    if errors.is_empty() {
        return Err(Error::DegenerateProfile(
            "every rotated registration failed".into(),
        ));
    }
    Ok(MetricReport::from_samples(
        registrar.bank().method().name(),
        "registration_equivariance_deg",
        &errors,
        format!("M={} trials={}", registrar.bank().num_angles(), angles.len()),
    )?
    .with_failures(failures))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_distance_examples() {
        assert_eq!(angular_distance(10.0, 170.0, 180.0), 20.0);
        assert_eq!(angular_distance(350.0, 10.0, 360.0), 20.0);
        assert_eq!(angular_distance(42.0, 42.0, 180.0), 0.0);
        assert_eq!(angular_distance(0.0, 90.0, 180.0), 90.0);
    }

    #[test]
    fn db_of_identical_profiles_is_capped() {
        let p = von_mises_reference_profile(60.0, 5.0, 180).unwrap();
        assert_eq!(profile_distance_db(&p, &p).unwrap(), DB_CAP);
    }

    #[test]
    fn db_uniform_against_delta() {
        let m = 180usize;
        let uniform = von_mises_reference_profile(0.0, 0.0, m).unwrap();
        let mut v = vec![0.0; m];
        v[7] = 1.0;
        let delta = normalize(&AngularProfile::new(v).unwrap()).unwrap();
        let mf = m as f64;
        let expected_mse = ((1.0 - 1.0 / mf).powi(2) + (mf - 1.0) / (mf * mf)) / mf;
        assert!((expected_mse - 5.525e-3).abs() < 1e-6);
        let db = profile_distance_db(&uniform, &delta).unwrap();
        assert!((db - (-10.0 * expected_mse.log10())).abs() < 1e-9);
        assert!((db - 22.58).abs() < 0.01);
    }

    #[test]
    fn db_rejects_mismatched_or_unnormalized() {
        let a = von_mises_reference_profile(0.0, 1.0, 10).unwrap();
        let b = von_mises_reference_profile(0.0, 1.0, 12).unwrap();
        assert!(profile_distance_db(&a, &b).is_err());
        let raw = AngularProfile::new(vec![1.0; 10]).unwrap();
        assert!(profile_distance_db(&a, &raw).is_err());
    }

    #[test]
    fn von_mises_profile_shape() {
        let u = von_mises_reference_profile(33.0, 0.0, 12).unwrap();
        assert!(u.values().iter().all(|&v| (v - 1.0 / 12.0).abs() < 1e-15));
        let p = von_mises_reference_profile(60.0, 20.0, 180).unwrap();
        let argmax = (0..180)
            .max_by(|&i, &j| p.values()[i].total_cmp(&p.values()[j]))
            .unwrap();
        assert_eq!(argmax, 60);
        for d in 1..90 {
            let a = p.values()[(60 + d) % 180];
            let b = p.values()[(60 + 180 - d) % 180];
            assert!((a - b).abs() <= 1e-12 * a.max(b));
        }
        assert!(von_mises_reference_profile(0.0, -1.0, 8).is_err());
    }

    #[test]
    fn report_statistics() {
        let r = MetricReport::from_samples("cake", "x", &[1.0, 2.0, 3.0], "p").unwrap();
        assert_eq!(r.mean, 2.0);
        assert_eq!(r.std, 1.0);
        assert_eq!(r.n, 3);
        assert!(r.to_csv_row().starts_with("cake,x,2.0000000000000000e0,1.0000000000000000e0,3,0,"));
        let one = MetricReport::from_samples("cake", "x", &[5.0], "").unwrap();
        assert_eq!(one.std, 0.0);
        assert!(MetricReport::from_samples("cake", "x", &[], "").is_err());
    }

    #[test]
    fn stratified_angles_cover_each_stratum() {
        let mut rng = crate::synth::seeded_rng(1);
        let a = stratified_angles(36, 180.0, &mut rng);
        for (k, x) in a.iter().enumerate() {
            assert!(*x >= k as f64 * 5.0 && *x < (k + 1) as f64 * 5.0);
        }
    }
}
