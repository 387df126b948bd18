//! Metric properties and equivariance measurements.

use aniso_core::metrics::{
    angular_distance, compare_shifted, profile_distance_db, profile_equivariance_at,
    stratified_angles, von_mises_reference_profile, DB_CAP,
};
use aniso_core::profile::{circular_shift_profile, normalize};
use aniso_core::synth::{gen_gabor_image, seeded_rng};
use aniso_core::{
    AngularProfile, FilterBank, FilterParams, GaborMixSpec, Method, MetricReport, WindowSpec,
};
use approx::assert_relative_eq;
use proptest::prelude::*;

fn random_profile(values: Vec<f64>) -> AngularProfile {
    normalize(&AngularProfile::new(values).unwrap()).unwrap()
}

#[test]
fn identical_profiles_score_the_cap() {
    let p = von_mises_reference_profile(10.0, 3.0, 60).unwrap();
    assert_eq!(profile_distance_db(&p, &p).unwrap(), DB_CAP);
    let c = compare_shifted(&p, &p, 0.0);
    assert_eq!(c.db, DB_CAP);
    assert_eq!(c.max_abs, 0.0);
}

#[test]
fn unnormalized_or_mismatched_profiles_are_rejected() {
    let p = von_mises_reference_profile(10.0, 3.0, 60).unwrap();
    let raw = AngularProfile::new(vec![1.0; 60]).unwrap();
    assert!(profile_distance_db(&raw, &p).is_err());
    let short = von_mises_reference_profile(10.0, 3.0, 30).unwrap();
    assert!(profile_distance_db(&short, &p).is_err());
}

#[test]
fn db_matches_hand_computation() {
    // MSE between (1, 0) and (0, 1) is 1, between (0.75, 0.25) and (0.25, 0.75) is 0.25
    let a = random_profile(vec![1.0, 0.0]);
    let b = random_profile(vec![0.0, 1.0]);
    assert_relative_eq!(profile_distance_db(&a, &b).unwrap(), 0.0);
    let a = random_profile(vec![0.75, 0.25]);
    let b = random_profile(vec![0.25, 0.75]);
    assert_relative_eq!(
        profile_distance_db(&a, &b).unwrap(),
        -10.0 * 0.25f64.log10(),
        max_relative = 1e-12
    );
}

#[test]
fn uniform_against_a_delta() {
    let uniform = random_profile(vec![1.0; 180]);
    let mut d = vec![0.0; 180];
    d[17] = 1.0;
    let delta = random_profile(d);
    let m: f64 = 1.0 / 180.0;
    let mse = m * ((1.0 - m).powi(2) + 179.0 * m * m);
    assert_relative_eq!(mse, 5.525e-3, max_relative = 1e-3);
    let db = profile_distance_db(&uniform, &delta).unwrap();
    assert_relative_eq!(db, -10.0 * mse.log10(), max_relative = 1e-12);
    assert!((db - 22.58).abs() < 0.01);
}

#[test]
fn von_mises_reference_is_half_periodic() {
    for sigma in [0.0, 1.0, 20.0, 500.0] {
        let p = von_mises_reference_profile(37.0, sigma, 180).unwrap();
        assert_relative_eq!(p.sum(), 1.0, max_relative = 1e-12);
        let q = von_mises_reference_profile(217.0, sigma, 180).unwrap();
        for (a, b) in p.values().iter().zip(q.values()) {
            assert_relative_eq!(*a, *b, max_relative = 1e-9, epsilon = 1e-300);
        }
    }
    let flat = von_mises_reference_profile(0.0, 0.0, 18).unwrap();
    assert!(flat.values().iter().all(|&v| (v - 1.0 / 18.0).abs() < 1e-15));
}

#[test]
fn report_uses_the_sample_deviation() {
    let r = MetricReport::from_samples("ridge", "x", &[1.0, 2.0, 3.0, 4.0], "p=1").unwrap();
    assert_eq!(r.mean, 2.5);
    assert_relative_eq!(r.std, (5.0f64 / 3.0).sqrt(), max_relative = 1e-15);
    assert_eq!(r.n, 4);
    let row = r.with_failures(2).to_csv_row();
    assert!(row.starts_with("ridge,x,2.5"));
    assert!(row.ends_with(",4,2,\"p=1\""));
    assert_eq!(MetricReport::CSV_HEADER.split(',').count(), row.split(',').count());
    assert!(MetricReport::from_samples("a", "b", &[], "").is_err());
    assert_eq!(MetricReport::from_samples("a", "b", &[7.0], "").unwrap().std, 0.0);
}

#[test]
fn stratified_angles_cover_each_stratum_once() {
    let mut rng = seeded_rng(1);
    let angles = stratified_angles(36, 180.0, &mut rng);
    for (k, a) in angles.iter().enumerate() {
        assert!(*a >= k as f64 * 5.0 && *a < (k + 1) as f64 * 5.0);
    }
}

fn gabor() -> aniso_core::Image {
    gen_gabor_image(&GaborMixSpec {
        width: 128,
        height: 128,
        atoms: 120,
        sigma: 5.0,
        seed: 2,
        ..Default::default()
    })
    .unwrap()
    .0
}

#[test]
fn no_rotation_is_perfectly_equivariant() {
    let img = gabor();
    for method in Method::ALL {
        let bank = FilterBank::new(method, 128, 128, 180, &FilterParams::default()).unwrap();
        let e = profile_equivariance_at(&img, &bank, &WindowSpec::default(), &[0.0]).unwrap();
        assert_eq!(e.samples[0].db, DB_CAP, "{method}");
    }
}

#[test]
fn quarter_turn_equivariance_of_the_cake_bank() {
    let img = gabor();
    let bank = FilterBank::new(Method::CakeWavelet, 128, 128, 180, &FilterParams::default()).unwrap();
    let e = profile_equivariance_at(&img, &bank, &WindowSpec::default(), &[90.0]).unwrap();
    assert!(e.samples[0].db >= 40.0, "{}", e.samples[0].db);
}

#[test]
fn ridge_equivariance_at_generic_angles() {
    let img = gabor();
    let bank = FilterBank::new(Method::Ridge, 128, 128, 180, &FilterParams::default()).unwrap();
    let e = profile_equivariance_at(&img, &bank, &WindowSpec::default(), &[13.0, 47.5, 101.2])
        .unwrap();
    assert!(e.report.mean > 60.0, "{}", e.report.mean);
    assert_eq!(e.report.n, 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn angular_distance_is_a_metric(a in -720.0f64..720.0, b in -720.0f64..720.0,
                                    c in -720.0f64..720.0) {
        for period in [180.0, 360.0] {
            let (ab, ba) = (angular_distance(a, b, period), angular_distance(b, a, period));
            prop_assert!((ab - ba).abs() < 1e-9);
            prop_assert!((0.0..=period / 2.0).contains(&ab));
            prop_assert!(angular_distance(a, a, period) == 0.0);
            prop_assert!(angular_distance(a, a + period, period) < 1e-9);
            let via = angular_distance(a, c, period) + angular_distance(c, b, period);
            prop_assert!(ab <= via + 1e-9);
        }
    }

    #[test]
    fn db_is_symmetric_and_shift_invariant(
        x in prop::collection::vec(0.01f64..1.0, 36),
        y in prop::collection::vec(0.01f64..1.0, 36),
        k in 0usize..36,
    ) {
        let (p, q) = (random_profile(x), random_profile(y));
        let d = profile_distance_db(&p, &q).unwrap();
        prop_assert_eq!(d, profile_distance_db(&q, &p).unwrap());
        let delta = k as f64 * p.step();
        let (ps, qs) = (circular_shift_profile(&p, delta), circular_shift_profile(&q, delta));
        prop_assert!((profile_distance_db(&ps, &qs).unwrap() - d).abs() < 1e-9);
    }
}
