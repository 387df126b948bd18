//! Angular profile and orientation properties.

use aniso_core::filterbank::make_binning_bank;
use aniso_core::grid::periodogram;
use aniso_core::io::{read_image, write_image};
use aniso_core::metrics::von_mises_reference_profile;
use aniso_core::profile::{
    angular_profile, circular_shift_profile, image_profile, normalize, principal_orientation,
};
use aniso_core::{
    AngularProfile, Error, FilterBank, FilterParams, Image, Method, Psd, WindowSpec,
};
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_psd(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Psd {
    Psd::new(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn banks(h: usize, w: usize, m: usize) -> Vec<FilterBank> {
    Method::ALL
        .iter()
        .map(|&method| FilterBank::new(method, h, w, m, &FilterParams::default()).unwrap())
        .collect()
}

#[test]
fn profile_is_linear_in_the_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (p, q) = (random_psd(&mut rng, 20, 18), random_psd(&mut rng, 20, 18));
    let (a, b) = (2.5, 0.75);
    let mix = Psd::new(
        20,
        18,
        p.bins().iter().zip(q.bins()).map(|(x, y)| a * x + b * y).collect(),
    )
    .unwrap();
    for bank in banks(18, 20, 36) {
        let (rp, rq) = (angular_profile(&p, &bank).unwrap(), angular_profile(&q, &bank).unwrap());
        let rm = angular_profile(&mix, &bank).unwrap();
        for k in 0..36 {
            let expected = a * rp.values()[k] + b * rq.values()[k];
            assert_relative_eq!(rm.values()[k], expected, max_relative = 1e-12);
        }
    }
}

#[test]
fn mismatched_shapes_are_rejected() {
    let bank = make_binning_bank(16, 16, 8).unwrap();
    let psd = Psd::zeros(16, 17);
    assert!(matches!(angular_profile(&psd, &bank), Err(Error::ShapeMismatch { .. })));
}

#[test]
fn zero_spectrum_is_degenerate() {
    for bank in banks(16, 16, 12) {
        let rho = angular_profile(&Psd::zeros(16, 16), &bank).unwrap();
        assert!(rho.values().iter().all(|&v| v == 0.0));
        assert!(matches!(normalize(&rho), Err(Error::DegenerateProfile(_))));
        assert!(matches!(
            principal_orientation(&rho, true),
            Err(Error::DegenerateProfile(_))
        ));
    }
}

#[test]
fn constant_image_is_degenerate() {
    let img = Image::filled(32, 32, 3.0).unwrap();
    let bank = make_binning_bank(32, 32, 18).unwrap();
    let rho = image_profile(&img, &bank, &WindowSpec::none()).unwrap();
    assert!(normalize(&rho).is_err());
}

#[test]
fn binning_profile_sums_all_power_but_dc() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let psd = random_psd(&mut rng, 21, 16);
    let bank = make_binning_bank(16, 21, 30).unwrap();
    let dc = psd.bins()[psd.grid().dc_index()];
    let rho = angular_profile(&psd, &bank).unwrap();
    assert_relative_eq!(rho.sum(), psd.total() - dc, max_relative = 1e-12);
}

#[test]
fn symmetric_pair_on_the_horizontal_axis_peaks_at_zero() {
    let mut bins = vec![0.0; 32 * 32];
    let psd0 = Psd::zeros(32, 32);
    let g = psd0.grid();
    bins[g.index(6, 0).unwrap()] = 1.0;
    bins[g.index(-6, 0).unwrap()] = 1.0;
    let psd = Psd::new(32, 32, bins).unwrap();
    for bank in banks(32, 32, 180) {
        let rho = normalize(&angular_profile(&psd, &bank).unwrap()).unwrap();
        let est = principal_orientation(&rho, true).unwrap();
        assert_eq!(est.eta, 0.0, "{}", bank.method());
    }
}

#[test]
fn quarter_turn_of_the_image_shifts_the_profile() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in [24, 25] {
        let img = Image::from_fn(n, n, |_, _| rng.random::<f64>()).unwrap();
        let turned = Image::from_fn(n, n, |r, c| img.get(c, n - 1 - r)).unwrap();
        for bank in banks(n, n, 36) {
            // on even grids the Nyquist row turns into an aliased column, and
            // only the binning bank reaches beyond the Nyquist disk
            if n % 2 == 0 && bank.method() == Method::Binning {
                continue;
            }
            let a = normalize(&image_profile(&img, &bank, &WindowSpec::default()).unwrap()).unwrap();
            let b =
                normalize(&image_profile(&turned, &bank, &WindowSpec::default()).unwrap()).unwrap();
            let shifted = circular_shift_profile(&a, 90.0);
            for k in 0..36 {
                assert!(
                    (b.values()[k] - shifted.values()[k]).abs() < 1e-12,
                    "{} n={n} k={k}",
                    bank.method()
                );
            }
        }
    }
}

#[test]
fn refinement_recovers_the_vertex_of_a_parabola() {
    // samples of 1 - (x - 10.3)^2 / 50 around the peak
    let f = |k: f64| 1.0 - (k - 10.3) * (k - 10.3) / 50.0;
    let values: Vec<f64> = (0..36).map(|k| f(k as f64).max(0.0)).collect();
    let p = AngularProfile::new(values).unwrap();
    let coarse = principal_orientation(&p, false).unwrap();
    let fine = principal_orientation(&p, true).unwrap();
    assert_eq!(coarse.eta, 50.0);
    assert_relative_eq!(fine.eta, 10.3 * 5.0, max_relative = 1e-12);
}

#[test]
fn flat_neighbourhood_is_not_refined() {
    let p = AngularProfile::new(vec![1.0; 12]).unwrap();
    assert_eq!(principal_orientation(&p, true).unwrap().eta, 0.0);
}

#[test]
fn csv_round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = von_mises_reference_profile(33.0, 4.0, 90).unwrap();
    let path = dir.path().join("p.csv");
    p.write_csv(&path).unwrap();
    let q = AngularProfile::read_csv(&path).unwrap();
    assert_eq!(p.values(), q.values());
    assert!(q.is_normalized());
}

#[test]
fn image_round_trip_through_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let img = Image::from_fn(19, 11, |_, _| rng.random::<f64>() * 2.0 - 1.0).unwrap();
    let anim = dir.path().join("x.anim");
    write_image(&anim, &img).unwrap();
    assert_eq!(read_image(&anim).unwrap(), img);
    let png = dir.path().join("x.png");
    write_image(&png, &img).unwrap();
    let back = read_image(&png).unwrap();
    assert_eq!(back.shape(), img.shape());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent_and_scale_free(
        values in prop::collection::vec(0.0f64..10.0, 4..40),
        scale in 1e-3f64..1e3,
    ) {
        prop_assume!(values.iter().sum::<f64>() > 1e-6);
        let p = AngularProfile::new(values.clone()).unwrap();
        let n1 = normalize(&p).unwrap();
        let n2 = normalize(&n1).unwrap();
        prop_assert_eq!(n1.values(), n2.values());
        prop_assert!((n1.sum() - 1.0).abs() < 1e-12);
        let scaled = AngularProfile::new(values.iter().map(|v| v * scale).collect()).unwrap();
        let ns = normalize(&scaled).unwrap();
        for (a, b) in n1.values().iter().zip(ns.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn orientation_ignores_scale(values in prop::collection::vec(0.0f64..1.0, 4..60),
                                 scale in 1e-3f64..1e3) {
        prop_assume!(values.iter().cloned().fold(0.0, f64::max) > 0.0);
        let p = AngularProfile::new(values.clone()).unwrap();
        let q = AngularProfile::new(values.iter().map(|v| v * scale).collect()).unwrap();
        let (a, b) = (principal_orientation(&p, false).unwrap(), principal_orientation(&q, false).unwrap());
        prop_assert_eq!(a.eta, b.eta);
        let (a, b) = (principal_orientation(&p, true).unwrap(), principal_orientation(&q, true).unwrap());
        prop_assert!((a.eta - b.eta).abs() < 1e-9);
        prop_assert!((0.0..180.0).contains(&a.eta));
    }

    #[test]
    fn on_grid_shifts_compose_exactly(values in prop::collection::vec(0.0f64..1.0, 36),
                                      j in -100i32..100, k in -100i32..100) {
        let p = AngularProfile::new(values).unwrap();
        let step = p.step();
        let twice = circular_shift_profile(&circular_shift_profile(&p, j as f64 * step), k as f64 * step);
        let once = circular_shift_profile(&p, (j + k) as f64 * step);
        for (a, b) in twice.values().iter().zip(once.values()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn off_grid_shifts_compose_on_smooth_profiles(mu in 0.0f64..180.0, a in -90.0f64..90.0,
                                                  b in -90.0f64..90.0) {
        let p = von_mises_reference_profile(mu, 2.0, 180).unwrap();
        let twice = circular_shift_profile(&circular_shift_profile(&p, a), b);
        let once = circular_shift_profile(&p, a + b);
        for (x, y) in twice.values().iter().zip(once.values()) {
            prop_assert!((x - y).abs() <= 1e-3);
        }
    }

    #[test]
    fn shifting_moves_the_peak(mu in 0.0f64..180.0, delta in 0.0f64..180.0) {
        let m = 180;
        let p = von_mises_reference_profile(mu, 20.0, m).unwrap();
        let q = circular_shift_profile(&p, delta);
        let eta = principal_orientation(&q, true).unwrap().eta;
        let truth = (mu + delta).rem_euclid(180.0);
        let d = (eta - truth).abs().rem_euclid(180.0);
        prop_assert!(d.min(180.0 - d) < 0.6);
    }
}

#[test]
fn periodogram_profile_of_a_grating_peaks_at_its_angle() {
    let (img, _) = aniso_core::synth::gen_oriented_oscillation(40.0, 6.0, 64, 64).unwrap();
    let psd = periodogram(&img, &WindowSpec::default());
    let bank = FilterBank::new(Method::Ridge, 64, 64, 90, &FilterParams::default()).unwrap();
    let rho = normalize(&angular_profile(&psd, &bank).unwrap()).unwrap();
    let eta = principal_orientation(&rho, true).unwrap().eta;
    assert!((eta - 40.0).abs() < 1.0, "{eta}");
}
