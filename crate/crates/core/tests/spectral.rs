use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparselab_core::spectral::*;
use sparselab_core::{ExponentTriple, GridFunction, GridSpec, LabError};

/// `J_0` from its power series.
fn bessel_j0(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..80 {
        term *= -(z * z / 4.0) / (m * m) as f64;
        sum += term;
    }
    sum
}

fn steps(rng: &mut ChaCha8Rng, n: usize) -> PeriodicField {
    let heights: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = PeriodicField::from_fn(-4.0, 8.0, n, |x| {
        if (-1.0..1.0).contains(&x) {
            heights[((x + 1.0) * 8.0) as usize]
        } else {
            0.0
        }
    })
    .unwrap();
    let norm = f.l2_norm();
    f.scale(1.0 / norm)
}

#[test]
fn projection_kills_constants() {
    let f = PeriodicField::from_fn(-4.0, 8.0, 1024, |_| 2.0).unwrap();
    for k in 0..5 {
        let q = lp_project(&f, k).unwrap();
        assert!(q.values.iter().all(|v| v.norm() < 1e-12));
    }
}

#[test]
fn tone_passes_with_half_weight() {
    let n = 2048;
    for k in 0..5 {
        let xi = 1.5 * 2f64.powi(k);
        let f = PeriodicField::from_fn(-4.0, 8.0, n, |x| (2.0 * PI * xi * x).cos()).unwrap();
        let q = lp_project(&f, k).unwrap();
        let coeff = lp_multiplier(k, xi);
        assert!((coeff - 0.5).abs() < 1e-15);
        for (a, b) in q.values.iter().zip(&f.values) {
            assert!((a - b * coeff).norm() < 1e-10);
        }
    }
}

#[test]
fn telescoping_partial_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = steps(&mut rng, 4096);
    let (k0, k1) = (-1, 6);
    let mut sum = vec![num_complex::Complex64::new(0.0, 0.0); f.len()];
    for k in k0..=k1 {
        for (s, v) in sum.iter_mut().zip(lp_project(&f, k).unwrap().values) {
            *s += v;
        }
    }
    let direct = f.apply_multiplier(|xi| bump_psi(xi * 2f64.powi(-k1)) - bump_psi(xi * 2f64.powi(1 - k0)));
    for (a, b) in sum.iter().zip(&direct.values) {
        assert!((a - b).norm() < 1e-10);
    }
    let low = lp_low_pass(&f, k1).unwrap();
    let high = lp_low_pass(&f, k0 - 1).unwrap();
    for i in 0..f.len() {
        assert!((low.values[i] - high.values[i] - sum[i]).norm() < 1e-10);
    }
}

#[test]
fn multipliers_partition_unity() {
    for i in 1..2000 {
        let xi = 0.26 + i as f64 * 0.01;
        let s: f64 = (-3..=12).map(|k| lp_multiplier(k, xi)).sum();
        assert!((s - 1.0).abs() < 1e-12, "xi={xi}");
        assert!((0..=12).map(|k| lp_multiplier(k, xi)).filter(|&v| v != 0.0).count() <= 2);
    }
}

#[test]
fn aliasing_is_reported() {
    let f = PeriodicField::from_fn(0.0, 8.0, 256, |x| x.sin()).unwrap();
    assert_eq!(f.nyquist(), 16.0);
    assert!(lp_project(&f, 2).is_ok());
    assert!(matches!(lp_project(&f, 3), Err(LabError::Aliasing { k: 3, .. })));
}

#[test]
fn circle_average_of_tone_is_bessel() {
    let n = 4096;
    let rule = CircleRule { nodes: 2048, stride: 16 };
    let one = PeriodicField::from_fn(-4.0, 8.0, n, |_| 1.0).unwrap();
    for xi in [0.5, 1.25, 2.0] {
        let tone = PeriodicField::from_fn(-4.0, 8.0, n, |x| (2.0 * PI * xi * x).cos()).unwrap();
        let avg = circle_average(&tone, &one, 1.0, &rule).unwrap();
        let h = tone.spacing() * rule.stride as f64;
        for (i, v) in avg.iter().enumerate() {
            let x = -4.0 + i as f64 * h;
            let exact = (2.0 * PI * xi * x).cos() * bessel_j0(2.0 * PI * xi);
            assert!((v - exact).abs() < 1e-3, "xi={xi} x={x}: {v} vs {exact}");
        }
        let flipped = circle_average(&one, &tone, 1.0, &rule).unwrap();
        for (a, b) in avg.iter().zip(&flipped) {
            assert!((a - b).abs() < 1e-3);
        }
    }
    let ones = circle_average(&one, &one, 1.0, &rule).unwrap();
    assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn band_limited_input_vanishes_above_its_band() {
    let k0 = 3;
    let f1 = PeriodicField::from_fn(-4.0, 8.0, 4096, |x| {
        (2.0 * PI * 1.0 * x).cos() + 0.5 * (2.0 * PI * 3.0 * x).sin()
    })
    .unwrap();
    assert!(3.0 < 2f64.powi(k0 - 1));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f2 = steps(&mut rng, 4096);
    let rule = CircleRule { nodes: 512, stride: 16 };
    let vals = lp_decay_values(&f1, &f2, &[k0 + 1, k0 + 2, k0 + 3], LpOperator::Projection, &rule).unwrap();
    for (k, v) in vals {
        assert!(v < 1e-10, "k={k}: {v}");
    }
}

#[test]
fn lp_decay_on_random_steps() {
    let n = 1 << 15;
    let rule = CircleRule { nodes: 4096, stride: 8 };
    let ks: Vec<i32> = (1..=6).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let f1 = steps(&mut rng, n);
    let f2 = steps(&mut rng, n);
    let (_, fit) = lp_decay_experiment(&f1, &f2, &ks, LpOperator::Projection, &rule).unwrap();
    assert!(fit.slope < -0.1, "slope {}", fit.slope);
    let (_, control) = lp_decay_experiment(&f1, &f2, &ks, LpOperator::Identity, &rule).unwrap();
    assert!(control.slope.abs() < 0.02);
}

#[test]
fn continuity_d1_slopes() {
    let spec = GridSpec::new(1, &[-4.0], &[4.0], 1 << 13).unwrap();
    let smooth = GridFunction::from_fn(spec, |x| (-8.0 * x[0] * x[0]).exp());
    let chi = GridFunction::from_fn(spec, |x| if x[0].abs() < 0.5 { 1.0 } else { 0.0 });
    let hs: Vec<f64> = (4..=8).map(|j| 2f64.powi(-j)).collect();
    let t = ExponentTriple::ints(2, 2, 2);
    let rule = CircleRule { nodes: 2048, stride: 4 };
    let (_, fit) = continuity_d1_experiment(&smooth, &chi, &hs, &t, &rule).unwrap();
    assert!((fit.slope - 1.0).abs() < 0.1, "smooth slope {}", fit.slope);
    let (_, rough) = continuity_d1_experiment(&chi, &chi, &hs, &t, &rule).unwrap();
    assert!(rough.slope > 0.05, "indicator slope {}", rough.slope);
    let (_, scaled) = continuity_d1_experiment(&chi.scale(3.0), &chi, &hs, &t, &rule).unwrap();
    assert!((scaled.slope - rough.slope).abs() < 1e-9);
    assert!(continuity_d1_experiment(&chi, &chi, &[0.0, 0.1, 0.2], &t, &rule).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_and_contraction(seed in 0u64..10_000, k in 0i32..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..1024).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = PeriodicField::from_real(-4.0, 8.0, &vals).unwrap();
        let e = f.energy();
        prop_assert!((e - f.spectral_energy()).abs() < 1e-10 * e.max(1.0));
        let q = lp_project(&f, k).unwrap();
        prop_assert!(q.l2_norm() <= f.l2_norm() * (1.0 + 1e-12));
    }
}
