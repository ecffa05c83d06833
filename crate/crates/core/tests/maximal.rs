use proptest::prelude::*;
use sparselab_core::averaging::{bilinear_average_at, Quadrature};
use sparselab_core::maximal::*;
use sparselab_core::{
    make_indicator, shift, ExponentTriple, FnField, GridFunction, GridSpec, Point, RegionSpec,
};

fn q() -> Quadrature {
    Quadrature::fixed(64, 64)
}

#[test]
fn constant_inputs_give_one() {
    let spec = GridSpec::centered(2, 6.0, 24).unwrap();
    let one = GridFunction::constant(spec, 1.0);
    let x = [[0.0; 3], [0.5, -1.0, 0.0]];
    let loc = maximal_at_points(&one, &one, &RadiusGrid::localized(5).unwrap().radii(), &x, &q()).unwrap();
    let lac = maximal_at_points(&one, &one, &lacunary_radii(-2, 1).unwrap(), &x, &q()).unwrap();
    let full = maximal_at_points(&one, &one, &octave_radii(-2, 1, 4).unwrap(), &x, &q()).unwrap();
    for v in loc.iter().chain(&lac).chain(&full) {
        assert!((v - 1.0).abs() < 1e-12);
    }
}

fn pair(spec: GridSpec) -> (GridFunction, GridFunction) {
    let f = make_indicator(&RegionSpec::ball(&[0.3, 0.0], 0.4), &spec).unwrap();
    let g = make_indicator(&RegionSpec::cuboid(&[-0.6, -0.5], &[0.1, 0.3]), &spec).unwrap();
    (f, g)
}

#[test]
fn radius_refinement_and_orderings() {
    let spec = GridSpec::centered(2, 2.0, 32).unwrap();
    let (f, g) = pair(spec);
    let coarse = localized_maximal(&f, &g, &RadiusGrid::localized(5).unwrap(), &q()).unwrap();
    let fine = localized_maximal(&f, &g, &RadiusGrid::localized(9).unwrap(), &q()).unwrap();
    for (a, b) in coarse.values().iter().zip(fine.values()) {
        assert!(a <= b);
    }
    let lac = lacunary_maximal(&f, &g, -3, 1, &q()).unwrap();
    let full = full_maximal(&f, &g, -3, 1, 5, &q()).unwrap();
    for (a, b) in lac.values().iter().zip(full.values()) {
        assert!(a <= b);
    }
    let one_octave = full_maximal(&f, &g, 0, 0, 9, &q()).unwrap();
    assert_eq!(one_octave, fine);
}

#[test]
fn lacunary_single_scale() {
    // supports at distance about 2 from the origin: only t = 2 contributes
    let spec = GridSpec::centered(2, 4.0, 128).unwrap();
    let f = make_indicator(&RegionSpec::annulus(&[0.0, 0.0], 1.3, 1.5), &spec).unwrap();
    let x = [[0.0; 3]];
    let lac = maximal_at_points(&f, &f, &lacunary_radii(-3, 2).unwrap(), &x, &q()).unwrap();
    let single = bilinear_average_at(&f, &f, &x[0], 2.0, &q());
    assert!(single > 0.0);
    assert_eq!(lac[0], single);
}

#[test]
fn hardy_littlewood_brute_force() {
    let n = 128;
    let spec = GridSpec::centered(1, 4.0, n).unwrap();
    let f = make_indicator(&RegionSpec::cuboid(&[0.0], &[1.0]), &spec).unwrap();
    let m = hardy_littlewood_maximal(&f);
    let i = spec.nearest(&[2.0, 0.0, 0.0]).unwrap();
    // brute force over every grid interval containing the sample
    let v = f.values();
    let mut brute: f64 = 0.0;
    for a in 0..=i {
        for b in i + 1..=n {
            let s: f64 = v[a..b].iter().sum();
            brute = brute.max(s / (b - a) as f64);
        }
    }
    assert!(m.values()[i] <= brute + 1e-12);
    assert!(m.values()[i] >= brute * 2f64.powf(-0.25));
    assert!((m.values()[i] - 0.5).abs() < 0.05, "{}", m.values()[i]);
    for (mv, fv) in m.values().iter().zip(v) {
        assert!(*mv >= fv.abs() - 1e-12);
    }
}

#[test]
fn hardy_littlewood_two_dimensional_brute_force() {
    let spec = GridSpec::centered(2, 1.0, 12).unwrap();
    let f = GridFunction::from_fn(spec, |x| ((x[0] * 5.0).sin() * (x[1] * 3.0 + 1.0).cos()).abs());
    let m = hardy_littlewood_maximal(&f);
    let n = 12usize;
    let ladder = hl_side_ladder(n);
    for i in [0usize, 5, 77, 143] {
        let [a, b, _] = spec.multi_index(i);
        let mut brute: f64 = 0.0;
        for &k in &ladder {
            for s0 in a.saturating_sub(k - 1)..=a {
                for s1 in b.saturating_sub(k - 1)..=b {
                    let mut sum = 0.0;
                    for u in s0..(s0 + k).min(n) {
                        for w in s1..(s1 + k).min(n) {
                            sum += f.values()[spec.flat_index([u, w, 0])];
                        }
                    }
                    brute = brute.max(sum / (k * k) as f64);
                }
            }
        }
        // windows starting below the box only add zeros, so they never win
        assert!((m.values()[i] - brute).abs() < 1e-12, "{} vs {brute}", m.values()[i]);
    }
}

#[test]
fn linear_maximal_examples() {
    let spec = GridSpec::centered(2, 2.0, 64).unwrap();
    let one = GridFunction::constant(spec, 1.0);
    let rg = RadiusGrid::geometric(0.1, 0.5, 4).unwrap();
    let m = linear_spherical_maximal(&one, &rg, &q()).unwrap();
    assert!((m.at(&[0.0; 3]) - 1.0).abs() < 1e-12);

    let ball = make_indicator(&RegionSpec::ball(&[0.0, 0.0], 1.0), &spec).unwrap();
    let h = spec.spacing(0);
    let rg = RadiusGrid::geometric(h / 2.0, 1.0, 12).unwrap();
    let m = linear_spherical_maximal(&ball, &rg, &q()).unwrap();
    for i in 0..spec.len() {
        let x = spec.point_of_flat(i);
        if (x[0] * x[0] + x[1] * x[1]).sqrt() < 1.0 - h {
            assert!((m.values()[i] - 1.0).abs() < 1e-12);
        }
    }

    // a radial shell is seen best at its own radius
    let shell = make_indicator(&RegionSpec::annulus(&[0.0, 0.0], 0.6, 0.7), &spec).unwrap();
    let radii = RadiusGrid::uniform(0.1, 1.5, 57).unwrap().radii();
    let vals: Vec<f64> = radii
        .iter()
        .map(|&s| sparselab_core::averaging::linear_average_at(&shell, &[0.0; 3], s, &q()))
        .collect();
    let best = radii[vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0];
    assert!((0.6..=0.7).contains(&best));
}

#[test]
fn continuity_examples() {
    let spec = GridSpec::centered(2, 3.0, 64).unwrap();
    let (f, g) = pair(spec);
    let t = ExponentTriple::ints(2, 2, 2);
    let rg = RadiusGrid::localized(5).unwrap();
    let zero = continuity_norm(&f, &g, &[0.0, 0.0], &t, &rg, &q(), 2).unwrap();
    assert_eq!(zero, 0.0);
    let h = [2.0 * spec.spacing(0), 0.0];
    let c = continuity_norm(&f, &g, &h, &t, &rg, &q(), 2).unwrap();
    let a = maximal_lr_norm(&f, &g, &rg, 2.0, &q(), 2).unwrap();
    let b = maximal_lr_norm(&f, &shift(&g, &h).unwrap(), &rg, 2.0, &q(), 2).unwrap();
    assert!(c > 0.0);
    assert!(c <= a + b + 1e-12);
    assert!(continuity_norm(&f, &g, &[1.5, 0.0], &t, &rg, &q(), 2).is_err());

    assert_eq!(double_continuity_norm(&f, &g, &[0.0, 0.0], &h, &t, &rg, &q(), 2).unwrap(), 0.0);
    assert_eq!(double_continuity_norm(&f, &g, &h, &[0.0, 0.0], &t, &rg, &q(), 2).unwrap(), 0.0);
    let dd = double_continuity_norm(&f, &g, &h, &h, &t, &rg, &q(), 2).unwrap();
    let fs = shift(&f, &h).unwrap();
    let gs = shift(&g, &h).unwrap();
    let four = a + b
        + maximal_lr_norm(&fs, &g, &rg, 2.0, &q(), 2).unwrap()
        + maximal_lr_norm(&fs, &gs, &rg, 2.0, &q(), 2).unwrap();
    assert!(dd <= four + 1e-12);
}

#[test]
fn double_continuity_exchange_symmetry() {
    let spec = GridSpec::centered(2, 3.0, 64).unwrap();
    let f = make_indicator(&RegionSpec::ball(&[0.0, 0.0], 0.5), &spec).unwrap();
    let t = ExponentTriple::ints(2, 2, 2);
    let rg = RadiusGrid::localized(5).unwrap();
    let h1 = [spec.spacing(0), 0.0];
    let h2 = [0.0, 3.0 * spec.spacing(0)];
    let a = double_continuity_norm(&f, &f, &h1, &h2, &t, &rg, &q(), 2).unwrap();
    let b = double_continuity_norm(&f, &f, &h2, &h1, &t, &rg, &q(), 2).unwrap();
    assert!((a - b).abs() < 1e-9 * a.max(1e-300), "{a} vs {b}");
}

#[test]
fn continuity_is_lipschitz_for_smooth_inputs() {
    let spec = GridSpec::centered(2, 3.0, 256).unwrap();
    // compactly supported so that the averages can be pruned
    let bump = |r2: f64, w: f64| if r2 < w { (1.0 - r2 / w).powi(3) } else { 0.0 };
    let f = GridFunction::from_fn(spec, |x| bump(x[0] * x[0] + x[1] * x[1], 0.3));
    let g = GridFunction::from_fn(spec, |x| bump((x[0] - 0.1).powi(2) + x[1] * x[1], 0.2));
    let t = ExponentTriple::ints(2, 2, 2);
    let rg = RadiusGrid::localized(5).unwrap();
    let hh = spec.spacing(0);
    let ratios: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|k| {
            let h = [k * hh, 0.0];
            continuity_norm(&f, &g, &h, &t, &rg, &Quadrature::adaptive(128, 1.0), 8).unwrap() / (k * hh)
        })
        .collect();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max / min < 1.5, "{ratios:?}");
}

#[test]
fn continuity_is_translation_invariant() {
    let spec = GridSpec::centered(2, 3.0, 64).unwrap();
    let (f, g) = pair(spec);
    let v = [4.0 * spec.spacing(0), -2.0 * spec.spacing(1)];
    let (fs, gs) = (shift(&f, &v).unwrap(), shift(&g, &v).unwrap());
    let t = ExponentTriple::ints(2, 2, 2);
    let rg = RadiusGrid::localized(5).unwrap();
    let h = [spec.spacing(0), spec.spacing(1)];
    let a = continuity_norm(&f, &g, &h, &t, &rg, &q(), 1).unwrap();
    let b = continuity_norm(&fs, &gs, &h, &t, &rg, &q(), 1).unwrap();
    assert!((a - b).abs() < 1e-6 * a, "{a} vs {b}");
}

#[test]
fn pointwise_bound_holds_with_small_constant() {
    let spec = GridSpec::new(2, &[0.0, 0.0], &[1.0, 1.0], 16).unwrap();
    let f = make_indicator(&RegionSpec::cuboid(&[0.0, 0.25], &[0.5, 0.75]), &spec).unwrap();
    let g = make_indicator(&RegionSpec::cuboid(&[0.5, 0.0], &[0.875, 0.5]), &spec).unwrap();
    let radii = octave_radii(-5, 0, 4).unwrap();
    let qq = Quadrature::adaptive(64, 1.0);
    let m = full_maximal(&f, &g, -5, 0, 4, &qq).unwrap();
    let hl = hardy_littlewood_maximal(&f);
    let lin = linear_maximal_over(&g, &dominating_linear_radii(&radii, &qq, 2).unwrap(), &qq).unwrap();
    for i in 0..spec.len() {
        let rhs = hl.values()[i] * lin.values()[i];
        assert!(m.values()[i] <= 10.0 * rhs + 1e-12, "at {i}: {} vs {rhs}", m.values()[i]);
    }
}

fn analytic(c: f64) -> impl Fn(&Point) -> f64 + Sync {
    move |x: &Point| (-((x[0] - c).powi(2) + x[1] * x[1]) / 0.1).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn localized_maximal_is_sublinear(c1 in -0.5f64..0.5, c2 in -0.5f64..0.5, w in 0.5f64..2.0) {
        let f1 = FnField::new(2, analytic(c1));
        let f2 = FnField::new(2, analytic(c2));
        let sum = FnField::new(2, move |x: &Point| analytic(c1)(x) + w * analytic(c2)(x));
        let f2w = FnField::new(2, move |x: &Point| w * analytic(c2)(x));
        let g = FnField::new(2, analytic(0.2));
        let radii = RadiusGrid::localized(4).unwrap().radii();
        let xs = [[0.0, 0.0, 0.0], [0.7, -0.3, 0.0]];
        let s = maximal_at_points(&sum, &g, &radii, &xs, &q()).unwrap();
        let a = maximal_at_points(&f1, &g, &radii, &xs, &q()).unwrap();
        let b = maximal_at_points(&f2w, &g, &radii, &xs, &q()).unwrap();
        let _ = f2;
        for i in 0..xs.len() {
            prop_assert!(s[i] <= a[i] + b[i] + 1e-12);
        }
    }
}
