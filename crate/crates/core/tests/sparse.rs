use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparselab_core::averaging::Quadrature;
use sparselab_core::maximal::MaximalKind;
use sparselab_core::sparse::{DominationConfig, SparseMember};
use sparselab_core::{
    build_sparse_family, cube_average, cz_decompose, domination_ratio, make_indicator, shift,
    sparse_form, verify_sparsity, DyadicCube, Exponent, ExponentTriple, GridFunction, GridSpec,
    RegionSpec, SparseFamily,
};

fn unit_grid(d: usize, n: usize) -> GridSpec {
    GridSpec::new(d, &vec![0.0; d], &vec![1.0; d], n).unwrap()
}

/// All standard dyadic cubes strictly inside `Q0 = [0,1)^d` down to `depth`.
fn all_subcubes(d: usize, depth: i32) -> Vec<DyadicCube> {
    let mut out = Vec::new();
    for j in 1..=depth {
        let per = 1i64 << j;
        for flat in 0..per.pow(d as u32) {
            let mut c = vec![0; d];
            let mut r = flat;
            for k in (0..d).rev() {
                c[k] = r % per;
                r /= per;
            }
            out.push(DyadicCube::standard(d, -j, &c).unwrap());
        }
    }
    out
}

/// Stopping cubes found by scanning every subcube: above the level, with no
/// strict ancestor below `Q0` above it.
fn brute_force_stopping(f: &GridFunction, p: Exponent, c0: f64, depth: i32) -> Vec<DyadicCube> {
    let d = f.spec().d;
    let q0 = DyadicCube::unit(d).unwrap();
    let level = c0 * cube_average(f, &q0, p);
    let above: Vec<DyadicCube> = all_subcubes(d, depth)
        .into_iter()
        .filter(|q| cube_average(f, q, p) > level)
        .collect();
    let mut out: Vec<DyadicCube> = above
        .iter()
        .filter(|q| !above.iter().any(|a| a.level > q.level && a.is_ancestor_of(q)))
        .copied()
        .collect();
    out.sort();
    out
}

/// Union of randomly chosen level -3 blocks of `[0,1)^d`.
fn random_blocks(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
    let d = spec.d;
    let per: usize = 8;
    let mut keep = vec![false; per * per.pow(d as u32 - 1)];
    while !keep.iter().any(|&k| k) {
        for k in keep.iter_mut() {
            *k = rng.gen_bool(0.3);
        }
    }
    GridFunction::from_fn(spec, |x| {
        let mut b = 0;
        for k in 0..d {
            b = b * per + ((x[k] * per as f64) as usize).min(per - 1);
        }
        if keep[b] {
            1.0
        } else {
            0.0
        }
    })
}

fn random_values(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
    let vals = (0..spec.len())
        .map(|_| if rng.gen_bool(0.2) { rng.gen_range(0.0..5.0) } else { 0.0 })
        .collect();
    GridFunction::new(spec, vals).unwrap()
}

#[test]
fn cz_example_matches_brute_force() {
    let spec = unit_grid(1, 64);
    let f = make_indicator(&RegionSpec::cuboid(&[0.0], &[0.125]), &spec).unwrap();
    let q0 = DyadicCube::unit(1).unwrap();
    let cz = cz_decompose(&f, &q0, Exponent::int(1), 2.0).unwrap();
    let expected = vec![DyadicCube::standard(1, -2, &[0]).unwrap()];
    assert_eq!(cz.stopping_cubes.cubes, expected);
    assert_eq!(brute_force_stopping(&f, Exponent::int(1), 2.0, 6), expected);
}

#[test]
fn cz_constant_input_has_no_bad_part() {
    let spec = unit_grid(2, 16);
    let f = GridFunction::constant(spec, 2.5);
    let cz = cz_decompose(&f, &DyadicCube::unit(2).unwrap(), Exponent::int(2), 1.5).unwrap();
    assert!(cz.stopping_cubes.is_empty());
    assert_eq!(cz.bad.max_abs(), 0.0);
}

#[test]
fn cz_random_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20 {
        let d = 1 + case % 2;
        let spec = if d == 1 { unit_grid(1, 128) } else { unit_grid(2, 32) };
        let depth = spec.n_per_axis.trailing_zeros() as i32;
        let f = if case % 4 < 2 {
            random_blocks(spec, &mut rng)
        } else {
            random_values(spec, &mut rng)
        };
        let q0 = DyadicCube::unit(d).unwrap();
        for (p, c0) in [(Exponent::int(1), 2.0), (Exponent::int(2), 3.0), (Exponent::Infinite, 1.5)] {
            let cz = cz_decompose(&f, &q0, p, c0).unwrap();
            let report = cz.check(&f).unwrap();
            assert!(report.passes(), "case {case}: {report:?}");
            if !p.is_infinite() {
                assert_eq!(cz.stopping_cubes.cubes, brute_force_stopping(&f, p, c0, depth));
            }
        }
    }
}

#[test]
fn cz_rejects_bad_threshold_and_misaligned_cube() {
    let spec = unit_grid(1, 64);
    let f = GridFunction::constant(spec, 1.0);
    let q0 = DyadicCube::unit(1).unwrap();
    assert!(cz_decompose(&f, &q0, Exponent::int(1), 1.0).is_err());
    let off = GridSpec::new(1, &[0.0], &[1.0], 48).unwrap();
    assert!(cz_decompose(&GridFunction::constant(off, 1.0), &q0, Exponent::int(1), 2.0).is_err());
}

#[test]
fn family_of_indicator_of_q0_is_trivial() {
    for d in 1..=2 {
        let spec = unit_grid(d, 16);
        let one = GridFunction::constant(spec, 1.0);
        let s = build_sparse_family(
            &one,
            &one,
            &one,
            &DyadicCube::unit(d).unwrap(),
            &ExponentTriple::ints(2, 2, 2),
            4.0,
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.eta, 1.0);
    }
}

#[test]
fn zero_inputs_give_q0_alone() {
    let spec = unit_grid(2, 16);
    let z = GridFunction::zeros(spec);
    let q0 = DyadicCube::unit(2).unwrap();
    let s = build_sparse_family(&z, &z, &z, &q0, &ExponentTriple::ints(2, 2, 2), 4.0).unwrap();
    assert_eq!(s.members.len(), 1);
    assert_eq!(s.members[0].cube, q0);
    assert_eq!(s.members[0].exceptional.len(), spec.len());
}

#[test]
fn point_mass_gives_nested_chain() {
    for d in 1..=2 {
        let spec = unit_grid(d, 64);
        let mut vals = vec![0.0; spec.len()];
        vals[spec.flat_index([37, 21, 0])] = 1.0;
        let f = GridFunction::new(spec, vals).unwrap();
        let one = GridFunction::constant(spec, 1.0);
        let s = build_sparse_family(
            &f,
            &one,
            &one,
            &DyadicCube::unit(d).unwrap(),
            &ExponentTriple::ints(1, 2, 2),
            2.0,
        )
        .unwrap();
        assert!(s.len() > 2);
        let cubes: Vec<DyadicCube> = s.members.iter().map(|m| m.cube).collect();
        for w in cubes.windows(2) {
            assert!(w[0].is_ancestor_of(&w[1]));
        }
        let report = verify_sparsity(&s, 1.0 - 2f64.powi(-(d as i32)));
        assert!(report.passed(), "{report:?}");
    }
}

#[test]
fn random_families_are_sparse() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..20 {
        let d = 1 + case % 2;
        let spec = if d == 1 { unit_grid(1, 128) } else { unit_grid(2, 32) };
        let f = random_blocks(spec, &mut rng);
        let g = random_blocks(spec, &mut rng);
        let h = random_values(spec, &mut rng);
        let c0 = 2.0 * 3f64.powi(d as i32);
        let s = build_sparse_family(
            &f,
            &g,
            &h,
            &DyadicCube::unit(d).unwrap(),
            &ExponentTriple::ints(2, 2, 2),
            c0,
        )
        .unwrap();
        let target = 2f64.powi(-(d as i32) - 1);
        let report = verify_sparsity(&s, target);
        assert!(report.passed(), "case {case}: {report:?}");
        assert!(verify_sparsity(&s, s.eta).passed());
        assert!(s.eta >= target);
    }
}

#[test]
fn verify_sparsity_examples() {
    let spec = unit_grid(1, 16);
    let whole = DyadicCube::unit(1).unwrap();
    let left = DyadicCube::standard(1, -1, &[0]).unwrap();
    let single = SparseFamily::new(
        spec,
        vec![SparseMember {
            cube: whole,
            exceptional: (0..16).collect(),
        }],
    );
    assert!(verify_sparsity(&single, 1.0).passed());

    let pair = SparseFamily::new(
        spec,
        vec![
            SparseMember {
                cube: whole,
                exceptional: (8..16).collect(),
            },
            SparseMember {
                cube: left,
                exceptional: (0..8).collect(),
            },
        ],
    );
    assert_eq!(pair.eta, 0.5);
    assert!(verify_sparsity(&pair, 0.5).passed());
    assert!(!verify_sparsity(&pair, 0.6).passed());

    let overlapping = SparseFamily::new(
        spec,
        vec![
            SparseMember {
                cube: whole,
                exceptional: (4..16).collect(),
            },
            SparseMember {
                cube: left,
                exceptional: (0..8).collect(),
            },
        ],
    );
    let report = verify_sparsity(&overlapping, 0.5);
    assert_eq!(report.overlaps, vec![(whole, left)]);

    let leaking = SparseFamily::new(
        spec,
        vec![SparseMember {
            cube: left,
            exceptional: (4..12).collect(),
        }],
    );
    assert_eq!(verify_sparsity(&leaking, 0.5).not_contained, vec![left]);
}

#[test]
fn sparse_form_examples() {
    let spec = unit_grid(1, 32);
    let one = GridFunction::constant(spec, 1.0);
    let t = ExponentTriple::ints(2, 2, 2);
    let whole = DyadicCube::unit(1).unwrap();
    let s = SparseFamily::new(
        spec,
        vec![SparseMember {
            cube: whole,
            exceptional: (0..32).collect(),
        }],
    );
    assert!((sparse_form(&s, &one, &one, &one, &t).unwrap() - 1.0).abs() < 1e-12);
    let f = GridFunction::from_fn(spec, |x| x[0] * x[0]);
    let base = sparse_form(&s, &f, &one, &one, &t).unwrap();
    let scaled = sparse_form(&s, &f.scale(3.0), &one, &one, &t).unwrap();
    assert!((scaled - 3.0 * base).abs() < 1e-12);
    let mut members = s.members.clone();
    members.push(SparseMember {
        cube: DyadicCube::standard(1, -2, &[3]).unwrap(),
        exceptional: vec![],
    });
    let bigger = SparseFamily::new(spec, members);
    assert!(sparse_form(&bigger, &f, &one, &one, &t).unwrap() > base);
}

#[test]
fn family_csv_has_one_row_per_cube() {
    let spec = unit_grid(2, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = random_values(spec, &mut rng);
    let s = build_sparse_family(
        &f,
        &f,
        &f,
        &DyadicCube::unit(2).unwrap(),
        &ExponentTriple::ints(2, 2, 2),
        4.0,
    )
    .unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# sparselab-sparse v1"));
    assert_eq!(lines[1], "lattice_id,level,coord_0,coord_1,eta_Q");
    assert_eq!(lines.len(), s.len() + 2);
}

fn domination_cfg() -> DominationConfig {
    DominationConfig {
        kind: MaximalKind::Lacunary { m_lo: -4, m_hi: 0 },
        quadrature: Quadrature::adaptive(32, 1.0),
        stride: 1,
        c0: 4.0,
    }
}

#[test]
fn domination_of_indicator_of_q0() {
    let spec = GridSpec::new(2, &[-1.0, -1.0], &[2.0, 2.0], 48).unwrap();
    let chi = make_indicator(&RegionSpec::cuboid(&[0.0, 0.0], &[1.0, 1.0]), &spec).unwrap();
    let q0 = DyadicCube::unit(2).unwrap();
    let t = ExponentTriple::ints(2, 2, 2);
    let dom = domination_ratio(&chi, &chi, &chi, &t, &q0, &domination_cfg()).unwrap();
    assert_eq!(dom.family.len(), 1);
    assert!((dom.form - 1.0).abs() < 1e-12);
    assert!(dom.ratio > 0.0 && dom.ratio <= 1.0 + 1e-12, "{}", dom.ratio);
}

#[test]
fn domination_is_translation_covariant() {
    let spec = GridSpec::new(1, &[-2.0], &[2.0], 256).unwrap();
    let f = make_indicator(&RegionSpec::cuboid(&[0.25], &[0.5]), &spec).unwrap();
    let g = make_indicator(&RegionSpec::cuboid(&[0.0], &[0.375]), &spec).unwrap();
    let h = make_indicator(&RegionSpec::cuboid(&[0.5], &[0.875]), &spec).unwrap();
    let t = ExponentTriple::ints(2, 2, 2);
    let a = domination_ratio(&f, &g, &h, &t, &DyadicCube::unit(1).unwrap(), &domination_cfg()).unwrap();
    let v = [-1.0];
    let (f2, g2, h2) = (shift(&f, &v).unwrap(), shift(&g, &v).unwrap(), shift(&h, &v).unwrap());
    let q = DyadicCube::standard(1, 0, &[-1]).unwrap();
    let b = domination_ratio(&f2, &g2, &h2, &t, &q, &domination_cfg()).unwrap();
    assert!((a.ratio - b.ratio).abs() < 1e-9 * a.ratio, "{} vs {}", a.ratio, b.ratio);
    assert!(a.ratio.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn larger_threshold_never_selects_more(seed in 0u64..10_000, c0 in 1.5f64..8.0, two_d in any::<bool>()) {
        let d = if two_d { 2 } else { 1 };
        let spec = if d == 1 { unit_grid(1, 128) } else { unit_grid(2, 32) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_values(spec, &mut rng);
        let g = random_blocks(spec, &mut rng);
        let q0 = DyadicCube::unit(d).unwrap();
        let t = ExponentTriple::ints(2, 2, 2);
        let a = build_sparse_family(&f, &g, &g, &q0, &t, c0).unwrap();
        let b = build_sparse_family(&f, &g, &g, &q0, &t, 2.0 * c0).unwrap();
        prop_assert!(b.len() <= a.len(), "{} > {}", b.len(), a.len());
        prop_assert!(verify_sparsity(&a, a.eta).passed());
    }

    #[test]
    fn cz_invariants_hold(seed in 0u64..10_000, c0 in 1.1f64..6.0, p in 1.0f64..4.0) {
        let spec = unit_grid(2, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_values(spec, &mut rng);
        let cz = cz_decompose(&f, &DyadicCube::unit(2).unwrap(), Exponent::float(p), c0).unwrap();
        let report = cz.check(&f).unwrap();
        prop_assert!(report.passes(), "{:?}", report);
    }
}
