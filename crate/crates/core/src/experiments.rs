//! Extremizer families, scaling runs and the experiment suites built on the
//! rest of the crate.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::averaging::{gauss_legendre, linear_average_at, Quadrature};
use crate::dyadic::DyadicCube;
use crate::error::{LabError, Result};
use crate::fields::{lp_norm, make_indicator, pairwise_sum_by, GridFunction, GridSpec, Point, RegionSpec};
use crate::fit::{fit_power_law, ScalingFit};
use crate::maximal::{
    continuity_norm, dominating_linear_radii, full_maximal, hardy_littlewood_maximal,
    linear_maximal_over, maximal_at_points, octave_radii, MaximalKind, RadiusGrid,
};
use crate::region::{in_region, necessary_bounds, Exponent, ExponentTriple, Recip};
use crate::spectral::{lp_decay_experiment, CircleRule, LpOperator, PeriodicField};
use crate::sparse::{build_sparse_family, cz_decompose, domination_ratio, verify_sparsity, DominationConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtremizerKind {
    /// Small balls for `f`, `g` against a fixed annulus of radius `1/√2`.
    BallAnnulus,
    /// Thin annuli of radius `1/√2` for `f`, `g` against a `δ`-ball.
    AnnuliBall,
    /// Knapp plates at the origin against a slab along the last axis.
    KnappBoxes,
}

impl ExtremizerKind {
    pub const ALL: [ExtremizerKind; 3] = [
        ExtremizerKind::BallAnnulus,
        ExtremizerKind::AnnuliBall,
        ExtremizerKind::KnappBoxes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExtremizerKind::BallAnnulus => "ball-annulus",
            ExtremizerKind::AnnuliBall => "annuli-ball",
            ExtremizerKind::KnappBoxes => "knapp-boxes",
        }
    }

    /// Exponent of `δ` in the lower bound for `⟨M(f, g), h⟩`.
    pub fn lower_exponent(self, d: usize) -> f64 {
        let d = d as f64;
        match self {
            ExtremizerKind::BallAnnulus => 2.0 * d - 1.0,
            ExtremizerKind::AnnuliBall => d + 1.0,
            ExtremizerKind::KnappBoxes => d + (d - 1.0) / 2.0,
        }
    }

    /// Exponent of `δ` in `‖f‖_p ‖g‖_q ‖h‖_{r'}`.
    pub fn upper_exponent(self, d: usize, t: &ExponentTriple) -> f64 {
        let d = d as f64;
        let pq = t.p.recip().to_f64() + t.q.recip().to_f64();
        let inv_rc = 1.0 - t.r.recip().to_f64();
        match self {
            ExtremizerKind::BallAnnulus => d * pq,
            ExtremizerKind::AnnuliBall => pq + d * inv_rc,
            ExtremizerKind::KnappBoxes => (d + 1.0) / 2.0 * pq + (d - 1.0) / 2.0 * inv_rc,
        }
    }

    /// The box holding all three functions for `δ <= 1/8`.
    pub fn grid_box(self, d: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![-1.0; d];
        let mut hi = vec![1.0; d];
        if self == ExtremizerKind::KnappBoxes {
            lo[d - 1] = -0.5;
            hi[d - 1] = 1.5;
        }
        (lo, hi)
    }

    /// The bound on `1/p + 1/q` this example forces.
    pub fn necessary_bound(self, d: usize, r: Exponent) -> Result<Recip> {
        let [ball, annuli, knapp] = necessary_bounds(d, r)?;
        Ok(match self {
            ExtremizerKind::BallAnnulus => ball,
            ExtremizerKind::AnnuliBall => annuli,
            ExtremizerKind::KnappBoxes => knapp,
        })
    }
}

impl fmt::Display for ExtremizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExtremizerKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        ExtremizerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LabError::Parse(format!("unknown extremizer kind {s:?}")))
    }
}

/// Whether `1/p + 1/q` obeys the bound forced by `kind`.
pub fn necessity_check(kind: ExtremizerKind, d: usize, t: &ExponentTriple) -> Result<bool> {
    let sum = t.p.recip().add(t.q.recip());
    Ok(sum.le(kind.necessary_bound(d, t.r)?))
}

/// Free constants of the extremizer families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtremizerConstants {
    /// Radius ratio `g / f` for the balls, or annulus half-width of `g` over `δ`.
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    /// Thickness of the fixed annulus.
    pub eps0: f64,
}

impl ExtremizerConstants {
    /// Values chosen by [`calibrate`] in `d = 2` on a 256-sample grid over
    /// `δ ∈ {2^-3, 2^-4, 2^-5}` with `(p, q, r) = (2, 2, 2)`; other
    /// dimensions reuse them.
    pub fn calibrated(kind: ExtremizerKind, _d: usize) -> Self {
        let (c, c1, c2) = match kind {
            ExtremizerKind::BallAnnulus => (4.0, 1.0, 1.0),
            ExtremizerKind::AnnuliBall => (2.0, 1.0, 1.0),
            ExtremizerKind::KnappBoxes => (1.0, 2.0, 2.0),
        };
        ExtremizerConstants {
            c,
            c1,
            c2,
            eps0: 0.125,
        }
    }
}

/// One member of an extremizer family on a grid.
#[derive(Clone, Debug)]
pub struct Extremizer {
    pub kind: ExtremizerKind,
    pub d: usize,
    pub delta: f64,
    pub constants: ExtremizerConstants,
    pub f: GridFunction,
    pub g: GridFunction,
    pub h: GridFunction,
    pub h_region: RegionSpec,
}

fn check_kind_dim(kind: ExtremizerKind, d: usize) -> Result<()> {
    if !(1..=3).contains(&d) || (kind == ExtremizerKind::KnappBoxes && d < 2) {
        return Err(LabError::UnsupportedDimension(d));
    }
    Ok(())
}

/// The grid an extremizer family lives on, with `δ >= 4 · spacing` checked.
pub fn extremizer_grid(kind: ExtremizerKind, d: usize, delta: f64, n: usize) -> Result<GridSpec> {
    check_kind_dim(kind, d)?;
    if !(delta > 0.0 && delta <= 0.125) {
        return Err(LabError::Domain(format!("delta must lie in (0, 1/8], got {delta}")));
    }
    let (lo, hi) = kind.grid_box(d);
    let spec = GridSpec::new(d, &lo, &hi, n)?;
    let max_spacing = delta / 4.0;
    if spec.max_spacing() > max_spacing * (1.0 + 1e-12) {
        let width = hi[0] - lo[0];
        return Err(LabError::Resolution {
            delta,
            max_spacing,
            required_n: (width / max_spacing).ceil() as usize,
        });
    }
    Ok(spec)
}

fn annulus(d: usize, mid: f64, half: f64) -> RegionSpec {
    RegionSpec::annulus(&vec![0.0; d], mid - half, mid + half)
}

fn plate(d: usize, long: f64, short: f64) -> RegionSpec {
    let mut hi = vec![long; d];
    hi[d - 1] = short;
    let lo: Vec<f64> = hi.iter().map(|v| -v).collect();
    RegionSpec::cuboid(&lo, &hi)
}

fn support_regions(
    kind: ExtremizerKind,
    d: usize,
    delta: f64,
    c: &ExtremizerConstants,
) -> [RegionSpec; 3] {
    let origin = vec![0.0; d];
    let sq = delta.sqrt();
    match kind {
        ExtremizerKind::BallAnnulus => [
            RegionSpec::ball(&origin, delta),
            RegionSpec::ball(&origin, c.c * delta),
            RegionSpec::annulus(&origin, FRAC_1_SQRT_2, FRAC_1_SQRT_2 + c.eps0),
        ],
        ExtremizerKind::AnnuliBall => [
            annulus(d, FRAC_1_SQRT_2, 2.0 * delta),
            annulus(d, FRAC_1_SQRT_2, c.c * delta),
            RegionSpec::ball(&origin, delta),
        ],
        ExtremizerKind::KnappBoxes => {
            let mut lo = vec![-sq; d];
            let mut hi = vec![sq; d];
            lo[d - 1] = FRAC_1_SQRT_2;
            hi[d - 1] = SQRT_2;
            [
                plate(d, c.c1 * sq, c.c1 * delta),
                plate(d, c.c2 * sq, c.c2 * delta),
                RegionSpec::cuboid(&lo, &hi),
            ]
        }
    }
}

/// Indicators `(f, g, h)` of the example `kind` at scale `δ` on an
/// `n`-per-axis grid.
pub fn make_extremizer(
    kind: ExtremizerKind,
    d: usize,
    delta: f64,
    n: usize,
    constants: &ExtremizerConstants,
) -> Result<Extremizer> {
    let spec = extremizer_grid(kind, d, delta, n)?;
    let [rf, rg, rh] = support_regions(kind, d, delta, constants);
    for r in [&rf, &rg, &rh] {
        let (lo, hi) = r.bounding_box();
        for k in 0..d {
            if lo[k] < spec.lo[k] || hi[k] > spec.hi[k] {
                return Err(LabError::Domain(format!(
                    "{kind} support at delta {delta} leaves the grid box; reduce the constants"
                )));
            }
        }
    }
    Ok(Extremizer {
        kind,
        d,
        delta,
        constants: *constants,
        f: make_indicator(&rf, &spec)?,
        g: make_indicator(&rg, &spec)?,
        h: make_indicator(&rh, &spec)?,
        h_region: rh,
    })
}

/// Unit vector along which radial profiles are sampled; off the grid axes.
fn ray(d: usize) -> Point {
    match d {
        1 => [1.0, 0.0, 0.0],
        2 => [0.3f64.cos(), 0.3f64.sin(), 0.0],
        _ => {
            let (a, b) = (0.3f64, 1.1f64);
            [a.cos() * b.sin(), a.sin() * b.sin(), b.cos()]
        }
    }
}

fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Nodes of `∫_a^b` mapped from Gauss–Legendre on `[-1, 1]`.
fn gl_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter()
        .zip(&w)
        .map(|(x, w)| (a + (b - a) * (x + 1.0) / 2.0, w * (b - a) / 2.0))
        .collect()
}

/// Points and weights integrating over the support of `h`.
///
/// The ball and annulus examples are radially symmetric, so the radial
/// profile is sampled along one ray and weighted by the sphere area.
fn h_rule(ex: &Extremizer, nodes: usize) -> Vec<(Point, f64)> {
    let d = ex.d;
    let radial = |a: f64, b: f64| -> Vec<(Point, f64)> {
        let u = ray(d);
        gl_interval(nodes, a, b)
            .into_iter()
            .map(|(rho, w)| {
                let mut x = [0.0; 3];
                for k in 0..d {
                    x[k] = rho * u[k];
                }
                (x, w * sphere_area(d) * rho.powi(d as i32 - 1))
            })
            .collect()
    };
    match ex.kind {
        ExtremizerKind::BallAnnulus => radial(FRAC_1_SQRT_2, FRAC_1_SQRT_2 + ex.constants.eps0),
        ExtremizerKind::AnnuliBall => radial(0.0, ex.delta),
        ExtremizerKind::KnappBoxes => {
            let sq = ex.delta.sqrt();
            let short = gl_interval(nodes.div_ceil(2).max(2), -sq, sq);
            let long = gl_interval(nodes, FRAC_1_SQRT_2, SQRT_2);
            let mut out = vec![([0.0; 3], 1.0)];
            for k in 0..d {
                let axis = if k == d - 1 { &long } else { &short };
                out = out
                    .iter()
                    .flat_map(|(x, w)| {
                        axis.iter().map(move |&(c, wc)| {
                            let mut y = *x;
                            y[k] = c;
                            (y, w * wc)
                        })
                    })
                    .collect();
            }
            out
        }
    }
}

/// Resolution and quadrature settings for [`sharpness_run`].
#[derive(Clone, Copy, Debug)]
pub struct SharpnessConfig {
    pub n: usize,
    pub constants: Option<ExtremizerConstants>,
    /// Radii per unit length in `[1, 2]` times `δ_min`.
    pub radius_density: f64,
    /// Slicing nodes per unit `1/δ`.
    pub radial_density: f64,
    pub oversample: f64,
    /// Gauss–Legendre nodes along each long direction of `supp h`.
    pub h_nodes: usize,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        SharpnessConfig {
            n: 1024,
            constants: None,
            radius_density: 4.0,
            radial_density: 16.0,
            oversample: 1.0,
            h_nodes: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SharpnessRow {
    pub delta: f64,
    /// `⟨M̃(f, g), h⟩` with `M̃` the localized maximal function.
    pub lower: f64,
    /// `‖f‖_p ‖g‖_q ‖h‖_{r'}`.
    pub upper: f64,
}

#[derive(Clone, Debug)]
pub struct SharpnessResult {
    pub kind: ExtremizerKind,
    pub d: usize,
    pub triple: ExponentTriple,
    pub rows: Vec<SharpnessRow>,
    pub lower: ScalingFit,
    pub upper: ScalingFit,
}

fn conj_f64(t: &ExponentTriple) -> Result<f64> {
    t.r_conj_f64()
        .ok_or_else(|| LabError::Domain(format!("r = {} has no Hölder conjugate", t.r)))
}

fn lower_pairing(ex: &Extremizer, radii: &[f64], cfg: &SharpnessConfig) -> Result<f64> {
    let radial = ((cfg.radial_density / ex.delta).ceil() as usize).max(32);
    let q = Quadrature::adaptive(radial, cfg.oversample);
    let rule = h_rule(ex, cfg.h_nodes);
    let points: Vec<Point> = rule.iter().map(|r| r.0).collect();
    let m = maximal_at_points(&ex.f, &ex.g, radii, &points, &q)?;
    Ok(pairwise_sum_by(m.len(), &|i| m[i] * rule[i].1))
}

/// Lower and upper scaling of one extremizer family over `deltas`.
pub fn sharpness_run(
    kind: ExtremizerKind,
    d: usize,
    deltas: &[f64],
    t: &ExponentTriple,
    cfg: &SharpnessConfig,
) -> Result<SharpnessResult> {
    if deltas.len() < 3 {
        return Err(LabError::InsufficientData {
            needed: 3,
            got: deltas.len(),
        });
    }
    for &delta in deltas {
        extremizer_grid(kind, d, delta, cfg.n)?;
    }
    let rc = conj_f64(t)?;
    let constants = cfg
        .constants
        .unwrap_or_else(|| ExtremizerConstants::calibrated(kind, d));
    let delta_min = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    let n_t = (cfg.radius_density / delta_min).ceil() as usize + 1;
    let radii = RadiusGrid::localized(n_t)?.radii();
    let rows = deltas
        .iter()
        .map(|&delta| {
            let ex = make_extremizer(kind, d, delta, cfg.n, &constants)?;
            let lower = lower_pairing(&ex, &radii, cfg)?;
            let upper = lp_norm(&ex.f, t.p.to_f64()) * lp_norm(&ex.g, t.q.to_f64()) * lp_norm(&ex.h, rc);
            log::info!("{kind} d={d} delta={delta:e}: lower {lower:e}, upper {upper:e}");
            Ok(SharpnessRow { delta, lower, upper })
        })
        .collect::<Result<Vec<_>>>()?;
    let lower = fit_power_law(&rows.iter().map(|r| (r.delta, r.lower)).collect::<Vec<_>>())?;
    let upper = fit_power_law(&rows.iter().map(|r| (r.delta, r.upper)).collect::<Vec<_>>())?;
    Ok(SharpnessResult {
        kind,
        d,
        triple: *t,
        rows,
        lower,
        upper,
    })
}

/// Candidate values searched by [`calibrate`].
pub const CALIBRATION_GRID: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Pick the constants maximizing `min_δ lower(δ) / upper(δ)` over
/// [`CALIBRATION_GRID`], skipping candidates whose supports leave the box.
pub fn calibrate(
    kind: ExtremizerKind,
    d: usize,
    deltas: &[f64],
    t: &ExponentTriple,
    cfg: &SharpnessConfig,
) -> Result<(ExtremizerConstants, f64)> {
    let base = ExtremizerConstants::calibrated(kind, d);
    let mut candidates = Vec::new();
    for &a in &CALIBRATION_GRID {
        match kind {
            ExtremizerKind::KnappBoxes => {
                for &b in &CALIBRATION_GRID {
                    candidates.push(ExtremizerConstants { c1: a, c2: b, ..base });
                }
            }
            _ => candidates.push(ExtremizerConstants { c: a, ..base }),
        }
    }
    let mut best: Option<(ExtremizerConstants, f64)> = None;
    for c in candidates {
        let run = sharpness_run(
            kind,
            d,
            deltas,
            t,
            &SharpnessConfig {
                constants: Some(c),
                ..*cfg
            },
        );
        let run = match run {
            Ok(r) => r,
            Err(LabError::Domain(msg)) => {
                log::debug!("skipping {c:?}: {msg}");
                continue;
            }
            Err(e) => return Err(e),
        };
        let score = run
            .rows
            .iter()
            .map(|r| r.lower / r.upper)
            .fold(f64::INFINITY, f64::min);
        log::info!("{kind} {c:?}: score {score:e}");
        if best.as_ref().map_or(true, |b| score > b.1) {
            best = Some((c, score));
        }
    }
    best.ok_or_else(|| LabError::Domain("no calibration candidate fits the grid".into()))
}

/// Inputs for [`continuity_decay_run`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContinuityInput {
    /// Indicators of balls of radius `1/4`.
    Indicator,
    /// Gaussians of width `1/8` cut off at radius `1/2`.
    Gaussian,
}

impl ContinuityInput {
    pub fn name(self) -> &'static str {
        match self {
            ContinuityInput::Indicator => "indicator",
            ContinuityInput::Gaussian => "gaussian",
        }
    }
}

impl FromStr for ContinuityInput {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indicator" => Ok(ContinuityInput::Indicator),
            "gaussian" => Ok(ContinuityInput::Gaussian),
            _ => Err(LabError::Parse(format!("unknown input kind {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ContinuityConfig {
    pub n: usize,
    /// The grid is `[-half_width, half_width]^d`.
    pub half_width: f64,
    pub n_radii: usize,
    pub quadrature: Quadrature,
    pub stride: usize,
}

impl Default for ContinuityConfig {
    fn default() -> Self {
        ContinuityConfig {
            n: 1024,
            half_width: 2.0,
            n_radii: 9,
            quadrature: Quadrature::adaptive(64, 1.0),
            stride: 32,
        }
    }
}

fn continuity_inputs(
    spec: GridSpec,
    input: ContinuityInput,
) -> Result<(GridFunction, GridFunction)> {
    let d = spec.d;
    match input {
        ContinuityInput::Indicator => {
            let mut c = vec![0.0; d];
            let f = make_indicator(&RegionSpec::ball(&c, 0.25), &spec)?;
            c[d - 1] = 0.125;
            let g = make_indicator(&RegionSpec::ball(&c, 0.25), &spec)?;
            Ok((f, g))
        }
        ContinuityInput::Gaussian => {
            let bump = move |x: &Point, c: f64| {
                let r2: f64 = (0..d)
                    .map(|k| {
                        let y = if k == d - 1 { x[k] - c } else { x[k] };
                        y * y
                    })
                    .sum();
                if r2 <= 0.25 {
                    (-r2 / (2.0 / 64.0)).exp()
                } else {
                    0.0
                }
            };
            let f = GridFunction::from_fn(spec, |x| bump(x, 0.0));
            let g = GridFunction::from_fn(spec, |x| bump(x, 0.125));
            Ok((f, g))
        }
    }
}

/// `‖sup_{t ∈ [1,2]} |A_t(f, g - τ_h g)|‖_r` for shifts `h e_1`, and the
/// fitted power of `|h|`.
pub fn continuity_decay_run(
    d: usize,
    t: &ExponentTriple,
    hs: &[f64],
    input: ContinuityInput,
    cfg: &ContinuityConfig,
) -> Result<(Vec<(f64, f64)>, ScalingFit)> {
    if !(2..=3).contains(&d) {
        return Err(LabError::UnsupportedDimension(d));
    }
    if !in_region(d, t) {
        return Err(LabError::Domain(format!("{t} is outside the sufficient region for d = {d}")));
    }
    if hs.len() < 3 {
        return Err(LabError::InsufficientData {
            needed: 3,
            got: hs.len(),
        });
    }
    if let Some(h) = hs.iter().find(|h| !(**h > 0.0 && **h < 1.0)) {
        return Err(LabError::Domain(format!("shifts must lie in (0, 1), got {h}")));
    }
    let spec = GridSpec::centered(d, cfg.half_width, cfg.n)?;
    let (f, g) = continuity_inputs(spec, input)?;
    let rg = RadiusGrid::localized(cfg.n_radii)?;
    let rows = hs
        .iter()
        .map(|&h| {
            let mut v = vec![0.0; d];
            v[0] = h;
            let norm = continuity_norm(&f, &g, &v, t, &rg, &cfg.quadrature, cfg.stride)?;
            log::info!("continuity {} h={h:e}: {norm:e}", input.name());
            Ok((h, norm))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_power_law(&rows)?;
    Ok((rows, fit))
}

/// Whether `(1/p, 1/r)` lies strictly inside the triangle with vertices
/// `(0,0)`, `(1/2,1/2)`, `(2/5,1/5)`.
pub fn in_triangle_d2(p: Exponent, r: Exponent) -> bool {
    let x = p.recip();
    let y = r.recip();
    y.lt(x) && x.mul(Recip::ratio(1, 2)).lt(y) && x.mul(Recip::int(3)).sub(Recip::int(1)).lt(y)
}

#[derive(Clone, Copy, Debug)]
pub struct PerturbationConfig {
    pub n: usize,
    /// The grid is `[-half_width, half_width]^2`.
    pub half_width: f64,
    /// Radii in `[1, 2]` at which the averages are compared.
    pub n_radii: usize,
    pub angular: usize,
    /// Evaluation points per axis on `[-eval_half ε, eval_half ε]^2`.
    pub eval_per_axis: usize,
    pub eval_half: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            n: 512,
            half_width: 1.25,
            n_radii: 161,
            angular: 256,
            eval_per_axis: 64,
            eval_half: 2.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationRow {
    pub gamma: f64,
    pub eps: f64,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct PerturbationResult {
    pub rows: Vec<PerturbationRow>,
    /// Slope in `γ` at each fixed `ε`.
    pub gamma_fits: Vec<(f64, ScalingFit)>,
    /// Slope in `ε` at each fixed `γ`.
    pub eps_fits: Vec<(f64, ScalingFit)>,
}

/// Largest `|a_j - a_k|` with `|j - k| <= w`.
fn windowed_spread(a: &[f64], w: usize) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..a.len() {
        for k in j + 1..(j + w + 1).min(a.len()) {
            best = best.max((a[j] - a[k]).abs());
        }
    }
    best
}

/// `‖sup_{s,t ∈ [1,2], |s-t| < γ} |A_{εs} f_ε - A_{εt} f_ε|‖_r` over the
/// `(γ, ε)` lattice, with `f_ε = f0(·/ε) / ‖f0(·/ε)‖_p` and `f0` supported
/// in the unit ball.
pub fn radius_perturbation_run(
    p: Exponent,
    r: Exponent,
    gammas: &[f64],
    epss: &[f64],
    f0: &(dyn Fn(&Point) -> f64 + Sync),
    cfg: &PerturbationConfig,
) -> Result<PerturbationResult> {
    if gammas.is_empty() || epss.is_empty() || gammas.len() + epss.len() < 4 {
        return Err(LabError::InsufficientData {
            needed: 4,
            got: gammas.len() + epss.len(),
        });
    }
    if gammas.iter().chain(epss).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(LabError::Domain("gamma and eps must be positive".into()));
    }
    if gammas.iter().any(|&g| g > 1.0) {
        return Err(LabError::Domain("gamma must not exceed 1".into()));
    }
    if epss.iter().any(|&e| e > cfg.half_width) {
        return Err(LabError::Domain("eps support leaves the grid box".into()));
    }
    if !in_triangle_d2(p, r) {
        log::warn!("(1/p, 1/r) = ({}, {}) is not inside the open triangle", p.recip(), r.recip());
    }
    let spec = GridSpec::centered(2, cfg.half_width, cfg.n)?;
    let radii = RadiusGrid::localized(cfg.n_radii)?.radii();
    let step = 1.0 / (cfg.n_radii - 1) as f64;
    let q = Quadrature::fixed(1, cfg.angular);
    let (pf, rf) = (p.to_f64(), r.to_f64());
    let m = cfg.eval_per_axis;
    let du = 2.0 * cfg.eval_half / m as f64;
    let mut rows = Vec::new();
    for &eps in epss {
        let raw = GridFunction::from_fn(spec, |x| f0(&[x[0] / eps, x[1] / eps, 0.0]));
        let norm = lp_norm(&raw, pf);
        if !(norm > 0.0) {
            return Err(LabError::Domain(format!("f0 vanishes on the grid at eps {eps}")));
        }
        let f = raw.scale(1.0 / norm);
        let profiles: Vec<Vec<f64>> = (0..m * m)
            .into_par_iter()
            .map(|i| {
                let x = [
                    eps * (-cfg.eval_half + (i / m) as f64 * du),
                    eps * (-cfg.eval_half + (i % m) as f64 * du),
                    0.0,
                ];
                radii.iter().map(|s| linear_average_at(&f, &x, eps * s, &q)).collect()
            })
            .collect();
        let cell = (eps * du).powi(2);
        for &gamma in gammas {
            let w = ((gamma / step) * (1.0 - 1e-12)).ceil() as usize - 1;
            let sups: Vec<f64> = profiles.iter().map(|a| windowed_spread(a, w)).collect();
            let value = if r.is_infinite() {
                sups.iter().cloned().fold(0.0, f64::max)
            } else {
                (pairwise_sum_by(sups.len(), &|i| sups[i].powf(rf)) * cell).powf(1.0 / rf)
            };
            rows.push(PerturbationRow { gamma, eps, value });
        }
    }
    let fits = |fixed: &[f64], free: &[f64], pick: &dyn Fn(&PerturbationRow, f64) -> Option<f64>| {
        if free.len() < 3 {
            return Ok(Vec::new());
        }
        fixed
            .iter()
            .map(|&v| {
                let samples: Vec<(f64, f64)> =
                    rows.iter().filter_map(|row| pick(row, v).map(|s| (s, row.value))).collect();
                Ok((v, fit_power_law(&samples)?))
            })
            .collect::<Result<Vec<_>>>()
    };
    let gamma_fits = fits(epss, gammas, &|row, e| (row.eps == e).then_some(row.gamma))?;
    let eps_fits = fits(gammas, epss, &|row, g| (row.gamma == g).then_some(row.eps))?;
    Ok(PerturbationResult {
        rows,
        gamma_fits,
        eps_fits,
    })
}

/// Smooth radial bump supported in the ball of radius `1/2`.
pub fn radial_bump(x: &Point) -> f64 {
    let r2 = 4.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Nonnegative step function on `[0,1)^d`: constant on each of `8^d`
/// blocks, with about 40% of the blocks empty, plus optional spikes on
/// cells of side `1/cells`.
#[derive(Clone, Debug)]
pub struct StepInput {
    pub d: usize,
    pub blocks: Vec<f64>,
    pub cells: usize,
    pub spikes: Vec<(Vec<usize>, f64)>,
}

const BLOCKS_PER_AXIS: usize = 8;

impl StepInput {
    pub fn random(d: usize, rng: &mut ChaCha8Rng) -> Self {
        let blocks = (0..BLOCKS_PER_AXIS.pow(d as u32))
            .map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.0..4.0) } else { 0.0 })
            .collect();
        StepInput {
            d,
            blocks,
            cells: BLOCKS_PER_AXIS,
            spikes: Vec::new(),
        }
    }

    /// Evaluate at `x`; zero outside `[0,1)^d`.
    pub fn at(&self, x: &Point) -> f64 {
        if (0..self.d).any(|k| !(0.0..1.0).contains(&x[k])) {
            return 0.0;
        }
        let cell = |k: usize, per: usize| ((x[k] * per as f64) as usize).min(per - 1);
        let mut b = 0;
        for k in 0..self.d {
            b = b * BLOCKS_PER_AXIS + cell(k, BLOCKS_PER_AXIS);
        }
        let spike: f64 = self
            .spikes
            .iter()
            .filter(|(c, _)| (0..self.d).all(|k| c[k] == cell(k, self.cells)))
            .map(|s| s.1)
            .sum();
        self.blocks[b] + spike
    }

    pub fn sample(&self, spec: GridSpec) -> GridFunction {
        GridFunction::from_fn(spec, |x| self.at(x))
    }
}

pub fn random_block_function(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
    StepInput::random(spec.d, rng).sample(spec)
}

/// Three step inputs sharing up to three spike cells of side `1/cells`.
pub fn spiky_triple(d: usize, cells: usize, rng: &mut ChaCha8Rng) -> [StepInput; 3] {
    let n_spikes = rng.gen_range(0..=3);
    let spots: Vec<Vec<usize>> = (0..n_spikes)
        .map(|_| (0..d).map(|_| rng.gen_range(0..cells)).collect())
        .collect();
    let mut make = || {
        let mut s = StepInput::random(d, rng);
        s.cells = cells;
        s.spikes = spots.iter().map(|c| (c.clone(), rng.gen_range(10.0..60.0))).collect();
        s
    };
    [make(), make(), make()]
}

/// Random step function with 16 steps on `[-1, 1)`, zero elsewhere on the
/// period `[-4, 4)`, normalized in `L^2`.
pub fn random_steps(rng: &mut ChaCha8Rng, n: usize) -> Result<PeriodicField> {
    let heights: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = PeriodicField::from_fn(-4.0, 8.0, n, |x| {
        if (-1.0..1.0).contains(&x) {
            heights[(((x + 1.0) * 8.0) as usize).min(15)]
        } else {
            0.0
        }
    })?;
    let norm = f.l2_norm();
    Ok(f.scale(1.0 / norm))
}

#[derive(Clone, Debug)]
pub struct LpDecayCase {
    pub seed: u64,
    /// Fit of `‖A_1(Q_k f_1, f_2)‖_1` against `2^k`.
    pub projection: ScalingFit,
    /// Same with `Q_k` replaced by the identity.
    pub identity: ScalingFit,
}

/// The one-dimensional Littlewood–Paley decay run on random step pairs,
/// one pair per seed.
pub fn lp_decay_suite(seeds: &[u64], n: usize, ks: &[i32], rule: &CircleRule) -> Result<Vec<LpDecayCase>> {
    seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f1 = random_steps(&mut rng, n)?;
            let f2 = random_steps(&mut rng, n)?;
            let (_, projection) = lp_decay_experiment(&f1, &f2, ks, LpOperator::Projection, rule)?;
            let (_, identity) = lp_decay_experiment(&f1, &f2, ks, LpOperator::Identity, rule)?;
            log::info!("lp decay seed {seed}: slope {:.3}, control {:.3}", projection.slope, identity.slope);
            Ok(LpDecayCase {
                seed,
                projection,
                identity,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct PointwiseReport {
    /// Largest `M(f, g) / (HL f · M_linear g)` over the suite.
    pub max_ratio: f64,
    /// Points where the right side vanishes but the left does not.
    pub violations: usize,
}

/// `full_maximal(f, g) <= C · HL f · M_linear g` on `cases` seeded inputs
/// on the unit square at the default quadrature.
pub fn pointwise_bound_run(cases: usize, seed: u64, n: usize) -> Result<PointwiseReport> {
    let spec = GridSpec::new(2, &[0.0, 0.0], &[1.0, 1.0], n)?;
    let q = Quadrature::default();
    let (m_lo, m_hi, per) = (-5, 0, 4);
    let radii = octave_radii(m_lo, m_hi, per)?;
    let lin_radii = dominating_linear_radii(&radii, &q, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..cases {
        let f = random_block_function(spec, &mut rng);
        let g = random_block_function(spec, &mut rng);
        let m = full_maximal(&f, &g, m_lo, m_hi, per, &q)?;
        let hl = hardy_littlewood_maximal(&f);
        let lin = linear_maximal_over(&g, &lin_radii, &q)?;
        for i in 0..spec.len() {
            let lhs = m.values()[i];
            let rhs = hl.values()[i] * lin.values()[i];
            if rhs > 0.0 {
                max_ratio = max_ratio.max(lhs / rhs);
            } else if lhs > 1e-12 {
                violations += 1;
            }
        }
    }
    Ok(PointwiseReport {
        max_ratio,
        violations,
    })
}

#[derive(Clone, Debug)]
pub struct SparseCase {
    pub cz_passed: bool,
    pub eta: f64,
    pub sparsity_passed: bool,
    pub ratio_coarse: f64,
    pub ratio_fine: f64,
}

#[derive(Clone, Debug)]
pub struct SparseSuiteReport {
    pub d: usize,
    pub cases: Vec<SparseCase>,
}

impl SparseSuiteReport {
    pub fn all_cz_passed(&self) -> bool {
        self.cases.iter().all(|c| c.cz_passed)
    }

    pub fn min_eta(&self) -> f64 {
        self.cases.iter().map(|c| c.eta).fold(f64::INFINITY, f64::min)
    }

    pub fn all_sparse(&self) -> bool {
        self.cases.iter().all(|c| c.sparsity_passed)
    }

    pub fn max_ratio(&self) -> f64 {
        self.cases.iter().map(|c| c.ratio_coarse).fold(0.0, f64::max)
    }

    /// Relative change of the largest domination ratio under grid doubling.
    pub fn max_ratio_change(&self) -> f64 {
        let fine = self.cases.iter().map(|c| c.ratio_fine).fold(0.0, f64::max);
        let coarse = self.max_ratio();
        (fine - coarse).abs() / coarse
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SparseSuiteConfig {
    pub cases: usize,
    pub seed: u64,
    /// Samples per axis on `[0,1)^d`; the doubled grid uses twice as many.
    pub n: usize,
    pub c0: f64,
    pub kind: MaximalKind,
    pub quadrature: Quadrature,
}

impl SparseSuiteConfig {
    pub fn for_dimension(d: usize) -> Self {
        SparseSuiteConfig {
            cases: 20,
            seed: 20,
            n: if d == 1 { 64 } else { 16 },
            c0: 2.0 * 3f64.powi(d as i32),
            kind: MaximalKind::Full {
                m_lo: -3,
                m_hi: 0,
                n_per_octave: 8,
            },
            quadrature: Quadrature::adaptive(64, 1.0),
        }
    }
}

/// Decompositions, families and domination ratios for seeded step-function
/// triples on `[0,1)^d` at two resolutions.
pub fn sparse_suite_run(
    d: usize,
    t: &ExponentTriple,
    cfg: &SparseSuiteConfig,
) -> Result<SparseSuiteReport> {
    if !(1..=2).contains(&d) {
        return Err(LabError::UnsupportedDimension(d));
    }
    let rc = t
        .r_conj
        .ok_or_else(|| LabError::Domain(format!("r = {} has no Hölder conjugate", t.r)))?;
    let q0 = DyadicCube::unit(d)?;
    let coarse = GridSpec::new(d, &vec![0.0; d], &vec![1.0; d], cfg.n)?;
    let fine = GridSpec::new(d, &vec![0.0; d], &vec![1.0; d], 2 * cfg.n)?;
    let dom = DominationConfig {
        kind: cfg.kind,
        quadrature: cfg.quadrature,
        stride: 1,
        c0: cfg.c0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cases = Vec::with_capacity(cfg.cases);
    for case in 0..cfg.cases {
        let inputs = spiky_triple(d, cfg.n, &mut rng);
        let [f, g, h] = [0, 1, 2].map(|i| inputs[i].sample(coarse));
        let mut cz_passed = true;
        for (u, e) in [(&f, t.p), (&g, t.q), (&h, rc)] {
            let cz = cz_decompose(u, &q0, e, cfg.c0)?;
            cz_passed &= cz.check(u)?.passes();
        }
        let family = build_sparse_family(&f, &g, &h, &q0, t, cfg.c0)?;
        let sparsity_passed = verify_sparsity(&family, family.eta).passed();
        let ratio_coarse = domination_ratio(&f, &g, &h, t, &q0, &dom)?.ratio;
        let [f2, g2, h2] = [0, 1, 2].map(|i| inputs[i].sample(fine));
        let ratio_fine = domination_ratio(&f2, &g2, &h2, t, &q0, &dom)?.ratio;
        log::info!(
            "sparse d={d} case {case}: eta {:.4}, ratio {ratio_coarse:.4} -> {ratio_fine:.4}",
            family.eta
        );
        cases.push(SparseCase {
            cz_passed,
            eta: family.eta,
            sparsity_passed,
            ratio_coarse,
            ratio_fine,
        });
    }
    Ok(SparseSuiteReport { d, cases })
}

/// One line of experiment output.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub experiment: String,
    pub kind: String,
    pub d: usize,
    pub triple: Option<ExponentTriple>,
    pub scale: f64,
    pub lower_value: f64,
    pub upper_value: f64,
}

pub const CSV_HEADER: &str = "# sparselab-csv v1";
pub const CSV_COLUMNS: &str = "experiment,kind,d,p,q,r,scale,lower_value,upper_value";

pub fn write_csv<W: Write>(rows: &[CsvRow], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    writeln!(w, "{CSV_COLUMNS}")?;
    for row in rows {
        let (p, q, r) = match &row.triple {
            Some(t) => (t.p.to_string(), t.q.to_string(), t.r.to_string()),
            None => Default::default(),
        };
        writeln!(
            w,
            "{},{},{},{p},{q},{r},{:e},{:e},{:e}",
            row.experiment, row.kind, row.d, row.scale, row.lower_value, row.upper_value
        )?;
    }
    Ok(())
}

impl SharpnessResult {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows
            .iter()
            .map(|r| CsvRow {
                experiment: "sharpness".into(),
                kind: self.kind.name().into(),
                d: self.d,
                triple: Some(self.triple),
                scale: r.delta,
                lower_value: r.lower,
                upper_value: r.upper,
            })
            .collect()
    }
}
