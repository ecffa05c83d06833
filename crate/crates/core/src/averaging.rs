//! Linear and bilinear spherical averages.
//!
//! The bilinear average over `S^{2d-1}` is evaluated by slicing. Writing a
//! point of the big sphere as `(sin φ · u, cos φ · v)` with `u, v` on
//! `S^{d-1}` and `φ ∈ [0, π/2]` gives
//!
//! ```text
//! A_t(f, g)(x) = c ∫ sin^{d-1}φ cos^{d-1}φ · L_{t sin φ} f(x) · L_{t cos φ} g(x) dφ
//! ```
//!
//! where `L_s` is the normalized linear spherical average at radius `s`.
//! In the ball variable `y = sin φ · u` this is the usual slicing formula
//! with weight `(1 - |y|^2)^{(d-2)/2}`; integrating in `φ` removes the
//! square-root endpoint singularity. For `d = 1` the same formula, with
//! `S^0 = {±1}` and a flat weight, is the circle parametrization.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::fields::{pairwise_sum_by, Field, GridFunction, Point};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Quadrature for the normalized surface measure on `S^{d-1}`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub d: usize,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

/// Builds a rule on `S^{d-1}`.
///
/// `d = 1` is the two points `±1`. `d = 2` uses `n` equally spaced angles.
/// `d = 3` uses a Gauss–Legendre rule in the polar cosine times a uniform
/// azimuthal rule, with roughly `n` nodes in total.
pub fn sphere_rule(d: usize, n: usize) -> Result<SphereRule> {
    if n < 2 {
        return Err(LabError::Domain("sphere rule needs at least 2 nodes".into()));
    }
    match d {
        1 => Ok(SphereRule {
            d,
            nodes: vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
            weights: vec![0.5, 0.5],
        }),
        2 => {
            let w = 1.0 / n as f64;
            let nodes = (0..n)
                .map(|j| {
                    let a = 2.0 * PI * j as f64 / n as f64;
                    [a.cos(), a.sin(), 0.0]
                })
                .collect();
            Ok(SphereRule {
                d,
                nodes,
                weights: vec![w; n],
            })
        }
        3 => {
            let n_polar = ((n as f64 / 2.0).sqrt().round() as usize).max(2);
            let n_az = 2 * n_polar;
            let (zs, ws) = gauss_legendre(n_polar);
            let mut nodes = Vec::with_capacity(n_polar * n_az);
            let mut weights = Vec::with_capacity(n_polar * n_az);
            for (z, w) in zs.iter().zip(&ws) {
                let rho = (1.0 - z * z).sqrt();
                for j in 0..n_az {
                    let a = 2.0 * PI * (j as f64 + 0.5) / n_az as f64;
                    nodes.push([rho * a.cos(), rho * a.sin(), *z]);
                    weights.push(0.5 * w / n_az as f64);
                }
            }
            Ok(SphereRule { d, nodes, weights })
        }
        _ => Err(LabError::UnsupportedDimension(d)),
    }
}

fn cached_sphere(d: usize, n: usize) -> Arc<SphereRule> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, usize), Arc<SphereRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(r) = cache.read().unwrap().get(&(d, n)) {
        return r.clone();
    }
    let rule = Arc::new(sphere_rule(d, n).expect("validated sphere rule"));
    cache
        .write()
        .unwrap()
        .entry((d, n))
        .or_insert(rule)
        .clone()
}

/// `Γ(d) / (π^{d/2} Γ(d/2))`, the constant in front of the slicing integral
/// over the unit ball.
pub fn slicing_normalizer(d: usize) -> Result<f64> {
    match d {
        2 => Ok(1.0 / PI),
        3 => Ok(4.0 / (PI * PI)),
        1 => Err(LabError::Domain(
            "slicing normalizer is defined for d >= 2".into(),
        )),
        _ => Err(LabError::UnsupportedDimension(d)),
    }
}

fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Radial rule for the slicing integral.
///
/// Node `i` sits at `φ_i`; `radial_nodes[i] = sin φ_i` is the ball radius
/// `ρ` and `cos_nodes[i] = cos φ_i = sqrt(1 - ρ^2)`. Nodes are symmetric
/// about `π/4`, stored so that `radial_nodes[n-1-i] == cos_nodes[i]`
/// exactly. `radial_weights` already include the slicing weight and the
/// normalizer and sum to one.
#[derive(Clone, Debug)]
pub struct SlicingRule {
    pub d: usize,
    pub radial_nodes: Vec<f64>,
    pub cos_nodes: Vec<f64>,
    pub radial_weights: Vec<f64>,
    /// Constant that turns the raw ball integral into a probability measure.
    pub normalizer: f64,
}

pub fn slicing_rule(d: usize, n_radial: usize) -> Result<SlicingRule> {
    if !(1..=3).contains(&d) {
        return Err(LabError::UnsupportedDimension(d));
    }
    if n_radial < 2 {
        return Err(LabError::Domain("need at least 2 radial nodes".into()));
    }
    let (x, w) = gauss_legendre(n_radial);
    let n = n_radial;
    let mut sin = vec![0.0; n];
    let mut cos = vec![0.0; n];
    let mut raw = vec![0.0; n];
    let area = sphere_area(d);
    for i in 0..n.div_ceil(2) {
        let phi = PI / 4.0 * (1.0 + x[i]);
        let (s, c) = if n % 2 == 1 && i == n / 2 {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            (h, h)
        } else {
            phi.sin_cos()
        };
        let jac = (s * c).powi(d as i32 - 1);
        let r = area * jac * w[i] * PI / 4.0;
        sin[i] = s;
        cos[i] = c;
        raw[i] = r;
        sin[n - 1 - i] = c;
        cos[n - 1 - i] = s;
        raw[n - 1 - i] = r;
    }
    let total = pairwise_sum_by(n, &|i| raw[i]);
    let normalizer = 1.0 / total;
    let radial_weights = raw.iter().map(|r| r * normalizer).collect();
    Ok(SlicingRule {
        d,
        radial_nodes: sin,
        cos_nodes: cos,
        radial_weights,
        normalizer,
    })
}

fn cached_slicing(d: usize, n: usize) -> Arc<SlicingRule> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, usize), Arc<SlicingRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(r) = cache.read().unwrap().get(&(d, n)) {
        return r.clone();
    }
    let rule = Arc::new(slicing_rule(d, n).expect("validated slicing rule"));
    cache
        .write()
        .unwrap()
        .entry((d, n))
        .or_insert(rule)
        .clone()
}

/// How many nodes the linear sphere rule uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngularNodes {
    Fixed(usize),
    /// Scale the node count with the sphere size so that neighbouring nodes
    /// are about `spacing / oversample` apart, rounded up to a power of two
    /// and clamped to `[min, max]`.
    Adaptive {
        oversample: f64,
        min: usize,
        max: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub radial: usize,
    pub angular: AngularNodes,
}

impl Default for Quadrature {
    /// 256 radial nodes keep the error from indicator jumps in the slicing
    /// integrand below 0.005; 64 nodes can be off by 0.02.
    fn default() -> Self {
        Quadrature {
            radial: 256,
            angular: AngularNodes::Fixed(128),
        }
    }
}

impl Quadrature {
    pub fn fixed(radial: usize, angular: usize) -> Self {
        Quadrature {
            radial,
            angular: AngularNodes::Fixed(angular),
        }
    }

    pub fn adaptive(radial: usize, oversample: f64) -> Self {
        Quadrature {
            radial,
            angular: AngularNodes::Adaptive {
                oversample,
                min: 16,
                max: 1 << 16,
            },
        }
    }

    fn angular_count(&self, d: usize, s: f64, spacing: Option<f64>) -> usize {
        match self.angular {
            AngularNodes::Fixed(n) => n,
            AngularNodes::Adaptive {
                oversample,
                min,
                max,
            } => {
                let target = match spacing {
                    None => max as f64,
                    Some(h) => {
                        let per_circle = oversample * 2.0 * PI * s / h;
                        if d == 3 {
                            0.5 * per_circle * per_circle
                        } else {
                            per_circle
                        }
                    }
                };
                let n = (target.max(1.0).ceil() as usize).next_power_of_two();
                n.clamp(min.max(2), max.max(2))
            }
        }
    }
}

/// Optional pruning data for one field at one evaluation point.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Window {
    /// Distances from `x` at which the field can be nonzero.
    pub near: f64,
    pub far: f64,
    /// Ball `(center, radius)` containing the support.
    pub ball: Option<(Point, f64)>,
}

impl Window {
    pub(crate) fn of<F: Field + ?Sized>(f: &F, x: &Point) -> Option<Option<Window>> {
        match f.support() {
            None => Some(None),
            Some(idx) => {
                let (near, far) = idx.radial_window(x)?;
                Some(Some(Window {
                    near,
                    far,
                    ball: idx.bounding_ball(),
                }))
            }
        }
    }
}

const WINDOW_SLACK: f64 = 1e-9;

/// Linear spherical average `∫ f(x - s y) dσ(y)` at one point.
pub fn linear_average_at<F: Field + ?Sized>(f: &F, x: &Point, s: f64, q: &Quadrature) -> f64 {
    match Window::of(f, x) {
        None => 0.0,
        Some(w) => linear_windowed(f, x, s, q, w.as_ref()),
    }
}

pub(crate) fn linear_windowed<F: Field + ?Sized>(
    f: &F,
    x: &Point,
    s: f64,
    q: &Quadrature,
    w: Option<&Window>,
) -> f64 {
    let d = f.dim();
    if let Some(w) = w {
        if s < w.near - WINDOW_SLACK || s > w.far + WINDOW_SLACK {
            return 0.0;
        }
    }
    if s == 0.0 {
        return f.value(x);
    }
    if d == 1 {
        return 0.5 * (f.value(&[x[0] - s, 0.0, 0.0]) + f.value(&[x[0] + s, 0.0, 0.0]));
    }
    let n = q.angular_count(d, s, f.resolution());
    let rule = cached_sphere(d, n);
    let eval = |j: usize| {
        let u = &rule.nodes[j];
        let y = [x[0] - s * u[0], x[1] - s * u[1], x[2] - s * u[2]];
        rule.weights[j] * f.value(&y)
    };
    // Directions whose sphere point lands in the support ball satisfy
    // u · e >= kappa, where e points from the center toward x.
    let cone = w.and_then(|w| w.ball).and_then(|(c, r)| {
        let v = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let dist = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if dist <= r {
            return None;
        }
        let kappa = (dist * dist + s * s - r * r) / (2.0 * s * dist);
        if kappa <= -1.0 {
            return None;
        }
        Some(([v[0] / dist, v[1] / dist, v[2] / dist], kappa))
    });
    match cone {
        None => pairwise_sum_by(rule.nodes.len(), &eval),
        Some((_, kappa)) if kappa > 1.0 + WINDOW_SLACK => 0.0,
        Some((e, kappa)) if d == 2 => {
            let alpha = e[1].atan2(e[0]);
            let beta = kappa.clamp(-1.0, 1.0).acos();
            let step = 2.0 * PI / n as f64;
            let lo = ((alpha - beta) / step - 1e-6).ceil() as i64;
            let hi = ((alpha + beta) / step + 1e-6).floor() as i64;
            if hi < lo {
                return 0.0;
            }
            let count = ((hi - lo + 1) as usize).min(n);
            let nn = n as i64;
            pairwise_sum_by(count, &|k| eval((lo + k as i64).rem_euclid(nn) as usize))
        }
        Some((e, kappa)) => {
            let lim = kappa - 1e-9;
            pairwise_sum_by(rule.nodes.len(), &|j| {
                let u = &rule.nodes[j];
                if u[0] * e[0] + u[1] * e[1] + u[2] * e[2] >= lim {
                    eval(j)
                } else {
                    0.0
                }
            })
        }
    }
}

/// Bilinear spherical average `A_t(f, g)(x)` at one point.
pub fn bilinear_average_at<F, G>(f: &F, g: &G, x: &Point, t: f64, q: &Quadrature) -> f64
where
    F: Field + ?Sized,
    G: Field + ?Sized,
{
    let ctx = match PointContext::new(f, g, x) {
        Some(c) => c,
        None => return 0.0,
    };
    ctx.bilinear(f, g, t, q)
}

/// Pruning windows of a pair of fields around a fixed point, reused across
/// radii.
pub(crate) struct PointContext {
    pub x: Point,
    pub wf: Option<Window>,
    pub wg: Option<Window>,
}

impl PointContext {
    pub(crate) fn new<F, G>(f: &F, g: &G, x: &Point) -> Option<Self>
    where
        F: Field + ?Sized,
        G: Field + ?Sized,
    {
        Some(PointContext {
            x: *x,
            wf: Window::of(f, x)?,
            wg: Window::of(g, x)?,
        })
    }

    /// Range of radii `t` at which the average can be nonzero.
    pub(crate) fn t_range(&self) -> (f64, f64) {
        let (a_f, b_f) = self.wf.map_or((0.0, f64::INFINITY), |w| (w.near, w.far));
        let (a_g, b_g) = self.wg.map_or((0.0, f64::INFINITY), |w| (w.near, w.far));
        (a_f.hypot(a_g), b_f.hypot(b_g))
    }

    pub(crate) fn bilinear<F, G>(&self, f: &F, g: &G, t: f64, q: &Quadrature) -> f64
    where
        F: Field + ?Sized,
        G: Field + ?Sized,
    {
        let d = f.dim();
        let (tlo, thi) = self.t_range();
        if t < tlo * (1.0 - WINDOW_SLACK) - WINDOW_SLACK || t > thi * (1.0 + WINDOW_SLACK) + WINDOW_SLACK {
            return 0.0;
        }
        if t == 0.0 {
            return f.value(&self.x) * g.value(&self.x);
        }
        let rule = cached_slicing(d, q.radial);
        let n = rule.radial_nodes.len();
        let mut lo = 0;
        let mut hi = n;
        // radial_nodes ascend and cos_nodes descend in the node index
        if let Some(w) = &self.wf {
            let a = w.near / t - WINDOW_SLACK;
            let b = w.far / t + WINDOW_SLACK;
            lo = lo.max(rule.radial_nodes.partition_point(|&s| s < a));
            hi = hi.min(rule.radial_nodes.partition_point(|&s| s <= b));
        }
        if let Some(w) = &self.wg {
            let a = w.near / t - WINDOW_SLACK;
            let b = w.far / t + WINDOW_SLACK;
            lo = lo.max(rule.cos_nodes.partition_point(|&c| c > b));
            hi = hi.min(rule.cos_nodes.partition_point(|&c| c >= a));
        }
        if hi <= lo {
            return 0.0;
        }
        let x = &self.x;
        pairwise_sum_by(hi - lo, &|k| {
            let i = lo + k;
            let lf = linear_windowed(f, x, t * rule.radial_nodes[i], q, self.wf.as_ref());
            if lf == 0.0 {
                return 0.0;
            }
            let lg = linear_windowed(g, x, t * rule.cos_nodes[i], q, self.wg.as_ref());
            rule.radial_weights[i] * lf * lg
        })
    }
}

/// `x ↦ A_{linear,t} f(x)` on the grid of `f`.
pub fn linear_spherical_average(f: &GridFunction, t: f64, q: &Quadrature) -> Result<GridFunction> {
    if !(t > 0.0) {
        return Err(LabError::Domain(format!("radius must be positive, got {t}")));
    }
    let spec = *f.spec();
    let values = (0..spec.len())
        .into_par_iter()
        .map(|i| linear_average_at(f, &spec.point_of_flat(i), t, q))
        .collect();
    GridFunction::new(spec, values)
}

/// `x ↦ A_t(f, g)(x)` on the common grid of `f` and `g`.
pub fn bilinear_spherical_average(
    f: &GridFunction,
    g: &GridFunction,
    t: f64,
    q: &Quadrature,
) -> Result<GridFunction> {
    f.check_same(g)?;
    if !(t > 0.0) {
        return Err(LabError::Domain(format!("radius must be positive, got {t}")));
    }
    let spec = *f.spec();
    let values = (0..spec.len())
        .into_par_iter()
        .map(|i| bilinear_average_at(f, g, &spec.point_of_flat(i), t, q))
        .collect();
    GridFunction::new(spec, values)
}
