//! Scalar fields sampled on regular grids over boxes in `R^d`.
//!
//! Sample `i` of an axis sits at `lo + i * spacing` and stands for the cell
//! `[lo + i*spacing, lo + (i+1)*spacing)`. Point evaluation snaps to the
//! nearest sample and is zero outside the box. Flat indices are row-major
//! with axis 0 varying slowest.

use std::io::{BufRead, Read, Write};
use std::sync::OnceLock;

use crate::error::{LabError, Result};

pub type Point = [f64; 3];

/// Pairwise (tree) summation of `term(i)` for `i in 0..len`.
///
/// The reduction tree depends only on `len`, so results do not depend on
/// how the caller partitions work.
pub fn pairwise_sum_by(len: usize, term: &impl Fn(usize) -> f64) -> f64 {
    fn go(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= 64 {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += term(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, term) + go(mid, hi, term)
        }
    }
    go(0, len, term)
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs.len(), &|i| xs[i])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub d: usize,
    pub lo: Point,
    pub hi: Point,
    pub n_per_axis: usize,
}

impl GridSpec {
    pub fn new(d: usize, lo: &[f64], hi: &[f64], n_per_axis: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(LabError::UnsupportedDimension(d));
        }
        if lo.len() != d || hi.len() != d {
            return Err(LabError::Shape(format!(
                "box corners must have {d} coordinates"
            )));
        }
        if n_per_axis < 2 {
            return Err(LabError::Shape("need at least 2 samples per axis".into()));
        }
        let mut l = [0.0; 3];
        let mut h = [0.0; 3];
        for k in 0..d {
            if !(hi[k] > lo[k]) || !lo[k].is_finite() || !hi[k].is_finite() {
                return Err(LabError::Shape(format!("empty box along axis {k}")));
            }
            l[k] = lo[k];
            h[k] = hi[k];
        }
        Ok(GridSpec {
            d,
            lo: l,
            hi: h,
            n_per_axis,
        })
    }

    /// The cube `[-half, half)^d`.
    pub fn centered(d: usize, half: f64, n_per_axis: usize) -> Result<Self> {
        Self::new(d, &vec![-half; d], &vec![half; d], n_per_axis)
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.n_per_axis as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.d).map(|k| self.spacing(k)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.d).map(|k| self.spacing(k)).fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.d).map(|k| self.spacing(k)).product()
    }

    pub fn volume(&self) -> f64 {
        (0..self.d).map(|k| self.hi[k] - self.lo[k]).product()
    }

    pub fn len(&self) -> usize {
        self.n_per_axis.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let n = self.n_per_axis;
        let mut flat = 0;
        for &i in idx.iter().take(self.d) {
            flat = flat * n + i;
        }
        flat
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let n = self.n_per_axis;
        let mut idx = [0; 3];
        for k in (0..self.d).rev() {
            idx[k] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn point(&self, idx: [usize; 3]) -> Point {
        let mut x = [0.0; 3];
        for k in 0..self.d {
            x[k] = self.lo[k] + idx[k] as f64 * self.spacing(k);
        }
        x
    }

    pub fn point_of_flat(&self, flat: usize) -> Point {
        self.point(self.multi_index(flat))
    }

    /// Nearest sample index along one axis, if inside the grid.
    #[inline]
    pub fn nearest_axis(&self, axis: usize, x: f64) -> Option<usize> {
        // floor(u + 1/2) by truncation; avoids a libm call in the hot path
        let v = (x - self.lo[axis]) / self.spacing(axis) + 0.5;
        if v >= 0.0 && v < self.n_per_axis as f64 {
            Some(v as usize)
        } else {
            None
        }
    }

    /// Flat index of the sample nearest to `x`, if inside the grid.
    #[inline]
    pub fn nearest(&self, x: &Point) -> Option<usize> {
        let n = self.n_per_axis;
        let mut flat = 0;
        for k in 0..self.d {
            flat = flat * n + self.nearest_axis(k, x[k])?;
        }
        Some(flat)
    }

    /// Flat index of the nearest sample with periodic wrap-around.
    #[inline]
    pub fn nearest_periodic(&self, x: &Point) -> usize {
        let n = self.n_per_axis as i64;
        let mut flat = 0usize;
        for k in 0..self.d {
            let u = ((x[k] - self.lo[k]) / self.spacing(k)).round() as i64;
            flat = flat * n as usize + u.rem_euclid(n) as usize;
        }
        flat
    }

    /// Sample index range `[start, end)` of points in `[a, b)` along an axis.
    pub fn index_range(&self, axis: usize, a: f64, b: f64) -> (usize, usize) {
        let h = self.spacing(axis);
        let n = self.n_per_axis as f64;
        let to_idx = |x: f64| ((x - self.lo[axis]) / h).ceil().clamp(0.0, n) as usize;
        // snap values that are integral up to rounding noise
        let snap = |x: f64| {
            let u = (x - self.lo[axis]) / h;
            if (u - u.round()).abs() < 1e-9 {
                (u.round().clamp(0.0, n)) as usize
            } else {
                to_idx(x)
            }
        };
        let s = snap(a);
        let e = snap(b);
        (s, e.max(s))
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.d == other.d
            && self.n_per_axis == other.n_per_axis
            && (0..self.d).all(|k| {
                (self.lo[k] - other.lo[k]).abs() < 1e-12 && (self.hi[k] - other.hi[k]).abs() < 1e-12
            })
    }
}

/// Anything that can be evaluated at a point of `R^d`.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Point) -> f64;
    /// Grid spacing driving adaptive quadrature, if the field is sampled.
    fn resolution(&self) -> Option<f64> {
        None
    }
    /// Conservative description of where the field can be nonzero.
    fn support(&self) -> Option<&SupportIndex> {
        None
    }
}

/// Axis-aligned boxes covering the nonzero samples, for pruning quadrature.
///
/// Each box is grown by half a cell so that any point whose nearest sample
/// is nonzero lies inside some box.
#[derive(Clone, Debug)]
pub struct SupportIndex {
    d: usize,
    boxes: Vec<(Point, Point)>,
    hull: Option<(Point, Point)>,
}

impl SupportIndex {
    const MAX_TILES: usize = 256;

    fn build(f: &GridFunction) -> Self {
        let spec = f.spec;
        let d = spec.d;
        let n = spec.n_per_axis;
        let mut tile = 8usize;
        loop {
            let per_axis = n.div_ceil(tile);
            let n_tiles = per_axis.pow(d as u32);
            let mut lo_idx = vec![[usize::MAX; 3]; n_tiles];
            let mut hi_idx = vec![[0usize; 3]; n_tiles];
            let mut used = vec![false; n_tiles];
            for (flat, &v) in f.values.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let idx = spec.multi_index(flat);
                let mut t = 0;
                for &i in idx.iter().take(d) {
                    t = t * per_axis + i / tile;
                }
                used[t] = true;
                for k in 0..d {
                    lo_idx[t][k] = lo_idx[t][k].min(idx[k]);
                    hi_idx[t][k] = hi_idx[t][k].max(idx[k]);
                }
            }
            let count = used.iter().filter(|&&u| u).count();
            if count > Self::MAX_TILES && tile < n {
                tile *= 2;
                continue;
            }
            let mut boxes = Vec::with_capacity(count);
            for t in 0..n_tiles {
                if !used[t] {
                    continue;
                }
                let mut a = [0.0; 3];
                let mut b = [0.0; 3];
                for k in 0..d {
                    let h = spec.spacing(k);
                    a[k] = spec.lo[k] + (lo_idx[t][k] as f64 - 0.5) * h;
                    b[k] = spec.lo[k] + (hi_idx[t][k] as f64 + 0.5) * h;
                }
                boxes.push((a, b));
            }
            let hull = boxes.iter().copied().reduce(|(a0, b0), (a1, b1)| {
                let mut a = a0;
                let mut b = b0;
                for k in 0..d {
                    a[k] = a[k].min(a1[k]);
                    b[k] = b[k].max(b1[k]);
                }
                (a, b)
            });
            return SupportIndex { d, boxes, hull };
        }
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Bounding box of the support.
    pub fn hull(&self) -> Option<(Point, Point)> {
        self.hull
    }

    /// Center and radius of a ball containing the support.
    pub fn bounding_ball(&self) -> Option<(Point, f64)> {
        let (a, b) = self.hull?;
        let mut c = [0.0; 3];
        let mut r2 = 0.0;
        for k in 0..self.d {
            c[k] = 0.5 * (a[k] + b[k]);
            r2 += (0.5 * (b[k] - a[k])).powi(2);
        }
        Some((c, r2.sqrt()))
    }

    /// Range of distances `|x - y|` over `y` in the support.
    pub fn radial_window(&self, x: &Point) -> Option<(f64, f64)> {
        if self.boxes.is_empty() {
            return None;
        }
        let mut near = f64::INFINITY;
        let mut far: f64 = 0.0;
        for (a, b) in &self.boxes {
            let mut n2 = 0.0;
            let mut f2 = 0.0;
            for k in 0..self.d {
                let below = a[k] - x[k];
                let above = x[k] - b[k];
                let gap = below.max(above).max(0.0);
                n2 += gap * gap;
                let reach = (x[k] - a[k]).abs().max((b[k] - x[k]).abs());
                f2 += reach * reach;
            }
            near = near.min(n2);
            far = far.max(f2);
        }
        Some((near.sqrt(), far.sqrt()))
    }
}

/// Precomputed nearest-sample lookup.
#[derive(Clone, Copy, Debug)]
struct Lookup {
    d: usize,
    n: usize,
    lo: Point,
    inv: Point,
}

impl Lookup {
    fn new(spec: &GridSpec) -> Self {
        let mut inv = [0.0; 3];
        for (k, v) in inv.iter_mut().enumerate().take(spec.d) {
            *v = 1.0 / spec.spacing(k);
        }
        Lookup {
            d: spec.d,
            n: spec.n_per_axis,
            lo: spec.lo,
            inv,
        }
    }

    #[inline(always)]
    fn index(&self, x: &Point) -> Option<usize> {
        let nf = self.n as f64;
        let mut flat = 0;
        for k in 0..self.d {
            let v = (x[k] - self.lo[k]) * self.inv[k] + 0.5;
            if !(v >= 0.0 && v < nf) {
                return None;
            }
            flat = flat * self.n + v as usize;
        }
        Some(flat)
    }
}

#[derive(Clone, Debug)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
    lookup: Lookup,
    support: OnceLock<SupportIndex>,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.values == other.values
    }
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(LabError::Shape(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::Domain(format!("non-finite value at index {i}")));
        }
        Ok(Self::from_vec_unchecked(spec, values))
    }

    pub(crate) fn from_vec_unchecked(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        GridFunction {
            lookup: Lookup::new(&spec),
            spec,
            values,
            support: OnceLock::new(),
        }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::from_vec_unchecked(spec, vec![0.0; spec.len()])
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self::from_vec_unchecked(spec, vec![c; spec.len()])
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..spec.len()).map(|i| f(&spec.point_of_flat(i))).collect();
        Self::from_vec_unchecked(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Nearest-sample lookup with zero extension.
    #[inline]
    pub fn at(&self, x: &Point) -> f64 {
        match self.lookup.index(x) {
            Some(i) => self.values[i],
            None => 0.0,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec_unchecked(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_vec_unchecked(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.spec.same_shape(&other.spec) {
            Ok(())
        } else {
            Err(LabError::Shape("grid specs differ".into()))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn support_index(&self) -> &SupportIndex {
        self.support.get_or_init(|| SupportIndex::build(self))
    }

    /// Integral `Σ f(x_i) · cellvol`.
    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) * self.spec.cell_volume()
    }
}

impl Field for GridFunction {
    fn dim(&self) -> usize {
        self.spec.d
    }

    #[inline]
    fn value(&self, x: &Point) -> f64 {
        self.at(x)
    }

    fn resolution(&self) -> Option<f64> {
        Some(self.spec.min_spacing())
    }

    fn support(&self) -> Option<&SupportIndex> {
        Some(self.support_index())
    }
}

/// A grid function looked up with periodic wrap-around instead of zero
/// extension.
#[derive(Clone, Copy, Debug)]
pub struct Periodic<'a>(pub &'a GridFunction);

impl Field for Periodic<'_> {
    fn dim(&self) -> usize {
        self.0.spec.d
    }

    #[inline]
    fn value(&self, x: &Point) -> f64 {
        self.0.values[self.0.spec.nearest_periodic(x)]
    }

    fn resolution(&self) -> Option<f64> {
        Some(self.0.spec.min_spacing())
    }
}

/// A field given by a closure, used for analytic inputs.
pub struct FnField<F> {
    d: usize,
    f: F,
    resolution: Option<f64>,
}

impl<F: Fn(&Point) -> f64 + Sync> FnField<F> {
    pub fn new(d: usize, f: F) -> Self {
        FnField {
            d,
            f,
            resolution: None,
        }
    }

    /// Length scale that adaptive quadrature should resolve.
    pub fn with_resolution(mut self, h: f64) -> Self {
        self.resolution = Some(h);
        self
    }
}

impl<F: Fn(&Point) -> f64 + Sync> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &Point) -> f64 {
        (self.f)(x)
    }

    fn resolution(&self) -> Option<f64> {
        self.resolution
    }
}

/// Shapes used to build indicator functions.
#[derive(Clone, Debug, PartialEq)]
pub enum RegionSpec {
    /// Closed ball `|x - center| <= radius`.
    Ball { center: Vec<f64>, radius: f64 },
    /// Closed shell `r_in <= |x - center| <= r_out`.
    Annulus {
        center: Vec<f64>,
        r_in: f64,
        r_out: f64,
    },
    /// Half-open box `lo <= x < hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl RegionSpec {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        RegionSpec::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn annulus(center: &[f64], r_in: f64, r_out: f64) -> Self {
        RegionSpec::Annulus {
            center: center.to_vec(),
            r_in,
            r_out,
        }
    }

    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Self {
        RegionSpec::Box {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let dims = |v: &Vec<f64>| {
            if v.len() == d {
                Ok(())
            } else {
                Err(LabError::Shape(format!("region needs {d} coordinates")))
            }
        };
        match self {
            RegionSpec::Ball { center, radius } => {
                dims(center)?;
                if *radius < 0.0 {
                    return Err(LabError::Domain("negative radius".into()));
                }
            }
            RegionSpec::Annulus {
                center,
                r_in,
                r_out,
            } => {
                dims(center)?;
                if *r_in < 0.0 || r_in >= r_out {
                    return Err(LabError::Domain("annulus needs 0 <= r_in < r_out".into()));
                }
            }
            RegionSpec::Box { lo, hi } => {
                dims(lo)?;
                dims(hi)?;
                if lo.iter().zip(hi).any(|(a, b)| a >= b) {
                    return Err(LabError::Domain("empty box".into()));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let dist = |c: &[f64]| -> f64 {
            c.iter()
                .zip(x)
                .map(|(c, x)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt()
        };
        match self {
            RegionSpec::Ball { center, radius } => dist(center) <= *radius,
            RegionSpec::Annulus {
                center,
                r_in,
                r_out,
            } => {
                let r = dist(center);
                *r_in <= r && r <= *r_out
            }
            RegionSpec::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .zip(x)
                .all(|((a, b), x)| *a <= *x && *x < *b),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            RegionSpec::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            RegionSpec::Annulus { center, r_out, .. } => (
                center.iter().map(|c| c - r_out).collect(),
                center.iter().map(|c| c + r_out).collect(),
            ),
            RegionSpec::Box { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    /// Lebesgue measure of the region in dimension `d`.
    pub fn measure(&self, d: usize) -> f64 {
        let ball = |r: f64| unit_ball_volume(d) * r.powi(d as i32);
        match self {
            RegionSpec::Ball { radius, .. } => ball(*radius),
            RegionSpec::Annulus { r_in, r_out, .. } => ball(*r_out) - ball(*r_in),
            RegionSpec::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
        }
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// Indicator of `region` sampled on `spec`; the zero function when they miss.
pub fn make_indicator(region: &RegionSpec, spec: &GridSpec) -> Result<GridFunction> {
    region.validate(spec.d)?;
    let d = spec.d;
    Ok(GridFunction::from_fn(*spec, |x| {
        if region.contains(&x[..d]) {
            1.0
        } else {
            0.0
        }
    }))
}

/// Translate by `h`, snapped to the grid: `(shift f)(x) = f(x - h)`.
///
/// Samples pulled in from outside the box are zero.
pub fn shift(f: &GridFunction, h: &[f64]) -> Result<GridFunction> {
    let spec = *f.spec();
    if h.len() != spec.d {
        return Err(LabError::Shape(format!("shift needs {} components", spec.d)));
    }
    let mut steps = [0i64; 3];
    for k in 0..spec.d {
        let sp = spec.spacing(k);
        let u = h[k] / sp;
        let s = u.round();
        if (u - s).abs() > 1e-9 {
            log::warn!("shift component {} snapped from {} to {}", k, h[k], s * sp);
        }
        if s.abs() >= spec.n_per_axis as f64 {
            log::warn!("shift {:?} exceeds the box; result is zero", h);
            return Ok(GridFunction::zeros(spec));
        }
        steps[k] = s as i64;
    }
    let n = spec.n_per_axis as i64;
    let values = (0..spec.len())
        .map(|flat| {
            let idx = spec.multi_index(flat);
            let mut src = [0usize; 3];
            for k in 0..spec.d {
                let j = idx[k] as i64 - steps[k];
                if j < 0 || j >= n {
                    return 0.0;
                }
                src[k] = j as usize;
            }
            f.values[spec.flat_index(src)]
        })
        .collect();
    Ok(GridFunction::from_vec_unchecked(spec, values))
}

/// `(Σ |f|^p · cellvol)^{1/p}`, or `max |f|` for `p = ∞`.
pub fn lp_norm(f: &GridFunction, p: f64) -> f64 {
    assert!(p > 0.0, "lp_norm needs p > 0");
    if p.is_infinite() {
        return f.max_abs();
    }
    let vals = f.values();
    let s = if p == 1.0 {
        pairwise_sum_by(vals.len(), &|i| vals[i].abs())
    } else if p == 2.0 {
        pairwise_sum_by(vals.len(), &|i| vals[i] * vals[i])
    } else {
        pairwise_sum_by(vals.len(), &|i| vals[i].abs().powf(p))
    };
    (s * f.spec().cell_volume()).powf(1.0 / p)
}

/// `Σ u(x_i) h(x_i) · cellvol`.
pub fn pairing(u: &GridFunction, h: &GridFunction) -> Result<f64> {
    u.check_same(h)?;
    let (a, b) = (u.values(), h.values());
    Ok(pairwise_sum_by(a.len(), &|i| a[i] * b[i]) * u.spec().cell_volume())
}

const CSV_MAGIC: &str = "# sparselab-grid v1";
const BIN_MAGIC: &[u8; 4] = b"SLGF";

impl GridFunction {
    /// CSV with a header comment carrying the grid, then `index,value` rows
    /// in row-major order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let s = &self.spec;
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(";")
        };
        writeln!(
            w,
            "{CSV_MAGIC} d={} n={} lo={} hi={}",
            s.d,
            s.n_per_axis,
            join(&s.lo[..s.d]),
            join(&s.hi[..s.d])
        )?;
        writeln!(w, "index,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{i},{v:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| LabError::Parse("empty input".into()))??;
        let rest = header
            .strip_prefix(CSV_MAGIC)
            .ok_or_else(|| LabError::Parse("missing grid header".into()))?;
        let mut d = None;
        let mut n = None;
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let floats = |v: &str| -> Result<Vec<f64>> {
            v.split(';')
                .map(|x| x.parse::<f64>().map_err(|_| LabError::Parse(x.into())))
                .collect()
        };
        for kv in rest.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| LabError::Parse(kv.into()))?;
            match k {
                "d" => d = v.parse().ok(),
                "n" => n = v.parse().ok(),
                "lo" => lo = floats(v)?,
                "hi" => hi = floats(v)?,
                _ => {}
            }
        }
        let spec = GridSpec::new(
            d.ok_or_else(|| LabError::Parse("missing d".into()))?,
            &lo,
            &hi,
            n.ok_or_else(|| LabError::Parse("missing n".into()))?,
        )?;
        let mut values = vec![0.0; spec.len()];
        let mut seen = 0;
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("index") {
                continue;
            }
            let (i, v) = line
                .split_once(',')
                .ok_or_else(|| LabError::Parse(line.into()))?;
            let i: usize = i.trim().parse().map_err(|_| LabError::Parse(line.into()))?;
            let v: f64 = v.trim().parse().map_err(|_| LabError::Parse(line.into()))?;
            if i >= values.len() {
                return Err(LabError::Parse(format!("index {i} out of range")));
            }
            values[i] = v;
            seen += 1;
        }
        if seen != values.len() {
            return Err(LabError::Parse(format!(
                "expected {} rows, got {seen}",
                values.len()
            )));
        }
        GridFunction::new(spec, values)
    }

    /// Little-endian binary: magic, `u32` d, `u64` n, `d` lows, `d` highs,
    /// then `n^d` values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let s = &self.spec;
        w.write_all(BIN_MAGIC)?;
        w.write_all(&(s.d as u32).to_le_bytes())?;
        w.write_all(&(s.n_per_axis as u64).to_le_bytes())?;
        for k in 0..s.d {
            w.write_all(&s.lo[k].to_le_bytes())?;
        }
        for k in 0..s.d {
            w.write_all(&s.hi[k].to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BIN_MAGIC {
            return Err(LabError::Parse("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        if !(1..=3).contains(&d) {
            return Err(LabError::UnsupportedDimension(d));
        }
        let mut read_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let lo: Vec<f64> = (0..d).map(|_| read_f64(&mut r)).collect::<Result<_>>()?;
        let hi: Vec<f64> = (0..d).map(|_| read_f64(&mut r)).collect::<Result<_>>()?;
        let spec = GridSpec::new(d, &lo, &hi, n)?;
        let values = (0..spec.len())
            .map(|_| read_f64(&mut r))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(spec, values)
    }
}
