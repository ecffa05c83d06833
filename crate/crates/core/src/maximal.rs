//! Maximal functions over discretized radius sets, the Hardy–Littlewood
//! maximal function, and translation-continuity norms.

use rayon::prelude::*;

use crate::averaging::{linear_windowed, PointContext, Quadrature, Window};
use crate::error::{LabError, Result};
use crate::fields::{pairwise_sum_by, shift, Field, GridFunction, GridSpec, Point};
use crate::region::{in_region, ExponentTriple};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Geometric,
    Uniform,
}

/// `n_t` radii between `t_lo` and `t_hi`, both ends included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusGrid {
    pub t_lo: f64,
    pub t_hi: f64,
    pub n_t: usize,
    pub spacing: Spacing,
}

impl RadiusGrid {
    pub fn new(t_lo: f64, t_hi: f64, n_t: usize, spacing: Spacing) -> Result<Self> {
        if !(t_lo > 0.0) || !(t_hi >= t_lo) || !t_hi.is_finite() {
            return Err(LabError::Domain(format!(
                "radius grid needs 0 < t_lo <= t_hi, got [{t_lo}, {t_hi}]"
            )));
        }
        if n_t == 0 {
            return Err(LabError::Domain("radius grid needs at least one radius".into()));
        }
        Ok(RadiusGrid {
            t_lo,
            t_hi,
            n_t,
            spacing,
        })
    }

    pub fn geometric(t_lo: f64, t_hi: f64, n_t: usize) -> Result<Self> {
        Self::new(t_lo, t_hi, n_t, Spacing::Geometric)
    }

    pub fn uniform(t_lo: f64, t_hi: f64, n_t: usize) -> Result<Self> {
        Self::new(t_lo, t_hi, n_t, Spacing::Uniform)
    }

    /// Radii in `[1, 2]`, the default 33 per octave.
    pub fn localized(n_t: usize) -> Result<Self> {
        Self::geometric(1.0, 2.0, n_t)
    }

    pub fn radii(&self) -> Vec<f64> {
        if self.n_t == 1 || self.t_lo == self.t_hi {
            return vec![self.t_lo];
        }
        let m = (self.n_t - 1) as f64;
        let mut out: Vec<f64> = (0..self.n_t)
            .map(|i| {
                let u = i as f64 / m;
                match self.spacing {
                    Spacing::Geometric => self.t_lo * (self.t_hi / self.t_lo).powf(u),
                    Spacing::Uniform => self.t_lo + (self.t_hi - self.t_lo) * u,
                }
            })
            .collect();
        out[self.n_t - 1] = self.t_hi;
        out
    }
}

/// Radii `2^m`, `m_lo <= m <= m_hi`.
pub fn lacunary_radii(m_lo: i32, m_hi: i32) -> Result<Vec<f64>> {
    if m_lo > m_hi {
        return Err(LabError::Domain(format!("empty level range {m_lo}..={m_hi}")));
    }
    Ok((m_lo..=m_hi).map(|m| 2f64.powi(m)).collect())
}

/// Octaves `[2^m, 2^{m+1}]`, `m_lo <= m <= m_hi`, each with `n_per_octave`
/// geometric radii; shared endpoints appear once.
pub fn octave_radii(m_lo: i32, m_hi: i32, n_per_octave: usize) -> Result<Vec<f64>> {
    if m_lo > m_hi {
        return Err(LabError::Domain(format!("empty level range {m_lo}..={m_hi}")));
    }
    if n_per_octave < 2 {
        return Err(LabError::Domain("need at least 2 radii per octave".into()));
    }
    let mut out = Vec::new();
    for m in m_lo..=m_hi {
        let base = 2f64.powi(m);
        let octave = RadiusGrid::geometric(base, 2.0 * base, n_per_octave)?.radii();
        let skip = usize::from(!out.is_empty());
        out.extend_from_slice(&octave[skip..]);
    }
    Ok(out)
}

/// Which supremum over radii a maximal function takes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaximalKind {
    /// Octaves `[2^m, 2^{m+1}]` for `m_lo <= m <= m_hi`.
    Full {
        m_lo: i32,
        m_hi: i32,
        n_per_octave: usize,
    },
    /// Radii `2^m` for `m_lo <= m <= m_hi`.
    Lacunary { m_lo: i32, m_hi: i32 },
    Localized(RadiusGrid),
}

impl MaximalKind {
    pub fn radii(&self) -> Result<Vec<f64>> {
        match *self {
            MaximalKind::Full {
                m_lo,
                m_hi,
                n_per_octave,
            } => octave_radii(m_lo, m_hi, n_per_octave),
            MaximalKind::Lacunary { m_lo, m_hi } => lacunary_radii(m_lo, m_hi),
            MaximalKind::Localized(rg) => Ok(rg.radii()),
        }
    }
}

fn sorted_radii(radii: &[f64]) -> Result<Vec<f64>> {
    if radii.is_empty() || radii.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(LabError::Domain("radii must be positive and finite".into()));
    }
    let mut r = radii.to_vec();
    r.sort_by(f64::total_cmp);
    r.dedup();
    Ok(r)
}

/// `max_{t ∈ radii} |A_t(f, g)(x)|` for sorted radii.
pub fn bilinear_sup_at<F, G>(f: &F, g: &G, x: &Point, radii: &[f64], q: &Quadrature) -> f64
where
    F: Field + ?Sized,
    G: Field + ?Sized,
{
    let ctx = match PointContext::new(f, g, x) {
        Some(c) => c,
        None => return 0.0,
    };
    let (lo, hi) = ctx.t_range();
    let slack = 1e-9 * (1.0 + hi);
    let start = radii.partition_point(|&t| t < lo - slack);
    let end = radii.partition_point(|&t| t <= hi + slack);
    let mut best: f64 = 0.0;
    for &t in &radii[start..end.max(start)] {
        best = best.max(ctx.bilinear(f, g, t, q).abs());
    }
    best
}

/// `max_{s ∈ radii} |A_{linear,s} f(x)|` for sorted radii.
pub fn linear_sup_at<F: Field + ?Sized>(f: &F, x: &Point, radii: &[f64], q: &Quadrature) -> f64 {
    let w = match Window::of(f, x) {
        None => return 0.0,
        Some(w) => w,
    };
    let (start, end) = match &w {
        Some(w) => (
            radii.partition_point(|&s| s < w.near - 1e-9),
            radii.partition_point(|&s| s <= w.far + 1e-9),
        ),
        None => (0, radii.len()),
    };
    let mut best: f64 = 0.0;
    for &s in &radii[start..end.max(start)] {
        best = best.max(linear_windowed(f, x, s, q, w.as_ref()).abs());
    }
    best
}

/// Maximal function of `(f, g)` over `radii` at each of `points`.
pub fn maximal_at_points<F, G>(
    f: &F,
    g: &G,
    radii: &[f64],
    points: &[Point],
    q: &Quadrature,
) -> Result<Vec<f64>>
where
    F: Field + ?Sized,
    G: Field + ?Sized,
{
    let radii = sorted_radii(radii)?;
    Ok(points
        .par_iter()
        .map(|x| bilinear_sup_at(f, g, x, &radii, q))
        .collect())
}

fn maximal_on_grid(
    f: &GridFunction,
    g: &GridFunction,
    radii: &[f64],
    q: &Quadrature,
) -> Result<GridFunction> {
    f.check_same(g)?;
    let spec = *f.spec();
    let radii = sorted_radii(radii)?;
    let values = (0..spec.len())
        .into_par_iter()
        .map(|i| bilinear_sup_at(f, g, &spec.point_of_flat(i), &radii, q))
        .collect();
    GridFunction::new(spec, values)
}

/// `sup_{t ∈ rg} |A_t(f, g)|` on the grid.
pub fn localized_maximal(
    f: &GridFunction,
    g: &GridFunction,
    rg: &RadiusGrid,
    q: &Quadrature,
) -> Result<GridFunction> {
    maximal_on_grid(f, g, &rg.radii(), q)
}

/// `sup_m |A_{2^m}(f, g)|` on the grid.
pub fn lacunary_maximal(
    f: &GridFunction,
    g: &GridFunction,
    m_lo: i32,
    m_hi: i32,
    q: &Quadrature,
) -> Result<GridFunction> {
    maximal_on_grid(f, g, &lacunary_radii(m_lo, m_hi)?, q)
}

/// Supremum over the octaves `[2^m, 2^{m+1}]`, `m_lo <= m <= m_hi`.
pub fn full_maximal(
    f: &GridFunction,
    g: &GridFunction,
    m_lo: i32,
    m_hi: i32,
    n_per_octave: usize,
    q: &Quadrature,
) -> Result<GridFunction> {
    maximal_on_grid(f, g, &octave_radii(m_lo, m_hi, n_per_octave)?, q)
}

/// `sup_{s ∈ rg} A_{linear,s} |f|` on the grid.
pub fn linear_spherical_maximal(
    f: &GridFunction,
    rg: &RadiusGrid,
    q: &Quadrature,
) -> Result<GridFunction> {
    linear_maximal_over(f, &rg.radii(), q)
}

pub fn linear_maximal_over(f: &GridFunction, radii: &[f64], q: &Quadrature) -> Result<GridFunction> {
    let radii = sorted_radii(radii)?;
    let abs = f.abs();
    let spec = *f.spec();
    let values = (0..spec.len())
        .into_par_iter()
        .map(|i| linear_sup_at(&abs, &spec.point_of_flat(i), &radii, q))
        .collect();
    GridFunction::new(spec, values)
}

/// Side lengths, in cells, of the cubes used by the Hardy–Littlewood
/// maximal function: `round(2^{j/4})` up to the grid size.
pub fn hl_side_ladder(n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut j = 0;
    loop {
        let k = 2f64.powf(j as f64 / 4.0).round() as usize;
        if k > n {
            break;
        }
        if out.last() != Some(&k) {
            out.push(k);
        }
        j += 1;
    }
    out
}

/// Uncentered Hardy–Littlewood maximal function of `|f|`.
///
/// The supremum runs over every grid-aligned cube of `k` cells per side
/// containing the sample's cell, for `k` in [`hl_side_ladder`]. Cubes may
/// stick out of the box, where `f` is zero.
pub fn hardy_littlewood_maximal(f: &GridFunction) -> GridFunction {
    let spec = *f.spec();
    let abs = f.abs();
    let mut best = vec![0.0f64; spec.len()];
    for k in hl_side_ladder(spec.n_per_axis) {
        let m = window_max_of_sums(&abs, k);
        let vol = (k as f64).powi(spec.d as i32);
        for (b, v) in best.iter_mut().zip(&m) {
            *b = b.max(v / vol);
        }
    }
    GridFunction::from_vec_unchecked(spec, best)
}

/// For each sample, the largest sum of `f` over a `k`-cube containing it.
fn window_max_of_sums(f: &GridFunction, k: usize) -> Vec<f64> {
    let spec = f.spec();
    let n = spec.n_per_axis;
    let d = spec.d;
    // Work on an array padded by k - 1 zeros on the low side of each axis:
    // padded index p corresponds to original p - (k - 1). Window sums are
    // indexed by the padded index of their first cell.
    let np = n + k - 1;
    let mut data = vec![0.0; np.pow(d as u32)];
    let idx_p = |idx: [usize; 3]| -> usize {
        let mut flat = 0;
        for &i in idx.iter().take(d) {
            flat = flat * np + i;
        }
        flat
    };
    for (i, &v) in f.values().iter().enumerate() {
        let mut idx = spec.multi_index(i);
        for c in idx.iter_mut().take(d) {
            *c += k - 1;
        }
        data[idx_p(idx)] = v;
    }
    // window sums along each axis: s[j] = sum data[j..j+k], for j in 0..n
    // (windows starting past n cannot contain an original sample)
    let mut shape = [1usize; 3];
    for s in shape.iter_mut().take(d) {
        *s = np;
    }
    let mut cur = data;
    for axis in 0..d {
        cur = map_axis(&cur, &mut shape, d, axis, n, |line, out| {
            let mut acc: f64 = line[..k].iter().sum();
            out[0] = acc;
            for j in 1..out.len() {
                acc += line[j + k - 1] - line[j - 1];
                out[j] = acc;
            }
        });
    }
    // Windows whose padded start is j contain original samples j-k+1+(k-1)..
    // i.e. original index i lies in windows with start j ∈ [i, i + k - 1].
    for axis in 0..d {
        cur = map_axis(&cur, &mut shape, d, axis, n, |line, out| {
            sliding_max(line, k, out);
        });
    }
    cur
}

/// Apply `op` along one axis, replacing that axis' length with `out_len`.
fn map_axis(
    data: &[f64],
    shape: &mut [usize; 3],
    d: usize,
    axis: usize,
    out_len: usize,
    op: impl Fn(&[f64], &mut [f64]) + Sync,
) -> Vec<f64> {
    let len = shape[axis];
    let inner: usize = shape[axis + 1..d].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![0.0; outer * out_len * inner];
    let mut line = vec![0.0; len];
    let mut res = vec![0.0; out_len];
    for o in 0..outer {
        for i in 0..inner {
            for (j, l) in line.iter_mut().enumerate() {
                *l = data[(o * len + j) * inner + i];
            }
            op(&line, &mut res);
            for (j, r) in res.iter().enumerate() {
                out[(o * out_len + j) * inner + i] = *r;
            }
        }
    }
    shape[axis] = out_len;
    out
}

/// `out[i] = max(line[i..i+k])` with a monotone deque.
fn sliding_max(line: &[f64], k: usize, out: &mut [f64]) {
    let mut dq = std::collections::VecDeque::new();
    let mut next = 0;
    for i in 0..out.len() {
        let end = (i + k).min(line.len());
        while next < end {
            while dq.back().is_some_and(|&b: &usize| line[b] <= line[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f < i) {
            dq.pop_front();
        }
        out[i] = dq.front().map_or(0.0, |&f| line[f]);
    }
}

/// Evaluation on a coarsened lattice: one point per block of `stride^d`
/// samples, placed at the block center.
#[derive(Clone, Debug)]
pub struct Coarse {
    pub spec: GridSpec,
    pub stride: usize,
    pub blocks_per_axis: usize,
}

impl Coarse {
    pub fn new(spec: GridSpec, stride: usize) -> Result<Self> {
        if stride == 0 || spec.n_per_axis % stride != 0 {
            return Err(LabError::Shape(format!(
                "stride {stride} must divide {}",
                spec.n_per_axis
            )));
        }
        Ok(Coarse {
            spec,
            stride,
            blocks_per_axis: spec.n_per_axis / stride,
        })
    }

    pub fn len(&self) -> usize {
        self.blocks_per_axis.pow(self.spec.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block_volume(&self) -> f64 {
        self.spec.cell_volume() * (self.stride as f64).powi(self.spec.d as i32)
    }

    pub fn point(&self, block: usize) -> Point {
        let mut b = block;
        let mut x = [0.0; 3];
        let off = (self.stride as f64 - 1.0) / 2.0;
        for k in (0..self.spec.d).rev() {
            let i = b % self.blocks_per_axis;
            b /= self.blocks_per_axis;
            x[k] = self.spec.lo[k] + ((i * self.stride) as f64 + off) * self.spec.spacing(k);
        }
        x
    }

    /// Sums of `h` over each block, in block order.
    pub fn block_sums(&self, h: &GridFunction) -> Result<Vec<f64>> {
        if !h.spec().same_shape(&self.spec) {
            return Err(LabError::Shape("grid specs differ".into()));
        }
        let mut out = vec![0.0; self.len()];
        let nb = self.blocks_per_axis;
        for (i, &v) in h.values().iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let idx = self.spec.multi_index(i);
            let mut b = 0;
            for &c in idx.iter().take(self.spec.d) {
                b = b * nb + c / self.stride;
            }
            out[b] += v;
        }
        Ok(out)
    }
}

/// `⟨sup_{t ∈ radii} |A_t(f, g)|, h⟩`, evaluating the maximal function once
/// per block of `stride^d` samples and pairing with the block sums of `h`.
pub fn maximal_pairing(
    f: &GridFunction,
    g: &GridFunction,
    h: &GridFunction,
    radii: &[f64],
    q: &Quadrature,
    stride: usize,
) -> Result<f64> {
    f.check_same(g)?;
    f.check_same(h)?;
    let coarse = Coarse::new(*f.spec(), stride)?;
    let masses = coarse.block_sums(h)?;
    let radii = sorted_radii(radii)?;
    let active: Vec<usize> = (0..coarse.len()).filter(|&b| masses[b] != 0.0).collect();
    let terms: Vec<f64> = active
        .par_iter()
        .map(|&b| bilinear_sup_at(f, g, &coarse.point(b), &radii, q) * masses[b])
        .collect();
    Ok(pairwise_sum_by(terms.len(), &|i| terms[i]) * f.spec().cell_volume())
}

fn sup_lr_norm(
    f: &GridFunction,
    g: &GridFunction,
    radii: &[f64],
    r: f64,
    q: &Quadrature,
    stride: usize,
) -> Result<f64> {
    let coarse = Coarse::new(*f.spec(), stride)?;
    let radii = sorted_radii(radii)?;
    let vals: Vec<f64> = (0..coarse.len())
        .into_par_iter()
        .map(|b| bilinear_sup_at(f, g, &coarse.point(b), &radii, q))
        .collect();
    let s = pairwise_sum_by(vals.len(), &|i| vals[i].powf(r));
    Ok((s * coarse.block_volume()).powf(1.0 / r))
}

/// `‖sup_{t ∈ rg} |A_t(f, g - τ_h g)|‖_{L^r}`.
///
/// The supremum is evaluated at one point per block of `stride^d` samples.
pub fn continuity_norm(
    f: &GridFunction,
    g: &GridFunction,
    h: &[f64],
    t: &ExponentTriple,
    rg: &RadiusGrid,
    q: &Quadrature,
    stride: usize,
) -> Result<f64> {
    single_continuity(f, g, h, t, rg, q, stride)
}

fn check_continuity_inputs(
    f: &GridFunction,
    g: &GridFunction,
    hs: &[&[f64]],
    t: &ExponentTriple,
    rg: &RadiusGrid,
) -> Result<()> {
    f.check_same(g)?;
    let d = f.spec().d;
    for h in hs {
        if h.len() != d {
            return Err(LabError::Shape(format!("shift needs {d} components")));
        }
        let len = h.iter().map(|c| c * c).sum::<f64>().sqrt();
        if len >= rg.t_lo {
            return Err(LabError::Domain(format!(
                "|h| = {len} must be below the smallest radius {}",
                rg.t_lo
            )));
        }
    }
    if t.r.is_infinite() {
        return Err(LabError::Domain("r must be finite".into()));
    }
    if d >= 2 && !in_region(d, t) {
        log::warn!("exponent triple is outside the sufficient region");
    }
    Ok(())
}

fn single_continuity(
    f: &GridFunction,
    g: &GridFunction,
    h: &[f64],
    t: &ExponentTriple,
    rg: &RadiusGrid,
    q: &Quadrature,
    stride: usize,
) -> Result<f64> {
    check_continuity_inputs(f, g, &[h], t, rg)?;
    if h.iter().all(|c| *c == 0.0) {
        return Ok(0.0);
    }
    let dg = g.sub(&shift(g, h)?)?;
    sup_lr_norm(f, &dg, &rg.radii(), t.r.to_f64(), q, stride)
}

/// `‖sup_{t ∈ rg} |A_t(f - τ_{h1} f, g - τ_{h2} g)|‖_{L^r}`.
#[allow(clippy::too_many_arguments)]
pub fn double_continuity_norm(
    f: &GridFunction,
    g: &GridFunction,
    h1: &[f64],
    h2: &[f64],
    t: &ExponentTriple,
    rg: &RadiusGrid,
    q: &Quadrature,
    stride: usize,
) -> Result<f64> {
    check_continuity_inputs(f, g, &[h1, h2], t, rg)?;
    if h1.iter().all(|c| *c == 0.0) || h2.iter().all(|c| *c == 0.0) {
        return Ok(0.0);
    }
    let df = f.sub(&shift(f, h1)?)?;
    let dg = g.sub(&shift(g, h2)?)?;
    sup_lr_norm(&df, &dg, &rg.radii(), t.r.to_f64(), q, stride)
}

/// `‖sup_{t ∈ rg} |A_t(f, g)|‖_{L^r}` on the stride lattice.
pub fn maximal_lr_norm(
    f: &GridFunction,
    g: &GridFunction,
    rg: &RadiusGrid,
    r: f64,
    q: &Quadrature,
    stride: usize,
) -> Result<f64> {
    f.check_same(g)?;
    sup_lr_norm(f, g, &rg.radii(), r, q, stride)
}

/// Radii `t · cos φ_i` for every `t` and every node of the slicing rule.
///
/// With this radius set `A_t(f, g)(x) <= (ball average of f) · M_linear g(x)`
/// holds exactly at the quadrature level.
pub fn dominating_linear_radii(radii: &[f64], q: &Quadrature, d: usize) -> Result<Vec<f64>> {
    let rule = crate::averaging::slicing_rule(d, q.radial)?;
    let mut out: Vec<f64> = radii
        .iter()
        .flat_map(|t| rule.cos_nodes.iter().map(move |c| t * c))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_indicator, RegionSpec};

    #[test]
    fn radius_grids() {
        let rg = RadiusGrid::localized(33).unwrap();
        let r = rg.radii();
        assert_eq!(r.len(), 33);
        assert_eq!(r[0], 1.0);
        assert_eq!(r[32], 2.0);
        let o = octave_radii(-1, 1, 5).unwrap();
        assert_eq!(o.len(), 13);
        assert_eq!(*o.last().unwrap(), 4.0);
        assert_eq!(lacunary_radii(-2, 1).unwrap(), vec![0.25, 0.5, 1.0, 2.0]);
        assert!(RadiusGrid::geometric(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn ladder_is_increasing() {
        let l = hl_side_ladder(64);
        assert_eq!(l[0], 1);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*l.last().unwrap(), 64);
        assert!(l.contains(&32));
    }

    #[test]
    fn sliding_max_matches_naive() {
        let line = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let mut out = [0.0; 6];
        sliding_max(&line, 3, &mut out);
        for i in 0..6 {
            let naive = line[i..(i + 3).min(8)].iter().cloned().fold(f64::MIN, f64::max);
            assert_eq!(out[i], naive);
        }
    }

    #[test]
    fn hl_of_constant_is_one() {
        let spec = GridSpec::centered(2, 1.0, 16).unwrap();
        let one = GridFunction::constant(spec, 1.0);
        let m = hardy_littlewood_maximal(&one);
        assert!(m.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn coarse_block_sums_preserve_mass() {
        let spec = GridSpec::centered(2, 1.0, 16).unwrap();
        let f = make_indicator(&RegionSpec::ball(&[0.1, 0.0], 0.4), &spec).unwrap();
        let c = Coarse::new(spec, 4).unwrap();
        let sums = c.block_sums(&f).unwrap();
        let total: f64 = sums.iter().sum();
        let direct: f64 = f.values().iter().sum();
        assert_eq!(total, direct);
        assert!(Coarse::new(spec, 3).is_err());
    }
}
