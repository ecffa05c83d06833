//! Calderón–Zygmund decomposition, stopping-time sparse families and the
//! sparse trilinear form.

use std::collections::BTreeSet;
use std::io::Write;

use crate::averaging::Quadrature;
use crate::dyadic::{cube_average, CubeSet, DyadicCube, Lattice};
use crate::error::{LabError, Result};
use crate::fields::{GridFunction, GridSpec};
use crate::maximal::{maximal_pairing, MaximalKind};
use crate::region::{Exponent, ExponentTriple};

/// The dyadic tree below a standard cube `Q0` that is aligned with a grid:
/// its corner is a sample and its side is `2^depth` cells.
#[derive(Clone, Debug)]
struct Frame {
    spec: GridSpec,
    q0: DyadicCube,
    depth: u32,
    origin: [usize; 3],
}

/// A cube of the tree: `j` levels below `Q0`, with coordinates relative to
/// the corner of `Q0` in units of its side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Node {
    j: u32,
    c: [usize; 3],
}

impl Frame {
    fn new(spec: &GridSpec, q0: &DyadicCube) -> Result<Self> {
        if q0.lattice != Lattice::Standard {
            return Err(LabError::Alignment("Q0 must be a standard dyadic cube".into()));
        }
        if q0.d != spec.d {
            return Err(LabError::Shape("cube and grid dimensions differ".into()));
        }
        let corner = q0.corner();
        let mut origin = [0; 3];
        let mut cells = None;
        for k in 0..spec.d {
            let h = spec.spacing(k);
            let u = (corner[k] - spec.lo[k]) / h;
            let w = q0.side() / h;
            if (u - u.round()).abs() > 1e-9 || (w - w.round()).abs() > 1e-9 {
                return Err(LabError::Alignment(format!(
                    "{q0} does not fall on grid lines along axis {k}"
                )));
            }
            let (u, w) = (u.round() as i64, w.round() as i64);
            if u < 0 || u + w > spec.n_per_axis as i64 {
                return Err(LabError::Alignment(format!("{q0} sticks out of the grid box")));
            }
            if w < 1 || (w & (w - 1)) != 0 {
                return Err(LabError::Alignment(format!(
                    "side of {q0} is {w} cells, not a power of two"
                )));
            }
            if cells.is_some_and(|c| c != w) {
                return Err(LabError::Alignment("grid spacing differs between axes".into()));
            }
            cells = Some(w);
            origin[k] = u as usize;
        }
        Ok(Frame {
            spec: *spec,
            q0: *q0,
            depth: cells.unwrap().trailing_zeros(),
            origin,
        })
    }

    fn d(&self) -> usize {
        self.spec.d
    }

    fn cells_per_side(&self, n: &Node) -> usize {
        1 << (self.depth - n.j)
    }

    fn children(&self, n: &Node) -> Vec<Node> {
        let d = self.d();
        (0..1usize << d)
            .map(|b| {
                let mut c = [0; 3];
                for k in 0..d {
                    c[k] = 2 * n.c[k] + ((b >> (d - 1 - k)) & 1);
                }
                Node { j: n.j + 1, c }
            })
            .collect()
    }

    fn cube(&self, n: &Node) -> DyadicCube {
        let mut coords = [0i64; 3];
        for k in 0..self.d() {
            coords[k] = (self.q0.coords[k] << n.j) + n.c[k] as i64;
        }
        DyadicCube {
            d: self.d(),
            lattice: Lattice::Standard,
            level: self.q0.level - n.j as i32,
            coords,
        }
    }

    /// Flat grid indices of the samples in a node.
    fn indices(&self, n: &Node) -> Vec<usize> {
        let w = self.cells_per_side(n);
        let mut start = [0; 3];
        let mut len = [1; 3];
        for k in 0..self.d() {
            start[k] = self.origin[k] + n.c[k] * w;
            len[k] = w;
        }
        let mut out = Vec::with_capacity(w.pow(self.d() as u32));
        for a in 0..len[0] {
            for b in 0..len[1] {
                for c in 0..len[2] {
                    out.push(self.spec.flat_index([start[0] + a, start[1] + b, start[2] + c]));
                }
            }
        }
        out
    }

    fn mass_outside(&self, f: &GridFunction) -> bool {
        let inside: BTreeSet<usize> = self.indices(&Node { j: 0, c: [0; 3] }).into_iter().collect();
        f.values()
            .iter()
            .enumerate()
            .any(|(i, v)| *v != 0.0 && !inside.contains(&i))
    }
}

/// Block sums (or maxima) of a per-sample quantity over every node of the
/// tree, finest level first.
#[derive(Clone, Debug)]
struct Pyramid {
    d: usize,
    depth: u32,
    /// `levels[e]` aggregates blocks of `2^e` cells per side.
    levels: Vec<Vec<f64>>,
}

impl Pyramid {
    fn build(frame: &Frame, f: &GridFunction, map: impl Fn(f64) -> f64, max: bool) -> Self {
        let d = frame.d();
        let side = 1usize << frame.depth;
        let mut base = vec![0.0; side.pow(d as u32)];
        for (local, slot) in base.iter_mut().enumerate() {
            let mut rem = local;
            let mut idx = [0; 3];
            for k in (0..d).rev() {
                idx[k] = frame.origin[k] + rem % side;
                rem /= side;
            }
            *slot = map(f.values()[frame.spec.flat_index(idx)]);
        }
        let mut levels = vec![base];
        let mut n = side;
        while n > 1 {
            let prev = levels.last().unwrap();
            let m = n / 2;
            let mut next = vec![if max { f64::NEG_INFINITY } else { 0.0 }; m.pow(d as u32)];
            for (i, v) in prev.iter().enumerate() {
                let mut rem = i;
                let mut flat = 0;
                let mut mul = 1;
                for _ in 0..d {
                    flat += ((rem % n) / 2) * mul;
                    rem /= n;
                    mul *= m;
                }
                if max {
                    next[flat] = next[flat].max(*v);
                } else {
                    next[flat] += v;
                }
            }
            levels.push(next);
            n = m;
        }
        Pyramid {
            d,
            depth: frame.depth,
            levels,
        }
    }

    fn get(&self, n: &Node) -> f64 {
        let e = (self.depth - n.j) as usize;
        let per = 1usize << n.j;
        let mut flat = 0;
        for k in 0..self.d {
            flat = flat * per + n.c[k];
        }
        self.levels[e][flat]
    }

    fn cells(&self, n: &Node) -> f64 {
        ((1u64 << (self.depth - n.j)) as f64).powi(self.d as i32)
    }
}

/// Normalized `L^p` averages over tree nodes.
#[derive(Clone, Debug)]
struct Averager {
    pyramid: Pyramid,
    p: Option<f64>,
}

impl Averager {
    fn new(frame: &Frame, f: &GridFunction, p: Exponent) -> Self {
        if p.is_infinite() {
            Averager {
                pyramid: Pyramid::build(frame, f, f64::abs, true),
                p: None,
            }
        } else {
            let pf = p.to_f64();
            Averager {
                pyramid: Pyramid::build(frame, f, move |v| v.abs().powf(pf), false),
                p: Some(pf),
            }
        }
    }

    fn avg(&self, n: &Node) -> f64 {
        let s = self.pyramid.get(n);
        match self.p {
            None => s,
            Some(p) => (s / self.pyramid.cells(n)).powf(1.0 / p),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CZDecomposition {
    pub q0: DyadicCube,
    pub stopping_cubes: CubeSet,
    pub good: GridFunction,
    pub bad: GridFunction,
    pub threshold: f64,
    pub base_exponent: Exponent,
    /// `‖good‖_∞ <= good_bound · ⟨f⟩_{Q0,p}`.
    pub good_bound: f64,
}

fn check_c0(c0: f64) -> Result<()> {
    if !(c0 > 1.0) || !c0.is_finite() {
        return Err(LabError::Domain(format!("threshold C0 must exceed 1, got {c0}")));
    }
    Ok(())
}

fn check_exponent(p: Exponent) -> Result<()> {
    if !p.is_infinite() && p.to_f64() < 1.0 {
        return Err(LabError::Domain(format!("exponent must be at least 1, got {}", p.to_f64())));
    }
    Ok(())
}

/// Calderón–Zygmund decomposition of `f` on `Q0` at height
/// `C0 ⟨f⟩_{Q0,p}`.
///
/// Stopping cubes are the maximal dyadic `P ⊊ Q0` with
/// `⟨f⟩_{P,p} > C0 ⟨f⟩_{Q0,p}`. The bad part is `Σ_P (f - ⟨f⟩_P) χ_P`
/// with plain averages, and the good part is `f` minus the bad part.
pub fn cz_decompose(
    f: &GridFunction,
    q0: &DyadicCube,
    p: Exponent,
    c0: f64,
) -> Result<CZDecomposition> {
    check_c0(c0)?;
    check_exponent(p)?;
    let frame = Frame::new(f.spec(), q0)?;
    if frame.mass_outside(f) {
        log::warn!("input has mass outside {q0}; it is ignored by the decomposition");
    }
    let avg = Averager::new(&frame, f, p);
    let plain = Pyramid::build(&frame, f, |v| v, false);
    let root = Node { j: 0, c: [0; 3] };
    let level = c0 * avg.avg(&root);

    let mut stopping = Vec::new();
    let mut stack = frame.children(&root);
    if frame.depth == 0 {
        stack.clear();
    }
    while let Some(n) = stack.pop() {
        if avg.avg(&n) > level {
            stopping.push(n);
        } else if n.j < frame.depth {
            stack.extend(frame.children(&n));
        }
    }

    let mut bad = vec![0.0; f.spec().len()];
    for n in &stopping {
        let mean = plain.get(n) / plain.cells(n);
        for i in frame.indices(n) {
            bad[i] = f.values()[i] - mean;
        }
    }
    let bad = GridFunction::new(*f.spec(), bad)?;
    let good = f.sub(&bad)?;
    let good_bound = if p.is_infinite() {
        c0
    } else {
        2f64.powf(f.spec().d as f64 / p.to_f64()) * c0
    };
    Ok(CZDecomposition {
        q0: *q0,
        stopping_cubes: CubeSet::new(stopping.iter().map(|n| frame.cube(n)).collect()),
        good,
        bad,
        threshold: c0,
        base_exponent: p,
        good_bound,
    })
}

/// Measured CZ invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct CzReport {
    /// `max |good + bad - f|` on `Q0`.
    pub reconstruction_error: f64,
    /// `max_P |∫_P bad| / (|P| ⟨f⟩_{Q0,1})`.
    pub mean_zero_error: f64,
    /// `‖good‖_∞ / ⟨f⟩_{Q0,p}`.
    pub good_ratio: f64,
    pub good_bound: f64,
    pub disjoint: bool,
    pub maximal: bool,
}

impl CzReport {
    pub fn passes(&self) -> bool {
        self.reconstruction_error <= 1e-10
            && self.mean_zero_error <= 1e-10
            && self.good_ratio <= self.good_bound * (1.0 + 1e-12)
            && self.disjoint
            && self.maximal
    }
}

impl CZDecomposition {
    /// Checks the decomposition against `f` by direct summation over cubes.
    pub fn check(&self, f: &GridFunction) -> Result<CzReport> {
        let spec = f.spec();
        let q0_idx = self.q0.grid_indices(spec);
        let mut reconstruction_error: f64 = 0.0;
        for &i in &q0_idx {
            let e = (self.good.values()[i] + self.bad.values()[i] - f.values()[i]).abs();
            reconstruction_error = reconstruction_error.max(e);
        }
        let top_plain = cube_average(f, &self.q0, Exponent::int(1));
        let top_p = cube_average(f, &self.q0, self.base_exponent);
        let mut mean_zero_error: f64 = 0.0;
        let mut owner = vec![false; spec.len()];
        let mut disjoint = true;
        let mut maximal = true;
        let level = self.threshold * top_p;
        for p in self.stopping_cubes.iter() {
            let idx = p.grid_indices(spec);
            let s: f64 = idx.iter().map(|&i| self.bad.values()[i]).sum();
            if top_plain > 0.0 {
                mean_zero_error = mean_zero_error.max(s.abs() / (idx.len() as f64 * top_plain));
            }
            for &i in &idx {
                if owner[i] {
                    disjoint = false;
                }
                owner[i] = true;
            }
            if cube_average(f, p, self.base_exponent) <= level {
                maximal = false;
            }
            let mut a = p.parent();
            while a.level < self.q0.level {
                if cube_average(f, &a, self.base_exponent) > level {
                    maximal = false;
                }
                a = a.parent();
            }
        }
        let good_max = q0_idx
            .iter()
            .fold(0.0f64, |m, &i| m.max(self.good.values()[i].abs()));
        let good_ratio = if top_p > 0.0 { good_max / top_p } else { 0.0 };
        Ok(CzReport {
            reconstruction_error,
            mean_zero_error,
            good_ratio,
            good_bound: self.good_bound,
            disjoint,
            maximal,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMember {
    pub cube: DyadicCube,
    /// Flat grid indices of the samples in `E_Q`.
    pub exceptional: Vec<usize>,
}

impl SparseMember {
    pub fn ratio(&self, spec: &GridSpec) -> f64 {
        self.exceptional.len() as f64 * spec.cell_volume() / self.cube.volume()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseFamily {
    pub spec: GridSpec,
    pub members: Vec<SparseMember>,
    /// `min |E_Q| / |Q|` over the family.
    pub eta: f64,
}

impl SparseFamily {
    pub fn new(spec: GridSpec, members: Vec<SparseMember>) -> Self {
        let eta = members
            .iter()
            .map(|m| m.ratio(&spec))
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        SparseFamily { spec, members, eta }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn cubes(&self) -> CubeSet {
        CubeSet::new(self.members.iter().map(|m| m.cube).collect())
    }

    /// CSV rows `lattice_id,level,coord_0,..,eta_Q`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.spec.d;
        writeln!(w, "# sparselab-sparse v1 d={d} eta={:e}", self.eta)?;
        let coords: Vec<String> = (0..d).map(|k| format!("coord_{k}")).collect();
        writeln!(w, "lattice_id,level,{},eta_Q", coords.join(","))?;
        for m in &self.members {
            let c: Vec<String> = m.cube.coords[..d].iter().map(|c| c.to_string()).collect();
            writeln!(
                w,
                "{},{},{},{:e}",
                m.cube.lattice_id(),
                m.cube.level,
                c.join(","),
                m.ratio(&self.spec)
            )?;
        }
        Ok(())
    }
}

fn conjugate_of(t: &ExponentTriple) -> Result<Exponent> {
    t.r_conj
        .ok_or_else(|| LabError::Domain("sparse forms need r >= 1 so that r' exists".into()))
}

/// Stopping-time sparse family for `(f, g, h)` below `Q0`.
///
/// Starting from `Q0`, the children of a selected cube `R` are the maximal
/// dyadic `P ⊊ R` with
/// `⟨f⟩_{P,p}/⟨f⟩_{R,p} + ⟨g⟩_{P,q}/⟨g⟩_{R,q} + ⟨h⟩_{P,r'}/⟨h⟩_{R,r'} > C0`
/// (a term with zero denominator counts as zero). `E_R` is `R` minus its
/// children, and the construction recurses into every child. Single-cell
/// cubes have no children, so `E_Q = Q` for them.
pub fn build_sparse_family(
    f: &GridFunction,
    g: &GridFunction,
    h: &GridFunction,
    q0: &DyadicCube,
    t: &ExponentTriple,
    c0: f64,
) -> Result<SparseFamily> {
    check_c0(c0)?;
    f.check_same(g)?;
    f.check_same(h)?;
    let exps = [t.p, t.q, conjugate_of(t)?];
    for e in exps {
        check_exponent(e)?;
    }
    let frame = Frame::new(f.spec(), q0)?;
    for (name, u) in [("f", f), ("g", g), ("h", h)] {
        if frame.mass_outside(u) {
            log::warn!("{name} has mass outside {q0}; it is ignored by the construction");
        }
    }
    let avgs = [
        Averager::new(&frame, f, exps[0]),
        Averager::new(&frame, g, exps[1]),
        Averager::new(&frame, h, exps[2]),
    ];
    let score = |n: &Node, base: &[f64; 3]| -> f64 {
        (0..3)
            .map(|i| if base[i] > 0.0 { avgs[i].avg(n) / base[i] } else { 0.0 })
            .sum()
    };

    let spec = *f.spec();
    let mut painted = vec![false; spec.len()];
    let mut members = Vec::new();
    let mut selected = vec![Node { j: 0, c: [0; 3] }];
    while let Some(r) = selected.pop() {
        let base = [avgs[0].avg(&r), avgs[1].avg(&r), avgs[2].avg(&r)];
        let mut stops = Vec::new();
        if r.j < frame.depth {
            let mut stack = frame.children(&r);
            while let Some(n) = stack.pop() {
                if score(&n, &base) > c0 {
                    stops.push(n);
                } else if n.j < frame.depth {
                    stack.extend(frame.children(&n));
                }
            }
        }
        for s in &stops {
            for i in frame.indices(s) {
                painted[i] = true;
            }
        }
        let mut exceptional = Vec::new();
        for i in frame.indices(&r) {
            if !painted[i] {
                exceptional.push(i);
            }
        }
        for s in &stops {
            for i in frame.indices(s) {
                painted[i] = false;
            }
        }
        exceptional.sort_unstable();
        members.push(SparseMember {
            cube: frame.cube(&r),
            exceptional,
        });
        stops.sort();
        selected.extend(stops.into_iter().rev());
    }
    Ok(SparseFamily::new(spec, members))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsityReport {
    pub eta_target: f64,
    /// Smallest `|E_Q| / |Q|` found.
    pub min_ratio: f64,
    /// Pairs of cubes whose sets `E_Q` intersect.
    pub overlaps: Vec<(DyadicCube, DyadicCube)>,
    /// Cubes with `|E_Q| < eta_target |Q|`.
    pub below_target: Vec<DyadicCube>,
    /// Cubes whose `E_Q` leaves the cube.
    pub not_contained: Vec<DyadicCube>,
}

impl SparsityReport {
    pub fn passed(&self) -> bool {
        self.overlaps.is_empty() && self.below_target.is_empty() && self.not_contained.is_empty()
    }
}

/// Checks `E_Q ⊆ Q`, `|E_Q| >= eta_target |Q|` and pairwise disjointness
/// sample by sample.
pub fn verify_sparsity(s: &SparseFamily, eta_target: f64) -> SparsityReport {
    let spec = &s.spec;
    let mut owner: Vec<Option<usize>> = vec![None; spec.len()];
    let mut overlaps = BTreeSet::new();
    let mut below_target = Vec::new();
    let mut not_contained = Vec::new();
    let mut min_ratio = f64::INFINITY;
    for (m_idx, m) in s.members.iter().enumerate() {
        let ranges: Vec<(usize, usize)> = (0..spec.d).map(|k| m.cube.index_range(spec, k)).collect();
        let mut outside = false;
        for &i in &m.exceptional {
            let idx = spec.multi_index(i);
            if (0..spec.d).any(|k| idx[k] < ranges[k].0 || idx[k] >= ranges[k].1) {
                outside = true;
            }
            match owner[i] {
                Some(o) => {
                    overlaps.insert((o, m_idx));
                }
                None => owner[i] = Some(m_idx),
            }
        }
        if outside {
            not_contained.push(m.cube);
        }
        let ratio = m.ratio(spec);
        min_ratio = min_ratio.min(ratio);
        if ratio < eta_target * (1.0 - 1e-12) {
            below_target.push(m.cube);
        }
    }
    SparsityReport {
        eta_target,
        min_ratio,
        overlaps: overlaps
            .into_iter()
            .map(|(a, b)| (s.members[a].cube, s.members[b].cube))
            .collect(),
        below_target,
        not_contained,
    }
}

/// `Σ_{Q ∈ S} |Q| ⟨f⟩_{Q,p} ⟨g⟩_{Q,q} ⟨h⟩_{Q,r'}`.
pub fn sparse_form(
    s: &SparseFamily,
    f: &GridFunction,
    g: &GridFunction,
    h: &GridFunction,
    t: &ExponentTriple,
) -> Result<f64> {
    f.check_same(g)?;
    f.check_same(h)?;
    let rc = conjugate_of(t)?;
    let terms: Vec<f64> = s
        .members
        .iter()
        .map(|m| {
            let q = &m.cube;
            q.volume() * cube_average(f, q, t.p) * cube_average(g, q, t.q) * cube_average(h, q, rc)
        })
        .collect();
    Ok(crate::fields::pairwise_sum(&terms))
}

#[derive(Clone, Debug)]
pub struct Domination {
    /// `⟨M(f, g), h⟩ / Σ_Q |Q| ⟨f⟩⟨g⟩⟨h⟩`; infinite when the form vanishes
    /// but the pairing does not.
    pub ratio: f64,
    pub pairing: f64,
    pub form: f64,
    pub family: SparseFamily,
}

/// How the maximal pairing in [`domination_ratio`] is evaluated.
#[derive(Clone, Copy, Debug)]
pub struct DominationConfig {
    pub kind: MaximalKind,
    pub quadrature: Quadrature,
    /// Evaluate the maximal function once per `stride^d` block.
    pub stride: usize,
    pub c0: f64,
}

/// Ratio of `⟨M(f, g), h⟩` to the sparse form of the family built for
/// `(f, g, h)` below `Q0`.
pub fn domination_ratio(
    f: &GridFunction,
    g: &GridFunction,
    h: &GridFunction,
    t: &ExponentTriple,
    q0: &DyadicCube,
    cfg: &DominationConfig,
) -> Result<Domination> {
    let family = build_sparse_family(f, g, h, q0, t, cfg.c0)?;
    let form = sparse_form(&family, f, g, h, t)?;
    let pairing = maximal_pairing(
        &f.abs(),
        &g.abs(),
        &h.abs(),
        &cfg.kind.radii()?,
        &cfg.quadrature,
        cfg.stride,
    )?;
    let ratio = if form > 0.0 {
        pairing / form
    } else if pairing > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(Domination {
        ratio,
        pairing,
        form,
        family,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_indicator, RegionSpec};

    #[test]
    fn frame_alignment() {
        let spec = GridSpec::new(1, &[0.0], &[1.0], 64).unwrap();
        assert!(Frame::new(&spec, &DyadicCube::unit(1).unwrap()).is_ok());
        let spec = GridSpec::new(1, &[0.0], &[1.0], 48).unwrap();
        assert!(matches!(
            Frame::new(&spec, &DyadicCube::unit(1).unwrap()),
            Err(LabError::Alignment(_))
        ));
        let spec = GridSpec::new(1, &[0.0], &[0.5], 64).unwrap();
        assert!(Frame::new(&spec, &DyadicCube::unit(1).unwrap()).is_err());
    }

    #[test]
    fn pyramid_matches_direct_sums() {
        let spec = GridSpec::new(2, &[-1.0, -1.0], &[1.0, 1.0], 16).unwrap();
        let f = GridFunction::from_fn(spec, |x| x[0] * 3.0 + x[1] * x[1]);
        let q0 = DyadicCube::standard(2, 0, &[0, -1]).unwrap();
        let frame = Frame::new(&spec, &q0).unwrap();
        let pyr = Pyramid::build(&frame, &f, |v| v, false);
        let n = Node { j: 2, c: [1, 3, 0] };
        let direct: f64 = frame.indices(&n).iter().map(|&i| f.values()[i]).sum();
        assert!((pyr.get(&n) - direct).abs() < 1e-12);
        let cube = frame.cube(&n);
        assert_eq!(cube.grid_indices(&spec), frame.indices(&n));
    }

    #[test]
    fn cz_example() {
        let spec = GridSpec::new(1, &[0.0], &[1.0], 64).unwrap();
        let f = make_indicator(&RegionSpec::cuboid(&[0.0], &[0.125]), &spec).unwrap();
        let q0 = DyadicCube::unit(1).unwrap();
        let cz = cz_decompose(&f, &q0, Exponent::int(1), 2.0).unwrap();
        assert_eq!(cz.stopping_cubes.len(), 1);
        let p = cz.stopping_cubes.cubes[0];
        assert_eq!(p.level, -2);
        assert_eq!(p.coords[0], 0);
        assert!(cz.check(&f).unwrap().passes());
        assert!(cz_decompose(&f, &q0, Exponent::int(1), 1.0).is_err());
    }
}
