//! Dyadic cubes, the `3^d` shifted lattices and the one-third lattice.

use std::fmt;

use crate::error::{LabError, Result};
use crate::fields::{GridFunction, GridSpec, RegionSpec};
use crate::region::Exponent;

/// Which lattice a cube belongs to.
///
/// `Shifted(i)` for `1 <= i <= 3^d` is the lattice whose level-`m` cubes
/// have corners `2^m (k + (-1)^m t / 3)`, where `t ∈ {0,1,2}^d` holds the
/// base-3 digits of `i - 1`. `Shifted(1)` coincides with `Standard` as a
/// set of cubes. `Third` has level-`m` cubes of side `2^m / 3` with
/// corners `k 2^m / 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lattice {
    Standard,
    Shifted(u32),
    Third,
}

impl Lattice {
    pub fn id(self) -> i64 {
        match self {
            Lattice::Standard => 0,
            Lattice::Shifted(i) => i as i64,
            Lattice::Third => -1,
        }
    }

    pub fn from_id(id: i64, d: usize) -> Result<Self> {
        match id {
            0 => Ok(Lattice::Standard),
            -1 => Ok(Lattice::Third),
            i if i >= 1 && i <= 3i64.pow(d as u32) => Ok(Lattice::Shifted(i as u32)),
            _ => Err(LabError::Domain(format!("no lattice with id {id} in dimension {d}"))),
        }
    }

    /// Per-axis shift digits `t`, zero for the unshifted lattices.
    pub fn digits(self, d: usize) -> [i64; 3] {
        let mut t = [0; 3];
        if let Lattice::Shifted(i) = self {
            let mut r = (i - 1) as i64;
            for digit in t.iter_mut().take(d) {
                *digit = r % 3;
                r /= 3;
            }
        }
        t
    }

    fn from_digits(t: [i64; 3], d: usize) -> Self {
        let mut i = 0;
        for k in (0..d).rev() {
            i = i * 3 + t[k];
        }
        Lattice::Shifted(i as u32 + 1)
    }
}

fn level_sign(m: i32) -> i64 {
    if m.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub d: usize,
    pub lattice: Lattice,
    pub level: i32,
    pub coords: [i64; 3],
}

impl DyadicCube {
    pub fn new(d: usize, lattice: Lattice, level: i32, coords: &[i64]) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(LabError::UnsupportedDimension(d));
        }
        if coords.len() != d {
            return Err(LabError::Shape(format!("cube needs {d} coordinates")));
        }
        Lattice::from_id(lattice.id(), d)?;
        let mut c = [0; 3];
        c[..d].copy_from_slice(coords);
        Ok(DyadicCube {
            d,
            lattice,
            level,
            coords: c,
        })
    }

    pub fn standard(d: usize, level: i32, coords: &[i64]) -> Result<Self> {
        Self::new(d, Lattice::Standard, level, coords)
    }

    /// The standard cube `[0, 1)^d`.
    pub fn unit(d: usize) -> Result<Self> {
        Self::standard(d, 0, &vec![0; d])
    }

    pub fn lattice_id(&self) -> i64 {
        self.lattice.id()
    }

    pub fn side(&self) -> f64 {
        let s = 2f64.powi(self.level);
        match self.lattice {
            Lattice::Third => s / 3.0,
            _ => s,
        }
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.d as i32)
    }

    /// Lower corner.
    pub fn corner(&self) -> [f64; 3] {
        let s = 2f64.powi(self.level);
        let mut x = [0.0; 3];
        match self.lattice {
            Lattice::Third => {
                for k in 0..self.d {
                    x[k] = self.coords[k] as f64 * s / 3.0;
                }
            }
            _ => {
                let t = self.lattice.digits(self.d);
                let sign = level_sign(self.level);
                for k in 0..self.d {
                    x[k] = s * (self.coords[k] as f64 + (sign * t[k]) as f64 / 3.0);
                }
            }
        }
        x
    }

    pub fn upper(&self) -> [f64; 3] {
        let c = self.corner();
        let s = self.side();
        let mut u = [0.0; 3];
        for k in 0..self.d {
            u[k] = c[k] + s;
        }
        u
    }

    pub fn center(&self) -> [f64; 3] {
        let c = self.corner();
        let s = self.side();
        let mut u = [0.0; 3];
        for k in 0..self.d {
            u[k] = c[k] + s / 2.0;
        }
        u
    }

    /// Half-open membership `corner <= x < corner + side`.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        let c = self.corner();
        let s = self.side();
        (0..self.d).all(|k| c[k] <= x[k] && x[k] < c[k] + s)
    }

    /// Offset of child index relative to `2k` along each axis.
    fn child_offset(&self) -> [i64; 3] {
        match self.lattice {
            Lattice::Third | Lattice::Standard => [0; 3],
            Lattice::Shifted(_) => {
                let t = self.lattice.digits(self.d);
                let sign = level_sign(self.level);
                [sign * t[0], sign * t[1], sign * t[2]]
            }
        }
    }

    /// The `2^d` cubes of the next level down, in row-major order.
    pub fn children(&self) -> Vec<DyadicCube> {
        let off = self.child_offset();
        (0..1usize << self.d)
            .map(|b| {
                let mut c = [0; 3];
                for k in 0..self.d {
                    let bit = ((b >> (self.d - 1 - k)) & 1) as i64;
                    c[k] = 2 * self.coords[k] + off[k] + bit;
                }
                DyadicCube {
                    coords: c,
                    level: self.level - 1,
                    ..*self
                }
            })
            .collect()
    }

    pub fn parent(&self) -> DyadicCube {
        let up = DyadicCube {
            level: self.level + 1,
            ..*self
        };
        let off = up.child_offset();
        let mut c = [0; 3];
        for k in 0..self.d {
            c[k] = (self.coords[k] - off[k]).div_euclid(2);
        }
        DyadicCube { coords: c, ..up }
    }

    pub fn is_ancestor_of(&self, other: &DyadicCube) -> bool {
        if self.lattice != other.lattice || self.level < other.level {
            return false;
        }
        let mut c = *other;
        while c.level < self.level {
            c = c.parent();
        }
        c == *self
    }

    /// Grid index range `[start, end)` along `axis` of samples inside.
    pub fn index_range(&self, spec: &GridSpec, axis: usize) -> (usize, usize) {
        let c = self.corner();
        spec.index_range(axis, c[axis], c[axis] + self.side())
    }

    /// Flat indices of the grid samples inside the cube.
    pub fn grid_indices(&self, spec: &GridSpec) -> Vec<usize> {
        let mut ranges = [(0, 1); 3];
        for (k, r) in ranges.iter_mut().enumerate().take(self.d) {
            *r = self.index_range(spec, k);
        }
        let mut out = Vec::new();
        for i in ranges[0].0..ranges[0].1 {
            for j in ranges[1].0..ranges[1].1 {
                for l in ranges[2].0..ranges[2].1 {
                    out.push(spec.flat_index([i, j, l]));
                }
            }
        }
        out
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.corner();
        let s = self.side();
        write!(f, "[")?;
        for k in 0..self.d {
            if k > 0 {
                write!(f, " x ")?;
            }
            write!(f, "[{}, {})", c[k], c[k] + s)?;
        }
        write!(f, "] (lattice {}, level {})", self.lattice_id(), self.level)
    }
}

/// A deduplicated list of cubes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CubeSet {
    pub cubes: Vec<DyadicCube>,
}

impl CubeSet {
    pub fn new(mut cubes: Vec<DyadicCube>) -> Self {
        cubes.sort();
        cubes.dedup();
        CubeSet { cubes }
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DyadicCube> {
        self.cubes.iter()
    }

    pub fn contains(&self, q: &DyadicCube) -> bool {
        self.cubes.binary_search(q).is_ok()
    }

    pub fn total_volume(&self) -> f64 {
        self.cubes.iter().map(|q| q.volume()).sum()
    }
}

pub fn children(q: &DyadicCube) -> CubeSet {
    CubeSet::new(q.children())
}

/// For `Q` in the one-third lattice, the cube `3Q` and the shifted lattice
/// that contains it.
pub fn three_lattice_cover(q: &DyadicCube) -> Result<DyadicCube> {
    if q.lattice != Lattice::Third {
        return Err(LabError::Domain(
            "three_lattice_cover needs a cube of the one-third lattice".into(),
        ));
    }
    // 3Q has corner (k - 1) 2^m / 3 and side 2^m. Writing k - 1 = 3j + σt
    // with σ = (-1)^m and t ∈ {0,1,2} puts it in the lattice with digits t.
    let sign = level_sign(q.level);
    let mut t = [0i64; 3];
    let mut j = [0i64; 3];
    for k in 0..q.d {
        let a = q.coords[k] - 1;
        t[k] = (sign * a).rem_euclid(3);
        let rest = a - sign * t[k];
        debug_assert_eq!(rest.rem_euclid(3), 0);
        j[k] = rest.div_euclid(3);
    }
    Ok(DyadicCube {
        d: q.d,
        lattice: Lattice::from_digits(t, q.d),
        level: q.level,
        coords: j,
    })
}

/// `(|Q|^{-1} Σ_{x_i ∈ Q} |f(x_i)|^p cellvol)^{1/p}`; the max of `|f|` over
/// the cube for `p = ∞`.
pub fn cube_average(f: &GridFunction, q: &DyadicCube, p: Exponent) -> f64 {
    let spec = f.spec();
    let idx = q.grid_indices(spec);
    if idx.is_empty() {
        log::warn!("cube {q} contains no grid samples");
        return 0.0;
    }
    let vals = f.values();
    if p.is_infinite() {
        return idx.iter().fold(0.0, |m, &i| m.max(vals[i].abs()));
    }
    let p = p.to_f64();
    let s = crate::fields::pairwise_sum_by(idx.len(), &|k| vals[idx[k]].abs().powf(p));
    (s * spec.cell_volume() / q.volume()).powf(1.0 / p)
}

/// Diameter of the bounding box of all the supports.
fn joint_diameter(supports: &[&RegionSpec]) -> f64 {
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    for s in supports {
        let (a, b) = s.bounding_box();
        if lo.is_empty() {
            lo = a;
            hi = b;
        } else {
            for k in 0..lo.len() {
                lo[k] = lo[k].min(a[k]);
                hi[k] = hi[k].max(b[k]);
            }
        }
    }
    lo.iter()
        .zip(&hi)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
}

/// Smallest level `m` with `2^m > 2^{9/2} · diam`, where `diam` is the
/// diameter of the joint bounding box of the supports.
///
/// Dyadic maximal terms from cubes of side `2^m` at or above this level
/// vanish on the supports.
pub fn localization_level(
    supp_f: &RegionSpec,
    supp_g: &RegionSpec,
    supp_h: &RegionSpec,
) -> Result<i32> {
    let diam = joint_diameter(&[supp_f, supp_g, supp_h]);
    if !diam.is_finite() {
        return Err(LabError::Domain("supports must be bounded".into()));
    }
    if diam == 0.0 {
        return Ok(i32::MIN);
    }
    // compare squares so that 2^{9/2} needs no rounding: 4^m > 2^9 diam^2
    let target = 512.0 * diam * diam;
    let mut m = target.log2().floor() as i32 / 2 - 2;
    while 4f64.powi(m) > target {
        m -= 1;
    }
    while 4f64.powi(m) <= target {
        m += 1;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_ids_round_trip() {
        for d in 1..=3 {
            for i in 1..=3u32.pow(d as u32) {
                let l = Lattice::Shifted(i);
                assert_eq!(Lattice::from_digits(l.digits(d), d), l);
                assert_eq!(Lattice::from_id(l.id(), d).unwrap(), l);
            }
        }
        assert!(Lattice::from_id(10, 2).is_err());
    }

    #[test]
    fn unit_interval_children() {
        let q = DyadicCube::unit(1).unwrap();
        let ch = q.children();
        assert_eq!(ch[0].corner()[0], 0.0);
        assert_eq!(ch[0].side(), 0.5);
        assert_eq!(ch[1].corner()[0], 0.5);
        for c in &ch {
            assert_eq!(c.parent(), q);
        }
    }

    #[test]
    fn three_lattice_example() {
        let q = DyadicCube::new(1, Lattice::Third, 0, &[0]).unwrap();
        assert!((q.side() - 1.0 / 3.0).abs() < 1e-15);
        let big = three_lattice_cover(&q).unwrap();
        assert_eq!(big.side(), 1.0);
        assert!((big.corner()[0] + 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(big.lattice, Lattice::Shifted(_)));
    }

    #[test]
    fn localization_examples() {
        let unit1 = RegionSpec::cuboid(&[0.0], &[1.0]);
        assert_eq!(localization_level(&unit1, &unit1, &unit1).unwrap(), 5);
        let unit2 = RegionSpec::cuboid(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(localization_level(&unit2, &unit2, &unit2).unwrap(), 6);
        let double2 = RegionSpec::cuboid(&[0.0, 0.0], &[2.0, 2.0]);
        assert_eq!(localization_level(&double2, &double2, &double2).unwrap(), 7);
    }
}
