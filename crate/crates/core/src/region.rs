//! Exponent bookkeeping: Lebesgue exponents, Hölder conjugates, and the
//! boundedness region used to label every experiment.
//!
//! Exponents given as rationals are kept exact so that points on a region
//! boundary are classified the same way every time. Anything involving a
//! float falls back to `f64` comparisons with [`FLOAT_SLACK`].

use std::cmp::Ordering;
use std::fmt;

use num_rational::Rational64;

use crate::error::{LabError, Result};

/// Comparison slack used whenever a float enters a region test.
pub const FLOAT_SLACK: f64 = 1e-12;

/// A reciprocal exponent `1/p`, exact when it came from a rational.
#[derive(Clone, Copy, Debug)]
pub enum Recip {
    Exact(Rational64),
    Approx(f64),
}

impl Recip {
    pub fn int(v: i64) -> Self {
        Recip::Exact(Rational64::from_integer(v))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Recip::Exact(Rational64::new(num, den))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Recip::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Recip::Approx(x) => x,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Recip::Exact(_))
    }

    fn combine(
        self,
        other: Recip,
        exact: impl Fn(Rational64, Rational64) -> Rational64,
        approx: impl Fn(f64, f64) -> f64,
    ) -> Recip {
        match (self, other) {
            (Recip::Exact(a), Recip::Exact(b)) => Recip::Exact(exact(a, b)),
            (a, b) => Recip::Approx(approx(a.to_f64(), b.to_f64())),
        }
    }

    pub fn add(self, other: Recip) -> Recip {
        self.combine(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(self, other: Recip) -> Recip {
        self.combine(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(self, other: Recip) -> Recip {
        self.combine(other, |a, b| a * b, |a, b| a * b)
    }

    pub fn div(self, other: Recip) -> Recip {
        self.combine(other, |a, b| a / b, |a, b| a / b)
    }

    /// Three-way comparison; floats within [`FLOAT_SLACK`] compare equal.
    pub fn compare(self, other: Recip) -> Ordering {
        match (self, other) {
            (Recip::Exact(a), Recip::Exact(b)) => a.cmp(&b),
            (a, b) => {
                let (x, y) = (a.to_f64(), b.to_f64());
                if x < y - FLOAT_SLACK {
                    Ordering::Less
                } else if x > y + FLOAT_SLACK {
                    Ordering::Greater
                } else {
                    Ordering::Equal
                }
            }
        }
    }

    pub fn lt(self, other: Recip) -> bool {
        self.compare(other) == Ordering::Less
    }

    pub fn le(self, other: Recip) -> bool {
        self.compare(other) != Ordering::Greater
    }

    pub fn min(self, other: Recip) -> Recip {
        if other.lt(self) {
            other
        } else {
            self
        }
    }
}

impl PartialEq for Recip {
    fn eq(&self, other: &Self) -> bool {
        self.compare(*other) == Ordering::Equal
    }
}

impl fmt::Display for Recip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recip::Exact(r) => write!(f, "{r}"),
            Recip::Approx(x) => write!(f, "{x}"),
        }
    }
}

/// A Lebesgue exponent in `(0, ∞]`.
#[derive(Clone, Copy, Debug)]
pub enum Exponent {
    Finite(Recip),
    Infinite,
}

impl Exponent {
    pub const INFINITY: Exponent = Exponent::Infinite;

    pub fn int(v: i64) -> Self {
        Exponent::Finite(Recip::int(v))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Exponent::Finite(Recip::ratio(num, den))
    }

    pub fn float(v: f64) -> Self {
        if v.is_infinite() {
            Exponent::Infinite
        } else {
            Exponent::Finite(Recip::Approx(v))
        }
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn recip(self) -> Recip {
        match self {
            Exponent::Infinite => Recip::int(0),
            Exponent::Finite(v) => Recip::int(1).div(v),
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Exponent::Infinite => f64::INFINITY,
            Exponent::Finite(v) => v.to_f64(),
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    fn positive(self) -> bool {
        match self {
            Exponent::Infinite => true,
            Exponent::Finite(v) => Recip::int(0).lt(v),
        }
    }
}

impl PartialEq for Exponent {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Exponent::Infinite, Exponent::Infinite) => true,
            (Exponent::Finite(a), Exponent::Finite(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinite => write!(f, "inf"),
            Exponent::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = LabError;

    /// Accepts `inf`, integers, `a/b` rationals, or decimals.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Exponent::Infinite);
        }
        if let Some((a, b)) = s.split_once('/') {
            let num: i64 = a.trim().parse().map_err(|_| LabError::Parse(s.into()))?;
            let den: i64 = b.trim().parse().map_err(|_| LabError::Parse(s.into()))?;
            if den == 0 {
                return Err(LabError::Parse(format!("zero denominator in {s}")));
            }
            return Ok(Exponent::ratio(num, den));
        }
        if let Ok(v) = s.parse::<i64>() {
            return Ok(Exponent::int(v));
        }
        s.parse::<f64>()
            .map(Exponent::float)
            .map_err(|_| LabError::Parse(s.into()))
    }
}

/// The Hölder conjugate `r'` of `r ≥ 1`.
pub fn holder_conjugate(r: Exponent) -> Result<Exponent> {
    match r {
        Exponent::Infinite => Ok(Exponent::int(1)),
        Exponent::Finite(v) => match v.compare(Recip::int(1)) {
            Ordering::Less => Err(LabError::Domain(format!(
                "Hölder conjugate needs r >= 1, got {v}"
            ))),
            Ordering::Equal => Ok(Exponent::Infinite),
            Ordering::Greater => Ok(Exponent::Finite(v.div(v.sub(Recip::int(1))))),
        },
    }
}

/// `(p, q, r)` together with the conjugate `r'` of `r` (absent when `r < 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentTriple {
    pub p: Exponent,
    pub q: Exponent,
    pub r: Exponent,
    pub r_conj: Option<Exponent>,
}

impl ExponentTriple {
    pub fn new(p: Exponent, q: Exponent, r: Exponent) -> Result<Self> {
        for (name, e) in [("p", p), ("q", q), ("r", r)] {
            if !e.positive() {
                return Err(LabError::Domain(format!("exponent {name} must be positive")));
            }
        }
        let r_conj = holder_conjugate(r).ok();
        Ok(ExponentTriple { p, q, r, r_conj })
    }

    /// Integer triple shorthand, e.g. `(2, 2, 2)`.
    pub fn ints(p: i64, q: i64, r: i64) -> Self {
        Self::new(Exponent::int(p), Exponent::int(q), Exponent::int(r))
            .expect("positive integer exponents")
    }

    pub fn floats(p: f64, q: f64, r: f64) -> Result<Self> {
        Self::new(Exponent::float(p), Exponent::float(q), Exponent::float(r))
    }

    /// `r'` as a float, or `None` when `r < 1`.
    pub fn r_conj_f64(&self) -> Option<f64> {
        self.r_conj.map(Exponent::to_f64)
    }

    /// `(1/p, 1/q, 1/r)`.
    pub fn reciprocals(&self) -> [Recip; 3] {
        [self.p.recip(), self.q.recip(), self.r.recip()]
    }

    fn pq_sum(&self) -> Recip {
        self.p.recip().add(self.q.recip())
    }
}

impl fmt::Display for ExponentTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.p, self.q, self.r)
    }
}

/// Upper bound `m(d, r)` for `1/p + 1/q`, for `d ≥ 2`.
pub fn m_bound(d: usize, r: Exponent) -> Result<Recip> {
    if d < 2 {
        return Err(LabError::UnsupportedDimension(d));
    }
    let inv_r = r.recip();
    let d_i = d as i64;
    if d == 2 {
        return Ok(Recip::int(1).add(inv_r).min(Recip::ratio(3, 2)));
    }
    let a = Recip::int(1).add(Recip::int(d_i).mul(inv_r));
    let b = Recip::ratio(2 * d_i - 1, d_i);
    let c = inv_r.add(Recip::ratio(2 * (d_i - 1), d_i));
    Ok(a.min(b).min(c))
}

/// Vertices of the hull used as the `d = 1` region, in `(1/p, 1/q, 1/r)`.
pub fn d1_hull_vertices() -> [[Recip; 3]; 4] {
    [
        [Recip::int(0), Recip::int(0), Recip::int(0)],
        [Recip::int(0), Recip::int(1), Recip::int(1)],
        [Recip::int(1), Recip::int(0), Recip::int(1)],
        [Recip::ratio(3, 5), Recip::ratio(3, 5), Recip::ratio(2, 5)],
    ]
}

fn cross(a: [Recip; 3], b: [Recip; 3]) -> [Recip; 3] {
    [
        a[1].mul(b[2]).sub(a[2].mul(b[1])),
        a[2].mul(b[0]).sub(a[0].mul(b[2])),
        a[0].mul(b[1]).sub(a[1].mul(b[0])),
    ]
}

fn diff(a: [Recip; 3], b: [Recip; 3]) -> [Recip; 3] {
    [a[0].sub(b[0]), a[1].sub(b[1]), a[2].sub(b[2])]
}

fn dot(a: [Recip; 3], b: [Recip; 3]) -> Recip {
    a[0].mul(b[0]).add(a[1].mul(b[1])).add(a[2].mul(b[2]))
}

/// Strict interior test against the tetrahedron of [`d1_hull_vertices`].
fn in_d1_hull(point: [Recip; 3]) -> bool {
    let v = d1_hull_vertices();
    let faces = [(0, 1, 2, 3), (0, 1, 3, 2), (0, 2, 3, 1), (1, 2, 3, 0)];
    faces.iter().all(|&(a, b, c, opposite)| {
        let normal = cross(diff(v[b], v[a]), diff(v[c], v[a]));
        let offset = dot(normal, v[a]);
        let side = dot(normal, v[opposite]).compare(offset);
        let here = dot(normal, point).compare(offset);
        here == side && here != Ordering::Equal
    })
}

/// Whether `(1/p, 1/q, 1/r)` lies strictly inside the boundedness region.
///
/// For `d ≥ 2` this is `1 < p, q < ∞`, `0 < r < ∞` and
/// `1/r < 1/p + 1/q < m(d, r)`; for `d = 1` it is the open hull of
/// [`d1_hull_vertices`] intersected with `1 < p, q < ∞`.
pub fn in_region(d: usize, t: &ExponentTriple) -> bool {
    let [ip, iq, ir] = t.reciprocals();
    let zero = Recip::int(0);
    let one = Recip::int(1);
    let pq_ok = zero.lt(ip) && ip.lt(one) && zero.lt(iq) && iq.lt(one);
    if !pq_ok || t.r.is_infinite() {
        return false;
    }
    match d {
        0 => false,
        1 => in_d1_hull([ip, iq, ir]),
        _ => {
            let sum = t.pq_sum();
            let m = m_bound(d, t.r).expect("d >= 2");
            ir.lt(sum) && sum.lt(m)
        }
    }
}

/// The three necessary upper bounds for `1/p + 1/q` from the extremizer
/// examples, in the order ball/annulus, annuli/ball, Knapp plates.
pub fn necessary_bounds(d: usize, r: Exponent) -> Result<[Recip; 3]> {
    if d < 2 {
        return Err(LabError::UnsupportedDimension(d));
    }
    let d_i = d as i64;
    let inv_r = r.recip();
    let annuli = Recip::int(1).add(Recip::int(d_i).mul(inv_r));
    let ball = Recip::ratio(2 * d_i - 1, d_i);
    let knapp = Recip::ratio(2 * d_i, d_i + 1).add(inv_r.mul(Recip::ratio(d_i - 1, d_i + 1)));
    Ok([ball, annuli, knapp])
}

/// `1/p + 1/q ≤ min{1 + d/r, (2d-1)/d, 2d/(d+1) + (d-1)/(r(d+1))}`.
pub fn necessity_check(d: usize, t: &ExponentTriple) -> Result<bool> {
    let bounds = necessary_bounds(d, t.r)?;
    let sum = t.pq_sum();
    Ok(bounds.iter().all(|b| sum.le(*b)))
}
