//! Periodic one-dimensional fields, Littlewood–Paley projections and the
//! circle average `A_1` used by the `d = 1` experiments.
//!
//! Frequencies are in cycles per unit length: bin `m` of an `n`-sample
//! field of period `L` has frequency `m / L` for `m < n/2` and
//! `(m - n) / L` above.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};
use crate::fields::{pairwise_sum_by, GridFunction, GridSpec};
use crate::fit::{fit_power_law, ScalingFit};
use crate::region::ExponentTriple;

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField {
    /// Left end of the period window.
    pub lo: f64,
    pub period: f64,
    pub values: Vec<Complex64>,
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

impl PeriodicField {
    pub fn new(lo: f64, period: f64, values: Vec<Complex64>) -> Result<Self> {
        let n = values.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(LabError::Shape(format!("sample count must be a power of two, got {n}")));
        }
        if !(period > 0.0) || !period.is_finite() || !lo.is_finite() {
            return Err(LabError::Domain(format!("bad period window [{lo}, {lo}+{period})")));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(LabError::Domain("non-finite sample".into()));
        }
        Ok(PeriodicField { lo, period, values })
    }

    pub fn from_real(lo: f64, period: f64, values: &[f64]) -> Result<Self> {
        Self::new(lo, period, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f(lo + i L / n)`.
    pub fn from_fn(lo: f64, period: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = period / n as f64;
        let vals: Vec<f64> = (0..n).map(|i| f(lo + i as f64 * h)).collect();
        Self::from_real(lo, period, &vals)
    }

    /// A one-dimensional grid function read as one period.
    pub fn from_grid(f: &GridFunction) -> Result<Self> {
        let spec = f.spec();
        if spec.d != 1 {
            return Err(LabError::UnsupportedDimension(spec.d));
        }
        Self::from_real(spec.lo[0], spec.hi[0] - spec.lo[0], f.values())
    }

    pub fn to_grid(&self) -> Result<GridFunction> {
        let spec = GridSpec::new(1, &[self.lo], &[self.lo + self.period], self.len())?;
        GridFunction::new(spec, self.real())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.len() as f64
    }

    /// Highest resolved frequency `n / (2L)`.
    pub fn nyquist(&self) -> f64 {
        self.len() as f64 / (2.0 * self.period)
    }

    pub fn frequency(&self, m: usize) -> f64 {
        let n = self.len();
        let m = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
        m / self.period
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Unnormalized DFT `F_m = Σ_j f_j e^{-2πi jm/n}`.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        plans(self.len()).0.process(&mut buf);
        buf
    }

    pub fn from_spectrum(lo: f64, period: f64, mut spec: Vec<Complex64>) -> Result<Self> {
        let n = spec.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(LabError::Shape(format!("sample count must be a power of two, got {n}")));
        }
        plans(n).1.process(&mut spec);
        let scale = 1.0 / n as f64;
        spec.iter_mut().for_each(|v| *v *= scale);
        Self::new(lo, period, spec)
    }

    /// `∫ |f|^2` over one period.
    pub fn energy(&self) -> f64 {
        pairwise_sum_by(self.len(), &|i| self.values[i].norm_sqr()) * self.spacing()
    }

    /// `∫ |f|^2` computed from the spectrum.
    pub fn spectral_energy(&self) -> f64 {
        let s = self.spectrum();
        pairwise_sum_by(s.len(), &|i| s[i].norm_sqr()) * self.spacing() / self.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Multiplies the spectrum by `m(ξ)`.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> f64 + Sync) -> Self {
        let mut spec = self.spectrum();
        spec.par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v *= m(self.frequency(i)));
        Self::from_spectrum(self.lo, self.period, spec).expect("shape is preserved")
    }

    pub fn scale(&self, c: f64) -> Self {
        PeriodicField {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// `x ↦ f(x - shift)`; the shift must be a whole number of samples.
    pub fn translate(&self, shift: f64) -> Result<Self> {
        let u = shift / self.spacing();
        if (u - u.round()).abs() > 1e-9 {
            return Err(LabError::Domain(format!(
                "shift {shift} is not a multiple of the spacing {}",
                self.spacing()
            )));
        }
        let n = self.len() as i64;
        let s = u.round() as i64;
        let values = (0..n)
            .map(|i| self.values[(i - s).rem_euclid(n) as usize])
            .collect();
        Ok(PeriodicField {
            values,
            ..self.clone()
        })
    }

    /// Real part at `x`, linearly interpolated with wrap-around.
    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        let n = self.len();
        let u = ((x - self.lo) / self.spacing()).rem_euclid(n as f64);
        let i = u.floor();
        let w = u - i;
        let i = (i as usize) % n;
        let j = (i + 1) % n;
        self.values[i].re * (1.0 - w) + self.values[j].re * w
    }
}

/// `ψ`: `1` on `|ξ| <= 1`, `0` on `|ξ| >= 2`, and a smooth decreasing step
/// in between built from `e^{-1/x}`, with `ψ(±1.5) = 1/2`.
pub fn bump_psi(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 {
        return 1.0;
    }
    if a >= 2.0 {
        return 0.0;
    }
    let e = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let s = a - 1.0;
    e(1.0 - s) / (e(s) + e(1.0 - s))
}

/// `φ_k(ξ) = ψ(2^{-k} ξ) - ψ(2^{1-k} ξ)`, supported on
/// `2^{k-1} <= |ξ| <= 2^{k+1}`.
pub fn lp_multiplier(k: i32, xi: f64) -> f64 {
    bump_psi(xi * 2f64.powi(-k)) - bump_psi(xi * 2f64.powi(1 - k))
}

fn check_band(f: &PeriodicField, k: i32) -> Result<()> {
    let top = 2f64.powi(k + 1);
    if top >= f.nyquist() {
        return Err(LabError::Aliasing {
            k,
            nyquist: f.nyquist(),
        });
    }
    Ok(())
}

/// `Q_k f`.
pub fn lp_project(f: &PeriodicField, k: i32) -> Result<PeriodicField> {
    check_band(f, k)?;
    Ok(f.apply_multiplier(|xi| lp_multiplier(k, xi)))
}

/// `P_k f = Σ_{i <= k} Q_i f`, the multiplier `ψ(2^{-k} ξ)`.
pub fn lp_low_pass(f: &PeriodicField, k: i32) -> Result<PeriodicField> {
    check_band(f, k)?;
    Ok(f.apply_multiplier(|xi| bump_psi(xi * 2f64.powi(-k))))
}

/// Trapezoid nodes on the circle and the sample points for the average.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleRule {
    /// Angles `2πj / nodes`.
    pub nodes: usize,
    /// Evaluate at every `stride`-th sample.
    pub stride: usize,
}

impl Default for CircleRule {
    fn default() -> Self {
        CircleRule {
            nodes: 4096,
            stride: 8,
        }
    }
}

/// `A_t(f, g)(x) = (2π)^{-1} ∫_0^{2π} f(x - t cos θ) g(x - t sin θ) dθ` at
/// the samples `lo + i·stride·h`, using real parts and periodic lookups.
pub fn circle_average(
    f: &PeriodicField,
    g: &PeriodicField,
    t: f64,
    rule: &CircleRule,
) -> Result<Vec<f64>> {
    if f.len() != g.len() || f.lo != g.lo || f.period != g.period {
        return Err(LabError::Shape("fields live on different periodic grids".into()));
    }
    if rule.nodes < 4 || rule.stride == 0 || f.len() % rule.stride != 0 {
        return Err(LabError::Domain(format!("bad circle rule {rule:?}")));
    }
    let trig: Vec<(f64, f64)> = (0..rule.nodes)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / rule.nodes as f64;
            (t * th.cos(), t * th.sin())
        })
        .collect();
    let h = f.spacing() * rule.stride as f64;
    let m = f.len() / rule.stride;
    Ok((0..m)
        .into_par_iter()
        .map(|i| {
            let x = f.lo + i as f64 * h;
            pairwise_sum_by(trig.len(), &|j| f.at(x - trig[j].0) * g.at(x - trig[j].1))
                / rule.nodes as f64
        })
        .collect())
}

fn lr_of_samples(vals: &[f64], cell: f64, r: f64) -> f64 {
    if r.is_infinite() {
        return vals.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    (pairwise_sum_by(vals.len(), &|i| vals[i].abs().powf(r)) * cell).powf(1.0 / r)
}

/// What is applied to `f_1` before averaging.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpOperator {
    Projection,
    /// Control run: `f_1` itself at every `k`.
    Identity,
}

/// `(k, ‖A_1(Q_k f_1, f_2)‖_{L^1})` for each `k` that the grid resolves.
/// Unresolved `k` are skipped with a warning.
pub fn lp_decay_values(
    f1: &PeriodicField,
    f2: &PeriodicField,
    ks: &[i32],
    op: LpOperator,
    rule: &CircleRule,
) -> Result<Vec<(i32, f64)>> {
    let mut out = Vec::new();
    for &k in ks {
        let piece = match op {
            LpOperator::Projection => match lp_project(f1, k) {
                Ok(p) => p,
                Err(e @ LabError::Aliasing { .. }) => {
                    log::warn!("skipping k = {k}: {e}");
                    continue;
                }
                Err(e) => return Err(e),
            },
            LpOperator::Identity => {
                check_band(f1, k)?;
                f1.clone()
            }
        };
        let avg = circle_average(&piece, f2, 1.0, rule)?;
        out.push((k, lr_of_samples(&avg, f1.spacing() * rule.stride as f64, 1.0)));
    }
    Ok(out)
}

/// Fits `log_2 ‖A_1(Q_k f_1, f_2)‖_1` against `k`. The slope is the
/// negative of the decay exponent.
pub fn lp_decay_experiment(
    f1: &PeriodicField,
    f2: &PeriodicField,
    ks: &[i32],
    op: LpOperator,
    rule: &CircleRule,
) -> Result<(Vec<(i32, f64)>, ScalingFit)> {
    let vals = lp_decay_values(f1, f2, ks, op, rule)?;
    let samples: Vec<(f64, f64)> = vals.iter().map(|&(k, v)| (2f64.powi(k), v)).collect();
    Ok((vals, fit_power_law(&samples)?))
}

/// `‖A_1(f_1 - τ_h f_1, f_2)‖_{L^r}` for each `h`, on the periodic
/// extension of the grid box, and the fitted exponent in `h`.
pub fn continuity_d1_experiment(
    f1: &GridFunction,
    f2: &GridFunction,
    hs: &[f64],
    t: &ExponentTriple,
    rule: &CircleRule,
) -> Result<(Vec<(f64, f64)>, ScalingFit)> {
    f1.check_same(f2)?;
    let a = PeriodicField::from_grid(f1)?;
    let b = PeriodicField::from_grid(f2)?;
    let r = t.r.to_f64();
    let mut rows = Vec::new();
    for &h in hs {
        if !(h > 0.0 && h < 1.0) {
            return Err(LabError::Domain(format!("translation must lie in (0, 1), got {h}")));
        }
        let diff = PeriodicField {
            values: a
                .values
                .iter()
                .zip(&a.translate(h)?.values)
                .map(|(u, v)| u - v)
                .collect(),
            ..a.clone()
        };
        let avg = circle_average(&diff, &b, 1.0, rule)?;
        rows.push((h, lr_of_samples(&avg, a.spacing() * rule.stride as f64, r)));
    }
    let fit = fit_power_law(&rows)?;
    Ok((rows, fit))
}
