//! Enumeration of rational points `a/q` near the manifold.
//!
//! Work is split by denominator: every `q` is processed independently with a
//! fixed inner order, and the per-`q` partial sums are combined in increasing
//! `q`. Results are therefore bit-identical for any thread count.

use std::collections::HashSet;
use std::time::Instant;

use num_integer::Integer;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::leading_constant;
use crate::manifold::{Component, MongeMap};
use crate::quadrature::{dist_to_int, NeumaierSum};
use crate::weights::WeightTuple;

/// Which `(q, a)` are counted as distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// Every pair `(q, a)`, without coprimality.
    #[default]
    Pairs,
    /// Each rational vector `(a, b)/q` once, after reduction to lowest terms.
    Distinct,
}

/// Proximity notion for the sharp counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distance {
    /// `max_i ‖q F_i(a/q)‖ ≤ δ`.
    #[default]
    Vertical,
    /// Sup-norm distance from `(a, b)/q` to the patch at most `δ/q`, found by a
    /// local grid search around `a/q`. Cross-check only.
    Euclidean,
}

/// Range of denominators for the sharp counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QWindow {
    /// `1 ≤ q ≤ Q`.
    #[default]
    UpTo,
    /// `Q ≤ q < 2Q`.
    Dyadic,
}

/// Where `a/q` must lie for the sharp counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SharpDomain {
    /// `[0, 1]^d`.
    #[default]
    UnitCube,
    /// The closed unit ball.
    UnitBall,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountParams {
    pub delta: f64,
    pub q: u64,
    pub eta: f64,
    pub variant: Variant,
    pub distance: Distance,
    pub window: QWindow,
    pub domain: SharpDomain,
}

impl CountParams {
    pub fn new(delta: f64, q: u64) -> Self {
        CountParams {
            delta,
            q,
            eta: 0.05,
            variant: Variant::Pairs,
            distance: Distance::Vertical,
            window: QWindow::UpTo,
            domain: SharpDomain::UnitCube,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::Parameter("Q must be a positive integer".into()));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Parameter(format!(
                "delta = {} must lie in (0, 1/2)",
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountResult {
    pub value: f64,
    pub params: CountParams,
    /// Heuristic main term; `c_t δ^m Q^{d+1}` for the smooth counter.
    pub predicted_main: f64,
    pub wall_time: f64,
    pub enumerated_pairs: u64,
}

impl CountResult {
    pub fn ratio(&self) -> f64 {
        self.value / self.predicted_main
    }
}

/// A cutoff `W: U_d → [0, 1]` splitting `Ω` into good and sub-level parts.
pub trait Cutoff: Sync {
    fn eval(&self, x: &[f64]) -> f64;

    /// `(δ, Q, η)` the cutoff was built for, if it depends on them.
    fn built_for(&self) -> Option<(f64, u64, f64)> {
        None
    }
}

/// `W ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct ConstCutoff(pub f64);

impl Cutoff for ConstCutoff {
    fn eval(&self, _x: &[f64]) -> f64 {
        self.0
    }
}

/// `q F_i(a/q)` split as nearest integer plus signed residual, evaluated
/// exactly for polynomial components.
pub(crate) struct Residuals {
    exact: Vec<bool>,
}

impl Residuals {
    pub(crate) fn new(m: &MongeMap) -> Self {
        Residuals {
            exact: m
                .components()
                .iter()
                .map(|c| matches!(c, Component::Poly(_)))
                .collect(),
        }
    }

    /// Fills `near` and `res` for component values at `x = a/q`.
    #[inline]
    pub(crate) fn compute(
        &self,
        m: &MongeMap,
        q: i64,
        a: &[i64],
        x: &[f64],
        near: &mut [i128],
        res: &mut [f64],
    ) {
        for (k, comp) in m.components().iter().enumerate() {
            let exact = if self.exact[k] {
                comp.as_poly().and_then(|p| p.scaled_residual(q, a))
            } else {
                None
            };
            let (n, r) = exact.unwrap_or_else(|| {
                let v = q as f64 * comp.eval(x);
                let n = v.round();
                (n as i128, v - n)
            });
            near[k] = n;
            res[k] = r;
        }
    }
}

/// Calls `f(a)` for every `a ∈ Z^d` with `a_i ∈ [lo_i, hi_i]`, in lexicographic order.
pub(crate) fn for_each_in_box(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    let d = lo.len();
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return;
    }
    let mut a = lo.to_vec();
    loop {
        f(&a);
        let mut i = d;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if a[i] < hi[i] {
                a[i] += 1;
                break;
            }
            a[i] = lo[i];
        }
    }
}

/// Integer points `a` with `‖a/q‖₂ < radius` (or `≤` when `closed`).
pub(crate) fn for_each_in_ball(
    d: usize,
    q: i64,
    radius: f64,
    closed: bool,
    mut f: impl FnMut(&[i64], &[f64]),
) {
    let bound = (radius * q as f64).floor() as i64;
    let lo = vec![-bound; d];
    let hi = vec![bound; d];
    let lim = radius * radius;
    let mut x = vec![0.0; d];
    for_each_in_box(&lo, &hi, |a| {
        let mut r2 = 0.0;
        for (xi, &ai) in x.iter_mut().zip(a) {
            *xi = ai as f64 / q as f64;
            r2 += *xi * *xi;
        }
        let inside = if closed {
            r2 <= lim * (1.0 + 1e-12)
        } else {
            r2 < lim
        };
        if inside {
            f(a, &x);
        }
    });
}

fn q_range(p: &CountParams) -> (u64, u64) {
    match p.window {
        QWindow::UpTo => (1, p.q),
        QWindow::Dyadic => (p.q, 2 * p.q - 1),
    }
}

/// `N_M(δ, Q)`: number of `(q, a)` with `a/q` in the domain and `q F(a/q)`
/// within `δ` of an integer vector.
pub fn sharp_count(m: &MongeMap, p: &CountParams) -> Result<CountResult> {
    p.validate()?;
    let start = Instant::now();
    let d = m.d();
    let (q_lo, q_hi) = q_range(p);
    let res = Residuals::new(m);

    let per_q = |q: u64| -> (u64, u64, Vec<Vec<i64>>) {
        let q = q as i64;
        let mut hits = 0u64;
        let mut seen = 0u64;
        let mut reps = Vec::new();
        let mut near = vec![0i128; m.m()];
        let mut r = vec![0.0; m.m()];
        let mut visit = |a: &[i64], x: &[f64]| {
            seen += 1;
            res.compute(m, q, a, x, &mut near, &mut r);
            let close = match p.distance {
                Distance::Vertical => r.iter().all(|v| v.abs() <= p.delta),
                Distance::Euclidean => euclidean_close(m, q, x, &near, p.delta),
            };
            if close {
                hits += 1;
                if p.variant == Variant::Distinct {
                    reps.push(reduce_rational(q, a, &near));
                }
            }
        };
        match p.domain {
            SharpDomain::UnitCube => {
                let mut x = vec![0.0; d];
                for_each_in_box(&vec![0; d], &vec![q; d], |a| {
                    for (xi, &ai) in x.iter_mut().zip(a) {
                        *xi = ai as f64 / q as f64;
                    }
                    visit(a, &x);
                });
            }
            SharpDomain::UnitBall => for_each_in_ball(d, q, 1.0, true, &mut visit),
        }
        (hits, seen, reps)
    };
    let parts: Vec<(u64, u64, Vec<Vec<i64>>)> = (q_lo..=q_hi).into_par_iter().map(per_q).collect();

    let enumerated: u64 = parts.iter().map(|t| t.1).sum();
    let value = match p.variant {
        Variant::Pairs => parts.iter().map(|t| t.0).sum::<u64>(),
        Variant::Distinct => {
            let mut set = HashSet::new();
            for (_, _, reps) in parts {
                set.extend(reps);
            }
            set.len() as u64
        }
    };
    let vol = match p.domain {
        SharpDomain::UnitCube => 1.0,
        SharpDomain::UnitBall => unit_ball_volume(d),
    };
    let (a, b) = (q_lo as f64 - 1.0, q_hi as f64);
    let q_moment = (b.powi(d as i32 + 1) - a.powi(d as i32 + 1)) / (d as f64 + 1.0);
    Ok(CountResult {
        value: value as f64,
        params: *p,
        predicted_main: vol * (2.0 * p.delta).powi(m.m() as i32) * q_moment,
        wall_time: start.elapsed().as_secs_f64(),
        enumerated_pairs: enumerated,
    })
}

fn reduce_rational(q: i64, a: &[i64], near: &[i128]) -> Vec<i64> {
    let mut g = q;
    for &v in a {
        g = g.gcd(&v);
    }
    for &v in near {
        g = g.gcd(&(v as i64));
    }
    let g = g.max(1);
    let mut out = Vec::with_capacity(1 + a.len() + near.len());
    out.push(q / g);
    out.extend(a.iter().map(|v| v / g));
    out.extend(near.iter().map(|&v| v as i64 / g));
    out
}

/// Whether some `x` with `‖x - a/q‖_∞ ≤ δ/q` and some integer vector `b` within
/// one of the nearest one satisfy `max_i |q F_i(x) - b_i| ≤ δ`.
fn euclidean_close(m: &MongeMap, q: i64, center: &[f64], near: &[i128], delta: f64) -> bool {
    let d = m.d();
    let steps: i64 = if d == 1 { 32 } else { 8 };
    let h = delta / q as f64;
    let mut x = vec![0.0; d];
    let lo = vec![-steps; d];
    let hi = vec![steps; d];
    let mut found = false;
    for_each_in_box(&lo, &hi, |k| {
        if found {
            return;
        }
        for i in 0..d {
            x[i] = center[i] + h * k[i] as f64 / steps as f64;
        }
        if x.iter().map(|v| v * v).sum::<f64>() > 1.0 + 1e-12 {
            return;
        }
        found = m.components().iter().enumerate().all(|(c, comp)| {
            let v = q as f64 * comp.eval(&x);
            (-1..=1).any(|s| (v - (near[c] + s) as f64).abs() <= delta)
        });
    });
    found
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    crate::weights::sphere_area(d) / d as f64
}

/// Weighted sum `Σ A(a/q) ω(q/Q) Π_i w(‖qF_i(a/q)‖/δ)` with amplitudes `A_k`
/// evaluated together; returns one total per amplitude.
fn weighted_sums<const K: usize>(
    m: &MongeMap,
    t: &WeightTuple,
    p: &CountParams,
    amplitude: impl Fn(&[f64]) -> [f64; K] + Sync,
) -> Result<([f64; K], u64)> {
    p.validate()?;
    if t.d() != m.d() {
        return Err(Error::Parameter(format!(
            "weight tuple is for d = {}, manifold has d = {}",
            t.d(),
            m.d()
        )));
    }
    let qf = p.q as f64;
    let (ylo, yhi) = t.omega_support();
    let q_lo = ((ylo * qf).ceil() as u64).max(1);
    let q_hi = (yhi * qf).floor() as u64;
    let res = Residuals::new(m);
    let radius = t.big_omega_radius();
    let per_q = |q: u64| -> ([NeumaierSum; K], u64) {
        let wq = t.omega(q as f64 / qf);
        let mut acc = [NeumaierSum::default(); K];
        let mut seen = 0u64;
        if wq == 0.0 {
            return (acc, 0);
        }
        let mut near = vec![0i128; m.m()];
        let mut r = vec![0.0; m.m()];
        for_each_in_ball(m.d(), q as i64, radius, false, |a, x| {
            seen += 1;
            let big = t.big_omega(x);
            if big == 0.0 {
                return;
            }
            res.compute(m, q as i64, a, x, &mut near, &mut r);
            let mut prod = wq * big;
            for v in &r {
                prod *= t.w(v.abs() / p.delta);
                if prod == 0.0 {
                    return;
                }
            }
            let amps = amplitude(x);
            for k in 0..K {
                acc[k].add(prod * amps[k]);
            }
        });
        (acc, seen)
    };
    let parts: Vec<([NeumaierSum; K], u64)> = if q_lo > q_hi {
        Vec::new()
    } else {
        (q_lo..=q_hi).into_par_iter().map(per_q).collect()
    };
    let mut total = [NeumaierSum::default(); K];
    let mut seen = 0;
    for (acc, s) in parts {
        seen += s;
        for k in 0..K {
            total[k].merge(acc[k]);
        }
    }
    Ok((total.map(|s| s.value()), seen))
}

/// Smooth counter `Σ Ω(a/q) ω(q/Q) Π_i w(‖q F_i(a/q)‖/δ)`.
pub fn smooth_count(m: &MongeMap, t: &WeightTuple, p: &CountParams) -> Result<CountResult> {
    let start = Instant::now();
    let ([value], seen) = weighted_sums(m, t, p, |_| [1.0])?;
    Ok(CountResult {
        value,
        params: *p,
        predicted_main: predicted_main(m, t, p),
        wall_time: start.elapsed().as_secs_f64(),
        enumerated_pairs: seen,
    })
}

/// `c_t δ^m Q^{d+1}`.
pub fn predicted_main(m: &MongeMap, t: &WeightTuple, p: &CountParams) -> f64 {
    leading_constant(m, t) * p.delta.powi(m.m() as i32) * (p.q as f64).powi(m.d() as i32 + 1)
}

/// Good and sub-level parts of the smooth counter, with `Ω_sub = Ω W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCount {
    pub good: f64,
    pub sub: f64,
}

pub fn split_count(
    m: &MongeMap,
    t: &WeightTuple,
    p: &CountParams,
    cutoff: &dyn Cutoff,
) -> Result<SplitCount> {
    check_cutoff(cutoff, p)?;
    let ([good, sub], _) = weighted_sums(m, t, p, |x| {
        let w = cutoff.eval(x);
        [1.0 - w, w]
    })?;
    Ok(SplitCount { good, sub })
}

pub(crate) fn check_cutoff(cutoff: &dyn Cutoff, p: &CountParams) -> Result<()> {
    if let Some((delta, q, eta)) = cutoff.built_for() {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        // the cutoff only depends on η through min(η, 1/8)
        if !same(delta, p.delta) || q != p.q || !same(eta.min(0.125), p.eta.min(0.125)) {
            return Err(Error::Parameter(format!(
                "cutoff built for (delta, Q, eta) = ({delta}, {q}, {eta}), \
                 used with ({}, {}, {})",
                p.delta, p.q, p.eta
            )));
        }
    }
    Ok(())
}

/// Number of `a ∈ Z^d` with `a/q` in the closed ball `B(center, r)`.
pub fn rationals_in_ball(q: u64, center: &[f64], r: f64) -> u64 {
    let qf = q as f64;
    let lo: Vec<i64> = center.iter().map(|c| ((c - r) * qf).ceil() as i64).collect();
    let hi: Vec<i64> = center.iter().map(|c| ((c + r) * qf).floor() as i64).collect();
    let mut n = 0;
    for_each_in_box(&lo, &hi, |a| {
        let d2: f64 = a
            .iter()
            .zip(center)
            .map(|(&ai, c)| (ai as f64 / qf - c).powi(2))
            .sum();
        if d2 <= r * r {
            n += 1;
        }
    });
    n
}

/// `max_i ‖q F_i(x)‖` for a single point, as a reference for tests.
pub fn vertical_distance(m: &MongeMap, q: u64, x: &[f64]) -> f64 {
    m.components()
        .iter()
        .map(|c| dist_to_int(q as f64 * c.eval(x)))
        .fold(0.0, f64::max)
}
