//! Fourier side of the smooth counter: truncated Poisson expansion of `w`,
//! main term and direct error term, oscillatory integrals and the truncated
//! error term.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::counting::{check_cutoff, for_each_in_ball, CountParams, Cutoff, Residuals};
use crate::error::{Error, Result};
use crate::manifold::MongeMap;
use crate::quadrature::{e, ComplexSum, NeumaierSum};
use crate::weights::WeightTuple;

/// Frequencies `|ξ|` beyond this contribute below `1e-14` to any tail for
/// the template bump and are not summed.
const XI_MAX: f64 = 120.0;

/// Default work budget for the direct error term, in units of `J (2J+1)^m`.
pub const DEFAULT_DIRECT_BUDGET: u128 = 1_000_000_000;

/// Default budget for quadrature grids, in integrand evaluations.
pub const DEFAULT_GRID_BUDGET: u128 = 400_000_000;

const OSC_TOL: f64 = 1e-8;

/// Nodes added to every trapezoid grid on top of the oscillation count; the
/// aliasing error of the bump amplitudes is then far below `1e-14`.
const MIN_NODES: usize = 256;

/// `c_t = (∫Ω)(∫ y^d ω(y) dy)(∫w)^m`.
pub fn leading_constant(m: &MongeMap, t: &WeightTuple) -> f64 {
    t.integral_big_omega() * t.integral_y_pow_d_omega() * t.integral_w().powi(m.m() as i32)
}

/// `J = ⌊Q^η / δ⌋`.
pub fn cutoff_j(q: u64, eta: f64, delta: f64) -> u64 {
    ((q as f64).powf(eta) / delta).floor() as u64
}

/// `2 max(1, sup_x Σ_i ‖∇F_i(x)‖_∞)` over a grid of the unit ball.
pub fn c_f(m: &MongeMap) -> f64 {
    let per_axis = (20_000f64.powf(1.0 / m.d() as f64).ceil() as usize).clamp(9, 401);
    2.0 * m.gradient_sup_on_grid(per_axis).max(1.0)
}

/// `ŵ(δ j)` for `j = 0..=J`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub delta: f64,
    pub values: Vec<f64>,
}

impl CoefficientTable {
    pub fn new(t: &WeightTuple, delta: f64, j_max: u64) -> Result<Self> {
        let values = (0..=j_max)
            .map(|j| t.w_hat(delta * j as f64))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoefficientTable { delta, values })
    }

    pub fn j_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `B(δ j) = Π_i ŵ(δ j_i)`.
    pub fn b(&self, j: &[i64]) -> f64 {
        j.iter()
            .map(|&ji| self.values[ji.unsigned_abs() as usize])
            .product()
    }

    /// `S(θ) = Σ_{|j| ≤ J} ŵ(δ j) e(j θ)`, real by evenness.
    #[inline]
    pub fn series(&self, theta: f64) -> f64 {
        let mut acc = self.values[0];
        let (s1, c1) = (2.0 * std::f64::consts::PI * theta).sin_cos();
        let rot = Complex64::new(c1, s1);
        let mut z = rot;
        for (j, w) in self.values.iter().enumerate().skip(1) {
            if j % 64 == 0 {
                z = e(j as f64 * theta);
            }
            acc += 2.0 * w * z.re;
            z *= rot;
        }
        acc
    }
}

/// `δ ŵ(0) + δ Σ_{1 ≤ |j| ≤ J} ŵ(δ j) e(j x)`, summed term by term so the
/// imaginary part is observable.
pub fn truncated_expansion_complex(t: &WeightTuple, delta: f64, x: f64, j_max: u64) -> Result<Complex64> {
    check_delta(delta)?;
    let mut acc = ComplexSum::default();
    acc.add(Complex64::new(t.w_hat(0.0)?, 0.0));
    for j in 1..=j_max as i64 {
        for s in [j, -j] {
            let c = t.fourier_transform(crate::weights::WeightFn::W, delta * s as f64)?;
            acc.add(c * e(s as f64 * x));
        }
    }
    Ok(acc.value() * delta)
}

/// Real part of [`truncated_expansion_complex`], which approximates `w(‖x‖/δ)`.
pub fn truncated_expansion(t: &WeightTuple, delta: f64, x: f64, j_max: u64) -> Result<f64> {
    check_delta(delta)?;
    let table = CoefficientTable::new(t, delta, j_max)?;
    Ok(delta * table.series(x))
}

/// `δ Σ_{|j| > J} |ŵ(δ j)|`, a bound for `|w(‖x‖/δ) - expansion|`.
pub fn poisson_tail(t: &WeightTuple, delta: f64, j_max: u64) -> Result<f64> {
    let mut acc = NeumaierSum::default();
    let mut j = j_max + 1;
    while delta * j as f64 <= XI_MAX {
        acc.add(t.w_hat(delta * j as f64)?.abs());
        j += 1;
    }
    Ok(2.0 * delta * acc.value())
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.5 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("delta = {delta} must lie in (0, 1/2)")))
    }
}

/// Result of splitting `N^{Ω_good}` into main term and error term.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Decomposition {
    /// `N^{Ω_good}(δ, Q)` by direct enumeration.
    pub good: f64,
    pub main: f64,
    pub error_direct: f64,
    /// Bound on `|N^{Ω_good} - M - E|` from the coefficient tail beyond `J`.
    pub truncation_bound: f64,
    pub j_cut: u64,
    pub identity_residual: f64,
}

impl Decomposition {
    /// Whether the truncation budget is below `1e-6 |M|`.
    pub fn accepted(&self) -> bool {
        self.truncation_bound < 1e-6 * self.main.abs()
    }
}

/// One pass over `(q, a)` accumulating `N^{Ω_good}`, `M` and `E`.
pub fn decompose(
    m: &MongeMap,
    t: &WeightTuple,
    p: &CountParams,
    cutoff: &dyn Cutoff,
    budget: u128,
) -> Result<Decomposition> {
    p.validate()?;
    check_cutoff(cutoff, p)?;
    let j_cut = cutoff_j(p.q, p.eta, p.delta);
    let work = (j_cut as u128).saturating_mul((2 * j_cut as u128 + 1).saturating_pow(m.m() as u32));
    if work > budget {
        return Err(Error::Resource {
            what: format!("direct error term with J = {j_cut}"),
            required: work,
            budget,
        });
    }
    let table = CoefficientTable::new(t, p.delta, j_cut)?;
    let w0 = table.values[0];
    let delta = p.delta;
    let mm = m.m() as i32;
    let qf = p.q as f64;
    let (ylo, yhi) = t.omega_support();
    let q_lo = ((ylo * qf).ceil() as u64).max(1);
    let q_hi = (yhi * qf).floor() as u64;
    let res = Residuals::new(m);

    let per_q = |q: u64| -> [NeumaierSum; 3] {
        let mut acc = [NeumaierSum::default(); 3];
        let wq = t.omega(q as f64 / qf);
        if wq == 0.0 {
            return acc;
        }
        let mut near = vec![0i128; m.m()];
        let mut r = vec![0.0; m.m()];
        for_each_in_ball(m.d(), q as i64, t.big_omega_radius(), false, |a, x| {
            let amp = t.big_omega(x) * (1.0 - cutoff.eval(x)) * wq;
            if amp == 0.0 {
                return;
            }
            res.compute(m, q as i64, a, x, &mut near, &mut r);
            let mut smooth = 1.0;
            let mut expansion = 1.0;
            for v in &r {
                smooth *= t.w(v.abs() / delta);
                expansion *= delta * table.series(*v);
            }
            acc[0].add(amp * smooth);
            acc[1].add(amp);
            acc[2].add(amp * (expansion - (delta * w0).powi(mm)));
        });
        acc
    };
    let parts: Vec<[NeumaierSum; 3]> = if q_lo > q_hi {
        Vec::new()
    } else {
        (q_lo..=q_hi).into_par_iter().map(per_q).collect()
    };
    let mut tot = [NeumaierSum::default(); 3];
    for part in parts {
        for k in 0..3 {
            tot[k].merge(part[k]);
        }
    }
    let good = tot[0].value();
    let amp_sum = tot[1].value();
    let main = (delta * w0).powi(mm) * amp_sum;
    let error_direct = tot[2].value();
    let tail = poisson_tail(t, delta, j_cut)?;
    let truncation_bound = ((1.0 + tail).powi(mm) - 1.0) * amp_sum;
    Ok(Decomposition {
        good,
        main,
        error_direct,
        truncation_bound,
        j_cut,
        identity_residual: good - main - error_direct,
    })
}

/// Main term with its closed-form approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainTerm {
    /// `δ^m ŵ(0)^m Σ Ω_good(a/q) ω(q/Q)`.
    pub value: f64,
    /// `c_t δ^m Q^{d+1}`.
    pub closed_form: f64,
    /// `∫ Ω W / ∫ Ω`, the size of the removed sub-level part.
    pub sub_fraction: f64,
}

pub fn main_term(m: &MongeMap, t: &WeightTuple, p: &CountParams, cutoff: &dyn Cutoff) -> Result<MainTerm> {
    let dec = decompose(m, t, p, cutoff, u128::MAX)?;
    Ok(MainTerm {
        value: dec.main,
        closed_form: leading_constant(m, t)
            * p.delta.powi(m.m() as i32)
            * (p.q as f64).powi(m.d() as i32 + 1),
        sub_fraction: omega_weighted_fraction(t, cutoff),
    })
}

/// `E(δ, Q)` by direct enumeration, subject to the `J (2J+1)^m` work budget.
pub fn error_term_direct(
    m: &MongeMap,
    t: &WeightTuple,
    p: &CountParams,
    cutoff: &dyn Cutoff,
    budget: u128,
) -> Result<f64> {
    Ok(decompose(m, t, p, cutoff, budget)?.error_direct)
}

/// `∫ Ω W / ∫ Ω` on a uniform grid.
pub fn omega_weighted_fraction(t: &WeightTuple, cutoff: &dyn Cutoff) -> f64 {
    let d = t.d();
    let per_axis = (40_000f64.powf(1.0 / d as f64).ceil() as i64).max(8);
    let rho = t.big_omega_radius();
    let h = 2.0 * rho / per_axis as f64;
    let mut num = NeumaierSum::default();
    let mut den = NeumaierSum::default();
    let mut x = vec![0.0; d];
    crate::counting::for_each_in_box(&vec![0; d], &vec![per_axis; d], |k| {
        for i in 0..d {
            x[i] = -rho + h * k[i] as f64;
        }
        let o = t.big_omega(&x);
        if o > 0.0 {
            num.add(o * cutoff.eval(&x));
            den.add(o);
        }
    });
    if den.value() == 0.0 {
        0.0
    } else {
        num.value() / den.value()
    }
}

/// `I(j, v', c)` together with the difference between the last two refinements.
#[derive(Debug, Clone, PartialEq)]
pub struct OscIntegral {
    pub j: Vec<i64>,
    pub v_prime: Vec<i64>,
    pub c: i64,
    pub value: Complex64,
    pub quadrature_error: f64,
}

/// Uniform grid on `[lo, hi]` with `n` intervals, endpoints included.
fn uniform(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    let h = (hi - lo) / n as f64;
    ((0..=n).map(|k| lo + h * k as f64).collect(), h)
}

/// Tensor grid over the support of `Ω` with per-axis spacing `h`; returns the
/// points where `Ω_good = Ω (1 - W)` is nonzero and its values there.
fn omega_good_grid(t: &WeightTuple, cutoff: &dyn Cutoff, per_axis: usize) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let d = t.d();
    let rho = t.big_omega_radius();
    let (axis, h) = uniform(-rho, rho, per_axis);
    let mut pts = Vec::new();
    let mut amps = Vec::new();
    crate::counting::for_each_in_box(&vec![0; d], &vec![per_axis as i64; d], |k| {
        let x: Vec<f64> = k.iter().map(|&i| axis[i as usize]).collect();
        let a = t.big_omega(&x) * (1.0 - cutoff.eval(&x));
        if a != 0.0 {
            pts.push(x);
            amps.push(a);
        }
    });
    (pts, amps, h.powi(d as i32))
}

/// `Σ_k g_k e(y_k θ)` for an arithmetic progression `y_k = y_0 + k h`.
#[inline]
fn rotated_sum(g: &[f64], y0: f64, h: f64, theta: f64) -> Complex64 {
    let rot = e(h * theta);
    let mut z = e(y0 * theta);
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, gk) in g.iter().enumerate() {
        if k % 256 == 0 {
            z = e((y0 + h * k as f64) * theta);
        }
        acc += z * *gk;
        z *= rot;
    }
    acc
}

fn check_grid(what: &str, required: u128, budget: u128) -> Result<()> {
    if required > budget {
        Err(Error::Resource {
            what: what.to_string(),
            required,
            budget,
        })
    } else {
        Ok(())
    }
}

/// `I(j, v', c) = ∫∫ y^d e(Q y [⟨F(x), j⟩ - ⟨x, v'⟩ - c]) Ω_good(x) ω(y) dx dy`.
///
/// Both variables use the trapezoid rule on uniform grids, which is spectrally
/// accurate for compactly supported smooth integrands; the grid is refined from
/// 10 to 20 (and further) nodes per oscillation period until two successive
/// values agree to `1e-8`.
#[allow(clippy::too_many_arguments)]
pub fn osc_integral(
    m: &MongeMap,
    t: &WeightTuple,
    j: &[i64],
    v_prime: &[i64],
    c: i64,
    q: u64,
    cutoff: &dyn Cutoff,
    budget: u128,
) -> Result<OscIntegral> {
    if j.len() != m.m() || v_prime.len() != m.d() {
        return Err(Error::Parameter(
            "j must have m entries and v' must have d entries".into(),
        ));
    }
    let d = m.d();
    let qf = q as f64;
    let rho = t.big_omega_radius();
    let (ylo, yhi) = t.omega_support();
    let jsum: f64 = j.iter().map(|v| v.abs() as f64).sum();
    let v1: f64 = v_prime.iter().map(|v| v.abs() as f64).sum();
    let grad_bound = v1 + jsum * c_f(m) / 2.0;
    let phase_bound = jsum * component_sup(m, rho) + rho * v1 + c.abs() as f64;
    let cycles_x = qf * yhi * grad_bound * 2.0 * rho;
    let cycles_y = qf * phase_bound * (yhi - ylo);

    let eval = |ppp: f64| -> Result<Complex64> {
        let nx = (ppp * cycles_x).ceil() as usize + MIN_NODES;
        let ny = (ppp * cycles_y).ceil() as usize + MIN_NODES;
        check_grid(
            "oscillatory integral grid",
            (nx as u128 + 1).pow(d as u32) * (ny as u128 + 1),
            budget,
        )?;
        let (pts, amps, hx) = omega_good_grid(t, cutoff, nx);
        let (ys, hy) = uniform(ylo, yhi, ny);
        let g: Vec<f64> = ys.iter().map(|&y| y.powi(d as i32) * t.omega(y) * hy).collect();
        let parts: Vec<Complex64> = pts
            .par_iter()
            .zip(amps.par_iter())
            .map(|(x, a)| {
                let mut psi = -(c as f64);
                for (k, jk) in j.iter().enumerate() {
                    if *jk != 0 {
                        psi += *jk as f64 * m.component_value(k, x);
                    }
                }
                for (xi, vi) in x.iter().zip(v_prime) {
                    psi -= xi * *vi as f64;
                }
                rotated_sum(&g, ylo, hy, qf * psi) * *a
            })
            .collect();
        let mut acc = ComplexSum::default();
        for p in parts {
            acc.add(p);
        }
        Ok(acc.value() * hx)
    };
    let mut ppp = 10.0;
    let mut prev = eval(ppp)?;
    for _ in 0..3 {
        ppp *= 2.0;
        let next = eval(ppp)?;
        let diff = (next - prev).norm();
        if diff <= OSC_TOL {
            return Ok(OscIntegral {
                j: j.to_vec(),
                v_prime: v_prime.to_vec(),
                c,
                value: next,
                quadrature_error: diff,
            });
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "oscillatory integral for j = {j:?}, v' = {v_prime:?}, c = {c} did not stabilise"
    )))
}

/// `max_i sup_{‖x‖ ≤ ρ} |F_i(x)|` on a grid.
fn component_sup(m: &MongeMap, rho: f64) -> f64 {
    let per_axis = (20_000f64.powf(1.0 / m.d() as f64).ceil() as usize).clamp(9, 401);
    crate::manifold::ball_grid(m.d(), per_axis)
        .iter()
        .map(|x| {
            let y: Vec<f64> = x.iter().map(|v| v * rho).collect();
            (0..m.m())
                .map(|k| m.component_value(k, &y).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Dirichlet kernel `Σ_{|c| ≤ C} e(c t) = sin((2C+1)πt) / sin(πt)`.
#[inline]
pub fn dirichlet(c_max: u64, t: f64) -> f64 {
    let r = t - t.round();
    let n = (2 * c_max + 1) as f64;
    if r.abs() < 1e-9 {
        return n;
    }
    let pi = std::f64::consts::PI;
    (n * pi * r).sin() / (pi * r).sin()
}

/// Options for [`truncated_error`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncOptions {
    /// Overrides the constructive `C_F`.
    pub c_f: Option<f64>,
    /// Integration-by-parts order `N` in the reported budget.
    pub order: u32,
    /// Radius `r` entering the budget `δ^m J^{n+1} Q^{d+1} (QrJ)^{-N} + Q^{-2N}`.
    pub r: f64,
    pub grid_budget: u128,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TruncatedError {
    pub value: f64,
    pub c_f: f64,
    /// `⌊C_F J⌋`, the range of `|c|` and `‖v'‖_∞`.
    pub c_max: u64,
    pub j_cut: u64,
    pub budget: f64,
    pub quadrature_error: f64,
}

/// `E_tr = δ^m Q^{d+1} Σ_{|c| ≤ C_F J} Σ_{v ∈ V} B(δj) I(j, v', c)`.
///
/// The sums over `c` and `v'` are carried out inside the integral as Dirichlet
/// kernels and the sum over `j` as `Π_i S(Q y F_i(x)) - ŵ(0)^m`, which leaves a
/// single `(d+1)`-dimensional quadrature.
pub fn truncated_error(
    m: &MongeMap,
    t: &WeightTuple,
    p: &CountParams,
    cutoff: &dyn Cutoff,
    opts: &TruncOptions,
) -> Result<TruncatedError> {
    p.validate()?;
    check_cutoff(cutoff, p)?;
    if p.q > 50 {
        return Err(Error::Parameter(format!(
            "truncated error term is limited to Q <= 50, got {}",
            p.q
        )));
    }
    let d = m.d();
    let mm = m.m() as i32;
    let qf = p.q as f64;
    let j_cut = cutoff_j(p.q, p.eta, p.delta);
    let cf = opts.c_f.unwrap_or_else(|| c_f(m));
    let c_max = (cf * j_cut as f64).floor() as u64;
    let n = m.n() as i32;
    let budget = p.delta.powi(mm)
        * (j_cut as f64).powi(n + 1)
        * qf.powi(d as i32 + 1)
        * (qf * opts.r * j_cut as f64).powi(-(opts.order as i32))
        + qf.powi(-2 * opts.order as i32);
    if j_cut == 0 {
        return Ok(TruncatedError {
            value: 0.0,
            c_f: cf,
            c_max,
            j_cut,
            budget,
            quadrature_error: 0.0,
        });
    }
    let table = CoefficientTable::new(t, p.delta, j_cut)?;
    let w0m = table.values[0].powi(mm);
    let rho = t.big_omega_radius();
    let (ylo, yhi) = t.omega_support();
    let cm = c_max as f64;
    let fsup = component_sup(m, rho);
    let cycles_x = qf * yhi * (cm + j_cut as f64 * cf / 2.0) * 2.0 * rho;
    let cycles_y = qf * (cm * (1.0 + d as f64 * rho) + j_cut as f64 * mm as f64 * fsup) * (yhi - ylo);

    let eval = |ppp: f64| -> Result<f64> {
        let nx = (ppp * cycles_x).ceil() as usize + MIN_NODES;
        let ny = (ppp * cycles_y).ceil() as usize + MIN_NODES;
        check_grid(
            "truncated error grid",
            (nx as u128 + 1).pow(d as u32) * (ny as u128 + 1),
            opts.grid_budget,
        )?;
        let (pts, amps, hx) = omega_good_grid(t, cutoff, nx);
        let (ys, hy) = uniform(ylo, yhi, ny);
        let gy: Vec<f64> = ys
            .iter()
            .map(|&y| y.powi(d as i32) * t.omega(y) * hy * dirichlet(c_max, qf * y))
            .collect();
        let parts: Vec<f64> = pts
            .par_iter()
            .zip(amps.par_iter())
            .map(|(x, a)| {
                let fx: Vec<f64> = (0..m.m()).map(|k| m.component_value(k, x)).collect();
                let mut acc = NeumaierSum::default();
                for (y, g) in ys.iter().zip(&gy) {
                    if *g == 0.0 {
                        continue;
                    }
                    let qy = qf * y;
                    let mut kern = *g;
                    for xi in x {
                        kern *= dirichlet(c_max, qy * xi);
                    }
                    let mut prod = 1.0;
                    for f in &fx {
                        prod *= table.series(qy * f);
                    }
                    acc.add(kern * (prod - w0m));
                }
                acc.value() * a
            })
            .collect();
        let mut acc = NeumaierSum::default();
        for v in parts {
            acc.add(v);
        }
        Ok(acc.value() * hx * p.delta.powi(mm) * qf.powi(d as i32 + 1))
    };
    let mut ppp = 10.0;
    let mut prev = eval(ppp)?;
    for _ in 0..2 {
        ppp *= 2.0;
        let next = eval(ppp)?;
        let diff = (next - prev).abs();
        if diff <= OSC_TOL * next.abs().max(1.0) {
            return Ok(TruncatedError {
                value: next,
                c_f: cf,
                c_max,
                j_cut,
                budget,
                quadrature_error: diff,
            });
        }
        prev = next;
    }
    Err(Error::Quadrature("truncated error term did not stabilise".into()))
}
