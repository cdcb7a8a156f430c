//! Sub-level sets `S_{Δ,K,T}` of the functions `Φ_v(x) = ⟨(x, F(x)), v⟩`:
//! witness search, Monte-Carlo measure, the non-divergence bound, parameter
//! selection, greedy covers and the smooth cutoff built from them.

mod cover;
mod cutoff;

pub use cover::{besicovitch_cover, Cover, SetSpec};
pub use cutoff::{build_cutoff, CutoffFunction, CutoffStats, DEFAULT_WITNESS_CAP};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Condition, Error, Result};
use crate::manifold::MongeMap;
use crate::quadrature::dist_to_int;

/// Largest number of `j` candidates `(2⌈T⌉-1)^m` a witness search may visit.
pub const DEFAULT_CANDIDATE_CAP: u128 = 10_000_000;

/// Relative slack in the condition checks; several of them hold with equality
/// for the default parameter choice.
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SublevelParams {
    #[serde(rename = "Delta")]
    pub big_delta: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub r: f64,
    pub eta: f64,
    #[serde(rename = "Q")]
    pub q: u64,
    pub delta: f64,
    #[serde(rename = "C_F")]
    pub c_f: f64,
}

impl SublevelParams {
    /// Same parameters with `Δ` and `K` doubled.
    pub fn doubled(&self) -> Self {
        SublevelParams {
            big_delta: 2.0 * self.big_delta,
            k: 2.0 * self.k,
            ..*self
        }
    }
}

/// `Φ_v(x) = ⟨(x, F(x)), v⟩` for `v = (v', j) ∈ Z^d × Z^m`.
pub fn phi(m: &MongeMap, v: &[i64], x: &[f64]) -> f64 {
    let d = m.d();
    let mut s: f64 = x.iter().zip(&v[..d]).map(|(xi, vi)| xi * *vi as f64).sum();
    for (k, jk) in v[d..].iter().enumerate() {
        if *jk != 0 {
            s += *jk as f64 * m.component_value(k, x);
        }
    }
    s
}

/// `∇Φ_v(x) = v' + Σ_i j_i ∇F_i(x)`.
pub fn grad_phi(m: &MongeMap, v: &[i64], x: &[f64]) -> Vec<f64> {
    let d = m.d();
    let mut g: Vec<f64> = v[..d].iter().map(|&vi| vi as f64).collect();
    let mut tmp = vec![0.0; d];
    for (k, jk) in v[d..].iter().enumerate() {
        if *jk != 0 {
            m.component_gradient(k, x, &mut tmp);
            for (gi, ti) in g.iter_mut().zip(&tmp) {
                *gi += *jk as f64 * ti;
            }
        }
    }
    g
}

/// Thresholds of a witness search. With `slack = 0` this is exactly
/// membership in `S_{Δ,K,T}`; `slack > 0` relaxes the constraints to cover
/// every point within distance `slack` of `x` (used by the cutoff builder).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Search {
    pub big_delta: f64,
    pub k: f64,
    pub t: f64,
    pub slack: f64,
}

/// Normalised witness order: smallest shell `‖v‖_∞`, then lexicographically
/// smallest among vectors whose first nonzero entry is positive.
fn better(a: &(i64, Vec<i64>), b: &(i64, Vec<i64>)) -> bool {
    (a.0, &a.1) < (b.0, &b.1)
}

fn normalise(mut v: Vec<i64>) -> Vec<i64> {
    if v.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    v
}

/// Witness search shared by [`membership`] and the cutoff builder. `Φ_{-v} = -Φ_v`,
/// so only one of `±v` needs to be reported.
pub(crate) fn find_witness(m: &MongeMap, x: &[f64], s: &Search, cap: u128) -> Result<Option<Vec<i64>>> {
    let d = m.d();
    let mm = m.m();
    let t_int = s.t.ceil() as i64 - 1; // ‖v‖_∞ < T
    if t_int < 1 {
        return Ok(None);
    }
    let per_axis = 2 * t_int as u128 + 1;
    let needed = per_axis.saturating_pow(mm as u32);
    if needed > cap {
        return Err(Error::Resource {
            what: format!("witness search with T = {}", s.t),
            required: needed,
            budget: cap,
        });
    }
    let f: Vec<f64> = (0..mm).map(|k| m.component_value(k, x)).collect();
    let grads: Vec<Vec<f64>> = (0..mm)
        .map(|k| {
            let mut g = vec![0.0; d];
            m.component_gradient(k, x, &mut g);
            g
        })
        .collect();
    let mut best: Option<(i64, Vec<i64>)> = None;
    let mut g = vec![0.0; d];
    let mut lo = vec![0i64; d];
    let mut hi = vec![0i64; d];
    let jlo = vec![-t_int; mm];
    let jhi = vec![t_int; mm];
    crate::counting::for_each_in_box(&jlo, &jhi, |j| {
        let jshell = j.iter().map(|v| v.abs()).max().unwrap_or(0);
        if let Some((bs, _)) = &best {
            if jshell > *bs {
                return;
            }
        }
        let h_j: f64 = j
            .iter()
            .enumerate()
            .map(|(k, jk)| jk.unsigned_abs() as f64 * m.hessian_bound(k))
            .sum();
        let k_eff = s.k + s.slack * h_j;
        for i in 0..d {
            g[i] = (0..mm).map(|k| j[k] as f64 * grads[k][i]).sum();
            // integers v'_i with |v'_i + g_i| < k_eff and |v'_i| ≤ t_int
            lo[i] = ((-g[i] - k_eff).floor() as i64 + 1).max(-t_int);
            hi[i] = ((-g[i] + k_eff).ceil() as i64 - 1).min(t_int);
        }
        let f_dot: f64 = j.iter().zip(&f).map(|(jk, fk)| *jk as f64 * fk).sum();
        crate::counting::for_each_in_box(&lo, &hi, |vp| {
            if j.iter().all(|&v| v == 0) && vp.iter().all(|&v| v == 0) {
                return;
            }
            let mut grad2 = 0.0;
            let mut ok = true;
            for i in 0..d {
                let gi = vp[i] as f64 + g[i];
                if gi.abs() >= k_eff {
                    ok = false;
                    break;
                }
                grad2 += gi * gi;
            }
            if !ok {
                return;
            }
            let phi_v = f_dot + x.iter().zip(vp).map(|(xi, vi)| xi * *vi as f64).sum::<f64>();
            let delta_eff = s.big_delta + s.slack * (grad2.sqrt() + s.slack * h_j);
            if dist_to_int(phi_v) >= delta_eff {
                return;
            }
            let mut v = vp.to_vec();
            v.extend_from_slice(j);
            let shell = v.iter().map(|c| c.abs()).max().unwrap_or(0);
            let cand = (shell, normalise(v));
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        });
    });
    Ok(best.map(|b| b.1))
}

/// A witness `v` with `‖Φ_v(x)‖ < Δ`, `‖∇Φ_v(x)‖_∞ < K`, `0 < ‖v‖_∞ < T`, or `None`.
///
/// Among all witnesses the one in the smallest shell `‖v‖_∞` is returned; since
/// `-v` is a witness whenever `v` is, the sign is fixed by making the first
/// nonzero entry positive, and ties are broken lexicographically.
pub fn membership(m: &MongeMap, x: &[f64], sp: &SublevelParams) -> Result<Option<Vec<i64>>> {
    membership_with_cap(m, x, sp, DEFAULT_CANDIDATE_CAP)
}

pub fn membership_with_cap(
    m: &MongeMap,
    x: &[f64],
    sp: &SublevelParams,
    cap: u128,
) -> Result<Option<Vec<i64>>> {
    m.eval_map(x)?;
    find_witness(
        m,
        x,
        &Search {
            big_delta: sp.big_delta,
            k: sp.k,
            t: sp.t,
            slack: 0.0,
        },
        cap,
    )
}

/// Monte-Carlo estimate of `μ_d(S_{Δ,K,T} ∩ B)` with a 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MeasureEstimate {
    pub measure: f64,
    pub ci_halfwidth: f64,
    pub hits: u64,
    pub samples: u64,
}

const CHUNK: u64 = 1024;

/// Uniform sample of the ball of radius `radius`, one RNG stream per chunk of
/// samples so results do not depend on scheduling.
fn sample_chunk(d: usize, seed: u64, chunk: u64, count: u64, radius: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut out = Vec::with_capacity(count as usize);
    while (out.len() as u64) < count {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            out.push(x.into_iter().map(|v| v * radius).collect());
        }
    }
    out
}

/// Fraction of `samples` uniform points of the ball `B(0, probe_radius)` lying in
/// `S_{Δ,K,T}`, scaled by the ball's volume.
pub fn measure_estimate(
    m: &MongeMap,
    sp: &SublevelParams,
    samples: u64,
    seed: u64,
    probe_radius: f64,
) -> Result<MeasureEstimate> {
    if samples < 1000 {
        return Err(Error::Parameter(format!(
            "measure estimate needs at least 1000 samples, got {samples}"
        )));
    }
    if !(probe_radius > 0.0 && probe_radius <= 1.0) {
        return Err(Error::Parameter(format!(
            "probe radius {probe_radius} must lie in (0, 1]"
        )));
    }
    let d = m.d();
    let chunks = samples.div_ceil(CHUNK);
    let hits: Vec<Result<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(samples - c * CHUNK);
            let mut h = 0;
            for x in sample_chunk(d, seed, c, count, probe_radius) {
                if membership(m, &x, sp)?.is_some() {
                    h += 1;
                }
            }
            Ok(h)
        })
        .collect();
    let mut total = 0u64;
    for h in hits {
        total += h?;
    }
    let vol = crate::counting::unit_ball_volume(d) * probe_radius.powi(d as i32);
    let p = total as f64 / samples as f64;
    Ok(MeasureEstimate {
        measure: vol * p,
        ci_halfwidth: 1.96 * vol * (p * (1.0 - p) / samples as f64).sqrt(),
        hits: total,
        samples,
    })
}

/// The non-divergence bound `C (Δ K T^{n-1})^α`, `α = 1/(d(2l-1)(n+1))`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BkmBound {
    pub bound: f64,
    pub base: f64,
    pub alpha: f64,
    pub constant: f64,
}

pub fn bkm_bound(sp: &SublevelParams, d: usize, l: usize, n: usize, constant: f64) -> Result<BkmBound> {
    if !(constant >= 1.0) {
        return Err(Error::Parameter(format!("constant {constant} must be >= 1")));
    }
    if d == 0 || l == 0 || n <= d {
        return Err(Error::Parameter(format!(
            "invalid dimensions d={d}, l={l}, n={n}"
        )));
    }
    let lhs = sp.big_delta.powi(n as i32);
    let rhs = sp.k * sp.t.powi(n as i32 - 1);
    if !(lhs < rhs) {
        return Err(Error::condition(
            Condition::C1,
            format!("Delta^n = {lhs:e} is not below K T^(n-1) = {rhs:e}"),
        ));
    }
    let alpha = 1.0 / (d * (2 * l - 1) * (n + 1)) as f64;
    let base = sp.big_delta * rhs;
    Ok(BkmBound {
        bound: constant * base.powf(alpha),
        base,
        alpha,
        constant,
    })
}

fn le(a: f64, b: f64) -> bool {
    a <= b * (1.0 + REL_TOL)
}

/// Outcome of every side condition for a parameter set.
pub fn check_conditions(sp: &SublevelParams, n: usize) -> Vec<(Condition, bool)> {
    let q = sp.q as f64;
    let qeta = q.powf(sp.eta);
    let c1 = sp.big_delta.powi(n as i32) < sp.k * sp.t.powi(n as i32 - 1);
    let c2 = sp.r > 0.0
        && le(
            sp.r,
            q.powf(-2.0 * sp.eta) * (sp.k * sp.delta).min(sp.big_delta / sp.k),
        );
    let c3 = le(qeta / q, sp.big_delta);
    let c4 = le(qeta / q / sp.k, sp.r) && le(sp.r, q.powf(-2.0 * sp.eta) * sp.k * sp.delta);
    vec![
        (Condition::C1, c1),
        (Condition::C2, c2),
        (Condition::C3, c3),
        (Condition::C4, c4),
        (Condition::RadiusLowerBound, le(qeta / q, sp.r)),
        (Condition::KAtMostOne, le(sp.k, 1.0)),
    ]
}

/// `Δ = Q^{4η-1}`, `K = δ^{-1/2} Q^{2η-1/2}`, `r = δ^{1/2} Q^{-1/2}`, `T = 2 C_F Q^η / δ`.
pub fn choose_params(delta: f64, q: u64, eta: f64, c_f: f64, n: usize) -> Result<SublevelParams> {
    if q < 1 {
        return Err(Error::Parameter("Q must be positive".into()));
    }
    if !(0.0..=0.125).contains(&eta) {
        return Err(Error::condition(
            Condition::EtaCap,
            format!("eta = {eta} outside [0, 1/8]"),
        ));
    }
    let qf = q as f64;
    let lower = qf.powf(4.0 * eta - 1.0);
    if !(le(lower, delta) && delta < 0.5) {
        return Err(Error::condition(
            Condition::DeltaRange,
            format!("delta = {delta} outside [Q^(4 eta - 1), 1/2) = [{lower:e}, 0.5)"),
        ));
    }
    let sp = SublevelParams {
        big_delta: lower,
        k: delta.powf(-0.5) * qf.powf(2.0 * eta - 0.5),
        t: 2.0 * c_f * qf.powf(eta) / delta,
        r: delta.sqrt() / qf.sqrt(),
        eta,
        q,
        delta,
        c_f,
    };
    for (cond, ok) in check_conditions(&sp, n) {
        if !ok {
            return Err(Error::condition(
                cond,
                format!("violated for delta = {delta}, Q = {q}, eta = {eta}"),
            ));
        }
    }
    Ok(sp)
}
