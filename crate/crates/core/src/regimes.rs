//! Closed-form exponents, thresholds and series verdicts in exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Q = BigRational;

fn int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

fn frac(a: i64, b: i64) -> Q {
    Q::new(BigInt::from(a), BigInt::from(b))
}

/// Parses `p/q`, an integer, or a finite decimal.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(p, q));
    }
    if let Some((a, b)) = s.split_once('.') {
        if b.is_empty() || !b.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = a.starts_with('-');
        let whole: BigInt = if a.is_empty() || a == "-" {
            BigInt::zero()
        } else {
            a.parse().map_err(|_| bad())?
        };
        let den = BigInt::from(10u32).pow(b.len() as u32);
        let fr = Q::new(b.parse::<BigInt>().map_err(|_| bad())?, den);
        let w = Q::from_integer(whole);
        return Ok(if neg { w - fr } else { w + fr });
    }
    Ok(Q::from_integer(s.parse().map_err(|_| bad())?))
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `1/(d(2l-1)(n+1))`.
pub fn alpha(n: u32, d: u32, l: u32) -> Q {
    frac(1, d as i64 * (2 * l as i64 - 1) * (n as i64 + 1))
}

/// `(2n+12)/(2n-1)`.
pub fn a_n(n: u32) -> Q {
    frac(2 * n as i64 + 12, 2 * n as i64 - 1)
}

fn check_dims(n: u32, d: u32, l: u32) -> Result<()> {
    if d < 1 || d >= n || l < 2 {
        return Err(Error::Domain(format!(
            "need 1 <= d < n and l >= 2, got n = {n}, d = {d}, l = {l}"
        )));
    }
    Ok(())
}

/// A report field together with the largest η for which its theorem applies.
#[derive(Debug, Clone, PartialEq)]
pub struct Capped {
    pub value: Q,
    pub eta_cap: Q,
    pub valid: bool,
}

impl Capped {
    fn new(value: Q, eta: &Q, eta_cap: Q) -> Self {
        let valid = eta.is_positive() && *eta <= eta_cap;
        Capped {
            value,
            eta_cap,
            valid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub n: u32,
    pub d: u32,
    pub m: u32,
    pub l: u32,
    pub eta: Q,
    pub alpha: Q,
    pub a_n: Q,
    /// Exponent of `Q` in the lower end of the δ-range of the asymptotic formula.
    pub delta_threshold_asymp: Capped,
    /// `-3/(2n-1) + a_n η`, lower end of the δ-range of the lower bound.
    pub delta_threshold_lower: Capped,
    /// Exponent of `Q` in the second term of the upper bound.
    pub upper_bound_second_exponent: Capped,
    /// `d + 1 - 1/(2ld(n+1))`.
    pub on_manifold_exponent: Q,
    pub tau_max_ours: Q,
    pub tau_max_by: Enclosure,
    /// Upper end of the spectrum interval, present for `n ≥ 3`.
    pub spectrum_upper: Option<Q>,
}

pub fn regime_report(n: u32, d: u32, l: u32, eta: &Q) -> Result<RegimeReport> {
    check_dims(n, d, l)?;
    let m = n - d;
    let (ni, di, mi, li) = (n as i64, d as i64, m as i64, l as i64);
    let al = alpha(n, d, l);
    let an = a_n(n);
    let big = int(2 * mi * di * (2 * li - 1) * (ni + 1) + 2 * ni - 1);
    let cap_upper = frac(1, 2 * ni + 10);
    let asymp = (int(-3) + int(2 * ni + 10) * eta) / &big;
    let lower = frac(-3, 2 * ni - 1) + &an * eta;
    let second = int(di + 1) - (int(3 * mi) - int(mi * (2 * ni + 10)) * eta) / &big;
    Ok(RegimeReport {
        n,
        d,
        m,
        l,
        eta: eta.clone(),
        alpha: al,
        a_n: an,
        delta_threshold_asymp: Capped::new(asymp, eta, cap_upper.clone()),
        delta_threshold_lower: Capped::new(lower, eta, frac(1, 8)),
        upper_bound_second_exponent: Capped::new(second, eta, cap_upper),
        on_manifold_exponent: int(di + 1) - frac(1, 2 * li * di * (ni + 1)),
        tau_max_ours: tau_max_ours(n, d, l)?,
        tau_max_by: tau_max_by(n, d, l)?,
        spectrum_upper: spectrum_interval(n).ok().map(|s| s.upper),
    })
}

/// `(n+1)/(τ+1) - m`.
pub fn dim_formula(n: u32, tau: &Q, m: u32) -> Result<Q> {
    Ok(jarnik_besicovitch(n, tau)? - int(m as i64))
}

/// `(n+1)/(τ+1)`.
pub fn jarnik_besicovitch(n: u32, tau: &Q) -> Result<Q> {
    if n < 1 || *tau < frac(1, n as i64) {
        return Err(Error::Domain(format!("tau = {tau} below 1/n for n = {n}")));
    }
    Ok(int(n as i64 + 1) / (tau + Q::one()))
}

/// `(3α+1)/((2n-1)α+n)`.
pub fn tau_max_ours(n: u32, d: u32, l: u32) -> Result<Q> {
    check_dims(n, d, l)?;
    let al = alpha(n, d, l);
    Ok((int(3) * &al + Q::one()) / (int(2 * n as i64 - 1) * &al + int(n as i64)))
}

/// Rational interval `[lo, hi]` known to contain an irrational (or rational) value.
#[derive(Debug, Clone, PartialEq)]
pub struct Enclosure {
    pub lo: Q,
    pub hi: Q,
}

impl Enclosure {
    pub fn width(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Q {
        (&self.lo + &self.hi) / int(2)
    }
}

pub const ENCLOSURE_WIDTH: f64 = 1e-12;

/// Endpoint of the competing τ-range: the root in `[1/n, 1/(n-d))` of
/// `(2n + 2nα)τ² + (n - 2 - 3α + 2nα)τ - (1 + 3α) = 0`, the equality case of
/// `(nτ-1)/(τ+1) ≤ α(3-2nτ)/(2τ+1)`.
pub fn tau_max_by(n: u32, d: u32, l: u32) -> Result<Enclosure> {
    check_dims(n, d, l)?;
    let al = alpha(n, d, l);
    let ni = int(n as i64);
    let a = int(2) * &ni + int(2) * &ni * &al;
    let b = &ni - int(2) - int(3) * &al + int(2) * &ni * &al;
    let c = -(Q::one() + int(3) * &al);
    let p = |t: &Q| &a * t * t + &b * t + &c;
    let mut lo = frac(1, n as i64);
    let mut hi = frac(1, (n - d) as i64);
    let (plo, phi) = (p(&lo), p(&hi));
    if plo.is_zero() {
        return Ok(Enclosure { hi: lo.clone(), lo });
    }
    if plo.signum() == phi.signum() || phi.is_zero() {
        return Err(Error::Domain(format!(
            "no root of the competing range quadratic in [1/{n}, 1/{}) for d = {d}, l = {l}",
            n - d
        )));
    }
    let width = Q::new(BigInt::one(), BigInt::from(10u64).pow(12));
    let lo_neg = plo.is_negative();
    while &hi - &lo >= width {
        let mid = (&lo + &hi) / int(2);
        let pm = p(&mid);
        if pm.is_zero() {
            return Ok(Enclosure {
                lo: mid.clone(),
                hi: mid,
            });
        }
        if pm.is_negative() == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Enclosure { lo, hi })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub lower: Q,
    pub upper: Q,
    /// `(2n²+n+2)/((n²+n+1)(2n-1))`.
    pub tau_cap: Q,
    /// Whether `upper == tau_cap` exactly.
    pub identity_holds: bool,
    /// `1/(2n²+5n)`, the competing width bound.
    pub competing_width: Q,
}

pub fn spectrum_interval(n: u32) -> Result<Spectrum> {
    if n < 3 {
        return Err(Error::Domain(format!("spectrum interval needs n >= 3, got {n}")));
    }
    let ni = n as i64;
    let s = ni * ni + ni + 1;
    let lower = frac(1, ni);
    let upper = &lower + frac(ni + 1, ni * (2 * ni - 1) * s);
    let tau_cap = frac(2 * ni * ni + ni + 2, s * (2 * ni - 1));
    Ok(Spectrum {
        identity_holds: upper == tau_cap,
        lower,
        upper,
        tau_cap,
        competing_width: frac(1, 2 * ni * ni + 5 * ni),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converges,
    Diverges,
    /// Divergent with the exponent exactly at the boundary `-1`.
    DivergesBoundary,
    /// Trend of the condensed terms suggests convergence (tabulated input).
    HeuristicConverges,
    HeuristicDiverges,
}

impl Verdict {
    pub fn converges(self) -> bool {
        matches!(self, Verdict::Converges | Verdict::HeuristicConverges)
    }
}

/// Approximation function for the measure series.
#[derive(Debug, Clone, PartialEq)]
pub enum Psi {
    /// `ψ(q) = q^{-τ}`.
    Power(Q),
    /// Samples `(q, ψ(q))`, interpolated log-linearly.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KhintchineVerdict {
    pub gset: Verdict,
    /// Exponent of `q` in the general term of the first series (power law only).
    pub gset_exponent: Option<Q>,
    /// `β` at `ε = 0` (power law only).
    pub beta0: Option<Q>,
    /// Verdict on the second series; `None` for tabulated input.
    pub bset: Option<Verdict>,
    /// Supremum of the admissible `ε`, when the second series converges.
    pub eps_slack: Option<Q>,
    /// Whether both series converge, so that `H^s` of the set vanishes.
    pub measure_zero: bool,
}

/// `β(ε) = -(τ+1)(s-d)/2 + ατ(n-1/2) - α(3/2 - (n+5)ε)`.
pub fn beta(n: u32, d: u32, l: u32, tau: &Q, s: &Q, eps: &Q) -> Q {
    let al = alpha(n, d, l);
    let ni = int(n as i64);
    -(tau + Q::one()) * (s - int(d as i64)) / int(2) + &al * tau * (&ni - frac(1, 2))
        - &al * (frac(3, 2) - (&ni + int(5)) * eps)
}

pub const MIN_TABLE_DYADIC: usize = 4;

pub fn khintchine_verdict(n: u32, d: u32, l: u32, s: &Q, psi: &Psi) -> Result<KhintchineVerdict> {
    check_dims(n, d, l)?;
    let m = int((n - d) as i64);
    match psi {
        Psi::Power(tau) => {
            let e = int(n as i64) - (tau + Q::one()) * (s + &m);
            let gset = match e.cmp(&int(-1)) {
                std::cmp::Ordering::Less => Verdict::Converges,
                std::cmp::Ordering::Equal => Verdict::DivergesBoundary,
                std::cmp::Ordering::Greater => Verdict::Diverges,
            };
            let b0 = beta(n, d, l, tau, s, &Q::zero());
            let (bset, slack) = if b0.is_negative() {
                let slack = -&b0 / (alpha(n, d, l) * int(n as i64 + 5));
                (Verdict::Converges, Some(slack))
            } else {
                (Verdict::Diverges, None)
            };
            Ok(KhintchineVerdict {
                measure_zero: gset.converges() && bset.converges(),
                gset,
                gset_exponent: Some(e),
                beta0: Some(b0),
                bset: Some(bset),
                eps_slack: slack,
            })
        }
        Psi::Table(pts) => {
            let gset = condensation_heuristic(n, &(s + &m), pts)?;
            Ok(KhintchineVerdict {
                gset,
                gset_exponent: None,
                beta0: None,
                bset: None,
                eps_slack: None,
                measure_zero: false,
            })
        }
    }
}

/// Labelled heuristic: the condensed terms `2^{k(n+1)} (ψ(2^k)/2^k)^{s+m}` are
/// formed at every power of two inside the table, and the sign of the
/// least-squares slope of their logarithms over the upper half decides.
fn condensation_heuristic(n: u32, sm: &Q, pts: &[(f64, f64)]) -> Result<Verdict> {
    let mut pts: Vec<(f64, f64)> = pts
        .iter()
        .copied()
        .filter(|(q, p)| *q >= 1.0 && *p > 0.0 && q.is_finite() && p.is_finite())
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < 2 {
        return Err(Error::Resolution(format!(
            "tabulated psi needs at least 2 valid points, got {}",
            pts.len()
        )));
    }
    let sm = to_f64(sm);
    let lo = pts[0].0.log2().ceil() as i64;
    let hi = pts[pts.len() - 1].0.log2().floor() as i64;
    let mut ks = Vec::new();
    let mut terms = Vec::new();
    for k in lo..=hi {
        let q = (k as f64).exp2();
        let i = pts.partition_point(|p| p.0 <= q).clamp(1, pts.len() - 1);
        let (q0, p0) = pts[i - 1];
        let (q1, p1) = pts[i];
        let t = if q1 > q0 {
            (q.ln() - q0.ln()) / (q1.ln() - q0.ln())
        } else {
            0.0
        };
        let ln_psi = p0.ln() + t * (p1.ln() - p0.ln());
        ks.push(k as f64);
        terms.push(k as f64 * std::f64::consts::LN_2 * (n as f64 + 1.0) + sm * (ln_psi - q.ln()));
    }
    if ks.len() < MIN_TABLE_DYADIC {
        return Err(Error::Resolution(format!(
            "tabulated psi spans {} powers of two, need at least {MIN_TABLE_DYADIC}",
            ks.len()
        )));
    }
    let half = ks.len() / 2;
    let (x, y) = (&ks[half..], &terms[half..]);
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(if sxy / sxx < 0.0 {
        Verdict::HeuristicConverges
    } else {
        Verdict::HeuristicDiverges
    })
}
