//! Smooth cutoff built from a bounded-overlap ball cover of the unit ball.
//!
//! Every ball of the cover carries a bump that equals one on the concentric
//! ball of half the radius. A ball is marked as included when a relaxed witness
//! search at its center succeeds; the relaxation is large enough that every
//! point of `S_{Δ,K,T}` in the ball is accounted for, so the normalised sum of
//! included bumps equals one on the sub-level set.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{besicovitch_cover, check_conditions, choose_params, find_witness, Search, SublevelParams};
use crate::counting::{CountParams, Cutoff};
use crate::error::{Condition, Error, Result};
use crate::manifold::MongeMap;

pub const DEFAULT_WITNESS_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffStats {
    /// Balls of the cover.
    pub balls: usize,
    /// Balls whose bump enters the numerator.
    pub included: usize,
    /// Cover multiplicity for the open balls of radius `r/2`.
    pub multiplicity: usize,
    /// Cover multiplicity for the open balls of radius `r`.
    pub support_multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct CutoffFunction {
    d: usize,
    r: f64,
    centers: Vec<Vec<f64>>,
    included: Vec<bool>,
    cells: HashMap<Vec<i64>, Vec<usize>>,
    built_for: Option<(f64, u64, f64)>,
    stats: CutoffStats,
}

fn g(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step, 0 for `t ≤ 0` and 1 for `t ≥ 1`.
fn step(t: f64) -> f64 {
    let a = g(t);
    let b = g(1.0 - t);
    a / (a + b)
}

/// Ball bump: 1 on `‖z‖ ≤ 1/2`, supported in `‖z‖ < 1`.
fn ball_bump(rho: f64) -> f64 {
    step(2.0 * (1.0 - rho))
}

impl CutoffFunction {
    /// Builds the cutoff for `S_{Δ,K,T}` without checking side conditions.
    pub fn build(m: &MongeMap, sp: &SublevelParams) -> Result<Self> {
        Self::build_with_cap(m, sp, DEFAULT_WITNESS_CAP)
    }

    pub fn build_with_cap(m: &MongeMap, sp: &SublevelParams, cap: u128) -> Result<Self> {
        let d = m.d();
        let r = sp.r;
        let cover = besicovitch_cover(d, r, |_| true)?;
        let search = Search {
            big_delta: sp.big_delta,
            k: sp.k,
            t: sp.t,
            slack: r,
        };
        let included = cover
            .centers
            .par_iter()
            .map(|c| find_witness(m, c, &search, cap).map(|w| w.is_some()))
            .collect::<Result<Vec<bool>>>()?;
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, c) in cover.centers.iter().enumerate() {
            let key = c.iter().map(|v| (v / r).floor() as i64).collect();
            cells.entry(key).or_default().push(i);
        }
        let stats = CutoffStats {
            balls: cover.centers.len(),
            included: included.iter().filter(|&&b| b).count(),
            multiplicity: cover.multiplicity,
            support_multiplicity: cover.doubled_multiplicity,
        };
        Ok(CutoffFunction {
            d,
            r,
            centers: cover.centers,
            included,
            cells,
            built_for: Some((sp.delta, sp.q, sp.eta)),
            stats,
        })
    }

    /// Cutoff for a count with parameters `p`; the sub-level exponent is
    /// `min(η, 1/8)` and the thresholds come from [`choose_params`].
    pub fn for_count(m: &MongeMap, p: &CountParams, c_f: f64) -> Result<Self> {
        let sp = choose_params(p.delta, p.q, p.eta.min(0.125), c_f, m.n())?;
        let mut f = build_cutoff(m, &sp)?;
        f.built_for = Some((p.delta, p.q, p.eta));
        Ok(f)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn stats(&self) -> CutoffStats {
        self.stats
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn included(&self) -> &[bool] {
        &self.included
    }

    /// Value of the cutoff at `x`; zero where no ball of the cover reaches.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        let cell: Vec<i64> = x.iter().map(|v| (v / self.r).floor() as i64).collect();
        let lo: Vec<i64> = cell.iter().map(|c| c - 1).collect();
        let hi: Vec<i64> = cell.iter().map(|c| c + 1).collect();
        let mut num = 0.0;
        let mut den = 0.0;
        crate::counting::for_each_in_box(&lo, &hi, |k| {
            if let Some(ids) = self.cells.get(k) {
                for &i in ids {
                    let c = &self.centers[i];
                    let rho = x
                        .iter()
                        .zip(c)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                        / self.r;
                    if rho < 1.0 {
                        let b = ball_bump(rho);
                        den += b;
                        if self.included[i] {
                            num += b;
                        }
                    }
                }
            }
        });
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

impl Cutoff for CutoffFunction {
    fn eval(&self, x: &[f64]) -> f64 {
        self.value(x)
    }

    fn built_for(&self) -> Option<(f64, u64, f64)> {
        self.built_for
    }
}

/// Builds the cutoff after checking the radius condition C2.
pub fn build_cutoff(m: &MongeMap, sp: &SublevelParams) -> Result<CutoffFunction> {
    let ok = check_conditions(sp, m.n())
        .into_iter()
        .any(|(c, ok)| c == Condition::C2 && ok);
    if !ok {
        return Err(Error::condition(
            Condition::C2,
            format!(
                "radius r = {} too large for Delta = {}, K = {}",
                sp.r, sp.big_delta, sp.k
            ),
        ));
    }
    CutoffFunction::build(m, sp)
}
