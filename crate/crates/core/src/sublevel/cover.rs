//! Greedy Besicovitch-type covers on a grid of spacing `r/4`.
//!
//! Grid points are addressed by integer index vectors, so all distance
//! comparisons during the greedy pass are exact. A point is kept as a center
//! when it lies at distance at least `r/2` from every kept center; the open
//! balls of radius `r/2` around the kept centers then cover every grid point
//! of the set.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub r: f64,
    pub centers: Vec<Vec<f64>>,
    /// Number of grid points of the set.
    pub grid_points: usize,
    /// Max number of open `r/2` balls of the family containing a grid point.
    pub multiplicity: usize,
    /// Same count for the open balls of radius `r`.
    pub doubled_multiplicity: usize,
    /// Whether every grid point of the set lies in some family ball.
    pub covered: bool,
}

/// Simple test sets, described by their distance function.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Empty,
    Point {
        at: Vec<f64>,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Shell {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    /// The closed unit ball.
    Domain,
}

impl SetSpec {
    pub fn dist(&self, x: &[f64]) -> f64 {
        let norm = |v: &[f64], c: &[f64]| -> f64 {
            v.iter()
                .zip(c)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        match self {
            SetSpec::Empty => f64::INFINITY,
            SetSpec::Point { at } => norm(x, at),
            SetSpec::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(xi, (l, h))| (l - xi).max(xi - h).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt(),
            SetSpec::Ball { center, radius } => (norm(x, center) - radius).max(0.0),
            SetSpec::Shell { center, inner, outer } => {
                let r = norm(x, center);
                (inner - r).max(r - outer).max(0.0)
            }
            SetSpec::Domain => (norm(x, &vec![0.0; x.len()]) - 1.0).max(0.0),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            SetSpec::Empty | SetSpec::Domain => None,
            SetSpec::Point { at } => Some(at.len()),
            SetSpec::Box { lo, .. } => Some(lo.len()),
            SetSpec::Ball { center, .. } | SetSpec::Shell { center, .. } => Some(center.len()),
        }
    }

    /// Cover of the grid points whose grid cell meets the set.
    pub fn cover(&self, d: usize, r: f64) -> Result<Cover> {
        if let Some(k) = self.dim() {
            if k != d {
                return Err(Error::Parameter(format!("set has dimension {k}, expected {d}")));
            }
        }
        let h = r / 4.0;
        let reach = 0.5 * h * (d as f64).sqrt() * (1.0 + 1e-12);
        besicovitch_cover(d, r, |x| self.dist(x) <= reach)
    }
}

/// Greedy cover of `{x on the r/4 grid of [-1,1]^d : x in the unit ball and in_set(x)}`.
pub fn besicovitch_cover(d: usize, r: f64, in_set: impl Fn(&[f64]) -> bool + Sync) -> Result<Cover> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Parameter(format!("cover radius {r} must lie in (0, 1)")));
    }
    let h = r / 4.0;
    let n = (1.0 / h).ceil() as i64;
    let per_axis = (2 * n + 1) as u128;
    let total = per_axis.saturating_pow(d as u32);
    if total > 200_000_000 {
        return Err(Error::Resource {
            what: format!("cover grid with r = {r} in dimension {d}"),
            required: total,
            budget: 200_000_000,
        });
    }
    let rows: Vec<i64> = (-n..=n).collect();
    // membership scan in parallel over the first coordinate, committed in grid order
    let scanned: Vec<Vec<Vec<i64>>> = rows
        .par_iter()
        .map(|&k0| {
            let mut out = Vec::new();
            let lo = vec![-n; d - 1];
            let hi = vec![n; d - 1];
            let mut idx = vec![0i64; d];
            let mut x = vec![0.0; d];
            crate::counting::for_each_in_box(&lo, &hi, |rest| {
                idx[0] = k0;
                idx[1..].copy_from_slice(rest);
                for i in 0..d {
                    x[i] = idx[i] as f64 * h;
                }
                if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12 && in_set(&x) {
                    out.push(idx.clone());
                }
            });
            out
        })
        .collect();
    let points: Vec<Vec<i64>> = scanned.into_iter().flatten().collect();

    let mut kept: Vec<Vec<i64>> = Vec::new();
    let mut grid = CellGrid::new(2);
    for p in &points {
        if grid.count_within(p, 4, &kept) == 0 {
            grid.insert(p, kept.len());
            kept.push(p.clone());
        }
    }
    let mut multiplicity = 0;
    let mut doubled = 0;
    let mut covered = true;
    for p in &points {
        let c = grid.count_within(p, 4, &kept);
        covered &= c > 0;
        multiplicity = multiplicity.max(c);
        doubled = doubled.max(grid.count_within(p, 16, &kept));
    }
    Ok(Cover {
        r,
        centers: kept
            .iter()
            .map(|k| k.iter().map(|&v| v as f64 * h).collect())
            .collect(),
        grid_points: points.len(),
        multiplicity,
        doubled_multiplicity: doubled,
        covered,
    })
}

/// Hash of integer points by cell of side `side` (in index units).
struct CellGrid {
    side: i64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl CellGrid {
    fn new(side: i64) -> Self {
        CellGrid {
            side,
            cells: HashMap::new(),
        }
    }

    fn cell(&self, p: &[i64]) -> Vec<i64> {
        p.iter().map(|v| v.div_euclid(self.side)).collect()
    }

    fn insert(&mut self, p: &[i64], id: usize) {
        let c = self.cell(p);
        self.cells.entry(c).or_default().push(id);
    }

    /// Number of stored points at squared index distance `< dist2`.
    fn count_within(&self, p: &[i64], dist2: i64, pts: &[Vec<i64>]) -> usize {
        let reach = ((dist2 as f64).sqrt() / self.side as f64).ceil() as i64;
        let c = self.cell(p);
        let lo: Vec<i64> = c.iter().map(|v| v - reach).collect();
        let hi: Vec<i64> = c.iter().map(|v| v + reach).collect();
        let mut n = 0;
        crate::counting::for_each_in_box(&lo, &hi, |cell| {
            if let Some(ids) = self.cells.get(cell) {
                for &id in ids {
                    let q = &pts[id];
                    let d2: i64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 < dist2 {
                        n += 1;
                    }
                }
            }
        });
        n
    }
}
