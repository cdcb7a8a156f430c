//! Manifold patches in normalised Monge form `x ↦ (x, F(x))` over the closed
//! unit ball `U_d`, with exact derivatives and the nondegeneracy rank test.

mod expr;
mod poly;
mod spec;

pub use expr::Expr;
pub use poly::{Monomial, Polynomial};
pub use spec::{parse_builtin, parse_manifold_spec};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_CUTOFF: f64 = 1e-9;

/// Default smoothness cap for polynomial and closed-form patches.
pub const DEFAULT_SMOOTHNESS: usize = 32;

/// One coordinate function `F_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Poly(Polynomial),
    Expr(Expr),
}

impl Component {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Component::Poly(p) => p.eval(x),
            Component::Expr(e) => e.eval(x),
        }
    }

    pub fn partial(&self, alpha: &[u32]) -> Component {
        match self {
            Component::Poly(p) => Component::Poly(p.partial(alpha)),
            Component::Expr(e) => Component::Expr(e.partial(alpha)),
        }
    }

    pub fn as_poly(&self) -> Option<&Polynomial> {
        match self {
            Component::Poly(p) => Some(p),
            Component::Expr(_) => None,
        }
    }

    /// Upper bound for `sup |self|` on the closed unit ball of dimension `d`.
    fn sup_bound(&self, d: usize) -> f64 {
        match self {
            Component::Poly(p) => p.abs_coeff_sum(),
            Component::Expr(e) => {
                let m = ball_grid(d, 65)
                    .iter()
                    .map(|x| e.eval(x).abs())
                    .fold(0.0, f64::max);
                1.25 * m
            }
        }
    }
}

/// A manifold patch `{(x, F(x)) : ‖x‖₂ ≤ 1}` in `R^n`, `n = d + m`.
#[derive(Debug, Clone)]
pub struct MongeMap {
    name: String,
    d: usize,
    components: Vec<Component>,
    smoothness_order: usize,
    l_claimed: Option<usize>,
    gradients: Vec<Vec<Component>>,
    hessian_bounds: Vec<f64>,
}

/// One column `∂^α f(x)` of the derivative matrix of `f(x) = (x, F(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialColumn {
    pub alpha: Vec<u32>,
    pub value: Vec<f64>,
}

impl MongeMap {
    pub fn new(
        name: impl Into<String>,
        d: usize,
        components: Vec<Component>,
        smoothness_order: usize,
        l_claimed: Option<usize>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("domain dimension d must be >= 1".into()));
        }
        if components.is_empty() {
            return Err(Error::Parameter("codimension m must be >= 1".into()));
        }
        for c in &components {
            if let Component::Poly(p) = c {
                if p.nvars() != d {
                    return Err(Error::Parameter(format!(
                        "component has {} variables, expected {d}",
                        p.nvars()
                    )));
                }
            }
        }
        let gradients: Vec<Vec<Component>> = components
            .iter()
            .map(|c| (0..d).map(|i| c.partial(&unit_index(d, i))).collect())
            .collect();
        let hessian_bounds = components
            .iter()
            .map(|c| {
                let mut s = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        let mut alpha = vec![0u32; d];
                        alpha[a] += 1;
                        alpha[b] += 1;
                        let h = c.partial(&alpha).sup_bound(d);
                        s += h * h;
                    }
                }
                s.sqrt()
            })
            .collect();
        Ok(MongeMap {
            name: name.into(),
            d,
            components,
            smoothness_order,
            l_claimed,
            gradients,
            hessian_bounds,
        })
    }

    pub fn from_polynomials(name: impl Into<String>, d: usize, polys: Vec<Polynomial>) -> Result<Self> {
        let comps = polys.into_iter().map(Component::Poly).collect();
        MongeMap::new(name, d, comps, DEFAULT_SMOOTHNESS, None)
    }

    /// `F(x) = x²` over `[-1, 1]`.
    pub fn parabola() -> Self {
        let f = Polynomial::monomial(1, 1, vec![2]).expect("valid monomial");
        MongeMap::from_polynomials("parabola", 1, vec![f])
            .expect("builtin")
            .with_l_claimed(2)
    }

    /// `(x, x², …, x^n)`.
    pub fn moment_curve(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter("moment curve needs n >= 2".into()));
        }
        let polys = (2..=n)
            .map(|k| Polynomial::monomial(1, 1, vec![k as u32]))
            .collect::<Result<Vec<_>>>()?;
        Ok(MongeMap::from_polynomials(format!("moment_curve({n})"), 1, polys)?.with_l_claimed(n))
    }

    /// `F(x) = Σ x_i²` over the unit ball of `R^d`.
    pub fn paraboloid(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("paraboloid needs d >= 1".into()));
        }
        let terms = (0..d)
            .map(|i| {
                let mut e = vec![0u32; d];
                e[i] = 2;
                Monomial {
                    coeff: num_rational::BigRational::from_integer(1.into()),
                    exps: e,
                }
            })
            .collect();
        let f = Polynomial::new(d, terms)?;
        Ok(MongeMap::from_polynomials(format!("paraboloid({d})"), d, vec![f])?.with_l_claimed(2))
    }

    /// Cap of the sphere of radius 2 tangent to the domain at the origin:
    /// `F(x) = 2 - sqrt(4 - ‖x‖²)`.
    pub fn sphere_patch(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("sphere patch needs d >= 1".into()));
        }
        let mut norm2 = Expr::c(0.0);
        for i in 0..d {
            norm2 = Expr::add(norm2, Expr::pow(Expr::var(i), 2.0));
        }
        let f = Expr::sub(Expr::c(2.0), Expr::pow(Expr::sub(Expr::c(4.0), norm2), 0.5));
        MongeMap::new(
            format!("sphere_patch({d})"),
            d,
            vec![Component::Expr(f)],
            DEFAULT_SMOOTHNESS,
            Some(2),
        )
    }

    /// `F ≡ 0` with `m` components.
    pub fn flat(d: usize, m: usize) -> Result<Self> {
        let polys = (0..m).map(|_| Polynomial::zero(d)).collect();
        MongeMap::from_polynomials(format!("flat({d},{m})"), d, polys)
    }

    pub fn with_l_claimed(mut self, l: usize) -> Self {
        self.l_claimed = Some(l);
        self
    }

    pub fn with_smoothness(mut self, order: usize) -> Self {
        self.smoothness_order = order;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn n(&self) -> usize {
        self.d + self.m()
    }

    pub fn smoothness_order(&self) -> usize {
        self.smoothness_order
    }

    pub fn l_claimed(&self) -> Option<usize> {
        self.l_claimed
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Domain(format!(
                "point has dimension {}, expected {}",
                x.len(),
                self.d
            )));
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if !(r2 <= 1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "point with norm {} lies outside the closed unit ball",
                r2.sqrt()
            )));
        }
        Ok(())
    }

    /// `(x_1, …, x_d, F_1(x), …, F_m(x))`.
    pub fn eval_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(x)?;
        let mut out = x.to_vec();
        out.extend(self.components.iter().map(|c| c.eval(x)));
        Ok(out)
    }

    /// `F_i(x)` without the domain check; callers guarantee `x` is meaningful.
    #[inline]
    pub fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        self.components[i].eval(x)
    }

    /// `∇F_i(x)` written into `out` (length `d`).
    #[inline]
    pub fn component_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip(&self.gradients[i]) {
            *o = g.eval(x);
        }
    }

    /// Upper bound for the operator norm of `∇²F_i` on the unit ball.
    pub fn hessian_bound(&self, i: usize) -> f64 {
        self.hessian_bounds[i]
    }

    /// `sup_x Σ_i ‖∇F_i(x)‖_∞` over a grid of the unit ball.
    pub fn gradient_sup_on_grid(&self, per_axis: usize) -> f64 {
        let mut g = vec![0.0; self.d];
        ball_grid(self.d, per_axis)
            .iter()
            .map(|x| {
                (0..self.m())
                    .map(|i| {
                        self.component_gradient(i, x, &mut g);
                        g.iter().fold(0.0f64, |a, v| a.max(v.abs()))
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// All `∂^α f(x)` with `1 ≤ |α| ≤ order`, graded then lexicographic in `α`.
    pub fn eval_partials(&self, x: &[f64], order: usize) -> Result<Vec<PartialColumn>> {
        if order > self.smoothness_order {
            return Err(Error::Capability(format!(
                "derivatives of order {order} requested, patch is only C^{}",
                self.smoothness_order
            )));
        }
        self.check_domain(x)?;
        let mut cols = Vec::new();
        for alpha in multi_indices(self.d, order) {
            let total: u32 = alpha.iter().sum();
            let mut value = vec![0.0; self.n()];
            if total == 1 {
                let i = alpha.iter().position(|&a| a == 1).expect("unit index");
                value[i] = 1.0;
            }
            for (k, c) in self.components.iter().enumerate() {
                value[self.d + k] = c.partial(&alpha).eval(x);
            }
            cols.push(PartialColumn { alpha, value });
        }
        Ok(cols)
    }

    /// Smallest `l ≤ l_max` such that the partials of order `≤ l` span `R^n`.
    pub fn nondegeneracy_order(&self, x: &[f64], l_max: usize) -> Result<Option<usize>> {
        if l_max > self.smoothness_order {
            return Err(Error::Capability(format!(
                "l_max = {l_max} exceeds smoothness order {}",
                self.smoothness_order
            )));
        }
        let cols = self.eval_partials(x, l_max)?;
        for l in 1..=l_max {
            let used: Vec<&PartialColumn> = cols
                .iter()
                .filter(|c| c.alpha.iter().sum::<u32>() as usize <= l)
                .collect();
            if numerical_rank(self.n(), &used) == self.n() {
                return Ok(Some(l));
            }
        }
        Ok(None)
    }
}

fn numerical_rank(rows: usize, cols: &[&PartialColumn]) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let mat = DMatrix::from_fn(rows, cols.len(), |r, c| cols[c].value[r]);
    let sv = mat.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_CUTOFF * smax).count()
}

fn unit_index(d: usize, i: usize) -> Vec<u32> {
    let mut a = vec![0u32; d];
    a[i] = 1;
    a
}

/// Multi-indices `α ∈ N^d` with `1 ≤ |α| ≤ order`, graded then lexicographic
/// (descending in the first coordinate).
pub fn multi_indices(d: usize, order: usize) -> Vec<Vec<u32>> {
    fn rec(d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == d - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(d, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for total in 1..=order as u32 {
        rec(d, total, &mut Vec::with_capacity(d), &mut out);
    }
    out
}

/// Points of a uniform grid with `per_axis` points per axis that lie in the closed unit ball.
pub fn ball_grid(d: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let per_axis = per_axis.max(2);
    let step = 2.0 / (per_axis - 1) as f64;
    let total = per_axis.pow(d as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut rem = idx;
        let mut x = Vec::with_capacity(d);
        for _ in 0..d {
            x.push(-1.0 + (rem % per_axis) as f64 * step);
            rem /= per_axis;
        }
        if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12 {
            out.push(x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parabola_and_moment_curve_values() {
        let p = MongeMap::parabola();
        assert_eq!(p.eval_map(&[0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(p.eval_map(&[0.5]).unwrap(), vec![0.5, 0.25]);
        let mc = MongeMap::moment_curve(3).unwrap();
        assert_eq!(mc.eval_map(&[0.5]).unwrap(), vec![0.5, 0.25, 0.125]);
        assert_eq!(mc.n(), 3);
    }

    #[test]
    fn outside_ball_is_a_domain_error() {
        let p = MongeMap::paraboloid(2).unwrap();
        assert!(matches!(p.eval_map(&[0.8, 0.8]), Err(Error::Domain(_))));
        assert!(matches!(
            MongeMap::parabola().eval_map(&[1.5]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn partials_of_builtins() {
        let p = MongeMap::parabola();
        let cols = p.eval_partials(&[0.0], 2).unwrap();
        assert_eq!(cols[0].value, vec![1.0, 0.0]);
        assert_eq!(cols[1].value, vec![0.0, 2.0]);

        let mc = MongeMap::moment_curve(3).unwrap();
        let cols = mc.eval_partials(&[0.0], 3).unwrap();
        assert_eq!(cols[2].alpha, vec![3]);
        assert_eq!(cols[2].value, vec![0.0, 0.0, 6.0]);

        let pb = MongeMap::paraboloid(2).unwrap();
        let cols = pb.eval_partials(&[0.0, 0.0], 1).unwrap();
        assert_eq!(cols.len(), 2);
        assert_eq!(cols[0].value, vec![1.0, 0.0, 0.0]);
        assert_eq!(cols[1].value, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn order_above_smoothness_is_rejected() {
        let p = MongeMap::parabola().with_smoothness(3);
        assert!(matches!(p.eval_partials(&[0.1], 4), Err(Error::Capability(_))));
        assert!(matches!(
            p.nondegeneracy_order(&[0.1], 4),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn nondegeneracy_orders() {
        let p = MongeMap::parabola();
        assert_eq!(p.nondegeneracy_order(&[0.3], 3).unwrap(), Some(2));
        let flat = MongeMap::flat(1, 1).unwrap();
        assert_eq!(flat.nondegeneracy_order(&[0.2], 5).unwrap(), None);
        let mc = MongeMap::moment_curve(3).unwrap();
        assert_eq!(mc.nondegeneracy_order(&[0.0], 3).unwrap(), Some(3));
        let sp = MongeMap::sphere_patch(2).unwrap();
        assert_eq!(sp.nondegeneracy_order(&[0.1, -0.4], 3).unwrap(), Some(2));
    }

    #[test]
    fn multi_index_enumeration() {
        let idx = multi_indices(2, 2);
        assert_eq!(
            idx,
            vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(multi_indices(3, 3).len(), 3 + 6 + 10);
    }

    #[test]
    fn hessian_bounds_dominate() {
        let pb = MongeMap::paraboloid(2).unwrap();
        // Hessian is 2I, Frobenius bound sqrt(8)
        assert!((pb.hessian_bound(0) - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(MongeMap::parabola().gradient_sup_on_grid(101), 2.0);
    }

    fn central_difference(m: &MongeMap, x: &[f64], comp: usize, var: usize, h: f64) -> f64 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[var] += h;
        xm[var] -= h;
        (m.component_value(comp, &xp) - m.component_value(comp, &xm)) / (2.0 * h)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn partials_match_finite_differences(
            t in -0.95f64..0.95, s in -0.6f64..0.6, which in 0usize..3
        ) {
            let (m, x) = match which {
                0 => (MongeMap::moment_curve(4).unwrap(), vec![t]),
                1 => (MongeMap::paraboloid(2).unwrap(), vec![t * 0.7, s]),
                _ => (MongeMap::sphere_patch(2).unwrap(), vec![t * 0.7, s]),
            };
            let cols = m.eval_partials(&x, 1).unwrap();
            for (var, col) in cols.iter().enumerate() {
                for k in 0..m.m() {
                    let fd = central_difference(&m, &x, k, var, 1e-4);
                    let exact = col.value[m.d() + k];
                    let scale = exact.abs().max(1.0);
                    prop_assert!((fd - exact).abs() <= 1e-6 * scale, "fd {} exact {}", fd, exact);
                }
            }
        }

        #[test]
        fn nondegeneracy_is_monotone_and_moment_curve_is_n(t in -1.0f64..1.0, n in 2usize..6) {
            let mc = MongeMap::moment_curve(n).unwrap();
            let l = mc.nondegeneracy_order(&[t], n + 2).unwrap();
            prop_assert_eq!(l, Some(n));
            for extra in n..=n + 2 {
                prop_assert_eq!(mc.nondegeneracy_order(&[t], extra).unwrap(), Some(n));
            }
        }
    }
}
