//! Admissible weight tuples `(Ω, ω, w)` built from the template bump
//! `b(t) = exp(1 - 1/(1 - t²))` on `(-1, 1)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use parking_lot::RwLock;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::quadrature::{e, GaussLegendre, NeumaierSum};

/// Largest derivative order served by [`WeightTuple::derivative_sup`].
pub const MAX_DERIVATIVE_ORDER: usize = 6;

const NODES_PER_UNIT: usize = 256;
const TRANSFORM_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: u32 = 5;

/// Template bump, `b(0) = 1`, supported in `(-1, 1)`.
#[inline]
pub fn bump(t: f64) -> f64 {
    let u = 1.0 - t * t;
    if u <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / u).exp()
    }
}

/// `b^{(k)}(t) = b(t) P_k(t) / (1 - t²)^{2k}` with `P_k` stored as
/// ascending coefficients.
fn bump_derivative_numerators(max_order: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![1.0]];
    for k in 0..max_order {
        let p = &out[k];
        // P_{k+1} = P_k' u² + 4k t u P_k - 2t P_k with u = 1 - t²
        let u = [1.0, 0.0, -1.0];
        let u2 = poly_mul(&u, &u);
        let dp = poly_deriv(p);
        let a = poly_mul(&dp, &u2);
        let b = poly_scale(&poly_mul(&poly_mul(&[0.0, 1.0], &u), p), 4.0 * k as f64);
        let c = poly_scale(&poly_mul(&[0.0, 1.0], p), -2.0);
        out.push(poly_add(&poly_add(&a, &b), &c));
    }
    out
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

fn poly_scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

fn poly_deriv(a: &[f64]) -> Vec<f64> {
    if a.len() <= 1 {
        return vec![0.0];
    }
    a.iter().enumerate().skip(1).map(|(i, x)| i as f64 * x).collect()
}

fn poly_eval(a: &[f64], t: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// `k`-th derivative of the template bump.
pub fn bump_derivative(k: usize, t: f64) -> f64 {
    thread_local! {
        static NUMS: Vec<Vec<f64>> = bump_derivative_numerators(MAX_DERIVATIVE_ORDER);
    }
    let b = bump(t);
    if b == 0.0 {
        return 0.0;
    }
    if k == 0 {
        return b;
    }
    let u = 1.0 - t * t;
    NUMS.with(|nums| {
        let p = match nums.get(k) {
            Some(p) => poly_eval(p, t),
            None => poly_eval(&bump_derivative_numerators(k)[k], t),
        };
        b * p / u.powi(2 * k as i32)
    })
}

/// One-dimensional scaled bump `h · b((t - center) / radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
    #[serde(default = "one")]
    pub height: f64,
}

fn one() -> f64 {
    1.0
}

impl Bump {
    pub fn new(center: f64, radius: f64, height: f64) -> Self {
        Bump {
            center,
            radius,
            height,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.height * bump((t - self.center) / self.radius)
    }

    pub fn derivative(&self, k: usize, t: f64) -> f64 {
        self.height * bump_derivative(k, (t - self.center) / self.radius) / self.radius.powi(k as i32)
    }

    /// Open support `(lo, hi)`.
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// Which member of the tuple an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightFn {
    /// `Ω`, through its radial profile `s ↦ Ω(s e_1)`.
    BigOmega,
    Omega,
    W,
}

/// Template parameters of a tuple, as accepted in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    /// `Ω(x) = h · b(‖x‖ / radius)`; the center is the origin.
    pub big_omega: Bump,
    pub omega: Bump,
    /// `w` must be centered at 0.
    pub w: Bump,
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec {
            big_omega: Bump::new(0.0, 0.5, 1.0),
            omega: Bump::new(0.75, 0.25, 1.0),
            w: Bump::new(0.0, 1.0, 1.0),
        }
    }
}

/// An admissible tuple `(Ω, ω, w)` on `R^d × R × R`.
#[derive(Debug, Clone)]
pub struct WeightTuple {
    d: usize,
    spec: WeightSpec,
    cache: Arc<RwLock<HashMap<(WeightFn, u64), Complex64>>>,
}

impl WeightTuple {
    /// `Ω(x) = b(2‖x‖)`, `ω(y) = b(4y - 3)`, `w(z) = b(z)`.
    pub fn canonical(d: usize) -> Self {
        WeightTuple::from_spec(d, WeightSpec::default()).expect("canonical tuple is admissible")
    }

    pub fn from_spec(d: usize, spec: WeightSpec) -> Result<Self> {
        let bad = |msg: &str| Err(Error::Parameter(format!("inadmissible weight tuple: {msg}")));
        if d == 0 {
            return bad("d must be >= 1");
        }
        for b in [spec.big_omega, spec.omega, spec.w] {
            if !(b.radius > 0.0 && b.radius.is_finite()) {
                return bad("radii must be positive");
            }
            if !(b.height > 0.0 && b.height <= 1.0) {
                return bad("heights must lie in (0, 1]");
            }
        }
        if spec.big_omega.center != 0.0 || spec.big_omega.radius > 0.5 {
            return bad("Omega must be centered at 0 with radius <= 1/2");
        }
        let (lo, hi) = spec.omega.support();
        if lo < 0.5 || hi > 1.0 {
            return bad("omega must be supported in [1/2, 1]");
        }
        if spec.w.center != 0.0 || spec.w.radius > 1.0 {
            return bad("w must be centered at 0 with radius <= 1");
        }
        Ok(WeightTuple {
            d,
            spec,
            cache: Arc::new(RwLock::new(HashMap::new())),
        })
    }

    /// Same tuple with `w` multiplied pointwise by `lambda ∈ (0, 1]`.
    pub fn with_w_height(&self, lambda: f64) -> Result<Self> {
        let mut spec = self.spec;
        spec.w.height *= lambda;
        WeightTuple::from_spec(self.d, spec)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    #[inline]
    pub fn big_omega(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.spec.big_omega.eval(r2.sqrt())
    }

    /// Radius of the ball supporting `Ω`.
    pub fn big_omega_radius(&self) -> f64 {
        self.spec.big_omega.radius
    }

    #[inline]
    pub fn omega(&self, y: f64) -> f64 {
        self.spec.omega.eval(y)
    }

    pub fn omega_support(&self) -> (f64, f64) {
        self.spec.omega.support()
    }

    #[inline]
    pub fn w(&self, z: f64) -> f64 {
        self.spec.w.eval(z)
    }

    pub fn w_radius(&self) -> f64 {
        self.spec.w.radius
    }

    fn profile(&self, which: WeightFn) -> Bump {
        match which {
            WeightFn::BigOmega => self.spec.big_omega,
            WeightFn::Omega => self.spec.omega,
            WeightFn::W => self.spec.w,
        }
    }

    /// `sup |f^{(order)}|` over a grid of at least 4096 points per unit length.
    pub fn derivative_sup(&self, which: WeightFn, order: usize) -> Result<f64> {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::Capability(format!(
                "derivative order {order} exceeds {MAX_DERIVATIVE_ORDER}"
            )));
        }
        let b = self.profile(which);
        let (lo, hi) = b.support();
        let points = ((hi - lo) * 4096.0).ceil() as usize + 1;
        let points = points.max(8193);
        let h = (hi - lo) / (points - 1) as f64;
        Ok((0..points)
            .map(|i| b.derivative(order, lo + i as f64 * h).abs())
            .fold(0.0, f64::max))
    }

    /// `f̂(ξ) = ∫ f(z) e(-ξ z) dz` for the one-dimensional members (`ω`, `w`, or the
    /// radial profile of `Ω`), memoized per argument.
    pub fn fourier_transform(&self, which: WeightFn, xi: f64) -> Result<Complex64> {
        let key = (which, xi.to_bits());
        if let Some(v) = self.cache.read().get(&key) {
            return Ok(*v);
        }
        let v = transform_uncached(&self.profile(which), xi)?;
        self.cache.write().entry(key).or_insert(v);
        Ok(v)
    }

    /// `ŵ(ξ)`, real because `w` is even.
    pub fn w_hat(&self, xi: f64) -> Result<f64> {
        Ok(self.fourier_transform(WeightFn::W, xi)?.re)
    }

    /// `∫ Ω` over `R^d`.
    pub fn integral_big_omega(&self) -> f64 {
        let b = self.spec.big_omega;
        let d = self.d as i32;
        // polar coordinates: |S^{d-1}| ρ^d ∫_0^1 b(s) s^{d-1} ds
        let radial = integrate_smooth(0.0, 1.0, |s| bump(s) * s.powi(d - 1));
        b.height * sphere_area(self.d) * b.radius.powi(d) * radial
    }

    /// `∫ y^d ω(y) dy`.
    pub fn integral_y_pow_d_omega(&self) -> f64 {
        let (lo, hi) = self.omega_support();
        let d = self.d as i32;
        integrate_smooth(lo, hi, |y| y.powi(d) * self.omega(y))
    }

    /// `∫ w = ŵ(0)`.
    pub fn integral_w(&self) -> f64 {
        let (lo, hi) = self.spec.w.support();
        integrate_smooth(lo, hi, |z| self.w(z))
    }
}

fn transform_uncached(b: &Bump, xi: f64) -> Result<Complex64> {
    let (lo, hi) = b.support();
    let len = hi - lo;
    let panels = len.ceil().max(1.0) as usize;
    let mut order = ((NODES_PER_UNIT as f64 * len / panels as f64).ceil() as usize).max(16);
    let mut prev = transform_with(b, xi, order, panels);
    for _ in 0..MAX_DOUBLINGS {
        order *= 2;
        let next = transform_with(b, xi, order, panels);
        if (next - prev).norm() <= TRANSFORM_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "Fourier transform at xi = {xi} did not stabilise"
    )))
}

fn transform_with(b: &Bump, xi: f64, order: usize, panels: usize) -> Complex64 {
    let (lo, hi) = b.support();
    let rule = GaussLegendre::get(order);
    let (xs, ws) = rule.mapped(lo, hi, panels);
    let mut re = NeumaierSum::default();
    let mut im = NeumaierSum::default();
    for (z, wt) in xs.iter().zip(&ws) {
        let v = wt * b.eval(*z) * e(-xi * z);
        re.add(v.re);
        im.add(v.im);
    }
    Complex64::new(re.value(), im.value())
}

/// Integral of a smooth compactly supported integrand by doubling Gauss–Legendre.
fn integrate_smooth<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let mut order = 256;
    let mut prev = GaussLegendre::get(order).integrate(a, b, 1, &f);
    for _ in 0..MAX_DOUBLINGS {
        order *= 2;
        let next = GaussLegendre::get(order).integrate(a, b, 1, &f);
        if (next - prev).abs() <= 1e-14 * next.abs().max(1.0) {
            return next;
        }
        prev = next;
    }
    prev
}

/// Surface area of the unit sphere `S^{d-1}`, `2 π^{d/2} / Γ(d/2)`.
pub fn sphere_area(d: usize) -> f64 {
    // Γ(d/2) by the half-integer recurrence
    let mut gamma = if d.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut k = if d.is_multiple_of(2) { 1.0 } else { 0.5 };
    while k < d as f64 / 2.0 - 1e-9 {
        gamma *= k;
        k += 1.0;
    }
    2.0 * PI.powf(d as f64 / 2.0) / gamma
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn canonical_values() {
        let t = WeightTuple::canonical(1);
        assert_eq!(t.w(0.0), 1.0);
        assert_eq!(t.omega(0.75), 1.0);
        assert_eq!(t.big_omega(&[0.5]), 0.0);
        assert_eq!(t.big_omega(&[-0.7]), 0.0);
        assert_eq!(t.big_omega(&[0.0]), 1.0);
        let t2 = WeightTuple::canonical(2);
        assert_eq!(t2.big_omega(&[0.3, 0.4]), 0.0);
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(1), 2.0, epsilon = 1e-15);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, epsilon = 1e-14);
    }

    #[test]
    fn derivative_numerators_match_finite_differences() {
        for k in 0..5 {
            for t in [-0.8, -0.3, 0.0, 0.25, 0.6] {
                let h = 1e-5;
                let fd = (bump_derivative(k, t + h) - bump_derivative(k, t - h)) / (2.0 * h);
                let exact = bump_derivative(k + 1, t);
                assert!(
                    (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
                    "k={k} t={t}: {fd} vs {exact}"
                );
            }
        }
        assert_eq!(bump_derivative(6, 1.0 - 1e-200), 0.0);
    }

    #[test]
    fn inadmissible_tuples_rejected() {
        let spec = WeightSpec {
            omega: Bump::new(0.5, 0.25, 1.0),
            ..Default::default()
        };
        assert!(WeightTuple::from_spec(1, spec).is_err());
        let spec = WeightSpec {
            w: Bump::new(0.1, 0.5, 1.0),
            ..Default::default()
        };
        assert!(WeightTuple::from_spec(1, spec).is_err());
        let mut spec = WeightSpec::default();
        spec.big_omega.height = 1.5;
        assert!(WeightTuple::from_spec(1, spec).is_err());
    }

    #[test]
    fn derivative_sup_orders() {
        let t = WeightTuple::canonical(1);
        assert_eq!(t.derivative_sup(WeightFn::W, 0).unwrap(), 1.0);
        assert!(matches!(
            t.derivative_sup(WeightFn::W, 7),
            Err(Error::Capability(_))
        ));
        let w1 = t.derivative_sup(WeightFn::W, 1).unwrap();
        let big1 = t.derivative_sup(WeightFn::BigOmega, 1).unwrap();
        // Ω's profile is w compressed by a factor 2
        assert_relative_eq!(big1, 2.0 * w1, max_relative = 1e-6);
    }

    #[test]
    fn transform_of_w_is_real_and_even() {
        let t = WeightTuple::canonical(1);
        for xi in [0.3, 1.7, 4.2, 11.0] {
            let p = t.fourier_transform(WeightFn::W, xi).unwrap();
            let m = t.fourier_transform(WeightFn::W, -xi).unwrap();
            assert!(p.im.abs() < 1e-14);
            assert!((p.re - m.re).abs() < 1e-12);
        }
        assert_relative_eq!(t.w_hat(0.0).unwrap(), t.integral_w(), epsilon = 1e-12);
    }

    #[test]
    fn transform_of_shifted_bump_has_modulated_phase() {
        let t = WeightTuple::canonical(1);
        // ω(y) = w(4y - 3) so ω̂(ξ) = e(-3ξ/4) ŵ(ξ/4) / 4
        for xi in [0.5, 2.0, 7.5] {
            let lhs = t.fourier_transform(WeightFn::Omega, xi).unwrap();
            let rhs = e(-0.75 * xi) * t.w_hat(xi / 4.0).unwrap() / 4.0;
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
