use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: BigRational,
    pub exps: Vec<u32>,
}

/// Multivariate polynomial with exact rational coefficients.
#[derive(Debug, Clone)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<Monomial>,
    float_terms: Vec<(f64, Vec<u32>)>,
    integer_form: Option<IntegerForm>,
}

/// `L·F` with integer coefficients, used to evaluate `q F(a/q)` exactly.
#[derive(Debug, Clone)]
struct IntegerForm {
    scale: i128,
    degree: u32,
    terms: Vec<(i128, Vec<u32>)>,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.terms == other.terms
    }
}

impl Polynomial {
    pub fn new(nvars: usize, terms: Vec<Monomial>) -> Result<Self> {
        for t in &terms {
            if t.exps.len() != nvars {
                return Err(Error::Parse(format!(
                    "monomial exponent vector has length {}, expected {nvars}",
                    t.exps.len()
                )));
            }
        }
        // merge like terms, drop zeros, keep a canonical order
        let mut merged: Vec<Monomial> = Vec::new();
        let mut sorted = terms;
        sorted.sort_by(|a, b| a.exps.cmp(&b.exps));
        for t in sorted {
            match merged.last_mut() {
                Some(last) if last.exps == t.exps => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| !t.coeff.is_zero());
        let float_terms = merged
            .iter()
            .map(|t| (t.coeff.to_f64().unwrap_or(f64::NAN), t.exps.clone()))
            .collect();
        let integer_form = IntegerForm::build(&merged);
        Ok(Polynomial {
            nvars,
            terms: merged,
            float_terms,
            integer_form,
        })
    }

    pub fn zero(nvars: usize) -> Self {
        Polynomial::new(nvars, Vec::new()).expect("empty polynomial is valid")
    }

    /// `coeff · x^exps` with an integer coefficient.
    pub fn monomial(nvars: usize, coeff: i64, exps: Vec<u32>) -> Result<Self> {
        Polynomial::new(
            nvars,
            vec![Monomial {
                coeff: BigRational::from_integer(BigInt::from(coeff)),
                exps,
            }],
        )
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exps.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, exps) in &self.float_terms {
            let mut v = *c;
            for (xi, &e) in x.iter().zip(exps) {
                if e > 0 {
                    v *= xi.powi(e as i32);
                }
            }
            acc += v;
        }
        acc
    }

    pub fn derivative(&self, var: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exps[var] > 0)
            .map(|t| {
                let mut exps = t.exps.clone();
                let e = exps[var];
                exps[var] -= 1;
                Monomial {
                    coeff: &t.coeff * BigRational::from_integer(BigInt::from(e)),
                    exps,
                }
            })
            .collect();
        Polynomial::new(self.nvars, terms).expect("derivative keeps arity")
    }

    /// `∂^alpha` of the polynomial.
    pub fn partial(&self, alpha: &[u32]) -> Polynomial {
        let mut p = self.clone();
        for (var, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                p = p.derivative(var);
            }
        }
        p
    }

    /// `Σ |c_α|`, an upper bound for `|p|` on the unit cube and hence the unit ball.
    pub fn abs_coeff_sum(&self) -> f64 {
        self.float_terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// Exact evaluation of `q·p(a/q)` split into the nearest integer and the
    /// signed residual. `None` when the integer form is unavailable or overflows.
    pub fn scaled_residual(&self, q: i64, a: &[i64]) -> Option<(i128, f64)> {
        self.integer_form.as_ref()?.scaled_residual(q, a)
    }
}

impl IntegerForm {
    fn build(terms: &[Monomial]) -> Option<Self> {
        let mut scale = BigInt::one();
        for t in terms {
            scale = scale.lcm(t.coeff.denom());
        }
        let scale_i = scale.to_i128()?;
        let degree = terms
            .iter()
            .map(|t| t.exps.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
            .max(1);
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            let c = (&t.coeff * BigRational::from_integer(scale.clone())).to_integer();
            out.push((c.to_i128()?, t.exps.clone()));
        }
        if scale_i <= 0 {
            return None;
        }
        Some(IntegerForm {
            scale: scale_i,
            degree,
            terms: out,
        })
    }

    fn scaled_residual(&self, q: i64, a: &[i64]) -> Option<(i128, f64)> {
        // q·F(a/q) = Σ c a^α q^{D-|α|} / (L q^{D-1})
        let q128 = q as i128;
        let mut num: i128 = 0;
        for (c, exps) in &self.terms {
            let mut v = *c;
            let mut total = 0u32;
            for (&ai, &e) in a.iter().zip(exps) {
                if e > 0 {
                    v = v.checked_mul((ai as i128).checked_pow(e)?)?;
                    total += e;
                }
            }
            v = v.checked_mul(q128.checked_pow(self.degree - total)?)?;
            num = num.checked_add(v)?;
        }
        let den = self.scale.checked_mul(q128.checked_pow(self.degree - 1)?)?;
        let twice = num.checked_mul(2)?;
        let nearest = twice.checked_add(den)?.div_euclid(den.checked_mul(2)?);
        let rem = num.checked_sub(nearest.checked_mul(den)?)?;
        Some((nearest, rem as f64 / den as f64))
    }
}
