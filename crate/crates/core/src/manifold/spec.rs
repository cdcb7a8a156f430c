//! Manifold specification files and builtin names.
//!
//! A file is TOML:
//!
//! ```toml
//! name = "twisted cubic"
//! d = 1
//! m = 2
//! l_claimed = 3
//! components = [
//!     [[1, 1, [2]]],
//!     [[1, 1, [3]], [-1, 2, [1]]],
//! ]
//! ```
//!
//! Each component is a list of `[coeff_num, coeff_den, exponent_vector]` triples.

use num_bigint::BigInt;
use num_rational::BigRational;
use toml::Value;

use super::{MongeMap, Monomial, Polynomial, DEFAULT_SMOOTHNESS};
use crate::error::{Error, Result};

/// Resolve a builtin name such as `parabola`, `moment_curve(3)`, `paraboloid(2)`,
/// `sphere_patch(2)` or `flat(1,1)`. Returns `Ok(None)` if the name is not a builtin.
pub fn parse_builtin(name: &str) -> Result<Option<MongeMap>> {
    let name = name.trim();
    let (head, args) = match name.find('(') {
        Some(i) => {
            let inner = name[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("unbalanced parenthesis in `{name}`")))?;
            let args = inner
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad argument `{s}` in `{name}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            (&name[..i], args)
        }
        None => (name, Vec::new()),
    };
    let one = |default: usize| -> Result<usize> {
        match args.as_slice() {
            [] => Ok(default),
            [a] => Ok(*a),
            _ => Err(Error::Parse(format!("`{head}` takes one argument"))),
        }
    };
    let m = match head {
        "parabola" if args.is_empty() => MongeMap::parabola(),
        "moment_curve" => MongeMap::moment_curve(one(3)?)?,
        "paraboloid" => MongeMap::paraboloid(one(2)?)?,
        "sphere_patch" => MongeMap::sphere_patch(one(2)?)?,
        "flat" => match args.as_slice() {
            [] => MongeMap::flat(1, 1)?,
            [d] => MongeMap::flat(*d, 1)?,
            [d, m] => MongeMap::flat(*d, *m)?,
            _ => return Err(Error::Parse("`flat` takes at most two arguments".into())),
        },
        _ => return Ok(None),
    };
    Ok(Some(m))
}

/// Parse a TOML manifold specification.
pub fn parse_manifold_spec(text: &str) -> Result<MongeMap> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let get_usize = |key: &str| -> Result<Option<usize>> {
        match table.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(other) => Err(Error::Parse(format!(
                "`{key}` must be a non-negative integer, got {other}"
            ))),
        }
    };
    let d = get_usize("d")?.ok_or_else(|| Error::Parse("missing field `d`".into()))?;
    let m = get_usize("m")?.ok_or_else(|| Error::Parse("missing field `m`".into()))?;
    if d == 0 || m == 0 {
        return Err(Error::Parse("`d` and `m` must be at least 1".into()));
    }
    let comps = match table.get("components") {
        Some(Value::Array(a)) => a,
        _ => return Err(Error::Parse("missing array `components`".into())),
    };
    if comps.len() != m {
        return Err(Error::Parse(format!(
            "`components` has {} entries, but m = {m}",
            comps.len()
        )));
    }
    let mut polys = Vec::with_capacity(m);
    for (k, comp) in comps.iter().enumerate() {
        let list = comp
            .as_array()
            .ok_or_else(|| Error::Parse(format!("component {k} is not a list")))?;
        let mut terms = Vec::with_capacity(list.len());
        for entry in list {
            terms.push(parse_monomial(entry, d, k)?);
        }
        polys.push(Polynomial::new(d, terms)?);
    }
    let name = match table.get("name") {
        Some(Value::String(s)) => s.clone(),
        None => "custom".to_string(),
        Some(_) => return Err(Error::Parse("`name` must be a string".into())),
    };
    let mut map = MongeMap::from_polynomials(name, d, polys)?;
    map = map.with_smoothness(get_usize("smoothness_order")?.unwrap_or(DEFAULT_SMOOTHNESS));
    if let Some(l) = get_usize("l_claimed")? {
        map = map.with_l_claimed(l);
    }
    Ok(map)
}

fn parse_monomial(entry: &Value, d: usize, k: usize) -> Result<Monomial> {
    let bad = || {
        Error::Parse(format!(
            "component {k}: monomials must be [coeff_num, coeff_den, [e_1, ..., e_{d}]]"
        ))
    };
    let parts = entry.as_array().ok_or_else(bad)?;
    let [num, den, exps] = parts.as_slice() else {
        return Err(bad());
    };
    let num = num.as_integer().ok_or_else(bad)?;
    let den = den.as_integer().ok_or_else(bad)?;
    if den == 0 {
        return Err(Error::Parse(format!("component {k}: zero denominator")));
    }
    let exps = exps
        .as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|e| match e.as_integer() {
            Some(v) if (0..=u32::MAX as i64).contains(&v) => Ok(v as u32),
            _ => Err(bad()),
        })
        .collect::<Result<Vec<u32>>>()?;
    if exps.len() != d {
        return Err(bad());
    }
    Ok(Monomial {
        coeff: BigRational::new(BigInt::from(num), BigInt::from(den)),
        exps,
    })
}
