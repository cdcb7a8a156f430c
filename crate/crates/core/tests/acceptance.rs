//! Acceptance checks. Prints one PASS/FAIL line per criterion; a FAIL is a
//! finding to report, not a harness error, so the binary exits 0 either way.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ratpoints_core::counting::{self, ConstCutoff, CountParams, Cutoff};
use ratpoints_core::fourier::{self, DEFAULT_DIRECT_BUDGET, DEFAULT_GRID_BUDGET};
use ratpoints_core::regimes::{self, Q as Rat};
use ratpoints_core::sublevel::{self, CutoffFunction, SetSpec, SublevelParams};
use ratpoints_core::weights::WeightTuple;
use ratpoints_core::MongeMap;

// ---- tolerances, as stated in the acceptance list ----
const C1_RATIO_BAND: (f64, f64) = (0.85, 1.15);
const C1_SECONDS: f64 = 60.0;
const C2_REL_TOL: f64 = 1e-5;
const C2_SECONDS: f64 = 120.0;
const C3_REL_TOL: f64 = 1e-9;
const C3_SECONDS: f64 = 60.0;
const C4_TOL: f64 = 1e-5;
const C4_SECONDS: f64 = 10.0;
const C5_SECONDS: f64 = 300.0;
const C6_SECONDS: f64 = 120.0;
const C8_SECONDS: f64 = 1.0;
const C9_TOL_VPRIME: f64 = 1e-6;
const C9_TOL_C: f64 = 1e-8;
const C9_SECONDS: f64 = 60.0;

// ---- independent oracles ----

fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

fn big_omega(x: f64) -> f64 {
    bump(2.0 * x)
}

fn small_omega(y: f64) -> f64 {
    bump(4.0 * y - 3.0)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `ŵ(ξ) = 2 ∫_0^1 b(z) cos(2π z ξ) dz`.
fn w_hat(xi: f64) -> f64 {
    2.0 * simpson(
        |z| bump(z) * (2.0 * std::f64::consts::PI * z * xi).cos(),
        0.0,
        1.0,
        20_000,
    )
}

/// Smooth count of the parabola with the canonical tuple by direct enumeration.
fn parabola_smooth_count(delta: f64, q_max: u64) -> f64 {
    let qf = q_max as f64;
    let mut total = 0.0;
    for q in 1..=q_max {
        let wq = small_omega(q as f64 / qf);
        if wq == 0.0 {
            continue;
        }
        let qi = q as i128;
        for a in -(qi / 2)..=(qi / 2) {
            let x = a as f64 / q as f64;
            let om = big_omega(x);
            if om == 0.0 {
                continue;
            }
            let rem = (a * a).rem_euclid(qi);
            let dist = rem.min(qi - rem) as f64 / q as f64;
            total += om * wq * bump(dist / delta);
        }
    }
    total
}

fn parabola_leading_constant() -> f64 {
    let a = simpson(big_omega, -0.5, 0.5, 200_000);
    let b = simpson(|y| y * small_omega(y), 0.5, 1.0, 200_000);
    let c = simpson(bump, -1.0, 1.0, 200_000);
    a * b * c
}

// ---- reporting ----

struct Report {
    passed: usize,
    failed: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, ok: bool, elapsed: f64, limit: Option<f64>, detail: String) {
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = ok && in_time;
        if pass {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        let time = match limit {
            Some(l) => format!("{elapsed:.2}s/{l:.0}s"),
            None => format!("{elapsed:.2}s"),
        };
        println!(
            "criterion {id:>2} [{}] {name} ({time}): {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }

    fn info(&self, id: u32, text: String) {
        println!("criterion {id:>2} [info] {text}");
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool")
        .install(f)
}

fn criterion_1(rep: &mut Report) {
    let start = Instant::now();
    let par = MongeMap::parabola();
    let t = WeightTuple::canonical(1);
    let res = single_thread(|| {
        [500u64, 1000, 2000]
            .iter()
            .map(|&q| counting::smooth_count(&par, &t, &CountParams::new(0.3, q)))
            .collect::<Result<Vec<_>, _>>()
    });
    let elapsed = start.elapsed().as_secs_f64();
    let res = match res {
        Ok(r) => r,
        Err(e) => {
            return rep.line(
                1,
                "asymptotic ratio",
                false,
                elapsed,
                Some(C1_SECONDS),
                format!("error: {e}"),
            )
        }
    };
    let ct = parabola_leading_constant();
    let oracle_ratio = parabola_smooth_count(0.3, 500) / (ct * 0.3 * 500.0 * 500.0);
    let ratios: Vec<f64> = res.iter().map(|r| r.ratio()).collect();
    let devs: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let in_band = ratios[0] >= C1_RATIO_BAND.0 && ratios[0] <= C1_RATIO_BAND.1;
    let monotone = devs.windows(2).all(|w| w[1] <= w[0]);
    let agrees = rel(ratios[0], oracle_ratio) < 1e-9;
    rep.line(
        1,
        "asymptotic ratio",
        in_band && monotone && agrees,
        elapsed,
        Some(C1_SECONDS),
        format!(
            "ratios {:.6} {:.6} {:.6} (band [{}, {}], |r-1| nonincreasing: {monotone}); oracle ratio at Q=500 {:.6}",
            ratios[0], ratios[1], ratios[2], C1_RATIO_BAND.0, C1_RATIO_BAND.1, oracle_ratio
        ),
    );
}

fn criterion_2(rep: &mut Report) {
    let start = Instant::now();
    let par = MongeMap::parabola();
    let t = WeightTuple::canonical(1);
    let p = CountParams::new(0.3, 100).with_eta(0.3);
    // At this Q the sub-level cutoff is 1 on all of supp Ω, which would leave
    // an empty good part; the identity is checked on the whole count instead.
    let sub_fraction = CutoffFunction::for_count(&par, &p, fourier::c_f(&par))
        .map(|c| fourier::omega_weighted_fraction(&t, &c));
    let cutoff: Box<dyn Cutoff> = Box::new(ConstCutoff(0.0));
    let label = match sub_fraction {
        Ok(f) => format!(
            "W = 0 (sub-level cutoff carries {:.1}% of the Omega mass)",
            100.0 * f
        ),
        Err(e) => format!("W = 0 (sub-level cutoff unavailable: {e})"),
    };
    let dec = fourier::decompose(&par, &t, &p, cutoff.as_ref(), DEFAULT_DIRECT_BUDGET);
    let elapsed = start.elapsed().as_secs_f64();
    let dec = match dec {
        Ok(d) => d,
        Err(e) => {
            return rep.line(
                2,
                "decomposition identity",
                false,
                elapsed,
                Some(C2_SECONDS),
                format!("error: {e}"),
            )
        }
    };
    // oracle: E from an independently integrated ŵ, summed term by term
    let j_cut = dec.j_cut as usize;
    let hats: Vec<f64> = (0..=j_cut).map(|j| w_hat(0.3 * j as f64)).collect();
    let (mut n_good, mut e_oracle) = (0.0, 0.0);
    for q in 1..=100i128 {
        let wq = small_omega(q as f64 / 100.0);
        if wq == 0.0 {
            continue;
        }
        for a in -(q / 2)..=(q / 2) {
            let x = a as f64 / q as f64;
            let amp = big_omega(x) * (1.0 - cutoff.eval(&[x])) * wq;
            if amp == 0.0 {
                continue;
            }
            let rem = (a * a).rem_euclid(q);
            let r = rem as f64 / q as f64;
            let dist = rem.min(q - rem) as f64 / q as f64;
            n_good += amp * bump(dist / 0.3);
            let s: f64 = (1..=j_cut)
                .map(|j| hats[j] * (2.0 * std::f64::consts::PI * j as f64 * r).cos())
                .sum();
            e_oracle += amp * 0.3 * 2.0 * s;
        }
    }
    let resid = (dec.good - dec.main - dec.error_direct).abs();
    let ok = dec.good > 0.0 && resid <= C2_REL_TOL * dec.good;
    rep.line(
        2,
        "decomposition identity",
        ok,
        elapsed,
        Some(C2_SECONDS),
        format!(
            "{label}, J = {}: |N_good - M - E| / N_good = {:.3e} (tol {C2_REL_TOL:e}); truncation budget / N_good = {:.3e}; \
             oracle N_good rel diff {:.1e}, oracle E rel diff {:.1e}",
            dec.j_cut,
            resid / dec.good.abs(),
            dec.truncation_bound / dec.good.abs(),
            rel(dec.good, n_good),
            rel(dec.error_direct, e_oracle),
        ),
    );
}

/// Smooth cutoff used alongside the sub-level one in the additivity matrix.
struct WaveCutoff;

impl Cutoff for WaveCutoff {
    fn eval(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().enumerate().map(|(i, v)| (i as f64 + 3.0) * v).sum();
        0.5 * (1.0 + (7.0 * s).sin())
    }
}

fn criterion_3(rep: &mut Report) {
    let start = Instant::now();
    let maps = [
        (MongeMap::parabola(), [200u64, 600]),
        (MongeMap::moment_curve(3).expect("builtin"), [100, 300]),
        (MongeMap::paraboloid(2).expect("builtin"), [30, 60]),
    ];
    let mut worst: f64 = 0.0;
    let mut min_share: f64 = 1.0;
    let mut configs = 0;
    let mut errors = Vec::new();
    for (m, qs) in &maps {
        let t = WeightTuple::canonical(m.d());
        let cf = fourier::c_f(m);
        for &q in qs {
            let p = CountParams::new(0.3, q).with_eta(0.05);
            let sub: Box<dyn Cutoff> = match CutoffFunction::for_count(m, &p, cf) {
                Ok(c) => Box::new(c),
                Err(e) => {
                    errors.push(format!("{} Q={q}: {e}", m.name()));
                    Box::new(ConstCutoff(0.25))
                }
            };
            for cutoff in [sub.as_ref(), &WaveCutoff as &dyn Cutoff] {
                configs += 1;
                let total = counting::smooth_count(m, &t, &p).map(|r| r.value);
                let split = counting::split_count(m, &t, &p, cutoff);
                match (total, split) {
                    (Ok(total), Ok(s)) => {
                        worst = worst.max(rel(s.good + s.sub, total));
                        min_share = min_share.min(s.good.min(s.sub) / total);
                    }
                    (Err(e), _) | (_, Err(e)) => errors.push(format!("{} Q={q}: {e}", m.name())),
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    rep.line(
        3,
        "additivity",
        errors.is_empty() && configs == 12 && worst <= C3_REL_TOL,
        elapsed,
        Some(C3_SECONDS),
        format!(
            "{configs} configurations, max |good + sub - total| / total = {worst:.2e} (tol {C3_REL_TOL:e}); \
             smallest part share {min_share:.3}{}",
            if errors.is_empty() {
                String::new()
            } else {
                format!("; errors: {}", errors.join("; "))
            }
        ),
    );
}

fn criterion_4(rep: &mut Report) {
    let start = Instant::now();
    let t = WeightTuple::canonical(1);
    let delta = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut err = None;
    for _ in 0..1000 {
        let x: f64 = rng.random_range(-0.5..0.5);
        match fourier::truncated_expansion(&t, delta, x, 200) {
            Ok(v) => worst = worst.max((bump(x.abs() / delta) - v).abs()),
            Err(e) => {
                err = Some(e.to_string());
                break;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    // oracle tail bound from the independently integrated transform
    let mut tail = 0.0;
    let mut j = 201u32;
    while delta * j as f64 <= 60.0 {
        tail += w_hat(delta * j as f64).abs();
        j += 1;
    }
    tail *= 2.0 * delta;
    rep.line(
        4,
        "truncated Poisson",
        err.is_none() && worst <= C4_TOL,
        elapsed,
        Some(C4_SECONDS),
        match err {
            Some(e) => format!("error: {e}"),
            None => format!(
                "max error {worst:.3e} over 1000 points (tol {C4_TOL:e}); oracle tail bound {tail:.3e}"
            ),
        },
    );
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, Vec<f64>) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let weights: Vec<f64> = xs.iter().map(|x| (x - mx) / sxx).collect();
    let slope = weights.iter().zip(ys).map(|(w, y)| w * y).sum();
    (slope, weights)
}

fn criterion_5(rep: &mut Report) {
    let start = Instant::now();
    let par = MongeMap::parabola();
    let cf = fourier::c_f(&par);
    let qs = [1000u64, 4000, 16000];
    let mut lq = Vec::new();
    let mut lm = Vec::new();
    let mut lb = Vec::new();
    let mut rel_hw = Vec::new();
    for &q in &qs {
        let out = sublevel::choose_params(0.3, q, 0.05, cf, 2).and_then(|sp| {
            let est = sublevel::measure_estimate(&par, &sp, 100_000, 42, 1.0)?;
            let b = sublevel::bkm_bound(&sp, 1, 2, 2, 1.0)?;
            Ok((est, b))
        });
        match out {
            Ok((est, b)) => {
                lq.push((q as f64).ln());
                lm.push(est.measure.ln());
                lb.push(b.base.ln());
                rel_hw.push(est.ci_halfwidth / est.measure);
            }
            Err(e) => {
                let elapsed = start.elapsed().as_secs_f64();
                return rep.line(
                    5,
                    "sub-level slope",
                    false,
                    elapsed,
                    Some(C5_SECONDS),
                    format!("error at Q={q}: {e}"),
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let (s_meas, w) = fit_slope(&lq, &lm);
    let (s_base, _) = fit_slope(&lq, &lb);
    // confidence half-widths propagated through the least-squares weights
    let slack: f64 = w.iter().zip(&rel_hw).map(|(wi, h)| wi.abs() * h).sum();
    let alpha = 1.0 / 9.0;
    let predicted_base_slope = -1.5 + 7.0 * 0.05;
    rep.line(
        5,
        "sub-level slope",
        s_meas <= alpha * s_base + 2.0 * slack,
        elapsed,
        Some(C5_SECONDS),
        format!(
            "measures {:.4} {:.4} {:.4}; fitted slope {s_meas:.4} <= alpha * base slope {:.4} + 2 * {slack:.4} \
             (base slope {s_base:.4}, closed form {predicted_base_slope:.4})",
            lm[0].exp(),
            lm[1].exp(),
            lm[2].exp(),
            alpha * s_base,
        ),
    );
}

struct CutoffCheck {
    range_ok: bool,
    sp_points: usize,
    one_fail: usize,
    positive: usize,
    support_fail: usize,
    c: f64,
    c_bound: f64,
}

fn check_cutoff(m: &MongeMap, sp: &SublevelParams, f: &CutoffFunction, points: &[Vec<f64>]) -> CutoffCheck {
    let dbl = sp.doubled();
    let r = sp.r;
    let h = 1e-3 * r;
    let mut out = CutoffCheck {
        range_ok: true,
        sp_points: 0,
        one_fail: 0,
        positive: 0,
        support_fail: 0,
        c: 0.0,
        c_bound: 8.0 * f.stats().support_multiplicity as f64,
    };
    for x in points {
        let w = f.value(x);
        out.range_ok &= (0.0..=1.0).contains(&w);
        if sublevel::membership(m, x, sp).expect("membership").is_some() {
            out.sp_points += 1;
            if w != 1.0 {
                out.one_fail += 1;
            }
        }
        if w > 0.0 {
            out.positive += 1;
            if sublevel::membership(m, x, &dbl).expect("membership").is_none() {
                out.support_fail += 1;
            }
        }
        for k in 0..x.len() {
            let mut a = x.clone();
            let mut b = x.clone();
            a[k] += h;
            b[k] -= h;
            if a.iter().map(|v| v * v).sum::<f64>() < 1.0 && b.iter().map(|v| v * v).sum::<f64>() < 1.0 {
                let g = (f.value(&a) - f.value(&b)).abs() / (2.0 * h);
                out.c = out.c.max(g * r);
            }
        }
    }
    out
}

fn sample_points(d: usize, n: usize, f: &CutoffFunction, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(2 * n);
    while pts.len() < n {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            pts.push(x);
        }
    }
    // extra points inside included balls, where both contracts bite
    let inc: Vec<&Vec<f64>> = f
        .centers()
        .iter()
        .zip(f.included())
        .filter_map(|(c, &i)| i.then_some(c))
        .collect();
    if !inc.is_empty() {
        let mut extra = 0;
        while extra < n {
            let c = inc[rng.random_range(0..inc.len())];
            let x: Vec<f64> = c
                .iter()
                .map(|v| v + f.r() * rng.random_range(-1.0..1.0))
                .collect();
            if x.iter().map(|v| v * v).sum::<f64>() < 1.0 {
                pts.push(x);
                extra += 1;
            }
        }
    }
    pts
}

fn criterion_6(rep: &mut Report) {
    let start = Instant::now();
    let par = MongeMap::parabola();
    let matrix: Vec<(MongeMap, f64, u64, f64)> = vec![
        (par.clone(), 0.3, 200, 0.05),
        (par.clone(), 0.3, 1000, 0.05),
        (par.clone(), 0.1, 1000, 0.05),
        (par.clone(), 0.3, 4000, 0.05),
        (par.clone(), 0.3, 1000, 0.125),
        (par.clone(), 0.45, 10_000, 0.125),
        (MongeMap::moment_curve(3).expect("builtin"), 0.3, 1000, 0.05),
        (MongeMap::paraboloid(2).expect("builtin"), 0.3, 200, 0.05),
        (MongeMap::paraboloid(2).expect("builtin"), 0.3, 1000, 0.125),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut all_ok = true;
    let mut c_max: f64 = 0.0;
    let mut c_bound = f64::INFINITY;
    let mut rows = Vec::new();
    let (mut sp_total, mut one_total, mut pos_total, mut sup_total) = (0, 0, 0, 0);
    for (m, delta, q, eta) in &matrix {
        let built = sublevel::choose_params(*delta, *q, *eta, fourier::c_f(m), m.n())
            .and_then(|sp| sublevel::build_cutoff(m, &sp).map(|f| (sp, f)));
        let (sp, f) = match built {
            Ok(v) => v,
            Err(e) => {
                all_ok = false;
                rows.push(format!("{} d={delta} Q={q} eta={eta}: error {e}", m.name()));
                continue;
            }
        };
        let pts = sample_points(m.d(), 2000, &f, &mut rng);
        let c = check_cutoff(m, &sp, &f, &pts);
        all_ok &= c.range_ok && c.one_fail == 0 && c.support_fail == 0;
        c_max = c_max.max(c.c);
        c_bound = c_bound.min(c.c_bound);
        sp_total += c.sp_points;
        one_total += c.one_fail;
        pos_total += c.positive;
        sup_total += c.support_fail;
        rows.push(format!(
            "{} delta={delta} Q={q} eta={eta}: support misses {}/{}",
            m.name(),
            c.support_fail,
            c.positive
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let grad_ok = c_max <= c_bound;
    rep.line(
        6,
        "cutoff properties",
        all_ok && grad_ok,
        elapsed,
        Some(C6_SECONDS),
        format!(
            "{} configurations; W=1 at {}/{} sampled S_p points; r|grad W| <= C = {c_max:.3} (bound {c_bound}); \
             support check {}/{} points with W > 0 lie in S_2p",
            matrix.len(),
            sp_total - one_total,
            sp_total,
            pos_total - sup_total,
            pos_total
        ),
    );
    for r in rows {
        rep.info(6, r);
    }
    // one configuration far out, where the stability estimate for S_p kicks in
    let t0 = Instant::now();
    let q = 10_000_000_000u64;
    match sublevel::choose_params(0.3, q, 0.125, fourier::c_f(&par), 2)
        .and_then(|sp| sublevel::build_cutoff(&par, &sp).map(|f| (sp, f)))
    {
        Ok((sp, f)) => {
            let pts = sample_points(1, 1000, &f, &mut rng);
            let c = check_cutoff(&par, &sp, &f, &pts);
            rep.info(
                6,
                format!(
                    "parabola delta=0.3 Q=1e10 eta=0.125 (outside the matrix): W=1 at {}/{} S_p points, \
                     support {}/{} in S_2p, C = {:.3} ({:.1}s)",
                    c.sp_points - c.one_fail,
                    c.sp_points,
                    c.positive - c.support_fail,
                    c.positive,
                    c.c,
                    t0.elapsed().as_secs_f64()
                ),
            );
        }
        Err(e) => rep.info(6, format!("Q=1e10 configuration failed: {e}")),
    }
}

/// Brute-force coverage and multiplicity of a center list over a grid set.
fn cover_oracle(set: &SetSpec, d: usize, r: f64, centers: &[Vec<f64>]) -> (bool, usize) {
    let h = r / 4.0;
    let n = (1.0 / h).ceil() as i64;
    let reach = 0.5 * h * (d as f64).sqrt() * (1.0 + 1e-12);
    let mut covered = true;
    let mut mult = 0;
    let mut idx = vec![-n; d];
    loop {
        let x: Vec<f64> = idx.iter().map(|&k| k as f64 * h).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12 && set.dist(&x) <= reach {
            let k = centers
                .iter()
                .filter(|c| {
                    c.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < r / 2.0 - 1e-12
                })
                .count();
            covered &= k > 0;
            mult = mult.max(k);
        }
        let mut i = 0;
        loop {
            if i == d {
                return (covered, mult);
            }
            if idx[i] < n {
                idx[i] += 1;
                break;
            }
            idx[i] = -n;
            i += 1;
        }
    }
}

fn criterion_7(rep: &mut Report) {
    let start = Instant::now();
    let sets: Vec<(&str, SetSpec, usize)> = vec![
        (
            "unit interval",
            SetSpec::Box {
                lo: vec![0.0],
                hi: vec![1.0],
            },
            1,
        ),
        (
            "point",
            SetSpec::Point {
                at: vec![0.21, -0.33],
            },
            2,
        ),
        (
            "disc",
            SetSpec::Ball {
                center: vec![0.1, 0.0],
                radius: 0.5,
            },
            2,
        ),
        (
            "annulus",
            SetSpec::Shell {
                center: vec![0.0, 0.0],
                inner: 0.4,
                outer: 0.7,
            },
            2,
        ),
        ("unit ball", SetSpec::Domain, 2),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, set, d) in &sets {
        let mut mults = Vec::new();
        for r in [0.2, 0.1, 0.05] {
            match set.cover(*d, r) {
                Ok(c) => {
                    let (covered, mult) = cover_oracle(set, *d, r, &c.centers);
                    ok &= c.covered && covered && mult == c.multiplicity;
                    mults.push(c.multiplicity);
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!("{name}: {e}"));
                }
            }
        }
        let bound = 3usize.pow(*d as u32);
        ok &= mults.iter().all(|&k| k <= bound);
        parts.push(format!("{name} {mults:?} (<= {bound})"));
    }
    rep.line(
        7,
        "cover properties",
        ok,
        start.elapsed().as_secs_f64(),
        None,
        format!(
            "all grid points covered; multiplicities at r = 0.2, 0.1, 0.05: {}",
            parts.join(", ")
        ),
    );
}

fn criterion_8(rep: &mut Report) {
    let start = Instant::now();
    let q = |a: i64, b: i64| Rat::new(a.into(), b.into());
    let mut fails = Vec::new();
    if regimes::alpha(2, 1, 2) != q(1, 9) {
        fails.push("alpha(2,1,2)");
    }
    if regimes::a_n(3) != q(18, 5) {
        fails.push("a_3");
    }
    match regimes::spectrum_interval(3) {
        Ok(s) if s.upper == q(23, 65) && s.tau_cap == q(23, 65) && s.identity_holds => {}
        _ => fails.push("spectrum n=3"),
    }
    if regimes::tau_max_ours(2, 1, 2).ok() != Some(q(4, 7)) {
        fails.push("tau_max_ours(2,1,2)");
    }
    let mut cases = 0;
    let mut float_gap: f64 = 0.0;
    for n in 2..=10u32 {
        for d in 1..n {
            for l in [2, n] {
                cases += 1;
                let (ours, by) = match (regimes::tau_max_ours(n, d, l), regimes::tau_max_by(n, d, l)) {
                    (Ok(o), Ok(b)) => (o, b),
                    _ => {
                        fails.push("matrix evaluation");
                        continue;
                    }
                };
                if !(ours > by.hi && ours < q(1, (n - d) as i64)) {
                    fails.push("ordering in matrix");
                }
                // floating oracle for both thresholds
                let al = 1.0 / (d as f64 * (2.0 * l as f64 - 1.0) * (n as f64 + 1.0));
                let nf = n as f64;
                let ours_f = (3.0 * al + 1.0) / ((2.0 * nf - 1.0) * al + nf);
                let (a, b, c) = (
                    2.0 * nf + 2.0 * nf * al,
                    nf - 2.0 - 3.0 * al + 2.0 * nf * al,
                    -(1.0 + 3.0 * al),
                );
                let by_f = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
                float_gap = float_gap
                    .max((regimes::to_f64(&ours) - ours_f).abs())
                    .max((regimes::to_f64(&by.midpoint()) - by_f).abs());
            }
        }
    }
    if float_gap > 1e-10 {
        fails.push("floating oracle");
    }
    rep.line(
        8,
        "exact formulas",
        fails.is_empty(),
        start.elapsed().as_secs_f64(),
        Some(C8_SECONDS),
        format!(
            "golden values alpha=1/9, a_3=18/5, endpoint 23/65, 4/7; ours > by and ours < 1/(n-d) on {cases} cases; \
             max gap to floating oracle {float_gap:.1e}{}",
            if fails.is_empty() { String::new() } else { format!("; failed: {}", fails.join(", ")) }
        ),
    );
}

fn criterion_9(rep: &mut Report) {
    let start = Instant::now();
    let par = MongeMap::parabola();
    let t = WeightTuple::canonical(1);
    let (q, delta, eta) = (20u64, 0.3, 0.3);
    let j_cut = fourier::cutoff_j(q, eta, delta) as i64;
    let w0 = ConstCutoff(0.0);
    let mut worst_v: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    let mut err = None;
    for j in [1, j_cut] {
        let vp = 8 * j_cut;
        for (v, c) in [(vp, 0), (-vp, 1)] {
            match fourier::osc_integral(&par, &t, &[j], &[v], c, q, &w0, DEFAULT_GRID_BUDGET) {
                Ok(i) => worst_v = worst_v.max(i.value.norm()),
                Err(e) => err = Some(e.to_string()),
            }
        }
        for v in [0, j_cut] {
            let c = 8 * j_cut.max(v);
            for cc in [c, -c] {
                match fourier::osc_integral(&par, &t, &[j], &[v], cc, q, &w0, DEFAULT_GRID_BUDGET) {
                    Ok(i) => worst_c = worst_c.max(i.value.norm()),
                    Err(e) => err = Some(e.to_string()),
                }
            }
        }
    }
    // a low-frequency integral for scale, against a direct double Simpson rule
    let reference = fourier::osc_integral(&par, &t, &[1], &[0], 0, q, &w0, DEFAULT_GRID_BUDGET)
        .map(|i| i.value.norm())
        .unwrap_or(f64::NAN);
    let direct = {
        let re = simpson(
            |y| {
                simpson(
                    |x| {
                        y * big_omega(x)
                            * small_omega(y)
                            * (2.0 * std::f64::consts::PI * q as f64 * y * x * x).cos()
                    },
                    -0.5,
                    0.5,
                    2000,
                )
            },
            0.5,
            1.0,
            2000,
        );
        let im = simpson(
            |y| {
                simpson(
                    |x| {
                        y * big_omega(x)
                            * small_omega(y)
                            * (2.0 * std::f64::consts::PI * q as f64 * y * x * x).sin()
                    },
                    -0.5,
                    0.5,
                    2000,
                )
            },
            0.5,
            1.0,
            2000,
        );
        (re * re + im * im).sqrt()
    };
    let elapsed = start.elapsed().as_secs_f64();
    rep.line(
        9,
        "oscillatory decay",
        err.is_none() && worst_v <= C9_TOL_VPRIME && worst_c <= C9_TOL_C,
        elapsed,
        Some(C9_SECONDS),
        match err {
            Some(e) => format!("error: {e}"),
            None => format!(
                "J = {j_cut}; max |I| at |v'| = 8J: {worst_v:.2e} (tol {C9_TOL_VPRIME:e}); at |c| = 8 max(J, |v'|): \
                 {worst_c:.2e} (tol {C9_TOL_C:e}); |I(1, 0, 0)| = {reference:.6e} vs direct rule {direct:.6e}"
            ),
        },
    );
}

/// Exact enumeration of pairs with `a/q ∈ [0, 1]`, `1 ≤ q ≤ Q`, `‖q F(a/q)‖ ≤ δ`
/// for `F(x) = k x²`, with `δ = num/den`.
fn sharp_oracle(k: i64, num: i64, den: i64, q_max: i64) -> u64 {
    let mut n = 0;
    for q in 1..=q_max {
        for a in 0..=q {
            let rem = (k * a * a).rem_euclid(q);
            // ‖k a²/q‖ ≤ num/den  ⇔  den · min(rem, q - rem) ≤ num · q
            if den * rem.min(q - rem) <= num * q {
                n += 1;
            }
        }
    }
    n
}

fn criterion_10(rep: &mut Report) {
    let start = Instant::now();
    let par = counting::sharp_count(&MongeMap::parabola(), &CountParams::new(0.4, 3)).map(|r| r.value);
    let flat = MongeMap::flat(1, 1)
        .and_then(|f| counting::sharp_count(&f, &CountParams::new(0.25, 3)).map(|r| r.value));
    let (op, of) = (sharp_oracle(1, 2, 5, 3), sharp_oracle(0, 1, 4, 3));
    let ok = matches!((&par, &flat), (Ok(a), Ok(b)) if *a == 8.0 && *b == 9.0) && op == 8 && of == 9;
    rep.line(
        10,
        "hand-verifiable counts",
        ok,
        start.elapsed().as_secs_f64(),
        None,
        format!("parabola {par:?} (oracle {op}, expected 8); flat {flat:?} (oracle {of}, expected 9)"),
    );
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; a name filter
    // that excludes this target skips it.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let mut rep = Report { passed: 0, failed: 0 };
    criterion_1(&mut rep);
    criterion_2(&mut rep);
    criterion_3(&mut rep);
    criterion_4(&mut rep);
    criterion_5(&mut rep);
    criterion_6(&mut rep);
    criterion_7(&mut rep);
    criterion_8(&mut rep);
    criterion_9(&mut rep);
    criterion_10(&mut rep);
    println!("acceptance: {} passed, {} failed", rep.passed, rep.failed);
}
