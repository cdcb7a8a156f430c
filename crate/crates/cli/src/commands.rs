use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use ratpoints_core::counting::{self, ConstCutoff, CountParams, Cutoff};
use ratpoints_core::fourier::{self, TruncOptions, DEFAULT_DIRECT_BUDGET, DEFAULT_GRID_BUDGET};
use ratpoints_core::regimes::{self, parse_rational, Capped, Psi};
use ratpoints_core::sublevel::{self, CutoffFunction};
use ratpoints_core::{Error, MongeMap};

use crate::config::{self, CountKind, CutoffArg, ExperimentConfig};
use crate::output::{self, num, rational, Manifest, ManifestRow, RowOutcome};
use crate::{Cli, CliError, Command};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: u64 = 100_000;
pub const DEFAULT_ETA: f64 = 0.05;

pub fn run(cli: &Cli) -> Result<u8, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cli.command.merge_into(&mut cfg);
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Command::Cover {
        set_spec: Some(text), ..
    } = &cli.command
    {
        cfg.set = Some(config::parse_set(text)?);
    }
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&cli.out_dir)?;
    let name = cli.command.name();
    let ext = if matches!(cli.command, Command::Decompose { .. } | Command::Regimes { .. }) {
        "json"
    } else {
        "csv"
    };
    let out = cli
        .command
        .out()
        .cloned()
        .unwrap_or_else(|| cli.out_dir.join(format!("{name}.{ext}")));
    let start = Instant::now();
    let rows = pool.install(|| match &cli.command {
        Command::Count { .. } => count(&cfg, &out, false),
        Command::Asymptotics { .. } => count(&cfg, &out, true),
        Command::Decompose { .. } => decompose(&cfg, &out),
        Command::Sublevel { .. } => sublevel(&cfg, &out),
        Command::Cover { .. } => cover(&cfg, &out),
        Command::Regimes { .. } => regimes(&cfg, &out).map(|()| Vec::new()),
    })?;
    let exit_code = rows
        .iter()
        .find_map(|r| r.error.as_ref().map(crate::exit_code_for))
        .unwrap_or(0);
    let manifest = Manifest {
        tool: "ratpoints",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: name.to_string(),
        config_file: cli.config.clone(),
        seed: cfg.seed,
        threads: pool.current_num_threads(),
        output: out.clone(),
        rows: rows
            .iter()
            .enumerate()
            .map(|(index, r)| ManifestRow {
                index,
                wall_time_s: r.wall_time,
                status: output::status(&r.error),
            })
            .collect(),
        total_wall_time_s: start.elapsed().as_secs_f64(),
        exit_code,
    };
    output::write_json(
        &output::manifest_path(&out),
        &serde_json::to_value(&manifest).map_err(|e| CliError::Io(std::io::Error::other(e)))?,
    )?;
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("ratpoints: skipped sweep point: {e}");
        }
    }
    Ok(exit_code)
}

fn skip_reason(e: &Error) -> String {
    match e {
        Error::Condition { condition, detail } => format!("{condition}: {detail}"),
        other => other.to_string(),
    }
}

/// Evaluates sweep points in parallel; rows come back in sweep order.
fn run_sweep<P: Sync>(
    points: &[P],
    params: impl Fn(&P) -> Vec<String> + Sync,
    width: usize,
    timing: bool,
    f: impl Fn(&P) -> Result<Vec<String>, Error> + Sync,
) -> Vec<RowOutcome> {
    points
        .par_iter()
        .map(|p| {
            let t0 = Instant::now();
            let res = f(p);
            let wall_time = t0.elapsed().as_secs_f64();
            let mut cells = params(p);
            let (values, error) = match res {
                Ok(v) => (v, None),
                Err(e) => (vec![String::new(); width], Some(e)),
            };
            cells.extend(values);
            cells.push(if timing { num(wall_time) } else { String::new() });
            cells.push(error.as_ref().map(skip_reason).unwrap_or_default());
            RowOutcome {
                cells,
                wall_time,
                error,
            }
        })
        .collect()
}

fn need<T: Clone>(v: &Option<T>, what: &str) -> Result<T, CliError> {
    v.clone()
        .ok_or_else(|| CliError::Config(format!("missing `{what}` (config key or flag)")))
}

fn grid2(cfg: &ExperimentConfig) -> Result<Vec<(u64, f64)>, CliError> {
    let qs = need(&cfg.q, "Q")?;
    let ds = need(&cfg.delta, "delta")?;
    Ok(qs.iter().flat_map(|&q| ds.iter().map(move |&d| (q, d))).collect())
}

fn grid3(cfg: &ExperimentConfig) -> Result<Vec<(u64, f64, f64)>, CliError> {
    let etas = cfg.eta.clone().unwrap_or_else(|| vec![DEFAULT_ETA]);
    Ok(grid2(cfg)?
        .into_iter()
        .flat_map(|(q, d)| etas.iter().map(move |&e| (q, d, e)))
        .collect())
}

fn count(cfg: &ExperimentConfig, out: &Path, asymptotics: bool) -> Result<Vec<RowOutcome>, CliError> {
    let points = grid2(cfg)?;
    let m = config::load_manifold(cfg.manifold.as_deref())?;
    let t = config::load_weights(cfg.weights, m.d())?;
    let kind = if asymptotics {
        CountKind::Smooth
    } else {
        cfg.kind.unwrap_or_default()
    };
    let variant = cfg.variant.unwrap_or_default();
    let base = CountParams {
        variant: variant.into(),
        distance: cfg.distance.unwrap_or_default().into(),
        window: cfg.window.unwrap_or_default().into(),
        domain: cfg.domain.unwrap_or_default().into(),
        ..CountParams::new(0.25, 1)
    };
    let kind_s = format!("{kind:?}").to_lowercase();
    let variant_s = format!("{variant:?}").to_lowercase();
    let params = |&(q, d): &(u64, f64)| {
        let mut c = vec![q.to_string(), num(d)];
        if !asymptotics {
            c.push(kind_s.clone());
            c.push(variant_s.clone());
        }
        c
    };
    let width = if asymptotics { 4 } else { 3 };
    let rows = run_sweep(&points, params, width, cfg.timing.unwrap_or(false), |&(q, d)| {
        let p = CountParams { delta: d, q, ..base };
        let r = match kind {
            CountKind::Smooth => counting::smooth_count(&m, &t, &p)?,
            CountKind::Sharp => counting::sharp_count(&m, &p)?,
        };
        let mut v = vec![num(r.value), num(r.predicted_main), num(r.ratio())];
        if asymptotics {
            v.push(num((r.ratio() - 1.0).abs()));
        }
        Ok(v)
    });
    let header: &[&str] = if asymptotics {
        &[
            "Q",
            "delta",
            "value",
            "predicted_main",
            "ratio",
            "abs_dev",
            "wall_time_s",
            "skip_reason",
        ]
    } else {
        &[
            "Q",
            "delta",
            "kind",
            "variant",
            "value",
            "predicted_main",
            "ratio",
            "wall_time_s",
            "skip_reason",
        ]
    };
    output::write_csv(out, header, &rows)?;
    Ok(rows)
}

fn decompose(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RowOutcome>, CliError> {
    let points = grid3(cfg)?;
    let m = config::load_manifold(cfg.manifold.as_deref())?;
    let t = config::load_weights(cfg.weights, m.d())?;
    let which = cfg.cutoff.unwrap_or_default();
    let budget = cfg.budget.unwrap_or(DEFAULT_DIRECT_BUDGET);
    let order = cfg.with_trunc_error;
    let cf = fourier::c_f(&m);
    let records: Vec<(RowOutcome, Value)> = points
        .par_iter()
        .map(|&(q, delta, eta)| {
            let t0 = Instant::now();
            let p = CountParams::new(delta, q).with_eta(eta);
            let res = (|| -> Result<Map<String, Value>, Error> {
                let built;
                let cutoff: &dyn Cutoff = match which {
                    CutoffArg::None => &ConstCutoff(0.0),
                    CutoffArg::Sublevel => {
                        built = CutoffFunction::for_count(&m, &p, cf)?;
                        &built
                    }
                };
                let dec = fourier::decompose(&m, &t, &p, cutoff, budget)?;
                let mut rec = Map::new();
                rec.insert("J".into(), json!(dec.j_cut));
                rec.insert("good".into(), json!(dec.good));
                rec.insert("main".into(), json!(dec.main));
                rec.insert("error_direct".into(), json!(dec.error_direct));
                rec.insert("truncation_bound".into(), json!(dec.truncation_bound));
                rec.insert("identity_residual".into(), json!(dec.identity_residual));
                rec.insert("accepted".into(), json!(dec.accepted()));
                if let Some(order) = order {
                    let opts = TruncOptions {
                        c_f: None,
                        order,
                        r: (delta / q as f64).sqrt(),
                        grid_budget: DEFAULT_GRID_BUDGET,
                    };
                    match fourier::truncated_error(&m, &t, &p, cutoff, &opts) {
                        Ok(tr) => {
                            rec.insert("error_trunc".into(), json!(tr.value));
                            rec.insert("error_trunc_budget".into(), json!(tr.budget));
                            rec.insert("error_trunc_quadrature_error".into(), json!(tr.quadrature_error));
                        }
                        Err(e) => {
                            rec.insert("error_trunc".into(), Value::Null);
                            rec.insert("error_trunc_skip_reason".into(), json!(skip_reason(&e)));
                        }
                    }
                }
                Ok(rec)
            })();
            let wall_time = t0.elapsed().as_secs_f64();
            let mut rec = Map::new();
            rec.insert("Q".into(), json!(q));
            rec.insert("delta".into(), json!(delta));
            rec.insert("eta".into(), json!(eta));
            rec.insert("cutoff".into(), json!(format!("{which:?}").to_lowercase()));
            let error = match res {
                Ok(fields) => {
                    rec.extend(fields);
                    None
                }
                Err(e) => {
                    rec.insert("skip_reason".into(), json!(skip_reason(&e)));
                    Some(e)
                }
            };
            if cfg.timing.unwrap_or(false) {
                rec.insert("wall_time_s".into(), json!(wall_time));
            }
            (
                RowOutcome {
                    cells: Vec::new(),
                    wall_time,
                    error,
                },
                Value::Object(rec),
            )
        })
        .collect();
    let (rows, values): (Vec<_>, Vec<_>) = records.into_iter().unzip();
    output::write_json(out, &Value::Array(values))?;
    Ok(rows)
}

fn manifold_l(m: &MongeMap, cfg: &ExperimentConfig) -> Result<usize, CliError> {
    cfg.l.map(|l| l as usize).or(m.l_claimed()).ok_or_else(|| {
        CliError::Config(format!(
            "manifold `{}` declares no nondegeneracy order; pass --l",
            m.name()
        ))
    })
}

fn sublevel(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RowOutcome>, CliError> {
    let points = grid3(cfg)?;
    let m = config::load_manifold(cfg.manifold.as_deref())?;
    let l = manifold_l(&m, cfg)?;
    let cf = fourier::c_f(&m);
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let probe = cfg.probe_radius.unwrap_or(1.0);
    let constant = cfg.bkm_constant.unwrap_or(1.0);
    let params = |&(q, d, e): &(u64, f64, f64)| vec![q.to_string(), num(d), num(e)];
    let rows = run_sweep(
        &points,
        params,
        9,
        cfg.timing.unwrap_or(false),
        |&(q, delta, eta)| {
            let sp = sublevel::choose_params(delta, q, eta, cf, m.n())?;
            let est = sublevel::measure_estimate(&m, &sp, samples, seed, probe)?;
            let bkm = sublevel::bkm_bound(&sp, m.d(), l, m.n(), constant)?;
            Ok(vec![
                num(sp.big_delta),
                num(sp.k),
                num(sp.t),
                num(sp.r),
                num(est.measure),
                num(est.ci_halfwidth),
                num(bkm.base),
                num(bkm.alpha),
                num(bkm.bound),
            ])
        },
    );
    output::write_csv(
        out,
        &[
            "Q",
            "delta",
            "eta",
            "Delta",
            "K",
            "T",
            "r",
            "measure",
            "ci_halfwidth",
            "bkm_base",
            "alpha",
            "bkm_bound",
            "wall_time_s",
            "skip_reason",
        ],
        &rows,
    )?;
    Ok(rows)
}

fn cover(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RowOutcome>, CliError> {
    let set = need(&cfg.set, "set")?;
    let rs = need(&cfg.r, "r")?;
    let d = cfg.d.or(set.dim()).unwrap_or(1);
    let params = |&r: &f64| vec![num(r), d.to_string()];
    let rows = run_sweep(&rs, params, 5, cfg.timing.unwrap_or(false), |&r| {
        let c = set.cover(d, r)?;
        Ok(vec![
            c.centers.len().to_string(),
            c.grid_points.to_string(),
            c.multiplicity.to_string(),
            c.doubled_multiplicity.to_string(),
            c.covered.to_string(),
        ])
    });
    output::write_csv(
        out,
        &[
            "r",
            "d",
            "centers",
            "grid_points",
            "multiplicity",
            "doubled_multiplicity",
            "covered",
            "wall_time_s",
            "skip_reason",
        ],
        &rows,
    )?;
    Ok(rows)
}

fn capped(c: &Capped) -> Value {
    json!({ "value": rational(&c.value), "eta_cap": rational(&c.eta_cap), "valid": c.valid })
}

fn regimes(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let n = need(&cfg.n, "n")?;
    let d = need(&cfg.d, "d")? as u32;
    let l = cfg.l.unwrap_or(2);
    let rat = |s: &Option<String>| {
        s.as_deref()
            .map(parse_rational)
            .transpose()
            .map_err(CliError::from_config)
    };
    let eta = rat(&cfg.eta_exact)?.unwrap_or_else(|| parse_rational("1/100").expect("literal"));
    let tau = rat(&cfg.tau)?;
    let s = rat(&cfg.s)?;
    let r = regimes::regime_report(n, d, l, &eta).map_err(CliError::from_config)?;
    let mut v = json!({
        "n": r.n,
        "d": r.d,
        "m": r.m,
        "l": r.l,
        "eta": rational(&r.eta),
        "alpha": rational(&r.alpha),
        "a_n": rational(&r.a_n),
        "delta_threshold_asymp": capped(&r.delta_threshold_asymp),
        "delta_threshold_lower": capped(&r.delta_threshold_lower),
        "upper_bound_second_exponent": capped(&r.upper_bound_second_exponent),
        "on_manifold_exponent": rational(&r.on_manifold_exponent),
        "tau_max_ours": rational(&r.tau_max_ours),
        "tau_max_by": { "lo": rational(&r.tau_max_by.lo), "hi": rational(&r.tau_max_by.hi) },
        "ours_exceeds_by": r.tau_max_ours > r.tau_max_by.hi,
    });
    let obj = v.as_object_mut().expect("object");
    match regimes::spectrum_interval(n) {
        Ok(sp) => {
            obj.insert(
                "spectrum".into(),
                json!({
                    "lower": rational(&sp.lower),
                    "upper": rational(&sp.upper),
                    "tau_cap": rational(&sp.tau_cap),
                    "identity_holds": sp.identity_holds,
                    "competing_width": rational(&sp.competing_width),
                }),
            );
        }
        Err(e) => {
            obj.insert("spectrum".into(), Value::Null);
            obj.insert("spectrum_skip_reason".into(), json!(e.to_string()));
        }
    }
    if let Some(tau) = &tau {
        let m = n - d;
        obj.insert("tau".into(), rational(tau));
        obj.insert(
            "jarnik_besicovitch".into(),
            rational(&regimes::jarnik_besicovitch(n, tau).map_err(CliError::from_config)?),
        );
        obj.insert(
            "dim_formula".into(),
            rational(&regimes::dim_formula(n, tau, m).map_err(CliError::from_config)?),
        );
        if let Some(s) = &s {
            let k = regimes::khintchine_verdict(n, d, l, s, &Psi::Power(tau.clone()))
                .map_err(CliError::from_config)?;
            obj.insert(
                "khintchine".into(),
                json!({
                    "s": rational(s),
                    "gset": k.gset,
                    "gset_exponent": k.gset_exponent.as_ref().map(rational),
                    "bset": k.bset,
                    "beta0": k.beta0.as_ref().map(rational),
                    "eps_slack": k.eps_slack.as_ref().map(rational),
                    "measure_zero": k.measure_zero,
                }),
            );
        }
    }
    output::write_json(out, &v)
}
