//! `ratpoints`: experiment harness for counting rational points near manifolds.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{CountKind, CutoffArg, DistanceArg, DomainArg, ExperimentConfig, VariantArg, WindowArg};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ratpoints_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn from_config(e: ratpoints_core::Error) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => exit_code_for(e),
            CliError::Io(_) => 1,
        }
    }
}

/// 2 for bad input, 3 for exhausted budgets, 4 for violated side conditions.
pub fn exit_code_for(e: &ratpoints_core::Error) -> u8 {
    use ratpoints_core::Error as E;
    match e {
        E::Parameter(_) | E::Domain(_) | E::Parse(_) => 2,
        E::Resource { .. } => 3,
        E::Condition { .. } => 4,
        E::Capability(_) | E::Quadrature(_) | E::Resolution(_) => 1,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ratpoints",
    version,
    about = "Counting rational points near manifolds"
)]
pub struct Cli {
    /// TOML experiment config; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "RATPOINTS_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SweepArgs {
    /// Builtin manifold name or path to a manifold file.
    #[arg(long)]
    pub manifold: Option<String>,
    #[arg(long = "Q", alias = "q", value_delimiter = ',')]
    pub q: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub eta: Option<Vec<f64>>,
    /// Output file (default: `<out-dir>/<subcommand>.<ext>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall times in the CSV (they always go to the manifest).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sharp or smooth counts over a (Q, δ) sweep.
    Count {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, conflicts_with = "smooth")]
        sharp: bool,
        #[arg(long)]
        smooth: bool,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[arg(long, value_enum)]
        distance: Option<DistanceArg>,
        #[arg(long, value_enum)]
        window: Option<WindowArg>,
        #[arg(long, value_enum)]
        domain: Option<DomainArg>,
    },
    /// Main/error decomposition of the good part of the smooth count.
    Decompose {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Also evaluate the truncated error term, reporting the budget for order N.
        #[arg(long, value_name = "N")]
        with_trunc_error: Option<u32>,
        #[arg(long, value_enum)]
        cutoff: Option<CutoffArg>,
        #[arg(long)]
        budget: Option<u128>,
    },
    /// Sub-level set measure against the non-divergence bound.
    Sublevel {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        probe_radius: Option<f64>,
        #[arg(long)]
        bkm_constant: Option<f64>,
        /// Nondegeneracy order, if the manifold does not declare one.
        #[arg(long)]
        l: Option<u32>,
    },
    /// Greedy ball cover of a test set.
    Cover {
        /// TOML inline table, e.g. `kind = "box", lo = [0.0], hi = [1.0]`.
        #[arg(long)]
        set_spec: Option<String>,
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<f64>>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact exponents, thresholds and series verdicts.
    Regimes {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        l: Option<u32>,
        /// Rational `p/q` or decimal.
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        tau: Option<String>,
        /// Hausdorff exponent for the series verdicts (needs --tau).
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smooth count over main-term prediction along a Q sweep.
    Asymptotics {
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Count { .. } => "count",
            Command::Decompose { .. } => "decompose",
            Command::Sublevel { .. } => "sublevel",
            Command::Cover { .. } => "cover",
            Command::Regimes { .. } => "regimes",
            Command::Asymptotics { .. } => "asymptotics",
        }
    }

    /// Applies flags on top of the file config.
    pub fn merge_into(&self, cfg: &mut ExperimentConfig) {
        fn set<T: Clone>(dst: &mut Option<T>, src: &Option<T>) {
            if src.is_some() {
                *dst = src.clone();
            }
        }
        let sweep = |cfg: &mut ExperimentConfig, s: &SweepArgs| {
            set(&mut cfg.manifold, &s.manifold);
            set(&mut cfg.q, &s.q);
            set(&mut cfg.delta, &s.delta);
            set(&mut cfg.eta, &s.eta);
            if s.timing {
                cfg.timing = Some(true);
            }
        };
        match self {
            Command::Count {
                sweep: s,
                sharp,
                smooth,
                variant,
                distance,
                window,
                domain,
            } => {
                sweep(cfg, s);
                if *sharp {
                    cfg.kind = Some(CountKind::Sharp);
                } else if *smooth {
                    cfg.kind = Some(CountKind::Smooth);
                }
                set(&mut cfg.variant, variant);
                set(&mut cfg.distance, distance);
                set(&mut cfg.window, window);
                set(&mut cfg.domain, domain);
            }
            Command::Decompose {
                sweep: s,
                with_trunc_error,
                cutoff,
                budget,
            } => {
                sweep(cfg, s);
                set(&mut cfg.with_trunc_error, with_trunc_error);
                set(&mut cfg.cutoff, cutoff);
                set(&mut cfg.budget, budget);
            }
            Command::Sublevel {
                sweep: s,
                samples,
                probe_radius,
                bkm_constant,
                l,
            } => {
                sweep(cfg, s);
                set(&mut cfg.samples, samples);
                set(&mut cfg.probe_radius, probe_radius);
                set(&mut cfg.bkm_constant, bkm_constant);
                set(&mut cfg.l, l);
            }
            Command::Cover {
                set_spec: _, r, d, ..
            } => {
                set(&mut cfg.r, r);
                set(&mut cfg.d, d);
            }
            Command::Regimes {
                n, d, l, eta, tau, s, ..
            } => {
                set(&mut cfg.n, n);
                set(&mut cfg.d, &d.map(|v| v as usize));
                set(&mut cfg.l, l);
                set(&mut cfg.eta_exact, eta);
                set(&mut cfg.tau, tau);
                set(&mut cfg.s, s);
            }
            Command::Asymptotics { sweep: s } => sweep(cfg, s),
        }
    }

    pub fn out(&self) -> Option<&PathBuf> {
        match self {
            Command::Count { sweep, .. }
            | Command::Decompose { sweep, .. }
            | Command::Sublevel { sweep, .. }
            | Command::Asymptotics { sweep } => sweep.out.as_ref(),
            Command::Cover { out, .. } | Command::Regimes { out, .. } => out.as_ref(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ratpoints: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
