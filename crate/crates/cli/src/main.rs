//! `mfspec`: configuration-driven front-end for the spectrum workbench.
//!
//! Exit codes: 0 success, 2 evaluation budget exceeded, 3 invalid input,
//! 1 I/O failure. Failures print one `key=value` line on stderr.

// `!(x > 0.0)` style checks deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mfspec_core::exec::DEFAULT_BUDGET;
use mfspec_core::{Error, ExecOptions};

use crate::commands::Emit;
use crate::config::{Config, Format};

#[derive(Parser)]
#[command(
    name = "mfspec",
    version,
    about = "Multifractal entropy spectra on symbolic systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum table plus log-MGF and pressure curves.
    Spectrum(RunArgs),
    /// Monte Carlo level-set probability, plain or tilted.
    Ldp(RunArgs),
    /// Condition diagnostics and the resulting spectrum label.
    Check(RunArgs),
    /// Closed-form values printed to stdout as CSV.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides outputs.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "MFSPEC_SHARDS")]
    shards: Option<usize>,
    /// Overrides mc.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum number of word evaluations per enumeration.
    #[arg(long, env = "MFSPEC_BUDGET")]
    budget: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Dimension H(α)/log 2 and rate log 2 − H(α) of the binary digit frequency.
    Besicovitch {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Exact P(Bin(n, p) ≥ k).
    BinomialTail {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
    /// Transfer-operator pressure of the configured observable.
    Transfer {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, required = true, num_args = 1.., allow_negative_numbers = true)]
        q: Vec<f64>,
    },
}

enum Failure {
    Core(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn report(&self) -> ExitCode {
        let (code, kind, detail) = match self {
            Failure::Core(e) if e.is_infeasible() => (2, "infeasible", e.to_string()),
            Failure::Core(e) => (3, "validation", e.to_string()),
            Failure::Io(p, e) => (1, "io", format!("{}: {e}", p.display())),
        };
        eprintln!(
            "mfspec: error={kind} exit={code} detail={}",
            one_line(&detail)
        );
        ExitCode::from(code)
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn load(path: &Path) -> Result<Config, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))?;
    Ok(Config::parse(&text)?)
}

struct Prepared {
    cfg: Config,
    opts: ExecOptions,
    dir: PathBuf,
    format: Format,
    prefix: String,
}

fn prepare(args: &RunArgs) -> Result<Prepared, Failure> {
    let mut cfg = load(&args.config)?;
    if let (Some(seed), Some(mc)) = (args.seed, cfg.mc.as_mut()) {
        mc.seed = seed;
    }
    let shards = args.shards.or(cfg.run.shards).unwrap_or(1);
    if shards == 0 {
        return Err(Error::InvalidArgument("shards must be at least 1".into()).into());
    }
    let budget = args.budget.or(cfg.run.budget).unwrap_or(DEFAULT_BUDGET);
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.outputs.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let format = args.format.or(cfg.outputs.format).unwrap_or_default();
    let prefix = cfg
        .outputs
        .prefix
        .as_ref()
        .map(|p| format!("{p}_"))
        .unwrap_or_default();
    Ok(Prepared {
        cfg,
        opts: ExecOptions::default()
            .with_shards(shards)
            .with_budget(budget),
        dir,
        format,
        prefix,
    })
}

fn finish(dir: &Path, files: &[(String, String)]) -> Result<(), Failure> {
    let written = output::write_all(dir, files).map_err(|e| Failure::Io(dir.to_path_buf(), e))?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Spectrum(args) => {
            let p = prepare(&args)?;
            let exp = p.cfg.build()?;
            let emit = Emit {
                format: p.format,
                prefix: &p.prefix,
            };
            let files = commands::spectrum(&p.cfg, &exp, &p.opts, &emit)?;
            finish(&p.dir, &files)
        }
        Command::Ldp(args) => {
            let p = prepare(&args)?;
            let exp = p.cfg.build()?;
            let emit = Emit {
                format: p.format,
                prefix: &p.prefix,
            };
            let out = commands::ldp(&p.cfg, &exp, &p.opts, &emit)?;
            finish(&p.dir, &out.files)?;
            let q = match out.estimate.sampler {
                mfspec_core::ldp::SamplerKind::Tilted { q } => mfspec_core::io::fmt_f64(q),
                mfspec_core::ldp::SamplerKind::Plain => "none".into(),
            };
            println!(
                "tilt={q} estimate={} oracle={}",
                mfspec_core::io::fmt_f64(out.estimate.prob_estimate),
                out.oracle
                    .map(mfspec_core::io::fmt_f64)
                    .unwrap_or_else(|| "none".into())
            );
            Ok(())
        }
        Command::Check(args) => {
            let p = prepare(&args)?;
            let exp = p.cfg.build()?;
            let emit = Emit {
                format: p.format,
                prefix: &p.prefix,
            };
            let (files, report) = commands::check(&p.cfg, &exp, &p.opts, &emit)?;
            finish(&p.dir, &files)?;
            println!("label={}", report.label.as_str());
            Ok(())
        }
        Command::Oracle { which } => {
            let text = match which {
                OracleCommand::Besicovitch { alpha } => commands::oracle_besicovitch(alpha),
                OracleCommand::BinomialTail { n, k, p } => commands::oracle_binomial(n, k, p)?,
                OracleCommand::Transfer { config, q } => {
                    let cfg = load(&config)?;
                    commands::oracle_transfer(&cfg.build()?, &q)?
                }
            };
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&msg);
            eprintln!("mfspec: error=usage exit=3 detail={}", one_line(first));
            return ExitCode::from(3);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
