use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use bellsieve::pipeline::{self, OutputFormat, RunConfig, VerifySettings};
use bellsieve::relations::{self, RelationTemplate};
use bellsieve::verifier::{DEFAULT_CUTOFF, DEFAULT_TOL};
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Shell,
    Latex,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Shell => OutputFormat::Shell,
            Format::Latex => OutputFormat::Latex,
            Format::Json => OutputFormat::Json,
        }
    }
}

/// Find multiplicative identities between Dirichlet L-functions.
#[derive(Debug, Parser)]
#[command(name = "bellsieve", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long, short)]
    config: PathBuf,

    /// Prime modulus for polynomial arithmetic (overrides the config).
    #[arg(long, short)]
    prime: Option<u32>,

    /// Worker threads (overrides the config).
    #[arg(long, short)]
    threads: Option<usize>,

    #[arg(long, value_enum, default_value = "shell")]
    format: Format,

    /// Relation catalog: `known`, `conjectures` or a JSON file. Repeatable;
    /// defaults to `known`.
    #[arg(long)]
    catalog: Vec<String>,

    /// Check every relation numerically.
    #[arg(long)]
    verify: bool,

    /// Truncation bound of the Dirichlet sums.
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    verify_n: u64,

    /// Residual tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    verify_tol: f64,

    /// Also print relations among ζ values alone.
    #[arg(long)]
    show_trivial: bool,

    /// Write the basis and composition matrix to this JSON file.
    #[arg(long)]
    dump_debug: Option<PathBuf>,
}

fn load_catalog(name: &str) -> Result<Vec<RelationTemplate>> {
    Ok(match name {
        "known" => relations::known(),
        "conjectures" => relations::conjectures(),
        path => {
            let text =
                std::fs::read_to_string(path).with_context(|| format!("reading catalog {path}"))?;
            relations::parse_catalog(&text).with_context(|| format!("catalog {path}"))?
        }
    })
}

fn configure(args: &Args) -> Result<RunConfig> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg =
        RunConfig::from_json(&text).with_context(|| format!("{}", args.config.display()))?;
    if let Some(p) = args.prime {
        cfg.p = p;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if !args.catalog.is_empty() {
        cfg.catalog = Vec::new();
        for name in &args.catalog {
            cfg.catalog.extend(load_catalog(name)?);
        }
    }
    if args.verify {
        cfg.verify = Some(VerifySettings {
            cutoff: args.verify_n,
            tol: args.verify_tol,
        });
    }
    cfg.show_trivial = args.show_trivial;
    cfg.dump_debug = args.dump_debug.clone();
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let cfg = match configure(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let report = match pipeline::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    print!("{}", report.render(args.format.into()));
    if report.any_verification_failed() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
