//! Experiment runner for the ternary-homomorphism stability lab.
//!
//! Subcommands:
//!
//! * `run` — execute a named verification suite from a JSON config and
//!   persist `report.csv`, `report.json`, and `summary.txt` (plus
//!   `stability.csv` / `stability.json` for the Jensen suite). Exit status:
//!   0 all checks pass, 1 at least one check failed, 2 configuration error.
//! * `bound-table` — print the closed-form versus series distance bound over
//!   a parameter grid as CSV on stdout.
//! * `split` — decompose `3 lambda / M` into three unimodular scalars.
//!
//! The environment variable `HYERSLAB_THREADS` caps worker parallelism.

mod config;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, ExperimentConfig, Suite};
use hyerslab_core::report::{fmt_f64, fmt_scalar};
use hyerslab_core::{smallest_admissible_m, unimodular_three_split, Scalar};

#[derive(Parser)]
#[command(name = "hyerslab", version, about = "stability lab experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite from a JSON configuration file.
    Run(RunArgs),
    /// Print the power-type bound table as CSV on stdout.
    BoundTable(BoundTableArgs),
    /// Split 3*lambda/M into three unimodular scalars.
    Split(SplitArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the suite named in the config.
    #[arg(long)]
    suite: Option<String>,
    /// Override the sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the certification tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundTableArgs {
    /// Comma-separated r:s pairs.
    #[arg(long, default_value = "2:1,3:1,3:2,5:2")]
    rs_grid: String,
    /// Comma-separated exponents.
    #[arg(long, default_value = "-0.5,0,0.25,0.5,0.75,0.9")]
    p_grid: String,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    x_norm: f64,
}

#[derive(Args)]
struct SplitArgs {
    /// Real part of lambda.
    #[arg(long, default_value_t = 0.0)]
    re: f64,
    /// Imaginary part of lambda.
    #[arg(long, default_value_t = 0.0)]
    im: f64,
    /// Scaling integer M; defaults to the smallest admissible one.
    #[arg(long)]
    m: Option<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::BoundTable(args) => bound_table(args),
        Command::Split(args) => split(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn run(args: RunArgs) -> Result<ExitCode, ConfigError> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(suite) = args.suite {
        cfg.suite = suite.parse::<Suite>()?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(samples) = args.samples {
        cfg.samples = samples;
    }
    if let Some(tol) = args.tol {
        cfg.tol = tol;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    cfg.validate()?;

    let output = suites::run_suite(&cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| ConfigError(format!("cannot create output dir: {e}")))?;
    let write = |name: &str, contents: &str| -> Result<(), ConfigError> {
        std::fs::write(cfg.output_dir.join(name), contents)
            .map_err(|e| ConfigError(format!("cannot write {name}: {e}")))
    };
    write("report.csv", &output.report.to_csv())?;
    write("report.json", &output.report.to_json())?;
    if let Some(stab) = &output.stability {
        write("stability.csv", &stab.to_csv())?;
        write("stability.json", &stab.to_json())?;
    }

    let mut summary = String::new();
    for (check, passed, total) in output.report.summary() {
        summary.push_str(&format!("{check}: {passed}/{total} pass\n"));
    }
    let ok = output.report.passed();
    summary.push_str(&format!("RESULT: {}\n", if ok { "PASS" } else { "FAIL" }));
    write("summary.txt", &summary)?;
    print!("{summary}");

    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn bound_table(args: BoundTableArgs) -> Result<ExitCode, ConfigError> {
    let mut rs_grid = Vec::new();
    for pair in args.rs_grid.split(',') {
        let (r, s) = pair
            .split_once(':')
            .ok_or_else(|| ConfigError(format!("bad r:s pair '{pair}'")))?;
        let r: u32 = r
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("bad r in '{pair}'")))?;
        let s: u32 = s
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("bad s in '{pair}'")))?;
        rs_grid.push((r, s));
    }
    let mut p_grid = Vec::new();
    for p in args.p_grid.split(',') {
        p_grid.push(
            p.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("bad exponent '{p}'")))?,
        );
    }
    let rows = suites::bound_table(&rs_grid, &p_grid, args.eps, args.x_norm);
    print!("{}", suites::bound_table_csv(&rows));
    Ok(ExitCode::SUCCESS)
}

fn split(args: SplitArgs) -> Result<ExitCode, ConfigError> {
    let lambda = Scalar::new(args.re, args.im);
    let m = args.m.unwrap_or_else(|| smallest_admissible_m(lambda));
    let triple = unimodular_three_split(lambda, m).map_err(ConfigError::from)?;
    let target = lambda.scale(3.0 / m as f64);
    let sum = triple.sum();
    let json = serde_json::json!({
        "lambda": lambda,
        "m": m,
        "mu": [triple.mu1, triple.mu2, triple.mu3],
        "sum": sum,
        "target": target,
        "error": fmt_f64((sum - target).modulus()),
        "pretty": [fmt_scalar(triple.mu1), fmt_scalar(triple.mu2), fmt_scalar(triple.mu3)],
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&json).expect("serializable")
    );
    Ok(ExitCode::SUCCESS)
}
