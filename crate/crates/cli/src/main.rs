//! `nt` — experiment driver for mean values of multiplicative functions
//! in arithmetic progressions.
//!
//! Exit codes: 0 when every check lands within policy, 1 when a check is
//! flagged (growth trend, failed tolerance, inapplicable hypothesis),
//! 2 on configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nt_core::arith::build_prime_table;
use nt_core::harness::{
    self, rows_to_csv, run_decompose, run_exceptional, run_halasz, run_linnik, run_taxonomy,
    run_verify, sieve_stats, to_json_string, JSource, VerifyOptions,
};
use nt_core::Error;

#[derive(Parser)]
#[command(name = "nt", version, about = "number-theory experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite by check id
    /// (i1 i1c i2 i3 i4 i5 i6 i7 a1 a2 a3 a4 aa1 aa2 aa3)
    Verify {
        lemma_id: String,
        /// Modulus (or modulus ceiling for scan checks)
        #[arg(long = "D")]
        d: Option<u64>,
        /// Single growth rung; replaces the default ladder
        #[arg(long)]
        x: Option<u64>,
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Calibration constant for Delta/psi thresholds
        #[arg(long)]
        c0: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Decompose a progression sum into main term, character terms and
    /// residual
    Decompose {
        #[arg(long, default_value = "mobius-tail(5)")]
        g: String,
        #[arg(long = "D", default_value_t = 5)]
        d: u64,
        #[arg(long, default_value_t = 1)]
        a: u64,
        #[arg(long, default_value_t = 100_000)]
        y: u64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// none | all-nonprincipal | classifier
        #[arg(long, default_value = "classifier")]
        j_source: String,
        #[arg(long, default_value_t = 1.0)]
        grid_slack: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Classify the exceptional characters of g relative to (alpha, D, x)
    Exceptional {
        #[arg(long, default_value = "mobius-tail(5)")]
        g: String,
        #[arg(long = "D", default_value_t = 5)]
        d: u64,
        #[arg(long, default_value_t = 1_000_000)]
        x: u64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        grid_slack: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Full taxonomy run: classifier, twist defects, order caps, and the
    /// final twisted-sum bound
    Taxonomy {
        #[arg(long, default_value = "mobius-tail(5)")]
        g: String,
        #[arg(long = "D", default_value_t = 5)]
        d: u64,
        #[arg(long, default_value_t = 1_000_000)]
        x: u64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 1)]
        k: u64,
        #[arg(long, default_value_t = 1.0)]
        grid_slack: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Mean-value upper bound from the twist defect
    Halasz {
        #[arg(long, default_value = "mobius")]
        g: String,
        #[arg(long = "Y", default_value_t = 2)]
        y: u64,
        #[arg(long, default_value_t = 1_000_000)]
        x: u64,
        #[arg(long = "T", default_value_t = 100.0)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Least prime in every reduced class plus the two-sided reciprocal
    /// identity at (N, gamma)
    Linnik {
        #[arg(long, default_value_t = 300)]
        d_max: u64,
        #[arg(long = "N", default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Prime table summary with Mertens and Chebyshev checkpoints
    SieveStats {
        #[arg(long, default_value_t = 1_000_000)]
        x: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

fn emit(
    report: &serde_json::Value,
    rows: &[harness::VerificationRow],
    out: Option<PathBuf>,
    format: Format,
) -> Result<(), Error> {
    let text = match format {
        Format::Json => to_json_string(report)?,
        Format::Csv => rows_to_csv(rows)?,
    };
    match out {
        Some(path) => std::fs::write(path, text).map_err(Error::Io)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run() -> Result<bool, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify {
            lemma_id,
            d,
            x,
            t,
            seed,
            c0,
            delta,
            out,
            format,
        } => {
            let mut opts = VerifyOptions::defaults(&lemma_id)?;
            if let Some(d) = d {
                opts.d = d;
            }
            if let Some(x) = x {
                opts.ladder = vec![x];
            }
            if let Some(t) = t {
                opts.t_cap = t;
            }
            if let Some(c0) = c0 {
                opts.c0 = c0;
            }
            if let Some(delta) = delta {
                opts.delta = delta;
            }
            opts.seed = seed;
            let table = build_prime_table(opts.required_bound(&lemma_id))?;
            let summary = run_verify(&lemma_id, &opts, &table)?;
            emit(&summary.to_report()?, &summary.rows, out, format)?;
            Ok(summary.passed)
        }
        Command::Decompose {
            g,
            d,
            a,
            y,
            alpha,
            j_source,
            grid_slack,
            out,
            format,
        } => {
            let source: JSource = j_source.parse()?;
            let table = build_prime_table(y.max(1000))?;
            let output = run_decompose(&g, d, a, y, alpha, source, grid_slack, &table)?;
            emit(&output.report, &output.rows, out, format)?;
            Ok(output.passed)
        }
        Command::Exceptional {
            g,
            d,
            x,
            alpha,
            t,
            grid_slack,
            out,
            format,
        } => {
            let table = build_prime_table(x.max(1000))?;
            let output = run_exceptional(&g, d, x, alpha, t, grid_slack, &table)?;
            emit(&output.report, &output.rows, out, format)?;
            Ok(output.passed)
        }
        Command::Taxonomy {
            g,
            d,
            x,
            c,
            c1,
            k,
            grid_slack,
            out,
            format,
        } => {
            let table = build_prime_table(x.max(1000))?;
            let output = run_taxonomy(&g, d, x, c, c1, k, grid_slack, &table)?;
            emit(&output.report, &output.rows, out, format)?;
            Ok(output.passed)
        }
        Command::Halasz {
            g,
            y,
            x,
            t,
            beta,
            c,
            c1,
            out,
            format,
        } => {
            let table = build_prime_table(x.max(1000))?;
            let output = run_halasz(&g, y, x, t, beta, c, c1, &table)?;
            emit(&output.report, &output.rows, out, format)?;
            Ok(output.passed)
        }
        Command::Linnik {
            d_max,
            n,
            gamma,
            out,
            format,
        } => {
            let table = build_prime_table(n.max(10_000))?;
            let output = run_linnik(d_max, n, gamma, &table)?;
            emit(&output.report, &output.rows, out, format)?;
            Ok(output.passed)
        }
        Command::SieveStats { x, out, format } => {
            let table = build_prime_table(x.max(10))?;
            let output = sieve_stats(x, &table)?;
            emit(&output.report, &output.rows, out, format)?;
            Ok(output.passed)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::from(0),
        Ok(false) => {
            eprintln!("nt: one or more checks flagged; see the report");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("nt: {e}");
            match e {
                Error::Config(_) | Error::Domain(_) | Error::Resource(_) => ExitCode::from(2),
                _ => ExitCode::from(2),
            }
        }
    }
}
