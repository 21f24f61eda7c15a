//! `genbound`: bound calculators, threshold-model and SVM tools, model
//! selection and the regression table.
//!
//! Exit codes: 0 success, 1 regression failure, 2 validation or domain
//! error, 3 capacity exceeded, 4 non-separable sample.

mod bound;
mod error;
mod generate;
mod io;
mod select;
mod svm_cmd;
mod threshold_cmd;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use genbound::reproduce::{reproduce, ReproRow, TABLE_VERSION};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "genbound", version, about = "Generalization bounds, Gibbs posteriors and SVM margin tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one bound calculator and print a JSON report.
    Bound(bound::BoundArgs),
    /// Recompute the reference table and compare against embedded values.
    Reproduce {
        /// Restrict to the given row ids (repeatable or comma-separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Multiplier applied to every two-sided tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
        /// Print JSON rows instead of the text table.
        #[arg(long)]
        json: bool,
    },
    /// Exact Gibbs posteriors on threshold classifiers.
    #[command(subcommand)]
    Threshold(threshold_cmd::ThresholdCmd),
    /// Support vector machines.
    #[command(subcommand)]
    Svm(svm_cmd::SvmCmd),
    /// Select among Gibbs posteriors on threshold sub-models.
    Select(select::SelectArgs),
    /// Write a synthetic CSV dataset.
    Generate(generate::GenerateArgs),
}

fn print_table(rows: &[ReproRow]) {
    println!("table version {TABLE_VERSION}");
    println!("{:<4} {:<72} {:>10} {:>12} {:>10}  result", "id", "description", "expected", "computed", "|delta|");
    for r in rows {
        let status = if r.pass { "pass" } else { "FAIL" };
        println!(
            "{:<4} {:<72} {:>10.4} {:>12.6} {:>10.2e}  {status}",
            r.id, r.description, r.expected, r.computed, r.delta
        );
        for c in r.checks.iter().filter(|c| !c.pass) {
            println!("       failed check '{}': computed {} against {:?}", c.label, c.computed, c.criterion);
        }
        if let Some(e) = &r.error {
            println!("       error: {e}");
        }
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    println!("{passed}/{} rows pass", rows.len());
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Bound(a) => io::emit(&bound::run(&a)?)?,
        Command::Reproduce { only, tolerance_scale, json } => {
            let rows = reproduce(&only, tolerance_scale)?;
            if json {
                for r in &rows {
                    io::emit(r)?;
                }
            } else {
                print_table(&rows);
            }
            if rows.iter().any(|r| !r.pass) {
                return Ok(1);
            }
        }
        Command::Threshold(c) => threshold_cmd::run(&c)?,
        Command::Svm(c) => svm_cmd::run(&c)?,
        Command::Select(a) => select::run(&a)?,
        Command::Generate(a) => generate::run(&a)?,
    }
    Ok(0)
}

fn report_error(e: &CliError) {
    let body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
    println!("{body}");
    eprintln!("error: {e}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            report_error(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
