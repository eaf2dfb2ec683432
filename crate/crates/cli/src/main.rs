//! Command-line driver: configuration in, machine-readable index reports out.
//!
//! Exit codes: 0 success, 1 comparison failure, 2 configuration error,
//! 3 numeric-convergence failure.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;
use report::{
    write_compare_csv, write_json, write_representation_csv, Conventions, ErrorRecord, Report,
    TOOL, VERSION,
};

#[derive(Parser)]
#[command(name = "mpxlab", version, about = "Metaplectic index laboratory")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for reports.
    #[arg(long, default_value = "mpxlab-out", global = true)]
    out: PathBuf,

    /// Report format.
    #[arg(long, default_value = "both", value_parser = ["json", "csv", "both"], global = true)]
    format: String,

    /// Seed for randomized residual probes.
    #[arg(long, default_value_t = 7, global = true)]
    seed: u64,

    /// Suppress console summaries.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Homomorphism/unitarity/Egorov/equivariance residual tables across K.
    VerifyRepresentation,
    /// Twisted Euler indices by spectral truncation.
    AnalyticIndex,
    /// Localized topological indices with quadrature convergence data.
    TopologicalIndex,
    /// Side-by-side analytic vs. topological comparison.
    Compare,
    /// Bott-element ellipticity certificates and rotation-homotopy curves.
    BottCheck,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::VerifyRepresentation => "verify-representation",
            Command::AnalyticIndex => "analytic-index",
            Command::TopologicalIndex => "topological-index",
            Command::Compare => "compare",
            Command::BottCheck => "bott-check",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let subcommand = cli.command.name().to_string();

    let config_path = match &cli.config {
        Some(p) => p.clone(),
        None => {
            eprintln!("error: --config PATH is required");
            return ExitCode::from(2);
        }
    };
    let config = match Config::from_path(&config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let experiment = match config.build() {
        Ok(e) => e,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };

    let conventions = Conventions::new(experiment.config.tolerances);
    let emit_json = cli.format == "json" || cli.format == "both";
    let emit_csv = cli.format == "csv" || cli.format == "both";
    let json_path = cli.out.join("report.json");

    let flush_error = |kind: String, message: String| {
        let record = ErrorRecord {
            tool: TOOL,
            version: VERSION,
            subcommand: subcommand.clone(),
            error_kind: kind,
            message,
        };
        let _ = write_json(&cli.out.join("error.json"), &record);
    };

    macro_rules! finish {
        ($results:expr) => {{
            let report = Report {
                tool: TOOL,
                version: VERSION,
                subcommand: subcommand.clone(),
                conventions: conventions.clone(),
                config: experiment.config.clone(),
                results: $results,
            };
            if emit_json {
                if let Err(e) = write_json(&json_path, &report) {
                    eprintln!("cannot write report: {e:#}");
                    return ExitCode::from(2);
                }
            }
        }};
    }

    match cli.command {
        Command::VerifyRepresentation => match run::verify_representation(&experiment, cli.seed) {
            Ok(rows) => {
                if !cli.quiet {
                    for r in &rows {
                        println!(
                            "K={:2} M={:2}: hom {:.2e}  unit {:.2e}  equiv {:.2e}  egorov {:.2e}",
                            r.cutoff,
                            r.margin,
                            r.homomorphism_defect,
                            r.unitarity_defect,
                            r.equivariance_residual,
                            r.egorov_residual
                        );
                    }
                }
                if emit_csv {
                    if let Err(e) =
                        write_representation_csv(&cli.out.join("representation.csv"), &rows)
                    {
                        eprintln!("cannot write csv: {e:#}");
                        return ExitCode::from(2);
                    }
                }
                finish!(rows);
                ExitCode::SUCCESS
            }
            Err(e) => {
                flush_error("representation".into(), format!("{e:#}"));
                eprintln!("error: {e:#}");
                ExitCode::from(3)
            }
        },
        Command::AnalyticIndex => match run::analytic_rows(&experiment) {
            Ok(rows) => {
                if !cli.quiet {
                    for r in &rows {
                        println!("{}: analytic index {}", r.projection, r.index);
                    }
                }
                finish!(rows);
                ExitCode::SUCCESS
            }
            Err(e) => {
                flush_error(format!("{e:?}"), e.to_string());
                eprintln!("error: {e}");
                ExitCode::from(run::exit_code_for(&e) as u8)
            }
        },
        Command::TopologicalIndex => match run::topological_rows(&experiment) {
            Ok(rows) => {
                if !cli.quiet {
                    for r in &rows {
                        println!(
                            "{}: topological total {:+.6}{:+.6}i",
                            r.projection, r.total.re, r.total.im
                        );
                    }
                }
                finish!(rows);
                ExitCode::SUCCESS
            }
            Err(e) => {
                flush_error(format!("{e:?}"), e.to_string());
                eprintln!("error: {e}");
                ExitCode::from(run::exit_code_for(&e) as u8)
            }
        },
        Command::Compare => match run::compare_rows(&experiment) {
            Ok((rows, all_pass)) => {
                if !cli.quiet {
                    for r in &rows {
                        println!(
                            "{}: analytic {} vs topological {:+.6}{:+.6}i  [{}]",
                            r.projection,
                            r.analytic_index,
                            r.topological_total.re,
                            r.topological_total.im,
                            if r.total_pass { "pass" } else { "FAIL" }
                        );
                    }
                }
                if emit_csv {
                    if let Err(e) = write_compare_csv(&cli.out.join("compare.csv"), &rows) {
                        eprintln!("cannot write csv: {e:#}");
                        return ExitCode::from(2);
                    }
                }
                finish!(rows);
                if all_pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                flush_error(format!("{e:?}"), e.to_string());
                eprintln!("error: {e}");
                ExitCode::from(run::exit_code_for(&e) as u8)
            }
        },
        Command::BottCheck => match run::bott_rows(&experiment) {
            Ok(rows) => {
                if !cli.quiet {
                    for r in &rows {
                        println!(
                            "{}: bott certificate {:.4}, product {:.4}",
                            r.projection, r.bott_certificate, r.product_certificate
                        );
                    }
                }
                finish!(rows);
                ExitCode::SUCCESS
            }
            Err(e) => {
                flush_error(format!("{e:?}"), e.to_string());
                eprintln!("error: {e}");
                ExitCode::from(run::exit_code_for(&e) as u8)
            }
        },
    }
}
