//! `polarflow`: command-line front end for the polarflow library.

mod commands;
mod error;
mod output;
mod report;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polarflow::mcf::FlowOptions;

use crate::commands::*;
use crate::error::CliError;
use crate::output::{emit, json_bytes, write_sidecar};

#[derive(Parser)]
#[command(name = "polarflow", version, about = "Geodesic, Riccati, wall and flow numerics on polar foliation models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the model catalog.
    Models {
        #[command(subcommand)]
        action: ModelsAction,
    },
    /// Closed-form Jacobi fields: volume density and focal data.
    Jacobi(JacobiArgs),
    /// Leaf-volume density from focal times and multiplicities.
    Reconstruct(ReconstructArgs),
    /// Matrix Riccati integration with the average-trace comparison.
    Riccati(RiccatiArgs),
    /// Reflection closure, irreducible splitting and chamber compactness.
    Arrangement(ArrangementArgs),
    /// Reduced mean curvature flow on the chamber.
    Mcf(McfArgs),
    /// Consistency report for one catalog model.
    Check(CheckArgs),
    /// Randomized property checks seeded by POLARFLOW_SEED.
    Props(PropsArgs),
}

#[derive(Subcommand)]
enum ModelsAction {
    /// Table of catalog ids.
    List,
    /// JSON description of one model at a chamber point.
    Show {
        id: String,
        /// Chamber point, comma separated for products.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct JacobiArgs {
    /// Spectrum JSON (`lambdas`, optional `s0`).
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    input: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "model")]
    theta: Option<String>,
    /// Chamber coordinate whose normal direction is followed.
    #[arg(long, default_value_t = 0)]
    coordinate: usize,
    #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
    t_max: f64,
    /// Focal search grid per 2π.
    #[arg(long, default_value_t = 2048)]
    grid: usize,
    /// Rows in the density CSV.
    #[arg(long, default_value_t = 1025)]
    rows: usize,
    /// Density CSV (`t,f`); standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON; standard output when absent and `--out` is given.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Constraints JSON (`m_half`, `constraints`).
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    input: Option<PathBuf>,
    /// Sphere model whose focal data are used.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "model")]
    theta: Option<f64>,
    #[arg(long, default_value_t = 1025)]
    rows: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RiccatiArgs {
    /// Problem JSON (`r`, `s0`, optional `delta`, `step`, `horizon`).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    horizon: Option<f64>,
    /// CSV `t,avg_trace,model`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ArrangementArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 500)]
    max_walls: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McfArgs {
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    model: Option<String>,
    /// Start point, comma separated for products.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "config")]
    theta0: Option<String>,
    #[arg(long, default_value = "forward")]
    direction: String,
    #[arg(long, required_unless_present = "config")]
    t_end: Option<f64>,
    /// Trajectory CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Batch JSON: one run or a list of runs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for batch runs.
    #[arg(long, default_value_t = 1, requires = "config")]
    jobs: usize,
    /// Directory for batch outputs; defaults to the config's directory.
    #[arg(long, requires = "config")]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    model: String,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PropsArgs {
    /// Cases per property.
    #[arg(long, default_value_t = 20)]
    cases: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn flow_options(args: &McfArgs) -> Result<FlowOptions<f64>, CliError> {
    if !(args.step > 0.0 && args.step <= 1e-2) {
        return Err(CliError::Usage("--step must lie in (0, 1e-2]".into()));
    }
    if args.record_every == 0 {
        return Err(CliError::Usage("--record-every must be at least 1".into()));
    }
    Ok(FlowOptions { step: args.step, record_every: args.record_every, ..FlowOptions::default() })
}

fn write_report(report: &schema::Report, out: Option<&std::path::Path>, command: &str) -> Result<(), CliError> {
    emit(out, &json_bytes(report)?)?;
    if let Some(path) = out {
        write_sidecar(path, command, &[path])?;
    }
    if report.pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.check.as_str()).collect();
        Err(CliError::numerical("report", "CheckFailed", format!("failed checks: {}", failed.join(", "))))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Models { action: ModelsAction::List } => models_list(),
        Command::Models { action: ModelsAction::Show { id, theta, out } } => {
            models_show(&id, theta.as_deref(), out.as_deref())
        }
        Command::Jacobi(a) => jacobi(JacobiRequest {
            input: a.input.as_deref(),
            model: a.model.as_deref(),
            theta: a.theta.as_deref(),
            coordinate: a.coordinate,
            t_max: a.t_max,
            grid: a.grid,
            rows: a.rows,
            out: a.out.as_deref(),
            report: a.report.as_deref(),
        }),
        Command::Reconstruct(a) => reconstruct(ReconstructRequest {
            input: a.input.as_deref(),
            model: a.model.as_deref(),
            theta: a.theta,
            rows: a.rows,
            out: a.out.as_deref(),
            report: a.report.as_deref(),
        }),
        Command::Riccati(a) => riccati(&a.input, a.horizon, a.out.as_deref(), a.report.as_deref()),
        Command::Arrangement(a) => arrangement(&a.input, a.max_walls, a.out.as_deref()),
        Command::Mcf(a) => {
            let options = flow_options(&a)?;
            match &a.config {
                Some(config) => mcf_batch(config, a.jobs, a.out_dir.as_deref(), options),
                None => {
                    let model = a.model.clone().expect("clap requires --model");
                    let start = parse_point(a.theta0.as_deref().expect("clap requires --theta0"))?;
                    let run = McfRun {
                        model,
                        start,
                        direction: parse_direction(&a.direction)?,
                        t_end: a.t_end.expect("clap requires --t-end"),
                        out: a.out.clone(),
                    };
                    mcf_single(run, options)
                }
            }
        }
        Command::Check(a) => {
            let model = parse_model(&a.model)?;
            let point = match a.theta.as_deref() {
                Some(t) => parse_point(t)?,
                None => default_point(&model),
            };
            write_report(&report::check(&model, &point)?, a.out.as_deref(), "check")
        }
        Command::Props(a) => {
            let seed = match std::env::var("POLARFLOW_SEED") {
                Ok(s) => s.trim().parse().map_err(|_| CliError::Usage(format!("POLARFLOW_SEED is not a u64: `{s}`")))?,
                Err(_) => 0,
            };
            write_report(&report::props(seed, a.cases.max(1))?, a.out.as_deref(), "props")
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polarflow: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
