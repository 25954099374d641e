//! `jlm`: multipliers, Lagrangians and first integrals from the command line.
//!
//! Exit codes: 0 success, 1 bad input, 2 the method gave up, 3 a check or
//! comparison failed.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jlm_core::check::{Check, DEFAULT_SEED};
use jlm_core::model::catalog_names;
use jlm_core::multiplier::AnsatzSpec;
use jlm_core::Result;

use commands::{ChainOptions, Common, LagrangianMode, SimulateOptions, VerifyTarget};
use report::Report;

#[derive(Parser)]
#[command(
    name = "jlm",
    version,
    about = "Jacobi last multipliers, Lagrangians and first integrals for planar ODE models"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for the randomized identity checks.
    #[arg(long, global = true, env = "JLM_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Clone)]
struct Target {
    /// Catalog name (optionally `/original` or `/transformed`) or model file.
    #[arg(long, required_unless_present = "all_models")]
    model: Option<String>,
    /// Run on every catalog model concurrently.
    #[arg(long, conflicts_with = "model")]
    all_models: bool,
    /// Parameter values, e.g. `a=1,b=-1/2`.
    #[arg(long, value_name = "NAME=VALUE,...")]
    param: Option<String>,
    /// Ansatz factors to use, from `b0,b1,b2,c1,c2` (default: all).
    #[arg(long, value_name = "FACTORS")]
    ansatz: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the power-exponential ansatz for a multiplier.
    Multiplier {
        #[command(flatten)]
        target: Target,
    },
    /// Build a Lagrangian for the system or for a reduced equation.
    Lagrangian {
        #[command(flatten)]
        target: Target,
        /// Linear Lagrangian of the planar system (the default).
        #[arg(long, conflicts_with = "reduce")]
        system: bool,
        /// Reduce to one second-order equation keeping VAR (catalog default if omitted).
        #[arg(long, value_name = "VAR", num_args = 0..=1, default_missing_value = "")]
        reduce: Option<String>,
        /// Compare against the catalog form; exit 3 on mismatch.
        #[arg(long)]
        compare_paper: bool,
    },
    /// Check a user-supplied Lagrangian, first integral or multiplier.
    Verify {
        #[command(flatten)]
        target: Target,
        /// Work on the second-order equation for VAR.
        #[arg(long, value_name = "VAR")]
        reduce: Option<String>,
        /// Lagrangian expression to check against the Euler-Lagrange equations.
        #[arg(long, value_name = "FILE", group = "what")]
        lagrangian: Option<PathBuf>,
        /// Expression whose flow derivative should vanish.
        #[arg(long, value_name = "FILE", group = "what")]
        integral: Option<PathBuf>,
        /// Expression to check against the multiplier equation.
        #[arg(long, value_name = "FILE", group = "what")]
        multiplier: Option<PathBuf>,
    },
    /// Iterate multiplier -> Lagrangian -> Noether integral -> product multiplier.
    Chain {
        #[command(flatten)]
        target: Target,
        /// Number of multiplier -> integral steps.
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Variable kept by the reduction (catalog default if omitted).
        #[arg(long, value_name = "VAR")]
        reduce: Option<String>,
        /// Generator component along t (default 1, time translation).
        #[arg(long)]
        xi: Option<String>,
        /// Generator component along the kept variable (default 0).
        #[arg(long)]
        eta: Option<String>,
    },
    /// Integrate with RK4 and check conservation of first integrals.
    Simulate {
        #[command(flatten)]
        target: Target,
        /// Initial state, e.g. `w1=2,w2=1` (catalog default if omitted).
        #[arg(long, value_name = "VAR=VALUE,...")]
        init: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        /// End time (catalog default if omitted).
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Write the trajectory as CSV (`-` for standard output).
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        /// Measure the drift of the model's known first integrals.
        #[arg(long)]
        check_integrals: bool,
        /// Also measure the drift of the integral in FILE.
        #[arg(long, value_name = "FILE")]
        integral: Option<PathBuf>,
    },
}

impl Command {
    fn target(&self) -> &Target {
        match self {
            Command::Multiplier { target }
            | Command::Lagrangian { target, .. }
            | Command::Verify { target, .. }
            | Command::Chain { target, .. }
            | Command::Simulate { target, .. } => target,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Multiplier { .. } => "multiplier",
            Command::Lagrangian { .. } => "lagrangian",
            Command::Verify { .. } => "verify",
            Command::Chain { .. } => "chain",
            Command::Simulate { .. } => "simulate",
        }
    }

    fn run(&self, model: &str, common: &Common) -> Result<Report> {
        match self {
            Command::Multiplier { .. } => commands::multiplier(model, common),
            Command::Lagrangian { system, reduce, compare_paper, .. } => {
                let mode = match reduce {
                    Some(v) if !*system => LagrangianMode::Reduce(Some(v.clone()).filter(|v| !v.is_empty())),
                    _ => LagrangianMode::System,
                };
                commands::lagrangian(model, &mode, *compare_paper, common)
            }
            Command::Verify { reduce, lagrangian, integral, multiplier, .. } => {
                let target = match (lagrangian, integral, multiplier) {
                    (Some(p), _, _) => VerifyTarget::Lagrangian(p.clone()),
                    (_, Some(p), _) => VerifyTarget::Integral(p.clone()),
                    (_, _, Some(p)) => VerifyTarget::Multiplier(p.clone()),
                    _ => {
                        return Err(jlm_core::JlmError::Input(
                            "verify needs one of --lagrangian, --integral or --multiplier".into(),
                        ))
                    }
                };
                commands::verify(model, reduce.as_deref(), &target, common)
            }
            Command::Chain { depth, reduce, xi, eta, .. } => {
                let opts = ChainOptions { depth: *depth, reduce: reduce.clone(), xi: xi.clone(), eta: eta.clone() };
                commands::chain(model, &opts, common)
            }
            Command::Simulate { init, t0, t1, dt, csv, check_integrals, integral, .. } => {
                let opts = SimulateOptions {
                    init: init.clone(),
                    t0: *t0,
                    t1: *t1,
                    dt: *dt,
                    csv: csv.clone(),
                    check_integrals: *check_integrals,
                    integral: integral.clone(),
                };
                commands::simulate(model, &opts, common)
            }
        }
    }
}

fn common(cli: &Cli) -> Result<Common> {
    let target = cli.command.target();
    let params = match &target.param {
        Some(text) => commands::parse_rational_assignments(text)?,
        None => Vec::new(),
    };
    let ansatz = match &target.ansatz {
        Some(text) => AnsatzSpec::from_names(text)?,
        None => AnsatzSpec::default(),
    };
    Ok(Common { check: Check::with_seed(cli.seed.unwrap_or(DEFAULT_SEED)), params, ansatz })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    let target = cli.command.target();
    let reports: Vec<Report> = match common(&cli) {
        Err(e) => vec![Report::failed(command, target.model.as_deref().unwrap_or("all"), &e)],
        Ok(common) if target.all_models => std::thread::scope(|s| {
            let handles: Vec<_> = catalog_names()
                .into_iter()
                .map(|name| {
                    let (common, cmd) = (&common, &cli.command);
                    s.spawn(move || cmd.run(name, common).unwrap_or_else(|e| Report::failed(command, name, &e)))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        }),
        Ok(common) => {
            let model = target.model.as_deref().expect("clap requires --model");
            vec![cli.command.run(model, &common).unwrap_or_else(|e| Report::failed(command, model, &e))]
        }
    };

    match cli.format {
        Format::Json => {
            let doc = if target.all_models {
                serde_json::to_string_pretty(&reports)
            } else {
                serde_json::to_string_pretty(&reports[0])
            };
            println!("{}", doc.expect("reports serialize"));
        }
        Format::Text => {
            for r in &reports {
                let text = r.render_text();
                if r.error.is_some() {
                    eprint!("{text}");
                } else {
                    print!("{text}");
                }
            }
        }
    }
    let code = reports.iter().map(|r| r.exit_code).max().unwrap_or(0);
    ExitCode::from(code as u8)
}
