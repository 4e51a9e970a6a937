//! Entry point: argument parsing, run-directory bookkeeping, exit codes.
//!
//! Every invocation gets a run directory under the output root (`runs/` or
//! `$QLS_OUT_DIR`) named by subcommand and config hash, a `report.json`
//! artifact mirroring what is printed to stdout, and one appended line in the
//! root's `manifests.jsonl`. Exit codes: 0 ok, 2 usage, 3 hypothesis refused,
//! 4 diverged, 5 not converged, 6 degenerate amplitude (inside the excluded
//! set), 7 io.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qls_core::{Error as CoreError, OutcomeTag};

mod commands;
mod config;
mod run;

use commands::{CmdError, Ctx};
use run::{append_manifest, config_hash, unix_now, RunDir, RunManifest};

#[derive(Parser)]
#[command(name = "qls", version, about = "Quasi-periodic standing waves of quasi-linear Schrödinger equations on the torus")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate and classify the resonant set of the configured basis.
    Resonance {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the Diophantine quality of a mass parameter.
    CheckRho {
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 2.0)]
        tau: f64,
        /// Largest denominator audited by the finite certificate.
        #[arg(long, default_value_t = 1000)]
        max_m: u64,
        /// Smallest acceptable gamma.
        #[arg(long, default_value_t = 1e-6)]
        floor: f64,
    },
    /// Solve the full nonlinear system at the configured eps and amplitudes.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve over the configured (amplitude, eps) grid; one CSV row per cell.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monte-Carlo estimate of the excluded amplitude fraction per eps.
    Measure {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-check an exported solution file against the equation.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Extended truncation radius for the residual check.
        #[arg(long)]
        k_ext: Option<i64>,
    },
    /// Scan small integer bases for prescribed resonance structure.
    Search {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        b: usize,
        /// Component range scanned per vector entry.
        #[arg(long, default_value_t = 2)]
        radius: i64,
        /// Skip bases whose enumeration bound exceeds this.
        #[arg(long, default_value_t = 200.0)]
        bound_cap: f64,
        /// Stop after this many hits.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        allow_triple: bool,
        /// Require exactly this many resonant modes beyond the anchors.
        #[arg(long)]
        k2_count: Option<usize>,
    },
}

fn subcommand_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Resonance { .. } => "resonance",
        Cmd::CheckRho { .. } => "check-rho",
        Cmd::Solve { .. } => "solve",
        Cmd::Sweep { .. } => "sweep",
        Cmd::Measure { .. } => "measure",
        Cmd::Verify { .. } => "verify",
        Cmd::Search { .. } => "search",
    }
}

/// Hash key for the run directory: config file bytes when the command takes a
/// config (falling back to the path if unreadable, so the failed run is still
/// recorded), canonical argument string otherwise.
fn hash_input(cmd: &Cmd) -> String {
    match cmd {
        Cmd::Resonance { config }
        | Cmd::Solve { config }
        | Cmd::Sweep { config }
        | Cmd::Measure { config } => match fs::read(config) {
            Ok(bytes) => config_hash(&bytes),
            Err(_) => config_hash(config.display().to_string().as_bytes()),
        },
        Cmd::Verify {
            config, solution, ..
        } => {
            let mut bytes = fs::read(config).unwrap_or_else(|_| {
                config.display().to_string().into_bytes()
            });
            bytes.extend_from_slice(solution.display().to_string().as_bytes());
            config_hash(&bytes)
        }
        Cmd::CheckRho {
            rho,
            tau,
            max_m,
            floor,
        } => config_hash(format!("check-rho {rho} {tau} {max_m} {floor}").as_bytes()),
        Cmd::Search {
            d,
            b,
            radius,
            bound_cap,
            limit,
            allow_triple,
            k2_count,
        } => config_hash(
            format!("search {d} {b} {radius} {bound_cap} {limit:?} {allow_triple} {k2_count:?}")
                .as_bytes(),
        ),
    }
}

fn dispatch(ctx: &mut Ctx, cmd: &Cmd) -> Result<(), CmdError> {
    match cmd {
        Cmd::Resonance { config } => commands::resonance(ctx, config),
        Cmd::CheckRho {
            rho,
            tau,
            max_m,
            floor,
        } => commands::check_rho(ctx, *rho, *tau, *max_m, *floor),
        Cmd::Solve { config } => commands::solve(ctx, config),
        Cmd::Sweep { config } => commands::sweep(ctx, config),
        Cmd::Measure { config } => commands::measure(ctx, config),
        Cmd::Verify {
            config,
            solution,
            k_ext,
        } => commands::verify(ctx, config, solution, *k_ext),
        Cmd::Search {
            d,
            b,
            radius,
            bound_cap,
            limit,
            allow_triple,
            k2_count,
        } => commands::search(
            ctx,
            *d,
            *b,
            *radius,
            *bound_cap,
            *limit,
            *allow_triple,
            *k2_count,
        ),
    }
}

fn core_exit(e: &CoreError) -> (String, u8) {
    match e {
        CoreError::Io(_) | CoreError::Serde(_) => ("io".into(), 7),
        CoreError::InvalidBasis(_) | CoreError::InvalidParam(_) | CoreError::DimensionMismatch(_) => {
            ("usage".into(), 2)
        }
        other => {
            let tag = other.outcome();
            let code = match tag {
                OutcomeTag::Ok => 0,
                OutcomeTag::HypothesisRefused => 3,
                OutcomeTag::Diverged => 4,
                OutcomeTag::NotConverged => 5,
                OutcomeTag::InsideIEps => 6,
            };
            (tag.as_str().into(), code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let subcommand = subcommand_name(&cli.cmd);
    let hash = hash_input(&cli.cmd);
    let started = unix_now();

    let mut rd = match RunDir::create(subcommand, &hash) {
        Ok(rd) => rd,
        Err(e) => {
            eprintln!("error: cannot create run directory: {e}");
            return ExitCode::from(7);
        }
    };

    let mut ctx = Ctx {
        rd: &mut rd,
        report: None,
    };
    let result = dispatch(&mut ctx, &cli.cmd);

    // The report goes out even when the command failed: a refusal with its
    // numbers beats a bare exit code.
    let report = ctx.report.take();
    let mut io_trouble = false;
    if let Some(report) = &report {
        match rd.write_json("report.json", report) {
            Ok(_) => {}
            Err(e) => {
                eprintln!("error: cannot write report: {e}");
                io_trouble = true;
            }
        }
        match serde_json::to_string_pretty(report) {
            Ok(text) => println!("{text}"),
            Err(e) => {
                eprintln!("error: cannot render report: {e}");
                io_trouble = true;
            }
        }
    }

    let (mut outcome, mut code) = match &result {
        Ok(()) => ("ok".to_string(), 0u8),
        Err(CmdError::Usage(violations)) => {
            for v in violations {
                eprintln!("error: {v}");
            }
            ("usage".into(), 2)
        }
        Err(CmdError::Io(e)) => {
            eprintln!("error: {e}");
            ("io".into(), 7)
        }
        Err(CmdError::Core(e)) => {
            eprintln!("error: {e}");
            core_exit(e)
        }
    };
    if io_trouble && code == 0 {
        outcome = "io".into();
        code = 7;
    }

    let manifest = RunManifest {
        config_hash: hash,
        tool_version: env!("CARGO_PKG_VERSION"),
        subcommand: subcommand.to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        outcome,
        artifacts: rd.artifacts.clone(),
    };
    if let Err(e) = append_manifest(&rd.root, &manifest) {
        eprintln!("error: cannot append manifest: {e}");
        if code == 0 {
            code = 7;
        }
    }
    ExitCode::from(code)
}
