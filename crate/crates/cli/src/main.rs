use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nstorus_cli::{run_experiment, CliError, CliResult, RunManifest, RunOptions, Summary};

#[derive(Parser)]
#[command(name = "nstorus", version, about = "Spectral Navier-Stokes experiments on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run manifest (JSON).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    /// Output directory; overrides the manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for random data and randomised checks; overrides the manifest.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Byte-identical artifacts for a fixed manifest and seed.
    #[arg(long, global = true)]
    reproducible: bool,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Picard solve with momentum residual and trajectory output.
    Solve,
    /// Certified constants, existence time and small-data threshold.
    Certify,
    /// Coefficient decay fits, strip evaluation and decay to the mean.
    Decay,
    /// Gap between two solves in the analytic norms.
    Uniqueness,
    /// Domination of every Picard iterate by the majorant.
    MajorantCheck,
    /// Majorant calculus rows and constant scans.
    Props,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Certify => "certify",
            Command::Decay => "decay",
            Command::Uniqueness => "uniqueness",
            Command::MajorantCheck => "majorant-check",
            Command::Props => "props",
        }
    }
}

fn run(cli: &Cli) -> CliResult<Summary> {
    let path = cli
        .manifest
        .as_ref()
        .ok_or_else(|| CliError::usage("--manifest", "a manifest is required"))?;
    let manifest = RunManifest::load(path)?;
    if manifest.experiment.kind() != cli.command.name() {
        return Err(CliError::usage(
            "experiment.kind",
            format!(
                "manifest describes `{}` but the subcommand is `{}`",
                manifest.experiment.kind(),
                cli.command.name()
            ),
        ));
    }
    let opts = RunOptions {
        out: cli.out.clone(),
        seed: cli.seed,
        reproducible: cli.reproducible,
        base: path.parent().map(PathBuf::from).unwrap_or_default(),
    };
    match cli.threads {
        Some(0) => Err(CliError::usage("--threads", "must be at least 1")),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::usage("--threads", e.to_string()))?
            .install(|| run_experiment(&manifest, &opts)),
        None => run_experiment(&manifest, &opts),
    }
}

/// Exit code and the text destined for standard output and standard error.
struct Execution {
    code: u8,
    stdout: String,
    stderr: String,
}

fn execute<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            return Execution {
                code: 0,
                stdout: e.to_string(),
                stderr: String::new(),
            }
        }
        Err(e) => {
            let err = CliError::Usage {
                field: None,
                message: e.kind().to_string(),
            };
            return Execution {
                code: 2,
                stdout: String::new(),
                stderr: format!("{e}{}\n", serde_json::json!({ "error": err.report() })),
            };
        }
    };
    match run(&cli) {
        Ok(summary) => Execution {
            code: if summary.passed { 0 } else { 1 },
            stdout: serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n",
            stderr: String::new(),
        },
        Err(err) => {
            let report = err.report();
            Execution {
                code: report.exit_code as u8,
                stdout: String::new(),
                stderr: format!("{}\n", serde_json::json!({ "error": report })),
            }
        }
    }
}

fn main() -> ExitCode {
    let e = execute(std::env::args_os());
    print!("{}", e.stdout);
    eprint!("{}", e.stderr);
    ExitCode::from(e.code)
}

#[cfg(test)]
mod cli_tests;
