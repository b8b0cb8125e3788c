use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dlg_cli::document::load_policy;
use dlg_cli::script::{load_script, run_script, RunOptions};
use dlg_cli::{all_conflicts, emit_audit};
use dlg_core::revocation::enumerate_schemes;

/// Delegation policies: run request scripts, list revocation schemes and
/// check policies for conflicts.
#[derive(Debug, Parser)]
#[command(name = "dlg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a policy file and optionally run a script against it.
    Load {
        policy: PathBuf,
        #[command(subcommand)]
        run: Option<Run>,
    },
    /// Print the sixteen revocation schemes.
    Schemes,
    /// Report conflicting rule pairs of a policy file.
    Check { policy: PathBuf },
}

#[derive(Debug, Subcommand)]
enum Run {
    /// Execute a request script and print its transcript.
    Run {
        script: PathBuf,
        /// Write the audit log to this file.
        #[arg(long)]
        audit: Option<PathBuf>,
        /// Continue after failing commands.
        #[arg(long)]
        keep_going: bool,
    },
}

const PARSE_FAILURE: u8 = 1;
const RUNTIME_FAILURE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Schemes => {
            let names: String = enumerate_schemes().iter().map(|s| s.hyphenated() + "\n").collect();
            // A closed pipe (e.g. `dlg schemes | head`) is not an error.
            let _ = std::io::stdout().write_all(names.as_bytes());
            ExitCode::SUCCESS
        }
        Command::Check { policy } => {
            let doc = match load_policy(&policy) {
                Ok(doc) => doc,
                Err(e) => return fail(PARSE_FAILURE, e),
            };
            let report = all_conflicts(&doc.policy);
            if report.is_consistent() {
                println!("no conflicts");
            } else {
                print!("{report}");
            }
            ExitCode::SUCCESS
        }
        Command::Load { policy, run } => {
            let doc = match load_policy(&policy) {
                Ok(doc) => doc,
                Err(e) => return fail(PARSE_FAILURE, e),
            };
            let Some(Run::Run {
                script,
                audit,
                keep_going,
            }) = run
            else {
                println!("{}: {} rules", policy.display(), doc.policy.rules().len());
                return ExitCode::SUCCESS;
            };
            let script = match load_script(&script, doc.policy.universe()) {
                Ok(script) => script,
                Err(e) => return fail(PARSE_FAILURE, e),
            };
            let options = RunOptions {
                keep_going,
                ..RunOptions::default()
            };
            let report = run_script(&doc, &script, &options);
            print!("{}", report.render_transcript());
            if let Some(path) = audit {
                if let Err(e) = emit_audit(report.engine.audit(), &path) {
                    return fail(RUNTIME_FAILURE, format!("{}: {e}", path.display()));
                }
            }
            for (index, message) in &report.failures {
                eprintln!("dlg: command {index}: {message}");
            }
            if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(RUNTIME_FAILURE)
            }
        }
    }
}

fn fail(code: u8, error: impl std::fmt::Display) -> ExitCode {
    eprintln!("dlg: {error}");
    ExitCode::from(code)
}
