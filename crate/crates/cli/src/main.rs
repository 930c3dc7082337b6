//! liext: exact computations with quadratic coderivations of graded
//! symmetric coalgebras, driven by JSON problem files.

mod commands;
mod problem;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use commands::Task;
use thiserror::Error;

#[derive(Parser)]
#[command(name = "liext", version, about = "Exact computations with extensions of graded Lie algebras: brackets, codifferentials, extension checks, equivalences, cohomology, classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every problem-file task.
#[derive(Args)]
struct Common {
    /// Problem file (JSON).
    file: PathBuf,
    /// Bind a parameter, e.g. --at b=-1; repeatable, overrides instantiate.
    #[arg(long = "at", value_name = "P=V")]
    at: Vec<String>,
    /// Emit the report as JSON.
    #[arg(long)]
    json: bool,
    /// Witness file with an invertible map g and optional correction beta.
    #[arg(long, value_name = "FILE")]
    witness: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check that the target cochain squares to zero.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Bracket two named cochains.
    Bracket {
        #[command(flatten)]
        common: Common,
        /// Left operand, a cochain name.
        a: Option<String>,
        /// Right operand, a cochain name.
        b: Option<String>,
    },
    /// Conjugate the target cochain by the witness map g.
    Conjugate {
        #[command(flatten)]
        common: Common,
    },
    /// Verify that delta, mu, lambda, psi form an extension.
    VerifyExt {
        #[command(flatten)]
        common: Common,
    },
    /// Transform an extension by a witness map and a correction.
    Equiv {
        #[command(flatten)]
        common: Common,
        /// Correction cochain name.
        #[arg(long)]
        beta: Option<String>,
    },
    /// Cohomology of an operator at a module slice.
    Cohomology {
        #[command(flatten)]
        common: Common,
        /// Operator: mu, dl, double, or triple.
        #[arg(long)]
        op: Option<String>,
        /// Slice k,l: module factors and complement factors.
        #[arg(long, value_name = "K,L")]
        slice: Option<String>,
    },
    /// Classify extensions or deformations.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Classification mode: 3 extensions of a structure map, 5 extension
        /// moduli of an action, 8 deformations, 9 and 10 module deformations.
        #[arg(long)]
        theorem: Option<u32>,
    },
    /// Count inequivalent first-order deformations of an extension.
    Deform {
        #[command(flatten)]
        common: Common,
    },
    /// Run every fixture in a directory and compare against expectations.
    Fixtures {
        /// Fixture directory.
        #[arg(default_value = "fixtures")]
        dir: PathBuf,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error(transparent)]
    Scalar(#[from] liext_core::ScalarError),
    #[error(transparent)]
    Space(#[from] liext_core::SpaceError),
    #[error(transparent)]
    Cochain(#[from] liext_core::CochainError),
    #[error(transparent)]
    Extension(#[from] liext_core::ExtensionError),
    #[error(transparent)]
    Cohomology(#[from] liext_core::CohomologyError),
    #[error(transparent)]
    Deformation(#[from] liext_core::DeformationError),
}

impl CliError {
    fn invalid(location: &str, err: impl std::fmt::Display) -> CliError {
        CliError::Invalid {
            location: location.to_string(),
            message: err.to_string(),
        }
    }

    /// Prefixes the offending file so every failure names its location.
    fn at_file(self, path: &Path) -> CliError {
        match self {
            CliError::Invalid { location, message } => CliError::Invalid {
                location: format!("{}: {location}", path.display()),
                message,
            },
            CliError::Io { .. } | CliError::Parse { .. } => self,
            other => CliError::Invalid {
                location: path.display().to_string(),
                message: other.to_string(),
            },
        }
    }
}

/// Options shared by the problem-file tasks.
pub struct Options {
    pub at: Vec<String>,
    pub json: bool,
    pub witness: Option<PathBuf>,
}

impl From<&Common> for Options {
    fn from(c: &Common) -> Options {
        Options {
            at: c.at.clone(),
            json: c.json,
            witness: c.witness.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: &Command) -> Result<bool, CliError> {
    match command {
        Command::Check { common } => run(&Task::Check, common),
        Command::Bracket { common, a, b } => {
            run(&Task::Bracket { a: a.clone(), b: b.clone() }, common)
        }
        Command::Conjugate { common } => run(&Task::Conjugate, common),
        Command::VerifyExt { common } => run(&Task::VerifyExt, common),
        Command::Equiv { common, beta } => run(&Task::Equiv { beta: beta.clone() }, common),
        Command::Cohomology { common, op, slice } => run(
            &Task::Cohomology {
                operator: op.clone(),
                slice: slice.clone(),
            },
            common,
        ),
        Command::Classify { common, theorem } => {
            run(&Task::Classify { theorem: *theorem }, common)
        }
        Command::Deform { common } => run(&Task::Classify { theorem: Some(8) }, common),
        Command::Fixtures { dir } => commands::run_fixtures(dir),
    }
}

fn run(task: &Task, common: &Common) -> Result<bool, CliError> {
    commands::run(task, &common.file, &Options::from(common))
}
