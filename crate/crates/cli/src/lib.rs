//! Command-line front end for `so5-core`: argument parsing, deterministic
//! text, JSON and CSV output, and comparison against a reference corpus.

pub mod args;
pub mod commands;
pub mod gauge;
pub mod goldens;
pub mod render;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use args::{parse_irrep_arg, Format, OutputSpec, UsageError};
pub use commands::{Outcome, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
pub use goldens::run_goldens;

#[derive(Debug, Parser)]
#[command(
    name = "so5",
    version,
    about = "so(5) irreps in an SO(3)-coupled basis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct IrrepArg {
    /// First highest-weight label, a non-negative integer.
    #[arg(long)]
    pub v: String,
    /// Second label: integer, `p/2` or decimal half-integer.
    #[arg(long)]
    pub f: String,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Decimal digits for floating-point values.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=15))]
    pub precision: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Angular momentum content of an irrep.
    Branch {
        #[command(flatten)]
        irrep: IrrepArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Coupled (non-orthonormal) basis coefficients.
    Basis {
        #[command(flatten)]
        irrep: IrrepArg,
        #[command(flatten)]
        output: OutputArgs,
        /// Exact radicals (default).
        #[arg(long, conflicts_with = "float")]
        exact: bool,
        /// Floating-point values.
        #[arg(long)]
        float: bool,
    },
    /// Orthonormal coefficients and reduced matrix elements.
    Irrep {
        #[command(flatten)]
        irrep: IrrepArg,
        #[command(flatten)]
        output: OutputArgs,
        /// Write a-tables.json, reduced.json and report.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also export the octupole blocks in the coupled basis.
        #[arg(long)]
        dump_oblocks: bool,
    },
    /// Check commutation relations, Hermiticity and normalization.
    Validate {
        #[command(flatten)]
        irrep: IrrepArg,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Compare against the reference tables.
    Goldens {
        #[command(flatten)]
        output: OutputArgs,
        /// Corpus directory; defaults to the one shipped with the crate.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

fn output_spec(o: &OutputArgs, exact: bool) -> OutputSpec {
    OutputSpec {
        format: o.format,
        precision: o.precision as usize,
        exact,
    }
}

fn label(a: &IrrepArg) -> Result<so5::IrrepLabel, UsageError> {
    parse_irrep_arg(&a.v, &a.f)
}

/// Run a parsed command. Errors carry the exit code to use.
pub fn run(cli: &Cli) -> Result<Outcome, (i32, String)> {
    let usage = |e: UsageError| (EXIT_USAGE, format!("usage error: {}", e));
    let failed = |e: anyhow::Error| (EXIT_VALIDATION, format!("error: {:#}", e));
    match &cli.command {
        Command::Branch { irrep, output } => {
            commands::branch(label(irrep).map_err(usage)?, &output_spec(output, true))
                .map_err(failed)
        }
        Command::Basis {
            irrep,
            output,
            float,
            ..
        } => commands::basis(label(irrep).map_err(usage)?, &output_spec(output, !float))
            .map_err(failed),
        Command::Irrep {
            irrep,
            output,
            out,
            dump_oblocks,
        } => commands::irrep(
            label(irrep).map_err(usage)?,
            &output_spec(output, true),
            out.as_deref(),
            *dump_oblocks,
        )
        .map_err(failed),
        Command::Validate { irrep, output, tol } => {
            if !(tol.is_finite() && *tol > 0.0) {
                return Err(usage(UsageError(format!(
                    "tolerance {} must be positive",
                    tol
                ))));
            }
            commands::validate_cmd(
                label(irrep).map_err(usage)?,
                &output_spec(output, true),
                *tol,
            )
            .map_err(failed)
        }
        Command::Goldens { output, corpus } => {
            let dir = corpus.clone().unwrap_or_else(goldens::default_corpus_dir);
            commands::goldens(&dir, &output_spec(output, true))
                .map_err(|e| (EXIT_USAGE, format!("configuration error: {}", e)))
        }
    }
}
