use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sofft_cli::commands::{parse_grid_override, DEFAULT_TOL};
use sofft_cli::{analyze, check, dims_output, CliError, Emit, Format, Problem, EXIT_CHECK_FAILED};

/// Symbolic derivations for second-order field theories.
#[derive(Debug, Parser)]
#[command(name = "sofft", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one derivation on a problem file.
    Analyze {
        file: PathBuf,
        /// legendre, extended-legendre, regularity, euler-lagrange,
        /// hamilton, constraints, forms, dims or pairing.
        #[arg(long)]
        emit: Emit,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Check the solution block against the Euler-Lagrange equations.
    Check {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Axis override `name=min:max:count`; repeatable.
        #[arg(long)]
        grid: Vec<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Print the dimension table for `m` base and `n` field coordinates.
    Dims {
        m: u64,
        n: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
        }
    }
}

/// Writes to stdout, ignoring a closed pipe on the reading side.
fn print_out(text: &str) {
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Analyze { file, emit, format } => {
            let problem = Problem::load(&file)?;
            print_out(&analyze(&problem, emit)?.render(format.into()));
            Ok(0)
        }
        Command::Check { file, tol, grid, format } => {
            let problem = Problem::load(&file)?;
            let overrides = grid.iter().map(|g| parse_grid_override(g)).collect::<Result<Vec<_>, _>>()?;
            let outcome = check(&problem, tol, &overrides)?;
            print_out(&outcome.output.render(format.into()));
            Ok(if outcome.passed { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Dims { m, n, format } => {
            if m == 0 || n == 0 {
                return Err(CliError::Precondition("m and n must be positive".into()));
            }
            print_out(&dims_output(m, n).render(format.into()));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { sofft_cli::EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
