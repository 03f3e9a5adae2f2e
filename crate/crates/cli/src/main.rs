use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ueq_cli::demo::identity_demo;
use ueq_cli::{check, load_grammar, normalize, smt_sentence, CheckOptions, CliError, EXIT_ERROR};

/// Equivalence testing for unambiguous context-free grammars.
#[derive(Parser)]
#[command(name = "ueq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Chomsky normal form of a grammar and its size.
    Normalize { file: PathBuf },
    /// Compare two grammars with every available strategy.
    Check {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 14)]
        max_len: usize,
        #[arg(long, default_value_t = 8)]
        degree: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 8)]
        trials: usize,
        #[arg(long, default_value_t = 2_147_483_647)]
        prime: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample points for the numeric comparison of commutative images.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Longest words searched for ambiguity (capped by --max-len).
        #[arg(long, default_value_t = 10)]
        audit_len: usize,
        /// Also write the SMT-LIB sentence to this path.
        #[arg(long)]
        emit_smt: Option<PathBuf>,
        /// Print the report as a single JSON document.
        #[arg(long)]
        json: bool,
    },
    /// Show the standard polynomial identity at work for d×d matrices.
    IdentityDemo {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the SMT-LIB sentence comparing commutative images.
    Smt {
        first: PathBuf,
        second: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Normalize { file } => {
            let g = load_grammar(&file)?;
            for d in &g.diagnostics {
                eprintln!("{d}");
            }
            let _ = stdout.write_all(normalize(&g).as_bytes());
            Ok(0)
        }
        Command::Check {
            first,
            second,
            max_len,
            degree,
            dim,
            trials,
            prime,
            seed,
            samples,
            audit_len,
            emit_smt,
            json,
        } => {
            let (g1, g2) = (load_grammar(&first)?, load_grammar(&second)?);
            let opts = CheckOptions {
                max_len,
                degree,
                dim,
                trials,
                prime,
                seed,
                samples,
                audit_len,
            };
            let mut report = check(&g1, &g2, &opts)?;
            if let Some(path) = emit_smt {
                write_file(&path, &smt_sentence(&g1, &g2)?)?;
                report.smt_emitted = Some(path.display().to_string());
            }
            let text = if json {
                serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
            } else {
                report.to_string()
            };
            let _ = stdout.write_all(text.as_bytes());
            Ok(report.exit_code())
        }
        Command::IdentityDemo { dim, seed } => {
            let _ = stdout.write_all(identity_demo(dim, seed)?.as_bytes());
            Ok(0)
        }
        Command::Smt {
            first,
            second,
            output,
        } => {
            let (g1, g2) = (load_grammar(&first)?, load_grammar(&second)?);
            write_file(&output, &smt_sentence(&g1, &g2)?)?;
            let _ = writeln!(stdout, "wrote {}", output.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
