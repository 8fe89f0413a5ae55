//! `fibcode` command-line tool.
//!
//! Exit status: 0 on success, 1 when input fails validation or cannot be
//! corrected, 2 on a usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod report;

#[derive(Debug, Parser)]
#[command(name = "fibcode", version, about = "Encode, corrupt and correct Fibonacci-coded 2x2 matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Minimal,
    Unrestricted,
}

impl From<ProfileArg> for fibcode::Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Minimal => fibcode::Profile::Minimal,
            ProfileArg::Unrestricted => fibcode::Profile::Unrestricted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Both,
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Uniform,
    Nonsingular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a message matrix or a hex bitstream into a codeword file.
    Encode {
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value = "minimal")]
        profile: ProfileArg,
        /// Bitstream of 4h bits, packed into four h-bit blocks.
        #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
        bits: Option<String>,
        /// Message entries m1,m2,m3,m4 (row-major).
        #[arg(long, value_delimiter = ',')]
        matrix: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a codeword file, correct it and print the message.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        /// Only run the determinant check and plain decoding.
        #[arg(long)]
        no_correct: bool,
        #[arg(long, value_enum, default_value = "minimal")]
        profile: ProfileArg,
    },
    /// Inject seeded integer errors into a codeword file.
    Corrupt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        errors: usize,
        /// Largest error magnitude; defaults to F(n-1).
        #[arg(long)]
        bound: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Entries to corrupt, e.g. `c1,c4` or `1,4`.
        #[arg(long, value_delimiter = ',')]
        positions: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "both")]
        sign: SignArg,
        /// Redraw errors that would make an entry negative.
        #[arg(long)]
        nonnegative: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo correction statistics.
    Stats {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        errors: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        bound: Option<u64>,
        #[arg(long, value_enum, default_value = "minimal")]
        profile: ProfileArg,
        #[arg(long, value_enum, default_value = "uniform")]
        sampler: SamplerArg,
        #[arg(long, value_enum, default_value = "both")]
        sign: SignArg,
        #[arg(long)]
        nonnegative: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Codeword length and redundancy for n and a k-bit message.
    Redundancy {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u64,
    },
    /// Print F(n).
    Fib {
        #[arg(long)]
        n: u32,
    },
}

/// A command failure and the exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Encode { n, profile, bits, matrix, out } => {
            commands::encode(n, profile.into(), bits.as_deref(), matrix.as_deref(), &out)
        }
        Command::Decode { input, no_correct, profile } => commands::decode(&input, no_correct, profile.into()),
        Command::Corrupt { input, errors, bound, seed, positions, sign, nonnegative, out } => {
            let opts = commands::CorruptOptions { errors, bound, seed, positions, sign, nonnegative };
            commands::corrupt(&input, &opts, &out)
        }
        Command::Stats { n, errors, trials, seed, bound, profile, sampler, sign, nonnegative, format, out } => {
            let opts = report::StatsOptions {
                n,
                errors,
                trials,
                seed,
                bound,
                profile: profile.into(),
                sampler,
                sign,
                nonnegative,
            };
            commands::stats(&opts, format, out.as_deref())
        }
        Command::Redundancy { n, k } => commands::redundancy(n, k),
        Command::Fib { n } => commands::fib(n),
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
            let (CliError::Usage(msg) | CliError::Failure(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.code())
        }
    }
}
