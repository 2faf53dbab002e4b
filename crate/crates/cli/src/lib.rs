//! Command-line front end: word arithmetic, state evaluation and verifiers.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
pub mod corpus;
pub mod measure_file;
pub mod render;

pub use render::Format;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        CliError { code: EXIT_DOMAIN, message: message.into() }
    }
}

impl From<bstoeplitz_core::Error> for CliError {
    fn from(e: bstoeplitz_core::Error) -> Self {
        use bstoeplitz_core::Error as E;
        let code = match e {
            E::InvalidParams { .. }
            | E::Parse { .. }
            | E::NotNormal { .. }
            | E::InvalidMeasure(_)
            | E::InvalidVector(_)
            | E::ExponentTooLarge(_) => EXIT_USAGE,
            E::BelowCritical { .. }
            | E::RequiresDDividesC { .. }
            | E::RequiresDNotDividesC { .. }
            | E::SizeCap { .. }
            | E::HeightExceedsTruncation { .. }
            | E::Boundary(_) => EXIT_DOMAIN,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bstoeplitz", version, about = "Baumslag-Solitar monoids, their Toeplitz algebras and KMS states")]
pub struct Cli {
    /// Exponent c in the relation a b^c = b^d a.
    #[arg(long, global = true, default_value_t = 2)]
    pub c: u64,
    /// Exponent d in the relation a b^c = b^d a.
    #[arg(long, global = true, default_value_t = 3)]
    pub d: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Plain)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normal forms of words such as "b^4 a b^5 a".
    Normalize {
        words: Vec<String>,
        /// Read words from a file, one per line ('#' starts a comment).
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Stems (normal forms with the final power of b removed).
    Stem {
        #[arg(required = true)]
        words: Vec<String>,
    },
    /// Least common upper bound of two words, with both complements.
    Join { x: String, y: String },
    /// Value of the KMS state on T_x T_y^*.
    KmsEval {
        #[arg(long)]
        beta: String,
        /// Measure document or a path to one (default: point mass at 1).
        #[arg(long)]
        measure: Option<String>,
        x: String,
        #[arg(default_value = "e")]
        y: String,
        /// Print each term of the moment series.
        #[arg(long)]
        series: bool,
    },
    /// Feasibility and sample values over a grid of inverse temperatures (CSV).
    PhaseScan {
        /// Comma-separated values, e.g. "1.0,ln3,ln3+0.5,2".
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        betas: String,
        #[arg(long)]
        measure: Option<String>,
        /// Exponents t at which T_{b^t} is evaluated.
        #[arg(long, default_value = "0,1,2,3,4,6")]
        t: String,
    },
    /// Run a verifier; exits 1 when it finds a violation.
    Verify(VerifyArgs),
    /// Two distinct states at the critical temperature when d divides c.
    DemoNonuniqueness {
        #[arg(long, default_value_t = 12)]
        tmax: u64,
    },
    /// Recover the moments of the measure from the KMS state's values.
    RecoverMoments {
        #[arg(long)]
        beta: String,
        #[arg(long)]
        measure: Option<String>,
        #[arg(long, default_value_t = 10)]
        n_max: u64,
    },
    /// Write the truncated matrices of U and V as (row, col, re, im) triples.
    DumpMatrices {
        #[arg(long = "K", default_value_t = 2)]
        levels: usize,
        #[arg(long)]
        measure: Option<String>,
        /// Use the truncated unilateral shift of this dimension instead of a measure.
        #[arg(long)]
        shift_dim: Option<usize>,
        #[arg(long, value_enum, default_value_t = Which::Both)]
        which: Which,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    U,
    V,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Charkms,
    Full,
    Ground,
    Relations,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StateChoice {
    /// KMS state of the measure (needs --beta).
    Kms,
    /// The same state computed from the truncated representation (needs --beta).
    KmsTruncated,
    /// The state at beta = ln d given by the closed formula.
    Critical,
    /// Limit of the KMS states of the measure at ln d (needs d | c).
    CriticalLimit,
    /// Ground state of a unit vector (see --xi).
    GroundVector,
    /// Ground state of the measure.
    GroundMeasure,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = StateChoice::Kms)]
    pub state: StateChoice,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub measure: Option<String>,
    /// Coefficients of the ground-state vector: comma-separated reals or re:im pairs.
    #[arg(long, default_value = "1")]
    pub xi: String,
    #[arg(long, default_value_t = 2)]
    pub hmax: usize,
    #[arg(long, default_value_t = 4)]
    pub emax: u64,
    /// Truncation level for representation-backed checks.
    #[arg(long = "K", default_value_t = 3)]
    pub levels: usize,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = bstoeplitz_core::check::DEFAULT_SEED)]
    pub seed: u64,
    /// Largest number of quads for --mode full (exhaustive below it, sampled above).
    #[arg(long, default_value_t = 20_000)]
    pub quads: usize,
    /// Relations mode: use a truncated shift of this dimension as W.
    #[arg(long)]
    pub shift_dim: Option<usize>,
}

/// Parses arguments, runs one command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok((output, code)) => {
            if let Err(e) = output.write(cli.format, out) {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
