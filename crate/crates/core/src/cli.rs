//! Command-line front end.
//!
//! Exit codes: 0 success, 1 the verified pair is not an equilibrium,
//! 2 unreadable or invalid input, 3 assumption violation, 4 a region that is
//! not a stopping time, 5 tree too large to enumerate, 6 utility inverse out
//! of range, 70 internal error. Standard output carries only the JSON report.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use crate::dynkin::{iterate_equilibrium, verify_pair, DynkinGame, TieConvention};
use crate::error::{Error, Result};
use crate::format::{
    to_json_text, trace_csv, ClaimFile, GameFile, OracleReport, PriceReport, SolveReport,
    StoppingTimeFile, VerifyReport,
};
use crate::gcc::price_claim;
use crate::generate::generate_game;
use crate::oracle::{brute_force_neps, is_zero_sum, too_large, zero_sum_value, ENUMERATION_LIMIT};
use crate::scalar::{Scalar, DEFAULT_TOLERANCE};

/// Largest depth `gen` accepts.
pub const MAX_GEN_DEPTH: usize = 12;

#[derive(Debug, Parser)]
#[command(
    name = "dynkin",
    version,
    about = "Nash equilibria of nonzero-sum Dynkin games on trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TieArg {
    P1,
    P2,
}

impl From<TieArg> for TieConvention {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::P1 => TieConvention::P1Priority,
            TieArg::P2 => TieConvention::P2Priority,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Arithmetic: exact rationals or f64 with a tolerance.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Absolute tolerance of float mode.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Also write the JSON report here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct an equilibrium pair.
    Solve {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Override the file's tie convention.
        #[arg(long, value_enum)]
        tie: Option<TieArg>,
        /// Write the iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check a given pair of stopping times for profitable deviations.
    Verify {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        tie: Option<TieArg>,
        #[arg(long)]
        tau1: PathBuf,
        #[arg(long)]
        tau2: PathBuf,
    },
    /// Enumerate all equilibria of a small game.
    Oracle {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        tie: Option<TieArg>,
    },
    /// Price a game contingent claim.
    Price {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write a random valid game on a binomial tree.
    Gen {
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        tie: Option<TieArg>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::AssumptionViolation(_) => 3,
        Error::NotAStoppingTime { .. } | Error::UnknownNode(_) => 4,
        Error::EnumerationTooLarge { .. } => 5,
        Error::UtilityDomain(_) => 6,
        Error::Internal(_) | Error::LeafNode(_) | Error::NotALeaf(_) | Error::NotZeroSum(_) => 70,
        Error::InvalidParameter(_)
        | Error::MalformedTree(_)
        | Error::TreeMismatch
        | Error::IncompleteProcess { .. }
        | Error::NeedsFloat(_)
        | Error::InvalidClaim(_)
        | Error::Parse(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
    }
}

/// Outcome of a command that ran to completion.
struct Output {
    report: String,
    trace: Option<String>,
    /// Nonzero when the command completed but its check failed.
    code: i32,
    diagnostics: Vec<String>,
}

impl Output {
    fn report(report: String) -> Self {
        Output {
            report,
            trace: None,
            code: 0,
            diagnostics: Vec::new(),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let (json_path, trace_path) = output_paths(&cli.command);
    let result = execute(cli.command).and_then(|out| {
        if let Some(p) = json_path {
            std::fs::write(p, &out.report)?;
        }
        if let (Some(p), Some(csv)) = (trace_path, &out.trace) {
            std::fs::write(p, csv)?;
        }
        Ok(out)
    });
    match result {
        Ok(out) => {
            for d in &out.diagnostics {
                let _ = writeln!(stderr, "{d}");
            }
            if stdout.write_all(out.report.as_bytes()).is_err() {
                return 2;
            }
            out.code
        }
        Err(e) => {
            let _ = match &e {
                Error::AssumptionViolation(r) => {
                    writeln!(stderr, "error: assumption violation\n{r}")
                }
                _ => writeln!(stderr, "error: {e}"),
            };
            exit_code(&e)
        }
    }
}

fn output_paths(c: &Command) -> (Option<PathBuf>, Option<PathBuf>) {
    match c {
        Command::Solve { common, trace, .. } | Command::Price { common, trace, .. } => {
            (common.json.clone(), trace.clone())
        }
        Command::Verify { common, .. } | Command::Oracle { common, .. } => {
            (common.json.clone(), None)
        }
        Command::Gen { json, .. } => (json.clone(), None),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

fn load_game(path: &Path, tie: Option<TieArg>) -> Result<DynkinGame<BigRational>> {
    let mut game = GameFile::parse(&read(path)?)?.to_game()?;
    if let Some(t) = tie {
        game.tie = t.into();
    }
    Ok(game)
}

fn execute(command: Command) -> Result<Output> {
    match command {
        Command::Solve {
            input, common, tie, ..
        } => {
            let game = load_game(&input, tie)?;
            match common.mode.unwrap_or(ModeArg::Exact) {
                ModeArg::Exact => solve(&game),
                ModeArg::Float => solve(&game.to_float().with_tolerance(common.tol)),
            }
        }
        Command::Verify {
            input,
            common,
            tie,
            tau1,
            tau2,
        } => {
            let game = load_game(&input, tie)?;
            let t1 = StoppingTimeFile::parse(&read(&tau1)?)?.to_stopping_time(game.tree())?;
            let t2 = StoppingTimeFile::parse(&read(&tau2)?)?.to_stopping_time(game.tree())?;
            match common.mode.unwrap_or(ModeArg::Exact) {
                ModeArg::Exact => verify(&game, &t1, &t2),
                ModeArg::Float => verify(&game.to_float().with_tolerance(common.tol), &t1, &t2),
            }
        }
        Command::Oracle { input, common, tie } => {
            let file = GameFile::parse(&read(&input)?)?;
            let count = file.tree.stopping_time_count(file.horizon)?;
            if count.is_none_or(|c| c > ENUMERATION_LIMIT) {
                return Err(too_large(count));
            }
            let mut game = file.to_game()?;
            if let Some(t) = tie {
                game.tie = t.into();
            }
            match common.mode.unwrap_or(ModeArg::Exact) {
                ModeArg::Exact => run_oracle(&game),
                ModeArg::Float => run_oracle(&game.to_float().with_tolerance(common.tol)),
            }
        }
        Command::Price { input, common, .. } => {
            let claim = ClaimFile::parse(&read(&input)?)?.to_claim()?;
            let default = if claim.needs_float() {
                ModeArg::Float
            } else {
                ModeArg::Exact
            };
            match common.mode.unwrap_or(default) {
                ModeArg::Exact => price::<BigRational>(&claim, common.tol),
                ModeArg::Float => price::<f64>(&claim, common.tol),
            }
        }
        Command::Gen {
            depth, seed, tie, ..
        } => {
            if depth > MAX_GEN_DEPTH {
                return Err(Error::InvalidParameter(format!(
                    "gen depth {depth} exceeds {MAX_GEN_DEPTH}"
                )));
            }
            let tie = tie
                .map(TieConvention::from)
                .unwrap_or(TieConvention::P1Priority);
            let (game, p_up) = generate_game(depth, seed, tie)?;
            Ok(Output::report(to_json_text(&GameFile::binomial(
                &game, &p_up,
            ))?))
        }
    }
}

fn solve<S: Scalar>(game: &DynkinGame<S>) -> Result<Output> {
    let r = iterate_equilibrium(game)?;
    let mut out = Output::report(to_json_text(&SolveReport::new(game.tie, &r))?);
    out.trace = Some(trace_csv(&r.trace));
    Ok(out)
}

fn verify<S: Scalar>(
    game: &DynkinGame<S>,
    tau1: &crate::tree::StoppingTime,
    tau2: &crate::tree::StoppingTime,
) -> Result<Output> {
    let report = verify_pair(game, tau1, tau2)?;
    let mut out = Output::report(to_json_text(&VerifyReport::new(tau1, tau2, &report))?);
    if !report.is_empty() {
        out.code = 1;
        out.diagnostics = report.issues.iter().map(|i| i.to_string()).collect();
    }
    Ok(out)
}

fn run_oracle<S: Scalar>(game: &DynkinGame<S>) -> Result<Output> {
    let list = brute_force_neps(game)?;
    let value = if is_zero_sum(game) {
        zero_sum_value(game).ok()
    } else {
        None
    };
    Ok(Output::report(to_json_text(&OracleReport::new(
        &list, value,
    ))?))
}

fn price<S: Scalar>(claim: &crate::gcc::GameClaim, tol: f64) -> Result<Output> {
    let quote = price_claim::<S>(claim, tol)?;
    let mut out = Output::report(to_json_text(&PriceReport::new(&quote))?);
    out.trace = Some(trace_csv(&quote.equilibrium.trace));
    Ok(out)
}
