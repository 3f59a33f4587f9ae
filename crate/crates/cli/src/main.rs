use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fpcalc_core::diagram::eval_word;
use fpcalc_core::embed::iota_word;
use fpcalc_core::moments::{
    bound_report, moment_table, tau_histogram, Engine, MomentError, MomentRequest, State, DEFAULT_BUDGET,
};
use fpcalc_core::oriented::{parity_membership, planar_graph, theta};
use fpcalc_core::rewrite::normalize;
use fpcalc_core::suite::{run_suite, Suite};
use fpcalc_core::word::Word;
use serde_json::json;

/// Word rewriting, tree diagrams and moment tables for the Brown-Thompson
/// groups F_p.
#[derive(Parser)]
#[command(name = "fpcalc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the normal form, letter permutation and step count as JSON.
    Normalize {
        #[arg(short, default_value_t = 2)]
        p: u32,
        word: String,
    },
    /// Print the reduced tree diagram of a word.
    Eval {
        #[arg(short, default_value_t = 2)]
        p: u32,
        /// Emit `{p, top, bottom}` JSON instead of `top|bottom`.
        #[arg(long)]
        json: bool,
        word: String,
    },
    /// Decide membership of a word of F in the oriented subgroup (prints 0/1).
    Member {
        #[arg(long, required = true)]
        oriented: bool,
        word: String,
    },
    /// Planar graph of a word of F (through x_i -> x_{2i}) or of F_3.
    Graph {
        #[arg(short, default_value_t = 2)]
        p: u32,
        #[arg(long)]
        dot: bool,
        word: String,
    },
    /// Moment table over a range of n.
    Moments(MomentArgs),
    /// Permutation histograms with the binomial bound report (JSON).
    Bounds(BoundArgs),
    /// Run invariant self-checks.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// Inclusive range `A..B`, or a single value.
    #[arg(short = 'n', value_parser = parse_range)]
    n: (u64, u64),
    #[arg(short = 'd')]
    d: usize,
    #[arg(short, default_value_t = 2)]
    p: u32,
    #[arg(long, value_enum, default_value_t = EngineArg::Mitm)]
    engine: EngineArg,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Output file (stdout when omitted).
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MomentArgs {
    #[arg(long, value_enum)]
    state: StateArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum StateArg {
    Gamma,
    Theta,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Brute,
    Mitm,
    Dp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Rewrite,
    Trees,
    Oriented,
    Moments,
    All,
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b),
        None => (s, s),
    };
    let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("'{t}': {e}"));
    let (a, b) = (parse(a)?, parse(b)?);
    if a == 0 || a > b {
        return Err(format!("need 1 <= A <= B, got {a}..{b}"));
    }
    Ok((a, b))
}

/// Failure with its exit status: 1 verification, 2 usage, 3 budget.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: error.into() }
    }

    fn verification(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 1, error: error.into() }
    }

    fn from_moments(error: MomentError) -> Self {
        match error {
            MomentError::BudgetExceeded { .. } => Failure { code: 3, error: error.into() },
            MomentError::Pool(_) => Failure { code: 1, error: error.into() },
            _ => Failure::usage(error),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 1, error: e.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn parse_word(text: &str, p: u32) -> Result<Word, Failure> {
    Word::parse(text, p).with_context(|| format!("cannot read word '{text}'")).map_err(Failure::usage)
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(path) => Box::new(
            File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))
                .map_err(Failure::verification)?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

fn engine(e: EngineArg) -> Engine {
    match e {
        EngineArg::Brute => Engine::Brute,
        EngineArg::Mitm => Engine::Mitm,
        EngineArg::Dp => Engine::Dp,
    }
}

fn run(command: Command) -> Result<(), Failure> {
    let mut stdout = io::stdout().lock();
    match command {
        Command::Normalize { p, word } => {
            let w = parse_word(&word, p)?;
            writeln!(stdout, "{}", normalize(&w).to_json())?;
        }
        Command::Eval { p, json, word } => {
            let d = eval_word(&parse_word(&word, p)?);
            if json {
                writeln!(stdout, "{}", d.to_json())?;
            } else {
                writeln!(stdout, "{d}")?;
            }
        }
        Command::Member { oriented: _, word } => {
            let w = parse_word(&word, 2)?;
            let by_graph = theta(&w).map_err(Failure::usage)? == 1;
            let by_parity = parity_membership(&eval_word(&w)).map_err(Failure::usage)?;
            if by_graph != by_parity {
                return Err(Failure::verification(anyhow::anyhow!(
                    "graph test says {by_graph}, parity test says {by_parity} for '{w}'"
                )));
            }
            writeln!(stdout, "{}", u8::from(by_graph))?;
        }
        Command::Graph { p, dot, word } => {
            let w = parse_word(&word, p)?;
            let ternary = match p {
                2 => iota_word(&w).map_err(Failure::usage)?,
                3 => w,
                _ => return Err(Failure::usage(anyhow::anyhow!("graph needs p = 2 or p = 3, got {p}"))),
            };
            let g = planar_graph(&eval_word(&ternary)).map_err(Failure::usage)?;
            if dot {
                write!(stdout, "{}", g.to_dot())?;
            } else {
                writeln!(stdout, "{}", json!({"vertex_count": g.vertex_count(), "edges": g.edges()}))?;
            }
        }
        Command::Moments(args) => {
            let c = args.common;
            let req = MomentRequest {
                p: c.p,
                d: c.d,
                n_values: (c.n.0..=c.n.1).collect(),
                state: match args.state {
                    StateArg::Gamma => State::Gamma,
                    StateArg::Theta => State::Theta,
                },
                engine: engine(c.engine),
                budget: c.budget,
                workers: c.workers,
            };
            let table = moment_table(&req).map_err(Failure::from_moments)?;
            let mut out = open_output(&c.output)?;
            match args.format {
                Format::Csv => table.write_csv(&mut out).context("writing csv").map_err(Failure::verification)?,
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&table.to_json()).unwrap())?,
            }
            out.flush()?;
            if let Some(row) = table.rows.iter().find(|r| r.count.is_err()) {
                let err = row.count.clone().unwrap_err();
                return Err(Failure::from_moments(err));
            }
        }
        Command::Bounds(args) => {
            let c = args.common;
            if c.d % 2 == 1 {
                return Err(Failure::usage(MomentError::OddLength(c.d)));
            }
            let run_all = || -> Result<Vec<serde_json::Value>, MomentError> {
                let mut reports = Vec::new();
                for n in c.n.0..=c.n.1 {
                    let hist = tau_histogram(c.d, n, c.p, engine(c.engine), c.budget)?;
                    let report = bound_report(&hist, c.budget)?;
                    for line in &report.errata {
                        eprintln!("erratum: {line}");
                    }
                    reports.push(json!({"d": c.d, "n": n, "p": c.p, "total": hist.total(), "report": report}));
                }
                Ok(reports)
            };
            let reports = match c.workers {
                Some(w) => rayon_pool(w)?.install(run_all),
                None => run_all(),
            }
            .map_err(Failure::from_moments)?;
            let mut out = open_output(&c.output)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&reports).unwrap())?;
            out.flush()?;
        }
        Command::Verify { suite, seed } => {
            let suite = match suite {
                SuiteArg::Rewrite => Suite::Rewrite,
                SuiteArg::Trees => Suite::Trees,
                SuiteArg::Oriented => Suite::Oriented,
                SuiteArg::Moments => Suite::Moments,
                SuiteArg::All => Suite::All,
            };
            let outcomes = run_suite(suite, seed);
            for o in &outcomes {
                writeln!(stdout, "{o}")?;
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            if failed > 0 {
                return Err(Failure::verification(anyhow::anyhow!("{failed} check(s) failed")));
            }
        }
    }
    Ok(())
}

fn rayon_pool(workers: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Failure::from_moments(MomentError::Pool(e.to_string())))
}
