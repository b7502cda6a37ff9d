//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or other error, 2 verification failure,
//! 3 infeasible input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytics::write_csv;
use crate::error::{Error, Result};
use crate::experiment::{run_experiment, ExperimentSpec, SymbolSource};
use crate::markov::{
    build_bigram, markov_online_policy, privatize_markov_offline, privatize_markov_online,
    CaseMode, MarkovChain, SinkPolicy, TokenizerOptions,
};
use crate::mechanisms::{online_policy, privatize_offline, privatize_online};
use crate::mnfa::build_mnfa;
use crate::oracle::MechanismKind;
use crate::verify::{run_verification, VerifyOptions};
use crate::word::{hamming_distance, Alphabet, MechanismConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFICATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "symdp", version, about = "Word-level differential privacy for symbolic sequences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Privatize one word and print the output tokens.
    Privatize(PrivatizeArgs),
    /// Build a bigram chain from a text corpus.
    BuildChain(BuildChainArgs),
    /// Sweep epsilon and write mean-error CSV.
    Experiment(ExperimentArgs),
    /// Exhaustive privacy and equivalence checks on small instances.
    Verify(VerifyArgs),
    /// Print the distance automaton of a word in Graphviz format.
    MnfaDot(MnfaDotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Offline,
    Online,
    McOffline,
    McOnline,
}

impl From<Mode> for MechanismKind {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Offline => MechanismKind::Offline,
            Mode::Online => MechanismKind::Online,
            Mode::McOffline => MechanismKind::MarkovOffline,
            Mode::McOnline => MechanismKind::MarkovOnline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Case {
    Merge,
    Preserve,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sink {
    SelfLoop,
    WrapToFirst,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Alphabet: a JSON array file, or comma-separated tokens.
    #[arg(long, conflicts_with = "chain")]
    pub alphabet: Option<String>,
    /// Chain JSON file (Markov modes).
    #[arg(long)]
    pub chain: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input word as space-separated tokens.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "input_file")]
    pub input: Option<String>,
    /// File holding the input word.
    #[arg(long)]
    pub input_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrivatizeArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Override the chain's initial state.
    #[arg(long)]
    pub initial: Option<String>,
    /// Also print the Hamming distance to the input.
    #[arg(long)]
    pub emit_distance: bool,
}

#[derive(Debug, Args)]
pub struct BuildChainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Case::Merge)]
    pub case: Case,
    #[arg(long, value_enum, default_value_t = Sink::SelfLoop)]
    pub sink: Sink,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long, value_delimiter = ',', required = true)]
    pub epsilons: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Initial state to sweep; repeatable.
    #[arg(long)]
    pub initial: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Force the online correct-transition probability to 1.
    #[arg(long)]
    pub break_tau: bool,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub alphabet_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub chain_seed: Option<u64>,
    /// JSON report destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MnfaDotArgs {
    #[arg(long)]
    pub alphabet: String,
    #[arg(long, allow_hyphen_values = true)]
    pub input: String,
    #[arg(long)]
    pub distance: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Verification(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Privatize(a) => privatize(a, out),
        Command::BuildChain(a) => build_chain(a, out),
        Command::Experiment(a) => experiment(a, out),
        Command::Verify(a) => verify(a, out),
        Command::MnfaDot(a) => mnfa_dot(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Verification(msg)) => {
            let _ = writeln!(err, "verification failed: {msg}");
            EXIT_VERIFICATION
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Infeasible { .. } => EXIT_INFEASIBLE,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn load_alphabet(spec: &str) -> Result<Alphabet> {
    let path = Path::new(spec);
    if path.is_file() {
        Alphabet::from_json(&fs::read_to_string(path)?)
    } else {
        Alphabet::new(spec.split(',').map(str::trim).filter(|t| !t.is_empty()))
    }
}

fn load_chain(path: &Path, initial: Option<&str>) -> Result<MarkovChain> {
    let chain = MarkovChain::from_json(&fs::read_to_string(path)?)?;
    match initial {
        Some(name) => chain.with_initial_named(name),
        None => Ok(chain),
    }
}

fn input_tokens(args: &InputArgs) -> std::result::Result<Vec<String>, Failure> {
    let text = match (&args.input, &args.input_file) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => fs::read_to_string(p)?,
        (None, None) => return Err(Failure::Usage("one of --input or --input-file is required".into())),
    };
    Ok(text.split_whitespace().map(str::to_string).collect())
}

fn privatize(a: PrivatizeArgs, out: &mut dyn Write) -> CmdResult {
    let tokens = input_tokens(&a.input)?;
    let cfg = MechanismConfig::new(a.epsilon, a.k, a.seed)?;
    let kind = MechanismKind::from(a.mode);
    let (input, output, names) = if kind.is_markov() {
        let path = a
            .source
            .chain
            .as_ref()
            .ok_or_else(|| Failure::Usage(format!("{kind} needs --chain")))?;
        let chain = load_chain(path, a.initial.as_deref())?;
        let input = chain.encode(&tokens)?;
        let output = if kind == MechanismKind::MarkovOffline {
            privatize_markov_offline(&chain, &input, &cfg)?
        } else {
            chain.check_feasible(&input).or_else(|e| match e {
                // The online mechanism accepts infeasible inputs.
                Error::Infeasible { .. } => Ok(()),
                e => Err(e),
            })?;
            let policy = markov_online_policy(&chain, cfg.epsilon(), cfg.k())?;
            privatize_markov_online(&chain, &input, &policy, &mut cfg.stream())?
        };
        (input, output, chain.states().clone())
    } else {
        let spec = a
            .source
            .alphabet
            .as_deref()
            .ok_or_else(|| Failure::Usage(format!("{kind} needs --alphabet")))?;
        let alphabet = load_alphabet(spec)?;
        let input = alphabet.encode(&tokens)?;
        let output = if kind == MechanismKind::Offline {
            privatize_offline(&input, &cfg)?
        } else {
            let policy = online_policy(alphabet.len(), cfg.epsilon(), cfg.k())?;
            privatize_online(&input, &policy, &mut cfg.stream())?
        };
        (input, output, alphabet)
    };
    writeln!(out, "{}", names.decode(&output)?.join(" "))?;
    if a.emit_distance {
        writeln!(out, "{}", hamming_distance(&input, &output)?)?;
    }
    Ok(())
}

fn build_chain(a: BuildChainArgs, out: &mut dyn Write) -> CmdResult {
    let corpus = fs::read_to_string(&a.corpus)?;
    let options = TokenizerOptions {
        case: match a.case {
            Case::Merge => CaseMode::Merge,
            Case::Preserve => CaseMode::Preserve,
            Case::Lower => CaseMode::Lower,
        },
        sink: match a.sink {
            Sink::SelfLoop => SinkPolicy::SelfLoop,
            Sink::WrapToFirst => SinkPolicy::WrapToFirst,
        },
    };
    let chain = build_bigram(&corpus, &options)?;
    fs::write(&a.out, chain.to_json() + "\n")?;
    writeln!(out, "states: {}", chain.state_count())?;
    Ok(())
}

fn experiment(a: ExperimentArgs, out: &mut dyn Write) -> CmdResult {
    let mechanism = MechanismKind::from(a.mode);
    let source = if mechanism.is_markov() {
        let path = a
            .source
            .chain
            .as_ref()
            .ok_or_else(|| Failure::Usage(format!("{mechanism} needs --chain")))?;
        SymbolSource::Chain(load_chain(path, None)?)
    } else {
        let spec = a
            .source
            .alphabet
            .as_deref()
            .ok_or_else(|| Failure::Usage(format!("{mechanism} needs --alphabet")))?;
        SymbolSource::Alphabet(load_alphabet(spec)?)
    };
    let spec = ExperimentSpec {
        mechanism,
        epsilons: a.epsilons,
        k: a.k,
        samples: a.samples,
        input: input_tokens(&a.input)?,
        source,
        initial_states: a.initial,
        seed: a.seed,
    };
    let rows = run_experiment(&spec)?;
    match &a.out {
        Some(path) => write_csv(&rows, fs::File::create(path)?)?,
        None => write_csv(&rows, &mut *out)?,
    }
    Ok(())
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let defaults = VerifyOptions::default();
    let options = VerifyOptions {
        lengths: a.lengths.unwrap_or(defaults.lengths),
        alphabet_sizes: a.alphabet_sizes.unwrap_or(defaults.alphabet_sizes),
        ks: a.ks.unwrap_or(defaults.ks),
        epsilons: a.epsilons.unwrap_or(defaults.epsilons),
        random_chain_seed: a.chain_seed.unwrap_or(defaults.random_chain_seed),
        break_tau: a.break_tau,
    };
    let report = run_verification(&options)?;
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    match &a.out {
        Some(path) => fs::write(path, json + "\n")?,
        None => writeln!(out, "{json}")?,
    }
    writeln!(
        out,
        "{} privacy checks, {} equivalence checks: {}",
        report.dp.len(),
        report.equivalence.len(),
        if report.passed { "passed" } else { "FAILED" }
    )?;
    if report.passed {
        return Ok(());
    }
    let mut msg = String::new();
    if let Some(w) = report.dp.iter().filter(|r| !r.passed).max_by(|x, y| {
        let key = |r: &crate::oracle::DpReport| r.max_log_ratio.unwrap_or(f64::INFINITY);
        key(x).total_cmp(&key(y))
    }) {
        msg.push_str(&format!(
            "{} n={} symbols={} epsilon={} k={}: max log ratio {}",
            w.mechanism,
            w.n,
            w.symbols,
            w.epsilon,
            w.k,
            w.max_log_ratio
                .map_or_else(|| "unbounded".to_string(), |x| x.to_string())
        ));
        if let Some(c) = &w.worst {
            msg.push_str(&format!(" at inputs {:?} / {:?}, output {:?}", c.input_a, c.input_b, c.output));
        }
    }
    if let Some(e) = report.equivalence.iter().find(|r| !r.passed) {
        if !msg.is_empty() {
            msg.push_str("; ");
        }
        msg.push_str(&format!(
            "{} on {} n={}: law differs by {}",
            e.mechanism, e.instance, e.n, e.max_abs_difference
        ));
    }
    Err(Failure::Verification(msg))
}

fn mnfa_dot(a: MnfaDotArgs, out: &mut dyn Write) -> CmdResult {
    let alphabet = load_alphabet(&a.alphabet)?;
    let tokens: Vec<&str> = a.input.split_whitespace().collect();
    let word = alphabet.encode(&tokens)?;
    let policy = build_mnfa(&word, a.distance, &alphabet)?.synthesize();
    let dot = policy.to_dot(Some(&alphabet));
    match &a.out {
        Some(path) => fs::write(path, dot)?,
        None => write!(out, "{dot}")?,
    }
    Ok(())
}
