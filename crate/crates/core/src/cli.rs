//! Command-line interface. Exit codes: 0 success, 1 runtime or I/O failure,
//! 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adversary::{Adversary, AdversaryKind};
use crate::eval::{
    average_case_experiment, block_monte_carlo_error, exact_expected_error, monte_carlo_error,
    AdversarySampler, ErrorEstimate, Mode,
};
use crate::forecaster::{play, Algorithm};
use crate::formats::{
    append_rows, instance_to_json, parse_probabilities, parse_sequence, read_instance, read_text,
    rows_to_string, stopping_times_to_json, write_text, CsvRow,
};
use crate::instance::{approximate_uniformity, BlockRepresentation, Family};
use crate::randgen::{sample_stopping_set, ProbabilitySequence, StoppingDraw};

/// Longest instance simulated value by value under `--level auto`.
pub const ELEMENT_LEVEL_MAX_N: u128 = 1 << 20;

#[derive(Debug, Parser)]
#[command(name = "pls", version, about = "Prediction with limited selectivity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Instance files.
    #[command(subcommand)]
    Instance(InstanceCommand),
    /// Print the approximate uniformity of an instance and its witness.
    Uniformity(SourceArgs),
    /// Evaluate one forecaster against one adversary.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Parameter sweeps.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Run a forecaster on a sequence file.
    Predict(PredictArgs),
}

#[derive(Debug, Subcommand)]
enum InstanceCommand {
    /// Write an instance JSON file.
    Gen(GenArgs),
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Exact expected error from the adversary's moments.
    Exact(EvalArgs),
    /// Monte Carlo estimate.
    Mc(EvalArgs),
}

#[derive(Debug, Subcommand)]
enum ExperimentCommand {
    /// Random stopping time sets.
    Avgcase(AvgcaseArgs),
    /// Error against instance size.
    Curve(CurveArgs),
}

#[derive(Debug, Args)]
struct FamilyArgs {
    /// ones, geometric, cantor or separation.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    h: Option<u32>,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    family: FamilyArgs,
}

#[derive(Debug, Args)]
struct ProbabilityArgs {
    /// Constant inclusion probability.
    #[arg(long)]
    const_p: Option<f64>,
    /// Random k-monotone inclusion probabilities.
    #[arg(long)]
    kmono: Option<usize>,
    /// JSON file {"p": [...]}.
    #[arg(long)]
    p_file: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    probabilities: ProbabilityArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// uniform, general or separation.
    #[arg(long)]
    algo: String,
    /// bernoulli or tree.
    #[arg(long)]
    adversary: String,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulate value by value (element), from block means (block), or pick
    /// by instance length (auto).
    #[arg(long, default_value = "auto")]
    level: String,
    /// CSV file to append to; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AvgcaseArgs {
    #[command(flatten)]
    probabilities: ProbabilityArgs,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// ones or geometric.
    #[arg(long)]
    family: String,
    #[arg(long, value_delimiter = ',')]
    m_list: Vec<u64>,
    #[arg(long)]
    algo: String,
    #[arg(long)]
    adversary: String,
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    algo: String,
    /// Values in [0, 1], whitespace or comma separated, or a JSON array.
    #[arg(long)]
    sequence: PathBuf,
    #[arg(long)]
    seed: u64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Instance(InstanceCommand::Gen(args)) => cmd_instance(args, stdout),
        Command::Uniformity(args) => cmd_uniformity(args, stdout),
        Command::Eval(EvalCommand::Exact(args)) => cmd_eval(Mode::Exact, args, stdout),
        Command::Eval(EvalCommand::Mc(args)) => cmd_eval(Mode::MonteCarlo, args, stdout),
        Command::Experiment(ExperimentCommand::Avgcase(args)) => cmd_avgcase(args, stdout),
        Command::Experiment(ExperimentCommand::Curve(args)) => cmd_curve(args, stdout),
        Command::Predict(args) => cmd_predict(args, stdout),
    }
}

fn emit(stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    stdout.write_all(text.as_bytes()).map_err(runtime)
}

fn family_from(args: &FamilyArgs) -> CliResult<Option<Family>> {
    let Some(name) = args.family.as_deref() else {
        if args.m.is_some() || args.k.is_some() || args.h.is_some() {
            return usage("--m, --k and --h need --family");
        }
        return Ok(None);
    };
    let need = |v: Option<u64>, flag: &str| match v {
        Some(v) => Ok(v),
        None => usage(format!("--family {name} needs {flag}")),
    };
    let small = |v: u64, flag: &str| {
        u32::try_from(v).or_else(|_| usage(format!("{flag} {v} is too large")))
    };
    let family = match name {
        "ones" => Family::Ones {
            m: need(args.m, "--m")? as usize,
        },
        "geometric" => Family::Geometric {
            m: small(need(args.m, "--m")?, "--m")?,
        },
        "cantor" => Family::Cantor {
            k: small(need(args.k, "--k")?, "--k")?,
        },
        "separation" => Family::Separation {
            k: need(args.k, "--k")?,
            h: need(args.h.map(u64::from), "--h")? as u32,
        },
        other => return usage(format!("unknown family {other:?}")),
    };
    Ok(Some(family))
}

/// The instance and the label used for it in CSV rows.
fn load_source(args: &SourceArgs) -> CliResult<(BlockRepresentation, String)> {
    match (&args.instance, family_from(&args.family)?) {
        (Some(_), Some(_)) => usage("give either --instance or --family, not both"),
        (None, None) => usage("an instance is required (--instance or --family)"),
        (Some(path), None) => {
            let b = read_instance(path).map_err(runtime)?;
            let label = path
                .file_stem()
                .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into());
            Ok((b, label))
        }
        (None, Some(f)) => Ok((f.build().map_err(runtime)?, f.to_string())),
    }
}

fn probabilities_from(
    args: &ProbabilityArgs,
    seed: Option<u64>,
) -> CliResult<(ProbabilitySequence, String)> {
    let given = [args.const_p.is_some(), args.kmono.is_some(), args.p_file.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return usage("give exactly one of --const-p, --kmono, --p-file");
    }
    if let Some(path) = &args.p_file {
        if args.n.is_some() {
            return usage("--n is taken from the --p-file length");
        }
        let p = parse_probabilities(&read_text(path).map_err(runtime)?).map_err(runtime)?;
        return Ok((p, path.display().to_string()));
    }
    let Some(n) = args.n else {
        return usage("--n is required");
    };
    if let Some(p) = args.const_p {
        let seq = ProbabilitySequence::constant(n, p).map_err(|e| CliError::Usage(e.to_string()))?;
        return Ok((seq, format!("const-p({p}) n={n}")));
    }
    let k = args.kmono.expect("checked above");
    let Some(seed) = seed else {
        return usage("--kmono needs --seed");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seq = ProbabilitySequence::random_k_monotone(k, n, &mut rng)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((seq, format!("kmono({k}) n={n}")))
}

fn cmd_instance(args: GenArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let text = if args.family.family.as_deref() == Some("random") {
        if args.family.m.is_some() || args.family.k.is_some() || args.family.h.is_some() {
            return usage("--family random takes --const-p, --kmono or --p-file");
        }
        let Some(seed) = args.seed else {
            return usage("--family random needs --seed");
        };
        let (p, _) = probabilities_from(&args.probabilities, Some(seed))?;
        // the stopping set uses its own stream, separate from the k-monotone draw
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        match sample_stopping_set(&p, &mut rng) {
            StoppingDraw::Empty => {
                return Err(CliError::Runtime(
                    "the draw contains no stopping time; try another seed".into(),
                ))
            }
            StoppingDraw::Set(ts) => stopping_times_to_json(&ts),
        }
    } else {
        let p = &args.probabilities;
        if p.const_p.is_some() || p.kmono.is_some() || p.p_file.is_some() || p.n.is_some() {
            return usage("probability flags need --family random");
        }
        let Some(f) = family_from(&args.family)? else {
            return usage("--family is required");
        };
        instance_to_json(&f.build().map_err(runtime)?)
    };
    match &args.out {
        Some(path) => write_text(path, &text).map_err(runtime),
        None => emit(stdout, &format!("{text}\n")),
    }
}

/// Four decimals with trailing zeros removed, keeping at least one.
fn short_decimal(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

fn cmd_uniformity(args: SourceArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let (b, _) = load_source(&args)?;
    let u = approximate_uniformity(&b);
    let (p, q) = u.reduced();
    let (i, j) = u.witness;
    emit(
        stdout,
        &format!("{p}/{q} {} ({i},{j})\n", short_decimal(u.to_f64())),
    )
}

fn parse_algo(s: &str) -> CliResult<Algorithm> {
    s.parse().map_err(|e: crate::forecaster::ForecastError| CliError::Usage(e.to_string()))
}

fn parse_adversary(s: &str) -> CliResult<AdversaryKind> {
    s.parse().map_err(|e: crate::adversary::AdversaryError| CliError::Usage(e.to_string()))
}

struct Evaluation<'a> {
    b: &'a BlockRepresentation,
    algo: Algorithm,
    adversary: AdversaryKind,
    mode: Mode,
    trials: Option<u64>,
    seed: Option<u64>,
    level: &'a str,
}

fn evaluate(e: &Evaluation<'_>) -> CliResult<ErrorEstimate> {
    let forecaster = e.algo.build(e.b).map_err(runtime)?;
    let adversary = Adversary::new(e.adversary, e.b).map_err(runtime)?;
    match e.mode {
        Mode::Exact => {
            let law = forecaster.law().map_err(runtime)?;
            exact_expected_error(e.b, &law, &adversary.model()).map_err(runtime)
        }
        Mode::MonteCarlo => {
            let trials = e.trials.expect("checked by caller");
            let seed = e.seed.expect("checked by caller");
            let element = match e.level {
                "element" => true,
                "block" => false,
                _ => e.b.n() <= ELEMENT_LEVEL_MAX_N,
            };
            if element {
                let sampler = AdversarySampler::new(e.b.clone(), e.adversary).map_err(runtime)?;
                monte_carlo_error(forecaster.as_ref(), &sampler, trials, seed).map_err(runtime)
            } else {
                block_monte_carlo_error(forecaster.as_ref(), &adversary, trials, seed)
                    .map_err(runtime)
            }
        }
    }
}

fn check_run_flags(mode: Mode, trials: Option<u64>, seed: Option<u64>) -> CliResult<()> {
    match mode {
        Mode::Exact if trials.is_some() => usage("exact mode does not take --trials"),
        Mode::Exact if seed.is_some() => usage("exact mode does not take --seed"),
        Mode::MonteCarlo if trials.is_none() => usage("Monte Carlo needs --trials"),
        Mode::MonteCarlo if seed.is_none() => usage("Monte Carlo needs --seed"),
        Mode::MonteCarlo if trials == Some(0) => usage("--trials must be at least 1"),
        _ => Ok(()),
    }
}

fn row(label: String, e: &Evaluation<'_>, est: &ErrorEstimate) -> CsvRow {
    CsvRow {
        instance: label,
        algo: e.algo.name().to_string(),
        adversary: e.adversary.name().to_string(),
        mode: e.mode.to_string(),
        trials: e.trials,
        seed: e.seed,
        mean: est.mean,
        std_error: est.std_error,
    }
}

fn output_rows(out: &Option<PathBuf>, rows: &[CsvRow], stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(path) => append_rows(path, rows).map_err(runtime),
        None => emit(stdout, &rows_to_string(rows)),
    }
}

fn cmd_eval(mode: Mode, args: EvalArgs, stdout: &mut dyn Write) -> CliResult<()> {
    check_run_flags(mode, args.trials, args.seed)?;
    if !matches!(args.level.as_str(), "auto" | "element" | "block") {
        return usage(format!("unknown --level {:?}", args.level));
    }
    if mode == Mode::Exact && args.level != "auto" {
        return usage("--level applies to Monte Carlo only");
    }
    let algo = parse_algo(&args.algo)?;
    let adversary = parse_adversary(&args.adversary)?;
    let (b, label) = load_source(&args.source)?;
    let e = Evaluation {
        b: &b,
        algo,
        adversary,
        mode,
        trials: args.trials,
        seed: args.seed,
        level: &args.level,
    };
    let est = evaluate(&e)?;
    output_rows(&args.out, &[row(label, &e, &est)], stdout)
}

fn cmd_avgcase(args: AvgcaseArgs, stdout: &mut dyn Write) -> CliResult<()> {
    if args.trials == 0 {
        return usage("--trials must be at least 1");
    }
    let (p, label) = probabilities_from(&args.probabilities, Some(args.seed))?;
    let r = average_case_experiment(&p, args.trials, args.seed).map_err(runtime)?;
    let t = args.trials;
    let freq = |count: u64| {
        let f = count as f64 / t as f64;
        (f, (f * (1.0 - f) / t as f64).sqrt())
    };
    let mut metrics: Vec<(&str, f64, f64)> = Vec::new();
    if let Some(j) = &r.joint {
        let (f, s) = freq(j.occurrences);
        metrics.push(("joint_event", f, s));
        metrics.push(("joint_event_bound", j.bound, j.sigma));
        let (f, s) = freq(j.size_occurrences);
        metrics.push(("size_event", f, s));
        let (f, s) = freq(j.uniformity_occurrences);
        metrics.push(("uniformity_event", f, s));
    }
    let (f, s) = freq(r.empty_draws);
    metrics.push(("empty_draws", f, s));
    metrics.push(("size_ratio", r.size_ratio.mean, r.size_ratio.std_error));
    metrics.push((
        "uniformity_ratio",
        r.uniformity_ratio.mean,
        r.uniformity_ratio.std_error,
    ));
    let rows: Vec<CsvRow> = metrics
        .into_iter()
        .map(|(metric, mean, std_error)| CsvRow {
            instance: label.clone(),
            algo: "avgcase".into(),
            adversary: metric.into(),
            mode: Mode::MonteCarlo.to_string(),
            trials: Some(t),
            seed: Some(args.seed),
            mean,
            std_error,
        })
        .collect();
    output_rows(&args.out, &rows, stdout)
}

fn cmd_curve(args: CurveArgs, stdout: &mut dyn Write) -> CliResult<()> {
    if args.m_list.is_empty() {
        return usage("empty grid: --m-list needs at least one value");
    }
    let mode = if args.exact { Mode::Exact } else { Mode::MonteCarlo };
    check_run_flags(mode, args.trials, args.seed)?;
    let algo = parse_algo(&args.algo)?;
    let adversary = parse_adversary(&args.adversary)?;
    let mut rows = Vec::new();
    for &m in &args.m_list {
        let family = match args.family.as_str() {
            "ones" => Family::Ones { m: m as usize },
            "geometric" => Family::Geometric {
                m: u32::try_from(m).or_else(|_| usage(format!("--m-list value {m} is too large")))?,
            },
            other => return usage(format!("curve supports ones and geometric, not {other:?}")),
        };
        let b = family.build().map_err(runtime)?;
        let e = Evaluation {
            b: &b,
            algo,
            adversary,
            mode,
            trials: args.trials,
            seed: args.seed,
            level: "auto",
        };
        let est = evaluate(&e)?;
        rows.push(row(family.to_string(), &e, &est));
    }
    output_rows(&args.out, &rows, stdout)
}

fn cmd_predict(args: PredictArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let algo = parse_algo(&args.algo)?;
    let (b, _) = load_source(&args.source)?;
    let x = parse_sequence(&read_text(&args.sequence).map_err(runtime)?).map_err(runtime)?;
    let forecaster = algo.build(&b).map_err(runtime)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (p, mu, err) = play(forecaster.as_ref(), &x, &mut rng).map_err(runtime)?;
    emit(
        stdout,
        &format!(
            "t={} w={} mu_hat={} mu={} squared_error={}\n",
            p.t, p.w, p.mu_hat, mu, err
        ),
    )
}
