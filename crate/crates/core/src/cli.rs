//! The `lgdim` command line. [`dispatch`] parses arguments, runs one
//! subcommand and returns the exit code with everything destined for the
//! standard streams, so the binary is a thin wrapper and tests can call it
//! in-process.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input (scheme
//! validation or malformed JSON), 64 usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::attractor::{box_count_estimate, generate_points, render_pgm, write_csv, GenerationMode, PointCloud};
use crate::coupling::{inclusion_ladder, random_address_word};
use crate::error::{Error, Result};
use crate::measures::{local_dimension_summary, sandwich_check, PeriodMeasure, SandwichOptions};
use crate::scheme::{validate_family, validate_scheme, LgScheme, RawFamily, RawScheme, SchemeFamily};
use crate::sequences::{epsilon_profile, SequenceSpec, SymbolSequence};
use crate::variational::{
    canonical_word, dim_of_frequency_limit, dim_of_word, grid_search_oracle, maximize_dimension, mcmullen_oracle,
    word_composition, DimensionReport, FrequencyVector, OptimizerOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Parser, Debug)]
#[command(name = "lgdim", version, about = "Dimension of limit sets of sequences of Lalley-Gatzouras schemes")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a scheme or family file against the admissibility conditions.
    Validate(SourceArgs),
    /// Maximize the dimension functional of one scheme.
    Dim(DimArgs),
    /// Dimension for the periodic sequence repeating a word.
    DimWord(DimWordArgs),
    /// L(Q) for a rational frequency vector.
    DimFreq(DimFreqArgs),
    /// L(P) as a limit over rational approximations.
    DimLimit(DimLimitArgs),
    /// Independent reference values.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Appearance-position deviations of a sequence.
    Epsilon(EpsilonArgs),
    /// Inclusion exponents of transported approximate squares.
    VerifyTau(VerifyTauArgs),
    /// Bracket check for transported measures.
    VerifySandwich(VerifySandwichArgs),
    /// Local-dimension ratios at sampled typical points.
    LocalDim(LocalDimArgs),
    /// Write a point cloud as CSV.
    Points(PointsArgs),
    /// Dyadic box-counting estimate.
    Boxcount(BoxcountArgs),
    /// Render a point cloud as a binary PGM image.
    Render(RenderArgs),
}

#[derive(Args, Debug, Serialize)]
struct OptimizerArgs {
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    tol_obj: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_grad: f64,
    #[arg(long, default_value_t = crate::scheme::DEFAULT_ALPHABET_CAP)]
    alphabet_cap: usize,
}

impl OptimizerArgs {
    fn options(&self) -> OptimizerOptions {
        OptimizerOptions {
            restarts: self.restarts,
            max_iters: self.max_iters,
            seed: self.seed,
            tol_obj: self.tol_obj,
            tol_grad: self.tol_grad,
            alphabet_cap: self.alphabet_cap,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct SourceArgs {
    /// Scheme JSON file.
    #[arg(long, conflicts_with = "family", required_unless_present = "family")]
    scheme: Option<PathBuf>,
    /// Family JSON file.
    #[arg(long)]
    family: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SequenceArgs {
    /// Sequence JSON file.
    #[arg(long, conflicts_with = "word")]
    sequence: Option<PathBuf>,
    /// Period word, e.g. "12" or "1,2" (default: "1").
    #[arg(long)]
    word: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct SamplingArgs {
    /// Number of sampled points; all address words are enumerated when absent.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct DimArgs {
    #[arg(long)]
    scheme: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args, Debug, Serialize)]
struct DimWordArgs {
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    word: String,
    #[command(flatten)]
    #[serde(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args, Debug, Serialize)]
struct DimFreqArgs {
    #[arg(long)]
    family: PathBuf,
    /// Rational frequencies, e.g. "1/2,1/2".
    #[arg(long)]
    q: String,
    /// Period word with the composition of Q (default: balanced word).
    #[arg(long)]
    word_order: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args, Debug, Serialize)]
struct DimLimitArgs {
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    p: String,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Comma-separated denominators (default: 1 to 256).
    #[arg(long)]
    denominators: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "oracle", rename_all = "lowercase")]
enum OracleCommand {
    /// Lattice search over the simplex (at most four cells).
    Grid {
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long, default_value_t = 100)]
        resolution: usize,
    },
    /// Closed form for uniform-grid carpets.
    Mcmullen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Chosen cells per nonempty row, e.g. "2,1".
        #[arg(long)]
        rows: String,
    },
}

#[derive(Args, Debug, Serialize)]
struct EpsilonArgs {
    #[arg(long)]
    sequence: PathBuf,
    /// Number of symbols (default: inferred from the sequence).
    #[arg(long)]
    symbols: Option<usize>,
    /// Appearances examined per symbol.
    #[arg(long, default_value_t = 10_000)]
    n_max: usize,
}

#[derive(Args, Debug, Serialize)]
struct VerifyTauArgs {
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    omega: PathBuf,
    #[arg(long)]
    omega_q: PathBuf,
    #[arg(long, default_value = "100,1000,10000")]
    depths: String,
    /// Length of the random base word (default: twice the deepest level plus 1000).
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct VerifySandwichArgs {
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    omega: PathBuf,
    #[arg(long)]
    q: String,
    #[arg(long, default_value = "10000")]
    depths: String,
    /// Number of sampled words, seeded from --seed upward.
    #[arg(long, default_value_t = 32)]
    seeds: u64,
    #[arg(long)]
    k_hat: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    slack: f64,
    #[command(flatten)]
    #[serde(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args, Debug, Serialize)]
struct LocalDimArgs {
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceArgs,
    /// Period word (default: "1").
    #[arg(long)]
    word: Option<String>,
    #[arg(long, default_value = "100,1000,10000")]
    depths: String,
    #[arg(long, default_value_t = 32)]
    seeds: u64,
    #[command(flatten)]
    #[serde(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args, Debug, Serialize)]
struct CloudArgs {
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    #[serde(flatten)]
    sequence: SequenceArgs,
    #[arg(long)]
    depth: usize,
    #[command(flatten)]
    #[serde(flatten)]
    sampling: SamplingArgs,
}

#[derive(Args, Debug, Serialize)]
struct PointsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    cloud: CloudArgs,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct BoxcountArgs {
    #[command(flatten)]
    #[serde(flatten)]
    cloud: CloudArgs,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    #[arg(long, default_value_t = 12)]
    k_max: usize,
}

#[derive(Args, Debug, Serialize)]
struct RenderArgs {
    #[command(flatten)]
    #[serde(flatten)]
    cloud: CloudArgs,
    #[arg(long, default_value_t = 512)]
    resolution: usize,
    #[arg(long)]
    output: PathBuf,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, &e))
}

fn load_scheme(path: &Path) -> Result<LgScheme> {
    Ok(validate_scheme(read_json::<RawScheme>(path)?)?)
}

fn load_family(path: &Path) -> Result<SchemeFamily> {
    Ok(validate_family(read_json::<RawFamily>(path)?)?)
}

impl SourceArgs {
    fn load(&self) -> Result<SchemeFamily> {
        match (&self.scheme, &self.family) {
            (Some(s), _) => SchemeFamily::new(vec![load_scheme(s)?]),
            (None, Some(f)) => load_family(f),
            (None, None) => Err(Error::InvalidArgument("one of --scheme or --family is required".into())),
        }
    }
}

impl SequenceArgs {
    fn load(&self, m: usize) -> Result<SymbolSequence> {
        match (&self.sequence, &self.word) {
            (Some(path), _) => SymbolSequence::from_spec(read_json::<SequenceSpec>(path)?, Some(m)),
            (None, Some(w)) => SymbolSequence::periodic(parse_word(w)?, m),
            (None, None) => SymbolSequence::periodic(vec![1], m),
        }
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse {what} entry {t:?}")))
        })
        .collect()
}

/// "12" reads as symbols 1, 2; with commas, "10,2" reads as 10, 2.
fn parse_word(text: &str) -> Result<Vec<usize>> {
    if text.contains(',') {
        return parse_list(text, "word");
    }
    text.chars()
        .map(|c| {
            c.to_digit(10)
                .map(|d| d as usize)
                .ok_or_else(|| Error::InvalidArgument(format!("cannot parse word symbol {c:?}")))
        })
        .collect()
}

fn dimension_body(r: &DimensionReport) -> Value {
    json!({
        "dimension": r.value,
        "converged": r.converged,
        "argmax": r.argmax,
        "iterations": r.iterations,
        "gradient_norm": r.gradient_norm,
        "restarts_used": r.restarts_used,
    })
}

fn to_value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("reports serialize to JSON")
}

fn cloud(args: &CloudArgs) -> Result<PointCloud> {
    let family = args.source.load()?;
    let seq = args.sequence.load(family.len())?;
    let mode = match args.sampling.count {
        Some(count) => GenerationMode::Sampled {
            count,
            seed: args.sampling.seed,
        },
        None => GenerationMode::Exhaustive,
    };
    generate_points(&family, &seq, args.depth, mode)
}

fn run(command: &Command) -> Result<Value> {
    match command {
        Command::Validate(a) => {
            let family = a.load()?;
            let schemes: Vec<Value> = family
                .schemes()
                .iter()
                .map(|s| {
                    json!({
                        "rows": s.row_count(),
                        "alphabet_size": s.alphabet_size(),
                        "strictly_separated": s.strictly_separated(),
                    })
                })
                .collect();
            Ok(json!({ "valid": true, "schemes": schemes }))
        }
        Command::Dim(a) => {
            let scheme = load_scheme(&a.scheme)?;
            Ok(dimension_body(&maximize_dimension(&scheme, &a.optimizer.options())))
        }
        Command::DimWord(a) => {
            let family = load_family(&a.family)?;
            let word = parse_word(&a.word)?;
            let mut body = dimension_body(&dim_of_word(&family, &word, &a.optimizer.options())?);
            body["word"] = json!(word);
            Ok(body)
        }
        Command::DimFreq(a) => {
            let family = load_family(&a.family)?;
            let q = FrequencyVector::parse(&a.q)?;
            if q.rational().is_none() {
                return Err(Error::InvalidArgument("--q must be given as fractions".into()));
            }
            if q.len() != family.len() {
                return Err(Error::Shape(format!(
                    "--q has {} entries, family has {} schemes",
                    q.len(),
                    family.len()
                )));
            }
            let word = match &a.word_order {
                Some(w) => {
                    let word = parse_word(w)?;
                    if word_composition(&word, family.len())?.rational() != q.rational() {
                        return Err(Error::InvalidArgument(format!(
                            "word {w:?} does not have the composition of Q"
                        )));
                    }
                    word
                }
                None => canonical_word(&q)?,
            };
            let mut body = dimension_body(&dim_of_word(&family, &word, &a.optimizer.options())?);
            body["word"] = json!(word);
            body["q"] = json!(q.entries());
            Ok(body)
        }
        Command::DimLimit(a) => {
            let family = load_family(&a.family)?;
            let p = FrequencyVector::parse(&a.p)?;
            let denominators = a.denominators.as_deref().map(|d| parse_list::<u64>(d, "denominator")).transpose()?;
            let r = dim_of_frequency_limit(&family, &p, a.tol, denominators.as_deref(), &a.optimizer.options())?;
            Ok(json!({
                "dimension": r.value,
                "converged": r.converged,
                "stop": r.stop,
                "trace": r.trace,
                "p": p.entries(),
            }))
        }
        Command::Oracle(OracleCommand::Grid { scheme, resolution }) => {
            let s = load_scheme(scheme)?;
            Ok(json!({ "dimension": grid_search_oracle(&s, *resolution)? }))
        }
        Command::Oracle(OracleCommand::Mcmullen { n, m, rows }) => {
            let counts = parse_list::<usize>(rows, "row count")?;
            Ok(json!({ "dimension": mcmullen_oracle(*n, *m, &counts)? }))
        }
        Command::Epsilon(a) => {
            let seq = SymbolSequence::from_spec(read_json::<SequenceSpec>(&a.sequence)?, a.symbols)?;
            let p = seq.nominal_frequencies()?;
            let mut profiles = Vec::new();
            for k in 1..=seq.symbols() {
                if p.entries()[k - 1] == 0.0 {
                    continue;
                }
                let mut n_max = a.n_max;
                if seq.prefix_len().is_some() {
                    n_max = n_max.min(seq.positions_of(k).count());
                }
                let prof = epsilon_profile(&seq, &p, k, n_max.max(1))?;
                let checkpoints: Vec<Value> = std::iter::successors(Some(1usize), |n| n.checked_mul(10))
                    .take_while(|&n| n <= prof.eps.len())
                    .chain((prof.eps.len() > 0).then_some(prof.eps.len()))
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .map(|n| json!({ "n": n, "eps": prof.eps[n - 1], "envelope": prof.envelope[n - 1] }))
                    .collect();
                profiles.push(json!({
                    "symbol": k,
                    "frequency": prof.frequency,
                    "appearances": prof.eps.len(),
                    "max_eps": prof.eps.iter().copied().fold(0.0, f64::max),
                    "checkpoints": checkpoints,
                }));
            }
            Ok(json!({ "frequencies": p.entries(), "profiles": profiles }))
        }
        Command::VerifyTau(a) => {
            let family = load_family(&a.family)?;
            let m = family.len();
            let omega = SymbolSequence::from_spec(read_json(&a.omega)?, Some(m))?;
            let omega_q = SymbolSequence::from_spec(read_json(&a.omega_q)?, Some(m))?;
            let depths = parse_list::<usize>(&a.depths, "depth")?;
            let deepest = depths.iter().copied().max().unwrap_or(0);
            let len = a.length.unwrap_or(2 * deepest + 1000);
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let base = random_address_word(&family, &omega_q, len, &mut rng)?;
            Ok(to_value(&inclusion_ladder(&family, &omega, &omega_q, &base, &depths)?))
        }
        Command::VerifySandwich(a) => {
            let family = load_family(&a.family)?;
            let omega = SymbolSequence::from_spec(read_json(&a.omega)?, Some(family.len()))?;
            let q = FrequencyVector::parse(&a.q)?;
            let opts = SandwichOptions {
                depths: parse_list(&a.depths, "depth")?,
                seeds: (0..a.seeds).map(|i| a.optimizer.seed.wrapping_add(i)).collect(),
                k_hat: a.k_hat,
                slack: a.slack,
                optimizer: a.optimizer.options(),
            };
            let r = sandwich_check(&family, &omega, &q, &opts)?;
            let mut body = to_value(&r);
            body["dimension"] = json!(r.l_q);
            Ok(body)
        }
        Command::LocalDim(a) => {
            let family = a.source.load()?;
            let word = a.word.as_deref().map(parse_word).transpose()?.unwrap_or_else(|| vec![1]);
            let depths = parse_list::<usize>(&a.depths, "depth")?;
            let (mu, value) = PeriodMeasure::optimal(&family, &word, &a.optimizer.options())?;
            let seeds: Vec<u64> = (0..a.seeds).map(|i| a.optimizer.seed.wrapping_add(i)).collect();
            let s = local_dimension_summary(&mu, &seeds, &depths, value)?;
            let mut body = to_value(&s);
            body["dimension"] = json!(value);
            Ok(body)
        }
        Command::Points(a) => {
            let c = cloud(&a.cloud)?;
            write_csv(&c, &a.output)?;
            Ok(json!({ "points": c.points.len(), "depth": c.depth, "mode": c.mode, "output": a.output }))
        }
        Command::Boxcount(a) => {
            let c = cloud(&a.cloud)?;
            let e = box_count_estimate(&c, a.k_min, a.k_max)?;
            let mut body = to_value(&e);
            body["points"] = json!(c.points.len());
            body["note"] = json!("box-counting dimension bounds the Hausdorff dimension from above and differs from it for non-uniform fibres");
            Ok(body)
        }
        Command::Render(a) => {
            let c = cloud(&a.cloud)?;
            render_pgm(&c, a.resolution, &a.output)?;
            Ok(json!({ "points": c.points.len(), "resolution": a.resolution, "output": a.output }))
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate(_) => "validate",
        Command::Dim(_) => "dim",
        Command::DimWord(_) => "dim-word",
        Command::DimFreq(_) => "dim-freq",
        Command::DimLimit(_) => "dim-limit",
        Command::Oracle(_) => "oracle",
        Command::Epsilon(_) => "epsilon",
        Command::VerifyTau(_) => "verify-tau",
        Command::VerifySandwich(_) => "verify-sandwich",
        Command::LocalDim(_) => "local-dim",
        Command::Points(_) => "points",
        Command::Boxcount(_) => "boxcount",
        Command::Render(_) => "render",
    }
}

fn command_config(c: &Command) -> Value {
    match c {
        Command::Validate(a) => to_value(a),
        Command::Dim(a) => to_value(a),
        Command::DimWord(a) => to_value(a),
        Command::DimFreq(a) => to_value(a),
        Command::DimLimit(a) => to_value(a),
        Command::Oracle(a) => to_value(a),
        Command::Epsilon(a) => to_value(a),
        Command::VerifyTau(a) => to_value(a),
        Command::VerifySandwich(a) => to_value(a),
        Command::LocalDim(a) => to_value(a),
        Command::Points(a) => to_value(a),
        Command::Boxcount(a) => to_value(a),
        Command::Render(a) => to_value(a),
    }
}

fn error_body(err: &Error) -> (i32, Value) {
    match err {
        Error::Validation(v) => (
            EXIT_INVALID_INPUT,
            json!({ "kind": "validation", "message": err.to_string(), "violations": v }),
        ),
        Error::Json {
            path,
            line,
            column,
            message,
        } => (
            EXIT_INVALID_INPUT,
            json!({ "kind": "malformed_json", "path": path, "line": line, "column": column, "message": message }),
        ),
        other => (EXIT_FAILURE, json!({ "kind": error_kind(other), "message": other.to_string() })),
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Validation(_) => "validation",
        Error::CapExceeded { .. } => "cap_exceeded",
        Error::Shape(_) => "shape",
        Error::Domain(_) => "domain",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::PrefixExhausted { .. } => "prefix_exhausted",
        Error::InsufficientDepth(_) => "insufficient_depth",
        Error::Io { .. } => "io",
        Error::Json { .. } => "malformed_json",
    }
}

fn render(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values render");
    s.push('\n');
    s
}

/// Parses `args` (program name first) and runs the selected subcommand.
pub fn dispatch<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };

    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start {n} threads: {e}")))
            .and_then(|pool| pool.install(|| run(&cli.command))),
        None => run(&cli.command),
    };

    let mut report = Map::new();
    report.insert("command".into(), json!(command_name(&cli.command)));
    let mut config = command_config(&cli.command);
    config["threads"] = json!(cli.threads);
    report.insert("config".into(), config);
    match result {
        Ok(Value::Object(body)) => {
            report.extend(body);
            Outcome {
                code: EXIT_OK,
                stdout: render(&Value::Object(report)),
                stderr: String::new(),
            }
        }
        Ok(other) => unreachable!("command bodies are objects, got {other}"),
        Err(err) => {
            let (code, body) = error_body(&err);
            report.insert("error".into(), body);
            Outcome {
                code,
                stdout: render(&Value::Object(report)),
                stderr: format!("lgdim: {err}\n"),
            }
        }
    }
}
