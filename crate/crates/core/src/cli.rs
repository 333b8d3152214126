//! Command-line front end.
//!
//! Every report echoes its seed and contains no timings or thread counts, so
//! identical inputs and flags give byte-identical output. Exit codes: 0
//! success, 1 usage, 2 unreadable or malformed input, 3 unsatisfiable input,
//! exhausted failure budget or exceeded resource limit.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use rand::RngCore;
use serde_json::{json, Value};

use crate::counter::{approx_count, CountError, RoundOutcome};
use crate::formula::{format_ind_line, parse_dimacs, CnfFormula, Lit, ProjectedWitness, Var};
use crate::indsupport::{minimize_support_for, SupportError};
use crate::oracle::{self, OracleError};
use crate::rng::{derive_seed, seeded, stream};
use crate::sampler::{parallel_sample, SampleBatch, SampleError, SampleMode};
use crate::solver::extend_witness;
use crate::weighted::{
    reduce_wmc_to_umc, tilt_bound, weighted_count, weighted_sample, ratio_to_f64, RoundingNote, WeightError,
    WeightedCnf, WeightedError, DEFAULT_PRECISION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hashcount", version, about = "Approximate model counting and almost-uniform sampling")]
pub struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Single,
    Multi,
}

impl From<ModeArg> for SampleMode {
    fn from(m: ModeArg) -> SampleMode {
        match m {
            ModeArg::Single => SampleMode::Single,
            ModeArg::Multi => SampleMode::Multi,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// DIMACS input; `-` or absent reads standard input.
    pub input: Option<PathBuf>,
    /// Random seed; drawn and reported when absent.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximate projected model count.
    Count {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.8)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        /// Hash over a minimized independent support.
        #[arg(long)]
        use_mis: bool,
    },
    /// Almost-uniform samples, one per line.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Single)]
        mode: ModeArg,
        #[arg(long)]
        use_mis: bool,
    },
    /// Minimal independent support of the sampling set.
    Mis {
        #[command(flatten)]
        common: Common,
        /// Conflict limit per independence check.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Approximate weighted model count.
    Wcount {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.8)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        /// Bits used to round decimal weights.
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: u32,
    },
    /// Weighted almost-uniform samples.
    Wsample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Single)]
        mode: ModeArg,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: u32,
    },
    /// Exact counts by exhaustive search.
    Exact {
        #[command(flatten)]
        common: Common,
        /// Largest variable count accepted.
        #[arg(long, default_value_t = oracle::DEFAULT_CAP)]
        cap: u32,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: u32,
    },
    /// Compares sampler output with exactly uniform samples.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16.0)]
        epsilon: f64,
        /// Samples per side; defaults to 100 per solution.
        #[arg(long)]
        samples: Option<usize>,
        /// Read samples (DIMACS literal lines) instead of running the sampler.
        #[arg(long)]
        samples_from: Option<PathBuf>,
        #[arg(long, default_value_t = oracle::DEFAULT_CAP)]
        cap: u32,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(m: impl ToString) -> CliError {
        CliError {
            code: EXIT_USAGE,
            message: m.to_string(),
        }
    }
    fn input(m: impl ToString) -> CliError {
        CliError {
            code: EXIT_INPUT,
            message: m.to_string(),
        }
    }
    fn failure(m: impl ToString) -> CliError {
        CliError {
            code: EXIT_FAILURE,
            message: m.to_string(),
        }
    }
}

impl From<CountError> for CliError {
    fn from(e: CountError) -> CliError {
        match e {
            CountError::InvalidParams(_) => CliError::usage(e),
            CountError::Formula(_) => CliError::input(e),
            CountError::AllRoundsFailed { .. } => CliError::failure(e),
        }
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> CliError {
        match e {
            SampleError::InvalidParams(_) => CliError::usage(e),
            SampleError::Formula(_) => CliError::input(e),
            SampleError::Count(c) => c.into(),
            _ => CliError::failure(e),
        }
    }
}

impl From<WeightError> for CliError {
    fn from(e: WeightError) -> CliError {
        match e {
            WeightError::Precision(_) => CliError::usage(e),
            _ => CliError::input(e),
        }
    }
}

impl From<WeightedError> for CliError {
    fn from(e: WeightedError) -> CliError {
        match e {
            WeightedError::Weight(w) => w.into(),
            WeightedError::Count(c) => c.into(),
            WeightedError::Sample(s) => s.into(),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> CliError {
        match e {
            OracleError::CapTooLarge(_) => CliError::usage(e),
            OracleError::Formula(_) => CliError::input(e),
            _ => CliError::failure(e),
        }
    }
}

impl From<SupportError> for CliError {
    fn from(e: SupportError) -> CliError {
        match e {
            SupportError::Formula(_) => CliError::input(e),
            _ => CliError::failure(e),
        }
    }
}

/// Parses `args` (program name first), runs the command, and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let text = match cli.format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&report.json).expect("report serializes");
                    s.push('\n');
                    s
                }
                Format::Text => report.text,
            };
            if out.write_all(text.as_bytes()).is_err() {
                return EXIT_INPUT;
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

/// A command's output in both formats.
pub struct Report {
    pub text: String,
    pub json: Value,
}

fn read_input(path: &Option<PathBuf>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match path {
        Some(p) if p.as_os_str() != "-" => {
            buf = std::fs::read(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
        }
        _ => {
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| CliError::input(format!("stdin: {e}")))?;
        }
    }
    Ok(buf)
}

fn load(common: &Common) -> Result<CnfFormula, CliError> {
    let bytes = read_input(&common.input)?;
    parse_dimacs(&bytes).map_err(CliError::input)
}

fn seed_of(common: &Common) -> u64 {
    common.seed.unwrap_or_else(|| rand::rng().next_u64())
}

fn vars_json(vs: &[Var]) -> Value {
    Value::from(vs.iter().map(|v| v.get()).collect::<Vec<_>>())
}

fn vars_text(vs: &[Var]) -> String {
    vs.iter().map(|v| v.get().to_string()).collect::<Vec<_>>().join(" ")
}

fn rational_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn check_positive(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::usage(format!("--{name} must be positive")))
    }
}

/// Support to hash over: the minimized projection when `use_mis` is set.
fn hashing_vars(f: &CnfFormula, use_mis: bool) -> Result<Vec<Var>, CliError> {
    let projection = f.projection_vars();
    if !use_mis {
        return Ok(projection);
    }
    Ok(minimize_support_for(f, &projection, &projection, None, None)?)
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Count {
            common,
            epsilon,
            delta,
            use_mis,
        } => cmd_count(common, *epsilon, *delta, *use_mis),
        Command::Sample {
            common,
            epsilon,
            samples,
            workers,
            mode,
            use_mis,
        } => cmd_sample(common, *epsilon, *samples, *workers, (*mode).into(), *use_mis),
        Command::Mis { common, budget } => cmd_mis(common, *budget),
        Command::Wcount {
            common,
            epsilon,
            delta,
            precision,
        } => cmd_wcount(common, *epsilon, *delta, *precision),
        Command::Wsample {
            common,
            epsilon,
            samples,
            workers,
            mode,
            precision,
        } => cmd_wsample(common, *epsilon, *samples, *workers, (*mode).into(), *precision),
        Command::Exact { common, cap, precision } => cmd_exact(common, *cap, *precision),
        Command::Validate {
            common,
            epsilon,
            samples,
            samples_from,
            cap,
        } => cmd_validate(common, *epsilon, *samples, samples_from.as_ref(), *cap),
    }
}

fn rounds_json(rounds: &[RoundOutcome]) -> Value {
    Value::from(
        rounds
            .iter()
            .map(|r| match r {
                RoundOutcome::Cell { m, cell_count } => json!({ "m": m, "cell_count": cell_count }),
                RoundOutcome::Fail => json!({ "failed": true }),
            })
            .collect::<Vec<_>>(),
    )
}

fn rounds_text(text: &mut String, rounds: &[RoundOutcome]) {
    for (i, r) in rounds.iter().enumerate() {
        match r {
            RoundOutcome::Cell { m, cell_count } => writeln!(text, "c round {} m {m} cell {cell_count}", i + 1),
            RoundOutcome::Fail => writeln!(text, "c round {} failed", i + 1),
        }
        .unwrap();
    }
}

fn cmd_count(common: &Common, epsilon: f64, delta: f64, use_mis: bool) -> Result<Report, CliError> {
    check_positive("epsilon", epsilon)?;
    let f = load(common)?;
    let seed = seed_of(common);
    let vars = hashing_vars(&f, use_mis)?;
    let est = approx_count(&f, &vars, epsilon, delta, &mut seeded(seed))?;

    let mut text = String::new();
    writeln!(text, "c seed {seed}").unwrap();
    writeln!(text, "c epsilon {epsilon} delta {delta}").unwrap();
    writeln!(text, "c pivot {} rounds {}", est.params.pivot, est.params.rounds).unwrap();
    writeln!(text, "c hashed over {} variables", vars.len()).unwrap();
    writeln!(text, "c exact {}", est.exact).unwrap();
    rounds_text(&mut text, &est.rounds);
    writeln!(text, "s mc {}", est.value).unwrap();

    let json = json!({
        "command": "count",
        "seed": seed,
        "epsilon": epsilon,
        "delta": delta,
        "pivot": est.params.pivot,
        "rounds_planned": est.params.rounds,
        "use_mis": use_mis,
        "hashing_vars": vars_json(&vars),
        "value": est.value.to_string(),
        "exact": est.exact,
        "rounds": rounds_json(&est.rounds),
    });
    Ok(Report { text, json })
}

fn batch_header(text: &mut String, b: &SampleBatch) {
    let p = &b.params;
    writeln!(
        text,
        "c epsilon {} kappa {:.6} pivot {} lo {} hi {}",
        p.epsilon, p.kappa, p.pivot, p.lo_thresh, p.hi_thresh
    )
    .unwrap();
    writeln!(text, "c mode {} exact {}", mode_name(b.mode), b.exact).unwrap();
    if let Some(c) = &b.count_estimate {
        writeln!(text, "c count estimate {c}").unwrap();
        writeln!(text, "c window {}", b.window.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ")).unwrap();
    }
    writeln!(text, "c cells {} failed {} overshoot {}", b.cells.len(), b.failed, b.overshoot).unwrap();
}

fn mode_name(m: SampleMode) -> &'static str {
    match m {
        SampleMode::Single => "single",
        SampleMode::Multi => "multi",
    }
}

fn batch_json(b: &SampleBatch) -> serde_json::Map<String, Value> {
    let p = &b.params;
    let mut m = serde_json::Map::new();
    m.insert("epsilon".into(), json!(p.epsilon));
    m.insert("kappa".into(), json!(p.kappa));
    m.insert("pivot".into(), json!(p.pivot));
    m.insert("lo_thresh".into(), json!(p.lo_thresh));
    m.insert("hi_thresh".into(), json!(p.hi_thresh));
    m.insert("mode".into(), json!(mode_name(b.mode)));
    m.insert("exact".into(), json!(b.exact));
    m.insert(
        "count_estimate".into(),
        b.count_estimate.as_ref().map_or(Value::Null, |c| Value::from(c.to_string())),
    );
    m.insert("window".into(), json!(b.window));
    m.insert("cells".into(), json!(b.cells.len()));
    m.insert("failed".into(), json!(b.failed));
    m.insert("overshoot".into(), json!(b.overshoot));
    m
}

fn samples_text(text: &mut String, samples: &[ProjectedWitness]) {
    for s in samples {
        writeln!(text, "{}", s.to_dimacs_line()).unwrap();
    }
}

fn cmd_sample(
    common: &Common,
    epsilon: f64,
    samples: usize,
    workers: usize,
    mode: SampleMode,
    use_mis: bool,
) -> Result<Report, CliError> {
    let f = load(common)?;
    let seed = seed_of(common);
    let projection = f.projection_vars();
    let vars = hashing_vars(&f, use_mis)?;
    let batch = parallel_sample(&f, &vars, epsilon, samples, mode, workers, seed)?;
    let out: Vec<ProjectedWitness> = if vars == projection {
        batch.witnesses.clone()
    } else {
        batch
            .witnesses
            .iter()
            .map(|w| {
                let full = extend_witness(&f, w).expect("sample extends to a model");
                full.project(&projection).expect("projection within support")
            })
            .collect()
    };

    let mut text = String::new();
    writeln!(text, "c seed {seed}").unwrap();
    writeln!(text, "c sampling set {}", vars_text(&projection)).unwrap();
    writeln!(text, "c hashed over {} variables", vars.len()).unwrap();
    batch_header(&mut text, &batch);
    samples_text(&mut text, &out);

    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!("sample"));
    m.insert("seed".into(), json!(seed));
    m.insert("use_mis".into(), json!(use_mis));
    m.insert("sampling_set".into(), vars_json(&projection));
    m.insert("hashing_vars".into(), vars_json(&vars));
    m.extend(batch_json(&batch));
    m.insert("samples".into(), json!(out));
    Ok(Report {
        text,
        json: Value::Object(m),
    })
}

fn cmd_mis(common: &Common, budget: Option<u64>) -> Result<Report, CliError> {
    let f = load(common)?;
    let seed = seed_of(common);
    let projection = f.projection_vars();
    let support = minimize_support_for(&f, &projection, &projection, None, budget)?;
    let line = format_ind_line(&support);
    let text = format!("c seed {seed}\n{line}\n");
    let json = json!({
        "command": "mis",
        "seed": seed,
        "start": vars_json(&projection),
        "support": vars_json(&support),
        "ind_line": line,
    });
    Ok(Report { text, json })
}

fn load_weighted(common: &Common, precision: u32) -> Result<(WeightedCnf, Vec<RoundingNote>), CliError> {
    let f = load(common)?;
    Ok(WeightedCnf::from_formula(f, precision)?)
}

fn weights_text(text: &mut String, notes: &[RoundingNote]) {
    for n in notes {
        writeln!(
            text,
            "c weight {} {} as {}/2^{} error {:e}",
            n.lit, n.text, n.weight.k, n.weight.bits, n.error
        )
        .unwrap();
    }
}

fn weights_json(notes: &[RoundingNote]) -> Value {
    Value::from(
        notes
            .iter()
            .map(|n| {
                json!({
                    "lit": n.lit,
                    "text": n.text,
                    "k": n.weight.k,
                    "bits": n.weight.bits,
                    "rounding_error": n.error,
                })
            })
            .collect::<Vec<_>>(),
    )
}

fn tilt_string(t: &Option<BigRational>) -> String {
    t.as_ref().map_or_else(|| "inf".to_string(), rational_string)
}

fn tilt_json(t: &Option<BigRational>) -> Value {
    t.as_ref().map_or(Value::Null, |r| Value::from(rational_string(r)))
}

fn cmd_wcount(common: &Common, epsilon: f64, delta: f64, precision: u32) -> Result<Report, CliError> {
    check_positive("epsilon", epsilon)?;
    let (w, notes) = load_weighted(common, precision)?;
    let seed = seed_of(common);
    let est = weighted_count(&w, epsilon, delta, &mut seeded(seed))?;
    let tilt = tilt_bound(&w);

    let mut text = String::new();
    writeln!(text, "c seed {seed}").unwrap();
    writeln!(text, "c epsilon {epsilon} delta {delta} precision {precision}").unwrap();
    weights_text(&mut text, &notes);
    writeln!(text, "c scale log2 {}", est.scale_log2).unwrap();
    writeln!(text, "c tilt bound {}", tilt_string(&tilt)).unwrap();
    writeln!(text, "c unweighted {} exact {}", est.unweighted.value, est.unweighted.exact).unwrap();
    rounds_text(&mut text, &est.unweighted.rounds);
    writeln!(text, "s wmc {} ~ {}", rational_string(&est.value), ratio_to_f64(&est.value)).unwrap();

    let json = json!({
        "command": "wcount",
        "seed": seed,
        "epsilon": epsilon,
        "delta": delta,
        "precision": precision,
        "weights": weights_json(&notes),
        "scale_log2": est.scale_log2,
        "tilt_bound": tilt_json(&tilt),
        "unweighted_value": est.unweighted.value.to_string(),
        "exact": est.unweighted.exact,
        "rounds": rounds_json(&est.unweighted.rounds),
        "value": rational_string(&est.value),
        "value_float": ratio_to_f64(&est.value),
    });
    Ok(Report { text, json })
}

fn cmd_wsample(
    common: &Common,
    epsilon: f64,
    samples: usize,
    workers: usize,
    mode: SampleMode,
    precision: u32,
) -> Result<Report, CliError> {
    let (w, notes) = load_weighted(common, precision)?;
    let seed = seed_of(common);
    let (batch, red) = weighted_sample(&w, epsilon, samples, mode, workers, seed)?;

    let mut text = String::new();
    writeln!(text, "c seed {seed}").unwrap();
    writeln!(text, "c precision {precision}").unwrap();
    weights_text(&mut text, &notes);
    writeln!(text, "c scale log2 {}", red.scale_log2).unwrap();
    writeln!(text, "c sampling set {}", vars_text(&red.original_vars)).unwrap();
    batch_header(&mut text, &batch);
    samples_text(&mut text, &batch.witnesses);

    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!("wsample"));
    m.insert("seed".into(), json!(seed));
    m.insert("precision".into(), json!(precision));
    m.insert("weights".into(), weights_json(&notes));
    m.insert("scale_log2".into(), json!(red.scale_log2));
    m.insert("sampling_set".into(), vars_json(&red.original_vars));
    m.extend(batch_json(&batch));
    m.insert("samples".into(), json!(batch.witnesses));
    Ok(Report {
        text,
        json: Value::Object(m),
    })
}

fn cmd_exact(common: &Common, cap: u32, precision: u32) -> Result<Report, CliError> {
    let (w, notes) = load_weighted(common, precision)?;
    let seed = seed_of(common);
    let projection = w.formula.projection_vars();
    let count = oracle::exact_count(&w.formula, &projection, cap)?;

    let mut text = String::new();
    writeln!(text, "c seed {seed}").unwrap();
    writeln!(text, "c projection {}", vars_text(&projection)).unwrap();
    weights_text(&mut text, &notes);
    writeln!(text, "s mc {count}").unwrap();

    let mut json = json!({
        "command": "exact",
        "seed": seed,
        "cap": cap,
        "projection": vars_json(&projection),
        "count": count.to_string(),
        "weights": weights_json(&notes),
        "weighted_count": Value::Null,
        "scale_log2": Value::Null,
        "tilt": Value::Null,
        "tilt_bound": Value::Null,
    });
    if !w.weights.is_empty() {
        let wc = oracle::exact_weighted_count(&w, cap)?;
        let red = reduce_wmc_to_umc(&w)?;
        let bound = tilt_bound(&w);
        writeln!(text, "c scale log2 {}", red.scale_log2).unwrap();
        writeln!(text, "c tilt bound {}", tilt_string(&bound)).unwrap();
        json["scale_log2"] = json!(red.scale_log2);
        json["tilt_bound"] = tilt_json(&bound);
        json["weighted_count"] = json!(rational_string(&wc));
        if count > 0 {
            let tilt = oracle::exact_tilt(&w, cap)?;
            writeln!(text, "c tilt {}", tilt_string(&tilt)).unwrap();
            json["tilt"] = tilt_json(&tilt);
        }
        writeln!(text, "s wmc {}", rational_string(&wc)).unwrap();
    }
    Ok(Report { text, json })
}

fn read_samples(path: &PathBuf, f: &CnfFormula) -> Result<Vec<ProjectedWitness>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let mut lits = Vec::new();
        for tok in line.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| CliError::input(format!("{}:{}: bad literal `{tok}`", path.display(), i + 1)))?;
            if v == 0 {
                break;
            }
            if v.unsigned_abs() > f.num_vars() as u64 {
                return Err(CliError::input(format!("{}:{}: literal {v} out of range", path.display(), i + 1)));
            }
            lits.push(Lit::from_dimacs(v));
        }
        out.push(ProjectedWitness::from_lits(lits));
    }
    Ok(out)
}

fn report_json(r: &oracle::UniformityReport) -> Value {
    json!({
        "sample_count": r.sample_count,
        "chi_square": r.chi_square,
        "freq_ratio": r.freq_ratio,
    })
}

fn cmd_validate(
    common: &Common,
    epsilon: f64,
    samples: Option<usize>,
    samples_from: Option<&PathBuf>,
    cap: u32,
) -> Result<Report, CliError> {
    let f = load(common)?;
    let seed = seed_of(common);
    let projection = f.projection_vars();
    let reference = oracle::enumerate_solutions(&f, &projection, cap)?;
    if reference.is_empty() {
        return Err(CliError::failure("formula is unsatisfiable"));
    }
    let tested = match samples_from {
        Some(p) => read_samples(p, &f)?,
        None => {
            let n = samples.unwrap_or(100 * reference.len());
            let b = parallel_sample(&f, &projection, epsilon, n, SampleMode::Single, 1, derive_seed(seed, 0))?;
            b.witnesses
        }
    };
    let n = tested.len();
    let uniform = oracle::exact_uniform_sample(&f, &projection, &mut stream(seed, 1), n, cap)?;
    let two = oracle::two_sample_report(&tested, &uniform, &reference)?;

    let mut text = String::new();
    writeln!(text, "c seed {seed}").unwrap();
    writeln!(text, "c solutions {} samples {n}", reference.len()).unwrap();
    let fr = |r: &Option<f64>| r.map_or("inf".to_string(), |x| x.to_string());
    for (name, r) in [("sampler", &two.first), ("uniform", &two.second)] {
        writeln!(
            text,
            "c {name} chi2 {} df {} p {} freq_ratio {}",
            r.chi_square.statistic,
            r.chi_square.df,
            r.chi_square.p_value,
            fr(&r.freq_ratio)
        )
        .unwrap();
    }
    writeln!(
        text,
        "c two-sample chi2 {} df {} p {}",
        two.chi_square.statistic, two.chi_square.df, two.chi_square.p_value
    )
    .unwrap();
    for ((sol, a), (_, b)) in two.first.histogram.iter().zip(&two.second.histogram) {
        writeln!(text, "h {a} {b} {}", sol.to_dimacs_line()).unwrap();
    }

    let histogram: Vec<Value> = two
        .first
        .histogram
        .iter()
        .zip(&two.second.histogram)
        .map(|((sol, a), (_, b))| json!({ "solution": sol, "sampler": a, "uniform": b }))
        .collect();
    let json = json!({
        "command": "validate",
        "seed": seed,
        "epsilon": epsilon,
        "solutions": reference.len(),
        "samples": n,
        "sampler": report_json(&two.first),
        "uniform": report_json(&two.second),
        "two_sample": two.chi_square,
        "histogram": histogram,
    });
    Ok(Report { text, json })
}
