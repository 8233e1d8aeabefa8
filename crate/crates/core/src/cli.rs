//! Command-line front end. Reports go to stdout as one JSON document (or
//! CSV), logs go to stderr.
//!
//! Exit codes: 0 success, 1 usage / input / budget error, 2 a mathematical
//! check failed.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::algebra::{GroupAlgebraElement, DEFAULT_SUPPORT_CAP};
use crate::error::{Error, Result};
use crate::io::{parse_element, parse_phi, parse_word_list};
use crate::lacunary::{coefficient_matrix, default_t_grid, lacunarity_constants, verify_schur_bound};
use crate::lengths::{check_conditionally_negative, check_symmetry_unitality, LengthFunction, DEFAULT_CN_TOL};
use crate::linalg::log_grid;
use crate::semigroup_bmo::{
    bmo_c_estimate, bmo_estimate, bmo_lower_witness, corollary1_check, default_grid_for,
    theorem1_certificate, torus_bmo_estimate, DEFAULT_TORUS_SAMPLES,
};
use crate::sidon_sets::{
    count_intersection, freeness_bruteforce, generate_qn, is_free_basis, is_free_set,
    lambda_infty_witness, qn_candidate_count, unconditionality_witness, SymmetricWordSpec,
    WitnessConfig, DEFAULT_COMBINATORIAL_CAP,
};
use crate::words::{enumerate_ball, Word, DEFAULT_BALL_CAP};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const BUDGET_ENV: &str = "LACUNARIA_BUDGET";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

/// Relative slack for the Haagerup-Pisier / sandwich consistency checks.
const CHECK_SLACK: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "lacunaria", version, about = "Semigroup BMO, lacunarity and free-set experiments")]
struct Cli {
    /// JSON file whose keys mirror the flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct GlobalArgs {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<Format>,
    /// Cap on enumerated ball sizes.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ball_cap: Option<usize>,
    /// Cap on enumerated products and generated candidates.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    product_cap: Option<u128>,
    /// Cap on intermediate support sizes in moment computations.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    support_cap: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Conditional negativity of a length on a finite set.
    CnCheck(CnArgs),
    /// Growth and separation constants of a sequence.
    Lacunarity(SeqArgs),
    /// Row and column sums of the lacunary coefficient matrix over a t-grid.
    Schur(SeqArgs),
    /// Column/row BMO estimate of an element.
    Bmo(BmoArgs),
    /// BMO estimate on the circle for scalar elements of Z.
    Torus(BmoArgs),
    /// The p-norm bound for a lacunary element at even p.
    Corollary(CorollaryArgs),
    /// Generate the symmetric-word set Q_n.
    Qn(QnArgs),
    /// Free basis and free set certification of a word set.
    Freeness(FreenessArgs),
    /// Size of pi(Q_n) inside the ball of radius 2nm in F_2.
    Count(CountArgs),
    /// Empirical Sidon or Lambda-infinity witness ratios.
    Witness(WitnessArgs),
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct PsiArgs {
    /// Length function: word, abs or pow:<alpha>.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    psi: Option<String>,
    /// Table file of `<word><TAB><value>` lines; overrides --psi.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    psi_table: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct CnArgs {
    #[command(flatten)]
    #[serde(flatten)]
    psi: PsiArgs,
    /// Rank of the free group for the ball.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rank: Option<u32>,
    /// Radius of the ball used as the test set.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ball: Option<usize>,
    /// Word-list file used as the test set instead of a ball.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    set: Option<PathBuf>,
    /// Relative eigenvalue tolerance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct SeqArgs {
    #[command(flatten)]
    #[serde(flatten)]
    psi: PsiArgs,
    /// Word-list file with the sequence, one literal per line.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seq: Option<PathBuf>,
    /// Log-spaced grid `min:max:n`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<String>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct BmoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    psi: PsiArgs,
    /// Element JSON file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    element: Option<PathBuf>,
    /// Truncation radius of the regular representation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<usize>,
    /// Log-spaced grid `min:max:n`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<String>,
    /// Use the circle path (scalar elements of Z only).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    torus: Option<bool>,
    /// Samples on the circle.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct CorollaryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    psi: PsiArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    element: Option<PathBuf>,
    /// Even exponent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<u32>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct QnArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    /// File of `k<TAB>phi(k)` lines.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct FreenessArgs {
    /// Word-list file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    words: Option<PathBuf>,
    /// Also run the brute-force product oracle with this many factors.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct CountArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum WitnessKind {
    Sidon,
    Lambda,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct WitnessArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<WitnessKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    words: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Largest coefficient block size used by the trials.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_dim: Option<usize>,
}

/// Resolved caps and format shared by all subcommands.
struct Settings {
    format: Format,
    ball_cap: usize,
    product_cap: u128,
    support_cap: usize,
}

struct Outcome {
    report: Value,
    /// Header and rows for CSV output; `None` falls back to the report's scalars.
    rows: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    passed: bool,
}

impl Outcome {
    fn new(report: impl Serialize, passed: bool) -> Result<Self> {
        Ok(Self {
            report: serde_json::to_value(report)?,
            rows: None,
            passed,
        })
    }

    fn with_rows(mut self, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        self.rows = Some((header, rows));
        self
    }
}

/// Overlays the explicitly given flags on the config file and fills defaults.
fn merge<T: Serialize + DeserializeOwned>(config: &Map<String, Value>, flags: &T) -> Result<T> {
    let mut merged = config.clone();
    if let Value::Object(given) = serde_json::to_value(flags)? {
        merged.extend(given);
    }
    Ok(serde_json::from_value(Value::Object(merged))?)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::InvalidArgument(format!("cannot read {}: {e}", path.display()))
    })
}

fn required<T: Clone>(value: &Option<T>, flag: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::InvalidArgument(format!("missing required --{flag}")))
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidArgument(format!("grid {spec:?} is not min:max:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid {spec:?} needs 0 < min < max and n >= 2"
        )));
    }
    Ok(log_grid(lo, hi, n))
}

fn resolve_psi(args: &mut PsiArgs) -> Result<LengthFunction> {
    if let Some(path) = &args.psi_table {
        return LengthFunction::parse_table(path.display().to_string(), &read(path)?);
    }
    let name = args.psi.get_or_insert_with(|| "word".into());
    LengthFunction::from_name(name)
}

fn load_element(path: &Option<PathBuf>) -> Result<GroupAlgebraElement> {
    parse_element(&read(&required(path, "element")?)?)
}

fn load_words(path: &Option<PathBuf>, flag: &str) -> Result<Vec<Word>> {
    parse_word_list(&read(&required(path, flag)?)?)
}

fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

fn grid_for_seq(psi: &LengthFunction, seq: &[Word]) -> Result<Vec<f64>> {
    let lens = seq.iter().map(|w| psi.evaluate(w)).collect::<Result<Vec<f64>>>()?;
    let lo = lens.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let hi = lens.iter().copied().fold(0.0, f64::max);
    if !lo.is_finite() {
        return Err(Error::InvalidArgument("sequence has no positive lengths".into()));
    }
    Ok(default_t_grid(lo, hi))
}

fn cn_check(args: &mut CnArgs, s: &Settings, log: &mut dyn Write) -> Result<Outcome> {
    let psi = resolve_psi(&mut args.psi)?;
    let tol = *args.tol.get_or_insert(DEFAULT_CN_TOL);
    let set = match &args.set {
        Some(path) => parse_word_list(&read(path)?)?,
        None => {
            let rank = *args.rank.get_or_insert(1);
            let radius = *args.ball.get_or_insert(2);
            enumerate_ball(rank, radius, s.ball_cap)?
        }
    };
    let _ = writeln!(log, "cn-check: {} on {} words", psi.name(), set.len());
    let symmetry = check_symmetry_unitality(&psi, &set)?;
    let verdict = check_conditionally_negative(&psi, &set, tol)?;
    let passed = verdict.passed;
    Outcome::new(
        json!({
            "psi": psi.name(),
            "set_size": set.len(),
            "symmetry": symmetry,
            "passed": verdict.passed,
            "max_eigenvalue": verdict.max_eigenvalue,
            "threshold": verdict.threshold,
            "witness": verdict.witness,
        }),
        passed,
    )
}

fn lacunarity(args: &mut SeqArgs, log: &mut dyn Write) -> Result<Outcome> {
    let psi = resolve_psi(&mut args.psi)?;
    let seq = load_words(&args.seq, "seq")?;
    let _ = writeln!(log, "lacunarity: {} terms under {}", seq.len(), psi.name());
    let report = lacunarity_constants(&psi, &seq)?;
    let passed = report.passed;
    Outcome::new(report, passed)
}

fn schur(args: &mut SeqArgs, log: &mut dyn Write) -> Result<Outcome> {
    let psi = resolve_psi(&mut args.psi)?;
    let seq = load_words(&args.seq, "seq")?;
    let grid = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => grid_for_seq(&psi, &seq)?,
    };
    let _ = writeln!(log, "schur: {} terms, {} grid points", seq.len(), grid.len());
    let report = verify_schur_bound(&psi, &seq, &grid)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let a = coefficient_matrix(&psi, &seq, t)?;
        let row = a.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
        let col = a.column_iter().map(|c| c.sum()).fold(0.0, f64::max);
        rows.push(vec![fmt_f(t), fmt_f(row), fmt_f(col)]);
    }
    let passed = report.passed;
    Ok(Outcome::new(report, passed)?.with_rows(vec!["t", "max_row_sum", "max_col_sum"], rows))
}

fn bmo_grid(args: &BmoArgs, psi: &LengthFunction, x: &GroupAlgebraElement) -> Result<Vec<f64>> {
    match &args.grid {
        Some(g) => parse_grid(g),
        None => default_grid_for(psi, x),
    }
}

fn bmo(args: &mut BmoArgs, s: &Settings, log: &mut dyn Write) -> Result<Outcome> {
    if *args.torus.get_or_insert(false) {
        return torus(args, log);
    }
    let psi = resolve_psi(&mut args.psi)?;
    let x = load_element(&args.element)?;
    let radius = *args.radius.get_or_insert(8);
    let grid = bmo_grid(args, &psi, &x)?;
    let _ = writeln!(
        log,
        "bmo: {} terms, dim {}, radius {radius}, {} grid points",
        x.len(),
        x.dim(),
        grid.len()
    );
    let estimate = bmo_estimate(&psi, &x, &grid, radius, s.ball_cap)?;
    let lower_witness = bmo_lower_witness(&psi, &x, &grid, true)?;
    let sq = estimate.bmo_lower * estimate.bmo_lower;
    let mut passed = lower_witness <= sq * (1.0 + CHECK_SLACK) + CHECK_SLACK;
    if let Some(upper) = estimate.certified_upper {
        passed &= estimate.bmo_lower <= upper * (1.0 + CHECK_SLACK);
    }
    let mut rows = Vec::new();
    if s.format == Format::Csv {
        for &t in &grid {
            let trace = bmo_lower_witness(&psi, &x, &[t], false)?;
            let column = bmo_c_estimate(&psi, &x, &[t], radius, s.ball_cap)?;
            rows.push(vec![fmt_f(t), fmt_f(trace), fmt_f(column.value)]);
        }
    }
    let mut report = serde_json::to_value(&estimate)?;
    report["lower_witness"] = json!(lower_witness);
    report["method"] = json!("truncated");
    report["consistent"] = json!(passed);
    Ok(Outcome {
        report,
        rows: None,
        passed,
    }
    .with_rows(vec!["t", "trace_lower", "column_lower"], rows))
}

fn torus(args: &mut BmoArgs, log: &mut dyn Write) -> Result<Outcome> {
    let psi = resolve_psi(&mut args.psi)?;
    let x = load_element(&args.element)?;
    let samples = *args.samples.get_or_insert(DEFAULT_TORUS_SAMPLES);
    let grid = bmo_grid(args, &psi, &x)?;
    let _ = writeln!(log, "torus: {} terms, {samples} samples, {} grid points", x.len(), grid.len());
    let estimate = torus_bmo_estimate(&psi, &x, &grid, samples)?;
    let lower_witness = bmo_lower_witness(&psi, &x, &grid, true)?;
    let certified_upper = theorem1_certificate(&psi, &x);
    let sq = estimate.value * estimate.value;
    let mut passed = lower_witness <= sq * (1.0 + CHECK_SLACK) + CHECK_SLACK;
    if let Some(upper) = certified_upper {
        passed &= estimate.value <= upper * (1.0 + CHECK_SLACK);
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let point = torus_bmo_estimate(&psi, &x, &[t], samples)?;
        let trace = bmo_lower_witness(&psi, &x, &[t], false)?;
        rows.push(vec![fmt_f(t), fmt_f(trace), fmt_f(point.value), fmt_f(point.theta_star)]);
    }
    Ok(Outcome::new(
        json!({
            "method": "torus",
            "bmo_lower": estimate.value,
            "t_star": estimate.t_star,
            "theta_star": estimate.theta_star,
            "lower_witness": lower_witness,
            "certified_upper": certified_upper,
            "samples": samples,
            "consistent": passed,
        }),
        passed,
    )?
    .with_rows(vec!["t", "trace_lower", "bmo_value", "theta_star"], rows))
}

fn corollary(args: &mut CorollaryArgs, s: &Settings, log: &mut dyn Write) -> Result<Outcome> {
    let psi = resolve_psi(&mut args.psi)?;
    let x = load_element(&args.element)?;
    let p = *args.p.get_or_insert(4);
    let _ = writeln!(log, "corollary: p = {p}, {} terms", x.len());
    let report = corollary1_check(&psi, &x, p, s.support_cap)?;
    let passed = report.passed;
    Outcome::new(report, passed)
}

fn qn(args: &mut QnArgs, s: &Settings, log: &mut dyn Write) -> Result<Outcome> {
    let n = required(&args.n, "n")?;
    let m = required(&args.m, "m")?;
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("n and m must be positive".into()));
    }
    let needed = qn_candidate_count(n, m);
    if needed > s.product_cap {
        return Err(Error::BudgetExceeded {
            needed,
            cap: s.product_cap,
        });
    }
    let mut spec = SymmetricWordSpec::new(n, m);
    if let Some(path) = &args.phi {
        let phi = parse_phi(&read(path)?)?;
        for k in 1..=m as i32 {
            if phi.pairs().all(|(j, _)| j != k) {
                return Err(Error::InvalidArgument(format!("phi file does not define phi({k})")));
            }
        }
        spec = spec.with_phi(phi);
    }
    let words = generate_qn(&spec);
    let _ = writeln!(log, "qn: {} of {needed} candidates are reduced", words.len());
    let literals: Vec<String> = words.iter().map(Word::to_string).collect();
    let rows = literals.iter().map(|w| vec![w.clone()]).collect();
    Ok(Outcome::new(
        json!({"n": n, "m": m, "count": words.len(), "candidates": needed, "words": literals}),
        true,
    )?
    .with_rows(vec!["word"], rows))
}

fn freeness(args: &mut FreenessArgs, s: &Settings, log: &mut dyn Write) -> Result<Outcome> {
    let words = load_words(&args.words, "words")?;
    let _ = writeln!(log, "freeness: folding {} words", words.len());
    let basis = is_free_basis(&words)?;
    let set = is_free_set(&words)?;
    let mut passed = set.free;
    let oracle = match args.oracle {
        Some(m) => {
            let _ = writeln!(log, "freeness: brute-force oracle with up to {m} factors");
            let r = freeness_bruteforce(&words, m, s.product_cap)?;
            passed &= r.free_up_to_m;
            Some(r)
        }
        None => None,
    };
    Outcome::new(
        json!({"free_basis": basis, "free_set": set, "oracle": oracle, "passed": passed}),
        passed,
    )
}

fn count(args: &mut CountArgs, s: &Settings, log: &mut dyn Write) -> Result<Outcome> {
    let n = required(&args.n, "n")?;
    let m = required(&args.m, "m")?;
    let _ = writeln!(log, "count: n = {n}, m = {m}");
    Outcome::new(count_intersection(n, m, s.product_cap)?, true)
}

fn witness(args: &mut WitnessArgs, s: &Settings, log: &mut dyn Write) -> Result<Outcome> {
    let kind = *args.kind.get_or_insert(WitnessKind::Lambda);
    let words = load_words(&args.words, "words")?;
    let cfg = WitnessConfig {
        trials: *args.trials.get_or_insert(64),
        radius: *args.radius.get_or_insert(8),
        seed: *args.seed.get_or_insert(0),
        max_dim: *args.max_dim.get_or_insert(2),
        ball_cap: s.ball_cap,
    };
    let _ = writeln!(log, "witness: {kind:?}, {} words, {} trials", words.len(), cfg.trials);
    let report = match kind {
        WitnessKind::Sidon => unconditionality_witness(&words, &cfg)?,
        WitnessKind::Lambda => lambda_infty_witness(&words, &cfg)?,
    };
    // Free supports are bounded by 2 on both witnesses.
    let passed = !report.certified_free || report.value <= 2.0 * (1.0 + CHECK_SLACK);
    let rows = report
        .ratios
        .iter()
        .enumerate()
        .map(|(i, r)| vec![i.to_string(), fmt_f(*r)])
        .collect();
    Ok(Outcome::new(report, passed)?.with_rows(vec!["trial", "ratio"], rows))
}

fn scalar_cell(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some(String::new()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn write_csv(out: &mut dyn Write, outcome: &Outcome) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv output: {e}"));
    match &outcome.rows {
        Some((header, rows)) if !rows.is_empty() => {
            w.write_record(header).map_err(csv_err)?;
            for r in rows {
                w.write_record(r).map_err(csv_err)?;
            }
        }
        _ => {
            let fields: Vec<(String, String)> = outcome
                .report
                .as_object()
                .into_iter()
                .flatten()
                .filter_map(|(k, v)| scalar_cell(v).map(|c| (k.clone(), c)))
                .collect();
            w.write_record(fields.iter().map(|f| &f.0)).map_err(csv_err)?;
            w.write_record(fields.iter().map(|f| &f.1)).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn load_config(path: &Option<PathBuf>) -> Result<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    match serde_json::from_str::<Value>(&read(path)?)? {
        Value::Object(map) => Ok(map),
        _ => Err(Error::InvalidArgument(format!(
            "config {} must be a JSON object",
            path.display()
        ))),
    }
}

fn budget_from_env() -> Result<Option<u128>> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v.trim().parse::<u128>().map(Some).map_err(|_| {
            Error::InvalidArgument(format!("{BUDGET_ENV}={v:?} is not a nonnegative integer"))
        }),
        Err(_) => Ok(None),
    }
}

fn settings(global: &mut GlobalArgs, flags: &GlobalArgs, budget: Option<u128>) -> Result<Settings> {
    // Precedence: flag, then the budget variable, then the config file.
    if let Some(b) = budget {
        if flags.ball_cap.is_none() {
            global.ball_cap = Some(usize::try_from(b).unwrap_or(usize::MAX));
        }
        if flags.product_cap.is_none() {
            global.product_cap = Some(b);
        }
    }
    let s = Settings {
        format: *global.format.get_or_insert(Format::Json),
        ball_cap: *global.ball_cap.get_or_insert(DEFAULT_BALL_CAP),
        product_cap: *global.product_cap.get_or_insert(DEFAULT_COMBINATORIAL_CAP),
        support_cap: *global.support_cap.get_or_insert(DEFAULT_SUPPORT_CAP),
    };
    if s.ball_cap == 0 || s.product_cap == 0 || s.support_cap == 0 {
        return Err(Error::InvalidArgument("caps must be positive".into()));
    }
    Ok(s)
}

fn dispatch(cli: Cli, out: &mut dyn Write, log: &mut dyn Write) -> Result<i32> {
    let config = load_config(&cli.config)?;
    let mut global = merge(&config, &cli.global)?;
    let s = settings(&mut global, &cli.global, budget_from_env()?)?;

    macro_rules! run {
        ($name:literal, $args:expr, |$a:ident| $body:expr) => {{
            let mut $a = merge(&config, $args)?;
            let outcome = $body?;
            ($name, serde_json::to_value(&$a)?, outcome)
        }};
    }
    let (name, echo, outcome) = match &cli.command {
        Command::CnCheck(a) => run!("cn-check", a, |a| cn_check(&mut a, &s, log)),
        Command::Lacunarity(a) => run!("lacunarity", a, |a| lacunarity(&mut a, log)),
        Command::Schur(a) => run!("schur", a, |a| schur(&mut a, log)),
        Command::Bmo(a) => run!("bmo", a, |a| bmo(&mut a, &s, log)),
        Command::Torus(a) => run!("torus", a, |a| torus(&mut a, log)),
        Command::Corollary(a) => run!("corollary", a, |a| corollary(&mut a, &s, log)),
        Command::Qn(a) => run!("qn", a, |a| qn(&mut a, &s, log)),
        Command::Freeness(a) => run!("freeness", a, |a| freeness(&mut a, &s, log)),
        Command::Count(a) => run!("count", a, |a| count(&mut a, &s, log)),
        Command::Witness(a) => run!("witness", a, |a| witness(&mut a, &s, log)),
    };

    match s.format {
        Format::Json => {
            let mut config_echo = serde_json::to_value(&global)?;
            if let (Value::Object(c), Value::Object(e)) = (&mut config_echo, echo) {
                c.extend(e);
            }
            let doc = json!({
                "command": name,
                "version": VERSION,
                "config": config_echo,
                "report": outcome.report,
            });
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
        Format::Csv => write_csv(out, &outcome)?,
    }
    if !outcome.passed {
        let _ = writeln!(log, "{name}: check failed");
        return Ok(EXIT_CHECK_FAILED);
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, log: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(log, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli, out, log) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(log, "error: {e}");
            EXIT_ERROR
        }
    }
}
