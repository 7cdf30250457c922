//! Command-line entry point.
//!
//! Every command emits one self-describing report: a schema version, the
//! parsed configuration, crate versions and the command's result. JSON is the
//! canonical format; CSV and text are projections of it.
//!
//! Exit codes: 0 success, 1 refusal (bad input, budgets, preconditions),
//! 2 invariant violation found at runtime, 3 I/O or store corruption.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::constants::{
    alpha, beta, envelope, euler_gamma, load_real_table, real_lower_bound, upper_bound,
    BoundEnvelope, CertifiedLowers, ConstantSequence, SequenceKind, UpperCatalogue, UpperName,
};
use crate::error::{Error, Result};
use crate::forms::{CertPolicy, FormRecord, MultilinearForm, SupConfig};
use crate::scalar::ScalarField;
use crate::search::{
    optimize_lower_bound, verify_inequality, CommitOutcome, ResultStore, SearchConfig, VerifyLabel,
    CAP_TOL,
};
use crate::sequences::{
    classify, dyadic_probe, gen, parse_params, polynomial_rejection, ExtendedLimitEstimate,
    LimitStatus, Schedule,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUSAL: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldChoice {
    Real,
    Complex,
    Both,
}

impl FieldChoice {
    fn fields(self) -> Vec<ScalarField> {
        match self {
            FieldChoice::Real => vec![ScalarField::Real],
            FieldChoice::Complex => vec![ScalarField::Complex],
            FieldChoice::Both => vec![ScalarField::Real, ScalarField::Complex],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyChoice {
    Auto,
    Exact,
    Ascent,
    Grid,
}

/// Numerical laboratory for the multilinear Bohnenblust-Hille inequality.
#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "bhlab", version)]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Results store (JSON array of search records).
    #[arg(long, global = true, env = "BHLAB_STORE")]
    pub store: Option<PathBuf>,
    /// Tolerance override for estimators and envelope checks.
    #[arg(long, global = true, env = "BHLAB_TOL")]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Tabulate the shipped constants and bound sequences.
    Constants(ConstantsArgs),
    /// Compare both sides of the inequality for one form.
    Verify(VerifyArgs),
    /// Search for forms with a large certified ratio.
    Search(SearchArgs),
    /// Classify a candidate sequence.
    Classify(ClassifyArgs),
    /// Dyadic growth probe of a candidate sequence.
    Probe(ProbeArgs),
    /// Envelope table and polynomial-rejection ledger.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Form file (a form record in JSON).
    #[arg(long, conflicts_with_all = ["littlewood", "random"])]
    pub form: Option<PathBuf>,
    /// Use the 2x2 form `[[1, 1], [1, -1]]`.
    #[arg(long)]
    pub littlewood: bool,
    /// Random form of shape `n,N`.
    #[arg(long, value_name = "n,N")]
    pub random: Option<String>,
    #[arg(long, default_value = "real")]
    pub field: ScalarField,
    #[arg(long, default_value = "davie-kaijser")]
    pub sequence: String,
    #[arg(long, value_enum, default_value_t = PolicyChoice::Auto)]
    pub policy: PolicyChoice,
    #[arg(long)]
    pub mesh: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long = "n")]
    pub degree: usize,
    #[arg(long = "N")]
    pub dim: usize,
    #[arg(long, default_value = "real")]
    pub field: ScalarField,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub mesh: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SequenceArgs {
    #[arg(long)]
    pub generator: String,
    /// Comma-separated `key=value` pairs.
    #[arg(long, default_value = "")]
    pub params: String,
    #[arg(long, default_value_t = 1 << 20)]
    pub horizon: u64,
    /// Require every value to be at least 1.
    #[arg(long)]
    pub bh_candidate: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub sequence: SequenceArgs,
    #[arg(long, default_value = "davie-kaijser")]
    pub upper_ref: String,
    #[arg(long, default_value_t = 4)]
    pub windows: u32,
    /// Also write `(n, R_n)` samples (or `ln R_n` in log space) as CSV.
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub sequence: SequenceArgs,
    #[arg(long, default_value_t = 1)]
    pub n0: u64,
    #[arg(long, default_value_t = 10)]
    pub l_max: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,
    #[arg(long, value_enum, default_value_t = FieldChoice::Both)]
    pub field: FieldChoice,
    /// Exponents `q` for the `K_n ~ c n^q` ledger.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-1,0,0.3,0.5,0.526,0.6,1,3"
    )]
    pub q_grid: Vec<f64>,
    /// Real-scalar upper table (`{"name": .., "values": [..]}`).
    #[arg(long)]
    pub table: Option<PathBuf>,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Invariant(_) => EXIT_INVARIANT,
        Error::Io { .. } | Error::CorruptStore { .. } | Error::Json(_) => EXIT_IO,
        _ => EXIT_REFUSAL,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match exit_code(err) {
        EXIT_INVARIANT => "invariant-violation",
        EXIT_IO => "io",
        _ => "refusal",
    }
}

/// Body of a successful command, with the exit code it implies.
struct Produced {
    code: i32,
    result: Value,
    csv: String,
    text: String,
    /// Error discovered after the result was computed, reported alongside it.
    late_error: Option<Error>,
}

impl Produced {
    fn ok(result: Value, csv: String, text: String) -> Self {
        Self {
            code: EXIT_OK,
            result,
            csv,
            text,
            late_error: None,
        }
    }
}

fn header(cli: &Cli) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert(
        "config".into(),
        serde_json::to_value(cli).unwrap_or(Value::Null),
    );
    m.insert(
        "versions".into(),
        json!({ "bhlab": env!("CARGO_PKG_VERSION") }),
    );
    m
}

fn error_value(err: &Error) -> Value {
    json!({ "kind": error_kind(err), "exit_code": exit_code(err), "message": err.to_string() })
}

pub fn run(cli: &Cli) -> Outcome {
    let mut doc = header(cli);
    match dispatch(cli) {
        Ok(p) => {
            doc.insert("result".into(), p.result);
            let mut stderr = String::new();
            let mut code = p.code;
            if let Some(e) = &p.late_error {
                doc.insert("error".into(), error_value(e));
                stderr = format!("error: {e}\n");
                code = code.max(exit_code(e));
            }
            let stdout = match cli.format {
                Format::Json => to_json(&Value::Object(doc)),
                Format::Csv => p.csv,
                Format::Text => p.text,
            };
            Outcome {
                code,
                stdout,
                stderr,
            }
        }
        Err(e) => {
            doc.insert("error".into(), error_value(&e));
            let stdout = match cli.format {
                Format::Json => to_json(&Value::Object(doc)),
                _ => String::new(),
            };
            Outcome {
                code: exit_code(&e),
                stdout,
                stderr: format!("error: {e}\n"),
            }
        }
    }
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Parse and run; usage errors are refusals.
pub fn run_args<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    code: EXIT_REFUSAL,
                    stdout: String::new(),
                    stderr: rendered,
                }
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: rendered,
                    stderr: String::new(),
                }
            }
        }
    }
}

pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let out = run_args(args);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    out.code
}

fn dispatch(cli: &Cli) -> Result<Produced> {
    match &cli.command {
        Command::Constants(a) => constants_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Search(a) => search_cmd(a, cli.store.as_deref()),
        Command::Classify(a) => classify_cmd(a, cli.tol),
        Command::Probe(a) => probe_cmd(a),
        Command::Report(a) => report_cmd(a, cli.store.as_deref(), cli.tol),
    }
}

fn f(x: f64) -> String {
    format!("{x}")
}

fn short(x: f64) -> String {
    if x.is_finite() && x != 0.0 && !(1e-3..1e6).contains(&x.abs()) {
        format!("{x:.6e}")
    } else {
        format!("{x:.6}")
    }
}

/// Serde name of a unit-like enum value, e.g. `branch-i`.
fn tag<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::from("?"),
    }
}

fn limit_text(e: &ExtendedLimitEstimate) -> String {
    let status = match &e.status {
        LimitStatus::Converges { value } if e.extrapolated => {
            format!("converges to {} (extrapolated)", value.0)
        }
        LimitStatus::Converges { value } => format!("converges to {}", value.0),
        LimitStatus::DivergesToInfinity => "diverges to +inf".to_string(),
        LimitStatus::NoExtendedLimit => "no extended limit".to_string(),
    };
    format!("{status}, window [{}, {}]", e.liminf_est.0, e.limsup_est.0)
}

fn constants_cmd(a: &ConstantsArgs) -> Result<Produced> {
    if a.horizon == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    let mut rows = Vec::new();
    let mut csv = String::from("n,bh-original,davie-kaijser,queffelec,real-lower\n");
    let mut text = format!(
        "gamma = {:.15}\nalpha = {:.15}\nbeta  = {:.15}\n\n{:>4} {:>14} {:>14} {:>14} {:>14}\n",
        euler_gamma::<f64>(),
        alpha::<f64>(),
        beta::<f64>(),
        "n",
        "bh-original",
        "davie-kaijser",
        "queffelec",
        "real-lower"
    );
    for n in 1..=a.horizon {
        let vals = [
            upper_bound::<f64>(UpperName::BhOriginal, n)?,
            upper_bound::<f64>(UpperName::DavieKaijser, n)?,
            upper_bound::<f64>(UpperName::Queffelec, n)?,
            real_lower_bound::<f64>(n)?,
        ];
        rows.push(json!({
            "n": n,
            "bh-original": vals[0],
            "davie-kaijser": vals[1],
            "queffelec": vals[2],
            "real-lower": vals[3],
        }));
        let _ = writeln!(
            csv,
            "{n},{},{},{},{}",
            f(vals[0]),
            f(vals[1]),
            f(vals[2]),
            f(vals[3])
        );
        let _ = writeln!(
            text,
            "{n:>4} {:>14.9} {:>14.9} {:>14.9} {:>14.9}",
            vals[0], vals[1], vals[2], vals[3]
        );
    }
    let result = json!({
        "euler_gamma": euler_gamma::<f64>(),
        "alpha": alpha::<f64>(),
        "beta": beta::<f64>(),
        "rows": rows,
    });
    Ok(Produced::ok(result, csv, text))
}

fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidParams(format!("expected `n,N`, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn read_form(path: &Path) -> Result<MultilinearForm<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let record: FormRecord<f64> = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))?;
    MultilinearForm::try_from(record)
}

fn verify_cmd(a: &VerifyArgs) -> Result<Produced> {
    let form = if let Some(path) = &a.form {
        read_form(path)?
    } else if let Some(shape) = &a.random {
        let (n, dim) = parse_shape(shape)?;
        MultilinearForm::random(a.field, n, dim, a.seed)?
    } else if a.littlewood {
        MultilinearForm::littlewood(a.field)
    } else {
        return Err(Error::InvalidParams(
            "one of --form, --littlewood or --random is required".into(),
        ));
    };
    let sequence = ConstantSequence::<f64>::named(&a.sequence)?;
    let policy = match a.policy {
        PolicyChoice::Auto => CertPolicy::Auto,
        PolicyChoice::Exact => CertPolicy::Exact,
        PolicyChoice::Ascent => CertPolicy::Ascent {
            restarts: a.restarts,
            seed: a.seed,
        },
        PolicyChoice::Grid => CertPolicy::Grid {
            mesh: a
                .mesh
                .ok_or_else(|| Error::InvalidParams("--policy grid needs --mesh".into()))?,
        },
    };
    let report = verify_inequality(&form, &sequence, policy, &SupConfig::default())?;
    let csv = format!(
        "sequence,field,n,N,constant,mixed,sup_lower,sup_upper,kind,margin,label\n{},{},{},{},{},{},{},{},{},{},{}\n",
        report.sequence,
        report.field,
        report.degree,
        report.dim,
        f(report.constant),
        f(report.mixed),
        f(report.sup.lower),
        f(report.sup.upper),
        report.sup.kind.as_str(),
        f(report.margin),
        tag(&report.label)
    );
    let text = format!(
        "{} form, n = {}, N = {}\nmixed norm      {:.12}\nsup in          [{:.12}, {:.12}] ({})\n{} constant  {:.12}\nmargin          {:.12}\nlabel           {}\n",
        report.field,
        report.degree,
        report.dim,
        report.mixed,
        report.sup.lower,
        report.sup.upper,
        report.sup.kind.as_str(),
        report.sequence,
        report.constant,
        report.margin,
        tag(&report.label)
    );
    let mut p = Produced::ok(serde_json::to_value(&report)?, csv, text);
    if report.label == VerifyLabel::Violated && sequence.kind == SequenceKind::Upper {
        p.late_error = Some(Error::Invariant(format!(
            "the form violates the `{}` upper bound",
            sequence.name
        )));
    }
    Ok(p)
}

fn search_cmd(a: &SearchArgs, store: Option<&Path>) -> Result<Produced> {
    let config = SearchConfig {
        restarts: a.restarts,
        steps: a.steps,
        seed: a.seed,
        mesh: a.mesh,
        ..SearchConfig::new(a.degree, a.dim, a.field)
    };
    let result = optimize_lower_bound(&config)?;
    let (commit, late_error) = match store {
        Some(path) => match ResultStore::commit(path, &result) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e)),
        },
        None => (None, None),
    };
    let stored = matches!(commit, Some(CommitOutcome::Stored { .. }));
    let csv = format!(
        "field,n,N,certified_lower,mixed,sup_lower,sup_upper,kind,best_restart,stored\n{},{},{},{},{},{},{},{},{},{}\n",
        result.field,
        result.degree,
        result.dim,
        f(result.certified_lower),
        f(result.mixed),
        f(result.sup.lower),
        f(result.sup.upper),
        result.sup.kind.as_str(),
        result.method.best_restart,
        stored
    );
    let mut text = format!(
        "{} n = {}, N = {}: certified ratio >= {:.12} ({}, restart {})\n",
        result.field,
        result.degree,
        result.dim,
        result.certified_lower,
        result.sup.kind.as_str(),
        result.method.best_restart
    );
    if let Some(r) = &result.reference {
        let _ = writeln!(text, "reference {} = {:.12}", r.name, r.value);
    }
    if let Some(c) = &commit {
        let line = match c {
            CommitOutcome::Stored { previous: None } => {
                "stored (first record for this shape)".to_string()
            }
            CommitOutcome::Stored { previous: Some(p) } => format!("stored, improves {p}"),
            CommitOutcome::NotImproved { stored } => format!("not stored, store holds {stored}"),
        };
        let _ = writeln!(text, "store: {line}");
    }
    let value = json!({ "search": result, "commit": commit });
    Ok(Produced {
        code: EXIT_OK,
        result: value,
        csv,
        text,
        late_error,
    })
}

fn sequence_from(a: &SequenceArgs) -> Result<crate::sequences::SequenceSpec> {
    gen(
        &a.generator,
        &parse_params(&a.params)?,
        a.horizon,
        a.bh_candidate,
    )
}

fn classify_cmd(a: &ClassifyArgs, tol: Option<f64>) -> Result<Produced> {
    let seq = sequence_from(&a.sequence)?;
    let reference = ConstantSequence::<f64>::named(&a.upper_ref)?;
    let schedule = Schedule {
        windows: a.windows,
        tol: tol.unwrap_or(Schedule::default().tol),
        ..Schedule::default()
    };
    if !(schedule.tol > 0.0) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    let report = classify(&seq, &reference, &schedule)?;

    let samples = sample_indices(seq.horizon);
    let mut csv = String::from(if seq.log_space {
        "n,log_value\n"
    } else {
        "n,value\n"
    });
    for &n in &samples {
        let v = if seq.log_space {
            seq.log_value(n)
        } else {
            seq.value(n)
        };
        let _ = writeln!(csv, "{n},{}", f(v));
    }
    if let Some(path) = &a.samples {
        std::fs::write(path, &csv).map_err(|e| Error::io(path, e))?;
    }
    let text = format!(
        "{} (horizon {})\nratio R_2n/R_n     {}\ndifference         {}\nwell-behaved       {}\nbranch             {}\nin alpha window    {}\nenvelope vs {}: {}\n{}",
        report.sequence.generator,
        report.sequence.horizon,
        limit_text(&report.um),
        limit_text(&report.dois),
        tag(&report.well_behaved),
        report.dichotomy_branch.as_str(),
        report.ratio_in_alpha_window,
        report.envelope.reference,
        match &report.envelope.first_violation {
            None => "ok".to_string(),
            Some(v) => format!(
                "{} at n = {} (ln R_n = {}, ln upper = {})",
                tag(&v.side),
                v.n,
                v.log_value,
                v.log_upper
            ),
        },
        report.notes.iter().map(|n| format!("note: {n}\n")).collect::<String>()
    );
    Ok(Produced::ok(serde_json::to_value(&report)?, csv, text))
}

/// `1..=min(horizon, 256)` followed by `2^k - 1, 2^k, 2^k + 1` up to the horizon.
fn sample_indices(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=horizon.min(256)).collect();
    let mut p = 512u64;
    while p - 1 <= horizon {
        out.extend([p - 1, p, p + 1].into_iter().filter(|&n| n <= horizon));
        match p.checked_mul(2) {
            Some(q) => p = q,
            None => break,
        }
    }
    out
}

fn probe_cmd(a: &ProbeArgs) -> Result<Produced> {
    let seq = sequence_from(&a.sequence)?;
    let probe = dyadic_probe(&seq, a.n0, a.l_max)?;
    let mut csv = String::from("l,n,log_value,growth,dominates\n");
    let mut text = format!(
        "dyadic probe of {} from n0 = {}\n{:>3} {:>20} {:>14} {:>14}\n",
        seq.generator.id(),
        a.n0,
        "l",
        "n",
        "growth",
        "(4/3)^l"
    );
    for r in &probe.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.l,
            r.n,
            f(r.log_value),
            f(r.growth.0),
            r.dominates
        );
        let _ = writeln!(
            text,
            "{:>3} {:>20} {:>14} {:>14}",
            r.l,
            r.n,
            short(r.growth.0),
            short((4.0f64 / 3.0).powi(r.l as i32))
        );
    }
    let _ = writeln!(text, "growth below (4/3)^l: {}", probe.growth_violation);
    let value = json!({ "sequence": seq.echo(), "probe": probe });
    Ok(Produced::ok(value, csv, text))
}

#[derive(Debug, Clone, Serialize)]
struct Flagged {
    record: usize,
    field: ScalarField,
    degree: usize,
    dim: usize,
    certified_lower: f64,
    upper: f64,
    upper_source: String,
}

fn report_cmd(a: &ReportArgs, store: Option<&Path>, tol: Option<f64>) -> Result<Produced> {
    if a.horizon == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    let tol = tol.unwrap_or(CAP_TOL);
    let mut catalogue = UpperCatalogue::<f64>::default();
    if let Some(path) = &a.table {
        catalogue = catalogue.with(load_real_table(path)?);
    }
    let store = store.map(ResultStore::open).transpose()?;
    let lowers = store.as_ref().map(|s| s as &dyn CertifiedLowers<f64>);

    let mut envelopes: Vec<BoundEnvelope<f64>> = Vec::new();
    for field in a.field.fields() {
        for n in 1..=a.horizon {
            envelopes.push(envelope(n, field, lowers, &catalogue)?);
        }
    }
    let mut flagged = Vec::new();
    if let Some(s) = &store {
        for (i, r) in s.records().iter().enumerate() {
            let e = envelope(r.degree, r.field, None, &catalogue)?;
            if r.certified_lower > e.upper + tol {
                flagged.push(Flagged {
                    record: i,
                    field: r.field,
                    degree: r.degree,
                    dim: r.dim,
                    certified_lower: r.certified_lower,
                    upper: e.upper,
                    upper_source: e.upper_source,
                });
            }
        }
    }
    let ledger: Vec<_> = a
        .q_grid
        .iter()
        .map(|&q| polynomial_rejection(q, 1.0))
        .collect();

    let mut csv = String::from("field,n,lower,lower_source,upper,upper_source,consistent\n");
    let mut text = format!(
        "{:>8} {:>4} {:>16} {:>16}  sources\n",
        "field", "n", "lower", "upper"
    );
    for e in &envelopes {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            e.field,
            e.n,
            f(e.lower),
            e.lower_source,
            f(e.upper),
            e.upper_source,
            e.is_consistent(tol)
        );
        let _ = writeln!(
            text,
            "{:>8} {:>4} {:>16.12} {:>16.12}  {} / {}",
            e.field.as_str(),
            e.n,
            e.lower,
            e.upper,
            e.lower_source,
            e.upper_source
        );
    }
    csv.push_str("\nq,c,ratio_limit,verdict,reason\n");
    text.push_str("\nK_n ~ c n^q ledger\n");
    for v in &ledger {
        let (verdict, reason) = match v.verdict {
            crate::sequences::Verdict::Admissible => ("admissible", String::new()),
            crate::sequences::Verdict::Rejected(r) => (
                "rejected",
                serde_json::to_value(r)?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
            ),
        };
        let _ = writeln!(
            csv,
            "{},{},{},{verdict},{reason}",
            f(v.q),
            f(v.c),
            f(v.ratio_limit)
        );
        let _ = writeln!(
            text,
            "q = {:>8}  2^q = {:.6}  {verdict} {reason}",
            v.q, v.ratio_limit
        );
    }
    for fl in &flagged {
        let _ = writeln!(
            text,
            "FLAG record {}: {} n={} N={} certified {} above {} = {}",
            fl.record, fl.field, fl.degree, fl.dim, fl.certified_lower, fl.upper_source, fl.upper
        );
    }
    let inconsistent: Vec<_> = envelopes
        .iter()
        .filter(|e| !e.is_consistent(tol))
        .map(|e| json!({ "field": e.field, "n": e.n }))
        .collect();
    let result = json!({
        "envelopes": envelopes,
        "inconsistent": inconsistent,
        "flagged_records": flagged,
        "polynomial_ledger": ledger,
    });
    let mut p = Produced::ok(result, csv, text);
    if !flagged.is_empty() || !inconsistent.is_empty() {
        p.late_error = Some(Error::Invariant(format!(
            "{} store record(s) above their envelope, {} inconsistent envelope(s)",
            flagged.len(),
            inconsistent.len()
        )));
    }
    Ok(p)
}
