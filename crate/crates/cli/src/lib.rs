//! Command-line runner. `run` parses arguments, dispatches to a subcommand,
//! writes the report and returns the process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use conic_hypertope::corr::{tau_experiment, triality_projectivity_check, CorrError};
use conic_hypertope::geom::{build_coset_geometry, diagram, maximal_parabolics};
use conic_hypertope::gf::{build_field, Field};
use conic_hypertope::grp::{closure, GroupTag, GrpError, DEFAULT_BUDGET};
use conic_hypertope::perspectivity::{involution_from_center, Involution, Projectivity};
use conic_hypertope::plane::{Plane, Point};
use conic_hypertope::triangles::{
    classify_triangle, construct_nonlinear_pgl, construct_tangent_triangle, enumerate_triples, Mode, PslSummary,
    TriangleError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_UNSUPPORTED_FORMAT: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "conic-hypertope", version, about = "Involution triangles of PGL(2,q) and their coset geometries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Classify one triple of centers given with --points.
    Classify,
    /// Classification table over a set of triples.
    Enumerate,
    /// Like enumerate, but exits 1 if a hypertope verdict disagrees with the
    /// geometric one.
    VerifyMain,
    /// Triangle cut out by the tangents at three conic points.
    Tangent,
    /// PGL(2,q) triangle whose diagram has no label 2.
    NonlinearPgl,
    /// Frobenius action on a tangent tau-triangle (n = 3).
    Triality,
    /// Coset geometry of the triangle given with --points.
    Geometry,
    /// Strong non self-polarity among triples inside PSL(2,q).
    ExperimentPsl,
    /// Tau-triangles and their correlation witnesses (n divisible by 3).
    ExperimentTau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    OrbitReps,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
    Dot,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Tsv => "tsv",
            Format::Dot => "dot",
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunConfig {
    /// Field characteristic (odd prime).
    #[arg(long, global = true)]
    pub p: Option<u32>,
    /// Extension degree.
    #[arg(long, global = true, default_value_t = 1)]
    pub n: u32,
    /// Monic irreducible modulus as comma-separated coefficients c0,...,cn.
    #[arg(long, global = true)]
    pub modulus: Option<String>,
    /// Points as "[a,b,c];[a,b,c];[a,b,c]" using canonical element encodings.
    #[arg(long, global = true)]
    pub points: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Full)]
    pub mode: ModeArg,
    /// Sample size; implies --mode sample.
    #[arg(long, global = true)]
    pub sample: Option<u64>,
    /// Seed for ChaCha8 sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Largest group closure, in elements.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Output file, written atomically; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Verification(String),
    Budget(String),
    UnsupportedFormat(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Verification(_) => EXIT_VERIFICATION,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::UnsupportedFormat(_) => EXIT_UNSUPPORTED_FORMAT,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m)
            | CliError::Verification(m)
            | CliError::Budget(m)
            | CliError::UnsupportedFormat(m)
            | CliError::Io(m) => m,
        }
    }
}

fn budget_error(e: &GrpError) -> CliError {
    CliError::Budget(e.to_string())
}

impl From<TriangleError> for CliError {
    fn from(e: TriangleError) -> CliError {
        match e {
            TriangleError::Group(g) => budget_error(&g),
            other => CliError::Verification(other.to_string()),
        }
    }
}

impl From<CorrError> for CliError {
    fn from(e: CorrError) -> CliError {
        match e {
            CorrError::Group(g) | CorrError::Triangle(TriangleError::Group(g)) => budget_error(&g),
            CorrError::InvalidPower { .. } => CliError::Parse(e.to_string()),
            other => CliError::Verification(other.to_string()),
        }
    }
}

/// A finished report in every format the command supports, and whether its
/// verification passed.
pub struct Report {
    json: Value,
    tsv: Option<String>,
    dot: Option<String>,
    failure: Option<String>,
}

impl Report {
    fn json<T: Serialize>(value: &T) -> Report {
        Report { json: to_value(value), tsv: None, dot: None, failure: None }
    }

    fn with_tsv(mut self, tsv: String) -> Report {
        self.tsv = Some(tsv);
        self
    }

    fn failing_if(mut self, failed: bool, why: impl Into<String>) -> Report {
        if failed {
            self.failure = Some(why.into());
        }
        self
    }
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("reports serialize")
}

/// Canonical JSON: compact, object keys sorted, trailing newline.
/// serde_json's default map is ordered by key.
pub fn canonical_json(value: &Value) -> String {
    let mut s = serde_json::to_string(value).expect("serializable");
    s.push('\n');
    s
}

pub fn emit_report(report: &Report, format: Format, command: &str) -> Result<String, CliError> {
    let missing = || CliError::UnsupportedFormat(format!("{command} does not support --format {}", format.name()));
    match format {
        Format::Json => Ok(canonical_json(&report.json)),
        Format::Tsv => report.tsv.clone().ok_or_else(missing),
        Format::Dot => report.dot.clone().ok_or_else(missing),
    }
}

/// Writes to a temporary file in the target directory, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn field_from(config: &RunConfig) -> Result<Field, CliError> {
    let p = config.p.ok_or_else(|| CliError::Parse("--p is required".into()))?;
    let modulus = match &config.modulus {
        Some(s) => Some(
            s.split(',')
                .map(|c| c.trim().parse::<u32>())
                .collect::<Result<Vec<u32>, _>>()
                .map_err(|_| CliError::Parse(format!("bad modulus {s:?}")))?,
        ),
        None => None,
    };
    build_field(p, config.n, modulus.as_deref()).map_err(|e| CliError::Parse(e.to_string()))
}

fn parse_points(plane: &Plane, config: &RunConfig) -> Result<Option<[Point; 3]>, CliError> {
    let Some(s) = &config.points else { return Ok(None) };
    let parts: Vec<&str> = s.split(';').map(str::trim).filter(|x| !x.is_empty()).collect();
    if parts.len() != 3 {
        return Err(CliError::Parse(format!("expected three points separated by ';', got {}", parts.len())));
    }
    let mut out = Vec::with_capacity(3);
    for part in parts {
        out.push(plane.parse_point(part).map_err(|e| CliError::Parse(format!("{part}: {e}")))?);
    }
    Ok(Some([out[0], out[1], out[2]]))
}

fn require_points(plane: &Plane, config: &RunConfig) -> Result<[Point; 3], CliError> {
    parse_points(plane, config)?.ok_or_else(|| CliError::Parse("--points is required".into()))
}

fn mode_from(config: &RunConfig) -> Result<Mode, CliError> {
    match (config.mode, config.sample) {
        (ModeArg::Full, None) => Ok(Mode::Full),
        (ModeArg::OrbitReps, None) => Ok(Mode::OrbitReps),
        (ModeArg::Sample | ModeArg::Full, Some(k)) => Ok(Mode::Sample(k)),
        (ModeArg::Sample, None) => Err(CliError::Parse("--mode sample needs --sample N".into())),
        (ModeArg::OrbitReps, Some(_)) => Err(CliError::Parse("--sample conflicts with --mode orbit-reps".into())),
    }
}

fn classify(plane: &Plane, config: &RunConfig) -> Result<Report, CliError> {
    let [p, q, r] = require_points(plane, config)?;
    match classify_triangle(plane, &p, &q, &r, config.budget) {
        Ok(rec) => {
            let mut v = to_value(&rec);
            v["verdict"] = json!(rec.class.name());
            Ok(Report { json: v, tsv: None, dot: None, failure: None })
        }
        // Degenerate input is a classification outcome, not a failure.
        Err(TriangleError::DegenerateInput(reason)) => Ok(Report::json(&json!({
            "verdict": "DegenerateInput",
            "reason": reason,
            "points": [p, q, r],
        }))),
        Err(e) => Err(e.into()),
    }
}

fn sweep(plane: &Plane, config: &RunConfig, verify: bool) -> Result<Report, CliError> {
    let table = enumerate_triples(plane, mode_from(config)?, config.seed, config.budget)?;
    let mut v = to_value(&table);
    let failed = verify && table.violations > 0;
    if verify {
        v["holds"] = json!(table.violations == 0);
    }
    Ok(Report { json: v, tsv: Some(table.to_tsv()), dot: None, failure: None }
        .failing_if(failed, format!("{} violations", table.violations)))
}

fn tangent(plane: &Plane, config: &RunConfig) -> Result<Report, CliError> {
    let [a, b, c] = match parse_points(plane, config)? {
        Some(pts) => pts,
        None => {
            let c = plane.conic_points();
            [c[0], c[1], c[2]]
        }
    };
    let rec = match construct_tangent_triangle(plane, &a, &b, &c, config.budget) {
        Err(e @ (TriangleError::PointsNotOnConic(_) | TriangleError::CoincidentConicPoints)) => {
            return Err(CliError::Parse(e.to_string()))
        }
        other => other?,
    };
    let p = plane.field().p();
    let tag = if p % 4 == 3 { GroupTag::PGL } else { GroupTag::PSL };
    let expected = if p % 4 == 3 { format!("PGL(2,{p})") } else { format!("PSL(2,{p})") };
    let ok = rec.group_id.tag == tag && rec.group_id.q0 == Some(p);
    let report = json!({
        "conic_points": [a, b, c],
        "triangle": to_value(&rec),
        "group": rec.group_id,
        "expected": expected,
        "verified": ok,
    });
    Ok(Report::json(&report).failing_if(!ok, format!("generated {}, expected {expected}", rec.group_id.label())))
}

fn nonlinear(plane: &Plane, config: &RunConfig) -> Result<Report, CliError> {
    let rec = construct_nonlinear_pgl(plane, config.budget)?;
    let q = plane.q() as usize;
    let ok = rec.group_id.tag == GroupTag::PGL
        && rec.group_id.order == q * q * q - q
        && rec.hypertope
        && rec.labels.iter().all(|&x| x > 2);
    let mut v = to_value(&rec);
    v["verified"] = json!(ok);
    Ok(Report { json: v, tsv: None, dot: None, failure: None }.failing_if(!ok, "construction did not verify"))
}

fn triality(plane: &Plane, config: &RunConfig) -> Result<Report, CliError> {
    let report = triality_projectivity_check(plane, config.budget)?;
    Ok(Report::json(&report).failing_if(!report.verified, "g does not match the Frobenius action"))
}

fn geometry(plane: &Plane, config: &RunConfig) -> Result<Report, CliError> {
    let pts = require_points(plane, config)?;
    let f = plane.field();
    let mut inv: Vec<Involution> = Vec::new();
    for x in &pts {
        inv.push(involution_from_center(plane, x).map_err(|e| CliError::Parse(format!("{x}: {e}")))?);
    }
    let gens = [&inv[0], &inv[1], &inv[2]];
    let maps: Vec<Projectivity> = inv.iter().map(|a| *a.map()).collect();
    let h = closure(f, &maps, config.budget).map_err(|e| budget_error(&e))?;
    let sub = maximal_parabolics(f, gens);
    let geom = build_coset_geometry(f, &h, [&sub[0], &sub[1], &sub[2]]).expect("parabolics lie in H");
    let report = json!({
        "centers": pts,
        "group_order": h.len(),
        "geometry": to_value(&geom.export()),
        "diagram": to_value(&diagram(f, gens, Some(&geom))),
    });
    Ok(Report { json: report, tsv: None, dot: Some(geom.to_dot()), failure: None })
}

fn experiment_psl(plane: &Plane, config: &RunConfig) -> Result<Report, CliError> {
    let table = enumerate_triples(plane, mode_from(config)?, config.seed, config.budget)?;
    let summary = PslSummary::from_table(&table);
    let report = json!({ "summary": to_value(&summary), "table": to_value(&table) });
    Ok(Report::json(&report).with_tsv(summary.to_tsv()))
}

fn experiment_tau(plane: &Plane, config: &RunConfig) -> Result<Report, CliError> {
    let exp = tau_experiment(plane, config.budget)?;
    Ok(Report::json(&exp).with_tsv(exp.to_tsv()))
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Classify => "classify",
        Command::Enumerate => "enumerate",
        Command::VerifyMain => "verify-main",
        Command::Tangent => "tangent",
        Command::NonlinearPgl => "nonlinear-pgl",
        Command::Triality => "triality",
        Command::Geometry => "geometry",
        Command::ExperimentPsl => "experiment-psl",
        Command::ExperimentTau => "experiment-tau",
    }
}

fn dispatch(command: Command, config: &RunConfig) -> Result<i32, CliError> {
    let plane = Plane::new(field_from(config)?);
    let report = match command {
        Command::Classify => classify(&plane, config)?,
        Command::Enumerate => sweep(&plane, config, false)?,
        Command::VerifyMain => sweep(&plane, config, true)?,
        Command::Tangent => tangent(&plane, config)?,
        Command::NonlinearPgl => nonlinear(&plane, config)?,
        Command::Triality => triality(&plane, config)?,
        Command::Geometry => geometry(&plane, config)?,
        Command::ExperimentPsl => experiment_psl(&plane, config)?,
        Command::ExperimentTau => experiment_tau(&plane, config)?,
    };
    let text = emit_report(&report, config.format, command_name(command))?;
    match &config.out {
        Some(path) => write_atomic(path, &text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    match report.failure {
        Some(why) => {
            eprintln!("verification failed: {why}");
            Ok(EXIT_VERIFICATION)
        }
        None => Ok(EXIT_OK),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    let config = cli.config;
    let result = match config.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command, &config)),
            Err(e) => Err(CliError::Parse(format!("--jobs {j}: {e}"))),
        },
        None => dispatch(cli.command, &config),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
