//! Command-line front end. `run` returns the process exit code:
//! 0 success, 1 a failed check or scan violation, 2 bad input, 3 an
//! unsupported exponent.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::circle::{monotonicity_scan_circle, ucat_circle, CircleError, CircleJson, CirclePL};
use crate::datasets::{self, DatasetError, Report};
use crate::exact::{fmt_q, parse_q, real_to_json, NumError, Q};
use crate::graph::tree_monotonicity_scan;
use crate::pl_line::{DomainKind, Interval, PLFunction, PlError, PlJson};
use crate::scan::{monotonicity_scan_line, updown_scan, ScanReport};
use crate::svg::decomposition_svg;
use crate::sweep::{
    decompose_interval, decompose_line, forced_max_family, is_forced_max, sweep_points, ucat_interval, ucat_line,
    Exponent, ForcedMode, SweepError,
};

#[derive(Debug, Parser)]
#[command(name = "ucat", version, about = "Unimodal category of piecewise-linear functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unimodal category of a line, interval or circle function.
    Ucat(UcatArgs),
    /// Sweep decomposition of a line or interval function.
    Decompose(DecomposeArgs),
    /// Check the bundled datasets.
    Verify(VerifyArgs),
    /// Randomized property scans.
    Scan(ScanArgs),
    /// Variation picture of a line function, without the JSON output.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Input {
    /// JSON file with a `domain` field.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// The same JSON given inline.
    #[arg(long)]
    pub literal: Option<String>,
}

#[derive(Debug, Args)]
pub struct UcatArgs {
    #[command(flatten)]
    pub input: Input,
    /// Exponent: rational, decimal, or `inf`.
    #[arg(long, default_value = "1")]
    pub p: String,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value = "1")]
    pub p: String,
    /// Also write the picture here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value = "1")]
    pub p: String,
    #[arg(long)]
    pub svg: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Which {
    /// One dataset, e.g. `plane_example_2` or `cantor_truncated:4`.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub all: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub which: Which,
    /// Print the report as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanKind {
    Line,
    Circle,
    Tree,
    Updown,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub kind: ScanKind,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Comma-separated exponents; defaults depend on the kind.
    #[arg(long, value_delimiter = ',')]
    pub p_list: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("unsupported exponent: {0}")]
    Exponent(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Exponent(_) => 3,
        }
    }
}

impl From<NumError> for CliError {
    fn from(e: NumError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PlError> for CliError {
    fn from(e: PlError) -> Self {
        match e {
            PlError::IrrationalValues(p) => CliError::Exponent(p),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::UnsupportedExponent(p) => CliError::Exponent(p),
            SweepError::Pl(e) => e.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<CircleError> for CliError {
    fn from(e: CircleError) -> Self {
        match e {
            CircleError::Sweep(e) => e.into(),
            CircleError::Pl(e) => e.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Parses args, runs, prints to `out`, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Ucat(a) => emit(out, &ucat_cmd(&read_input(&a.input)?, &a.p)?),
        Command::Decompose(a) => {
            let (v, svg) = decompose_cmd(&read_input(&a.input)?, &a.p)?;
            if let Some(path) = &a.svg {
                write_file(path, &svg)?;
            }
            emit(out, &v)
        }
        Command::Plot(a) => {
            let (_, svg) = decompose_cmd(&read_input(&a.input)?, &a.p)?;
            write_file(&a.svg, &svg)
        }
        Command::Verify(a) => verify_cmd(&a, out),
        Command::Scan(a) => {
            let r = scan_cmd(&a)?;
            emit(out, &serde_json::to_value(&r).expect("serializable"))?;
            if r.violations > 0 {
                return Err(CliError::Failed(format!("{} violations", r.violations)));
            }
            Ok(())
        }
    }
}

fn emit(out: &mut dyn Write, v: &Value) -> Result<(), CliError> {
    writeln!(out, "{}", serde_json::to_string_pretty(v).expect("serializable")).map_err(|e| CliError::Failed(e.to_string()))
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_input(i: &Input) -> Result<Value, CliError> {
    let text = match (&i.input, &i.literal) {
        (Some(p), _) => std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        (None, Some(s)) => s.clone(),
        (None, None) => return Err(CliError::Input("no input".into())),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("bad JSON: {e}")))
}

enum Exp {
    Finite(Q),
    Inf,
}

fn parse_p(s: &str) -> Result<Exp, CliError> {
    match s.trim() {
        "inf" | "infinity" => Ok(Exp::Inf),
        t => {
            let p = parse_q(t)?;
            if p <= Q::from_integer(0.into()) {
                return Err(CliError::Input(format!("exponent must be positive, got {t}")));
            }
            Ok(Exp::Finite(p))
        }
    }
}

fn finite_p(s: &str) -> Result<Q, CliError> {
    match parse_p(s)? {
        Exp::Finite(p) => Ok(p),
        Exp::Inf => Err(CliError::Exponent("inf".into())),
    }
}

enum Carrier {
    Line(PLFunction),
    Circle(CirclePL),
}

fn carrier(v: &Value) -> Result<Carrier, CliError> {
    let domain = v.get("domain").and_then(Value::as_str).unwrap_or("");
    match domain {
        "line" | "interval" => {
            let j: PlJson = serde_json::from_value(v.clone()).map_err(|e| CliError::Input(e.to_string()))?;
            Ok(Carrier::Line(PLFunction::from_json(&j)?))
        }
        "circle" => {
            let j: CircleJson = serde_json::from_value(v.clone()).map_err(|e| CliError::Input(e.to_string()))?;
            Ok(Carrier::Circle(CirclePL::from_json(&j)?))
        }
        "graph" | "plane" => Err(CliError::Input(format!(
            "no exact ucat algorithm for {domain} functions; use `ucat verify` for the bundled bounds"
        ))),
        other => Err(CliError::Input(format!("unknown domain {other:?}"))),
    }
}

fn interval_json(lo: &Option<Q>, hi: &Option<Q>) -> Value {
    json!([lo.as_ref().map(fmt_q), hi.as_ref().map(fmt_q)])
}

fn ucat_cmd(v: &Value, p: &str) -> Result<Value, CliError> {
    let p = finite_p(p)?;
    match carrier(v)? {
        Carrier::Line(f) => {
            let g = f.power(&p)?;
            if f.domain() == DomainKind::Interval {
                let u = ucat_interval(&g)?;
                return Ok(json!({"ucat": u.n, "last_summand_increasing": u.last_summand_increasing}));
            }
            let n = ucat_line(&f, &Exponent::Finite(p))?;
            let fam = match g.powered_rational() {
                Some(vals) => forced_max_family(&g, &vals, None)?,
                None => forced_max_family(&g, &g.powered_real()?, None)?,
            };
            let mut cert = Vec::new();
            for (lo, hi) in &fam {
                let w = is_forced_max(&g, &Interval::open(lo.clone(), hi.clone()), ForcedMode::Strict)?;
                cert.push(json!({
                    "interval": interval_json(lo, hi),
                    "negative_variation": real_to_json(&w.neg_variation, g.exponent()),
                    "left_value": real_to_json(&w.left_value, g.exponent()),
                }));
            }
            let mut out = json!({"ucat": n, "certificate": cert});
            if let Ok(pts) = sweep_points(&g) {
                out["sweep_points"] = json!(pts.iter().map(fmt_q).collect::<Vec<_>>());
            }
            Ok(out)
        }
        Carrier::Circle(f) => {
            let u = ucat_circle(&f, &p)?;
            let mut out = json!({"ucat": u.ucat});
            if let Some((a, m)) = u.slice {
                out["certificate"] = json!({"a": fmt_q(&a), "m_a_plus": m});
            }
            Ok(out)
        }
    }
}

fn decompose_cmd(v: &Value, p: &str) -> Result<(Value, String), CliError> {
    let p = finite_p(p)?;
    let f = match carrier(v)? {
        Carrier::Line(f) => f.power(&p)?,
        Carrier::Circle(_) => return Err(CliError::Input("decompose takes line or interval functions".into())),
    };
    let d = match f.domain() {
        DomainKind::Line => decompose_line(&f)?,
        DomainKind::Interval => decompose_interval(&f)?,
    };
    let svg = decomposition_svg(&f, &d)?;
    let mut out = json!({
        "rule": d.rule,
        "summands": d.summands.iter().map(|u| u.to_json()).collect::<Vec<_>>(),
    });
    if !p.is_one() {
        out["exponent"] = json!(fmt_q(&p));
    }
    Ok((out, svg))
}

fn verify_cmd(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let report = match &a.which.dataset {
        Some(name) => Report::new(vec![datasets::verify(name)?]),
        None => datasets::verify_all(),
    };
    if a.json {
        emit(out, &serde_json::to_value(&report).expect("serializable"))?;
    } else {
        writeln!(out, "{report}").map_err(|e| CliError::Failed(e.to_string()))?;
    }
    if report.ok {
        Ok(())
    } else {
        Err(CliError::Failed("some machine-checkable claims failed".into()))
    }
}

fn default_p_list(kind: ScanKind) -> &'static [&'static str] {
    match kind {
        ScanKind::Line | ScanKind::Circle => &["3/2", "2", "3"],
        ScanKind::Tree => &["1", "2", "3"],
        ScanKind::Updown => &["1/3", "1/2", "9/10"],
    }
}

pub fn scan_cmd(a: &ScanArgs) -> Result<ScanReport, CliError> {
    let raw: Vec<String> = if a.p_list.is_empty() {
        default_p_list(a.kind).iter().map(|s| s.to_string()).collect()
    } else {
        a.p_list.clone()
    };
    let ps: Vec<Q> = raw.iter().map(|s| finite_p(s)).collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let n = a.trials as usize;
    let fail = |e: String| CliError::Failed(e);
    match a.kind {
        ScanKind::Line => {
            // ucat(f) itself is always part of the comparison
            let mut ps = ps;
            if !ps.iter().any(|p| p.is_one()) {
                ps.push(Q::one());
            }
            Ok(monotonicity_scan_line(&mut rng, n, &ps)?)
        }
        ScanKind::Circle => {
            let mut ps = ps;
            if !ps.iter().any(|p| p.is_one()) {
                ps.push(Q::one());
            }
            Ok(monotonicity_scan_circle(&mut rng, n, &ps)?)
        }
        ScanKind::Tree => tree_monotonicity_scan(&mut rng, n, &ps).map_err(|e| fail(e.to_string())),
        ScanKind::Updown => updown_scan(&mut rng, n, &ps).map_err(|e| fail(e.to_string())),
    }
}
