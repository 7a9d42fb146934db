//! Bundled example functions, their claimed decompositions, and a
//! verification report over all of them.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::{decompose_circle_two, is_unimodal_circle, m_a_plus, sums_to_circle, ucat_circle, CircleError, CirclePL};
use crate::exact::{fmt_q, parse_q, q, qi, NumError, Q};
use crate::graph::{
    certified_lower_bound, graph_from_json, is_unimodal_graph, values_from_json, verify_combination, GeometricGraph,
    GraphError, GraphPL, UnimodalMode, VertexJson,
};
use crate::pl_line::{DomainKind, Interval, PLFunction, PlError, PlJson, VariationKind};
use crate::plane::{
    is_unimodal_plane, make_plane_pl, point_probe, split_faces, superlevel_stats, verify_combination_plane, Mesh,
    PlaneError, PlanePL, PlaneVertexJson, Point,
};
use crate::sweep::{decompose_line, sweep_points, ucat_line, Exponent, Rule, SweepError};

macro_rules! data_file {
    ($name:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/", $name))
    };
}

/// File name and contents of every bundled data file.
pub const FILES: &[(&str, &str)] = &[
    ("cantor_depth2.json", data_file!("cantor_depth2.json")),
    ("circle_8pt.json", data_file!("circle_8pt.json")),
    ("graph_example_1.json", data_file!("graph_example_1.json")),
    ("graph_example_1_variant.json", data_file!("graph_example_1_variant.json")),
    ("graph_example_2.json", data_file!("graph_example_2.json")),
    ("plane_example_1.json", data_file!("plane_example_1.json")),
    ("plane_example_2.json", data_file!("plane_example_2.json")),
];

pub const NAMES: &[&str] = &[
    "cantor_truncated",
    "circle_8pt",
    "graph_example_1",
    "graph_example_1_variant",
    "graph_example_2",
    "plane_example_1",
    "plane_example_2",
];

/// Depths checked when `cantor_truncated` is verified without a depth.
pub const CANTOR_DEPTHS: std::ops::RangeInclusive<u32> = 1..=6;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("unknown dataset {0}")]
    UnknownDataset(String),
    #[error("malformed data file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error(transparent)]
    Pl(#[from] PlError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Plane(#[from] PlaneError),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// Taken from the source of the example.
    Stated,
    /// Built here where the source leaves a gap.
    Constructed,
}

// ---- file formats ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "lowercase")]
pub enum DatasetFile {
    Circle(CircleFile),
    Graph(GraphFile),
    Plane(PlaneFile),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleFile {
    pub name: String,
    pub angles: Vec<String>,
    pub values: Vec<String>,
    pub decompositions: Vec<CircleDecompositionJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleDecompositionJson {
    pub label: String,
    pub origin: Origin,
    pub rule: Rule,
    /// Values at the dataset angles.
    pub summands: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub name: String,
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<[String; 2]>,
    pub values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<String>,
    pub decompositions: Vec<DecompositionJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneFile {
    pub name: String,
    pub vertices: Vec<PlaneVertexJson>,
    pub faces: Vec<Vec<String>>,
    pub values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<String>,
    pub decompositions: Vec<DecompositionJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub label: String,
    pub origin: Origin,
    pub rule: Rule,
    /// Exponent applied to the target before comparing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_exponent: Option<String>,
    /// Graph edges replaced by paths through new, equally spaced points.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subdivide: Vec<SubdivisionJson>,
    /// Plane faces split along these vertex pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagonals: Vec<[String; 2]>,
    pub summands: Vec<SummandJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdivisionJson {
    pub edge: [String; 2],
    pub points: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummandJson {
    /// Missing vertices are 0.
    pub values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<String>,
    /// Weighted rectangle tents added to the plane summand.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bumps: Vec<BumpJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BumpJson {
    /// `x0, y0, x1, y1`.
    pub rect: [String; 4],
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeJson {
    pub label: String,
    pub x: String,
    pub y: String,
    pub base: String,
}

/// Parses and re-serializes a data file the way it is stored.
pub fn reserialize(file: &str, text: &str) -> Result<String, DatasetError> {
    let out = if file.starts_with("cantor") {
        serde_json::to_string_pretty(&serde_json::from_str::<PlJson>(text)?)?
    } else {
        serde_json::to_string_pretty(&serde_json::from_str::<DatasetFile>(text)?)?
    };
    Ok(out + "\n")
}

// ---- built datasets -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Function {
    Line(PLFunction),
    Circle(CirclePL),
    Graph(GraphPL),
    Plane(PlanePL),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub label: String,
    pub origin: Origin,
    pub rule: Rule,
    /// The target on the carrier of the summands.
    pub target: Function,
    pub summands: Vec<Function>,
    /// Plane summands before their rectangle corrections; empty if none.
    pub uncorrected: Vec<Function>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub label: String,
    pub point: Point,
    pub base: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub target: Function,
    pub decompositions: Vec<Decomposition>,
    pub probes: Vec<Probe>,
}

fn file_text(name: &str) -> Option<&'static str> {
    let file = format!("{name}.json");
    FILES.iter().find(|(f, _)| *f == file).map(|(_, t)| *t)
}

fn opt_q(s: &Option<String>) -> Result<Q, NumError> {
    s.as_deref().map_or_else(|| Ok(Q::one()), parse_q)
}

fn parse_all(v: &[String]) -> Result<Vec<Q>, NumError> {
    v.iter().map(|s| parse_q(s)).collect()
}

/// `max(0, 1/2 - d(x, C_d))` for the depth-`d` union of middle-third intervals.
pub fn cantor_truncated(depth: u32) -> PLFunction {
    let mut ivs = vec![(qi(0), qi(1))];
    for _ in 0..depth {
        ivs = ivs
            .into_iter()
            .flat_map(|(a, b)| {
                let t = (&b - &a) / qi(3);
                [(a.clone(), &a + &t), (&b - &t, b)]
            })
            .collect();
    }
    let half = q(1, 2);
    let mut xs = vec![-half.clone()];
    let mut vs = vec![Q::zero()];
    for (i, (a, b)) in ivs.iter().enumerate() {
        if i > 0 {
            let prev = &ivs[i - 1].1;
            xs.push((prev + a) / qi(2));
            vs.push(&half - (a - prev) / qi(2));
        }
        xs.push(a.clone());
        vs.push(half.clone());
        xs.push(b.clone());
        vs.push(half.clone());
    }
    xs.push(q(3, 2));
    vs.push(Q::zero());
    PLFunction::new(xs, vs, DomainKind::Line).expect("valid profile")
}

fn cantor_depth(name: &str) -> Result<Option<u32>, DatasetError> {
    match name.split_once(':') {
        None => Ok(None),
        Some((_, d)) => d.parse().map(Some).map_err(|_| DatasetError::UnknownDataset(name.to_string())),
    }
}

/// Builds a dataset; `cantor_truncated:N` selects a depth (2 by default).
pub fn build(name: &str) -> Result<Dataset, DatasetError> {
    if name == "cantor_truncated" || name.starts_with("cantor_truncated:") {
        let f = match cantor_depth(name)? {
            None | Some(2) => PLFunction::from_json(&serde_json::from_str(data_file!("cantor_depth2.json"))?)?,
            Some(d) => cantor_truncated(d),
        };
        let d = decompose_line(&f)?;
        let dec = Decomposition {
            label: "sweep decomposition".into(),
            origin: Origin::Constructed,
            rule: d.rule,
            target: Function::Line(f.clone()),
            summands: d.summands.into_iter().map(Function::Line).collect(),
            uncorrected: Vec::new(),
        };
        return Ok(Dataset { name: name.to_string(), target: Function::Line(f), decompositions: vec![dec], probes: vec![] });
    }
    if !NAMES.contains(&name) {
        return Err(DatasetError::UnknownDataset(name.to_string()));
    }
    let text = file_text(name).ok_or_else(|| DatasetError::UnknownDataset(name.to_string()))?;
    match serde_json::from_str::<DatasetFile>(text)? {
        DatasetFile::Circle(c) => build_circle(&c),
        DatasetFile::Graph(g) => build_graph(&g),
        DatasetFile::Plane(p) => build_plane(&p),
    }
}

fn build_circle(c: &CircleFile) -> Result<Dataset, DatasetError> {
    let angles = parse_all(&c.angles)?;
    let f = CirclePL::new(angles.clone(), parse_all(&c.values)?)?;
    let mut decs = Vec::new();
    for d in &c.decompositions {
        let summands = d
            .summands
            .iter()
            .map(|v| Ok(Function::Circle(CirclePL::new(angles.clone(), parse_all(v)?)?)))
            .collect::<Result<_, DatasetError>>()?;
        decs.push(Decomposition {
            label: d.label.clone(),
            origin: d.origin,
            rule: d.rule.clone(),
            target: Function::Circle(f.clone()),
            summands,
            uncorrected: Vec::new(),
        });
    }
    Ok(Dataset { name: c.name.clone(), target: Function::Circle(f), decompositions: decs, probes: vec![] })
}

/// Replaces each listed edge by a path through new points spaced evenly
/// between its ends; the target is interpolated there.
fn subdivide(g: &GraphFile, subs: &[SubdivisionJson], target: &BTreeMap<String, Q>) -> Result<(GeometricGraph, BTreeMap<String, Q>), DatasetError> {
    let mut coords: BTreeMap<String, Option<(Q, Q)>> = BTreeMap::new();
    let mut vertices = Vec::new();
    for v in &g.vertices {
        let c = match (&v.x, &v.y) {
            (Some(x), Some(y)) => Some((parse_q(x)?, parse_q(y)?)),
            _ => None,
        };
        coords.insert(v.id.clone(), c.clone());
        vertices.push((v.id.clone(), c));
    }
    let mut values = target.clone();
    let mut edges = Vec::new();
    for [a, b] in &g.edges {
        let sub = subs.iter().find(|s| (&s.edge[0] == a && &s.edge[1] == b) || (&s.edge[0] == b && &s.edge[1] == a));
        let Some(sub) = sub else {
            edges.push((a.clone(), b.clone()));
            continue;
        };
        let (s, e) = (&sub.edge[0], &sub.edge[1]);
        let (fs, fe) = (target.get(s).cloned().unwrap_or_default(), target.get(e).cloned().unwrap_or_default());
        let n = qi(sub.points.len() as i64 + 1);
        let mut prev = s.clone();
        for (k, id) in sub.points.iter().enumerate() {
            let t = qi(k as i64 + 1) / &n;
            let c = match (&coords[s], &coords[e]) {
                (Some(p), Some(r)) => Some((&p.0 + (&r.0 - &p.0) * &t, &p.1 + (&r.1 - &p.1) * &t)),
                _ => None,
            };
            vertices.push((id.clone(), c));
            values.insert(id.clone(), &fs + (&fe - &fs) * &t);
            edges.push((prev, id.clone()));
            prev = id.clone();
        }
        edges.push((prev, e.clone()));
    }
    if let Some(s) = subs.iter().find(|s| !g.edges.iter().any(|[a, b]| s.edge.contains(a) && s.edge.contains(b))) {
        return Err(DatasetError::Invalid(format!("subdivided edge {}-{} is not an edge", s.edge[0], s.edge[1])));
    }
    Ok((GeometricGraph::new(vertices, &edges)?, values))
}

fn build_graph(g: &GraphFile) -> Result<Dataset, DatasetError> {
    let graph = graph_from_json(&g.vertices, &g.edges)?;
    let vals = values_from_json(&g.values)?;
    let f = GraphPL::from_map(graph.clone(), &vals)?.with_exponent(opt_q(&g.exponent)?)?;
    let mut decs = Vec::new();
    for d in &g.decompositions {
        let (carrier, tvals) = if d.subdivide.is_empty() {
            (graph.clone(), vals.clone())
        } else {
            if !f.exponent().is_one() {
                return Err(DatasetError::Invalid("subdivision needs exponent 1".into()));
            }
            subdivide(g, &d.subdivide, &vals)?
        };
        let te = match &d.target_exponent {
            Some(p) => f.exponent() * parse_q(p)?,
            None => f.exponent().clone(),
        };
        let target = GraphPL::from_map(carrier.clone(), &tvals)?.with_exponent(te)?;
        let summands = d
            .summands
            .iter()
            .map(|s| {
                let u = GraphPL::from_map(carrier.clone(), &values_from_json(&s.values)?)?;
                Ok(Function::Graph(u.with_exponent(opt_q(&s.exponent)?)?))
            })
            .collect::<Result<_, DatasetError>>()?;
        decs.push(Decomposition {
            label: d.label.clone(),
            origin: d.origin,
            rule: d.rule.clone(),
            target: Function::Graph(target),
            summands,
            uncorrected: Vec::new(),
        });
    }
    Ok(Dataset { name: g.name.clone(), target: Function::Graph(f), decompositions: decs, probes: vec![] })
}

fn build_plane(p: &PlaneFile) -> Result<Dataset, DatasetError> {
    let mesh = Mesh::from_json(&p.vertices, &p.faces)?;
    let f = make_plane_pl(mesh.vertices.clone(), mesh.faces.clone(), mesh.values(&p.values)?)?
        .with_exponent(opt_q(&p.exponent)?)?;
    let mut decs = Vec::new();
    for d in &p.decompositions {
        let diagonals = d
            .diagonals
            .iter()
            .map(|[a, b]| Ok((mesh.index(a)?, mesh.index(b)?)))
            .collect::<Result<Vec<_>, PlaneError>>()?;
        let faces = split_faces(&mesh.faces, &diagonals).map_err(|(a, b)| {
            DatasetError::Invalid(format!("diagonal {}-{} lies in no face", mesh.vertices[a].0, mesh.vertices[b].0))
        })?;
        let target = match &d.target_exponent {
            Some(e) => f.clone().with_exponent(f.exponent() * parse_q(e)?)?,
            None => f.clone(),
        };
        let mut summands = Vec::new();
        let mut uncorrected = Vec::new();
        for s in &d.summands {
            let e = opt_q(&s.exponent)?;
            let base = make_plane_pl(mesh.vertices.clone(), faces.clone(), mesh.values(&s.values)?)?;
            if s.bumps.is_empty() {
                summands.push(Function::Plane(base.with_exponent(e)?));
                continue;
            }
            let mut bumps = Vec::new();
            for b in &s.bumps {
                let r = parse_all(&b.rect)?;
                bumps.push((parse_q(&b.weight)?, PlanePL::rectangle_bump(&r[0], &r[1], &r[2], &r[3])?));
            }
            let mut terms: Vec<(Q, &PlanePL)> = vec![(Q::one(), &base)];
            terms.extend(bumps.iter().map(|(w, b)| (w.clone(), b)));
            let u = PlanePL::combine(&terms)?;
            summands.push(Function::Plane(u.with_exponent(e.clone())?));
            uncorrected.push(Function::Plane(base.with_exponent(e)?));
        }
        decs.push(Decomposition {
            label: d.label.clone(),
            origin: d.origin,
            rule: d.rule.clone(),
            target: Function::Plane(target),
            summands,
            uncorrected,
        });
    }
    let probes = p
        .probes
        .iter()
        .map(|pr| Ok(Probe { label: pr.label.clone(), point: (parse_q(&pr.x)?, parse_q(&pr.y)?), base: parse_q(&pr.base)? }))
        .collect::<Result<_, NumError>>()?;
    Ok(Dataset { name: p.name.clone(), target: Function::Plane(f), decompositions: decs, probes })
}

// ---- verification ---------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// A negative claim confirmed: the check was expected to fail and did.
    ExpectedFail,
    /// Not machine-checkable here; recorded, never counted as a pass.
    ExternallyProved,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::ExpectedFail => "fail(expected)",
            Status::ExternallyProved => "externally proved",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Claim {
    pub claim: String,
    pub origin: Origin,
    pub status: Status,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetReport {
    pub name: String,
    pub claims: Vec<Claim>,
}

impl DatasetReport {
    pub fn ok(&self) -> bool {
        self.claims.iter().all(|c| c.status != Status::Fail)
    }

    fn push(&mut self, claim: impl Into<String>, origin: Origin, ok: bool, detail: impl Into<String>) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.claims.push(Claim { claim: claim.into(), origin, status, detail: detail.into() });
    }

    /// A claim that a check fails; failing is the confirmation.
    fn push_negative(&mut self, claim: impl Into<String>, origin: Origin, check: bool) {
        let (status, detail) = if check { (Status::Fail, "check unexpectedly holds") } else { (Status::ExpectedFail, "") };
        self.claims.push(Claim { claim: claim.into(), origin, status, detail: detail.into() });
    }

    fn push_external(&mut self, claim: impl Into<String>) {
        self.claims.push(Claim {
            claim: claim.into(),
            origin: Origin::Stated,
            status: Status::ExternallyProved,
            detail: "non-existence argument, not machine-checked".into(),
        });
    }

    fn push_error(&mut self, claim: impl Into<String>, origin: Origin, e: impl fmt::Display) {
        self.push(claim, origin, false, format!("error: {e}"));
    }

    pub fn get(&self, claim: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.claim == claim)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub ok: bool,
    pub datasets: Vec<DatasetReport>,
}

impl Report {
    pub fn new(datasets: Vec<DatasetReport>) -> Self {
        Report { ok: datasets.iter().all(DatasetReport::ok), datasets }
    }

    pub fn dataset(&self, name: &str) -> Option<&DatasetReport> {
        self.datasets.iter().find(|d| d.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.datasets {
            writeln!(f, "{}", d.name)?;
            for c in &d.claims {
                write!(f, "  {}: {} [{}]", c.claim, c.status, if c.origin == Origin::Stated { "stated" } else { "constructed" })?;
                if !c.detail.is_empty() {
                    write!(f, " ({})", c.detail)?;
                }
                writeln!(f)?;
            }
        }
        write!(f, "{}", if self.ok { "all machine-checkable claims pass" } else { "some claims FAIL" })
    }
}

pub fn verify_all() -> Report {
    Report::new(NAMES.iter().map(|n| verify(n).expect("bundled name")).collect())
}

/// Runs every check for one dataset. Only an unknown name is an error;
/// everything else becomes a report entry.
pub fn verify(name: &str) -> Result<DatasetReport, DatasetError> {
    let mut r = DatasetReport { name: name.to_string(), claims: Vec::new() };
    if name == "cantor_truncated" || name.starts_with("cantor_truncated:") {
        let depths: Vec<u32> = match cantor_depth(name)? {
            Some(d) => vec![d],
            None => CANTOR_DEPTHS.collect(),
        };
        for d in depths {
            verify_cantor(&mut r, d);
        }
        return Ok(r);
    }
    let ds = match build(name) {
        Ok(ds) => ds,
        Err(DatasetError::UnknownDataset(n)) => return Err(DatasetError::UnknownDataset(n)),
        Err(e) => {
            r.push_error("constructor validation", Origin::Stated, e);
            return Ok(r);
        }
    };
    r.push("constructor validation", Origin::Stated, true, "");
    let decs = check_decompositions(&mut r, &ds);
    match name {
        "circle_8pt" => verify_circle(&mut r, &ds),
        "graph_example_1" | "graph_example_1_variant" => verify_graph_1(&mut r, &ds, &decs),
        "graph_example_2" => verify_graph_2(&mut r, &ds, &decs),
        "plane_example_1" => verify_plane_1(&mut r, &ds, &decs),
        "plane_example_2" => verify_plane_2(&mut r, &ds, &decs),
        _ => {}
    }
    Ok(r)
}

fn is_unimodal(f: &Function) -> Result<bool, DatasetError> {
    Ok(match f {
        Function::Line(f) => f.is_unimodal(),
        Function::Circle(f) => is_unimodal_circle(f),
        Function::Graph(f) => is_unimodal_graph(f, UnimodalMode::Contractible),
        Function::Plane(f) => is_unimodal_plane(f, UnimodalMode::Contractible)?,
    })
}

fn combination_holds(d: &Decomposition) -> Result<bool, DatasetError> {
    match &d.target {
        Function::Circle(t) => {
            let us: Vec<CirclePL> = d.summands.iter().filter_map(|s| if let Function::Circle(u) = s { Some(u.clone()) } else { None }).collect();
            Ok(d.rule == Rule::Sum && sums_to_circle(&us, t))
        }
        Function::Graph(t) => {
            let us: Vec<GraphPL> = d.summands.iter().filter_map(|s| if let Function::Graph(u) = s { Some(u.clone()) } else { None }).collect();
            Ok(verify_combination(&us, &d.rule, t)?)
        }
        Function::Plane(t) => {
            let us: Vec<PlanePL> = d.summands.iter().filter_map(|s| if let Function::Plane(u) = s { Some(u.clone()) } else { None }).collect();
            Ok(verify_combination_plane(&us, &d.rule, t)?)
        }
        Function::Line(t) => {
            let us: Vec<PLFunction> = d.summands.iter().filter_map(|s| if let Function::Line(u) = s { Some(u.clone()) } else { None }).collect();
            let dec = crate::sweep::UnimodalDecomposition { summands: us, rule: d.rule.clone(), mode_points: None };
            Ok(d.rule == Rule::Sum && dec.sums_to(t)?)
        }
    }
}

/// Upper-bound exponent label of a decomposition: `ucat^p(f) <= n`.
fn bound_label(d: &Decomposition, f_exponent: &Q) -> String {
    let p = match &d.rule {
        Rule::Max => return "ucat^inf(f)".into(),
        Rule::PPower(p) => p.clone(),
        Rule::Sum => {
            let e = match &d.target {
                Function::Graph(g) => g.exponent() / f_exponent,
                Function::Plane(g) => g.exponent() / f_exponent,
                _ => Q::one(),
            };
            fmt_q(&e)
        }
    };
    if p == "1" {
        "ucat(f)".into()
    } else {
        format!("ucat^{p}(f)")
    }
}

fn target_exponent(ds: &Dataset) -> Q {
    match &ds.target {
        Function::Graph(g) => g.exponent().clone(),
        Function::Plane(p) => p.exponent().clone(),
        _ => Q::one(),
    }
}

/// Per decomposition: summands unimodal, identity, and the resulting upper
/// bound. Returns whether each decomposition fully verified.
fn check_decompositions(r: &mut DatasetReport, ds: &Dataset) -> Vec<bool> {
    let fe = target_exponent(ds);
    let mut out = Vec::new();
    for d in &ds.decompositions {
        let uni: Result<Vec<bool>, _> = d.summands.iter().map(is_unimodal).collect();
        let uni_ok = match uni {
            Ok(u) => {
                let bad: Vec<String> = u.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| format!("u{}", i + 1)).collect();
                let ok = bad.is_empty();
                let detail = if ok { format!("{} summands", u.len()) } else { format!("not unimodal: {}", bad.join(", ")) };
                r.push(format!("{}: summands unimodal", d.label), d.origin, ok, detail);
                ok
            }
            Err(e) => {
                r.push_error(format!("{}: summands unimodal", d.label), d.origin, e);
                false
            }
        };
        let comb_ok = match combination_holds(d) {
            Ok(ok) => {
                r.push(format!("{}: identity", d.label), d.origin, ok, "");
                ok
            }
            Err(e) => {
                r.push_error(format!("{}: identity", d.label), d.origin, e);
                false
            }
        };
        for (i, u) in d.uncorrected.iter().enumerate() {
            match is_unimodal(u) {
                Ok(ok) => r.push_negative(format!("{}: v{} (before rectangle corrections) unimodal", d.label, i + 1), d.origin, ok),
                Err(e) => r.push_error(format!("{}: v{} unimodal", d.label, i + 1), d.origin, e),
            }
        }
        let ok = uni_ok && comb_ok;
        r.push(
            format!("{} <= {}", bound_label(d, &fe), d.summands.len()),
            d.origin,
            ok,
            format!("via {}", d.label),
        );
        out.push(ok);
    }
    out
}

fn push_target_not_unimodal(r: &mut DatasetReport, ds: &Dataset) -> bool {
    match is_unimodal(&ds.target) {
        Ok(u) => {
            r.push_negative("f unimodal", Origin::Stated, u);
            !u
        }
        Err(e) => {
            r.push_error("f unimodal", Origin::Stated, e);
            false
        }
    }
}

fn verify_cantor(r: &mut DatasetReport, depth: u32) {
    let f = cantor_truncated(depth);
    let tag = format!("depth {depth}");
    // partial sum 1/6 + 2/18 + ... with `depth` terms
    let partial: Q = (0..depth).map(|k| Q::from_integer(num::BigInt::from(2).pow(k)) / (Q::from_integer(num::BigInt::from(3).pow(k)) * qi(6))).sum();
    match f.variation_base(VariationKind::Negative, &Interval::open(Some(qi(0)), Some(qi(1)))) {
        Ok(v) => r.push(format!("{tag}: V-(f;(0,1)) = partial sum"), Origin::Stated, v == partial, format!("{} = {}", fmt_q(&v), fmt_q(&partial))),
        Err(e) => r.push_error(format!("{tag}: V-(f;(0,1)) = partial sum"), Origin::Stated, e),
    }
    match ucat_line(&f, &Exponent::one()) {
        Ok(n) => r.push(format!("{tag}: ucat(f) = 2"), Origin::Stated, n == 2, format!("{n}")),
        Err(e) => r.push_error(format!("{tag}: ucat(f) = 2"), Origin::Stated, e),
    }
    match sweep_points(&f) {
        Ok(pts) => {
            let third = Q::one() / Q::from_integer(num::BigInt::from(3).pow(depth));
            let expect = vec![third.clone(), q(3, 2) - &partial];
            let shown = pts.iter().map(fmt_q).collect::<Vec<_>>().join(", ");
            r.push(format!("{tag}: sweep points = [3^-d, 3/2 - V-(f;(0,1))]"), Origin::Constructed, pts == expect, format!("[{shown}]"));
            // depth-infinity points 0 and 1, approached at the rates below
            let gap_ok = pts.len() == 2 && pts[0] == third && &pts[1] - qi(1) == q(1, 2) - &partial;
            r.push(format!("{tag}: sweep points tend to [0, 1]"), Origin::Stated, gap_ok, "offsets 3^-d and (1/2)(2/3)^d");
        }
        Err(e) => r.push_error(format!("{tag}: sweep points"), Origin::Constructed, e),
    }
    if depth == 2 {
        let file: Result<PLFunction, DatasetError> = serde_json::from_str::<PlJson>(data_file!("cantor_depth2.json"))
            .map_err(DatasetError::from)
            .and_then(|j| Ok(PLFunction::from_json(&j)?));
        r.push(format!("{tag}: bundled file matches construction"), Origin::Constructed, file.map(|g| g == f).unwrap_or(false), "");
    }
    match decompose_line(&f) {
        Ok(d) => {
            let ok = d.len() == 2 && d.all_unimodal() && d.sums_to(&f).unwrap_or(false);
            r.push(format!("{tag}: sweep decomposition has 2 unimodal summands summing to f"), Origin::Stated, ok, "");
        }
        Err(e) => r.push_error(format!("{tag}: sweep decomposition"), Origin::Stated, e),
    }
}

/// Breakpoints `j/8` and the points `(4j+1)/32`, `(4j+3)/32`.
pub fn circle_probe_angles() -> Vec<Q> {
    let mut v: Vec<Q> = (0..8).map(|j| q(j, 8)).collect();
    for j in 0..8 {
        v.push(q(4 * j + 1, 32));
        v.push(q(4 * j + 3, 32));
    }
    v.sort();
    v
}

/// `M_a+` for the eight-point example: 2 on `[1/8, 1/4]` and `[5/8, 3/4]`.
pub fn circle_expected_m(a: &Q) -> usize {
    let in_arc = |lo: Q, hi: Q| a >= &lo && a <= &hi;
    if in_arc(q(1, 8), q(1, 4)) || in_arc(q(5, 8), q(3, 4)) {
        2
    } else {
        3
    }
}

fn verify_circle(r: &mut DatasetReport, ds: &Dataset) {
    let Function::Circle(f) = &ds.target else { return };
    push_target_not_unimodal(r, ds);
    match ucat_circle(f, &Q::one()) {
        Ok(u) => r.push("ucat(f) = 2", Origin::Stated, u.ucat == 2, format!("{}", u.ucat)),
        Err(e) => r.push_error("ucat(f) = 2", Origin::Stated, e),
    }
    let mut bad = Vec::new();
    let angles = circle_probe_angles();
    for a in &angles {
        match m_a_plus(f, a) {
            Ok(m) if m == circle_expected_m(a) => {}
            Ok(m) => bad.push(format!("{}: {m}", fmt_q(a))),
            Err(e) => bad.push(format!("{}: {e}", fmt_q(a))),
        }
    }
    let detail = if bad.is_empty() { format!("{} angles", angles.len()) } else { bad.join("; ") };
    r.push("M_a+ = 2 on [a1,a2] and [a5,a6], 3 elsewhere", Origin::Stated, bad.is_empty(), detail);
    match decompose_circle_two(f) {
        Ok(Some((u, v))) => {
            let ok = is_unimodal_circle(&u) && is_unimodal_circle(&v) && sums_to_circle(&[u, v], f);
            r.push("explicit 2-summand decomposition found", Origin::Constructed, ok, "");
        }
        Ok(None) => r.push("explicit 2-summand decomposition found", Origin::Constructed, false, "none"),
        Err(e) => r.push_error("explicit 2-summand decomposition found", Origin::Constructed, e),
    }
}

fn push_pv_bound(r: &mut DatasetReport, label: &str, g: &GraphPL, want: usize) {
    let claim = format!("{label} >= {want} (path-value certificate)");
    match certified_lower_bound(g, want) {
        Ok(n) => r.push(claim, Origin::Constructed, n >= want, format!("certified {}", n.min(want))),
        Err(e) => r.push_error(claim, Origin::Constructed, e),
    }
}

fn verify_graph_1(r: &mut DatasetReport, ds: &Dataset, decs: &[bool]) {
    let Function::Graph(f) = &ds.target else { return };
    push_target_not_unimodal(r, ds);
    push_pv_bound(r, "ucat(f)", f, 2);
    if let Ok(sq) = f.clone().with_exponent(q(1, 2)) {
        push_pv_bound(r, "ucat^1/2(f)", &sq, 2);
    }
    r.push("ucat(f) = 2", Origin::Stated, decs.first() == Some(&true) && certified_lower_bound(f, 2).is_ok_and(|n| n >= 2), "upper bound by decomposition, lower by path values");
    r.push_external("ucat^1/2(f) >= 3");
}

fn verify_graph_2(r: &mut DatasetReport, ds: &Dataset, _decs: &[bool]) {
    let Function::Graph(f) = &ds.target else { return };
    let not_uni = push_target_not_unimodal(r, ds);
    r.push("ucat^inf(f) >= 2", Origin::Stated, not_uni, "f is not unimodal");
    push_pv_bound(r, "ucat(f)", f, 2);
    r.push_external("ucat(f) >= 3");
}

fn plane_counts(r: &mut DatasetReport, f: &PlanePL, v: usize, e: usize, fc: usize) {
    let got = (f.ids().len(), f.side_count(), f.faces().len());
    r.push(
        format!("{v} vertices, {e} edges, {fc} faces"),
        Origin::Stated,
        got == (v, e, fc),
        format!("{} / {} / {}; sides counted after splitting at vertices lying inside them", got.0, got.1, got.2),
    );
}

fn plane_region(r: &mut DatasetReport, f: &PlanePL, holes: i64, area: &Q) {
    match superlevel_stats(f, &Q::one()) {
        Ok(s) => r.push(
            format!("f^-1[1,inf): connected, {holes} holes, area {}", fmt_q(area)),
            Origin::Stated,
            s.components == 1 && s.holes() == holes && &s.area == area,
            format!("{} component(s), {} hole(s), area {}", s.components, s.holes(), fmt_q(&s.area)),
        ),
        Err(e) => r.push_error("f^-1[1,inf)", Origin::Stated, e),
    }
}

fn pt(x: Q, y: Q) -> Point {
    (x, y)
}

fn swap(p: &Point) -> Point {
    (p.1.clone(), p.0.clone())
}

/// Named points of the first plane example; `*` is the reflection `(x, y) -> (y, x)`.
struct PlaneOnePoints {
    a: [Point; 4],
    c: Vec<Point>,
    d: Vec<Point>,
    paths: Vec<Vec<Point>>,
}

fn plane_one_points() -> PlaneOnePoints {
    let a0 = pt(qi(3), qi(1));
    let s = q(4, 5);
    let off = |dx: &Q, dy: &Q| pt(&a0.0 + dx, &a0.1 + dy);
    let a = [off(&-&s, &-&s), off(&s, &-&s), off(&s, &s), off(&-&s, &s)];
    let a5 = off(&-&s, &Q::zero());
    let mut c = vec![
        pt(qi(2), qi(1)),
        pt(q(3, 2), q(1, 2)),
        pt(q(3, 2), q(-1, 2)),
        pt(qi(2), qi(-1)),
        pt(qi(1), qi(-2)),
        pt(q(1, 2), q(-3, 2)),
        pt(q(-3, 2), q(-3, 2)),
    ];
    for k in (0..6).rev() {
        c.push(swap(&c[k]));
    }
    let d = vec![pt(qi(2), qi(-3)), pt(q(5, 2), q(-7, 2)), pt(q(7, 2), q(-7, 2)), pt(q(7, 2), q(-5, 2)), pt(qi(3), qi(-2))];
    let (z1, z2) = (pt(qi(3), qi(-1)), pt(qi(1), qi(-3)));
    // the corner points sit where the two paths turn: c5 z2 d1 and c4 z1 d5
    let z1_path = vec![c[4].clone(), z2.clone(), d[0].clone()];
    let z2_path = vec![c[3].clone(), z1.clone(), d[4].clone()];
    let paths = vec![
        vec![a5.clone(), c[0].clone()],
        vec![swap(&a5), c[12].clone()],
        z1_path.clone(),
        z2_path.clone(),
        z1_path.iter().map(swap).collect(),
        z2_path.iter().map(swap).collect(),
    ];
    PlaneOnePoints { a, c, d, paths }
}

fn shoelace(ps: &[Point]) -> Q {
    let n = ps.len();
    let s: Q = (0..n).map(|i| &ps[i].0 * &ps[(i + 1) % n].1 - &ps[(i + 1) % n].0 * &ps[i].1).sum();
    s.abs() / qi(2)
}

fn closed(ps: &[Point]) -> Vec<Point> {
    let mut v = ps.to_vec();
    v.push(ps[0].clone());
    v
}

/// Midpoints of every other segment of the boundary of the level-1 region.
pub fn plane_one_boundary_samples() -> Vec<Point> {
    let p = plane_one_points();
    let b: Vec<Point> = p.a.iter().map(swap).collect();
    let e: Vec<Point> = p.d.iter().map(swap).collect();
    let mut chains = vec![closed(&p.a), closed(&b), closed(&p.c), closed(&p.d), closed(&e)];
    chains.extend(p.paths.iter().cloned());
    let segs: Vec<(Point, Point)> = chains.iter().flat_map(|c| c.windows(2).map(|w| (w[0].clone(), w[1].clone()))).collect();
    segs.iter()
        .step_by(2)
        .take(20)
        .map(|(x, y)| ((&x.0 + &y.0) / qi(2), (&x.1 + &y.1) / qi(2)))
        .collect()
}

/// Lattice points `(-5 + i + 1/3, -5 + j + 1/3)`, `0 <= i, j <= 10`, outside the two peak squares,
/// every other one, 50 in all.
pub fn plane_one_outer_samples() -> Vec<Point> {
    let p = plane_one_points();
    let inside = |sq: &[Point; 4], x: &Point| x.0 >= sq[0].0 && x.0 <= sq[2].0 && x.1 >= sq[0].1 && x.1 <= sq[2].1;
    let b = [swap(&p.a[0]), swap(&p.a[3]), swap(&p.a[2]), swap(&p.a[1])];
    (0..11)
        .flat_map(|i| (0..11).map(move |j| pt(qi(i - 5) + q(1, 3), qi(j - 5) + q(1, 3))))
        .filter(|x| !inside(&p.a, x) && !inside(&b, x))
        .step_by(2)
        .take(50)
        .collect()
}

fn verify_plane_1(r: &mut DatasetReport, ds: &Dataset, _decs: &[bool]) {
    let Function::Plane(f) = &ds.target else { return };
    plane_counts(r, f, 44, 95, 52);
    let not_uni = push_target_not_unimodal(r, ds);
    r.push("ucat^2(f) >= 2", Origin::Stated, not_uni, "F = f^2 is not unimodal");
    let p = plane_one_points();
    let area = qi(2) * shoelace(&p.a) + shoelace(&p.c) + qi(2) * shoelace(&p.d);
    plane_region(r, f, 2, &area);
    for pr in &ds.probes {
        let claim = format!("f({}) = {}^({})", pr.label, fmt_q(&pr.base), fmt_q(f.exponent()));
        match point_probe(f, &[(pr.label.clone(), pr.point.clone())]) {
            Ok(v) => r.push(claim, Origin::Stated, v[0].base == pr.base, fmt_q(&v[0].base)),
            Err(e) => r.push_error(claim, Origin::Stated, e),
        }
    }
    let eval = |x: &Point| f.eval_base(x).unwrap_or_else(Q::zero);
    let bd = plane_one_boundary_samples();
    let bad: Vec<String> = bd.iter().filter(|x| eval(x) != Q::one()).map(|x| format!("({}, {})", fmt_q(&x.0), fmt_q(&x.1))).collect();
    r.push(format!("f = 1 at {} boundary points of f^-1[1,inf)", bd.len()), Origin::Stated, bad.is_empty() && bd.len() == 20, bad.join(" "));
    let out = plane_one_outer_samples();
    let bad: Vec<String> = out.iter().filter(|x| eval(x) > qi(2)).map(|x| format!("({}, {})", fmt_q(&x.0), fmt_q(&x.1))).collect();
    r.push(format!("f <= sqrt 2 at {} points outside the peak squares", out.len()), Origin::Stated, bad.is_empty() && out.len() == 50, bad.join(" "));
    r.push_external("ucat(f) >= 3");
}

fn verify_plane_2(r: &mut DatasetReport, ds: &Dataset, _decs: &[bool]) {
    let Function::Plane(f) = &ds.target else { return };
    plane_counts(r, f, 47, 94, 46);
    let not_uni = push_target_not_unimodal(r, ds);
    r.push("ucat^inf(f) >= 2", Origin::Stated, not_uni, "f is not unimodal");
    plane_region(r, f, 5, &q(32, 9));
    let eval = |x: (i64, i64)| f.eval_base(&(qi(x.0), qi(x.1))).unwrap_or_else(Q::zero);
    r.push("f(d0) = f(e0) = 3", Origin::Stated, eval((-4, 0)) == qi(3) && eval((4, 0)) == qi(3), "");
    r.push_external("ucat(f) >= 3");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_round_trip() {
        for (name, text) in FILES {
            assert_eq!(&reserialize(name, text).unwrap(), text, "{name}");
        }
    }

    #[test]
    fn targets() {
        let Function::Plane(f) = build("plane_example_2").unwrap().target else { panic!() };
        let threes: Vec<&str> = f.ids().iter().zip(f.values()).filter(|(_, v)| **v == qi(3)).map(|(i, _)| i.as_str()).collect();
        assert_eq!(threes, vec!["x9", "x45"]);
        let ones = f.values().iter().filter(|v| v.is_one()).count();
        assert_eq!(ones, 15);
        let Function::Graph(g) = build("graph_example_1").unwrap().target else { panic!() };
        assert_eq!(g.value("a1").unwrap(), &qi(5));
        assert_eq!(g.value("q").unwrap(), &qi(2));
        assert_eq!(g.value("d2").unwrap(), &qi(1));
        let Function::Circle(c) = build("circle_8pt").unwrap().target else { panic!() };
        assert_eq!(c.values(), &[qi(4), qi(3), q(7, 2), qi(3), qi(4), qi(1), qi(3), qi(1)]);
        assert!(matches!(build("nope"), Err(DatasetError::UnknownDataset(_))));
        assert!(matches!(build("cantor_truncated:x"), Err(DatasetError::UnknownDataset(_))));
    }

    #[test]
    fn cantor_profiles() {
        let f = cantor_truncated(2);
        assert_eq!(f.len(), 13);
        assert_eq!(build("cantor_truncated").unwrap().target, Function::Line(f));
        assert_eq!(cantor_truncated(0).breakpoints(), &[q(-1, 2), qi(0), qi(1), q(3, 2)]);
    }

    #[test]
    fn samples() {
        assert_eq!(plane_one_boundary_samples().len(), 20);
        assert_eq!(plane_one_outer_samples().len(), 50);
        assert_eq!(circle_probe_angles().len(), 24);
    }

    #[test]
    fn small_reports() {
        for name in ["circle_8pt", "graph_example_1", "graph_example_1_variant", "graph_example_2", "cantor_truncated:3"] {
            let r = verify(name).unwrap();
            assert!(r.ok(), "{}", Report::new(vec![r.clone()]));
        }
        let r = verify("graph_example_2").unwrap();
        assert_eq!(r.get("f unimodal").unwrap().status, Status::ExpectedFail);
        assert_eq!(r.get("ucat(f) >= 3").unwrap().status, Status::ExternallyProved);
    }
}
