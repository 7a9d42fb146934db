//! PL functions on geometric graphs, path values and Morse-Smale trees.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use num::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{fmt_q, parse_q, q, Exact, NumError, Real, Q};
use crate::scan::ScanReport;
use crate::sweep::Rule;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop at {0}")]
    SelfLoop(String),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(String, String),
    #[error("duplicate vertex {0}")]
    DuplicateVertex(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("missing value for vertex {0}")]
    MissingValue(String),
    #[error("negative value at vertex {0}")]
    NegativeValue(String),
    #[error("functions live on different graphs")]
    GraphMismatch,
    #[error("rule {0:?} is not supported on graphs")]
    UnsupportedRule(Rule),
    #[error("no path between the endpoints")]
    NoPath,
    #[error("not a tree")]
    NotATree,
    #[error("saddle weight must be below both adjacent maxima (edge {0})")]
    BadSaddle(usize),
    #[error("{0} maxima exceed the exhaustive search cap of {MAX_TREE_MAXIMA}")]
    TooLarge(usize),
    #[error("exponent must be positive")]
    NonpositiveExponent,
    #[error(transparent)]
    Num(#[from] NumError),
}

pub const MAX_TREE_MAXIMA: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeometricGraph {
    ids: Vec<String>,
    coords: Vec<Option<(Q, Q)>>,
    edges: Vec<(usize, usize)>,
    index: HashMap<String, usize>,
}

impl GeometricGraph {
    pub fn new(vertices: Vec<(String, Option<(Q, Q)>)>, edges: &[(String, String)]) -> Result<Self, GraphError> {
        let mut index = HashMap::new();
        let mut ids = Vec::new();
        let mut coords = Vec::new();
        for (i, (id, c)) in vertices.into_iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(id));
            }
            ids.push(id);
            coords.push(c);
        }
        let mut seen = HashSet::new();
        let mut es = Vec::new();
        for (a, b) in edges {
            let u = *index.get(a).ok_or_else(|| GraphError::UnknownVertex(a.clone()))?;
            let v = *index.get(b).ok_or_else(|| GraphError::UnknownVertex(b.clone()))?;
            if u == v {
                return Err(GraphError::SelfLoop(a.clone()));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge(a.clone(), b.clone()));
            }
            es.push((u, v));
        }
        Ok(GeometricGraph { ids, coords, edges: es, index })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn coords(&self) -> &[Option<(Q, Q)>] {
        &self.coords
    }

    pub fn vertex(&self, id: &str) -> Result<usize, GraphError> {
        self.index.get(id).copied().ok_or_else(|| GraphError::UnknownVertex(id.to_string()))
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.ids.len()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPL {
    graph: GeometricGraph,
    values: Vec<Q>,
    exponent: Q,
}

impl GraphPL {
    pub fn new(graph: GeometricGraph, values: Vec<Q>) -> Result<Self, GraphError> {
        if values.len() != graph.vertex_count() {
            let missing = graph.ids.get(values.len()).cloned().unwrap_or_default();
            return Err(GraphError::MissingValue(missing));
        }
        if let Some(i) = values.iter().position(|v| v.is_negative()) {
            return Err(GraphError::NegativeValue(graph.ids[i].clone()));
        }
        Ok(GraphPL { graph, values, exponent: Q::one() })
    }

    /// Values by vertex id; vertices not listed get 0.
    pub fn from_map(graph: GeometricGraph, values: &BTreeMap<String, Q>) -> Result<Self, GraphError> {
        for k in values.keys() {
            graph.vertex(k)?;
        }
        let vals = graph.ids.iter().map(|id| values.get(id).cloned().unwrap_or_else(Q::zero)).collect();
        GraphPL::new(graph, vals)
    }

    pub fn with_exponent(mut self, p: Q) -> Result<Self, GraphError> {
        if !p.is_positive() {
            return Err(GraphError::NonpositiveExponent);
        }
        self.exponent = p;
        Ok(self)
    }

    pub fn graph(&self) -> &GeometricGraph {
        &self.graph
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn exponent(&self) -> &Q {
        &self.exponent
    }

    pub fn value(&self, id: &str) -> Result<&Q, GraphError> {
        Ok(&self.values[self.graph.vertex(id)?])
    }

    pub fn scaled(&self, k: &Q) -> Self {
        let mut g = self.clone();
        g.values = self.values.iter().map(|v| v * k).collect();
        g
    }

    pub fn powered(&self) -> Result<Vec<Real>, GraphError> {
        Ok(self.values.iter().map(|v| Real::pow_q(v, &self.exponent)).collect::<Result<_, _>>()?)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            domain: "graph".into(),
            vertices: self
                .graph
                .ids
                .iter()
                .zip(&self.graph.coords)
                .map(|(id, c)| VertexJson {
                    id: id.clone(),
                    x: c.as_ref().map(|c| fmt_q(&c.0)),
                    y: c.as_ref().map(|c| fmt_q(&c.1)),
                })
                .collect(),
            edges: self.graph.edges.iter().map(|&(u, v)| [self.graph.ids[u].clone(), self.graph.ids[v].clone()]).collect(),
            values: self.graph.ids.iter().cloned().zip(self.values.iter().map(fmt_q)).collect(),
            exponent: if self.exponent.is_one() { None } else { Some(fmt_q(&self.exponent)) },
        }
    }

    pub fn from_json(j: &GraphJson) -> Result<Self, GraphError> {
        let g = graph_from_json(&j.vertices, &j.edges)?;
        let vals = values_from_json(&j.values)?;
        let f = GraphPL::from_map(g, &vals)?;
        match &j.exponent {
            Some(p) => f.with_exponent(parse_q(p)?),
            None => Ok(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexJson {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub domain: String,
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<[String; 2]>,
    pub values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<String>,
}

pub fn graph_from_json(vertices: &[VertexJson], edges: &[[String; 2]]) -> Result<GeometricGraph, GraphError> {
    let mut vs = Vec::new();
    for v in vertices {
        let c = match (&v.x, &v.y) {
            (Some(x), Some(y)) => Some((parse_q(x)?, parse_q(y)?)),
            _ => None,
        };
        vs.push((v.id.clone(), c));
    }
    let es: Vec<(String, String)> = edges.iter().map(|[a, b]| (a.clone(), b.clone())).collect();
    GeometricGraph::new(vs, &es)
}

pub fn values_from_json(m: &BTreeMap<String, String>) -> Result<BTreeMap<String, Q>, GraphError> {
    m.iter().map(|(k, v)| Ok((k.clone(), parse_q(v)?))).collect()
}

/// Part of an edge kept in a superlevel set, as a parameter range on the
/// edge oriented from its first to its second endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub edge: usize,
    pub t0: Q,
    pub t1: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubLevelGraph {
    pub vertices: Vec<usize>,
    pub arcs: Vec<Arc>,
}

/// `{x : f(x) >= c}` on base values.
pub fn superlevel(gf: &GraphPL, c: &Q) -> SubLevelGraph {
    let vals = &gf.values;
    let vertices = (0..vals.len()).filter(|&i| &vals[i] >= c).collect();
    let mut arcs = Vec::new();
    for (e, &(u, v)) in gf.graph.edges.iter().enumerate() {
        let (a, b) = (&vals[u], &vals[v]);
        let cross = || (a - c) / (a - b);
        let arc = match (a >= c, b >= c) {
            (true, true) => Some((Q::zero(), Q::one())),
            (true, false) => Some((Q::zero(), cross())),
            (false, true) => Some((cross(), Q::one())),
            (false, false) => None,
        };
        if let Some((t0, t1)) = arc {
            arcs.push(Arc { edge: e, t0, t1 });
        }
    }
    SubLevelGraph { vertices, arcs }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Topology {
    pub components: usize,
    pub euler: i64,
}

impl Topology {
    pub fn contractible(&self) -> bool {
        self.components == 1 && self.euler == 1
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

pub(crate) fn count_components(n: usize, links: &[(usize, usize)]) -> usize {
    let mut uf = UnionFind::new(n);
    for &(a, b) in links {
        uf.union(a, b);
    }
    (0..n).filter(|&i| uf.find(i) == i).count()
}

/// Components and Euler characteristic of the superlevel set.
pub fn superlevel_topology(gf: &GraphPL, c: &Q) -> Topology {
    let s = superlevel(gf, c);
    // points: kept vertices plus one per arc end strictly inside an edge
    let vid: HashMap<usize, usize> = s.vertices.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut points = s.vertices.len();
    let mut links = Vec::new();
    for arc in s.arcs.iter().filter(|a| a.t0 != a.t1) {
        let (u, v) = gf.graph.edges[arc.edge];
        let mut fresh = || {
            points += 1;
            points - 1
        };
        let a = if arc.t0.is_zero() { vid[&u] } else { fresh() };
        let b = if arc.t1.is_one() { vid[&v] } else { fresh() };
        links.push((a, b));
    }
    Topology { components: count_components(points, &links), euler: points as i64 - links.len() as i64 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnimodalMode {
    Contractible,
    Pi0,
}

/// Distinct positive vertex values together with midpoints between them and
/// below the smallest one; superlevel topology only changes at vertex values.
pub fn critical_levels(values: &[Q]) -> Vec<Q> {
    let mut vs: Vec<Q> = values.iter().filter(|v| v.is_positive()).cloned().collect();
    vs.sort();
    vs.dedup();
    let mut out = Vec::new();
    let mut prev = Q::zero();
    for v in vs {
        out.push((&prev + &v) * q(1, 2));
        out.push(v.clone());
        prev = v;
    }
    out
}

pub fn is_unimodal_graph(gf: &GraphPL, mode: UnimodalMode) -> bool {
    let levels = critical_levels(&gf.values);
    if levels.is_empty() {
        return false;
    }
    levels.iter().all(|c| {
        let t = superlevel_topology(gf, c);
        match mode {
            UnimodalMode::Contractible => t.contractible(),
            UnimodalMode::Pi0 => t.components == 1,
        }
    })
}

fn same_graph(a: &GraphPL, b: &GraphPL) -> bool {
    a.graph.ids == b.graph.ids && a.graph.edges == b.graph.edges
}

/// Checks `target = sum` or `target = max` of the summands. Values are compared
/// after applying each function's exponent; all are linear along edges.
pub fn verify_combination(summands: &[GraphPL], rule: &Rule, target: &GraphPL) -> Result<bool, GraphError> {
    if summands.iter().any(|s| !same_graph(s, target)) {
        return Err(GraphError::GraphMismatch);
    }
    let t = target.powered()?;
    let ss: Vec<Vec<Real>> = summands.iter().map(|s| s.powered()).collect::<Result<_, _>>()?;
    match rule {
        Rule::Sum => {
            for (i, ti) in t.iter().enumerate() {
                let s = ss.iter().fold(Real::zero(), |acc, s| acc.add(&s[i]));
                if s.cmp_real(ti)? != Ordering::Equal {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Rule::Max => {
            for &(u, v) in &target.graph.edges {
                let mut attained = false;
                for s in &ss {
                    let cu = s[u].cmp_real(&t[u])?;
                    let cv = s[v].cmp_real(&t[v])?;
                    if cu == Ordering::Greater || cv == Ordering::Greater {
                        return Ok(false);
                    }
                    attained |= cu == Ordering::Equal && cv == Ordering::Equal;
                }
                if !attained {
                    return Ok(false);
                }
            }
            // isolated vertices
            for (i, ti) in t.iter().enumerate() {
                let mut best = Ordering::Less;
                for s in &ss {
                    best = best.max(s[i].cmp_real(ti)?);
                }
                if best != Ordering::Equal {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        other => Err(GraphError::UnsupportedRule(other.clone())),
    }
}

/// A vertex or a point inside an edge at parameter `t` in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphPoint {
    Vertex(String),
    OnEdge { edge: usize, t: Q },
}

fn point_value<V: Exact>(gf: &GraphPL, vals: &[V], p: &GraphPoint) -> Result<V, GraphError> {
    Ok(match p {
        GraphPoint::Vertex(id) => vals[gf.graph.vertex(id)?].clone(),
        GraphPoint::OnEdge { edge, t } => {
            let (u, v) = gf.graph.edges[*edge];
            vals[u].plus(&vals[v].minus(&vals[u]).times(t))
        }
    })
}

fn vmin<V: Exact>(a: &V, b: &V) -> Result<V, NumError> {
    Ok(if a.cmp_exact(b)? == Ordering::Greater { b.clone() } else { a.clone() })
}

fn vmax<V: Exact>(a: &V, b: &V) -> Result<V, NumError> {
    Ok(if a.cmp_exact(b)? == Ordering::Less { b.clone() } else { a.clone() })
}

/// Widest-path bottleneck from `s` to every vertex; `None` if unreachable.
fn bottlenecks<V: Exact>(gf: &GraphPL, vals: &[V], s: &GraphPoint) -> Result<Vec<Option<V>>, GraphError> {
    let n = vals.len();
    let adj = gf.graph.adjacency();
    let mut best: Vec<Option<V>> = vec![None; n];
    let fs = point_value(gf, vals, s)?;
    match s {
        GraphPoint::Vertex(id) => best[gf.graph.vertex(id)?] = Some(fs),
        GraphPoint::OnEdge { edge, .. } => {
            let (u, v) = gf.graph.edges[*edge];
            best[u] = Some(vmin(&fs, &vals[u])?);
            best[v] = Some(vmin(&fs, &vals[v])?);
        }
    }
    let mut done = vec![false; n];
    loop {
        let mut pick: Option<usize> = None;
        for i in 0..n {
            if done[i] {
                continue;
            }
            if let Some(b) = &best[i] {
                let better = match pick {
                    None => true,
                    Some(j) => b.cmp_exact(best[j].as_ref().expect("set"))? == Ordering::Greater,
                };
                if better {
                    pick = Some(i);
                }
            }
        }
        let Some(i) = pick else { break };
        done[i] = true;
        let bi = best[i].clone().expect("set");
        for &w in &adj[i] {
            if done[w] {
                continue;
            }
            let cand = vmin(&bi, &vals[w])?;
            let upgrade = match &best[w] {
                None => true,
                Some(b) => cand.cmp_exact(b)? == Ordering::Greater,
            };
            if upgrade {
                best[w] = Some(cand);
            }
        }
    }
    Ok(best)
}

fn path_value_with<V: Exact>(gf: &GraphPL, vals: &[V], s: &GraphPoint, t: &GraphPoint) -> Result<V, GraphError> {
    let b = bottlenecks(gf, vals, s)?;
    let ft = point_value(gf, vals, t)?;
    let mut best: Option<V> = None;
    let mut offer = |c: V| -> Result<(), NumError> {
        best = Some(match &best {
            None => c,
            Some(b) => vmax(b, &c)?,
        });
        Ok(())
    };
    match t {
        GraphPoint::Vertex(id) => {
            if let Some(v) = &b[gf.graph.vertex(id)?] {
                offer(v.clone())?;
            }
        }
        GraphPoint::OnEdge { edge, .. } => {
            let (u, v) = gf.graph.edges[*edge];
            for w in [u, v] {
                if let Some(bw) = &b[w] {
                    offer(vmin(bw, &ft)?)?;
                }
            }
        }
    }
    if let (GraphPoint::OnEdge { edge: e1, .. }, GraphPoint::OnEdge { edge: e2, .. }) = (s, t) {
        if e1 == e2 {
            offer(vmin(&point_value(gf, vals, s)?, &ft)?)?;
        }
    }
    best.ok_or(GraphError::NoPath)
}

/// Maximin of the function over paths from `s` to `t`.
pub fn path_value(gf: &GraphPL, s: &GraphPoint, t: &GraphPoint) -> Result<Real, GraphError> {
    if gf.exponent.is_one() {
        return Ok(Real::from_q(path_value_with(gf, &gf.values, s, t)?));
    }
    path_value_with(gf, &gf.powered()?, s, t)
}

/// `sum_i pv(x_i, x) >= f(x)` at every vertex; on an edge each `pv(x_i, .)`
/// is `min(P_i, f)` with `P_i` constant, so the slack is concave along the
/// edge and the vertices decide. Returns the first failing vertex.
pub fn lower_bound_check(gf: &GraphPL, points: &[String]) -> Result<(bool, Option<String>), GraphError> {
    let vals = gf.powered()?;
    let mut tables = Vec::new();
    for p in points {
        tables.push(bottlenecks(gf, &vals, &GraphPoint::Vertex(p.clone()))?);
    }
    for (x, fx) in vals.iter().enumerate() {
        let mut s = Real::zero();
        for t in &tables {
            if let Some(b) = &t[x] {
                s = s.add(b);
            }
        }
        if s.cmp_real(fx)? == Ordering::Less {
            return Ok((false, Some(gf.graph.ids[x].clone())));
        }
    }
    Ok((true, None))
}

/// Vertices at least as high as all their neighbours, with positive value.
pub fn local_maxima(gf: &GraphPL) -> Vec<usize> {
    let adj = gf.graph.adjacency();
    (0..gf.values.len())
        .filter(|&v| gf.values[v].is_positive() && adj[v].iter().all(|&u| gf.values[u] <= gf.values[v]))
        .collect()
}

/// Smallest `n <= cap` such that some multiset of `n` local maxima passes
/// `lower_bound_check`, or `cap + 1`. Pushing a point uphill never lowers its
/// path values, so maxima suffice and `ucat >= n` is certified.
pub fn certified_lower_bound(gf: &GraphPL, cap: usize) -> Result<usize, GraphError> {
    let maxima: Vec<String> = local_maxima(gf).into_iter().map(|v| gf.graph.ids[v].clone()).collect();
    for n in 1..=cap {
        let mut idx = vec![0usize; n];
        loop {
            let pts: Vec<String> = idx.iter().map(|&i| maxima[i].clone()).collect();
            if !pts.is_empty() && lower_bound_check(gf, &pts)?.0 {
                return Ok(n);
            }
            // next nondecreasing index tuple
            let Some(k) = (0..n).rev().find(|&k| idx[k] + 1 < maxima.len()) else { break };
            idx[k] += 1;
            for j in k + 1..n {
                idx[j] = idx[k];
            }
        }
    }
    Ok(cap + 1)
}

/// Weighted tree of local maxima joined by saddles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorseSmaleTree {
    weights: Vec<Q>,
    saddles: Vec<(usize, usize, Q)>,
    exponent: Q,
}

impl MorseSmaleTree {
    pub fn new(weights: Vec<Q>, saddles: Vec<(usize, usize, Q)>) -> Result<Self, GraphError> {
        let n = weights.len();
        if n == 0 || saddles.len() + 1 != n || saddles.iter().any(|&(a, b, _)| a >= n || b >= n || a == b) {
            return Err(GraphError::NotATree);
        }
        let links: Vec<(usize, usize)> = saddles.iter().map(|&(a, b, _)| (a, b)).collect();
        if count_components(n, &links) != 1 {
            return Err(GraphError::NotATree);
        }
        for (k, (a, b, s)) in saddles.iter().enumerate() {
            if s >= &weights[*a] || s >= &weights[*b] || s.is_negative() {
                return Err(GraphError::BadSaddle(k));
            }
        }
        Ok(MorseSmaleTree { weights, saddles, exponent: Q::one() })
    }

    pub fn power(&self, p: &Q) -> Self {
        let mut t = self.clone();
        t.exponent = &self.exponent * p;
        t
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Q] {
        &self.weights
    }

    /// Base path value: the smallest saddle on the tree path, or the weight
    /// itself when both ends agree.
    pub fn pv(&self, i: usize, j: usize) -> Q {
        self.pv_row(i)[j].clone()
    }

    fn pv_row(&self, i: usize) -> Vec<Q> {
        let n = self.weights.len();
        let mut adj = vec![Vec::new(); n];
        for (a, b, s) in &self.saddles {
            adj[*a].push((*b, s.clone()));
            adj[*b].push((*a, s.clone()));
        }
        let mut row: Vec<Option<Q>> = vec![None; n];
        row[i] = Some(self.weights[i].clone());
        let mut stack = vec![i];
        while let Some(x) = stack.pop() {
            let bx = row[x].clone().expect("visited");
            for (y, s) in &adj[x] {
                if row[*y].is_none() {
                    row[*y] = Some(if &bx < s { bx.clone() } else { s.clone() });
                    stack.push(*y);
                }
            }
        }
        row.into_iter().map(|r| r.expect("tree is connected")).collect()
    }
}

/// Whether `sum_i pv(x_i, x)^p > w(x)^p` at every maximum not among the
/// points; repeats are allowed in `points`.
pub fn tree_criterion(t: &MorseSmaleTree, points: &[usize]) -> Result<bool, GraphError> {
    let n = t.len();
    if points.iter().any(|&p| p >= n) {
        return Err(GraphError::NotATree);
    }
    let rows: Vec<Vec<Q>> = points.iter().map(|&p| t.pv_row(p)).collect();
    let chosen: HashSet<usize> = points.iter().copied().collect();
    for x in (0..n).filter(|x| !chosen.contains(x)) {
        let ok = if t.exponent.is_one() {
            rows.iter().map(|r| r[x].clone()).sum::<Q>() > t.weights[x]
        } else {
            let mut s = Real::zero();
            for r in &rows {
                s = s.add(&Real::pow_q(&r[x], &t.exponent)?);
            }
            s.cmp_real(&Real::pow_q(&t.weights[x], &t.exponent)?)? == Ordering::Greater
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest set of distinct maxima passing the tree criterion.
///
/// Repeats never help: if `x` is chosen twice, replace one copy by the
/// unchosen `y` maximizing `pv(x, y)`. For any unchosen `z`, `pv(y, z) >=
/// min(pv(y, x), pv(x, z)) = pv(x, z)` because `pv(x, y) >= pv(x, z)`, and `y`
/// itself no longer needs to be covered.
pub fn min_tree_cover(t: &MorseSmaleTree) -> Result<(usize, Vec<usize>), GraphError> {
    let n = t.len();
    if n > MAX_TREE_MAXIMA {
        return Err(GraphError::TooLarge(n));
    }
    for size in 1..=n {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            if tree_criterion(t, &combo)? {
                return Ok((size, combo));
            }
            // next combination in lexicographic order
            let mut i = size;
            while i > 0 && combo[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    unreachable!("choosing every maximum satisfies the criterion vacuously")
}

/// Random tree whose maxima and saddles all carry distinct weights.
pub fn random_tree<R: Rng>(rng: &mut R, max_maxima: usize) -> MorseSmaleTree {
    let n = rng.gen_range(1..=max_maxima.max(1));
    'attempt: loop {
        let mut pool: Vec<i64> = (1..=8 * n as i64).collect();
        pool.shuffle(rng);
        let weights: Vec<i64> = pool[..n].to_vec();
        let mut used: HashSet<i64> = weights.iter().copied().collect();
        let mut saddles = Vec::with_capacity(n - 1);
        for i in 1..n {
            let parent = rng.gen_range(0..i);
            let cap = weights[i].min(weights[parent]);
            let free: Vec<i64> = (1..cap).filter(|s| !used.contains(s)).collect();
            let Some(&s) = free.choose(rng) else { continue 'attempt };
            used.insert(s);
            saddles.push((parent, i, Q::from_integer(s.into())));
        }
        let ws = weights.into_iter().map(|w| Q::from_integer(w.into())).collect();
        return MorseSmaleTree::new(ws, saddles).expect("valid random tree");
    }
}

pub fn tree_monotonicity_scan<R: Rng>(rng: &mut R, trials: usize, p_list: &[Q]) -> Result<ScanReport, GraphError> {
    let mut ps = p_list.to_vec();
    ps.sort();
    let mut violations = 0;
    let mut counterexamples = Vec::new();
    for _ in 0..trials {
        let t = random_tree(rng, 8);
        let covers: Vec<usize> = ps.iter().map(|p| min_tree_cover(&t.power(p)).map(|c| c.0)).collect::<Result<_, _>>()?;
        if covers.windows(2).any(|w| w[0] > w[1]) {
            violations += 1;
            counterexamples.push(format!("{:?} covers {:?}", t, covers));
        }
    }
    Ok(ScanReport { kind: "tree".into(), trials, violations, counterexamples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::qi;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cycle(n: usize) -> GeometricGraph {
        let vs = (0..n).map(|i| (format!("v{i}"), None)).collect();
        let es: Vec<(String, String)> = (0..n).map(|i| (format!("v{i}"), format!("v{}", (i + 1) % n))).collect();
        GeometricGraph::new(vs, &es).unwrap()
    }

    fn path(vals: &[i64]) -> GraphPL {
        let n = vals.len();
        let vs = (0..n).map(|i| (format!("v{i}"), None)).collect();
        let es: Vec<(String, String)> = (1..n).map(|i| (format!("v{}", i - 1), format!("v{i}"))).collect();
        GraphPL::new(GeometricGraph::new(vs, &es).unwrap(), vals.iter().map(|&v| qi(v)).collect()).unwrap()
    }

    #[test]
    fn construction_errors() {
        let v = vec![("a".to_string(), None), ("b".to_string(), None)];
        let e = vec![("a".to_string(), "a".to_string())];
        assert_eq!(GeometricGraph::new(v.clone(), &e), Err(GraphError::SelfLoop("a".into())));
        let e = vec![("a".to_string(), "b".to_string()), ("b".to_string(), "a".to_string())];
        assert!(matches!(GeometricGraph::new(v, &e), Err(GraphError::DuplicateEdge(_, _))));
    }

    #[test]
    fn cycle_modes() {
        let f = GraphPL::new(cycle(4), vec![qi(1); 4]).unwrap();
        assert!(is_unimodal_graph(&f, UnimodalMode::Pi0));
        assert!(!is_unimodal_graph(&f, UnimodalMode::Contractible));
        assert!(superlevel(&f, &qi(2)).vertices.is_empty());
    }

    #[test]
    fn path_values_on_a_path() {
        let f = path(&[3, 1, 3]);
        let pv = path_value(&f, &GraphPoint::Vertex("v0".into()), &GraphPoint::Vertex("v2".into())).unwrap();
        assert_eq!(pv.as_rational(), Some(qi(1)));
        let pv = path_value(&f, &GraphPoint::Vertex("v0".into()), &GraphPoint::Vertex("v0".into())).unwrap();
        assert_eq!(pv.as_rational(), Some(qi(3)));
        let mid = GraphPoint::OnEdge { edge: 0, t: q(1, 2) };
        let pv = path_value(&f, &mid, &GraphPoint::Vertex("v0".into())).unwrap();
        assert_eq!(pv.as_rational(), Some(qi(2)));
        let g = GraphPL::new(GeometricGraph::new(vec![("a".into(), None), ("b".into(), None)], &[]).unwrap(), vec![qi(1), qi(1)])
            .unwrap();
        assert_eq!(path_value(&g, &GraphPoint::Vertex("a".into()), &GraphPoint::Vertex("b".into())), Err(GraphError::NoPath));
    }

    #[test]
    fn lower_bound_on_unimodal() {
        let f = path(&[1, 2, 4, 2, 0]);
        assert_eq!(lower_bound_check(&f, &["v2".into()]).unwrap(), (true, None));
        let w = path(&[0, 3, 1, 3, 0]);
        assert_eq!(lower_bound_check(&w, &["v1".into()]).unwrap(), (false, Some("v3".into())));
    }

    fn tree(weights: &[i64], saddles: &[(usize, usize, i64)]) -> MorseSmaleTree {
        MorseSmaleTree::new(weights.iter().map(|&w| qi(w)).collect(), saddles.iter().map(|&(a, b, s)| (a, b, qi(s))).collect())
            .unwrap()
    }

    #[test]
    fn tree_examples() {
        let t = tree(&[3, 3], &[(0, 1, 1)]);
        assert!(tree_criterion(&t, &[0, 1]).unwrap());
        assert!(!tree_criterion(&t, &[0]).unwrap());
        let t = tree(&[5, 3, 5], &[(0, 1, 2), (1, 2, 2)]);
        assert!(tree_criterion(&t, &[0, 2]).unwrap());
        assert_eq!(min_tree_cover(&t).unwrap(), (2, vec![0, 2]));
        let star = tree(&[3, 3, 3, 2], &[(3, 0, 1), (3, 1, 1), (3, 2, 1)]);
        assert_eq!(min_tree_cover(&star).unwrap().0, 3);
        assert_eq!(min_tree_cover(&tree(&[4], &[])).unwrap().0, 1);
        assert_eq!(MorseSmaleTree::new(vec![qi(1), qi(2)], vec![]), Err(GraphError::NotATree));
    }

    /// Smallest multiset (each maximum at most `cap` times) passing the criterion.
    fn multiset_cover(t: &MorseSmaleTree, cap: usize) -> usize {
        let n = t.len();
        let mut best = n;
        let mut counts = vec![0usize; n];
        loop {
            let size: usize = counts.iter().sum();
            if size > 0 && size < best {
                let pts: Vec<usize> = counts.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c)).collect();
                if tree_criterion(t, &pts).unwrap() {
                    best = size;
                }
            }
            let mut i = 0;
            while i < n && counts[i] == cap {
                counts[i] = 0;
                i += 1;
            }
            if i == n {
                return best;
            }
            counts[i] += 1;
        }
    }

    #[test]
    fn repeats_never_shrink_the_cover() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..150 {
            let t = random_tree(&mut rng, 5);
            for p in [qi(1), qi(2)] {
                let tp = t.power(&p);
                assert_eq!(min_tree_cover(&tp).unwrap().0, multiset_cover(&tp, 3));
            }
        }
    }

    #[test]
    fn scaled_path_values() {
        let f = path(&[2, 5, 1, 4]);
        let g = f.scaled(&q(3, 2));
        let (s, t) = (GraphPoint::Vertex("v0".into()), GraphPoint::Vertex("v3".into()));
        let a = path_value(&f, &s, &t).unwrap().as_rational().unwrap();
        let b = path_value(&g, &s, &t).unwrap().as_rational().unwrap();
        assert_eq!(b, a * q(3, 2));
    }
}
