//! PL functions on polygonal decompositions of the plane.
//!
//! Faces are simple polygons on which the function is affine. Each face is
//! triangulated by ear clipping after vertices lying on its sides have been
//! spliced in, so a listed decomposition with T-junctions is accepted.
//! Topology of superlevel sets is read off the complex obtained by clipping
//! every triangle at the level: a compact planar region is contractible iff
//! it is connected with Euler characteristic 1.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{fmt_q, parse_q, NumError, Real, Q};
use crate::sweep::Rule;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlaneError {
    #[error("duplicate vertex {0}")]
    DuplicateVertex(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("negative value at vertex {0}")]
    NegativeValue(String),
    #[error("{0} values for {1} vertices")]
    LengthMismatch(usize, usize),
    #[error("face {0} is not a simple polygon")]
    NotSimple(usize),
    #[error("values on face {0} are not affine")]
    NonplanarFaceValues(usize),
    #[error("faces do not tile: {0}")]
    BadTiling(String),
    #[error("nonzero value {1} at boundary vertex {0}")]
    NonzeroBoundary(String, String),
    #[error("no face contains both {0} and {1}")]
    NoFaceForEdge(String, String),
    #[error("point ({0}, {1}) is outside the support")]
    OutOfSupport(String, String),
    #[error("level must be positive")]
    NonpositiveLevel,
    #[error("exponent must be positive")]
    NonpositiveExponent,
    #[error("refinement mismatch: {0}")]
    RefinementMismatch(String),
    #[error("combination under {0:?} is not piecewise linear for these exponents")]
    NonlinearCombination(Rule),
    #[error(transparent)]
    Num(#[from] NumError),
}

pub type Point = (Q, Q);

fn orient(a: &Point, b: &Point, c: &Point) -> Q {
    (&b.0 - &a.0) * (&c.1 - &a.1) - (&b.1 - &a.1) * (&c.0 - &a.0)
}

fn signed_area2(poly: &[Point]) -> Q {
    let n = poly.len();
    (0..n).map(|i| &poly[i].0 * &poly[(i + 1) % n].1 - &poly[(i + 1) % n].0 * &poly[i].1).sum()
}

/// `p` on the closed segment `ab`.
fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    orient(a, b, p).is_zero()
        && p.0 >= a.0.clone().min(b.0.clone())
        && p.0 <= a.0.clone().max(b.0.clone())
        && p.1 >= a.1.clone().min(b.1.clone())
        && p.1 <= a.1.clone().max(b.1.clone())
}

fn segments_meet(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let (o1, o2) = (orient(a, b, c).signum(), orient(a, b, d).signum());
    let (o3, o4) = (orient(c, d, a).signum(), orient(c, d, b).signum());
    if o1 != o2 && o3 != o4 && !o1.is_zero() && !o2.is_zero() && !o3.is_zero() && !o4.is_zero() {
        return true;
    }
    on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) || on_segment(c, d, b)
}

fn in_closed_triangle(a: &Point, b: &Point, c: &Point, p: &Point) -> bool {
    let s = orient(a, b, c).signum();
    [orient(a, b, p), orient(b, c, p), orient(c, a, p)].iter().all(|o| o.is_zero() || o.signum() == s)
}

/// Value at `p` of the affine function through three points.
fn affine_at(t: [&Point; 3], v: [&Q; 3], p: &Point) -> Q {
    let d = orient(t[0], t[1], t[2]);
    (orient(p, t[1], t[2]) * v[0] + orient(t[0], p, t[2]) * v[1] + orient(t[0], t[1], p) * v[2]) / d
}

/// Ear clipping for a counter-clockwise simple polygon. Collinear vertices
/// are never ear tips, so every vertex survives as a triangle corner.
fn ear_clip(pts: &[Point], idx: &[usize]) -> Option<Vec<[usize; 3]>> {
    let mut ring: Vec<usize> = idx.to_vec();
    let mut out = Vec::new();
    while ring.len() > 3 {
        let n = ring.len();
        let ear = (0..n).find(|&i| {
            let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            orient(&pts[a], &pts[b], &pts[c]).is_positive()
                && ring.iter().all(|&v| v == a || v == b || v == c || !in_closed_triangle(&pts[a], &pts[b], &pts[c], &pts[v]))
        })?;
        out.push([ring[(ear + n - 1) % n], ring[ear], ring[(ear + 1) % n]]);
        ring.remove(ear);
    }
    if !orient(&pts[ring[0]], &pts[ring[1]], &pts[ring[2]]).is_positive() {
        return None;
    }
    out.push([ring[0], ring[1], ring[2]]);
    Some(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanePL {
    ids: Vec<String>,
    points: Vec<Point>,
    faces: Vec<Vec<usize>>,
    triangles: Vec<[usize; 3]>,
    values: Vec<Q>,
    exponent: Q,
}

/// Validates and triangulates a listed decomposition.
pub fn make_plane_pl(vertices: Vec<(String, Point)>, faces: Vec<Vec<usize>>, values: Vec<Q>) -> Result<PlanePL, PlaneError> {
    if values.len() != vertices.len() {
        return Err(PlaneError::LengthMismatch(values.len(), vertices.len()));
    }
    let mut seen = HashSet::new();
    for (id, _) in &vertices {
        if !seen.insert(id.clone()) {
            return Err(PlaneError::DuplicateVertex(id.clone()));
        }
    }
    if let Some(i) = values.iter().position(|v| v.is_negative()) {
        return Err(PlaneError::NegativeValue(vertices[i].0.clone()));
    }
    let (ids, points): (Vec<String>, Vec<Point>) = vertices.into_iter().unzip();
    let used: Vec<usize> = {
        let mut u: Vec<usize> = faces.iter().flatten().copied().collect();
        u.sort_unstable();
        u.dedup();
        u
    };
    if let Some(&bad) = used.iter().find(|&&v| v >= points.len()) {
        return Err(PlaneError::UnknownVertex(format!("#{bad}")));
    }
    let mut full = Vec::with_capacity(faces.len());
    for (fi, face) in faces.iter().enumerate() {
        let k = face.len();
        let distinct: HashSet<&usize> = face.iter().collect();
        if k < 3 || distinct.len() != k {
            return Err(PlaneError::NotSimple(fi));
        }
        let poly: Vec<Point> = face.iter().map(|&v| points[v].clone()).collect();
        for i in 0..k {
            for j in i + 1..k {
                let adjacent = j == i + 1 || (i == 0 && j == k - 1);
                let (a, b) = (&poly[i], &poly[(i + 1) % k]);
                let (c, d) = (&poly[j], &poly[(j + 1) % k]);
                if adjacent {
                    // consecutive sides may only share their common corner
                    let (shared, far) = if j == i + 1 { (b, d) } else { (a, c) };
                    let other = if j == i + 1 { a } else { b };
                    if orient(other, shared, far).is_zero() && (on_segment(other, shared, far) || on_segment(shared, far, other)) {
                        return Err(PlaneError::NotSimple(fi));
                    }
                } else if segments_meet(a, b, c, d) {
                    return Err(PlaneError::NotSimple(fi));
                }
            }
        }
        let area = signed_area2(&poly);
        if area.is_zero() {
            return Err(PlaneError::NotSimple(fi));
        }
        let mut ring: Vec<usize> = if area.is_positive() { face.clone() } else { face.iter().rev().copied().collect() };
        // splice in vertices lying inside sides
        let mut spliced = Vec::with_capacity(ring.len());
        for i in 0..ring.len() {
            let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
            spliced.push(a);
            let mut inner: Vec<(Q, usize)> = used
                .iter()
                .filter(|&&v| v != a && v != b && on_segment(&points[a], &points[b], &points[v]))
                .map(|&v| {
                    let t = if points[a].0 != points[b].0 {
                        (&points[v].0 - &points[a].0) / (&points[b].0 - &points[a].0)
                    } else {
                        (&points[v].1 - &points[a].1) / (&points[b].1 - &points[a].1)
                    };
                    (t, v)
                })
                .collect();
            inner.sort();
            spliced.extend(inner.into_iter().map(|(_, v)| v));
        }
        ring = spliced;
        if ring.len() >= 4 {
            let base = (0..ring.len())
                .flat_map(|i| (i + 1..ring.len()).map(move |j| (i, j)))
                .flat_map(|(i, j)| (j + 1..ring.len()).map(move |l| (i, j, l)))
                .find(|&(i, j, l)| !orient(&points[ring[i]], &points[ring[j]], &points[ring[l]]).is_zero())
                .ok_or(PlaneError::NotSimple(fi))?;
            let t = [&points[ring[base.0]], &points[ring[base.1]], &points[ring[base.2]]];
            let v = [&values[ring[base.0]], &values[ring[base.1]], &values[ring[base.2]]];
            if ring.iter().any(|&w| affine_at(t, v, &points[w]) != values[w]) {
                return Err(PlaneError::NonplanarFaceValues(fi));
            }
        }
        full.push(ring);
    }
    let mut sides: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for ring in &full {
        for i in 0..ring.len() {
            let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
            sides.entry((a.min(b), a.max(b))).or_default().push((a, b));
        }
    }
    for (&(a, b), uses) in &sides {
        match uses.as_slice() {
            [_] => {
                for v in [a, b] {
                    if !values[v].is_zero() {
                        return Err(PlaneError::NonzeroBoundary(ids[v].clone(), fmt_q(&values[v])));
                    }
                }
            }
            [x, y] if x != y => {}
            _ => return Err(PlaneError::BadTiling(format!("side {}-{} is used inconsistently", ids[a], ids[b]))),
        }
    }
    let mut triangles = Vec::new();
    for (fi, ring) in full.iter().enumerate() {
        triangles.extend(ear_clip(&points, ring).ok_or(PlaneError::NotSimple(fi))?);
    }
    Ok(PlanePL { ids, points, faces: full, triangles, values, exponent: Q::one() })
}

/// Splits faces along diagonals joining two of their corners.
pub fn split_faces(faces: &[Vec<usize>], diagonals: &[(usize, usize)]) -> Result<Vec<Vec<usize>>, (usize, usize)> {
    let mut out = faces.to_vec();
    for &(a, b) in diagonals {
        let fi = out.iter().position(|f| f.contains(&a) && f.contains(&b)).ok_or((a, b))?;
        let f = out.swap_remove(fi);
        let (i, j) = (f.iter().position(|&v| v == a).unwrap(), f.iter().position(|&v| v == b).unwrap());
        let (i, j) = (i.min(j), i.max(j));
        if j - i < 2 || (i == 0 && j == f.len() - 1) {
            return Err((a, b));
        }
        out.push(f[i..=j].to_vec());
        out.push(f[j..].iter().chain(&f[..=i]).copied().collect());
    }
    Ok(out)
}

/// Float bounding boxes of the triangles, to prefilter exact point location.
struct Locator {
    boxes: Vec<[f64; 4]>,
}

impl Locator {
    fn new(f: &PlanePL) -> Self {
        let boxes = f
            .triangles
            .iter()
            .map(|t| {
                let xs: Vec<f64> = t.iter().map(|&v| f.points[v].0.to_f64().unwrap_or(0.0)).collect();
                let ys: Vec<f64> = t.iter().map(|&v| f.points[v].1.to_f64().unwrap_or(0.0)).collect();
                let lo = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min) - 1e-9;
                let hi = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-9;
                [lo(&xs), hi(&xs), lo(&ys), hi(&ys)]
            })
            .collect();
        Locator { boxes }
    }

    fn locate(&self, f: &PlanePL, p: &Point) -> Option<usize> {
        let (x, y) = (p.0.to_f64().unwrap_or(0.0), p.1.to_f64().unwrap_or(0.0));
        self.boxes.iter().enumerate().find_map(|(i, b)| {
            let t = &f.triangles[i];
            (x >= b[0] && x <= b[1] && y >= b[2] && y <= b[3]
                && in_closed_triangle(&f.points[t[0]], &f.points[t[1]], &f.points[t[2]], p))
            .then_some(i)
        })
    }
}

impl PlanePL {
    pub fn with_exponent(mut self, p: Q) -> Result<Self, PlaneError> {
        if !p.is_positive() {
            return Err(PlaneError::NonpositiveExponent);
        }
        self.exponent = p;
        Ok(self)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Faces as counter-clockwise rings, including spliced side vertices.
    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    /// Distinct sides of the spliced faces.
    pub fn side_count(&self) -> usize {
        let mut sides = HashSet::new();
        for f in &self.faces {
            for i in 0..f.len() {
                let (a, b) = (f[i], f[(i + 1) % f.len()]);
                sides.insert((a.min(b), a.max(b)));
            }
        }
        sides.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn exponent(&self) -> &Q {
        &self.exponent
    }

    pub fn vertex(&self, id: &str) -> Result<usize, PlaneError> {
        self.ids.iter().position(|v| v == id).ok_or_else(|| PlaneError::UnknownVertex(id.to_string()))
    }

    pub fn max_base(&self) -> Q {
        self.values.iter().max().cloned().unwrap_or_else(Q::zero)
    }

    fn tri_value(&self, t: usize, p: &Point) -> Q {
        let [a, b, c] = self.triangles[t];
        affine_at([&self.points[a], &self.points[b], &self.points[c]], [&self.values[a], &self.values[b], &self.values[c]], p)
    }

    /// Base value at `p`; `None` outside the support.
    pub fn eval_base(&self, p: &Point) -> Option<Q> {
        (0..self.triangles.len()).find_map(|t| {
            let [a, b, c] = self.triangles[t];
            in_closed_triangle(&self.points[a], &self.points[b], &self.points[c], p).then(|| self.tri_value(t, p))
        })
    }

    pub fn eval(&self, p: &Point) -> Result<Real, PlaneError> {
        let v = self.eval_base(p).ok_or_else(|| PlaneError::OutOfSupport(fmt_q(&p.0), fmt_q(&p.1)))?;
        Ok(Real::pow_q(&v, &self.exponent)?)
    }

    /// Sum of `coef * term` on the mesh of the first term cut by every line
    /// carrying a side of the other terms.
    pub fn combine(terms: &[(Q, &PlanePL)]) -> Result<PlanePL, PlaneError> {
        let (_, base) = terms.first().ok_or_else(|| PlaneError::RefinementMismatch("no terms".into()))?;
        let base_loc = Locator::new(base);
        for (_, t) in &terms[1..] {
            for (i, p) in t.points.iter().enumerate() {
                if !t.values[i].is_zero() && base_loc.locate(base, p).is_none() {
                    return Err(PlaneError::RefinementMismatch(format!("vertex {} lies outside the first term", t.ids[i])));
                }
            }
        }
        let lines = side_lines(terms[1..].iter().map(|(_, t)| *t));
        let locs: Vec<Locator> = terms.iter().map(|(_, t)| Locator::new(t)).collect();
        let mut key: HashMap<Point, usize> = HashMap::new();
        let mut points: Vec<Point> = Vec::new();
        let mut faces = Vec::new();
        for t in 0..base.triangles.len() {
            for cell in cut_triangle(base, t, &lines) {
                let ring: Vec<usize> = cell
                    .into_iter()
                    .map(|p| {
                        *key.entry(p.clone()).or_insert_with(|| {
                            points.push(p);
                            points.len() - 1
                        })
                    })
                    .collect();
                faces.push(ring);
            }
        }
        let mut values = Vec::with_capacity(points.len());
        for p in &points {
            let mut v = Q::zero();
            for ((c, f), loc) in terms.iter().zip(&locs) {
                if let Some(t) = loc.locate(f, p) {
                    v += c * f.tri_value(t, p);
                }
            }
            values.push(v);
        }
        let ids: Vec<String> = (0..points.len()).map(|i| format!("v{i}")).collect();
        if let Some(i) = values.iter().position(|v| v.is_negative()) {
            return Err(PlaneError::NegativeValue(format!("({}, {})", fmt_q(&points[i].0), fmt_q(&points[i].1))));
        }
        let mut triangles = Vec::new();
        for (fi, ring) in faces.iter().enumerate() {
            triangles.extend(ear_clip(&points, ring).ok_or(PlaneError::NotSimple(fi))?);
        }
        Ok(PlanePL { ids, points, faces, triangles, values, exponent: base.exponent.clone() })
    }

    /// Tent of height 1 over a rectangle, linear on the four triangles
    /// meeting at its center.
    pub fn rectangle_bump(x0: &Q, y0: &Q, x1: &Q, y1: &Q) -> Result<PlanePL, PlaneError> {
        let two = Q::from_integer(2.into());
        let c = ((x0 + x1) / &two, (y0 + y1) / &two);
        let vs = vec![
            ("r0".to_string(), (x0.clone(), y0.clone())),
            ("r1".to_string(), (x1.clone(), y0.clone())),
            ("r2".to_string(), (x1.clone(), y1.clone())),
            ("r3".to_string(), (x0.clone(), y1.clone())),
            ("rc".to_string(), c),
        ];
        let faces = vec![vec![0, 1, 4], vec![1, 2, 4], vec![2, 3, 4], vec![3, 0, 4]];
        let mut vals = vec![Q::zero(); 5];
        vals[4] = Q::one();
        make_plane_pl(vs, faces, vals)
    }

    pub fn to_json(&self, original_faces: Option<&[Vec<usize>]>) -> PlaneJson {
        let faces = original_faces.unwrap_or(&self.faces);
        PlaneJson {
            domain: "plane".into(),
            vertices: self
                .ids
                .iter()
                .zip(&self.points)
                .map(|(id, p)| PlaneVertexJson { id: id.clone(), x: fmt_q(&p.0), y: fmt_q(&p.1) })
                .collect(),
            faces: faces.iter().map(|f| f.iter().map(|&v| self.ids[v].clone()).collect()).collect(),
            values: self
                .ids
                .iter()
                .zip(&self.values)
                .filter(|(_, v)| !v.is_zero())
                .map(|(id, v)| (id.clone(), fmt_q(v)))
                .collect(),
            exponent: if self.exponent.is_one() { None } else { Some(fmt_q(&self.exponent)) },
        }
    }

    pub fn from_json(j: &PlaneJson) -> Result<PlanePL, PlaneError> {
        let mesh = Mesh::from_json(&j.vertices, &j.faces)?;
        let vals = mesh.values(&j.values)?;
        let f = make_plane_pl(mesh.vertices, mesh.faces, vals)?;
        match &j.exponent {
            Some(p) => f.with_exponent(parse_q(p)?),
            None => Ok(f),
        }
    }
}

/// Vertices and faces without values, as read from JSON.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mesh {
    pub vertices: Vec<(String, Point)>,
    pub faces: Vec<Vec<usize>>,
}

impl Mesh {
    pub fn from_json(vertices: &[PlaneVertexJson], faces: &[Vec<String>]) -> Result<Mesh, PlaneError> {
        let vs = vertices
            .iter()
            .map(|v| Ok((v.id.clone(), (parse_q(&v.x)?, parse_q(&v.y)?))))
            .collect::<Result<Vec<_>, PlaneError>>()?;
        let mesh = Mesh { vertices: vs, faces: Vec::new() };
        let faces = faces.iter().map(|f| f.iter().map(|id| mesh.index(id)).collect()).collect::<Result<_, _>>()?;
        Ok(Mesh { faces, ..mesh })
    }

    pub fn index(&self, id: &str) -> Result<usize, PlaneError> {
        self.vertices.iter().position(|(v, _)| v == id).ok_or_else(|| PlaneError::UnknownVertex(id.to_string()))
    }

    /// Dense value vector; vertices absent from the map get 0.
    pub fn values(&self, map: &BTreeMap<String, String>) -> Result<Vec<Q>, PlaneError> {
        let mut vals = vec![Q::zero(); self.vertices.len()];
        for (k, v) in map {
            vals[self.index(k)?] = parse_q(v)?;
        }
        Ok(vals)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneVertexJson {
    pub id: String,
    pub x: String,
    pub y: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneJson {
    pub domain: String,
    pub vertices: Vec<PlaneVertexJson>,
    pub faces: Vec<Vec<String>>,
    /// Nonzero values only.
    pub values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<String>,
}

/// `a x + b y + c = 0`, scaled so the first nonzero of `a, b` is 1.
type Line = (Q, Q, Q);

fn line_through(p: &Point, q: &Point) -> Line {
    let (a, b) = (&q.1 - &p.1, &p.0 - &q.0);
    let c = -(&a * &p.0 + &b * &p.1);
    let s = if a.is_zero() { b.clone() } else { a.clone() };
    (a / &s, b / &s, c / &s)
}

fn side_lines<'a>(fs: impl Iterator<Item = &'a PlanePL>) -> Vec<Line> {
    let mut set = HashSet::new();
    for f in fs {
        for t in &f.triangles {
            for i in 0..3 {
                set.insert(line_through(&f.points[t[i]], &f.points[t[(i + 1) % 3]]));
            }
        }
    }
    let mut v: Vec<Line> = set.into_iter().collect();
    v.sort();
    v
}

fn line_side(l: &Line, p: &Point) -> Q {
    &l.0 * &p.0 + &l.1 * &p.1 + &l.2
}

/// Both closed halves of a convex polygon, or `None` if the line misses its
/// interior.
fn split_convex(poly: &[Point], l: &Line) -> Option<(Vec<Point>, Vec<Point>)> {
    let s: Vec<Q> = poly.iter().map(|p| line_side(l, p)).collect();
    if !s.iter().any(|v| v.is_positive()) || !s.iter().any(|v| v.is_negative()) {
        return None;
    }
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    let n = poly.len();
    for i in 0..n {
        let j = (i + 1) % n;
        if !s[i].is_negative() {
            pos.push(poly[i].clone());
        }
        if !s[i].is_positive() {
            neg.push(poly[i].clone());
        }
        if (s[i].is_positive() && s[j].is_negative()) || (s[i].is_negative() && s[j].is_positive()) {
            let t = &s[i] / (&s[i] - &s[j]);
            let x = (&poly[i].0 + (&poly[j].0 - &poly[i].0) * &t, &poly[i].1 + (&poly[j].1 - &poly[i].1) * &t);
            pos.push(x.clone());
            neg.push(x);
        }
    }
    Some((pos, neg))
}

fn cut_triangle(f: &PlanePL, t: usize, lines: &[Line]) -> Vec<Vec<Point>> {
    let mut cells = vec![f.triangles[t].iter().map(|&v| f.points[v].clone()).collect::<Vec<_>>()];
    for l in lines {
        let mut next = Vec::with_capacity(cells.len());
        for c in cells {
            match split_convex(&c, l) {
                Some((a, b)) => {
                    next.push(a);
                    next.push(b);
                }
                None => next.push(c),
            }
        }
        cells = next;
    }
    cells
}

/// Clipped cells of a superlevel set, glued along shared points and sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelComplex {
    pub points: Vec<Point>,
    pub edges: Vec<(usize, usize)>,
    /// Counter-clockwise rings of the two-dimensional cells.
    pub cells: Vec<Vec<usize>>,
}

impl LevelComplex {
    /// Sides lying on fewer than two cells.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut count: HashMap<(usize, usize), usize> = self.edges.iter().map(|&e| (e, 0)).collect();
        for c in &self.cells {
            for i in 0..c.len() {
                let (a, b) = (c[i], c[(i + 1) % c.len()]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut out: Vec<(usize, usize)> = count.into_iter().filter(|&(_, n)| n < 2).map(|(e, _)| e).collect();
        out.sort_unstable();
        out
    }

    pub fn area(&self) -> Q {
        let two = Q::from_integer(2.into());
        self.cells.iter().map(|c| signed_area2(&c.iter().map(|&v| self.points[v].clone()).collect::<Vec<_>>()) / &two).sum()
    }
}

/// `{f >= c}` in terms of base values; for exponent `e` this is the
/// superlevel set of the powered function at `c^e`.
pub fn superlevel_complex(f: &PlanePL, c: &Q) -> LevelComplex {
    let mut key: HashMap<Point, usize> = HashMap::new();
    let mut points = Vec::new();
    let mut id = |p: Point, points: &mut Vec<Point>| {
        *key.entry(p.clone()).or_insert_with(|| {
            points.push(p);
            points.len() - 1
        })
    };
    let mut edges = HashSet::new();
    let mut cells = Vec::new();
    for t in &f.triangles {
        let mut ring: Vec<Point> = Vec::new();
        for i in 0..3 {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            let (fa, fb) = (&f.values[a] - c, &f.values[b] - c);
            if !fa.is_negative() {
                ring.push(f.points[a].clone());
            }
            if (fa.is_positive() && fb.is_negative()) || (fa.is_negative() && fb.is_positive()) {
                let s = &fa / (&fa - &fb);
                let (pa, pb) = (&f.points[a], &f.points[b]);
                ring.push((&pa.0 + (&pb.0 - &pa.0) * &s, &pa.1 + (&pb.1 - &pa.1) * &s));
            }
        }
        if ring.is_empty() {
            continue;
        }
        let ids: Vec<usize> = ring.iter().map(|p| id(p.clone(), &mut points)).collect();
        if signed_area2(&ring).is_zero() {
            let mut d = ids.clone();
            d.sort_unstable();
            d.dedup();
            match d.as_slice() {
                [_] => {}
                [a, b] => {
                    edges.insert((*a, *b));
                }
                _ => {
                    // three collinear corners of a clipped triangle cannot occur;
                    // keep the extreme pair
                    let far = d
                        .iter()
                        .flat_map(|&a| d.iter().map(move |&b| (a, b)))
                        .filter(|(a, b)| a < b)
                        .max_by_key(|&(a, b)| {
                            let (p, q) = (&points[a], &points[b]);
                            (&p.0 - &q.0).abs() + (&p.1 - &q.1).abs()
                        })
                        .unwrap();
                    edges.insert(far);
                }
            }
            continue;
        }
        for i in 0..ids.len() {
            let (a, b) = (ids[i], ids[(i + 1) % ids.len()]);
            edges.insert((a.min(b), a.max(b)));
        }
        cells.push(ids);
    }
    let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
    edges.sort_unstable();
    LevelComplex { points, edges, cells }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionStats {
    #[serde(serialize_with = "crate::exact::ser_q")]
    pub level: Q,
    pub components: usize,
    pub euler_characteristic: i64,
    pub nonempty: bool,
    #[serde(serialize_with = "crate::exact::ser_q")]
    pub area: Q,
}

impl RegionStats {
    pub fn holes(&self) -> i64 {
        self.components as i64 - self.euler_characteristic
    }

    pub fn contractible(&self) -> bool {
        self.components == 1 && self.euler_characteristic == 1
    }
}

pub fn superlevel_stats(f: &PlanePL, c: &Q) -> Result<RegionStats, PlaneError> {
    if !c.is_positive() {
        return Err(PlaneError::NonpositiveLevel);
    }
    let lc = superlevel_complex(f, c);
    let components = crate::graph::count_components(lc.points.len(), &lc.edges);
    Ok(RegionStats {
        level: c.clone(),
        components,
        euler_characteristic: lc.points.len() as i64 - lc.edges.len() as i64 + lc.cells.len() as i64,
        nonempty: !lc.points.is_empty(),
        area: lc.area(),
    })
}

/// Distinct positive vertex values and the midpoints below each of them.
/// Superlevel topology only changes at vertex values, so these levels see
/// every homotopy type that occurs.
pub fn critical_levels(f: &PlanePL) -> Vec<Q> {
    let mut vs: Vec<Q> = f.values.iter().filter(|v| v.is_positive()).cloned().collect();
    vs.sort();
    vs.dedup();
    let two = Q::from_integer(2.into());
    let mut out = Vec::with_capacity(2 * vs.len());
    let mut prev = Q::zero();
    for v in vs {
        out.push((&prev + &v) / &two);
        out.push(v.clone());
        prev = v;
    }
    out
}

pub use crate::graph::UnimodalMode;

pub fn is_unimodal_plane(f: &PlanePL, mode: UnimodalMode) -> Result<bool, PlaneError> {
    for c in critical_levels(f) {
        let s = superlevel_stats(f, &c)?;
        let ok = match mode {
            UnimodalMode::Contractible => s.contractible(),
            UnimodalMode::Pi0 => s.components == 1,
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The power `r` such that every function combines linearly on base values,
/// or `None`.
fn linear_power(rule: &Rule) -> Result<Option<Q>, PlaneError> {
    Ok(match rule {
        Rule::Sum => Some(Q::one()),
        Rule::PPower(p) => Some(parse_q(p)?),
        Rule::Max => None,
    })
}

/// Checks `target = rule(summands)` exactly on the common refinement of all
/// meshes. Sums need every function's exponent times `p` to be 1 so that the
/// identity is between PL functions; max needs equal exponents.
pub fn verify_combination_plane(summands: &[PlanePL], rule: &Rule, target: &PlanePL) -> Result<bool, PlaneError> {
    let p = linear_power(rule)?;
    let linear = match &p {
        Some(p) => std::iter::once(target).chain(summands).all(|f| (&f.exponent * p).is_one()),
        None => summands.iter().all(|s| s.exponent == target.exponent),
    };
    if !linear {
        return Err(PlaneError::NonlinearCombination(rule.clone()));
    }
    let is_max = p.is_none();
    // summand vertices outside the target support must carry 0
    let tloc = Locator::new(target);
    for s in summands {
        for (i, pt) in s.points.iter().enumerate() {
            if !s.values[i].is_zero() && tloc.locate(target, pt).is_none() {
                return Ok(false);
            }
        }
    }
    let lines = side_lines(summands.iter());
    let locs: Vec<Locator> = summands.iter().map(Locator::new).collect();
    for t in 0..target.triangles.len() {
        for cell in cut_triangle(target, t, &lines) {
            let n = Q::from_integer((cell.len() as i64).into());
            let centroid = (cell.iter().map(|p| p.0.clone()).sum::<Q>() / &n, cell.iter().map(|p| p.1.clone()).sum::<Q>() / &n);
            let owners: Vec<Option<usize>> = summands.iter().zip(&locs).map(|(s, l)| l.locate(s, &centroid)).collect();
            let value_at = |k: usize, pt: &Point| owners[k].map_or_else(Q::zero, |tri| summands[k].tri_value(tri, pt));
            if is_max {
                // max of affine pieces is affine on the cell only if one piece
                // matches the target throughout
                let tv: Vec<Q> = cell.iter().map(|pt| target.tri_value(t, pt)).collect();
                let mut attained = false;
                for k in 0..summands.len() {
                    let sv: Vec<Q> = cell.iter().map(|pt| value_at(k, pt)).collect();
                    if sv.iter().zip(&tv).any(|(a, b)| a > b) {
                        return Ok(false);
                    }
                    attained |= sv == tv;
                }
                if !attained {
                    return Ok(false);
                }
            } else {
                for pt in &cell {
                    let total: Q = (0..summands.len()).map(|k| value_at(k, pt)).sum();
                    if total != target.tri_value(t, pt) {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeValue {
    pub label: String,
    /// Base value; the function value is `base^exponent`.
    #[serde(serialize_with = "crate::exact::ser_q")]
    pub base: Q,
    #[serde(serialize_with = "crate::exact::ser_q")]
    pub exponent: Q,
}

impl ProbeValue {
    pub fn value(&self) -> Result<Real, NumError> {
        Real::pow_q(&self.base, &self.exponent)
    }
}

pub fn point_probe(f: &PlanePL, pts: &[(String, Point)]) -> Result<Vec<ProbeValue>, PlaneError> {
    pts.iter()
        .map(|(label, p)| {
            let base = f.eval_base(p).ok_or_else(|| PlaneError::OutOfSupport(fmt_q(&p.0), fmt_q(&p.1)))?;
            Ok(ProbeValue { label: label.clone(), base, exponent: f.exponent.clone() })
        })
        .collect()
}

/// Compares a probed value with `bound^exponent` without leaving the base.
pub fn probe_cmp(v: &ProbeValue, bound: &Q) -> Ordering {
    v.base.cmp(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, qi};

    fn verts(ps: &[(i64, i64)]) -> Vec<(String, Point)> {
        ps.iter().enumerate().map(|(i, &(x, y))| (format!("p{i}"), (qi(x), qi(y)))).collect()
    }

    fn vals(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| qi(x)).collect()
    }

    /// 5x5 grid on [0,4]^2, two triangles per unit square.
    fn grid(values: impl Fn(i64, i64) -> i64) -> PlanePL {
        let mut vs = Vec::new();
        let mut val = Vec::new();
        for x in 0..5 {
            for y in 0..5 {
                vs.push((format!("g{x}{y}"), (qi(x), qi(y))));
                val.push(qi(values(x, y)));
            }
        }
        let id = |x: usize, y: usize| 5 * x + y;
        let mut faces = Vec::new();
        for x in 0..4 {
            for y in 0..4 {
                faces.push(vec![id(x, y), id(x + 1, y), id(x + 1, y + 1)]);
                faces.push(vec![id(x, y), id(x + 1, y + 1), id(x, y + 1)]);
            }
        }
        make_plane_pl(vs, faces, val).unwrap()
    }

    #[test]
    fn construction_checks() {
        let sq = verts(&[(0, 0), (1, 0), (1, 1), (0, 1)]);
        let f = make_plane_pl(sq.clone(), vec![vec![0, 1, 2, 3]], vals(&[0, 0, 0, 0])).unwrap();
        assert_eq!(f.eval_base(&(q(1, 2), q(1, 3))), Some(qi(0)));
        assert_eq!(make_plane_pl(sq.clone(), vec![vec![0, 1, 2, 3]], vals(&[0, 0, 0, 1])), Err(PlaneError::NonplanarFaceValues(0)));
        assert_eq!(make_plane_pl(sq.clone(), vec![vec![0, 2, 1, 3]], vals(&[0, 0, 0, 0])), Err(PlaneError::NotSimple(0)));
        assert!(matches!(
            make_plane_pl(sq.clone(), vec![vec![0, 1, 2], vec![0, 1, 3]], vals(&[0, 0, 0, 0])),
            Err(PlaneError::BadTiling(_))
        ));
        let f = make_plane_pl(sq, vec![vec![0, 1, 2], vec![0, 2, 3]], vals(&[0, 0, 0, 0])).unwrap();
        assert_eq!(f.triangles().len(), 2);
    }

    #[test]
    fn t_junction_and_nonconvex_faces() {
        // big triangle below, two small triangles above sharing a midpoint
        let vs = verts(&[(0, 0), (4, 0), (2, 2), (0, 4), (4, 4)]);
        let f = make_plane_pl(vs.clone(), vec![vec![0, 1, 4, 3], vec![2, 4, 3]], vals(&[0, 0, 0, 0, 0]));
        assert!(matches!(f, Err(PlaneError::NotSimple(_)) | Err(PlaneError::BadTiling(_))));
        let vs = verts(&[(0, 0), (4, 0), (2, 0), (2, -2), (2, 2)]);
        // lower triangle 0-3-1 has a side passing through vertex 2
        let f = make_plane_pl(vs, vec![vec![0, 3, 1], vec![0, 2, 4], vec![2, 1, 4]], vals(&[0, 0, 0, 0, 0])).unwrap();
        assert_eq!(f.faces()[0].len(), 4);
        // arrow-shaped quad
        let vs = verts(&[(0, 0), (2, 1), (4, 0), (2, 4)]);
        let f = make_plane_pl(vs, vec![vec![0, 1, 2, 3]], vals(&[0, 0, 0, 0])).unwrap();
        assert_eq!(f.triangles().len(), 2);
        assert_eq!(f.eval_base(&(qi(2), q(1, 2))), None);
        assert_eq!(f.eval_base(&(qi(2), qi(2))), Some(qi(0)));
    }

    #[test]
    fn pyramid_stats() {
        let b = PlanePL::rectangle_bump(&qi(0), &qi(0), &qi(2), &qi(2)).unwrap();
        let s = superlevel_stats(&b, &q(1, 2)).unwrap();
        assert!(s.contractible());
        assert_eq!(s.area, qi(1));
        let top = superlevel_stats(&b, &qi(1)).unwrap();
        assert!(top.contractible() && top.area.is_zero());
        assert!(!superlevel_stats(&b, &qi(2)).unwrap().nonempty);
        assert!(is_unimodal_plane(&b, UnimodalMode::Contractible).unwrap());
        assert_eq!(superlevel_stats(&b, &qi(0)), Err(PlaneError::NonpositiveLevel));
    }

    #[test]
    fn annulus_is_not_unimodal() {
        let ring = grid(|x, y| i64::from((1..=3).contains(&x) && (1..=3).contains(&y) && (x, y) != (2, 2)));
        let s = superlevel_stats(&ring, &q(1, 2)).unwrap();
        assert_eq!((s.components, s.euler_characteristic, s.holes()), (1, 0, 1));
        assert!(!is_unimodal_plane(&ring, UnimodalMode::Contractible).unwrap());
        assert!(is_unimodal_plane(&ring, UnimodalMode::Pi0).unwrap());
        let s = superlevel_stats(&ring, &qi(1)).unwrap();
        assert_eq!((s.components, s.holes()), (1, 1));
        let two = grid(|x, y| i64::from(y == 2 && (x == 1 || x == 3)));
        let s = superlevel_stats(&two, &q(1, 2)).unwrap();
        assert_eq!((s.components, s.euler_characteristic), (2, 2));
        assert!(!is_unimodal_plane(&two, UnimodalMode::Pi0).unwrap());
    }

    #[test]
    fn triangulation_independence() {
        let ring = grid(|x, y| i64::from((1..=3).contains(&x) && (1..=3).contains(&y) && (x, y) != (2, 2)));
        let other = grid(|x, y| i64::from((1..=3).contains(&x) && (1..=3).contains(&y) && (x, y) != (2, 2)));
        let rotated: Vec<Vec<usize>> = other.faces().iter().map(|f| f[1..].iter().chain(&f[..1]).copied().collect()).collect();
        let vs: Vec<(String, Point)> = other.ids().iter().cloned().zip(other.points().iter().cloned()).collect();
        let alt = make_plane_pl(vs, rotated, other.values().to_vec()).unwrap();
        for c in critical_levels(&ring) {
            assert_eq!(superlevel_stats(&ring, &c).unwrap(), superlevel_stats(&alt, &c).unwrap());
        }
    }

    #[test]
    fn combinations() {
        let b = PlanePL::rectangle_bump(&qi(0), &qi(0), &qi(2), &qi(2)).unwrap();
        let tall = grid(|x, y| i64::from((1..=3).contains(&x) && (1..=3).contains(&y)) * 2);
        let hat = PlanePL::rectangle_bump(&qi(1), &qi(1), &qi(3), &qi(3)).unwrap();
        let diff = PlanePL::combine(&[(qi(1), &tall), (qi(-1), &hat)]).unwrap();
        assert_eq!(diff.eval_base(&(qi(2), qi(2))), Some(qi(1)));
        assert_eq!(diff.eval_base(&(q(3, 2), qi(2))), Some(q(3, 2)));
        assert!(verify_combination_plane(&[diff.clone(), hat.clone()], &Rule::Sum, &tall).unwrap());
        assert!(!verify_combination_plane(&[diff.clone(), b.clone()], &Rule::Sum, &tall).unwrap());
        assert!(verify_combination_plane(&[hat.clone(), tall.clone()], &Rule::Max, &tall).unwrap());
        assert!(!verify_combination_plane(&[hat.clone(), diff.clone()], &Rule::Max, &tall).unwrap());
        assert!(matches!(
            PlanePL::combine(&[(qi(1), &hat), (qi(-1), &tall)]),
            Err(PlaneError::NegativeValue(_)) | Err(PlaneError::RefinementMismatch(_))
        ));
        // bump reaching outside the target support
        let wide = PlanePL::rectangle_bump(&qi(-1), &qi(-1), &qi(1), &qi(1)).unwrap();
        assert!(!verify_combination_plane(&[wide], &Rule::Max, &hat).unwrap());
        let root = hat.clone().with_exponent(q(1, 2)).unwrap();
        assert!(verify_combination_plane(std::slice::from_ref(&root), &Rule::PPower("2".into()), &root).unwrap());
        assert!(matches!(verify_combination_plane(std::slice::from_ref(&root), &Rule::Sum, &root), Err(PlaneError::NonlinearCombination(_))));
    }

    #[test]
    fn probes_and_json() {
        let hat = PlanePL::rectangle_bump(&qi(0), &qi(0), &qi(2), &qi(2)).unwrap().with_exponent(q(1, 2)).unwrap();
        let p = point_probe(&hat, &[("c".into(), (qi(1), qi(1))), ("m".into(), (q(1, 2), qi(1)))]).unwrap();
        assert_eq!(p[0].base, qi(1));
        assert_eq!(p[1].base, q(1, 2));
        assert_eq!(probe_cmp(&p[1], &qi(1)), Ordering::Less);
        assert!(matches!(point_probe(&hat, &[("o".into(), (qi(3), qi(3)))]), Err(PlaneError::OutOfSupport(..))));
        let j = hat.to_json(None);
        let back = PlanePL::from_json(&j).unwrap();
        assert_eq!(back, hat);
        let text = serde_json::to_string(&j).unwrap();
        let j2: PlaneJson = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&j2).unwrap(), text);
    }

    #[test]
    fn splitting_faces() {
        let faces = vec![vec![0, 1, 2, 3]];
        let s = split_faces(&faces, &[(0, 2)]).unwrap();
        assert_eq!(s, vec![vec![0, 1, 2], vec![2, 3, 0]]);
        assert_eq!(split_faces(&faces, &[(0, 1)]), Err((0, 1)));
        assert_eq!(split_faces(&faces, &[(0, 5)]), Err((0, 5)));
    }
}
