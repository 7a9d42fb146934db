//! PL functions on the circle, parameterized by `t` in `[0, 1)`.

use num::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scan::ScanReport;
use thiserror::Error;

use crate::exact::{fmt_q, parse_q, qi, Exact, NumError, Real, Q};
use crate::pl_line::{interpolate, DomainKind, ExtremumKind, PLFunction, PlError};
use crate::sweep::{decompose_interval, normalize_last_two, sweep_core, SweepError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircleError {
    #[error("angles must be strictly increasing in [0, 1)")]
    BadAngles,
    #[error("angles and values differ in length or are empty")]
    LengthMismatch,
    #[error("negative value at index {0}")]
    NegativeValue(usize),
    #[error("exponent must be positive")]
    NonpositiveExponent,
    #[error("function has zeros")]
    HasZeros,
    #[error(transparent)]
    Pl(#[from] PlError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CirclePL {
    angles: Vec<Q>,
    values: Vec<Q>,
    exponent: Q,
}

fn frac(x: &Q) -> Q {
    x - x.floor()
}

impl CirclePL {
    pub fn new(angles: Vec<Q>, values: Vec<Q>) -> Result<Self, CircleError> {
        if angles.is_empty() || angles.len() != values.len() {
            return Err(CircleError::LengthMismatch);
        }
        let one = Q::one();
        if angles[0].is_negative() || angles[angles.len() - 1] >= one || angles.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CircleError::BadAngles);
        }
        if let Some(i) = values.iter().position(|v| v.is_negative()) {
            return Err(CircleError::NegativeValue(i));
        }
        Ok(CirclePL { angles, values, exponent: Q::one() })
    }

    pub fn with_exponent(mut self, p: Q) -> Result<Self, CircleError> {
        if !p.is_positive() {
            return Err(CircleError::NonpositiveExponent);
        }
        self.exponent = p;
        Ok(self)
    }

    pub fn angles(&self) -> &[Q] {
        &self.angles
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn exponent(&self) -> &Q {
        &self.exponent
    }

    pub fn power(&self, p: &Q) -> Result<Self, CircleError> {
        let e = &self.exponent * p;
        self.clone().with_exponent(e)
    }

    pub fn has_zero(&self) -> bool {
        self.values.iter().any(|v| v.is_zero())
    }

    /// Rotation by `theta`: the result at `t + theta` equals `self` at `t`.
    pub fn rotate(&self, theta: &Q) -> Self {
        let mut pairs: Vec<(Q, Q)> =
            self.angles.iter().map(|t| frac(&(t + theta))).zip(self.values.iter().cloned()).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let (angles, values) = pairs.into_iter().unzip();
        CirclePL { angles, values, exponent: self.exponent.clone() }
    }

    /// The reflection `t -> -t`.
    pub fn reflect(&self) -> Self {
        let mut pairs: Vec<(Q, Q)> =
            self.angles.iter().map(|t| frac(&-t)).zip(self.values.iter().cloned()).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let (angles, values) = pairs.into_iter().unzip();
        CirclePL { angles, values, exponent: self.exponent.clone() }
    }

    /// Base value at angle `t`.
    pub fn eval_base(&self, t: &Q) -> Q {
        self.eval_with(&self.values, t)
    }

    fn eval_with<V: Exact>(&self, vals: &[V], t: &Q) -> V {
        let (xs, vs) = self.unrolled(vals);
        interpolate(&xs, &vs, &frac(t))
    }

    /// Knots over `[t_0 - 1, t_0 + 1]` so that any `t` in `[0, 1)` lies inside.
    fn unrolled<V: Exact>(&self, vals: &[V]) -> (Vec<Q>, Vec<V>) {
        let k = self.angles.len();
        let mut xs = Vec::with_capacity(2 * k + 1);
        let mut vs = Vec::with_capacity(2 * k + 1);
        for (t, v) in self.angles.iter().zip(vals) {
            xs.push(t - Q::one());
            vs.push(v.clone());
        }
        for (t, v) in self.angles.iter().zip(vals) {
            xs.push(t.clone());
            vs.push(v.clone());
        }
        xs.push(&self.angles[0] + Q::one());
        vs.push(vals[0].clone());
        (xs, vs)
    }

    /// Knots and values of the slice at `a` over `[0, 1]`.
    fn slice_with<V: Exact>(&self, vals: &[V], a: &Q) -> (Vec<Q>, Vec<V>) {
        let mut pts: Vec<(Q, V)> = vec![(Q::zero(), self.eval_with(vals, a))];
        for (t, v) in self.angles.iter().zip(vals) {
            let s = frac(&(t - a));
            if !s.is_zero() {
                pts.push((s, v.clone()));
            }
        }
        pts.push((Q::one(), pts[0].1.clone()));
        pts.sort_by(|x, y| x.0.cmp(&y.0));
        pts.into_iter().unzip()
    }

    /// Slice at `a` as an interval function on `[0, 1]` with base values.
    pub fn slice(&self, a: &Q) -> Result<PLFunction, CircleError> {
        let (xs, vs) = self.slice_with(&self.values, a);
        let f = PLFunction::new(xs, vs, DomainKind::Interval)?;
        Ok(if self.exponent.is_one() { f } else { f.with_exponent(self.exponent.clone())? })
    }

    fn powered_rational(&self) -> Option<Vec<Q>> {
        if self.exponent.is_one() {
            return Some(self.values.clone());
        }
        self.values.iter().map(|v| Real::pow_q(v, &self.exponent).ok()?.as_rational()).collect()
    }

    fn powered_real(&self) -> Result<Vec<Real>, NumError> {
        self.values.iter().map(|v| Real::pow_q(v, &self.exponent)).collect()
    }

    pub fn to_json(&self) -> CircleJson {
        CircleJson {
            domain: "circle".into(),
            angles: self.angles.iter().map(fmt_q).collect(),
            values: self.values.iter().map(fmt_q).collect(),
            exponent: if self.exponent.is_one() { None } else { Some(fmt_q(&self.exponent)) },
        }
    }

    pub fn from_json(j: &CircleJson) -> Result<Self, CircleError> {
        let a = j.angles.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>, _>>()?;
        let v = j.values.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>, _>>()?;
        let f = CirclePL::new(a, v)?;
        match &j.exponent {
            Some(p) => f.with_exponent(parse_q(p)?),
            None => Ok(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleJson {
    pub domain: String,
    pub angles: Vec<String>,
    pub values: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<String>,
}

fn count_before_one<V: Exact>(xs: &[Q], vs: &[V]) -> Result<usize, NumError> {
    let mut hx = vec![qi(-1)];
    hx.extend(xs.iter().cloned());
    hx.push(qi(2));
    let mut hv = vec![V::nil()];
    hv.extend(vs.iter().cloned());
    hv.push(V::nil());
    let one = Q::one();
    Ok(sweep_core(&hv)?.iter().filter(|p| hx[p.seg] < one).count())
}

/// Forced-max count of the hat-extended slice at `a`, restricted to `(-inf, 1]`.
pub fn m_a_plus(f: &CirclePL, a: &Q) -> Result<usize, CircleError> {
    if f.has_zero() {
        return Err(CircleError::HasZeros);
    }
    Ok(match f.powered_rational() {
        Some(v) => {
            let (xs, vs) = f.slice_with(&v, a);
            count_before_one(&xs, &vs)?
        }
        None => {
            let v = f.powered_real()?;
            let (xs, vs) = f.slice_with(&v, a);
            count_before_one(&xs, &vs)?
        }
    })
}

/// Same count for the slice running in the negative direction from `a`.
pub fn m_a_minus(f: &CirclePL, a: &Q) -> Result<usize, CircleError> {
    m_a_plus(&f.reflect(), &frac(&-a))
}

/// Minimum of `m_a_plus` over the breakpoints, with a minimizing angle.
pub fn m_plus(f: &CirclePL) -> Result<(usize, Q), CircleError> {
    let mut best: Option<(usize, Q)> = None;
    for a in &f.angles {
        let m = m_a_plus(f, a)?;
        if best.as_ref().is_none_or(|b| m < b.0) {
            best = Some((m, a.clone()));
        }
    }
    Ok(best.expect("nonempty angle list"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircleUcat {
    pub ucat: usize,
    /// Minimizing slice angle and its count, absent when the function has a zero.
    pub slice: Option<(Q, usize)>,
}

pub fn ucat_circle(f: &CirclePL, p: &Q) -> Result<CircleUcat, CircleError> {
    let g = f.power(p)?;
    if let Some(i) = g.values.iter().position(|v| v.is_zero()) {
        let cut = g.slice(&g.angles[i].clone())?;
        let line = PLFunction::new(cut.breakpoints().to_vec(), cut.values().to_vec(), DomainKind::Line)?
            .with_exponent(g.exponent.clone())?;
        return Ok(CircleUcat { ucat: crate::sweep::sweep_count(&line)?, slice: None });
    }
    let (m, a) = m_plus(&g)?;
    Ok(CircleUcat { ucat: m.max(2), slice: Some((a, m)) })
}

/// Unimodal on the circle: vanishes somewhere and, cut at a zero, has a
/// single maximal plateau.
pub fn is_unimodal_circle(u: &CirclePL) -> bool {
    let Some(i) = u.values.iter().position(|v| v.is_zero()) else {
        return false;
    };
    if u.values.iter().all(|v| v.is_zero()) {
        return false;
    }
    match u.slice(&u.angles[i].clone()) {
        Ok(s) => s.local_extrema().iter().filter(|e| e.kind == ExtremumKind::Max).count() == 1,
        Err(_) => false,
    }
}

/// Whether the base values of the summands add up to `f` everywhere.
pub fn sums_to_circle(summands: &[CirclePL], f: &CirclePL) -> bool {
    let mut knots: Vec<Q> = f.angles.clone();
    for u in summands {
        knots.extend(u.angles.iter().cloned());
    }
    knots.sort();
    knots.dedup();
    knots.iter().all(|t| summands.iter().map(|u| u.eval_base(t)).sum::<Q>() == f.eval_base(t))
}

/// Converts a function on `[0, 1]` sliced at `a` back to the circle.
fn unslice(u: &PLFunction, a: &Q) -> Result<CirclePL, CircleError> {
    let mut pairs: Vec<(Q, Q)> = u
        .breakpoints()
        .iter()
        .zip(u.values())
        .filter(|(t, _)| !t.is_one())
        .map(|(t, v)| (frac(&(t + a)), v.clone()))
        .collect();
    pairs.sort_by(|x, y| x.0.cmp(&y.0));
    pairs.dedup_by(|x, y| x.0 == y.0);
    let (angles, values) = pairs.into_iter().unzip();
    CirclePL::new(angles, values)
}

fn interval_fn(xs: Vec<Q>, vs: Vec<Q>) -> Result<PLFunction, PlError> {
    PLFunction::new(xs, vs, DomainKind::Interval)
}

/// Pointwise combination of two functions on `[0, 1]` on their common knots.
fn combine(
    u: &PLFunction,
    v: &PLFunction,
    extra: &[Q],
    op: impl Fn(&Q, &Q, &Q) -> Q,
) -> Result<PLFunction, PlError> {
    let mut knots: Vec<Q> = u.breakpoints().to_vec();
    knots.extend(v.breakpoints().iter().cloned());
    knots.extend(extra.iter().cloned());
    knots.sort();
    knots.dedup();
    let vals = knots
        .iter()
        .map(|x| Ok(op(x, &u.eval_base(x)?, &v.eval_base(x)?)))
        .collect::<Result<Vec<_>, PlError>>()?;
    interval_fn(knots, vals)
}

fn zero_on_unit() -> PLFunction {
    interval_fn(vec![qi(0), qi(1)], vec![qi(0), qi(0)]).expect("valid")
}

/// Two-summand constructions on a slice with a sweep decomposition of
/// length 2, already normalized so the first summand vanishes at 1.
fn two_from_pair(f: &PLFunction, u1: &PLFunction, u2: &PLFunction) -> Result<Vec<(PLFunction, PLFunction)>, PlError> {
    let mut out = Vec::new();
    let f0 = f.eval_base(&Q::zero())?;
    let xs = u1.breakpoints();
    let vs = u1.values();
    // u1 rising at 0: subtract a ramp on [0, eps], eps = end of the rise
    if vs.len() > 1 && vs[1] > vs[0] {
        let mut k = 1;
        while k + 1 < vs.len() && vs[k + 1] >= vs[k] {
            k += 1;
        }
        let eps = xs[k].clone();
        let ramp = interval_fn(vec![qi(0), eps.clone(), qi(1)], vec![f0.clone(), qi(0), qi(0)])?;
        let t1 = combine(u1, &ramp, &[], |_, a, b| a - b)?;
        let t2 = combine(f, &t1, &[], |_, a, b| a - b)?;
        out.push((t1, t2));
    }
    // u1 decreasing and u2 increasing: fold at the crossing point
    let diff = combine(u1, u2, &[], |_, a, b| a - b)?;
    let (dx, dv) = (diff.breakpoints(), diff.values());
    if let Some(k) = (0..dv.len()).find(|&k| !dv[k].is_positive()) {
        let x0 = if k == 0 || dv[k].is_zero() {
            dx[k].clone()
        } else {
            let t = &dv[k - 1] / (&dv[k - 1] - &dv[k]);
            &dx[k - 1] + t * (&dx[k] - &dx[k - 1])
        };
        let x0c = x0.clone();
        let u = combine(u1, u2, &[x0], move |x, a, b| if x <= &x0c { b * qi(2) } else { a * qi(2) })?;
        let t2 = combine(f, &u, &[], |_, a, b| a - b)?;
        out.push((u, t2));
    }
    Ok(out)
}

/// Candidate two-summand decompositions of the slice at `a`.
fn candidates_at(f: &CirclePL, a: &Q) -> Result<Vec<(CirclePL, CirclePL)>, CircleError> {
    let s = f.slice(a)?;
    let d = decompose_interval(&s)?;
    let mut pairs: Vec<(PLFunction, PLFunction)> = Vec::new();
    match d.len() {
        1 => pairs.push((d.summands[0].clone(), zero_on_unit())),
        2 => {
            let n = normalize_last_two(&d)?;
            pairs.extend(two_from_pair(&s, &n.summands[0], &n.summands[1])?);
        }
        3 => {
            let n = normalize_last_two(&d)?;
            let glued = combine(&n.summands[0], &n.summands[2], &[], |_, a, b| a + b)?;
            pairs.push((glued, n.summands[1].clone()));
        }
        _ => {}
    }
    let mut out = Vec::new();
    for (u, v) in pairs {
        out.push((unslice(&u, a)?, unslice(&v, a)?));
    }
    Ok(out)
}

/// An explicit decomposition into two unimodal summands, when the circle
/// function has unimodal category 2 and rational values.
pub fn decompose_circle_two(f: &CirclePL) -> Result<Option<(CirclePL, CirclePL)>, CircleError> {
    if f.has_zero() || !f.exponent.is_one() {
        return Ok(None);
    }
    let mut tries: Vec<(bool, Q)> = Vec::new();
    for a in &f.angles {
        if m_a_plus(f, a)? <= 2 {
            tries.push((false, a.clone()));
        }
    }
    let r = f.reflect();
    for a in &r.angles {
        if m_a_plus(&r, a)? <= 2 {
            tries.push((true, a.clone()));
        }
    }
    for (reflected, a) in tries {
        let g = if reflected { &r } else { f };
        for (u, v) in candidates_at(g, &a)? {
            let (u, v) = if reflected { (u.reflect(), v.reflect()) } else { (u, v) };
            if is_unimodal_circle(&u) && is_unimodal_circle(&v) && sums_to_circle(&[u.clone(), v.clone()], f) {
                return Ok(Some((u, v)));
            }
        }
    }
    Ok(None)
}

/// Random circle function without zeros on a grid of denominator 12.
pub fn random_circle<R: Rng>(rng: &mut R) -> CirclePL {
    let k = rng.gen_range(2..=7);
    let mut grid: Vec<i64> = (0..12).collect();
    let mut angles: Vec<i64> = Vec::new();
    for _ in 0..k {
        let i = rng.gen_range(0..grid.len());
        angles.push(grid.swap_remove(i));
    }
    angles.sort();
    let angles: Vec<Q> = angles.into_iter().map(|a| Q::new(a.into(), 12.into())).collect();
    let values: Vec<Q> = (0..k).map(|_| Q::new(rng.gen_range(1..=12i64).into(), 2.into())).collect();
    CirclePL::new(angles, values).expect("valid random circle")
}

pub fn monotonicity_scan_circle<R: Rng>(rng: &mut R, trials: usize, p_list: &[Q]) -> Result<ScanReport, CircleError> {
    let mut ps = p_list.to_vec();
    ps.sort();
    let mut violations = 0;
    let mut counterexamples = Vec::new();
    for _ in 0..trials {
        let f = random_circle(rng);
        let counts: Vec<usize> = ps.iter().map(|p| ucat_circle(&f, p).map(|r| r.ucat)).collect::<Result<_, _>>()?;
        if counts.windows(2).any(|w| w[0] > w[1]) {
            violations += 1;
            counterexamples.push(serde_json::to_string(&f.to_json()).unwrap_or_default());
        }
    }
    Ok(ScanReport { kind: "circle".into(), trials, violations, counterexamples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn eight() -> CirclePL {
        let v = [q(4, 1), q(3, 1), q(7, 2), q(3, 1), q(4, 1), q(1, 1), q(3, 1), q(1, 1)];
        CirclePL::new((0..8).map(|j| q(j, 8)).collect(), v.to_vec()).unwrap()
    }

    #[test]
    fn eight_point_pattern() {
        let f = eight();
        let at = |j: i64| m_a_plus(&f, &q(j, 8)).unwrap();
        let mid = |j: i64| m_a_plus(&f, &q(2 * j + 1, 16)).unwrap();
        assert_eq!((0..8).map(at).collect::<Vec<_>>(), vec![3, 2, 2, 3, 3, 2, 2, 3]);
        assert_eq!((0..8).map(mid).collect::<Vec<_>>(), vec![3, 2, 3, 3, 3, 2, 3, 3]);
        assert_eq!(ucat_circle(&f, &Q::one()).unwrap().ucat, 2);
    }

    #[test]
    fn slice_values() {
        let s = eight().slice(&Q::zero()).unwrap();
        let v: Vec<Q> = [8, 6, 7, 6, 8, 2, 6, 2, 8].iter().map(|&n| q(n, 2)).collect();
        assert_eq!(s.values(), v.as_slice());
    }

    #[test]
    fn constant_and_zero_cases() {
        let c = CirclePL::new(vec![qi(0), q(1, 2)], vec![qi(1), qi(1)]).unwrap();
        // the restricted hat rises then stays flat, so no interval is forced-max
        assert_eq!(m_a_plus(&c, &q(1, 3)).unwrap(), 0);
        assert_eq!(ucat_circle(&c, &Q::one()).unwrap().ucat, 2);
        let bump = CirclePL::new(vec![qi(0), q(1, 2)], vec![qi(0), qi(1)]).unwrap();
        assert_eq!(ucat_circle(&bump, &Q::one()).unwrap().ucat, 1);
        assert_eq!(m_a_plus(&bump, &Q::zero()), Err(CircleError::HasZeros));
    }

    #[test]
    fn listed_sequences_decomposition_is_valid() {
        let t: Vec<Q> = (0..8).map(|j| q(j, 8)).collect();
        let u1 = CirclePL::new(t.clone(), [6, 6, 7, 6, 6, 0, 0, 0].iter().map(|&n| q(n, 2)).collect()).unwrap();
        let u2 = CirclePL::new(t, [1, 0, 0, 0, 1, 1, 3, 1].iter().map(|&n| qi(n)).collect()).unwrap();
        assert!(is_unimodal_circle(&u1) && is_unimodal_circle(&u2));
        assert!(sums_to_circle(&[u1, u2], &eight()));
    }

    #[test]
    fn constructed_two_decomposition() {
        let (u, v) = decompose_circle_two(&eight()).unwrap().expect("two summands");
        assert!(is_unimodal_circle(&u) && is_unimodal_circle(&v));
        assert!(sums_to_circle(&[u, v], &eight()));
    }

    #[test]
    fn reflection_and_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let f = random_circle(&mut rng);
            let u = ucat_circle(&f, &Q::one()).unwrap().ucat;
            assert_eq!(ucat_circle(&f.rotate(&q(5, 24)), &Q::one()).unwrap().ucat, u);
            let minus = f.angles().iter().map(|a| m_a_minus(&f, a).unwrap()).min().unwrap();
            assert_eq!(minus.max(2), u);
        }
    }
}
