//! Forced-max intervals and the sweeping decomposition on the line.
//!
//! The sweep walks the segments of a compactly supported PL profile and keeps
//! the negative variation accumulated since the last sweep point. A new point
//! appears on the first decreasing segment where that accumulation would
//! strictly exceed the value at the previous point; the point sits where it
//! reaches that value exactly.

use std::cmp::Ordering;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{fmt_q, q, Exact, NumError, Real, Q};
use crate::pl_line::{interpolate, DomainKind, ExtremumKind, Interval, PLFunction, PlError, VariationKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SweepError {
    #[error(transparent)]
    Pl(#[from] PlError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("unsupported exponent: {0}")]
    UnsupportedExponent(String),
    #[error("decomposition lacks mode bookkeeping or has fewer than two summands")]
    NotASweepOutput,
    #[error("expected a function on the whole line")]
    NotLine,
}

/// Exponent argument for `ucat_line`; the infinite exponent is not supported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exponent {
    Finite(Q),
    Infinity,
}

impl Exponent {
    pub fn one() -> Self {
        Exponent::Finite(Q::one())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Sum,
    /// `f = (sum s_i^p)^(1/p)`.
    PPower(String),
    Max,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnimodalDecomposition {
    pub summands: Vec<PLFunction>,
    pub rule: Rule,
    /// Closed range where each summand attains its maximum.
    pub mode_points: Option<Vec<(Q, Q)>>,
}

impl UnimodalDecomposition {
    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    pub fn all_unimodal(&self) -> bool {
        self.summands.iter().all(|u| u.is_unimodal())
    }

    /// Checks `sum of summands == f` at every knot of the common refinement
    /// (both sides are linear in between). Exponents are ignored on both sides.
    pub fn sums_to(&self, f: &PLFunction) -> Result<bool, PlError> {
        let mut knots: Vec<Q> = f.breakpoints().to_vec();
        for u in &self.summands {
            knots.extend(u.breakpoints().iter().cloned());
        }
        knots.sort();
        knots.dedup();
        for x in &knots {
            let mut s = Q::zero();
            for u in &self.summands {
                s += eval_or_zero(u, x)?;
            }
            if s != eval_or_zero(f, x)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn eval_or_zero(f: &PLFunction, x: &Q) -> Result<Q, PlError> {
    match f.eval_base(x) {
        Err(PlError::OutOfDomain(_)) => Ok(Q::zero()),
        r => r,
    }
}

/// A sweep point inside segment `seg`, at drop `offset` below the segment's
/// left value, where the function takes `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<V> {
    pub seg: usize,
    pub offset: V,
    pub value: V,
}

/// Sweep over breakpoint values of a compactly supported profile.
pub fn sweep_core<V: Exact>(vs: &[V]) -> Result<Vec<SweepPoint<V>>, NumError> {
    let mut out = Vec::new();
    let mut target = V::nil();
    let mut acc = V::nil();
    for j in 0..vs.len().saturating_sub(1) {
        if vs[j + 1].cmp_exact(&vs[j])? != Ordering::Less {
            continue;
        }
        let drop = vs[j].minus(&vs[j + 1]);
        let reach = acc.plus(&drop);
        if reach.cmp_exact(&target)? == Ordering::Greater {
            let offset = target.minus(&acc);
            let value = vs[j].minus(&offset);
            acc = value.minus(&vs[j + 1]);
            target = value.clone();
            out.push(SweepPoint { seg: j, offset, value });
        } else {
            acc = reach;
        }
    }
    Ok(out)
}

/// Exact position of a sweep point for rational profiles.
pub fn point_position(xs: &[Q], vs: &[Q], p: &SweepPoint<Q>) -> Q {
    let j = p.seg;
    let drop = &vs[j] - &vs[j + 1];
    &xs[j] + &p.offset / drop * (&xs[j + 1] - &xs[j])
}

fn require_line(f: &PLFunction) -> Result<(), SweepError> {
    if f.domain() != DomainKind::Line {
        return Err(SweepError::NotLine);
    }
    Ok(())
}

/// Number of sweep points, using rational arithmetic when possible.
pub fn sweep_count(f: &PLFunction) -> Result<usize, SweepError> {
    require_line(f)?;
    Ok(match f.powered_rational() {
        Some(v) => sweep_core(&v)?.len(),
        None => sweep_core(&f.powered_real()?)?.len(),
    })
}

/// Sweep points `x_1 < ... < x_n`; needs rational powered values.
pub fn sweep_points(f: &PLFunction) -> Result<Vec<Q>, SweepError> {
    require_line(f)?;
    let vs = f
        .powered_rational()
        .ok_or_else(|| SweepError::UnsupportedExponent(fmt_q(f.exponent())))?;
    let pts = sweep_core(&vs)?;
    Ok(pts.iter().map(|p| point_position(f.breakpoints(), &vs, p)).collect())
}

/// Cumulative positive and negative variation at the breakpoints.
fn cumulative(vs: &[Q]) -> (Vec<Q>, Vec<Q>) {
    let mut g = vec![Q::zero()];
    let mut h = vec![Q::zero()];
    for w in vs.windows(2) {
        let d = &w[1] - &w[0];
        let (gl, hl) = (g.last().unwrap().clone(), h.last().unwrap().clone());
        if d.is_positive() {
            g.push(gl + d);
            h.push(hl);
        } else {
            g.push(gl);
            h.push(hl - d);
        }
    }
    (g, h)
}

/// Minimal unimodal decomposition of a line function by sweeping.
///
/// With exponent `p != 1` the sweep runs on the rational values of `f^p`;
/// summands `w_i` are returned with exponent `1/p` under the p-power rule.
pub fn decompose_line(f: &PLFunction) -> Result<UnimodalDecomposition, SweepError> {
    require_line(f)?;
    let p = f.exponent().clone();
    let vs = f
        .powered_rational()
        .ok_or_else(|| SweepError::UnsupportedExponent(fmt_q(&p)))?;
    let xs = f.breakpoints();
    let pts: Vec<Q> = sweep_core(&vs)?.iter().map(|s| point_position(xs, &vs, s)).collect();
    let (g, h) = cumulative(&vs);
    let n = pts.len();
    let lo_end = xs[0].clone();
    let hi_end = xs[xs.len() - 1].clone();
    let mut summands = Vec::with_capacity(n);
    let mut modes = Vec::with_capacity(n);
    for i in 0..n {
        let left = if i == 0 { lo_end.clone() } else { pts[i - 1].clone() };
        let right = if i + 1 == n { hi_end.clone() } else { pts[i + 1].clone() };
        let g0 = interpolate(xs, &g, &left);
        let h1 = interpolate(xs, &h, &right);
        let mut knots = vec![left.clone(), pts[i].clone(), right.clone()];
        knots.extend(xs.iter().filter(|x| **x > left && **x < right).cloned());
        knots.sort();
        knots.dedup();
        let vals: Vec<Q> = knots
            .iter()
            .map(|x| {
                if x <= &pts[i] {
                    interpolate(xs, &g, x) - &g0
                } else {
                    &h1 - interpolate(xs, &h, x)
                }
            })
            .collect();
        let mut u = PLFunction::new(knots, vals, DomainKind::Line)?;
        if !p.is_one() {
            u = u.with_exponent(p.recip())?;
        }
        modes.push(mode_range(&u).unwrap_or((pts[i].clone(), pts[i].clone())));
        summands.push(u);
    }
    let rule = if p.is_one() { Rule::Sum } else { Rule::PPower(fmt_q(&p)) };
    Ok(UnimodalDecomposition { summands, rule, mode_points: Some(modes) })
}

fn mode_range(u: &PLFunction) -> Option<(Q, Q)> {
    u.local_extrema()
        .into_iter()
        .filter(|e| e.kind == ExtremumKind::Max)
        .max_by(|a, b| a.value.cmp(&b.value))
        .map(|e| (e.lo, e.hi))
}

/// Forced-max test with witness `(V-(f;J), f(lo))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedMaxWitness {
    pub holds: bool,
    pub neg_variation: Real,
    pub left_value: Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcedMode {
    Strict,
    Almost,
}

pub fn is_forced_max(f: &PLFunction, j: &Interval, mode: ForcedMode) -> Result<ForcedMaxWitness, SweepError> {
    let vals = f.powered_real()?;
    let nv = f.variation_with(&vals, VariationKind::Negative, j)?;
    let left = match &j.lo {
        None => Real::zero(),
        Some(x) => f.eval_with(&vals, x)?,
    };
    let holds = match nv.cmp_real(&left)? {
        Ordering::Greater => true,
        Ordering::Equal if mode == ForcedMode::Almost => match &j.hi {
            Some(y) => decreasing_right_of(f, y),
            None => false,
        },
        _ => false,
    };
    Ok(ForcedMaxWitness { holds, neg_variation: nv, left_value: left })
}

/// Whether `f` strictly decreases on `(y, y + eps)` for small `eps`.
fn decreasing_right_of(f: &PLFunction, y: &Q) -> bool {
    let xs = f.breakpoints();
    let k = match xs.binary_search(y) {
        Ok(i) => i,
        Err(0) => return false,
        Err(i) => i - 1,
    };
    k + 1 < xs.len() && f.values()[k + 1] < f.values()[k]
}

/// A disjoint family of strict forced-max intervals `(lo, hi)` found by
/// earliest-right-endpoint scheduling over breakpoint and mid-gap endpoints.
/// With `right_cap` every interval must end at or before the cap.
pub fn forced_max_family<V: Exact>(
    f: &PLFunction,
    vals: &[V],
    right_cap: Option<&Q>,
) -> Result<Vec<(Option<Q>, Option<Q>)>, SweepError> {
    let xs = f.breakpoints();
    let mut cands: Vec<Q> = xs.to_vec();
    for w in xs.windows(2) {
        cands.push((&w[0] + &w[1]) * q(1, 2));
    }
    cands.sort();
    let mut ends: Vec<Option<Q>> = cands.iter().cloned().map(Some).collect();
    let mut starts: Vec<Option<Q>> = vec![None];
    starts.extend(cands.iter().cloned().map(Some));
    ends.push(None);
    if let Some(c) = right_cap {
        ends.retain(|e| e.as_ref().is_some_and(|e| e <= c));
    }
    let mut forced: Vec<(Option<Q>, Option<Q>)> = Vec::new();
    for s in &starts {
        for e in &ends {
            if let (Some(a), Some(b)) = (s, e) {
                if a >= b {
                    continue;
                }
            }
            let j = Interval::open(s.clone(), e.clone());
            let nv = f.variation_with(vals, VariationKind::Negative, &j)?;
            let left = match s {
                None => V::nil(),
                Some(x) => f.eval_with(vals, x)?,
            };
            if nv.cmp_exact(&left)? == Ordering::Greater {
                forced.push((s.clone(), e.clone()));
            }
        }
    }
    // None as right end means +inf; sort by right end then pick greedily
    forced.sort_by(|a, b| cmp_hi(&a.1, &b.1));
    let mut chosen: Vec<(Option<Q>, Option<Q>)> = Vec::new();
    for iv in forced {
        let ok = match chosen.last() {
            None => true,
            Some((_, prev_hi)) => match (prev_hi, &iv.0) {
                (None, _) => false,
                (Some(_), None) => false,
                (Some(ph), Some(lo)) => lo >= ph,
            },
        };
        if ok {
            chosen.push(iv);
        }
    }
    Ok(chosen)
}

fn cmp_hi(a: &Option<Q>, b: &Option<Q>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, _) => Ordering::Greater,
        (_, None) => Ordering::Less,
        (Some(x), Some(y)) => x.cmp(y),
    }
}

/// Independent count of disjoint forced-max intervals.
pub fn oracle_m(f: &PLFunction) -> Result<usize, SweepError> {
    require_line(f)?;
    Ok(match f.powered_rational() {
        Some(v) => forced_max_family(f, &v, None)?.len(),
        None => forced_max_family(f, &f.powered_real()?, None)?.len(),
    })
}

/// Unimodal category of a line function, or of an interval function via the
/// hat extension.
pub fn ucat_line(f: &PLFunction, p: &Exponent) -> Result<usize, SweepError> {
    let p = match p {
        Exponent::Finite(p) => p,
        Exponent::Infinity => return Err(SweepError::UnsupportedExponent("inf".into())),
    };
    let g = f.power(p)?;
    match g.domain() {
        DomainKind::Line => sweep_count(&g),
        DomainKind::Interval => Ok(ucat_interval(&g)?.n),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalUcat {
    pub n: usize,
    /// Last summand nondecreasing on the domain and not constant.
    pub last_summand_increasing: bool,
    /// The function is constant, so the single summand is a plateau.
    pub plateau: bool,
    /// Number of sweep points of the hat extension lying left of the right end.
    pub restricted_count: usize,
}

pub fn ucat_interval(f: &PLFunction) -> Result<IntervalUcat, SweepError> {
    let hat = f.extend_hat()?;
    let xs = hat.breakpoints().to_vec();
    let segs: Vec<usize> = match hat.powered_rational() {
        Some(v) => sweep_core(&v)?.iter().map(|p| p.seg).collect(),
        None => sweep_core(&hat.powered_real()?)?.iter().map(|p| p.seg).collect(),
    };
    let one = Q::one();
    let restricted_count = segs.iter().filter(|&&j| xs[j] < one).count();
    let n = segs.len();
    let plateau = f.values().windows(2).all(|w| w[0] == w[1]) && !f.is_identically_zero();
    let reaches_end = n > 0 && xs[segs[n - 1]] >= one;
    Ok(IntervalUcat { n, last_summand_increasing: reaches_end && !plateau, plateau, restricted_count })
}

/// Decomposition of an interval function: sweep the hat extension and restrict
/// the summands back, in the original coordinates.
pub fn decompose_interval(f: &PLFunction) -> Result<UnimodalDecomposition, SweepError> {
    if f.domain() != DomainKind::Interval {
        return Err(PlError::NotInterval.into());
    }
    let d = decompose_line(&f.extend_hat()?)?;
    let a = f.breakpoints()[0].clone();
    let w = &f.breakpoints()[f.len() - 1] - &a;
    let back = |x: &Q| &a + x * &w;
    let mut summands = Vec::new();
    let mut modes = Vec::new();
    for u in &d.summands {
        let r = u.restrict(&Q::zero(), &Q::one())?;
        let xs: Vec<Q> = r.breakpoints().iter().map(back).collect();
        let mut v = PLFunction::new(xs, r.values().to_vec(), DomainKind::Interval)?;
        if !r.exponent().is_one() {
            v = v.with_exponent(r.exponent().clone())?;
        }
        modes.push(mode_range(&v).unwrap_or((a.clone(), a.clone())));
        summands.push(v);
    }
    Ok(UnimodalDecomposition { summands, rule: d.rule, mode_points: Some(modes) })
}

/// Rewrites the last two summands so the second to last vanishes at the right
/// end of the domain; the sum is unchanged.
pub fn normalize_last_two(d: &UnimodalDecomposition) -> Result<UnimodalDecomposition, SweepError> {
    let modes = d.mode_points.as_ref().ok_or(SweepError::NotASweepOutput)?;
    let n = d.summands.len();
    if n < 2 || modes.len() != n {
        return Err(SweepError::NotASweepOutput);
    }
    let un1 = &d.summands[n - 2];
    let un = &d.summands[n - 1];
    let right = un1.breakpoints()[un1.len() - 1].clone();
    let a = modes[n - 2].1.clone();
    let m = un1.eval_base(&a)?;
    let c = un1.eval_base(&right)?;
    if c.is_zero() {
        return Ok(d.clone());
    }
    if c >= m {
        return Err(SweepError::NotASweepOutput);
    }
    let mut knots: Vec<Q> = un1.breakpoints().to_vec();
    knots.extend(un.breakpoints().iter().cloned());
    knots.push(a.clone());
    knots.sort();
    knots.dedup();
    let mut v1 = Vec::with_capacity(knots.len());
    let mut v2 = Vec::with_capacity(knots.len());
    for x in &knots {
        let y1 = un1.eval_base(x)?;
        let y2 = un.eval_base(x)?;
        if x >= &a {
            v1.push(&m * (&y1 - &c) / (&m - &c));
            v2.push(y2 + &c * (&m - &y1) / (&m - &c));
        } else {
            v1.push(y1);
            v2.push(y2);
        }
    }
    let mut out = d.clone();
    let mk = |vals: Vec<Q>, like: &PLFunction| -> Result<PLFunction, PlError> {
        let g = PLFunction::new(knots.clone(), vals, DomainKind::Interval)?;
        if like.exponent().is_one() {
            Ok(g)
        } else {
            g.with_exponent(like.exponent().clone())
        }
    };
    out.summands[n - 2] = mk(v1, un1)?;
    out.summands[n - 1] = mk(v2, un)?;
    let mut new_modes = modes.clone();
    for k in [n - 2, n - 1] {
        if let Some(r) = mode_range(&out.summands[k]) {
            new_modes[k] = r;
        }
    }
    out.mode_points = Some(new_modes);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::qi;
    use crate::pl_line::make_pl;

    fn line(xs: &[i64], vs: &[i64]) -> PLFunction {
        make_pl(xs.iter().map(|&x| qi(x)).collect(), vs.iter().map(|&v| qi(v)).collect(), DomainKind::Line).unwrap()
    }

    fn tent() -> PLFunction {
        line(&[0, 1, 2], &[0, 1, 0])
    }

    fn w_shape() -> PLFunction {
        line(&[0, 1, 2, 3, 4], &[0, 2, 1, 2, 0])
    }

    #[test]
    fn tent_sweeps_once() {
        assert_eq!(sweep_points(&tent()).unwrap(), vec![qi(1)]);
        assert_eq!(oracle_m(&tent()).unwrap(), 1);
        let d = decompose_line(&tent()).unwrap();
        assert_eq!(d.summands.len(), 1);
        assert!(d.sums_to(&tent()).unwrap());
    }

    #[test]
    fn w_shape_points() {
        // after the peak at 1 the drop 2->1 leaves 1 short of f(1)=2; the
        // final descent crosses with offset 1, i.e. halfway down from 3 to 4
        assert_eq!(sweep_points(&w_shape()).unwrap(), vec![qi(1), q(7, 2)]);
        assert_eq!(oracle_m(&w_shape()).unwrap(), 2);
        let d = decompose_line(&w_shape()).unwrap();
        assert!(d.sums_to(&w_shape()).unwrap());
        assert!(d.all_unimodal());
        assert_eq!(d.summands[0].breakpoints(), &[qi(0), qi(1), qi(2), qi(3), q(7, 2)]);
        assert_eq!(d.summands[0].values(), &[qi(0), qi(2), qi(1), qi(1), qi(0)]);
        assert_eq!(d.summands[1].values(), &[qi(0), qi(0), qi(1), qi(1), qi(0)]);
    }

    #[test]
    fn forced_max_examples() {
        let j = Interval::open(Some(qi(0)), Some(qi(2)));
        assert!(is_forced_max(&tent(), &j, ForcedMode::Strict).unwrap().holds);
        let ramp = make_pl(vec![qi(0), qi(1)], vec![qi(0), qi(1)], DomainKind::Interval).unwrap();
        let j = Interval::open(Some(qi(0)), Some(qi(1)));
        assert!(!is_forced_max(&ramp, &j, ForcedMode::Strict).unwrap().holds);
        // V- = 0 = f(0) on (0,1), but the tent falls right after 1
        let j = Interval::open(Some(qi(0)), Some(qi(1)));
        assert!(!is_forced_max(&tent(), &j, ForcedMode::Strict).unwrap().holds);
        assert!(is_forced_max(&tent(), &j, ForcedMode::Almost).unwrap().holds);
    }

    #[test]
    fn interval_reports() {
        let ramp = make_pl(vec![qi(0), qi(1)], vec![qi(0), qi(1)], DomainKind::Interval).unwrap();
        let r = ucat_interval(&ramp).unwrap();
        assert_eq!((r.n, r.last_summand_increasing, r.plateau), (1, true, false));
        let flat = make_pl(vec![qi(0), qi(1)], vec![qi(1), qi(1)], DomainKind::Interval).unwrap();
        let r = ucat_interval(&flat).unwrap();
        assert_eq!((r.n, r.last_summand_increasing, r.plateau), (1, false, true));
    }

    #[test]
    fn normalize_ramp_with_dip() {
        // 2 -> 1 -> 3 on [0,1]: sweeping gives a decreasing summand still
        // positive at 1 followed by an increasing one
        let f = make_pl(vec![qi(0), q(1, 2), qi(1)], vec![qi(2), qi(1), qi(3)], DomainKind::Interval).unwrap();
        let d = decompose_interval(&f).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.sums_to(&f).unwrap());
        let n = normalize_last_two(&d).unwrap();
        assert!(n.sums_to(&f).unwrap());
        assert_eq!(n.summands[0].eval_base(&qi(1)).unwrap(), qi(0));
        assert!(n.summands.iter().all(|u| u.is_unimodal()));
        let vs = n.summands[1].values();
        assert!(vs.windows(2).all(|w| w[0] <= w[1]));
        let none = UnimodalDecomposition { summands: d.summands.clone(), rule: Rule::Sum, mode_points: None };
        assert_eq!(normalize_last_two(&none), Err(SweepError::NotASweepOutput));
    }

    #[test]
    fn infinite_exponent_rejected() {
        assert!(matches!(ucat_line(&tent(), &Exponent::Infinity), Err(SweepError::UnsupportedExponent(_))));
    }

    #[test]
    fn irrational_power_counts() {
        let f = w_shape().power(&q(1, 2)).unwrap();
        assert!(sweep_points(&f).is_err());
        assert_eq!(sweep_count(&f).unwrap(), oracle_m(&f).unwrap());
    }
}
