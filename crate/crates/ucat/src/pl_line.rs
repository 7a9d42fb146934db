//! Piecewise-linear functions on the line and on closed intervals.

use std::cmp::Ordering;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{fmt_q, parse_q, qi, Exact, NumError, Real, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlError {
    #[error("breakpoints must be strictly increasing (index {0})")]
    NonMonotoneBreakpoints(usize),
    #[error("negative value at index {0}")]
    NegativeValue(usize),
    #[error("a function on the whole line must vanish at its first and last breakpoint")]
    SupportViolation,
    #[error("breakpoints and values differ in length or are empty")]
    LengthMismatch,
    #[error("an interval function needs at least two breakpoints")]
    DegenerateInterval,
    #[error("point {0} lies outside the domain")]
    OutOfDomain(String),
    #[error("empty interval")]
    EmptyInterval,
    #[error("exponent must be positive, got {0}")]
    NonpositiveExponent(String),
    #[error("operation needs an interval-domain function")]
    NotInterval,
    #[error("operation needs rational values; exponent {0} gives irrational ones")]
    IrrationalValues(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Line,
    Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationKind {
    Total,
    Positive,
    Negative,
}

/// Interval with optional infinite ends. Open and closed ends give the same
/// variation for continuous functions; the flags are kept for certificates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Option<Q>,
    pub hi: Option<Q>,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: Option<Q>, hi: Option<Q>) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn closed(lo: Q, hi: Q) -> Self {
        Interval { lo: Some(lo), hi: Some(hi), lo_closed: true, hi_closed: true }
    }

    pub fn whole() -> Self {
        Interval::open(None, None)
    }

    pub fn is_empty(&self) -> bool {
        match (&self.lo, &self.hi) {
            (Some(a), Some(b)) => a > b || (a == b && !(self.lo_closed && self.hi_closed)),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Min,
    Max,
}

/// A local extremum; plateaus are reported by their closed position range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extremum {
    pub lo: Q,
    pub hi: Q,
    pub value: Q,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLFunction {
    breakpoints: Vec<Q>,
    values: Vec<Q>,
    domain: DomainKind,
    exponent: Q,
}

pub fn make_pl(breakpoints: Vec<Q>, values: Vec<Q>, domain: DomainKind) -> Result<PLFunction, PlError> {
    PLFunction::new(breakpoints, values, domain)
}

impl PLFunction {
    pub fn new(breakpoints: Vec<Q>, values: Vec<Q>, domain: DomainKind) -> Result<Self, PlError> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(PlError::LengthMismatch);
        }
        if let Some(i) = (1..breakpoints.len()).find(|&i| breakpoints[i] <= breakpoints[i - 1]) {
            return Err(PlError::NonMonotoneBreakpoints(i));
        }
        if let Some(i) = values.iter().position(|v| v.is_negative()) {
            return Err(PlError::NegativeValue(i));
        }
        match domain {
            DomainKind::Line => {
                if !values[0].is_zero() || !values[values.len() - 1].is_zero() {
                    return Err(PlError::SupportViolation);
                }
            }
            DomainKind::Interval => {
                if breakpoints.len() < 2 {
                    return Err(PlError::DegenerateInterval);
                }
            }
        }
        Ok(PLFunction { breakpoints, values, domain, exponent: Q::one() })
    }

    pub fn with_exponent(mut self, p: Q) -> Result<Self, PlError> {
        if !p.is_positive() {
            return Err(PlError::NonpositiveExponent(fmt_q(&p)));
        }
        self.exponent = p;
        Ok(self)
    }

    /// Identically zero function on the line.
    pub fn zero() -> Self {
        PLFunction {
            breakpoints: vec![Q::zero()],
            values: vec![Q::zero()],
            domain: DomainKind::Line,
            exponent: Q::one(),
        }
    }

    pub fn breakpoints(&self) -> &[Q] {
        &self.breakpoints
    }

    /// Base values; the function value at a breakpoint is `value^exponent`.
    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    pub fn exponent(&self) -> &Q {
        &self.exponent
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    /// Values at the breakpoints after applying the exponent.
    pub fn powered_real(&self) -> Result<Vec<Real>, PlError> {
        Ok(self
            .values
            .iter()
            .map(|v| Real::pow_q(v, &self.exponent))
            .collect::<Result<_, _>>()?)
    }

    /// Powered values when all of them are rational.
    pub fn powered_rational(&self) -> Option<Vec<Q>> {
        if self.exponent.is_one() {
            return Some(self.values.clone());
        }
        if self.exponent.is_integer() {
            let k: i32 = self.exponent.to_integer().try_into().ok()?;
            return Some(self.values.iter().map(|v| v.pow(k)).collect());
        }
        self.values
            .iter()
            .map(|v| Real::pow_q(v, &self.exponent).ok()?.as_rational())
            .collect()
    }

    /// The same function with the exponent folded into rational values.
    pub fn rationalized(&self) -> Result<PLFunction, PlError> {
        let vals = self
            .powered_rational()
            .ok_or_else(|| PlError::IrrationalValues(fmt_q(&self.exponent)))?;
        Ok(PLFunction {
            breakpoints: self.breakpoints.clone(),
            values: vals,
            domain: self.domain,
            exponent: Q::one(),
        })
    }

    pub fn eval(&self, x: &Q) -> Result<Real, PlError> {
        let vals = self.powered_real()?;
        self.eval_with(&vals, x)
    }

    /// Evaluation of the base function (exponent ignored).
    pub fn eval_base(&self, x: &Q) -> Result<Q, PlError> {
        self.eval_with(&self.values, x)
    }

    pub(crate) fn eval_with<V: Exact>(&self, vals: &[V], x: &Q) -> Result<V, PlError> {
        let xs = &self.breakpoints;
        let n = xs.len();
        if x < &xs[0] || x > &xs[n - 1] {
            return match self.domain {
                DomainKind::Line => Ok(V::nil()),
                DomainKind::Interval => Err(PlError::OutOfDomain(fmt_q(x))),
            };
        }
        Ok(interpolate(xs, vals, x))
    }

    pub fn variation(&self, kind: VariationKind, j: &Interval) -> Result<Real, PlError> {
        let vals = self.powered_real()?;
        self.variation_with(&vals, kind, j)
    }

    /// Variation of the base function (exponent ignored).
    pub fn variation_base(&self, kind: VariationKind, j: &Interval) -> Result<Q, PlError> {
        self.variation_with(&self.values, kind, j)
    }

    pub(crate) fn variation_with<V: Exact>(
        &self,
        vals: &[V],
        kind: VariationKind,
        j: &Interval,
    ) -> Result<V, PlError> {
        if j.is_empty() {
            return Err(PlError::EmptyInterval);
        }
        let xs = &self.breakpoints;
        let n = xs.len();
        let lo = match &j.lo {
            Some(a) if a > &xs[0] => a.clone(),
            _ => xs[0].clone(),
        };
        let hi = match &j.hi {
            Some(b) if b < &xs[n - 1] => b.clone(),
            _ => xs[n - 1].clone(),
        };
        if lo > hi {
            return match self.domain {
                DomainKind::Line => Ok(V::nil()),
                DomainKind::Interval => Err(PlError::EmptyInterval),
            };
        }
        let mut pts: Vec<V> = vec![interpolate(xs, vals, &lo)];
        for (x, v) in xs.iter().zip(vals) {
            if x > &lo && x < &hi {
                pts.push(v.clone());
            }
        }
        pts.push(interpolate(xs, vals, &hi));
        let mut up = V::nil();
        let mut down = V::nil();
        for w in pts.windows(2) {
            match w[1].cmp_exact(&w[0])? {
                Ordering::Greater => up = up.plus(&w[1].minus(&w[0])),
                Ordering::Less => down = down.plus(&w[0].minus(&w[1])),
                Ordering::Equal => {}
            }
        }
        Ok(match kind {
            VariationKind::Positive => up,
            VariationKind::Negative => down,
            VariationKind::Total => up.plus(&down),
        })
    }

    pub fn power(&self, p: &Q) -> Result<PLFunction, PlError> {
        if !p.is_positive() {
            return Err(PlError::NonpositiveExponent(fmt_q(p)));
        }
        let mut g = self.clone();
        g.exponent = &self.exponent * p;
        Ok(g)
    }

    /// Affinely reparameterizes an interval function onto [0, 1].
    pub fn normalized(&self) -> Result<PLFunction, PlError> {
        if self.domain != DomainKind::Interval {
            return Err(PlError::NotInterval);
        }
        let a = self.breakpoints[0].clone();
        let w = &self.breakpoints[self.len() - 1] - &a;
        let mut g = self.clone();
        g.breakpoints = self.breakpoints.iter().map(|x| (x - &a) / &w).collect();
        Ok(g)
    }

    /// Extension to the line: rises linearly on [-1, 0], equals the
    /// normalized function on [0, 1], falls linearly on [1, 2].
    pub fn extend_hat(&self) -> Result<PLFunction, PlError> {
        let g = self.normalized()?;
        let mut xs = Vec::with_capacity(g.len() + 2);
        let mut vs = Vec::with_capacity(g.len() + 2);
        xs.push(qi(-1));
        vs.push(Q::zero());
        xs.extend(g.breakpoints.iter().cloned());
        vs.extend(g.values.iter().cloned());
        xs.push(qi(2));
        vs.push(Q::zero());
        Ok(PLFunction { breakpoints: xs, values: vs, domain: DomainKind::Line, exponent: self.exponent.clone() })
    }

    /// Restriction to `[lo, hi]` as an interval function.
    pub fn restrict(&self, lo: &Q, hi: &Q) -> Result<PLFunction, PlError> {
        if lo >= hi {
            return Err(PlError::EmptyInterval);
        }
        let mut xs = vec![lo.clone()];
        let mut vs = vec![self.eval_base(lo)?];
        for (x, v) in self.breakpoints.iter().zip(&self.values) {
            if x > lo && x < hi {
                xs.push(x.clone());
                vs.push(v.clone());
            }
        }
        xs.push(hi.clone());
        vs.push(self.eval_base(hi)?);
        Ok(PLFunction { breakpoints: xs, values: vs, domain: DomainKind::Interval, exponent: self.exponent.clone() })
    }

    /// Alternating minima and maxima with plateaus merged. On the line the
    /// zero regions towards infinity are not reported.
    pub fn local_extrema(&self) -> Vec<Extremum> {
        let runs = plateau_runs(&self.breakpoints, &self.values);
        let m = runs.len();
        let mut out = Vec::new();
        for (i, (lo, hi, v)) in runs.iter().enumerate() {
            let left = if i > 0 { Some(&runs[i - 1].2) } else { None };
            let right = runs.get(i + 1).map(|r| &r.2);
            if self.domain == DomainKind::Line && (i == 0 || i + 1 == m) {
                continue;
            }
            let above = |o: Option<&Q>| o.is_none_or(|o| v > o);
            let below = |o: Option<&Q>| o.is_none_or(|o| v < o);
            let kind = if m == 1 || (above(left) && above(right)) {
                ExtremumKind::Max
            } else if below(left) && below(right) {
                ExtremumKind::Min
            } else {
                continue;
            };
            out.push(Extremum { lo: lo.clone(), hi: hi.clone(), value: v.clone(), kind });
        }
        out
    }

    /// One maximal plateau and not identically zero.
    pub fn is_unimodal(&self) -> bool {
        !self.is_identically_zero()
            && self.local_extrema().iter().filter(|e| e.kind == ExtremumKind::Max).count() == 1
    }

    pub fn to_json(&self) -> PlJson {
        PlJson {
            domain: self.domain,
            breakpoints: self.breakpoints.iter().map(fmt_q).collect(),
            values: self.values.iter().map(fmt_q).collect(),
            exponent: if self.exponent.is_one() { None } else { Some(fmt_q(&self.exponent)) },
        }
    }

    pub fn from_json(j: &PlJson) -> Result<Self, PlError> {
        let xs = j.breakpoints.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>, _>>()?;
        let vs = j.values.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>, _>>()?;
        let f = PLFunction::new(xs, vs, j.domain)?;
        match &j.exponent {
            Some(p) => f.with_exponent(parse_q(p)?),
            None => Ok(f),
        }
    }
}

/// Linear interpolation inside `[xs[0], xs[last]]`.
pub(crate) fn interpolate<V: Exact>(xs: &[Q], vals: &[V], x: &Q) -> V {
    let k = match xs.binary_search(x) {
        Ok(i) => return vals[i].clone(),
        Err(i) => i,
    };
    if k == 0 {
        return vals[0].clone();
    }
    if k >= xs.len() {
        return vals[xs.len() - 1].clone();
    }
    let t = (x - &xs[k - 1]) / (&xs[k] - &xs[k - 1]);
    vals[k - 1].plus(&vals[k].minus(&vals[k - 1]).times(&t))
}

/// Maximal runs of equal consecutive values as (start, end, value).
fn plateau_runs(xs: &[Q], vs: &[Q]) -> Vec<(Q, Q, Q)> {
    let mut runs: Vec<(Q, Q, Q)> = Vec::new();
    for (x, v) in xs.iter().zip(vs) {
        match runs.last_mut() {
            Some(r) if &r.2 == v => r.1 = x.clone(),
            _ => runs.push((x.clone(), x.clone(), v.clone())),
        }
    }
    runs
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlJson {
    pub domain: DomainKind,
    pub breakpoints: Vec<String>,
    pub values: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    fn line(xs: &[i64], vs: &[i64]) -> PLFunction {
        make_pl(xs.iter().map(|&x| qi(x)).collect(), vs.iter().map(|&v| qi(v)).collect(), DomainKind::Line).unwrap()
    }

    #[test]
    fn construction_errors() {
        assert_eq!(make_pl(vec![qi(0), qi(1)], vec![qi(1), qi(0)], DomainKind::Line), Err(PlError::SupportViolation));
        assert_eq!(
            make_pl(vec![qi(0), qi(0)], vec![qi(0), qi(0)], DomainKind::Line),
            Err(PlError::NonMonotoneBreakpoints(1))
        );
        assert_eq!(
            make_pl(vec![qi(0), qi(1), qi(2)], vec![qi(0), qi(-1), qi(0)], DomainKind::Line),
            Err(PlError::NegativeValue(1))
        );
        // collinear breakpoints survive
        let f = line(&[0, 1, 2, 3], &[0, 1, 2, 0]);
        assert_eq!(f.len(), 4);
    }

    #[test]
    fn tent_eval() {
        let f = line(&[0, 1, 2], &[0, 1, 0]);
        assert_eq!(f.eval(&q(1, 2)).unwrap().as_rational(), Some(q(1, 2)));
        assert_eq!(f.eval(&qi(5)).unwrap().as_rational(), Some(qi(0)));
        let g = make_pl(vec![qi(0), qi(1)], vec![qi(0), qi(1)], DomainKind::Interval).unwrap();
        assert!(matches!(g.eval(&qi(2)), Err(PlError::OutOfDomain(_))));
    }

    #[test]
    fn tent_variation_and_power() {
        let f = line(&[0, 1, 2], &[0, 1, 0]);
        let j = Interval::closed(qi(0), qi(2));
        assert_eq!(f.variation(VariationKind::Negative, &j).unwrap().as_rational(), Some(qi(1)));
        assert_eq!(f.variation(VariationKind::Total, &j).unwrap().as_rational(), Some(qi(2)));
        let t4 = line(&[0, 1, 2], &[0, 4, 0]).power(&q(1, 2)).unwrap();
        assert_eq!(t4.eval(&qi(1)).unwrap().as_rational(), Some(qi(2)));
        assert!(f.power(&qi(0)).is_err());
        assert_eq!(f.power(&qi(1)).unwrap(), f);
        let e = Interval { lo: Some(qi(2)), hi: Some(qi(1)), lo_closed: true, hi_closed: true };
        assert_eq!(f.variation(VariationKind::Total, &e), Err(PlError::EmptyInterval));
    }

    #[test]
    fn hat_extension() {
        let id = make_pl(vec![qi(0), qi(1)], vec![qi(0), qi(1)], DomainKind::Interval).unwrap();
        let h = id.extend_hat().unwrap();
        assert_eq!(h.breakpoints(), &[qi(-1), qi(0), qi(1), qi(2)]);
        assert_eq!(h.values(), &[qi(0), qi(0), qi(1), qi(0)]);
        let c = make_pl(vec![qi(3), qi(5)], vec![qi(1), qi(1)], DomainKind::Interval).unwrap();
        let h = c.extend_hat().unwrap();
        assert_eq!(h.breakpoints(), &[qi(-1), qi(0), qi(1), qi(2)]);
        assert_eq!(h.values(), &[qi(0), qi(1), qi(1), qi(0)]);
        assert!(line(&[0, 1, 2], &[0, 1, 0]).extend_hat().is_err());
    }

    #[test]
    fn extrema_merge_plateaus() {
        let w = line(&[0, 1, 2, 3, 4], &[0, 2, 1, 2, 0]);
        let ex = w.local_extrema();
        let kinds: Vec<_> = ex.iter().map(|e| (e.lo.clone(), e.kind)).collect();
        assert_eq!(
            kinds,
            vec![(qi(1), ExtremumKind::Max), (qi(2), ExtremumKind::Min), (qi(3), ExtremumKind::Max)]
        );
        let plat = line(&[0, 1, 2, 3], &[0, 2, 2, 0]);
        let ex = plat.local_extrema();
        assert_eq!(ex.len(), 1);
        assert_eq!((ex[0].lo.clone(), ex[0].hi.clone()), (qi(1), qi(2)));
        assert!(plat.is_unimodal());
        assert!(!w.is_unimodal());
    }

    #[test]
    fn json_round_trip() {
        let f = line(&[0, 1, 2], &[0, 1, 0]).power(&q(1, 2)).unwrap();
        let j = f.to_json();
        let s = serde_json::to_string(&j).unwrap();
        let back: PlJson = serde_json::from_str(&s).unwrap();
        assert_eq!(PLFunction::from_json(&back).unwrap(), f);
    }
}
