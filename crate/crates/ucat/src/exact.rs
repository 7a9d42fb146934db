//! Exact scalars.
//!
//! `Q` is an arbitrary precision rational. `Real` is a finite rational
//! combination of radicals `c * p1^(e1) * ... * pk^(ek)` with primes `pi`
//! and exponents in (0, 1). Radical monomials of this shape are linearly
//! independent over the rationals, so equality of two `Real`s is decided
//! symbolically; the sign of a nonzero `Real` is found by interval
//! refinement up to a configurable number of bits.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use num::bigint::Sign;
use num::{BigInt, BigRational, BigUint, Integer, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Q = BigRational;

/// Default cap on interval refinement, in bits after the binary point.
pub const DEFAULT_PRECISION_BITS: u32 = 256;

const TRIAL_DIVISION_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("comparison undecided at {bits} bits of precision")]
    UndecidedComparison { bits: u32 },
    #[error("cannot parse number `{0}`")]
    Parse(String),
    #[error("negative base {0} has no real fractional power")]
    NegativeBase(String),
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `p/q`, an integer, or a finite decimal such as `-1.25`.
pub fn parse_q(s: &str) -> Result<Q, NumError> {
    let t = s.trim();
    let err = || NumError::Parse(s.to_string());
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        let digits = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp);
        let n: BigInt = digits.parse().map_err(|_| err())?;
        let d = num::pow(BigInt::from(10), fp.len());
        let v = Q::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = t.parse().map_err(|_| err())?;
    Ok(Q::from_integer(n))
}

/// Serde hook writing a rational as its `p/q` string.
pub fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

/// `p/q`, or `p` for integers.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Interval refinement cap, overridable through `UCAT_PRECISION_BITS`.
pub fn precision_cap() -> u32 {
    static CAP: OnceLock<u32> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("UCAT_PRECISION_BITS")
            .ok()
            .and_then(|v| v.trim().parse::<u32>().ok())
            .filter(|&b| b >= 8)
            .unwrap_or(DEFAULT_PRECISION_BITS)
    })
}

fn q_floor(x: &Q) -> BigInt {
    x.floor().to_integer()
}

thread_local! {
    static FACTOR_CACHE: RefCell<HashMap<BigUint, Vec<(BigUint, u64)>>> = RefCell::new(HashMap::new());
}

/// Trial division. A cofactor that survives the division limit is kept as
/// one factor; it is prime whenever it is below the square of the limit.
fn factor(n: &BigUint) -> Vec<(BigUint, u64)> {
    if n <= &BigUint::one() {
        return Vec::new();
    }
    if let Some(hit) = FACTOR_CACHE.with(|c| c.borrow().get(n).cloned()) {
        return hit;
    }
    let mut out = Vec::new();
    let mut m = n.clone();
    let mut d: u64 = 2;
    while d <= TRIAL_DIVISION_LIMIT {
        let bd = BigUint::from(d);
        if &bd * &bd > m {
            break;
        }
        let mut k = 0;
        while (&m % &bd).is_zero() {
            m /= &bd;
            k += 1;
        }
        if k > 0 {
            out.push((bd, k));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if m > BigUint::one() {
        out.push((m, 1));
    }
    FACTOR_CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() > 100_000 {
            c.clear();
        }
        c.insert(n.clone(), out.clone());
    });
    out
}

/// Product of `prime^exponent` with every exponent in (0, 1); empty is 1.
pub type Monomial = Vec<(BigUint, Q)>;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Real {
    terms: BTreeMap<Monomial, Q>,
}

impl Real {
    pub fn zero() -> Self {
        Real::default()
    }

    pub fn from_q(x: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !x.is_zero() {
            terms.insert(Vec::new(), x);
        }
        Real { terms }
    }

    /// `base^p` for `base >= 0`, `p > 0`.
    pub fn pow_q(base: &Q, p: &Q) -> Result<Self, NumError> {
        if base.is_negative() {
            return Err(NumError::NegativeBase(fmt_q(base)));
        }
        if base.is_zero() {
            return Ok(Real::zero());
        }
        if p.is_one() {
            return Ok(Real::from_q(base.clone()));
        }
        let mut coeff = Q::one();
        let mut mono: Monomial = Vec::new();
        let mut pieces: Vec<(BigUint, i64)> = Vec::new();
        for (pr, k) in factor(&base.numer().magnitude().clone()) {
            pieces.push((pr, k as i64));
        }
        for (pr, k) in factor(&base.denom().magnitude().clone()) {
            pieces.push((pr, -(k as i64)));
        }
        pieces.sort();
        for (pr, k) in pieces {
            let e = qi(k) * p;
            let fl = q_floor(&e);
            let fr = &e - Q::from_integer(fl.clone());
            let prq = Q::from_integer(BigInt::from_biguint(Sign::Plus, pr.clone()));
            let fl = fl.to_i32().expect("exponent out of range");
            coeff *= prq.pow(fl);
            if !fr.is_zero() {
                mono.push((pr, fr));
            }
        }
        let mut terms = BTreeMap::new();
        terms.insert(mono, coeff);
        Ok(Real { terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_rational(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    /// If `self = b^p` for a rational `b >= 0`, returns `b`.
    pub fn as_power_of(&self, p: &Q) -> Option<Q> {
        if self.is_zero() {
            return Some(Q::zero());
        }
        if self.terms.len() != 1 {
            return None;
        }
        let (mono, c) = self.terms.iter().next().unwrap();
        if c.is_negative() {
            return None;
        }
        let inv = p.recip();
        let mut out = Real::pow_q(c, &inv).ok()?.as_rational()?;
        for (pr, e) in mono {
            let prq = Q::from_integer(BigInt::from_biguint(Sign::Plus, pr.clone()));
            let ex = e * &inv;
            if !ex.is_integer() {
                return None;
            }
            out *= prq.pow(ex.to_integer().to_i32()?);
        }
        Some(out)
    }

    pub fn add(&self, other: &Real) -> Real {
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            let e = terms.entry(m.clone()).or_insert_with(Q::zero);
            *e += c;
            if e.is_zero() {
                terms.remove(m);
            }
        }
        Real { terms }
    }

    pub fn neg(&self) -> Real {
        Real {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Real) -> Real {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &Q) -> Real {
        if k.is_zero() {
            return Real::zero();
        }
        Real {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    /// Enclosure `[lo, hi]` with about `bits` correct binary digits per term.
    pub fn bounds(&self, bits: u32) -> (Q, Q) {
        let mut lo = Q::zero();
        let mut hi = Q::zero();
        for (m, c) in &self.terms {
            let (ml, mh) = monomial_bounds(m, bits);
            if c.is_negative() {
                lo += c * &mh;
                hi += c * &ml;
            } else {
                lo += c * &ml;
                hi += c * &mh;
            }
        }
        (lo, hi)
    }

    pub fn signum(&self) -> Result<Ordering, NumError> {
        if self.terms.is_empty() {
            return Ok(Ordering::Equal);
        }
        let pos = self.terms.values().all(|c| c.is_positive());
        let neg = self.terms.values().all(|c| c.is_negative());
        if pos {
            return Ok(Ordering::Greater);
        }
        if neg {
            return Ok(Ordering::Less);
        }
        let cap = precision_cap();
        let mut bits = 32u32.min(cap);
        loop {
            let (lo, hi) = self.bounds(bits);
            if lo.is_positive() {
                return Ok(Ordering::Greater);
            }
            if hi.is_negative() {
                return Ok(Ordering::Less);
            }
            if bits >= cap {
                return Err(NumError::UndecidedComparison { bits: cap });
            }
            bits = (bits * 2).min(cap);
        }
    }

    pub fn cmp_real(&self, other: &Real) -> Result<Ordering, NumError> {
        self.sub(other).signum()
    }

    pub fn to_f64(&self) -> f64 {
        if let Some(r) = self.as_rational() {
            return q_to_f64(&r);
        }
        let (lo, hi) = self.bounds(64);
        q_to_f64(&((lo + hi) / qi(2)))
    }
}

fn monomial_bounds(m: &Monomial, bits: u32) -> (Q, Q) {
    if m.is_empty() {
        return (Q::one(), Q::one());
    }
    let l = m
        .iter()
        .fold(BigInt::one(), |acc, (_, e)| acc.lcm(e.denom()))
        .to_u32()
        .expect("radical index too large");
    let mut n = BigUint::one();
    for (pr, e) in m {
        let k = (e * Q::from_integer(BigInt::from(l))).to_integer().to_u32().unwrap();
        n *= num::pow(pr.clone(), k as usize);
    }
    let shifted = n << (bits as usize * l as usize);
    let r = shifted.nth_root(l);
    let den = BigInt::one() << bits as usize;
    let lo = Q::new(BigInt::from_biguint(Sign::Plus, r.clone()), den.clone());
    let hi = Q::new(BigInt::from_biguint(Sign::Plus, r + 1u32), den);
    (lo, hi)
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", fmt_q(c))?;
            for (pr, e) in m {
                write!(f, "*{}^({})", pr, fmt_q(e))?;
            }
        }
        Ok(())
    }
}

/// Ordered field-like values used by the sweep and variation routines.
pub trait Exact: Clone + fmt::Debug {
    fn nil() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, k: &Q) -> Self;
    fn cmp_exact(&self, other: &Self) -> Result<Ordering, NumError>;
    fn to_real(&self) -> Real;
}

impl Exact for Q {
    fn nil() -> Self {
        Q::zero()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, k: &Q) -> Self {
        self * k
    }
    fn cmp_exact(&self, other: &Self) -> Result<Ordering, NumError> {
        Ok(self.cmp(other))
    }
    fn to_real(&self) -> Real {
        Real::from_q(self.clone())
    }
}

impl Exact for Real {
    fn nil() -> Self {
        Real::zero()
    }
    fn plus(&self, other: &Self) -> Self {
        Real::add(self, other)
    }
    fn minus(&self, other: &Self) -> Self {
        Real::sub(self, other)
    }
    fn times(&self, k: &Q) -> Self {
        Real::scale(self, k)
    }
    fn cmp_exact(&self, other: &Self) -> Result<Ordering, NumError> {
        self.cmp_real(other)
    }
    fn to_real(&self) -> Real {
        self.clone()
    }
}

/// JSON form: `"p/q"` when rational, `{"base","exponent"}` when the value is
/// a rational raised to `exponent`, otherwise the symbolic form with an
/// approximation.
pub fn real_to_json(x: &Real, exponent: &Q) -> serde_json::Value {
    if let Some(r) = x.as_rational() {
        return serde_json::Value::String(fmt_q(&r));
    }
    if let Some(b) = x.as_power_of(exponent) {
        return serde_json::json!({"base": fmt_q(&b), "exponent": fmt_q(exponent)});
    }
    serde_json::json!({"expr": x.to_string(), "approx": x.to_f64()})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_q("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_q("-4").unwrap(), qi(-4));
        assert_eq!(parse_q("1.5").unwrap(), q(3, 2));
        assert_eq!(parse_q("-0.25").unwrap(), q(-1, 4));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
        assert_eq!(fmt_q(&q(6, 4)), "3/2");
        assert_eq!(fmt_q(&qi(7)), "7");
    }

    #[test]
    fn radicals_cancel_exactly() {
        let h = q(1, 2);
        let r8 = Real::pow_q(&qi(8), &h).unwrap();
        let r2 = Real::pow_q(&qi(2), &h).unwrap();
        // sqrt 8 = 2 sqrt 2
        assert!(r8.sub(&r2.scale(&qi(2))).is_zero());
        // sqrt(1/2) + sqrt(1/2) = sqrt 2
        let rh = Real::pow_q(&h, &h).unwrap();
        assert!(rh.add(&rh).sub(&r2).is_zero());
        // 4^(1/4) = 2^(1/2)
        let r4 = Real::pow_q(&qi(4), &q(1, 4)).unwrap();
        assert!(r4.sub(&r2).is_zero());
    }

    #[test]
    fn signs_by_refinement() {
        let h = q(1, 2);
        // 2 + 1 <= sqrt 3 + sqrt 2
        let lhs = Real::from_q(qi(3));
        let rhs = Real::pow_q(&qi(3), &h).unwrap().add(&Real::pow_q(&qi(2), &h).unwrap());
        assert_eq!(lhs.cmp_real(&rhs).unwrap(), Ordering::Less);
        let x = Real::pow_q(&qi(2), &h).unwrap();
        assert_eq!(x.cmp_real(&Real::from_q(q(141, 100))).unwrap(), Ordering::Greater);
        assert_eq!(x.cmp_real(&Real::from_q(q(142, 100))).unwrap(), Ordering::Less);
    }

    #[test]
    fn power_round_trip() {
        let x = Real::pow_q(&qi(5), &q(1, 2)).unwrap();
        assert_eq!(x.as_power_of(&q(1, 2)), Some(qi(5)));
        let y = Real::pow_q(&q(1, 2), &q(1, 2)).unwrap();
        assert_eq!(y.as_power_of(&q(1, 2)), Some(q(1, 2)));
        assert_eq!(Real::pow_q(&qi(9), &q(3, 2)).unwrap().as_rational(), Some(qi(27)));
        assert!((Real::pow_q(&qi(10), &q(9, 10)).unwrap().to_f64() - 10f64.powf(0.9)).abs() < 1e-9);
    }
}
