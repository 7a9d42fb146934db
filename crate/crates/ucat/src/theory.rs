//! Up-down sequences, majorization and the power inequalities behind the
//! monotonicity results.

use std::cmp::Ordering;

use num::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::exact::{fmt_q, NumError, Real, Q};
use crate::pl_line::{Interval, PLFunction};
use crate::sweep::{is_forced_max, ForcedMode, SweepError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error("not an up-down sequence: {0}")]
    NotUpDown(String),
    #[error("sequences differ in length")]
    LengthMismatch,
    #[error("sequence is not sorted in nonincreasing order")]
    NotSorted,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("exponent out of range: {0}")]
    BadExponent(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

/// `a0 <= a1 >= a2 <= ... >= a_2k`, nonnegative, odd length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpDownSeq {
    entries: Vec<Q>,
}

impl UpDownSeq {
    pub fn new(entries: Vec<Q>) -> Result<Self, TheoryError> {
        if entries.len().is_multiple_of(2) {
            return Err(TheoryError::NotUpDown("even length".into()));
        }
        if entries.iter().any(|a| a.is_negative()) {
            return Err(TheoryError::NotUpDown("negative entry".into()));
        }
        for i in 1..entries.len() {
            let ok = if i % 2 == 1 { entries[i] >= entries[i - 1] } else { entries[i] <= entries[i - 1] };
            if !ok {
                return Err(TheoryError::NotUpDown(format!("alternation fails at index {i}")));
            }
        }
        Ok(UpDownSeq { entries })
    }

    pub fn entries(&self) -> &[Q] {
        &self.entries
    }
}

/// Sum of the drops `a_{2i-1} - a_{2i}`.
pub fn neg_variation_seq(a: &UpDownSeq) -> Q {
    let e = &a.entries;
    (1..e.len()).step_by(2).map(|i| &e[i] - &e[i + 1]).sum()
}

fn neg_variation_real(a: &[Real]) -> Real {
    let mut s = Real::zero();
    let mut i = 1;
    while i + 1 < a.len() {
        s = s.add(&a[i].sub(&a[i + 1]));
        i += 2;
    }
    s
}

/// Entrywise power; stays an up-down sequence since `t -> t^q` is increasing.
pub fn seq_power(a: &UpDownSeq, q: &Q) -> Result<Vec<Real>, TheoryError> {
    if !q.is_positive() {
        return Err(TheoryError::BadExponent(fmt_q(q)));
    }
    Ok(a.entries.iter().map(|x| Real::pow_q(x, q)).collect::<Result<_, _>>()?)
}

fn check_sorted(a: &[Q]) -> Result<(), TheoryError> {
    if a.windows(2).any(|w| w[0] < w[1]) {
        return Err(TheoryError::NotSorted);
    }
    Ok(())
}

/// Prefix-sum dominance with equal totals, both inputs nonincreasing.
pub fn majorizes(a: &[Q], b: &[Q]) -> Result<bool, TheoryError> {
    if a.len() != b.len() {
        return Err(TheoryError::LengthMismatch);
    }
    check_sorted(a)?;
    check_sorted(b)?;
    let (mut sa, mut sb) = (Q::zero(), Q::zero());
    for (x, y) in a.iter().zip(b) {
        sa += x;
        sb += y;
        if sa < sb {
            return Ok(false);
        }
    }
    Ok(sa == sb)
}

/// `sum a_i^q >= sum b_i^q` for `q >= 1`, reversed for `0 < q < 1`.
pub fn karamata_check(a: &[Q], b: &[Q], q: &Q) -> Result<bool, TheoryError> {
    if !q.is_positive() {
        return Err(TheoryError::BadExponent(fmt_q(q)));
    }
    if !majorizes(a, b)? {
        return Err(TheoryError::PreconditionViolated("first sequence does not majorize the second".into()));
    }
    let sum = |v: &[Q]| -> Result<Real, NumError> {
        v.iter().try_fold(Real::zero(), |s, x| Ok(s.add(&Real::pow_q(x, q)?)))
    };
    let ord = sum(a)?.cmp_real(&sum(b)?)?;
    Ok(if q >= &Q::one() { ord != Ordering::Less } else { ord != Ordering::Greater })
}

/// `V-(a^q) <= a0^q` whenever `V-(a) <= a0` and `0 < q < 1`.
pub fn lemma_updown_check(a: &UpDownSeq, q: &Q) -> Result<bool, TheoryError> {
    if !q.is_positive() || q >= &Q::one() {
        return Err(TheoryError::BadExponent(fmt_q(q)));
    }
    let v = neg_variation_seq(a);
    if v > a.entries[0] {
        return Err(TheoryError::PreconditionViolated(format!("V- = {} exceeds a0 = {}", fmt_q(&v), fmt_q(&a.entries[0]))));
    }
    let p = seq_power(a, q)?;
    Ok(neg_variation_real(&p).cmp_real(&p[0])? != Ordering::Greater)
}

fn rand_q<R: Rng>(rng: &mut R, num_max: i64, den_max: i64) -> Q {
    Q::new(rng.gen_range(0..=num_max).into(), rng.gen_range(1..=den_max).into())
}

/// Random sequence with `V-(a) <= a0`: drops are drawn first and then scaled
/// so their total is `a0` times a margin that is exactly 1 in a third of the
/// cases.
pub fn random_updown<R: Rng>(rng: &mut R) -> UpDownSeq {
    let k = rng.gen_range(0..=4usize);
    let a0 = Q::new(rng.gen_range(1..=24i64).into(), rng.gen_range(1..=4i64).into());
    let mut drops: Vec<Q> = (0..k).map(|_| Q::new(rng.gen_range(1..=12i64).into(), 1.into())).collect();
    let total: Q = drops.iter().cloned().sum();
    if k > 0 {
        let margin = if rng.gen_range(0..3) == 0 { Q::one() } else { Q::new(rng.gen_range(1..=9i64).into(), 10.into()) };
        let scale = &a0 * margin / total;
        for d in drops.iter_mut() {
            *d = &*d * &scale;
        }
    }
    let mut e = vec![a0];
    for d in drops {
        let prev = e[e.len() - 1].clone();
        let peak = if prev > d { prev } else { d.clone() } + rand_q(rng, 6, 3);
        let low = &peak - d;
        e.push(peak);
        e.push(low);
    }
    UpDownSeq::new(e).expect("construction alternates")
}

/// A nonincreasing `b` and an `a` majorizing it, built by moving mass from
/// smaller to larger entries.
pub fn random_majorizing_pair<R: Rng>(rng: &mut R) -> (Vec<Q>, Vec<Q>) {
    let n = rng.gen_range(2..=5usize);
    let mut b: Vec<Q> = (0..n).map(|_| rand_q(rng, 12, 3)).collect();
    b.sort_by(|x, y| y.cmp(x));
    let mut a = b.clone();
    for _ in 0..rng.gen_range(0..=3) {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if a[i] >= a[j] && i != j {
            let t = &a[j] * Q::new(rng.gen_range(0..=4i64).into(), 4.into());
            a[i] += &t;
            a[j] -= &t;
        }
    }
    a.sort_by(|x, y| y.cmp(x));
    (a, b)
}

/// Forced-max intervals of `f` stay forced-max for `f^p` with `p > 1`.
pub fn bridge_check(f: &PLFunction, j: &Interval, p: &Q) -> Result<bool, TheoryError> {
    if !is_forced_max(f, j, ForcedMode::Strict)?.holds {
        return Ok(true);
    }
    Ok(is_forced_max(&f.power(p).map_err(SweepError::from)?, j, ForcedMode::Strict)?.holds)
}
