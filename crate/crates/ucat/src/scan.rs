//! Randomized property scans shared by the CLI and the acceptance suite.

use num::One;
use rand::Rng;
use serde::Serialize;

use crate::exact::{fmt_q, Q};
use crate::pl_line::{DomainKind, PLFunction};
use crate::sweep::{sweep_count, SweepError};
use crate::theory::{lemma_updown_check, neg_variation_seq, random_updown, TheoryError};

/// Outcome of a randomized monotonicity scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanReport {
    pub kind: String,
    pub trials: usize,
    pub violations: usize,
    pub counterexamples: Vec<String>,
}

/// Random compactly supported line function with at most `max_len`
/// breakpoints and small rational values.
pub fn random_line<R: Rng>(rng: &mut R, max_len: usize) -> PLFunction {
    let k = rng.gen_range(3..=max_len.max(3));
    let mut x = Q::from_integer(rng.gen_range(-3i64..=3).into());
    let mut xs = Vec::with_capacity(k);
    let mut vs = Vec::with_capacity(k);
    for i in 0..k {
        xs.push(x.clone());
        let v = if i == 0 || i + 1 == k { 0 } else { rng.gen_range(0..=8i64) };
        vs.push(Q::new(v.into(), rng.gen_range(1..=2i64).into()));
        x += Q::new(rng.gen_range(1..=4i64).into(), rng.gen_range(1..=2i64).into());
    }
    PLFunction::new(xs, vs, DomainKind::Line).expect("valid random line function")
}

fn describe(f: &PLFunction) -> String {
    serde_json::to_string(&f.to_json()).unwrap_or_default()
}

/// `ucat(f^p1) <= ucat(f^p2)` for consecutive exponents in increasing order.
pub fn monotonicity_scan_line<R: Rng>(rng: &mut R, trials: usize, p_list: &[Q]) -> Result<ScanReport, SweepError> {
    let mut ps = p_list.to_vec();
    ps.sort();
    let mut violations = 0;
    let mut counterexamples = Vec::new();
    for _ in 0..trials {
        let f = random_line(rng, 14);
        let counts: Vec<usize> =
            ps.iter().map(|p| sweep_count(&f.power(p)?)).collect::<Result<_, SweepError>>()?;
        if counts.windows(2).any(|w| w[0] > w[1]) {
            violations += 1;
            counterexamples.push(format!("{} counts {:?} for p {:?}", describe(&f), counts, ps.iter().map(fmt_q).collect::<Vec<_>>()));
        }
    }
    Ok(ScanReport { kind: "line".into(), trials, violations, counterexamples })
}

/// Up-down inequality on random sequences meeting its precondition.
pub fn updown_scan<R: Rng>(rng: &mut R, trials: usize, q_list: &[Q]) -> Result<ScanReport, TheoryError> {
    let mut violations = 0;
    let mut counterexamples = Vec::new();
    for _ in 0..trials {
        let a = random_updown(rng);
        debug_assert!(neg_variation_seq(&a) <= a.entries()[0]);
        for q in q_list.iter().filter(|q| **q < Q::one()) {
            if !lemma_updown_check(&a, q)? {
                violations += 1;
                counterexamples.push(format!("{:?} q={}", a.entries().iter().map(fmt_q).collect::<Vec<_>>(), fmt_q(q)));
            }
        }
    }
    Ok(ScanReport { kind: "updown".into(), trials, violations, counterexamples })
}
