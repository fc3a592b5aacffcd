//! Shape tests for the named constraint classes and the dichotomy verdict
//! on constraint sets.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "DG")]
    Dg,
    #[serde(rename = "DG-")]
    DgMinus,
    #[serde(rename = "ED1")]
    Ed1,
    #[serde(rename = "ED1+")]
    Ed1Plus,
    #[serde(rename = "AZ")]
    Az,
    #[serde(rename = "AZ1")]
    Az1,
    #[serde(rename = "B0")]
    B0,
    #[serde(rename = "OR")]
    Or,
    #[serde(rename = "NAND")]
    Nand,
    #[serde(rename = "B")]
    B,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 10] = [
        ClassLabel::Dg,
        ClassLabel::DgMinus,
        ClassLabel::Ed1,
        ClassLabel::Ed1Plus,
        ClassLabel::Az,
        ClassLabel::Az1,
        ClassLabel::B0,
        ClassLabel::Or,
        ClassLabel::Nand,
        ClassLabel::B,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Dg => "DG",
            ClassLabel::DgMinus => "DG-",
            ClassLabel::Ed1 => "ED1",
            ClassLabel::Ed1Plus => "ED1+",
            ClassLabel::Az => "AZ",
            ClassLabel::Az1 => "AZ1",
            ClassLabel::B0 => "B0",
            ClassLabel::Or => "OR",
            ClassLabel::Nand => "NAND",
            ClassLabel::B => "B",
        }
    }

    /// Shape test on a compact symmetric signature.
    pub fn contains(self, sig: &[Rational]) -> bool {
        match self {
            ClassLabel::Dg => is_dg(sig),
            ClassLabel::DgMinus => is_dg_minus(sig),
            ClassLabel::Ed1 => is_ed1(sig),
            ClassLabel::Ed1Plus => is_ed1_plus(sig),
            ClassLabel::Az => is_az(sig, false),
            ClassLabel::Az1 => is_az(sig, true),
            ClassLabel::B0 => is_b0(sig),
            ClassLabel::Or => is_or(sig),
            ClassLabel::Nand => is_or(&reversed(sig)),
            ClassLabel::B => is_b(sig),
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn reversed(sig: &[Rational]) -> Vec<Rational> {
    sig.iter().rev().cloned().collect()
}

/// `[x,0,...,0]` (the all-zero signature included).
fn zero_after_first(sig: &[Rational]) -> bool {
    sig[1..].iter().all(Zero::is_zero)
}

fn zero_before_last(sig: &[Rational]) -> bool {
    sig[..sig.len() - 1].iter().all(Zero::is_zero)
}

/// `y * [1, z, ..., z^k]` with `yz != 0`.
fn is_geometric(sig: &[Rational]) -> bool {
    if sig.len() < 2 || sig[0].is_zero() || sig[1].is_zero() {
        return false;
    }
    let z = &sig[1] / &sig[0];
    sig.windows(2).all(|w| w[1] == &w[0] * &z)
}

fn is_dg(sig: &[Rational]) -> bool {
    zero_after_first(sig) || zero_before_last(sig) || is_geometric(sig)
}

fn is_dg_minus(sig: &[Rational]) -> bool {
    if zero_after_first(sig) || zero_before_last(sig) {
        return true;
    }
    let y = &sig[0];
    !y.is_zero()
        && (sig.iter().all(|v| v == y)
            || sig
                .iter()
                .enumerate()
                .all(|(i, v)| if i % 2 == 0 { v == y } else { *v == -y.clone() }))
}

fn interior_zero(sig: &[Rational]) -> bool {
    sig[1..sig.len() - 1].iter().all(Zero::is_zero)
}

fn is_zero_one_zero(sig: &[Rational]) -> bool {
    sig.len() == 3 && sig[0].is_zero() && sig[2].is_zero() && !sig[1].is_zero()
}

fn is_ed1(sig: &[Rational]) -> bool {
    let (x, y) = (&sig[0], &sig[sig.len() - 1]);
    let ends = !x.is_zero() && x.abs() == y.abs();
    match sig.len() {
        0 | 1 => false,
        2 => ends,
        _ => (ends && interior_zero(sig)) || is_zero_one_zero(sig),
    }
}

fn is_ed1_plus(sig: &[Rational]) -> bool {
    let (x, y) = (&sig[0], &sig[sig.len() - 1]);
    let ends = !x.is_zero() && !y.is_zero();
    match sig.len() {
        0 | 1 => false,
        2 => ends,
        _ => (ends && interior_zero(sig)) || is_zero_one_zero(sig),
    }
}

/// `[0,x,0,x,...]` / `[x,0,x,0,...]`, or with `alternating` the variant
/// whose nonzero entries alternate in sign.
fn is_az(sig: &[Rational], alternating: bool) -> bool {
    if sig.len() < 4 {
        return false;
    }
    let offset = if sig[0].is_zero() { 1 } else { 0 };
    let x = &sig[offset];
    if x.is_zero() {
        return false;
    }
    sig.iter().enumerate().all(|(i, v)| {
        if i % 2 != offset {
            v.is_zero()
        } else if alternating && (i / 2) % 2 == 1 {
            *v == -x.clone()
        } else {
            v == x
        }
    })
}

/// Both index clauses, checked entry by entry over the indices present.
fn is_b0(sig: &[Rational]) -> bool {
    let k = sig.len() - 1;
    let z0 = &sig[0];
    if k < 2 || z0.is_zero() {
        return false;
    }
    let signed = |i: usize| if i.is_multiple_of(2) { z0.clone() } else { -z0.clone() };
    // z_{2i+1} = z_{2i+2} = (-1)^{i+1} z_0
    let first = (1..=k).all(|idx| sig[idx] == signed((idx - 1) / 2 + 1));
    // z_{2i} = z_{2i+1} = (-1)^i z_0
    let second = (1..=k).all(|idx| sig[idx] == signed(idx / 2));
    first || second
}

fn is_or(sig: &[Rational]) -> bool {
    sig.len() == 3 && sig[0].is_zero() && sig[1].is_positive() && sig[2].is_positive()
}

fn is_b(sig: &[Rational]) -> bool {
    sig.len() == 3
        && sig.iter().all(Signed::is_positive)
        && &sig[0] * &sig[2] != &sig[1] * &sig[1]
}

fn signature(f: &Constraint) -> Result<Vec<Rational>> {
    f.symmetric_values().ok_or(Error::Asymmetric)
}

pub fn classify_constraint(f: &Constraint) -> Result<BTreeSet<ClassLabel>> {
    let sig = signature(f)?;
    if sig.len() < 2 {
        return Err(Error::ArityZero);
    }
    Ok(ClassLabel::ALL
        .into_iter()
        .filter(|c| c.contains(&sig))
        .collect())
}

const GAMMA: [ClassLabel; 5] = [
    ClassLabel::Dg,
    ClassLabel::Ed1Plus,
    ClassLabel::Az,
    ClassLabel::Az1,
    ClassLabel::B0,
];
const FIRST: [ClassLabel; 2] = [ClassLabel::Dg, ClassLabel::Ed1Plus];
const SECOND: [ClassLabel; 5] = [
    ClassLabel::DgMinus,
    ClassLabel::Ed1,
    ClassLabel::Az,
    ClassLabel::Az1,
    ClassLabel::B0,
];

fn member_of_any(labels: &BTreeSet<ClassLabel>, family: &[ClassLabel]) -> bool {
    family.iter().any(|c| labels.contains(c))
}

/// Membership in `DG ∪ ED1⁺ ∪ AZ ∪ AZ1 ∪ B0`. Arity-zero scalars count as members.
pub fn in_gamma(f: &Constraint) -> Result<bool> {
    if f.arity() == 0 {
        return Ok(true);
    }
    Ok(member_of_any(&classify_constraint(f)?, &GAMMA))
}

/// `DG ∪ ED1⁺`.
pub fn in_first_family(f: &Constraint) -> Result<bool> {
    if f.arity() == 0 {
        return Ok(true);
    }
    Ok(member_of_any(&classify_constraint(f)?, &FIRST))
}

/// `DG⁻ ∪ ED1 ∪ AZ ∪ AZ1 ∪ B0`.
pub fn in_second_family(f: &Constraint) -> Result<bool> {
    if f.arity() == 0 {
        return Ok(true);
    }
    Ok(member_of_any(&classify_constraint(f)?, &SECOND))
}

/// `OR ∪ NAND ∪ B`, the targets of the hardness gadgets.
pub fn in_hard_target(f: &Constraint) -> bool {
    match f.symmetric_values() {
        Some(sig) => {
            ClassLabel::Or.contains(&sig)
                || ClassLabel::Nand.contains(&sig)
                || ClassLabel::B.contains(&sig)
        }
        None => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Which tractable families contain the whole set. At least one flag is set.
    PolyTime { first: bool, second: bool },
    Hard(HardWitness),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HardWitness {
    /// A member outside the union of tractable classes.
    Single(Constraint),
    /// `f1` is outside the second family and `f2` outside the first.
    Pair(Constraint, Constraint),
}

pub fn classify_set(set: &[Constraint]) -> Result<Verdict> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut first = true;
    let mut second = true;
    let mut not_first = None;
    let mut not_second = None;
    for f in set {
        if f.arity() == 0 {
            continue;
        }
        let labels = classify_constraint(f)?;
        if !member_of_any(&labels, &GAMMA) {
            return Ok(Verdict::Hard(HardWitness::Single(f.clone())));
        }
        if !member_of_any(&labels, &FIRST) {
            first = false;
            not_first.get_or_insert(f);
        }
        if !member_of_any(&labels, &SECOND) {
            second = false;
            not_second.get_or_insert(f);
        }
    }
    if first || second {
        return Ok(Verdict::PolyTime { first, second });
    }
    Ok(Verdict::Hard(HardWitness::Pair(
        not_second.unwrap().clone(),
        not_first.unwrap().clone(),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::*;

    fn sym(v: &[i64]) -> Constraint {
        Constraint::symmetric_ints(v)
    }

    fn labels(v: &[i64]) -> Vec<ClassLabel> {
        classify_constraint(&sym(v)).unwrap().into_iter().collect()
    }

    #[test]
    fn single_constraint_labels() {
        assert_eq!(labels(&[0, 1, 1]), vec![Or]);
        assert_eq!(labels(&[1, 1, -1]), vec![B0]);
        assert_eq!(labels(&[1, -1, -1]), vec![B0]);
        assert_eq!(labels(&[1, 2, 4]), vec![Dg]);
        assert_eq!(labels(&[1, 1, 1, -1]), vec![]);
        assert_eq!(labels(&[1, 0, 0, 1]), vec![Ed1, Ed1Plus]);
        assert_eq!(labels(&[1, 0]), vec![Dg, DgMinus]);
        assert_eq!(labels(&[2, 1, 2]), vec![B]);
        assert_eq!(labels(&[1, 1, 0]), vec![Nand]);
        assert_eq!(labels(&[0, 1, 0, 1]), vec![Az]);
        assert_eq!(labels(&[1, 0, -1, 0, 1]), vec![Az1]);
        assert_eq!(labels(&[0, 1, 0]), vec![Ed1, Ed1Plus]);
        assert_eq!(labels(&[2, -2]), vec![Dg, DgMinus, Ed1, Ed1Plus]);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let f = Constraint::table_ints(&[1, 2, 3, 4]).unwrap();
        assert_eq!(classify_constraint(&f), Err(Error::Asymmetric));
        assert_eq!(classify_set(&[f]), Err(Error::Asymmetric));
        assert_eq!(classify_set(&[]), Err(Error::EmptySet));
    }

    #[test]
    fn gamma_membership() {
        assert!(in_gamma(&sym(&[1, 0, 0, 1])).unwrap());
        assert!(!in_gamma(&sym(&[0, 1, 1])).unwrap());
        assert!(in_gamma(&Constraint::delta(0)).unwrap());
    }

    #[test]
    fn set_verdicts() {
        let v = classify_set(&[sym(&[1, 0]), sym(&[1, 0, 0, 1])]).unwrap();
        assert!(matches!(v, Verdict::PolyTime { first: true, .. }));
        let v = classify_set(&[sym(&[0, 1, 1])]).unwrap();
        assert_eq!(v, Verdict::Hard(HardWitness::Single(sym(&[0, 1, 1]))));
        let v = classify_set(&[sym(&[1, 1]), sym(&[1, -1, 1])]).unwrap();
        assert!(matches!(v, Verdict::PolyTime { second: true, .. }));
        let v = classify_set(&[sym(&[1, 2]), sym(&[1, 1, -1])]).unwrap();
        assert_eq!(v, Verdict::Hard(HardWitness::Pair(sym(&[1, 2]), sym(&[1, 1, -1]))));
    }
}
