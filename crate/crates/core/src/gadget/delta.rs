//! Constructing the constant unaries `Δ_0`, `Δ_1` from one
//! complement-unstable constraint.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::arity::{condition_a, condition_b, reduce_in};
use super::chain::{ensure_verified, ChainBuilder, GadgetChain, Reg, DEFAULT_M_RANGE};
use super::series::xor_series;
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Squaring restarts allowed along one derivation.
const MAX_RESTARTS: u32 = 2;
/// Bound on repeated `[a,b,-a]` contractions; each doubles the angle of `a/b`.
const MAX_DOUBLINGS: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaDerivation {
    /// `i -> chain` ending in `Δ_i`; at least one entry.
    pub chains: BTreeMap<usize, GadgetChain>,
    /// Whether the input meets a condition that guarantees both constants.
    pub both_guaranteed: bool,
}

pub(crate) type Found = [Option<Reg>; 2];

fn deviation(msg: impl Into<String>) -> Error {
    Error::ProofDeviation(msg.into())
}

fn put(found: &mut Found, (i, r): (usize, Reg)) {
    found[i].get_or_insert(r);
}

/// `Σ_{x2} a(x1, x2) u(x2)` for a binary `a` and unary `u`.
fn apply_unary(b: &mut ChainBuilder, a: Reg, u: Reg) -> Result<Reg> {
    b.contract(1, 1, &[(a, vec![0, 1]), (u, vec![1])], Rational::one())
}

/// `h(x1, x3) = Σ_{x2} f(x1,x2) f(x2,x2) f(x2,x3)` for `f = [a, b, -a]`.
fn sandwich(b: &mut ChainBuilder, f: Reg) -> Result<Reg> {
    let diag = b.merge(f, 1, 0)?;
    b.contract(
        2,
        1,
        &[(f, vec![0, 2]), (diag, vec![2]), (f, vec![2, 1])],
        Rational::one(),
    )
}

/// XOR from a register holding `[x, y, -x]` with `xy != 0`.
fn xor_from_antisymmetric(b: &mut ChainBuilder, f: Reg) -> Result<Reg> {
    let mut cur = f;
    let mut rounds = 0;
    loop {
        let v = b.value(cur);
        let (x, y) = (v.value(0).clone(), v.value(1).clone());
        if x.abs() < y.abs() {
            let series = xor_series(&x, &y, false)?;
            let r = b.series(cur, series, y.recip())?;
            if rounds > 1 {
                b.annotate(r, format!("[x,y,-x] sandwich applied {rounds} times to reach |x| < |y|"));
            }
            return Ok(r);
        }
        if rounds == MAX_DOUBLINGS {
            return Err(deviation(format!("no XOR series after {MAX_DOUBLINGS} sandwiches")));
        }
        cur = sandwich(b, cur)?;
        rounds += 1;
    }
}

fn binary(b: &mut ChainBuilder, r: Reg, restarts: u32) -> Result<Found> {
    let f = b.value(r).clone();
    let [x, y, z, w] = [0, 1, 2, 3].map(|i| f.value(i).clone());
    let mut found: Found = [None, None];
    let restart = |b: &mut ChainBuilder, why: &str| -> Result<Found> {
        if restarts == MAX_RESTARTS {
            return Err(deviation(format!("{f}: {why} after {MAX_RESTARTS} squarings")));
        }
        let sq = b.power(r, 2)?;
        binary(b, sq, restarts + 1)
    };

    if x.abs() != w.abs() {
        let g0 = b.merge(r, 1, 0)?;
        let (i, d) = b.delta_from_unary(g0)?;
        put(&mut found, (i, d));
        let (xy, zw, xz, yw) = ((&x + &y).abs(), (&z + &w).abs(), (&x + &z).abs(), (&y + &w).abs());
        let want_other = if i == 0 { |a: &Rational, c: &Rational| a < c } else { |a: &Rational, c: &Rational| a > c };
        let var = if want_other(&xy, &zw) {
            Some(1)
        } else if want_other(&xz, &yw) {
            Some(0)
        } else {
            None
        };
        if let Some(var) = var {
            let g = b.marginalize(r, var)?;
            put(&mut found, b.delta_from_unary(g)?);
        }
        return Ok(found);
    }

    if x == w {
        if y == z {
            return Err(Error::Precondition(format!("{f} is complement invariant")));
        }
        if (&x + &y).abs() != (&x + &z).abs() {
            let g = b.marginalize(r, 0)?;
            let h = b.marginalize(r, 1)?;
            put(&mut found, b.delta_from_unary(g)?);
            put(&mut found, b.delta_from_unary(h)?);
            return Ok(found);
        }
        return restart(b, "2x + y + z = 0 persists");
    }

    // x = -w, x != 0.
    if y == -z.clone() {
        return Err(Error::Precondition(format!("{f} is complement anti-invariant")));
    }
    if y.clone() * &y != z.clone() * &z {
        return restart(b, "y² != z² persists");
    }
    if (&x * &y).is_zero() {
        return Err(deviation(format!("{f}: [x,y,-x] with xy = 0 is stable")));
    }
    let g = b.marginalize(r, 0)?;
    if x == y || x == -y.clone() {
        let (i, d) = b.delta_from_unary(g)?;
        put(&mut found, (i, d));
        let h = sandwich(b, r)?;
        let h1 = apply_unary(b, h, g)?;
        put(&mut found, b.delta_from_unary(h1)?);
        return Ok(found);
    }
    let (c, d) = b.delta_from_unary(g)?;
    put(&mut found, (c, d));
    let xor = xor_from_antisymmetric(b, r)?;
    let other = apply_unary(b, xor, d)?;
    if !b.value(other).is_delta(1 - c) {
        return Err(deviation(format!("XOR applied to Δ_{c} gave {}", b.value(other))));
    }
    put(&mut found, (1 - c, other));
    Ok(found)
}

pub(crate) fn derive_in(b: &mut ChainBuilder, r: Reg) -> Result<Found> {
    match b.value(r).arity() {
        0 => Err(Error::ArityZero),
        1 => {
            let mut found = [None, None];
            put(&mut found, b.delta_from_unary(r)?);
            Ok(found)
        }
        2 => binary(b, r, 0),
        _ => {
            let g = reduce_in(b, r)?;
            derive_in(b, g)
        }
    }
}

pub fn derive_delta(f: &Constraint) -> Result<DeltaDerivation> {
    if f.is_all_zero() {
        return Err(Error::AllZero);
    }
    if f.complement_class().is_stable() {
        return Err(Error::Precondition(format!("{f} is complement stable")));
    }
    let mut b = ChainBuilder::new();
    let r = b.source(f.clone());
    let found = derive_in(&mut b, r)?;
    let both_guaranteed = condition_a(f) || condition_b(f);
    let mut chains = BTreeMap::new();
    for (i, reg) in found.iter().enumerate() {
        if let Some(reg) = reg {
            let chain = b.finish(*reg);
            ensure_verified(&chain, DEFAULT_M_RANGE)?;
            chains.insert(i, chain);
        }
    }
    if chains.is_empty() || (both_guaranteed && chains.len() < 2) {
        return Err(deviation(format!(
            "{f}: derived constants {:?}, guaranteed both: {both_guaranteed}",
            chains.keys().collect::<Vec<_>>()
        )));
    }
    Ok(DeltaDerivation {
        chains,
        both_guaranteed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn sym(v: &[i64]) -> Constraint {
        Constraint::symmetric_ints(v)
    }

    fn step_values(chain: &GadgetChain) -> Vec<Constraint> {
        chain.steps.iter().map(|s| s.result.clone()).collect()
    }

    #[test]
    fn unary_gives_one_constant() {
        let d = derive_delta(&sym(&[2, 1])).unwrap();
        assert!(!d.both_guaranteed);
        assert_eq!(d.chains.keys().copied().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn equal_corners_give_both() {
        let f = Constraint::table_ints(&[1, 2, 3, 1]).unwrap();
        let d = derive_delta(&f).unwrap();
        assert!(d.both_guaranteed);
        assert!(step_values(&d.chains[&0]).contains(&sym(&[4, 3])));
        assert!(step_values(&d.chains[&1]).contains(&sym(&[3, 4])));
    }

    #[test]
    fn antisymmetric_uses_xor() {
        let d = derive_delta(&sym(&[1, 2, -1])).unwrap();
        assert!(step_values(&d.chains[&0]).contains(&sym(&[3, 1])));
        let one = &d.chains[&1];
        assert!(one.steps.iter().any(|s| s.result == Constraint::xor()));
        assert_eq!(one.output(), &Constraint::delta(1));
    }

    #[test]
    fn large_ratio_needs_repeated_sandwich() {
        // d = (x² - y²) / 2xy = 12/5 for [6,1,-6]; the sandwich doubles the angle.
        let d = derive_delta(&sym(&[6, 1, -6])).unwrap();
        assert_eq!(d.chains.len(), 2);
        assert!(d.chains[&1].notes().iter().any(|n| n.contains("sandwich")));
        assert!(derive_delta(&sym(&[2, 1, -2])).unwrap().chains[&1].notes().is_empty());
    }

    #[test]
    fn pinned_cases() {
        for f in [sym(&[1, 1, -1]), sym(&[1, -1, -1])] {
            let d = derive_delta(&f).unwrap();
            assert_eq!(d.chains.len(), 2, "{f}");
        }
        let f = sym(&[1, 1, -1]);
        let d = derive_delta(&f).unwrap();
        assert!(step_values(&d.chains[&1]).contains(&Constraint::new(1, vec![int(0), int(4)]).unwrap()));
    }

    #[test]
    fn rejects_stable_and_zero() {
        assert!(matches!(derive_delta(&sym(&[0, 0, 0])), Err(Error::AllZero)));
        assert!(derive_delta(&sym(&[1, 2, 1])).is_err());
    }
}
