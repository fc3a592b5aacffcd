//! Hardness from two tractable constraints drawn from different families.

use num_traits::{One, Signed, Zero};

use super::chain::{ensure_verified, ChainBuilder, GadgetChain, Reg, DEFAULT_M_RANGE};
use super::hardness::Ctx;
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::taxonomy::{classify_constraint, in_gamma, in_hard_target, ClassLabel};

use ClassLabel::*;

fn deviation(msg: impl Into<String>) -> Error {
    Error::ProofDeviation(msg.into())
}

fn check_pair(f1: &Constraint, f2: &Constraint) -> Result<()> {
    for f in [f1, f2] {
        if !f.is_symmetric() {
            return Err(Error::Asymmetric);
        }
        if f.is_all_zero() {
            return Err(Error::AllZero);
        }
    }
    let l1 = classify_constraint(f1)?;
    let l2 = classify_constraint(f2)?;
    let ok1 = [Dg, Ed1Plus].iter().any(|c| l1.contains(c))
        && ![DgMinus, Ed1, Az, Az1, B0].iter().any(|c| l1.contains(c));
    let ok2 = [Az, Az1, B0].iter().any(|c| l2.contains(c))
        && ![Dg, Ed1Plus].iter().any(|c| l2.contains(c));
    if !ok1 {
        return Err(Error::Precondition(format!(
            "{f1} must lie in DG ∪ ED1⁺ and outside DG⁻ ∪ ED1 ∪ AZ ∪ AZ1 ∪ B0"
        )));
    }
    if !ok2 {
        return Err(Error::Precondition(format!(
            "{f2} must lie in AZ ∪ AZ1 ∪ B0 and outside DG ∪ ED1⁺"
        )));
    }
    Ok(())
}

/// Brings `f1` down to a unary `[x, y]` with `xy != 0` and `|x| != |y|`.
fn unary_from_first(ctx: &mut Ctx, r: Reg) -> Result<Reg> {
    let k = ctx.val(r).arity();
    let sig = ctx.val(r).symmetric_values().ok_or(Error::Asymmetric)?;
    let u = if k == 1 {
        r
    } else if sig[1..k].iter().all(Zero::is_zero) {
        ctx.b.merge_all(r)?
    } else {
        ctx.pin_times(r, ctx.i0, k - 1, false)?
    };
    let v = ctx.val(u);
    let (x, y) = (v.value(0), v.value(1));
    if x.is_zero() || y.is_zero() || x.abs() == y.abs() {
        return Err(deviation(format!("{} does not reduce to [x,y] with xy ≠ 0, |x| ≠ |y|", ctx.val(r))));
    }
    Ok(u)
}

/// A member of `OR ∪ NAND ∪ B` from `f1 ∈ (DG ∪ ED1⁺) ∖ (DG⁻ ∪ ED1 ∪ AZ ∪ AZ1 ∪ B0)`,
/// `f2 ∈ (AZ ∪ AZ1 ∪ B0) ∖ (DG ∪ ED1⁺)` and `Δ_{i0}`.
///
/// The chain has sources `[f1, f2, Δ_{i0}]`.
pub fn pair_hardness_gadget(
    f1: &Constraint,
    f2: &Constraint,
    i0: usize,
) -> Result<(Constraint, GadgetChain)> {
    if i0 > 1 {
        return Err(Error::IndexOutOfRange { index: i0, arity: 2 });
    }
    check_pair(f1, f2)?;
    let mut b = ChainBuilder::new();
    let r1 = b.source(f1.clone());
    let r2 = b.source(f2.clone());
    let d = b.source(Constraint::delta(i0));
    let mut ctx = Ctx::new(&mut b, i0, d);
    let u = unary_from_first(&mut ctx, r1)?;
    let sig2 = f2.symmetric_values().ok_or(Error::Asymmetric)?;
    let g = if Az.contains(&sig2) || Az1.contains(&sig2) {
        let az = if Az.contains(&sig2) { r2 } else { ctx.b.power(r2, 2)? };
        let k = f2.arity();
        let t = ctx.pin_times(az, i0, k - 3, false)?;
        let f = ctx.b.contract(3, 0, &[(u, vec![0]), (t, vec![0, 1, 2])], Rational::one())?;
        let h = ctx.b.contract(
            3,
            0,
            &[(f, vec![0, 1, 2]), (f, vec![1, 2, 0]), (f, vec![2, 0, 1])],
            Rational::one(),
        )?;
        if in_gamma(ctx.val(h))? {
            return Err(deviation(format!("{} lies in Γ", ctx.val(h))));
        }
        ctx.solve(h, 0)?
    } else {
        let t = ctx.pin_times(r2, i0, f2.arity() - 2, false)?;
        let h = ctx.b.contract(
            2,
            1,
            &[(t, vec![0, 2]), (u, vec![2]), (t, vec![1, 2])],
            Rational::one(),
        )?;
        ctx.finish(h)?
    };
    let chain = b.finish(g);
    ensure_verified(&chain, DEFAULT_M_RANGE)?;
    let out = chain.output().clone();
    if !in_hard_target(&out) {
        return Err(deviation(format!("{out} is outside OR ∪ NAND ∪ B")));
    }
    Ok((out, chain))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(v: &[i64]) -> Constraint {
        Constraint::symmetric_ints(v)
    }

    fn values(chain: &GadgetChain) -> Vec<Constraint> {
        chain.steps.iter().map(|s| s.result.clone()).collect()
    }

    #[test]
    fn b0_partner() {
        let (g, chain) = pair_hardness_gadget(&sym(&[1, 2]), &sym(&[1, 1, -1]), 0).unwrap();
        assert!(values(&chain).contains(&sym(&[3, -1, 3])));
        assert_eq!(g, sym(&[9, 1, 9]));
    }

    #[test]
    fn az_partner() {
        for i0 in 0..2 {
            let (g, chain) = pair_hardness_gadget(&sym(&[1, 2]), &sym(&[1, 0, 1, 0]), i0).unwrap();
            assert!(values(&chain).contains(&sym(&[1, 0, 4, 0])));
            assert!(in_hard_target(&g));
        }
    }

    #[test]
    fn az1_partner_is_squared() {
        let (_, chain) = pair_hardness_gadget(&sym(&[1, 2]), &sym(&[0, 1, 0, -1, 0]), 1).unwrap();
        assert!(values(&chain).contains(&sym(&[0, 1, 0, 1, 0])));
    }

    #[test]
    fn first_constraint_forms() {
        let f2 = sym(&[1, -1, -1, 1]);
        for f1 in [sym(&[3, 0, 0, 1]), sym(&[1, 2, 4]), sym(&[2, 1])] {
            for i0 in 0..2 {
                assert!(pair_hardness_gadget(&f1, &f2, i0).is_ok(), "{f1} {i0}");
            }
        }
    }

    #[test]
    fn rejects_wrong_families() {
        assert!(pair_hardness_gadget(&sym(&[1, 1]), &sym(&[1, 1, -1]), 0).is_err());
        assert!(pair_hardness_gadget(&sym(&[1, 2]), &sym(&[1, 2, 4]), 0).is_err());
    }
}
