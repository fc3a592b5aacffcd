//! Lowering the arity of a complement-unstable constraint by one while
//! keeping it unstable.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use super::chain::{ensure_verified, ChainBuilder, GadgetChain, Reg, DEFAULT_M_RANGE};
use crate::constraint::{bit_of, Constraint};
use crate::error::{Error, Result};

/// `k >= 2` and `|z_first| = |z_last|`.
pub fn condition_a(f: &Constraint) -> bool {
    f.arity() >= 2 && f.first().abs() == f.last().abs()
}

/// Index `t` in `1..2^{k-1}` (0-based) witnessing the second condition, if any.
pub fn condition_b_witness(f: &Constraint) -> Option<usize> {
    if f.arity() < 2 {
        return None;
    }
    let v = f.values();
    let n = v.len();
    let (first, last) = (&v[0], &v[n - 1]);
    let gap = first.abs() - last.abs();
    (1..n / 2).find(|&t| {
        let c = n - 1 - t;
        let d1 = (first + &v[t]).abs() - (&v[c] + last).abs();
        let d2 = (first + &v[c]).abs() - (&v[t] + last).abs();
        (&gap * d1).is_negative() || (&gap * d2).is_negative()
    })
}

pub fn condition_b(f: &Constraint) -> bool {
    condition_b_witness(f).is_some()
}

/// Pairs of table indices that some single merge `f^{x_s = x_t}` reads
/// together, and the derived sets. Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HPartition {
    pub h_prime: BTreeSet<(usize, usize)>,
    pub h: BTreeSet<(usize, usize)>,
    pub h_hat: BTreeSet<usize>,
    pub h_hat_zero: BTreeSet<usize>,
    pub h_hat_plus: BTreeSet<usize>,
    pub h_hat_minus: BTreeSet<usize>,
}

impl HPartition {
    /// The `Ĥ` split uses `f`'s values and assumes `|z_i| = |z_{N-1-i}|`.
    pub fn of(f: &Constraint) -> Self {
        let k = f.arity();
        let n = 1usize << k;
        let mut h_prime = BTreeSet::new();
        for s in 0..k {
            for t in s + 1..k {
                let read: Vec<usize> = (0..n)
                    .filter(|&i| bit_of(i, s, k) == bit_of(i, t, k))
                    .collect();
                for &i in &read {
                    for &j in &read {
                        h_prime.insert((i, j));
                    }
                }
            }
        }
        let h: BTreeSet<_> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|p| !h_prime.contains(p))
            .collect();
        let h_hat: BTreeSet<usize> = h.iter().map(|&(i, _)| i).collect();
        let mut part = HPartition {
            h_prime,
            h,
            h_hat: h_hat.clone(),
            h_hat_zero: BTreeSet::new(),
            h_hat_plus: BTreeSet::new(),
            h_hat_minus: BTreeSet::new(),
        };
        for i in h_hat {
            let (a, b) = (f.value(i), f.value(n - 1 - i));
            if a.is_zero() && b.is_zero() {
                part.h_hat_zero.insert(i);
            } else if a == b {
                part.h_hat_plus.insert(i);
            } else if *a == -b.clone() {
                part.h_hat_minus.insert(i);
            }
        }
        part
    }
}

fn deviation(msg: impl Into<String>) -> Error {
    Error::ProofDeviation(msg.into())
}

/// Adds the steps lowering register `r` by one arity and returns the new
/// register.
pub(crate) fn reduce_in(b: &mut ChainBuilder, r: Reg) -> Result<Reg> {
    let f = b.value(r).clone();
    let k = f.arity();
    if k < 3 {
        return Err(Error::Precondition(format!(
            "arity reduction needs arity at least 3, got {k}"
        )));
    }
    if f.complement_class().is_stable() {
        return Err(Error::Precondition(format!("{f} is complement stable")));
    }
    let keeps_conditions = |g: &Constraint| {
        !(condition_a(&f) || condition_b(&f)) || condition_a(g) || condition_b(g)
    };

    if let Some(t) = condition_b_witness(&f) {
        let (s, u) = (0..k)
            .flat_map(|s| (s + 1..k).map(move |u| (s, u)))
            .find(|&(s, u)| bit_of(t, s, k) == bit_of(t, u, k))
            .expect("arity 3 forces two equal bits");
        let g = b.merge(r, s, u)?;
        let gv = b.value(g);
        if gv.complement_class().is_stable() || !condition_b(gv) {
            return Err(deviation(format!(
                "merge of variables {s},{u} of {f} lost the second condition"
            )));
        }
        return Ok(g);
    }

    for s in 0..k {
        for u in s + 1..k {
            let g = f.merge(s, u)?;
            if !g.complement_class().is_stable() {
                return b.merge(r, s, u);
            }
        }
    }

    // Every merge is stable: f pairs nonzero invariant and anti-invariant
    // entries that no single merge reads together.
    let n = 1usize << k;
    let z = f.values();
    if (0..n / 2).any(|i| z[i].abs() != z[n - 1 - i].abs()) {
        return Err(deviation(format!(
            "{f}: all merges stable but some |z_i| differs from its complement"
        )));
    }
    let part = HPartition::of(&f);
    if let Some(i) = (0..n).find(|i| !part.h_hat.contains(i) && !z[*i].is_zero()) {
        return Err(deviation(format!("{f}: entry {i} outside Ĥ is nonzero")));
    }
    if part.h_hat_plus.is_empty() || part.h_hat_minus.is_empty() {
        return Err(deviation(format!("{f}: Ĥ+ or Ĥ- is empty")));
    }
    match k {
        3 => {
            // Complement pairs by first index, with the marginalized
            // variable when the pair is zero or when its sign kind is unique.
            const PAIRS: [usize; 3] = [1, 2, 3];
            const ZERO_VAR: [usize; 3] = [0, 2, 1];
            const ODD_VAR: [usize; 3] = [2, 1, 0];
            let kind = |i: usize| {
                if part.h_hat_zero.contains(&i) {
                    0
                } else if part.h_hat_plus.contains(&i) {
                    1
                } else {
                    2
                }
            };
            let kinds: Vec<u8> = PAIRS.iter().map(|&i| kind(i)).collect();
            let var = if let Some(p) = kinds.iter().position(|&c| c == 0) {
                ZERO_VAR[p]
            } else {
                let p = (0..3)
                    .find(|&p| kinds.iter().filter(|&&c| c == kinds[p]).count() == 1)
                    .ok_or_else(|| deviation(format!("{f}: no distinguished complement pair")))?;
                ODD_VAR[p]
            };
            let h = f.marginalize(var)?;
            if !h.complement_class().is_stable() && keeps_conditions(&h) {
                return b.marginalize(r, var);
            }
            let alt = (0..3)
                .find(|&v| {
                    let h = f.marginalize(v).unwrap();
                    !h.complement_class().is_stable() && keeps_conditions(&h)
                })
                .ok_or_else(|| deviation(format!("{f}: every marginalization is stable")))?;
            let g = b.marginalize(r, alt)?;
            b.annotate(
                g,
                format!("marginalizing x{} of {f} is stable ({h}); used x{} instead", var + 1, alt + 1),
            );
            Ok(g)
        }
        4 => {
            let h = b.marginalize(r, 0)?;
            if b.value(h).complement_class().is_stable() {
                return Err(deviation(format!("{f}: marginalizing x1 is stable")));
            }
            Ok(h)
        }
        _ => Err(deviation(format!(
            "{f}: arity {k} with all merges stable should be impossible"
        ))),
    }
}

/// `g` of arity `k - 1`, unstable, built from `f` by merges or sums.
pub fn reduce_arity(f: &Constraint) -> Result<(Constraint, GadgetChain)> {
    let mut b = ChainBuilder::new();
    let r = b.source(f.clone());
    let g = reduce_in(&mut b, r)?;
    let chain = b.finish(g);
    ensure_verified(&chain, DEFAULT_M_RANGE)?;
    Ok((b.value(g).clone(), chain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::ComplementClass;

    #[test]
    fn partition_for_arity_three() {
        let f = Constraint::table_ints(&[0, 1, -1, 1, -1, -1, 1, 0]).unwrap();
        let p = HPartition::of(&f);
        assert_eq!(p.h_hat, (1..7).collect());
        assert!((0..8).all(|i| p.h_prime.contains(&(i, i))));
        // Among the middle entries only complement pairs share a merge.
        let middle: BTreeSet<_> = p.h_prime.iter().filter(|&&(i, j)| i != j && (1..7).contains(&i) && (1..7).contains(&j)).copied().collect();
        assert_eq!(middle, [(1, 6), (6, 1), (2, 5), (5, 2), (3, 4), (4, 3)].into());
        assert_eq!(p.h.len(), 24);
        assert_eq!(p.h_hat_minus, [3, 4].into());
    }

    #[test]
    fn symmetric_arity_three() {
        let f = Constraint::symmetric_ints(&[0, 1, 1, -1]);
        let (g, chain) = reduce_arity(&f).unwrap();
        assert_eq!(g.arity(), 2);
        assert_eq!(g.complement_class(), ComplementClass::Unstable);
        assert_eq!(chain.output(), &g);
    }

    #[test]
    fn unstable_merge_is_returned() {
        let f = Constraint::table_ints(&[1, 2, 0, 0, 0, 0, 0, 1]).unwrap();
        let (g, _) = reduce_arity(&f).unwrap();
        assert_eq!(g, f.merge(0, 1).unwrap());
    }

    #[test]
    fn stable_table_choice_falls_back() {
        let f = Constraint::table_ints(&[0, 1, -1, 1, -1, -1, 1, 0]).unwrap();
        assert!(f.marginalize(0).unwrap().complement_class().is_stable());
        let mut b = ChainBuilder::new();
        let r = b.source(f);
        let g = reduce_in(&mut b, r).unwrap();
        assert!(!b.value(g).complement_class().is_stable());
        assert!(!b.finish(g).notes().is_empty());
    }

    #[test]
    fn conditions_survive_on_small_grid() {
        let mut checked = 0;
        for code in 0..3u32.pow(8) {
            let v: Vec<i64> = (0..8).map(|i| (code / 3u32.pow(i) % 3) as i64 - 1).collect();
            let f = Constraint::table_ints(&v).unwrap();
            if f.complement_class().is_stable() {
                continue;
            }
            let (g, _) = reduce_arity(&f).unwrap();
            assert!(!g.complement_class().is_stable());
            if condition_a(&f) || condition_b(&f) {
                assert!(condition_a(&g) || condition_b(&g), "{f} -> {g}");
            }
            checked += 1;
        }
        assert!(checked > 6000);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(reduce_arity(&Constraint::symmetric_ints(&[1, 2, 3])).is_err());
        assert!(reduce_arity(&Constraint::symmetric_ints(&[1, 2, 2, 1])).is_err());
    }
}
