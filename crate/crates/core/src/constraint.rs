//! Boolean constraints stored as exact value tables.
//!
//! A constraint of arity `k` is a table of `2^k` rationals in lexicographic
//! order of its input: variable 0 is the most significant bit of the index.
//! Symmetric constraints are presented in the compact form `[f_0, ..., f_k]`
//! where `f_w` is the value on inputs of Hamming weight `w`.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{int, pow, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    arity: usize,
    values: Vec<Rational>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ComplementClass {
    Invariant,
    AntiInvariant,
    Unstable,
}

impl ComplementClass {
    pub fn is_stable(self) -> bool {
        self != ComplementClass::Unstable
    }
}

/// Bit of `var` in `index` for a table of the given arity.
#[inline]
pub(crate) fn bit_of(index: usize, var: usize, arity: usize) -> usize {
    (index >> (arity - 1 - var)) & 1
}

/// Index of arity `arity + 1` obtained by inserting `bit` at position `pos`.
#[inline]
fn insert_bit(index: usize, pos: usize, bit: usize, arity: usize) -> usize {
    let low_width = arity - pos;
    let low = index & ((1 << low_width) - 1);
    let high = index >> low_width;
    (high << (low_width + 1)) | (bit << low_width) | low
}

impl Constraint {
    pub fn new(arity: usize, values: Vec<Rational>) -> Result<Self> {
        if arity >= usize::BITS as usize - 1 || values.len() != 1usize << arity {
            return Err(Error::TableLength {
                arity,
                len: values.len(),
            });
        }
        Ok(Constraint { arity, values })
    }

    /// Arity-zero constraint holding a single value.
    pub fn scalar(value: Rational) -> Self {
        Constraint {
            arity: 0,
            values: vec![value],
        }
    }

    /// Expands a compact symmetric signature `[f_0, ..., f_k]`.
    pub fn symmetric(signature: &[Rational]) -> Result<Self> {
        if signature.is_empty() {
            return Err(Error::TableLength { arity: 0, len: 0 });
        }
        let arity = signature.len() - 1;
        let values = (0..1usize << arity)
            .map(|i| signature[i.count_ones() as usize].clone())
            .collect();
        Constraint::new(arity, values)
    }

    pub fn symmetric_ints(signature: &[i64]) -> Self {
        let sig: Vec<Rational> = signature.iter().map(|&v| int(v)).collect();
        Constraint::symmetric(&sig).expect("non-empty signature")
    }

    pub fn table_ints(values: &[i64]) -> Result<Self> {
        let arity = values.len().trailing_zeros() as usize;
        Constraint::new(arity, values.iter().map(|&v| int(v)).collect())
    }

    /// The constant unary `Δ_0 = [1,0]` or `Δ_1 = [0,1]`.
    pub fn delta(bit: usize) -> Self {
        if bit == 0 {
            Constraint::symmetric_ints(&[1, 0])
        } else {
            Constraint::symmetric_ints(&[0, 1])
        }
    }

    /// `XOR = [0,1,0]`.
    pub fn xor() -> Self {
        Constraint::symmetric_ints(&[0, 1, 0])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Rational> {
        self.values
    }

    pub fn value(&self, index: usize) -> &Rational {
        &self.values[index]
    }

    pub fn value_of(&self, bits: &[bool]) -> &Rational {
        assert_eq!(bits.len(), self.arity);
        let index = bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize);
        &self.values[index]
    }

    /// Value on the all-zero input.
    pub fn first(&self) -> &Rational {
        &self.values[0]
    }

    /// Value on the all-one input.
    pub fn last(&self) -> &Rational {
        self.values.last().expect("table is never empty")
    }

    /// Compact signature if the table is symmetric.
    pub fn symmetric_values(&self) -> Option<Vec<Rational>> {
        let mut sig: Vec<Option<&Rational>> = vec![None; self.arity + 1];
        for (i, v) in self.values.iter().enumerate() {
            let slot = &mut sig[i.count_ones() as usize];
            match slot {
                None => *slot = Some(v),
                Some(prev) if *prev != v => return None,
                Some(_) => {}
            }
        }
        Some(sig.into_iter().map(|v| v.unwrap().clone()).collect())
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric_values().is_some()
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }

    pub fn is_delta(&self, bit: usize) -> bool {
        *self == Constraint::delta(bit)
    }

    pub fn max_abs(&self) -> Rational {
        self.values
            .iter()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    fn check_var(&self, var: usize) -> Result<()> {
        if self.arity == 0 {
            return Err(Error::ArityZero);
        }
        if var >= self.arity {
            return Err(Error::IndexOutOfRange {
                index: var,
                arity: self.arity,
            });
        }
        Ok(())
    }

    /// `f^{x_var = bit}`: fixes one input.
    pub fn pin(&self, var: usize, bit: usize) -> Result<Self> {
        self.check_var(var)?;
        debug_assert!(bit < 2);
        let k = self.arity - 1;
        let values = (0..1usize << k)
            .map(|a| self.values[insert_bit(a, var, bit & 1, k)].clone())
            .collect();
        Ok(Constraint { arity: k, values })
    }

    /// `f^{x_i = x_j}`: variable `i` is replaced by `j` and dropped.
    pub fn merge(&self, i: usize, j: usize) -> Result<Self> {
        self.check_var(i)?;
        self.check_var(j)?;
        if i == j {
            return Err(Error::SameIndex(i));
        }
        let k = self.arity - 1;
        let j_new = if j > i { j - 1 } else { j };
        let values = (0..1usize << k)
            .map(|a| {
                let b = bit_of(a, j_new, k);
                self.values[insert_bit(a, i, b, k)].clone()
            })
            .collect();
        Ok(Constraint { arity: k, values })
    }

    /// `f^{x_var = *}`: sum over one input.
    pub fn marginalize(&self, var: usize) -> Result<Self> {
        self.check_var(var)?;
        let k = self.arity - 1;
        let values = (0..1usize << k)
            .map(|a| &self.values[insert_bit(a, var, 0, k)] + &self.values[insert_bit(a, var, 1, k)])
            .collect();
        Ok(Constraint { arity: k, values })
    }

    /// Merges every variable into the first, giving `[f(0..0), f(1..1)]`.
    pub fn merge_all(&self) -> Result<Self> {
        if self.arity == 0 {
            return Err(Error::ArityZero);
        }
        Constraint::new(1, vec![self.first().clone(), self.last().clone()])
    }

    pub fn power(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroExponent);
        }
        Ok(Constraint {
            arity: self.arity,
            values: self.values.iter().map(|v| pow(v, n)).collect(),
        })
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        Constraint {
            arity: self.arity,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `f(x̄)`: every input complemented.
    pub fn complemented(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Constraint {
            arity: self.arity,
            values,
        }
    }

    /// Reorders inputs: result variable `t` reads original variable `perm[t]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let k = self.arity;
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Precondition("not a permutation".into()));
        }
        let values = (0..1usize << k)
            .map(|a| {
                let mut orig = 0;
                for (t, &p) in perm.iter().enumerate() {
                    orig |= bit_of(a, t, k) << (k - 1 - p);
                }
                self.values[orig].clone()
            })
            .collect();
        Ok(Constraint { arity: k, values })
    }

    /// All-zero counts as invariant.
    pub fn complement_class(&self) -> ComplementClass {
        let n = self.values.len();
        let pairs = || (0..n).map(|i| (&self.values[i], &self.values[n - 1 - i]));
        if pairs().all(|(a, b)| a == b) {
            ComplementClass::Invariant
        } else if pairs().all(|(a, b)| *a == -b.clone()) {
            ComplementClass::AntiInvariant
        } else {
            ComplementClass::Unstable
        }
    }

    /// Sign of every table entry.
    pub fn sign_pattern(&self) -> Vec<i8> {
        self.values.iter().map(crate::rational::sgn).collect()
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (open, close, vals) = match self.symmetric_values() {
            Some(sig) if self.arity != 0 => ('[', ']', sig),
            _ => ('(', ')', self.values.clone()),
        };
        write!(f, "{open}")?;
        for (i, v) in vals.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "{close}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn sym(v: &[i64]) -> Constraint {
        Constraint::symmetric_ints(v)
    }

    fn table(v: &[i64]) -> Constraint {
        Constraint::table_ints(v).unwrap()
    }

    #[test]
    fn pin_examples() {
        let f = sym(&[5, 6, 7]);
        assert_eq!(f.pin(0, 0).unwrap(), sym(&[5, 6]));
        assert_eq!(f.pin(0, 1).unwrap(), sym(&[6, 7]));
        assert_eq!(Constraint::delta(0).pin(0, 1).unwrap(), Constraint::scalar(int(0)));
        assert_eq!(table(&[1, 2, 3, 4]).pin(1, 1).unwrap(), table(&[2, 4]));
        assert_eq!(f.pin(2, 0), Err(Error::IndexOutOfRange { index: 2, arity: 2 }));
        assert_eq!(Constraint::scalar(int(1)).pin(0, 0), Err(Error::ArityZero));
    }

    #[test]
    fn merge_examples() {
        assert_eq!(table(&[1, 2, 3, 4]).merge(0, 1).unwrap(), table(&[1, 4]));
        assert_eq!(sym(&[1, 2, 3, 4]).merge(0, 1).unwrap(), table(&[1, 2, 3, 4]));
        assert_eq!(sym(&[1, 0, 1]).merge(0, 1).unwrap(), sym(&[1, 1]));
        assert_eq!(sym(&[1, 0, 1]).merge(1, 1), Err(Error::SameIndex(1)));
    }

    #[test]
    fn marginalize_examples() {
        assert_eq!(table(&[1, 2, 3, 4]).marginalize(0).unwrap(), table(&[4, 6]));
        assert_eq!(Constraint::delta(0).marginalize(0).unwrap(), Constraint::scalar(int(1)));
        assert_eq!(sym(&[0, 1, 0, 1]).marginalize(0).unwrap(), sym(&[1, 1, 1]));
    }

    #[test]
    fn power_examples() {
        assert_eq!(table(&[1, 2, 3, 4]).power(3).unwrap(), table(&[1, 8, 27, 64]));
        assert_eq!(sym(&[1, -1, 1]).power(2).unwrap(), sym(&[1, 1, 1]));
        assert_eq!(sym(&[1, 2]).power(0), Err(Error::ZeroExponent));
    }

    #[test]
    fn complement_examples() {
        assert_eq!(sym(&[1, 1]).complement_class(), ComplementClass::Invariant);
        assert_eq!(sym(&[1, 0, -1]).complement_class(), ComplementClass::AntiInvariant);
        assert_eq!(sym(&[1, 0]).complement_class(), ComplementClass::Unstable);
        assert_eq!(sym(&[0, 0, 0]).complement_class(), ComplementClass::Invariant);
    }

    #[test]
    fn compact_form_and_display() {
        let f = Constraint::symmetric(&[q(1, 2), int(-3), int(0)]).unwrap();
        assert_eq!(f.symmetric_values().unwrap(), vec![q(1, 2), int(-3), int(0)]);
        assert_eq!(f.to_string(), "[1/2,-3,0]");
        assert_eq!(table(&[1, 2, 3, 4]).to_string(), "(1,2,3,4)");
        assert!(Constraint::new(2, vec![int(1)]).is_err());
    }

    #[test]
    fn permutation_moves_inputs() {
        let f = table(&[1, 2, 3, 4]);
        assert_eq!(f.permuted(&[1, 0]).unwrap(), table(&[1, 3, 2, 4]));
        assert!(f.permuted(&[0, 0]).is_err());
    }

    fn arb_constraint() -> impl Strategy<Value = Constraint> {
        (1usize..=4).prop_flat_map(|k| {
            proptest::collection::vec(-3i64..=3, 1 << k)
                .prop_map(|v| Constraint::table_ints(&v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn marginalize_is_sum_of_pins(f in arb_constraint(), var in 0usize..4) {
            let var = var % f.arity();
            let a = f.pin(var, 0).unwrap();
            let b = f.pin(var, 1).unwrap();
            let sum: Vec<Rational> = a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect();
            let m = f.marginalize(var).unwrap();
            prop_assert_eq!(m.values(), &sum[..]);
        }

        #[test]
        fn square_is_never_anti_invariant(f in arb_constraint()) {
            let sq = f.power(2).unwrap();
            let class = sq.complement_class();
            prop_assert_ne!(class, ComplementClass::AntiInvariant);
            let n = f.values().len();
            if (0..n).all(|i| f.value(i).abs() == f.value(n - 1 - i).abs()) {
                prop_assert_eq!(class, ComplementClass::Invariant);
            }
        }

        #[test]
        fn pin_commutes_with_permuting_other_inputs(f in arb_constraint(), bit in 0usize..2) {
            // Swap the last two inputs, pin the first; compare with pinning then swapping.
            prop_assume!(f.arity() >= 3);
            let k = f.arity();
            let mut perm: Vec<usize> = (0..k).collect();
            perm.swap(k - 2, k - 1);
            let lhs = f.permuted(&perm).unwrap().pin(0, bit).unwrap();
            let mut rest: Vec<usize> = (0..k - 1).collect();
            rest.swap(k - 3, k - 2);
            let rhs = f.pin(0, bit).unwrap().permuted(&rest).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn symmetric_ops_stay_compact(sig in proptest::collection::vec(-3i64..=3, 2..=5), bit in 0usize..2) {
            let f = sym(&sig);
            let pinned = f.pin(0, bit).unwrap();
            let expect = if bit == 0 { &sig[..sig.len() - 1] } else { &sig[1..] };
            prop_assert_eq!(pinned, sym(expect));
            let m = f.marginalize(0).unwrap();
            let summed: Vec<i64> = sig.windows(2).map(|w| w[0] + w[1]).collect();
            prop_assert_eq!(m, sym(&summed));
        }
    }
}
