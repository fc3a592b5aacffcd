//! Brute-force sum of products over integer-scaled tables.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::constraint::Constraint;
use crate::rational::{common_denominator, Rational};

/// Assignments per parallel chunk, as a power of two.
const CHUNK_BITS: usize = 12;

struct Factor {
    table: Vec<BigInt>,
    scope: Vec<usize>,
}

/// `Σ_σ Π_a f_a(σ|scope_a)` with each table scaled to integers.
///
/// Variable `v` is bit `v` of the assignment word.
pub(crate) struct SumProduct {
    factors: Vec<Factor>,
    denom: BigInt,
}

impl SumProduct {
    pub(crate) fn new<'a>(apps: impl IntoIterator<Item = (&'a Constraint, &'a [usize])>) -> Self {
        let mut denom = BigInt::one();
        let mut factors = Vec::new();
        for (c, scope) in apps {
            let d = common_denominator(c.values());
            let table = c
                .values()
                .iter()
                .map(|v| v.numer() * (&d / v.denom()))
                .collect();
            denom *= d;
            factors.push(Factor {
                table,
                scope: scope.to_vec(),
            });
        }
        SumProduct { factors, denom }
    }

    fn term(&self, assignment: u64) -> BigInt {
        let mut acc = BigInt::one();
        for f in &self.factors {
            let idx = f
                .scope
                .iter()
                .fold(0usize, |i, &v| (i << 1) | ((assignment >> v) & 1) as usize);
            let t = &f.table[idx];
            if t.is_zero() {
                return BigInt::zero();
            }
            acc *= t;
        }
        acc
    }

    fn range_sum(&self, fixed: u64, shift: usize, lo: u64, hi: u64) -> BigInt {
        let mut total = BigInt::zero();
        for i in lo..hi {
            total += self.term(fixed | (i << shift));
        }
        total
    }

    /// Sum over the `free` variables starting at bit `shift`, with the
    /// lower bits taken from `fixed`.
    pub(crate) fn partial_sum(&self, fixed: u64, shift: usize, free: usize) -> Rational {
        let count = 1u64 << free;
        let total = if free > CHUNK_BITS {
            let chunk = 1u64 << CHUNK_BITS;
            (0..count / chunk)
                .into_par_iter()
                .map(|c| self.range_sum(fixed, shift, c * chunk, (c + 1) * chunk))
                .reduce(BigInt::zero, |a, b| a + b)
        } else {
            self.range_sum(fixed, shift, 0, count)
        };
        Rational::new(total, self.denom.clone())
    }

    pub(crate) fn total(&self, n_vars: usize) -> Rational {
        self.partial_sum(0, 0, n_vars)
    }
}
