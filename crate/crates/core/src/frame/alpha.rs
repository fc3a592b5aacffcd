//! Grouping of assignments by how often each input pattern of one
//! constraint is used.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::engine::SumProduct;
use super::{ConstraintFrame, DEFAULT_CAP};
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::rational::{pow, Rational};

/// `csp(Ω) = Σ_ℓ α_ℓ Π_x f(x)^{ℓ_x}`, where `ℓ_x` counts the applications
/// of `f` that read input pattern `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaDecomposition {
    pub arity: usize,
    /// Input patterns on which `f` is nonzero.
    pub support: Vec<usize>,
    /// Number of applications of `f`.
    pub applications: usize,
    /// Every multiplicity vector reached by some assignment, with its weight.
    pub coefficients: BTreeMap<Vec<u32>, Rational>,
}

impl AlphaDecomposition {
    /// Whether `ℓ` only uses patterns in the support of `f`.
    pub fn in_support(&self, ell: &[u32]) -> bool {
        ell.iter()
            .enumerate()
            .all(|(x, &n)| n == 0 || self.support.contains(&x))
    }

    /// `Σ_ℓ α_ℓ Π_x g(x)^{ℓ_x}` over the selected multiplicity vectors.
    pub fn weigh(&self, g: &Constraint, filter: impl Fn(&[u32]) -> bool) -> Rational {
        let mut total = Rational::zero();
        for (ell, alpha) in &self.coefficients {
            if alpha.is_zero() || !filter(ell) {
                continue;
            }
            let mut term = alpha.clone();
            for (x, &n) in ell.iter().enumerate() {
                if n > 0 {
                    term *= pow(g.value(x), n);
                }
            }
            total += term;
        }
        total
    }

    /// Rebuilds the partition value with `g` substituted for `f` (00 = 1).
    pub fn reconstruct(&self, g: &Constraint) -> Rational {
        self.weigh(g, |_| true)
    }
}

pub fn alpha_decomposition(frame: &ConstraintFrame, f_name: &str) -> Result<AlphaDecomposition> {
    let f = frame.constraint(f_name)?;
    let n = frame.num_variables();
    if n > DEFAULT_CAP {
        return Err(Error::EnumerationCap {
            vars: n,
            cap: DEFAULT_CAP,
        });
    }
    let k = f.arity();
    let f_scopes: Vec<&[usize]> = frame
        .applications()
        .iter()
        .filter(|a| a.constraint == f_name)
        .map(|a| a.scope.as_slice())
        .collect();
    let others = SumProduct::new(
        frame
            .applications()
            .iter()
            .filter(|a| a.constraint != f_name)
            .map(|a| (&frame.constraints()[&a.constraint], a.scope.as_slice())),
    );
    let mut coefficients: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
    for sigma in 0..1u64 << n {
        let mut ell = vec![0u32; 1 << k];
        for scope in &f_scopes {
            let x = scope
                .iter()
                .fold(0usize, |i, &v| (i << 1) | ((sigma >> v) & 1) as usize);
            ell[x] += 1;
        }
        let w = others.partial_sum(sigma, 0, 0);
        *coefficients.entry(ell).or_insert_with(Rational::zero) += w;
    }
    let support = (0..1 << k).filter(|&x| !f.value(x).is_zero()).collect();
    Ok(AlphaDecomposition {
        arity: k,
        support,
        applications: f_scopes.len(),
        coefficients,
    })
}
