//! Constraint frames: variables, applications of named constraints, and
//! exact evaluation of the partition value by enumeration.

mod alpha;
mod elimination;
pub(crate) mod engine;
mod realization;

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::taxonomy::ClassLabel;

pub use alpha::{alpha_decomposition, AlphaDecomposition};
pub use elimination::{eliminate_constant_unary, Elimination};
pub use realization::{contract, substitute, RealizationGraph};

use engine::SumProduct;

/// Default bound on the number of enumerated variables.
pub const DEFAULT_CAP: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Application {
    pub constraint: String,
    pub scope: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ConstraintFrame {
    variables: Vec<String>,
    applications: Vec<Application>,
    constraints: BTreeMap<String, Constraint>,
}

impl ConstraintFrame {
    pub fn new() -> Self {
        Self::default()
    }

    /// Variables `x1..xn`.
    pub fn with_variables(n: usize) -> Self {
        let mut frame = Self::new();
        for i in 1..=n {
            frame.variables.push(format!("x{i}"));
        }
        frame
    }

    pub fn add_variable(&mut self, name: impl Into<String>) -> Result<usize> {
        let name = name.into();
        if self.variables.contains(&name) {
            return Err(Error::DuplicateName(name));
        }
        self.variables.push(name);
        Ok(self.variables.len() - 1)
    }

    /// Registers a constraint; re-adding an identical definition is a no-op.
    pub fn define(&mut self, name: impl Into<String>, c: Constraint) -> Result<()> {
        let name = name.into();
        match self.constraints.get(&name) {
            Some(prev) if *prev != c => Err(Error::NameConflict(name)),
            _ => {
                self.constraints.insert(name, c);
                Ok(())
            }
        }
    }

    pub fn apply(&mut self, name: &str, scope: Vec<usize>) -> Result<()> {
        let c = self
            .constraints
            .get(name)
            .ok_or_else(|| Error::UnknownConstraint(name.to_string()))?;
        if c.arity() != scope.len() {
            return Err(Error::ArityMismatch {
                expected: c.arity(),
                found: scope.len(),
            });
        }
        if let Some(&v) = scope.iter().find(|&&v| v >= self.variables.len()) {
            return Err(Error::UnknownVariable(format!("#{v}")));
        }
        self.applications.push(Application {
            constraint: name.to_string(),
            scope,
        });
        Ok(())
    }

    /// Applies a constraint to variables given by name.
    pub fn apply_named(&mut self, name: &str, scope: &[&str]) -> Result<()> {
        let idx = scope
            .iter()
            .map(|v| self.variable_index(v))
            .collect::<Result<Vec<_>>>()?;
        self.apply(name, idx)
    }

    pub fn variable_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn applications(&self) -> &[Application] {
        &self.applications
    }

    pub fn constraints(&self) -> &BTreeMap<String, Constraint> {
        &self.constraints
    }

    pub fn constraint(&self, name: &str) -> Result<&Constraint> {
        self.constraints
            .get(name)
            .ok_or_else(|| Error::UnknownConstraint(name.to_string()))
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    /// Number of applications of `name`.
    pub fn occurrences(&self, name: &str) -> usize {
        self.applications
            .iter()
            .filter(|a| a.constraint == name)
            .count()
    }

    /// Every application paired with its constraint.
    pub(crate) fn resolved(&self) -> impl Iterator<Item = (&Constraint, &[usize])> {
        self.applications
            .iter()
            .map(|a| (&self.constraints[&a.constraint], a.scope.as_slice()))
    }

    /// Drops library entries no application refers to.
    pub fn prune_library(&mut self) {
        let used: std::collections::BTreeSet<&String> =
            self.applications.iter().map(|a| &a.constraint).collect();
        let keep: BTreeMap<String, Constraint> = self
            .constraints
            .iter()
            .filter(|(k, _)| used.contains(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        self.constraints = keep;
    }

    pub(crate) fn from_parts(
        variables: Vec<String>,
        applications: Vec<Application>,
        constraints: BTreeMap<String, Constraint>,
    ) -> Result<Self> {
        let mut frame = ConstraintFrame {
            variables: Vec::new(),
            applications: Vec::new(),
            constraints,
        };
        for v in variables {
            frame.add_variable(v)?;
        }
        for a in applications {
            frame.apply(&a.constraint, a.scope)?;
        }
        Ok(frame)
    }
}

pub fn evaluate(frame: &ConstraintFrame) -> Result<Rational> {
    evaluate_with_cap(frame, DEFAULT_CAP)
}

pub fn evaluate_with_cap(frame: &ConstraintFrame, cap: usize) -> Result<Rational> {
    let n = frame.num_variables();
    if n > cap {
        return Err(Error::EnumerationCap { vars: n, cap });
    }
    Ok(SumProduct::new(frame.resolved()).total(n))
}

/// Closed form for frames built only from product-type constraints.
///
/// Returns `None` unless every constraint is unary, a scalar, or a symmetric
/// signature of the shape `[x,0..0]`, `[0..0,x]` or `y[1,z,..,z^k]`.
pub fn evaluate_factorized(frame: &ConstraintFrame) -> Option<Rational> {
    let n = frame.num_variables();
    let mut scalar = Rational::one();
    let mut per_var = vec![(Rational::one(), Rational::one()); n];
    for (c, scope) in frame.resolved() {
        let (coef, unary) = product_form(c)?;
        scalar *= coef;
        for &v in scope {
            per_var[v].0 *= &unary.0;
            per_var[v].1 *= &unary.1;
        }
    }
    Some(per_var.into_iter().fold(scalar, |acc, (a, b)| acc * (a + b)))
}

/// `f = coef * Π u(x_i)` for a single unary `u`.
fn product_form(c: &Constraint) -> Option<(Rational, (Rational, Rational))> {
    let one = Rational::one;
    let zero = Rational::zero;
    match c.arity() {
        0 => Some((c.first().clone(), (one(), one()))),
        1 => Some((one(), (c.value(0).clone(), c.value(1).clone()))),
        k => {
            let sig = c.symmetric_values()?;
            if !ClassLabel::Dg.contains(&sig) {
                return None;
            }
            if sig[1..].iter().all(Zero::is_zero) {
                Some((sig[0].clone(), (one(), zero())))
            } else if sig[..k].iter().all(Zero::is_zero) {
                Some((sig[k].clone(), (zero(), one())))
            } else {
                Some((sig[0].clone(), (one(), &sig[1] / &sig[0])))
            }
        }
    }
}
