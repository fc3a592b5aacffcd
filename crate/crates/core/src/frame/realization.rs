//! Realization graphs (gadgets with external ports) and substitution of a
//! gadget for every application of a constraint.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::engine::SumProduct;
use super::{Application, ConstraintFrame, DEFAULT_CAP};
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::rational::{pow, Rational};

/// A gadget: variables `0..ports` are external, `ports..ports+internals`
/// are summed out. The realized constraint is `lambda * Σ Π`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationGraph {
    pub ports: usize,
    pub internals: usize,
    pub applications: Vec<Application>,
    #[serde(with = "crate::json::library")]
    pub constraints: BTreeMap<String, Constraint>,
    #[serde(with = "crate::rational::serde_str")]
    pub lambda: Rational,
}

impl RealizationGraph {
    pub fn new(ports: usize, internals: usize) -> Self {
        RealizationGraph {
            ports,
            internals,
            applications: Vec::new(),
            constraints: BTreeMap::new(),
            lambda: Rational::one(),
        }
    }

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
        self.applications.push(Application {
            constraint: name.to_string(),
            scope,
        });
        self.validate()
    }

    pub fn with_lambda(mut self, lambda: Rational) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ports + self.internals;
        for a in &self.applications {
            let c = self
                .constraints
                .get(&a.constraint)
                .ok_or_else(|| Error::UnknownConstraint(a.constraint.clone()))?;
            if c.arity() != a.scope.len() {
                return Err(Error::ArityMismatch {
                    expected: c.arity(),
                    found: a.scope.len(),
                });
            }
            if let Some(&v) = a.scope.iter().find(|&&v| v >= n) {
                return Err(Error::UnknownVariable(format!("#{v}")));
            }
        }
        Ok(())
    }
}

/// The constraint realized by a gadget.
pub fn contract(g: &RealizationGraph) -> Result<Constraint> {
    g.validate()?;
    let n = g.ports + g.internals;
    if n > DEFAULT_CAP {
        return Err(Error::EnumerationCap {
            vars: n,
            cap: DEFAULT_CAP,
        });
    }
    // Engine variable v is bit v; ports are reversed so that port 0 is the
    // most significant bit of the result index.
    let to_bit = |v: usize| if v < g.ports { g.ports - 1 - v } else { v };
    let scopes: Vec<Vec<usize>> = g
        .applications
        .iter()
        .map(|a| a.scope.iter().map(|&v| to_bit(v)).collect())
        .collect();
    let engine = SumProduct::new(
        g.applications
            .iter()
            .zip(&scopes)
            .map(|(a, s)| (&g.constraints[&a.constraint], s.as_slice())),
    );
    let values = (0..1u64 << g.ports)
        .map(|e| engine.partial_sum(e, g.ports, g.internals) * &g.lambda)
        .collect();
    Constraint::new(g.ports, values)
}

fn fresh_name(taken: &dyn Fn(&str) -> bool, base: &str) -> String {
    let mut name = base.to_string();
    while taken(&name) {
        name.push('\'');
    }
    name
}

/// Replaces every application of `target` by a copy of `gadget`.
///
/// Returns the new frame and `γ = λ^{-t}` for `t` replaced applications, so
/// that `evaluate(new) = γ * evaluate(frame)`.
pub fn substitute(
    frame: &ConstraintFrame,
    target: &str,
    gadget: &RealizationGraph,
) -> Result<(ConstraintFrame, Rational)> {
    let f = frame.constraint(target)?;
    if gadget.ports != f.arity() {
        return Err(Error::ArityMismatch {
            expected: f.arity(),
            found: gadget.ports,
        });
    }
    if gadget.lambda.is_zero() {
        return Err(Error::Precondition("gadget scalar must be nonzero".into()));
    }
    if contract(gadget)? != *f {
        return Err(Error::Precondition(format!(
            "gadget does not realize constraint {target:?}"
        )));
    }

    let mut out = ConstraintFrame::new();
    for v in frame.variables() {
        out.add_variable(v.clone())?;
    }
    for (name, c) in frame.constraints() {
        if name != target {
            out.define(name.clone(), c.clone())?;
        }
    }
    let mut renamed = BTreeMap::new();
    for (name, c) in &gadget.constraints {
        let taken = |n: &str| match out.constraints().get(n) {
            Some(prev) => prev != c,
            None => n == target,
        };
        let new_name = fresh_name(&taken, name);
        out.define(new_name.clone(), c.clone())?;
        renamed.insert(name.clone(), new_name);
    }

    let mut t = 0u32;
    for app in frame.applications() {
        if app.constraint != target {
            out.apply(&app.constraint, app.scope.clone())?;
            continue;
        }
        let mut locals = Vec::with_capacity(gadget.internals);
        for j in 0..gadget.internals {
            let vars = out.variables().to_vec();
            let name = fresh_name(&|n| vars.iter().any(|v| v == n), &format!("{target}.{t}.{j}"));
            locals.push(out.add_variable(name)?);
        }
        for g_app in &gadget.applications {
            let scope = g_app
                .scope
                .iter()
                .map(|&v| {
                    if v < gadget.ports {
                        app.scope[v]
                    } else {
                        locals[v - gadget.ports]
                    }
                })
                .collect();
            out.apply(&renamed[&g_app.constraint], scope)?;
        }
        t += 1;
    }
    out.prune_library();
    let gamma = pow(&gadget.lambda, t).recip();
    Ok((out, gamma))
}
