//! Gadget chains: straight-line programs over a register file of
//! constraints, replayable with exact equality checks.
//!
//! Registers `0..sources.len()` hold the inputs; step `i` writes register
//! `sources.len() + i`. Every step records the constraint it produces and a
//! scalar: the realization factor `λ` for contractions, the normalizing
//! factor `base = scalar * operand` for series, and 1 otherwise.

use std::collections::BTreeMap;

use num_traits::One;
use serde::{Deserialize, Serialize};

use super::series::{unary_series, PConvergenceSeries};
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::frame::{contract, Application, RealizationGraph};
use crate::rational::Rational;

pub type Reg = usize;

pub const DEFAULT_M_RANGE: (u32, u32) = (1, 50);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepOp {
    /// `f^{x_var = bit}`, justified by register `delta` holding `Δ_bit`.
    Pin {
        operand: Reg,
        var: usize,
        bit: usize,
        delta: Reg,
    },
    /// `f^{x_var = x_into}`.
    Merge { operand: Reg, var: usize, into: usize },
    Marginalize { operand: Reg, var: usize },
    Power { operand: Reg, exponent: u32 },
    /// Library names `r<n>` refer to registers.
    Contract { graph: RealizationGraph },
    /// The result is the series target; the series base is `scalar * operand`.
    Series {
        operand: Reg,
        series: PConvergenceSeries,
    },
}

impl StepOp {
    pub fn kind(&self) -> &'static str {
        match self {
            StepOp::Pin { .. } => "pin",
            StepOp::Merge { .. } => "merge",
            StepOp::Marginalize { .. } => "marginalize",
            StepOp::Power { .. } => "power",
            StepOp::Contract { .. } => "contract",
            StepOp::Series { .. } => "series",
        }
    }

    fn operands(&self) -> Vec<Reg> {
        match self {
            StepOp::Pin { operand, delta, .. } => vec![*operand, *delta],
            StepOp::Merge { operand, .. }
            | StepOp::Marginalize { operand, .. }
            | StepOp::Power { operand, .. }
            | StepOp::Series { operand, .. } => vec![*operand],
            StepOp::Contract { graph } => graph
                .constraints
                .keys()
                .filter_map(|k| register_of(k))
                .collect(),
        }
    }

    fn remap(&mut self, map: &dyn Fn(Reg) -> Reg) {
        match self {
            StepOp::Pin { operand, delta, .. } => {
                *operand = map(*operand);
                *delta = map(*delta);
            }
            StepOp::Merge { operand, .. }
            | StepOp::Marginalize { operand, .. }
            | StepOp::Power { operand, .. }
            | StepOp::Series { operand, .. } => *operand = map(*operand),
            StepOp::Contract { graph } => {
                let rename = |k: &str| register_of(k).map(|r| register_name(map(r)));
                graph.constraints = std::mem::take(&mut graph.constraints)
                    .into_iter()
                    .map(|(k, v)| (rename(&k).unwrap_or(k), v))
                    .collect();
                for a in &mut graph.applications {
                    if let Some(n) = rename(&a.constraint) {
                        a.constraint = n;
                    }
                }
            }
        }
    }
}

pub(crate) fn register_name(r: Reg) -> String {
    format!("r{r}")
}

fn register_of(name: &str) -> Option<Reg> {
    name.strip_prefix('r')?.parse().ok()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    #[serde(flatten)]
    pub op: StepOp,
    #[serde(with = "crate::rational::serde_str")]
    pub scalar: Rational,
    #[serde(with = "crate::json::constraint_value")]
    pub result: Constraint,
    /// Set when a step departs from the default construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetChain {
    #[serde(with = "crate::json::constraint_list")]
    pub sources: Vec<Constraint>,
    pub steps: Vec<Step>,
    /// Register holding the final constraint.
    pub target: Reg,
}

impl GadgetChain {
    /// Final constraint as recorded in the chain.
    pub fn output(&self) -> &Constraint {
        self.register_value(self.target)
    }

    fn register_value(&self, r: Reg) -> &Constraint {
        if r < self.sources.len() {
            &self.sources[r]
        } else {
            &self.steps[r - self.sources.len()].result
        }
    }

    pub fn notes(&self) -> Vec<&str> {
        self.steps.iter().filter_map(|s| s.note.as_deref()).collect()
    }

    pub fn series_steps(&self) -> impl Iterator<Item = &PConvergenceSeries> {
        self.steps.iter().filter_map(|s| match &s.op {
            StepOp::Series { series, .. } => Some(series),
            _ => None,
        })
    }

    /// Appends `next`, binding each of its sources to a register of `self`
    /// holding the same constraint. Source 0 binds to the current target.
    pub fn then(&self, next: &GadgetChain) -> Result<GadgetChain> {
        let base = self.sources.len() + self.steps.len();
        let mut binding = Vec::with_capacity(next.sources.len());
        for (i, s) in next.sources.iter().enumerate() {
            let found = if i == 0 && self.output() == s {
                Some(self.target)
            } else {
                (0..base).find(|&r| self.register_value(r) == s)
            };
            binding.push(found.ok_or_else(|| {
                Error::Precondition(format!("no register holds source {i} = {s} of the appended chain"))
            })?);
        }
        let shift = |r: Reg| {
            if r < next.sources.len() {
                binding[r]
            } else {
                r - next.sources.len() + base
            }
        };
        let mut steps = self.steps.clone();
        for step in &next.steps {
            let mut s = step.clone();
            s.op.remap(&shift);
            steps.push(s);
        }
        Ok(GadgetChain {
            sources: self.sources.clone(),
            steps,
            target: shift(next.target),
        })
    }
}

/// Builder used by the synthesis routines. Every step is computed and
/// recorded as it is added.
#[derive(Clone, Debug, Default)]
pub struct ChainBuilder {
    sources: Vec<Constraint>,
    steps: Vec<Step>,
}

impl ChainBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn source(&mut self, c: Constraint) -> Reg {
        assert!(self.steps.is_empty(), "sources must precede steps");
        self.sources.push(c);
        self.sources.len() - 1
    }

    pub fn value(&self, r: Reg) -> &Constraint {
        if r < self.sources.len() {
            &self.sources[r]
        } else {
            &self.steps[r - self.sources.len()].result
        }
    }

    fn push(&mut self, op: StepOp, scalar: Rational, result: Constraint) -> Reg {
        self.steps.push(Step {
            op,
            scalar,
            result,
            note: None,
        });
        self.sources.len() + self.steps.len() - 1
    }

    /// Attaches a note to the step that produced `r`.
    pub fn annotate(&mut self, r: Reg, note: impl Into<String>) {
        let n = self.sources.len();
        if r >= n {
            self.steps[r - n].note = Some(note.into());
        }
    }

    pub fn pin(&mut self, r: Reg, var: usize, bit: usize, delta: Reg) -> Result<Reg> {
        if !self.value(delta).is_delta(bit) {
            return Err(Error::Precondition(format!(
                "register {delta} does not hold Δ_{bit}"
            )));
        }
        let result = self.value(r).pin(var, bit)?;
        Ok(self.push(
            StepOp::Pin {
                operand: r,
                var,
                bit,
                delta,
            },
            Rational::one(),
            result,
        ))
    }

    pub fn merge(&mut self, r: Reg, var: usize, into: usize) -> Result<Reg> {
        let result = self.value(r).merge(var, into)?;
        Ok(self.push(StepOp::Merge { operand: r, var, into }, Rational::one(), result))
    }

    /// `f(x, ..., x)` via repeated merges.
    pub fn merge_all(&mut self, mut r: Reg) -> Result<Reg> {
        if self.value(r).arity() == 0 {
            return Err(Error::ArityZero);
        }
        while self.value(r).arity() > 1 {
            r = self.merge(r, 1, 0)?;
        }
        Ok(r)
    }

    pub fn marginalize(&mut self, r: Reg, var: usize) -> Result<Reg> {
        let result = self.value(r).marginalize(var)?;
        Ok(self.push(StepOp::Marginalize { operand: r, var }, Rational::one(), result))
    }

    pub fn power(&mut self, r: Reg, exponent: u32) -> Result<Reg> {
        let result = self.value(r).power(exponent)?;
        Ok(self.push(StepOp::Power { operand: r, exponent }, Rational::one(), result))
    }

    /// Contraction over registers: each application is `(register, scope)`.
    pub fn contract(
        &mut self,
        ports: usize,
        internals: usize,
        apps: &[(Reg, Vec<usize>)],
        lambda: Rational,
    ) -> Result<Reg> {
        let mut graph = RealizationGraph::new(ports, internals).with_lambda(lambda.clone());
        for (r, scope) in apps {
            let name = register_name(*r);
            graph.define(name.clone(), self.value(*r).clone())?;
            graph.applications.push(Application {
                constraint: name,
                scope: scope.clone(),
            });
        }
        let result = contract(&graph)?;
        Ok(self.push(StepOp::Contract { graph }, lambda, result))
    }

    /// `λ * f` as a single-node contraction.
    pub fn scale(&mut self, r: Reg, lambda: Rational) -> Result<Reg> {
        let k = self.value(r).arity();
        self.contract(k, 0, &[(r, (0..k).collect())], lambda)
    }

    /// Records a series whose base is `scalar * value(r)`.
    pub fn series(&mut self, r: Reg, series: PConvergenceSeries, scalar: Rational) -> Result<Reg> {
        if self.value(r).scaled(&scalar) != series.base {
            return Err(Error::Precondition(format!(
                "series base {} is not {} times register {r}",
                series.base, scalar
            )));
        }
        let target = series.target.clone();
        Ok(self.push(StepOp::Series { operand: r, series }, scalar, target))
    }

    /// `Δ_i` from a unary register `[x, y]` with `|x| != |y|`.
    pub fn delta_from_unary(&mut self, r: Reg) -> Result<(usize, Reg)> {
        let u = self.value(r);
        if u.arity() != 1 {
            return Err(Error::ArityMismatch {
                expected: 1,
                found: u.arity(),
            });
        }
        let (i, series, scalar) = unary_series(u.value(0), u.value(1))?;
        Ok((i, self.series(r, series, scalar)?))
    }

    pub(crate) fn series_at(&self, r: Reg) -> Option<&PConvergenceSeries> {
        match &self.steps.get(r.checked_sub(self.sources.len())?)?.op {
            StepOp::Series { series, .. } => Some(series),
            _ => None,
        }
    }

    /// Chain ending at `target`, keeping only the steps it depends on.
    pub fn finish(&self, target: Reg) -> GadgetChain {
        let n = self.sources.len();
        let mut needed = vec![false; n + self.steps.len()];
        needed[target] = true;
        for r in (n..=target.max(n)).rev() {
            if r < needed.len() && needed[r] && r >= n {
                for o in self.steps[r - n].op.operands() {
                    needed[o] = true;
                }
            }
        }
        let mut map = BTreeMap::new();
        for r in 0..n {
            map.insert(r, r);
        }
        let mut steps = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            let r = n + i;
            if !needed[r] {
                continue;
            }
            map.insert(r, n + steps.len());
            let mut s = step.clone();
            s.op.remap(&|o| map[&o]);
            steps.push(s);
        }
        GadgetChain {
            sources: self.sources.clone(),
            steps,
            target: map[&target],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepReport {
    pub index: usize,
    pub kind: &'static str,
    pub ok: bool,
    pub detail: String,
    /// For series steps: the largest normalized deviation over the range.
    pub worst_ratio: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainReport {
    pub ok: bool,
    pub steps: Vec<StepReport>,
    pub worst_series_ratio: Option<Rational>,
    pub output: Option<Constraint>,
}

impl ChainReport {
    pub fn first_failure(&self) -> Option<&StepReport> {
        self.steps.iter().find(|s| !s.ok)
    }
}

fn check_step(
    regs: &[Constraint],
    step: &Step,
    m_range: (u32, u32),
) -> std::result::Result<(Constraint, Option<Rational>), String> {
    let get = |r: Reg| {
        regs.get(r)
            .ok_or_else(|| format!("register {r} is not defined yet"))
    };
    let unit = |s: &Rational| {
        if s.is_one() {
            Ok(())
        } else {
            Err(format!("scalar {s} should be 1"))
        }
    };
    let e = |err: Error| err.to_string();
    let mut ratio = None;
    let value = match &step.op {
        StepOp::Pin {
            operand,
            var,
            bit,
            delta,
        } => {
            unit(&step.scalar)?;
            if !get(*delta)?.is_delta(*bit) {
                return Err(format!("register {delta} is not Δ_{bit}"));
            }
            get(*operand)?.pin(*var, *bit).map_err(e)?
        }
        StepOp::Merge { operand, var, into } => {
            unit(&step.scalar)?;
            get(*operand)?.merge(*var, *into).map_err(e)?
        }
        StepOp::Marginalize { operand, var } => {
            unit(&step.scalar)?;
            get(*operand)?.marginalize(*var).map_err(e)?
        }
        StepOp::Power { operand, exponent } => {
            unit(&step.scalar)?;
            get(*operand)?.power(*exponent).map_err(e)?
        }
        StepOp::Contract { graph } => {
            if graph.lambda != step.scalar {
                return Err(format!(
                    "step scalar {} differs from graph scalar {}",
                    step.scalar, graph.lambda
                ));
            }
            for (name, c) in &graph.constraints {
                let r = register_of(name).ok_or_else(|| format!("library entry {name:?} is not a register"))?;
                if get(r)? != c {
                    return Err(format!("library entry {name} differs from register {r}"));
                }
            }
            contract(graph).map_err(e)?
        }
        StepOp::Series { operand, series } => {
            series.validate().map_err(e)?;
            if get(*operand)?.scaled(&step.scalar) != series.base {
                return Err(format!(
                    "series base {} is not {} times register {operand}",
                    series.base, step.scalar
                ));
            }
            let check = series.check_range(m_range.0, m_range.1);
            if let Some((m, why)) = check.failure {
                return Err(format!("series fails at m = {m}: {why}"));
            }
            ratio = Some(check.worst_ratio);
            series.target.clone()
        }
    };
    if value != step.result {
        return Err(format!("replay gives {value}, chain records {}", step.result));
    }
    Ok((value, ratio))
}

/// Replays every step exactly and checks each series on `m_range`.
pub fn verify_chain(chain: &GadgetChain, m_range: (u32, u32)) -> ChainReport {
    let mut regs: Vec<Constraint> = chain.sources.clone();
    let mut reports = Vec::new();
    let mut worst: Option<Rational> = None;
    let mut ok = true;
    for (index, step) in chain.steps.iter().enumerate() {
        match check_step(&regs, step, m_range) {
            Ok((value, ratio)) => {
                if let Some(r) = &ratio {
                    worst = Some(worst.map_or(r.clone(), |w| w.max(r.clone())));
                }
                regs.push(value);
                reports.push(StepReport {
                    index,
                    kind: step.op.kind(),
                    ok: true,
                    detail: String::new(),
                    worst_ratio: ratio,
                });
            }
            Err(detail) => {
                ok = false;
                reports.push(StepReport {
                    index,
                    kind: step.op.kind(),
                    ok: false,
                    detail,
                    worst_ratio: None,
                });
                break;
            }
        }
    }
    let output = if ok { regs.get(chain.target).cloned() } else { None };
    if ok && output.is_none() {
        ok = false;
    }
    ChainReport {
        ok,
        steps: reports,
        worst_series_ratio: worst,
        output,
    }
}

/// `Err` with the failing step when the chain does not replay.
pub fn ensure_verified(chain: &GadgetChain, m_range: (u32, u32)) -> Result<()> {
    let report = verify_chain(chain, m_range);
    match report.first_failure() {
        Some(s) => Err(Error::Verification {
            step: s.index,
            detail: s.detail.clone(),
        }),
        None if report.ok => Ok(()),
        None => Err(Error::Verification {
            step: chain.steps.len(),
            detail: format!("target register {} is undefined", chain.target),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadget::series::delta_series_from_unary;
    use crate::rational::{int, q};

    fn sym(v: &[i64]) -> Constraint {
        Constraint::symmetric_ints(v)
    }

    fn sample_chain() -> GadgetChain {
        let mut b = ChainBuilder::new();
        let f = b.source(sym(&[1, 1, 1, -1]));
        let h = b
            .contract(2, 2, &[(f, vec![0, 2, 3]), (f, vec![1, 2, 3])], int(1))
            .unwrap();
        let u = b.marginalize(h, 1).unwrap();
        b.power(u, 3).unwrap();
        b.merge_all(f).unwrap();
        b.finish(u)
    }

    #[test]
    fn replay_and_prune() {
        let c = sample_chain();
        assert_eq!(c.steps.len(), 2);
        assert_eq!(c.output(), &sym(&[6, 6]));
        assert!(verify_chain(&c, DEFAULT_M_RANGE).ok);
    }

    #[test]
    fn corrupted_contract_scalar_fails_at_that_step() {
        let mut c = sample_chain();
        if let StepOp::Contract { graph } = &mut c.steps[0].op {
            graph.lambda = q(1, 2);
        }
        c.steps[0].scalar = q(1, 2);
        let r = verify_chain(&c, DEFAULT_M_RANGE);
        assert!(!r.ok);
        assert_eq!(r.first_failure().unwrap().index, 0);
        assert_eq!(r.first_failure().unwrap().kind, "contract");
    }

    #[test]
    fn series_step_checks_base_and_rate() {
        let mut b = ChainBuilder::new();
        let u = b.source(sym(&[2, 1]));
        let (i, d) = b.delta_from_unary(u).unwrap();
        assert_eq!(i, 0);
        let c = b.finish(d);
        let r = verify_chain(&c, (1, 30));
        assert!(r.ok);
        assert_eq!(r.worst_series_ratio, Some(q(1, 2)));

        let mut bad = c.clone();
        if let StepOp::Series { series, .. } = &mut bad.steps[0].op {
            series.lambda = q(1, 5);
        }
        assert!(!verify_chain(&bad, (1, 30)).ok);
        let mut b = ChainBuilder::new();
        let u = b.source(sym(&[2, 1]));
        let (_, s, _) = delta_series_from_unary(&int(2), &int(1)).unwrap();
        assert!(b.series(u, s, int(1)).is_err());
    }

    #[test]
    fn pin_requires_matching_delta() {
        let mut b = ChainBuilder::new();
        let f = b.source(sym(&[1, 2, 3]));
        let d = b.source(Constraint::delta(1));
        assert!(b.pin(f, 0, 0, d).is_err());
        let p = b.pin(f, 0, 1, d).unwrap();
        assert_eq!(b.value(p), &sym(&[2, 3]));
    }

    #[test]
    fn chains_compose() {
        let first = sample_chain();
        let mut b = ChainBuilder::new();
        let u = b.source(sym(&[6, 6]));
        let sq = b.power(u, 2).unwrap();
        let second = b.finish(sq);
        let joined = first.then(&second).unwrap();
        assert_eq!(joined.output(), &sym(&[36, 36]));
        assert!(verify_chain(&joined, DEFAULT_M_RANGE).ok);
    }

    #[test]
    fn json_round_trip() {
        let c = sample_chain();
        let text = crate::json::to_canonical_string(&c).unwrap();
        let back: GadgetChain = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
