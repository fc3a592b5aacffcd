//! Approximating a frame's value from one query to an approximation oracle
//! for the frame with a convergent family `g_m` in place of `f`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::frame::{alpha_decomposition, evaluate, ConstraintFrame};
use crate::gadget::PConvergenceSeries;
use crate::rational::{common_denominator, pow, pow2_lower, q, within_pow2, Rational};

/// Largest arity of `f` accepted; `a0` holds `(2^k)!`.
pub const MAX_TARGET_ARITY: usize = 4;
/// Precision (in bits) of the rational stand-in for `2^δ`.
const SLACK_BITS: u32 = 40;
const MAX_M: u32 = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApParams {
    #[serde(with = "crate::rational::serde_str")]
    pub lambda: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub a0: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub b0: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub d0: Rational,
    pub m: u32,
    #[serde(with = "crate::rational::serde_str")]
    pub delta: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub epsilon: Rational,
}

impl ApParams {
    /// `λ^m a0 < min{1, δ}` and `λ^m b0 < min{d0, δ}`.
    pub fn selection_holds(&self) -> bool {
        let lm = pow(&self.lambda, self.m);
        let one = Rational::one();
        &lm * &self.a0 < one.min(self.delta.clone())
            && &lm * &self.b0 < self.d0.clone().min(self.delta.clone())
    }

    /// Answers below this magnitude are reported as zero.
    pub fn threshold(&self) -> Rational {
        &self.d0 / Rational::from_integer(2.into())
    }
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

fn check_epsilon(epsilon: &Rational) -> Result<()> {
    if !(epsilon.is_positive() && *epsilon < Rational::one()) {
        return Err(Error::Precondition(format!("ε = {epsilon} is outside (0,1)")));
    }
    Ok(())
}

fn check_series(frame: &ConstraintFrame, f_name: &str, series: &PConvergenceSeries) -> Result<()> {
    series.validate()?;
    let f = frame.constraint(f_name)?;
    if series.target != *f {
        return Err(Error::Precondition(format!(
            "series converges to {}, not to {f_name} = {f}",
            series.target
        )));
    }
    if f.arity() > MAX_TARGET_ARITY {
        return Err(Error::Precondition(format!(
            "target arity {} exceeds {MAX_TARGET_ARITY}",
            f.arity()
        )));
    }
    Ok(())
}

/// Whether `m` is large enough for the thresholded single query to land in
/// `2^{±ε}` of the true value, given an oracle within `2^{±δ}`.
///
/// With `A = λ^m a0` and `E = λ^m b0 / d0`, the frame value moves by a factor
/// in `[1/(1+A) - E, 1/(1-A) + E]`, which must sit inside `[1/ρ, ρ]` for a
/// rational `ρ <= 2^δ`; zero values stay below the threshold when
/// `2 λ^m b0 < d0 / 2`.
fn m_is_sufficient(a: &Rational, bb: &Rational, d0: &Rational, rho: &Rational) -> bool {
    let one = Rational::one();
    if *a >= one {
        return false;
    }
    let e = bb / d0;
    let low = (&one + a).recip() - &e;
    let high = (&one - a).recip() + &e;
    low >= rho.recip() && high <= *rho && bb * Rational::from_integer(4.into()) < *d0
}

pub fn compute_constants(
    frame: &ConstraintFrame,
    f_name: &str,
    series: &PConvergenceSeries,
    epsilon: &Rational,
) -> Result<ApParams> {
    check_epsilon(epsilon)?;
    check_series(frame, f_name, series)?;
    let f = frame.constraint(f_name)?;
    let k = f.arity();
    let alpha = alpha_decomposition(frame, f_name)?;
    let nodes = frame.applications().len() as u32;

    let a0 = Rational::from_integer(factorial(1u64 << k) * BigInt::from(2).pow(4 * k as u32));
    let off_support: Rational = alpha
        .coefficients
        .iter()
        .filter(|(ell, _)| !alpha.in_support(ell))
        .map(|(_, a)| a.abs())
        .sum();
    let two_max = f.max_abs() * Rational::from_integer(2.into());
    let b0 = (Rational::one() + pow(&two_max, nodes)) * off_support;
    let denom = common_denominator(frame.resolved().flat_map(|(c, _)| c.values()));
    let d0 = Rational::from_integer(denom).recip();
    let d0 = pow(&d0, nodes);
    let delta = epsilon / Rational::from_integer(2.into());
    let rho = pow2_lower(&delta, SLACK_BITS)?;

    let mut params = ApParams {
        lambda: series.lambda.clone(),
        a0,
        b0,
        d0,
        m: 1,
        delta,
        epsilon: epsilon.clone(),
    };
    let mut lm = series.lambda.clone();
    while params.m <= MAX_M {
        let a = &lm * &params.a0;
        let bb = &lm * &params.b0;
        if params.selection_holds() && m_is_sufficient(&a, &bb, &params.d0, &rho) {
            return Ok(params);
        }
        params.m += 1;
        lm *= &series.lambda;
    }
    Err(Error::Precondition(format!("no m up to {MAX_M} meets the selection conditions")))
}

/// The frame with every application of `f_name` reading `g` instead.
pub fn replace_constraint(frame: &ConstraintFrame, f_name: &str, g: Constraint) -> Result<ConstraintFrame> {
    let mut lib = frame.constraints().clone();
    let slot = lib
        .get_mut(f_name)
        .ok_or_else(|| Error::UnknownConstraint(f_name.to_string()))?;
    if slot.arity() != g.arity() {
        return Err(Error::ArityMismatch {
            expected: slot.arity(),
            found: g.arity(),
        });
    }
    *slot = g;
    ConstraintFrame::from_parts(frame.variables().to_vec(), frame.applications().to_vec(), lib)
}

/// `(Γ1, Γ2)`: the part of `csp(Ω_m)` from multiplicity vectors inside the
/// support of `f`, and the rest.
pub fn gamma_split(
    frame: &ConstraintFrame,
    f_name: &str,
    series: &PConvergenceSeries,
    m: u32,
) -> Result<(Rational, Rational)> {
    let alpha = alpha_decomposition(frame, f_name)?;
    let g = series.generator(m);
    let g1 = alpha.weigh(&g, |ell| alpha.in_support(ell));
    let g2 = alpha.weigh(&g, |ell| !alpha.in_support(ell));
    Ok((g1, g2))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleAnswer {
    pub value: Rational,
    /// Whether `value` is within `2^{±δ}` of the true value. Not visible to
    /// the algorithm using the answer.
    pub succeeded: bool,
}

pub trait Oracle {
    fn query(&mut self, frame: &ConstraintFrame, delta: &Rational) -> Result<OracleAnswer>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    Exact,
    /// Scales by the largest legal factor, up or down by a coin flip.
    WorstLegal,
    /// Scales by a factor drawn uniformly from the legal range.
    RandomLegal,
    /// Random legal answers, replaced by an arbitrary value with the
    /// failure probability.
    Faulty,
}

impl std::str::FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(OracleMode::Exact),
            "worst-legal" => Ok(OracleMode::WorstLegal),
            "random-legal" => Ok(OracleMode::RandomLegal),
            "faulty" => Ok(OracleMode::Faulty),
            _ => Err(Error::Malformed(format!("unknown oracle mode {s:?}"))),
        }
    }
}

/// Oracle answering from exact evaluation perturbed according to `mode`.
pub struct SimulatedOracle {
    pub mode: OracleMode,
    pub failure_prob: Rational,
    rng: ChaCha8Rng,
    /// `δ` and the largest legal factor for it.
    slack: Option<(Rational, Rational)>,
}

/// Uniform rational in `[0, 1)` with 32-bit resolution.
fn unit(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(BigInt::from(rng.gen::<u32>()), BigInt::from(1u64 << 32))
}

impl SimulatedOracle {
    pub fn new(mode: OracleMode, failure_prob: Rational, seed: u64) -> Result<Self> {
        if failure_prob.is_negative() || failure_prob > q(1, 4) {
            return Err(Error::Precondition(format!(
                "failure probability {failure_prob} is outside [0, 1/4]"
            )));
        }
        Ok(SimulatedOracle {
            mode,
            failure_prob,
            rng: ChaCha8Rng::seed_from_u64(seed),
            slack: None,
        })
    }

    pub fn exact() -> Self {
        Self::new(OracleMode::Exact, Rational::zero(), 0).expect("valid oracle")
    }

    fn legal_factor(&mut self, delta: &Rational, worst: bool) -> Result<Rational> {
        let hi = match &self.slack {
            Some((d, hi)) if d == delta => hi.clone(),
            _ => {
                let hi = pow2_lower(delta, SLACK_BITS)?;
                self.slack = Some((delta.clone(), hi.clone()));
                hi
            }
        };
        let lo = hi.recip();
        if worst {
            return Ok(if self.rng.gen::<bool>() { hi } else { lo });
        }
        let u = unit(&mut self.rng);
        Ok(&lo + (&hi - &lo) * u)
    }

    fn perturb(&mut self, exact: Rational, delta: &Rational) -> Result<OracleAnswer> {
        let value = match self.mode {
            OracleMode::Exact => exact.clone(),
            OracleMode::WorstLegal => &exact * self.legal_factor(delta, true)?,
            OracleMode::RandomLegal => &exact * self.legal_factor(delta, false)?,
            OracleMode::Faulty => {
                if unit(&mut self.rng) < self.failure_prob {
                    let band = (exact.abs() + Rational::one()) * Rational::from_integer(1000.into());
                    let u = unit(&mut self.rng) * Rational::from_integer(2.into()) - Rational::one();
                    band * u
                } else {
                    &exact * self.legal_factor(delta, false)?
                }
            }
        };
        let succeeded = within_pow2(&value, &exact, delta)?;
        Ok(OracleAnswer { value, succeeded })
    }
}

impl Oracle for SimulatedOracle {
    fn query(&mut self, frame: &ConstraintFrame, delta: &Rational) -> Result<OracleAnswer> {
        let exact = evaluate(frame)?;
        self.perturb(exact, delta)
    }
}

/// One answer of a faulty oracle seeded by `seed`.
pub fn noisy_oracle(
    frame: &ConstraintFrame,
    delta: &Rational,
    failure_prob: &Rational,
    seed: u64,
) -> Result<OracleAnswer> {
    SimulatedOracle::new(OracleMode::Faulty, failure_prob.clone(), seed)?.query(frame, delta)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MOutcome {
    pub output: Rational,
    /// The oracle's raw answer for `Ω_m`.
    pub answer: OracleAnswer,
    pub params: ApParams,
}

/// Queries the oracle once on `Ω_m` at precision `δ = ε/2` and reports
/// answers below `d0/2` as zero.
///
/// The threshold sits at half of `d0` so that a true value of exactly `d0`,
/// answered as low as `2^{-ε} d0`, is kept.
pub fn algorithm_m(
    frame: &ConstraintFrame,
    f_name: &str,
    series: &PConvergenceSeries,
    epsilon: &Rational,
    oracle: &mut dyn Oracle,
) -> Result<MOutcome> {
    let params = compute_constants(frame, f_name, series, epsilon)?;
    let check = series.check_range(1, params.m);
    if let Some((m, detail)) = check.failure {
        return Err(Error::Verification {
            step: 0,
            detail: format!("series fails at m = {m}: {detail}"),
        });
    }
    let omega_m = replace_constraint(frame, f_name, series.generator(params.m))?;
    let answer = oracle.query(&omega_m, &params.delta)?;
    let output = if answer.value.abs() < params.threshold() {
        Rational::zero()
    } else {
        answer.value.clone()
    };
    Ok(MOutcome {
        output,
        answer,
        params,
    })
}

/// Lower median of `reps` independent runs of [`algorithm_m`].
pub fn algorithm_m_median(
    frame: &ConstraintFrame,
    f_name: &str,
    series: &PConvergenceSeries,
    epsilon: &Rational,
    oracle: &mut dyn Oracle,
    reps: usize,
) -> Result<Rational> {
    if reps == 0 {
        return Err(Error::Precondition("at least one repetition is needed".into()));
    }
    let mut outs = (0..reps)
        .map(|_| algorithm_m(frame, f_name, series, epsilon, oracle).map(|o| o.output))
        .collect::<Result<Vec<_>>>()?;
    outs.sort();
    Ok(outs.swap_remove((reps - 1) / 2))
}

/// Fraction of `hits` over `total`, for reporting.
pub fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    (Rational::from_integer(hits.into()) / Rational::from_integer(total.into()))
        .to_f64()
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadget::{delta_series_from_unary, xor_series};
    use crate::rational::int;

    fn sym(v: &[i64]) -> Constraint {
        Constraint::symmetric_ints(v)
    }

    fn pin_frame() -> (ConstraintFrame, PConvergenceSeries) {
        let (_, series, _) = delta_series_from_unary(&int(2), &int(1)).unwrap();
        let mut frame = ConstraintFrame::with_variables(2);
        frame.define("d", Constraint::delta(0)).unwrap();
        frame.define("h", sym(&[1, 2, 3])).unwrap();
        frame.apply_named("d", &["x1"]).unwrap();
        frame.apply_named("h", &["x1", "x2"]).unwrap();
        (frame, series)
    }

    #[test]
    fn constants_for_a_unary_target() {
        let (frame, series) = pin_frame();
        let p = compute_constants(&frame, "d", &series, &q(1, 4)).unwrap();
        assert_eq!(p.a0, int(32));
        assert_eq!(p.d0, int(1));
        assert_eq!(p.delta, q(1, 8));
        assert!(p.selection_holds());
        // m is the least value meeting every condition.
        let lm = pow(&p.lambda, p.m - 1);
        let rho = pow2_lower(&p.delta, SLACK_BITS).unwrap();
        let mut smaller = p.clone();
        smaller.m -= 1;
        assert!(!smaller.selection_holds() || !m_is_sufficient(&(&lm * &p.a0), &(&lm * &p.b0), &p.d0, &rho));
    }

    #[test]
    fn d0_from_denominators() {
        let mut frame = ConstraintFrame::with_variables(1);
        let f = Constraint::symmetric(&[int(1), q(1, 2)]).unwrap();
        frame.define("f", f.clone()).unwrap();
        frame.apply_named("f", &["x1"]).unwrap();
        frame.apply_named("f", &["x1"]).unwrap();
        let series = PConvergenceSeries::new(f.clone(), q(1, 2), f, 1).unwrap();
        let p = compute_constants(&frame, "f", &series, &q(1, 4)).unwrap();
        assert_eq!(p.d0, q(1, 4));
        // Every assignment contributes a multiple of 1/4.
        let v = evaluate(&frame).unwrap();
        assert!((v * int(4)).is_integer());
    }

    #[test]
    fn zero_value_is_reported_as_zero() {
        // XOR(x1,x2) with x1 pinned to 0 and x2 pinned to 0.
        let series = xor_series(&int(1), &int(2), false).unwrap();
        let mut frame = ConstraintFrame::with_variables(2);
        frame.define("x", Constraint::xor()).unwrap();
        frame.define("d", Constraint::delta(0)).unwrap();
        frame.apply_named("x", &["x1", "x2"]).unwrap();
        frame.apply_named("d", &["x1"]).unwrap();
        frame.apply_named("d", &["x2"]).unwrap();
        assert_eq!(evaluate(&frame).unwrap(), int(0));
        let out = algorithm_m(&frame, "x", &series, &q(1, 4), &mut SimulatedOracle::exact()).unwrap();
        assert!(!out.answer.value.is_zero());
        assert_eq!(out.output, int(0));
        let (g1, g2) = gamma_split(&frame, "x", &series, out.params.m).unwrap();
        assert_eq!(g1, int(0));
        assert!(g2.abs() <= pow(&out.params.lambda, out.params.m) * &out.params.b0);
    }

    #[test]
    fn worst_legal_answers_stay_within_epsilon() {
        let (frame, series) = pin_frame();
        let truth = evaluate(&frame).unwrap();
        let eps = q(1, 4);
        for seed in 0..8 {
            let mut oracle = SimulatedOracle::new(OracleMode::WorstLegal, int(0), seed).unwrap();
            let out = algorithm_m(&frame, "d", &series, &eps, &mut oracle).unwrap();
            assert!(within_pow2(&out.output, &truth, &eps).unwrap());
        }
    }

    #[test]
    fn gamma_parts_sum_to_substituted_value() {
        let (frame, series) = pin_frame();
        let (g1, g2) = gamma_split(&frame, "d", &series, 3).unwrap();
        let sub = replace_constraint(&frame, "d", series.generator(3)).unwrap();
        assert_eq!(g1 + g2, evaluate(&sub).unwrap());
    }

    #[test]
    fn noisy_oracle_is_reproducible() {
        let (frame, _) = pin_frame();
        let a = noisy_oracle(&frame, &q(1, 8), &q(1, 4), 7).unwrap();
        let b = noisy_oracle(&frame, &q(1, 8), &q(1, 4), 7).unwrap();
        assert_eq!(a, b);
        let exact = noisy_oracle(&frame, &int(0), &int(0), 3).unwrap();
        assert_eq!(exact.value, evaluate(&frame).unwrap());
        assert!(noisy_oracle(&frame, &q(1, 8), &q(1, 2), 0).is_err());
    }

    #[test]
    fn noisy_oracle_success_frequency() {
        let (frame, _) = pin_frame();
        let truth = evaluate(&frame).unwrap();
        let delta = q(1, 8);
        let mut oracle = SimulatedOracle::new(OracleMode::Faulty, q(1, 4), 11).unwrap();
        let trials = 10_000;
        let hits = (0..trials)
            .filter(|_| {
                let a = oracle.perturb(truth.clone(), &delta).unwrap();
                within_pow2(&a.value, &truth, &delta).unwrap()
            })
            .count();
        assert!(rate(hits, trials) >= 0.75 - 0.02, "{hits}");
    }

    #[test]
    fn median_of_runs() {
        let (frame, series) = pin_frame();
        let truth = evaluate(&frame).unwrap();
        let mut oracle = SimulatedOracle::new(OracleMode::Faulty, q(1, 4), 5).unwrap();
        let m = algorithm_m_median(&frame, "d", &series, &q(1, 4), &mut oracle, 9).unwrap();
        assert!(within_pow2(&m, &truth, &q(1, 4)).unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        let (frame, series) = pin_frame();
        assert!(compute_constants(&frame, "d", &series, &int(1)).is_err());
        assert!(compute_constants(&frame, "h", &series, &q(1, 4)).is_err());
    }
}
