//! Convergent families `g_m -> f` and the two generators used to reach
//! `Δ_0`, `Δ_1` and `XOR`.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::chain::{ChainBuilder, GadgetChain};
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::rational::{pow, q, sgn, Rational};

/// `g_m = base^{⊙ exponent_factor·m}` converging to `target` at rate `lambda`.
///
/// Checked per `m`: on nonzero target entries `g_m(x)` lies between
/// `(1 ± λ^m) f(x)` with the sign of `f(x)`; on zero entries `|g_m(x)| <= λ^m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PConvergenceSeries {
    #[serde(with = "crate::json::constraint_value")]
    pub target: Constraint,
    #[serde(with = "crate::rational::serde_str")]
    pub lambda: Rational,
    #[serde(with = "crate::json::constraint_value")]
    pub base: Constraint,
    pub exponent_factor: u32,
}

/// Outcome of checking one series over a range of `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesCheck {
    /// Largest of `|g_m(x) - f(x)| / (λ^m |f(x)|)` and `|g_m(x)| / λ^m`.
    /// At most one when the check passes.
    pub worst_ratio: Rational,
    /// First failing `m` with a description.
    pub failure: Option<(u32, String)>,
}

impl PConvergenceSeries {
    pub fn new(
        target: Constraint,
        lambda: Rational,
        base: Constraint,
        exponent_factor: u32,
    ) -> Result<Self> {
        let s = PConvergenceSeries {
            target,
            lambda,
            base,
            exponent_factor,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_positive() && self.lambda < Rational::one()) {
            return Err(Error::Precondition(format!(
                "series rate {} is outside (0,1)",
                self.lambda
            )));
        }
        if self.base.arity() != self.target.arity() {
            return Err(Error::ArityMismatch {
                expected: self.target.arity(),
                found: self.base.arity(),
            });
        }
        if self.exponent_factor == 0 {
            return Err(Error::ZeroExponent);
        }
        Ok(())
    }

    pub fn generator(&self, m: u32) -> Constraint {
        self.base
            .power(self.exponent_factor * m.max(1))
            .expect("positive exponent")
    }

    /// Checks every `m` in `lo..=hi`.
    pub fn check_range(&self, lo: u32, hi: u32) -> SeriesCheck {
        let mut worst = Rational::zero();
        for m in lo.max(1)..=hi {
            let g = self.generator(m);
            let lm = pow(&self.lambda, m);
            for (x, (gv, fv)) in g.values().iter().zip(self.target.values()).enumerate() {
                let (ratio, ok) = if fv.is_zero() {
                    let r = gv.abs() / &lm;
                    let ok = r <= Rational::one();
                    (r, ok)
                } else {
                    let r = (gv - fv).abs() / (&lm * fv.abs());
                    let ok = r <= Rational::one() && sgn(gv) == sgn(fv);
                    (r, ok)
                };
                if !ok {
                    return SeriesCheck {
                        worst_ratio: worst.max(ratio),
                        failure: Some((
                            m,
                            format!("entry {x}: g_m = {gv}, target {fv}, λ^m = {lm}"),
                        )),
                    };
                }
                worst = worst.max(ratio);
            }
        }
        SeriesCheck {
            worst_ratio: worst,
            failure: None,
        }
    }

    pub fn converges(&self, lo: u32, hi: u32) -> bool {
        self.check_range(lo, hi).failure.is_none()
    }
}

/// Rate used when the ratio is zero and the series is constant.
fn rate_for(ratio: &Rational) -> Rational {
    if ratio.is_zero() {
        q(1, 2)
    } else {
        ratio.abs()
    }
}

/// Series reaching `Δ_i` from the unary `[x, y]`, `|x| != |y|`.
///
/// If `|x| > |y|` this is `[1, (y/x)^{2m}] -> Δ_0`, otherwise
/// `[(x/y)^{2m}, 1] -> Δ_1`. The chain starts from `[x, y]` and scales it by
/// the inverse of its larger entry.
pub fn delta_series_from_unary(
    x: &Rational,
    y: &Rational,
) -> Result<(usize, PConvergenceSeries, GadgetChain)> {
    let mut b = ChainBuilder::new();
    let src = b.source(Constraint::new(1, vec![x.clone(), y.clone()])?);
    let (i, d) = b.delta_from_unary(src)?;
    let series = b.series_at(d).expect("last step is a series").clone();
    Ok((i, series, b.finish(d)))
}

/// Index, series and normalizing scalar for `[x, y]`.
pub(crate) fn unary_series(x: &Rational, y: &Rational) -> Result<(usize, PConvergenceSeries, Rational)> {
    if x.abs() == y.abs() {
        return Err(Error::Precondition(format!(
            "unary [{x},{y}] has entries of equal magnitude"
        )));
    }
    let (i, ratio, base, scalar) = if x.abs() > y.abs() {
        let r = y / x;
        (0, r.clone(), vec![Rational::one(), r], x.recip())
    } else {
        let r = x / y;
        (1, r.clone(), vec![r, Rational::one()], y.recip())
    };
    let series = PConvergenceSeries::new(
        Constraint::delta(i),
        rate_for(&ratio),
        Constraint::new(1, base)?,
        2,
    )?;
    Ok((i, series, scalar))
}

/// Series `[(x/y)^{2m}, 1, (±x/y)^{2m}] -> XOR` for `|x| < |y|`.
pub fn xor_series(x: &Rational, y: &Rational, positive: bool) -> Result<PConvergenceSeries> {
    if x.abs() >= y.abs() {
        return Err(Error::Precondition(format!(
            "xor series needs |x| < |y|, got x = {x}, y = {y}"
        )));
    }
    let r = x / y;
    let last = if positive { r.clone() } else { -r.clone() };
    PConvergenceSeries::new(
        Constraint::xor(),
        rate_for(&r),
        Constraint::symmetric(&[r.clone(), Rational::one(), last])?,
        2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn delta_series_examples() {
        let (i, s, chain) = delta_series_from_unary(&int(2), &int(1)).unwrap();
        assert_eq!(i, 0);
        assert_eq!(s.lambda, q(1, 2));
        assert_eq!(chain.output(), &Constraint::delta(0));
        assert_eq!(s.generator(3), Constraint::new(1, vec![int(1), q(1, 64)]).unwrap());
        let c = s.check_range(1, 50);
        assert!(c.failure.is_none());
        // |g_m(1)| / λ^m = (1/2)^m, largest at m = 1.
        assert_eq!(c.worst_ratio, q(1, 2));

        let (i, s, _) = delta_series_from_unary(&int(1), &int(0)).unwrap();
        assert_eq!(i, 0);
        assert!((1..10).all(|m| s.generator(m) == Constraint::delta(0)));
        assert!(s.converges(1, 50));

        let (i, s, _) = delta_series_from_unary(&int(1), &int(3)).unwrap();
        assert_eq!(i, 1);
        assert_eq!(s.lambda, q(1, 3));
        assert!(s.converges(1, 50));

        assert!(delta_series_from_unary(&int(2), &int(-2)).is_err());
    }

    #[test]
    fn xor_series_examples() {
        let s = xor_series(&int(1), &int(2), true).unwrap();
        assert_eq!(s.generator(2), Constraint::symmetric(&[q(1, 16), int(1), q(1, 16)]).unwrap());
        assert!(s.converges(1, 50));
        let s = xor_series(&int(1), &int(3), false).unwrap();
        assert!(s.converges(1, 50));
        assert!(xor_series(&int(2), &int(2), true).is_err());
    }

    #[test]
    fn corrupted_rate_is_caught() {
        let (_, mut s, _) = delta_series_from_unary(&int(2), &int(1)).unwrap();
        s.lambda = q(1, 5);
        let c = s.check_range(1, 30);
        assert!(c.failure.is_some());
        assert!(PConvergenceSeries::new(Constraint::delta(0), int(1), Constraint::delta(0), 2).is_err());
    }
}
