//! Removing a constant unary `Δ_c` from a frame over complement-stable
//! constraints.
//!
//! Dropping the pin gives `csp' = (1 + (-1)^m) csp`, where `m` counts the
//! anti-invariant applications. For odd `m` an extra application
//! `g(x_0,...,x_0)` of an anti-invariant `g` with `e = g(c,...,c) != 0` on
//! the formerly pinned variable turns this into `2e * csp`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::ConstraintFrame;
use crate::constraint::{ComplementClass, Constraint};
use crate::error::{Error, Result};
use crate::rational::{int, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Elimination {
    pub frame: ConstraintFrame,
    /// `evaluate(original) = scale * evaluate(frame)`.
    pub scale: Rational,
    /// Which constant was removed.
    pub pinned_to: usize,
}

fn delta_bit(c: &Constraint) -> Option<usize> {
    (0..2).find(|&b| c.is_delta(b))
}

pub fn eliminate_constant_unary(
    frame: &ConstraintFrame,
    family: &BTreeMap<String, Constraint>,
) -> Result<Elimination> {
    let mut pinned: Vec<usize> = Vec::new();
    let mut bits = [false; 2];
    let mut anti = 0usize;
    for app in frame.applications() {
        let c = frame.constraint(&app.constraint)?;
        if let Some(b) = delta_bit(c) {
            bits[b] = true;
            pinned.push(app.scope[0]);
            continue;
        }
        match c.complement_class() {
            ComplementClass::Unstable => {
                return Err(Error::Precondition(format!(
                    "constraint {:?} is not complement stable",
                    app.constraint
                )))
            }
            ComplementClass::AntiInvariant => anti += 1,
            ComplementClass::Invariant => {}
        }
    }
    let c = match bits {
        [false, false] => return Err(Error::Precondition("frame has no constant unary".into())),
        [true, true] => {
            return Err(Error::Precondition(
                "frame pins variables to both constants".into(),
            ))
        }
        [b0, _] => usize::from(!b0),
    };

    // Merge every pinned variable into one representative and drop the pins.
    let x0 = *pinned.iter().min().unwrap();
    let mut keep = Vec::new();
    let mut remap = vec![usize::MAX; frame.num_variables()];
    for (v, name) in frame.variables().iter().enumerate() {
        if v != x0 && pinned.contains(&v) {
            continue;
        }
        remap[v] = keep.len();
        keep.push(name.clone());
    }
    for &v in &pinned {
        remap[v] = remap[x0];
    }
    let mut out = ConstraintFrame::new();
    for name in keep {
        out.add_variable(name)?;
    }
    for (name, con) in frame.constraints() {
        out.define(name.clone(), con.clone())?;
    }
    for app in frame.applications() {
        if delta_bit(frame.constraint(&app.constraint)?).is_some() {
            continue;
        }
        out.apply(&app.constraint, app.scope.iter().map(|&v| remap[v]).collect())?;
    }

    let scale = if anti.is_multiple_of(2) {
        Rational::one() / int(2)
    } else {
        let at_pin = |g: &Constraint| if c == 0 { g.first().clone() } else { g.last().clone() };
        let (name, g) = family
            .iter()
            .find(|(_, g)| {
                g.arity() > 0
                    && g.complement_class() == ComplementClass::AntiInvariant
                    && !at_pin(g).is_zero()
            })
            .ok_or_else(|| {
                Error::Precondition(
                    "no anti-invariant constraint is nonzero on the pinned constant".into(),
                )
            })?;
        let e = at_pin(g);
        let mut gname = name.clone();
        while out.constraints().get(&gname).is_some_and(|prev| prev != g) {
            gname.push('\'');
        }
        out.define(gname.clone(), g.clone())?;
        out.apply(&gname, vec![remap[x0]; g.arity()])?;
        (int(2) * e).recip()
    };
    out.prune_library();
    Ok(Elimination {
        frame: out,
        scale,
        pinned_to: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::evaluate;

    fn sym(v: &[i64]) -> Constraint {
        Constraint::symmetric_ints(v)
    }

    #[test]
    fn odd_anti_invariant_count_uses_extra_application() {
        let mut frame = ConstraintFrame::with_variables(2);
        frame.define("d", Constraint::delta(0)).unwrap();
        frame.define("f", sym(&[1, 0, -1])).unwrap();
        frame.apply_named("d", &["x1"]).unwrap();
        frame.apply_named("f", &["x1", "x2"]).unwrap();
        let family: BTreeMap<_, _> = [("f".to_string(), sym(&[1, 0, -1]))].into();
        let r = eliminate_constant_unary(&frame, &family).unwrap();
        assert_eq!(r.frame.applications().len(), 2);
        assert_eq!(evaluate(&r.frame).unwrap(), int(2));
        assert_eq!(r.scale, crate::rational::q(1, 2));
        assert_eq!(evaluate(&frame).unwrap(), &r.scale * evaluate(&r.frame).unwrap());
    }

    #[test]
    fn invariant_frame_halves() {
        let mut frame = ConstraintFrame::with_variables(3);
        frame.define("d", Constraint::delta(1)).unwrap();
        frame.define("h", sym(&[2, -1, 2])).unwrap();
        frame.apply_named("d", &["x2"]).unwrap();
        frame.apply_named("d", &["x3"]).unwrap();
        frame.apply_named("h", &["x1", "x2"]).unwrap();
        frame.apply_named("h", &["x3", "x1"]).unwrap();
        let r = eliminate_constant_unary(&frame, &BTreeMap::new()).unwrap();
        assert_eq!(r.frame.num_variables(), 2);
        assert_eq!(r.pinned_to, 1);
        assert_eq!(evaluate(&frame).unwrap(), &r.scale * evaluate(&r.frame).unwrap());
    }

    #[test]
    fn preconditions() {
        let mut frame = ConstraintFrame::with_variables(1);
        frame.define("u", sym(&[1, 2])).unwrap();
        frame.apply_named("u", &["x1"]).unwrap();
        assert!(eliminate_constant_unary(&frame, &BTreeMap::new()).is_err());
        frame.define("d", Constraint::delta(0)).unwrap();
        frame.apply_named("d", &["x1"]).unwrap();
        let err = eliminate_constant_unary(&frame, &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("\"u\""));

        let mut frame = ConstraintFrame::with_variables(2);
        frame.define("d", Constraint::delta(0)).unwrap();
        frame.define("f", sym(&[0, 1, 0])).unwrap();
        frame.apply_named("d", &["x1"]).unwrap();
        frame.apply_named("f", &["x1", "x2"]).unwrap();
        frame.define("anti", sym(&[0, 1, -1, 0])).unwrap();
        frame.apply_named("anti", &["x1", "x2", "x2"]).unwrap();
        let family: BTreeMap<_, _> = [("anti".to_string(), sym(&[0, 1, -1, 0]))].into();
        assert!(eliminate_constant_unary(&frame, &family).is_err());
    }
}
