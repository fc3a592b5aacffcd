//! Hardness gadgets: from a symmetric constraint outside `Γ` and one pinning
//! unary, reach a member of `OR ∪ NAND ∪ B`.
//!
//! Every class involved is closed under reversing the signature, so mirrored
//! cases run the same code on a reversed view: signatures are read
//! back to front and pin bits are flipped, while marginalizations, merges,
//! powers and the contractions used here commute with complementing inputs.

use num_traits::{One, Signed, Zero};

use super::chain::{ensure_verified, ChainBuilder, GadgetChain, Reg, DEFAULT_M_RANGE};
use super::delta::derive_in;
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::taxonomy::{classify_constraint, in_gamma, in_hard_target, ClassLabel};

/// Squaring restarts allowed along one descent.
const MAX_RESTARTS: u32 = 2;

fn deviation(msg: impl Into<String>) -> Error {
    Error::ProofDeviation(msg.into())
}

fn gamma(c: &Constraint) -> bool {
    in_gamma(c).unwrap_or(true)
}

fn is_geometric(sig: &[Rational]) -> Option<Rational> {
    if sig.len() < 2 || sig[0].is_zero() || sig[1].is_zero() {
        return None;
    }
    let z = &sig[1] / &sig[0];
    sig.windows(2).all(|w| w[1] == &w[0] * &z).then_some(z)
}

pub(crate) struct Ctx<'a> {
    pub b: &'a mut ChainBuilder,
    pub delta: [Option<Reg>; 2],
    pub i0: usize,
}

impl<'a> Ctx<'a> {
    pub fn new(b: &'a mut ChainBuilder, i0: usize, delta_reg: Reg) -> Self {
        let mut delta = [None, None];
        delta[i0] = Some(delta_reg);
        Ctx { b, delta, i0 }
    }

    pub fn val(&self, r: Reg) -> &Constraint {
        self.b.value(r)
    }

    fn sig(&self, r: Reg, rev: bool) -> Result<Vec<Rational>> {
        let mut s = self.val(r).symmetric_values().ok_or(Error::Asymmetric)?;
        if rev {
            s.reverse();
        }
        Ok(s)
    }

    /// Pins the first variable to `bit` as seen in the view.
    pub fn pin(&mut self, r: Reg, bit: usize, rev: bool) -> Result<Reg> {
        let actual = bit ^ usize::from(rev);
        let d = self.delta[actual].ok_or_else(|| deviation(format!("Δ_{actual} is not available")))?;
        self.b.pin(r, 0, actual, d)
    }

    pub fn pin_times(&mut self, mut r: Reg, bit: usize, times: usize, rev: bool) -> Result<Reg> {
        for _ in 0..times {
            r = self.pin(r, bit, rev)?;
        }
        Ok(r)
    }

    /// Derives a constant from a unary register and checks it is the
    /// expected one in the view.
    fn learn(&mut self, unary: Reg, expect: usize, rev: bool) -> Result<()> {
        let actual = expect ^ usize::from(rev);
        if self.delta[actual].is_some() {
            return Ok(());
        }
        let (i, d) = self.b.delta_from_unary(unary)?;
        if i != actual {
            return Err(deviation(format!(
                "{} yields Δ_{i}, expected Δ_{actual}",
                self.val(unary)
            )));
        }
        self.delta[i] = Some(d);
        Ok(())
    }

    /// `r` itself or its square, whichever lands in `OR ∪ NAND ∪ B` first.
    pub fn finish(&mut self, r: Reg) -> Result<Reg> {
        if in_hard_target(self.val(r)) {
            return Ok(r);
        }
        let sq = self.b.power(r, 2)?;
        if in_hard_target(self.val(sq)) {
            return Ok(sq);
        }
        Err(deviation(format!(
            "{} and its square are outside OR ∪ NAND ∪ B",
            self.val(r)
        )))
    }

    /// First candidate that `finish` accepts.
    fn first_hard(&mut self, candidates: &[Reg]) -> Result<Reg> {
        for &c in candidates {
            let v = self.val(c);
            let sq = v.power(2)?;
            if in_hard_target(v) || in_hard_target(&sq) {
                return self.finish(c);
            }
        }
        Err(deviation(format!(
            "no candidate among {:?} reaches OR ∪ NAND ∪ B",
            candidates.iter().map(|&c| self.val(c).to_string()).collect::<Vec<_>>()
        )))
    }

    fn restart(&mut self, r: Reg, restarts: u32) -> Result<Reg> {
        if restarts >= MAX_RESTARTS {
            return Err(deviation(format!(
                "{}: more than {MAX_RESTARTS} squaring restarts",
                self.val(r)
            )));
        }
        let sq = self.b.power(r, 2)?;
        self.solve(sq, restarts + 1)
    }

    /// First of `f^{x1=i0}`, `f^{x1=*}`, `f^{x1=1-i0}` outside `Γ`, for cases
    /// where the prescribed step lands in `Γ`. The other constant, if needed,
    /// is derived from `f` itself.
    fn fallback(&mut self, r: Reg, restarts: u32, why: &str) -> Result<Reg> {
        let f = self.val(r).clone();
        let other = 1 - self.i0;
        let next = if !gamma(&f.pin(0, self.i0)?) {
            self.pin(r, self.i0, false)?
        } else if !gamma(&f.marginalize(0)?) {
            self.b.marginalize(r, 0)?
        } else if !gamma(&f.pin(0, other)?) {
            if self.delta[other].is_none() {
                let found = derive_in(self.b, r)?;
                self.delta[other] = Some(found[other].ok_or_else(|| {
                    deviation(format!("{f}: {why}, and Δ_{other} is not derivable"))
                })?);
            }
            self.pin(r, other, false)?
        } else {
            return Err(deviation(format!("{f}: {why}, and no pin or sum leaves Γ")));
        };
        self.b.annotate(next, format!("{why}: continued from {}", self.val(next)));
        self.solve(next, restarts)
    }

    fn descend(&mut self, h: Reg, restarts: u32) -> Result<Reg> {
        if gamma(self.val(h)) {
            return Err(deviation(format!("descent reached {} ∈ Γ", self.val(h))));
        }
        self.solve(h, restarts)
    }

    pub fn solve(&mut self, r: Reg, restarts: u32) -> Result<Reg> {
        let f = self.val(r).clone();
        if !f.is_symmetric() {
            return Err(Error::Asymmetric);
        }
        if gamma(&f) {
            return Err(deviation(format!("{f} lies in Γ")));
        }
        match f.arity() {
            0 | 1 => Err(deviation(format!("{f} has arity below 2"))),
            2 => self.binary(r),
            3 => self.ternary(r),
            _ => self.higher(r, restarts),
        }
    }

    fn binary(&mut self, r: Reg) -> Result<Reg> {
        let s = self.sig(r, false)?;
        let zeros = s.iter().filter(|v| v.is_zero()).count();
        match zeros {
            1 if !s[1].is_zero() => {
                let sq = self.b.power(r, 2)?;
                self.finish(sq)
            }
            0 => {
                let (x, y, z) = (&s[0], &s[1], &s[2]);
                let xz = x * z;
                let yy = y * y;
                if xz.abs() != yy {
                    let sq = self.b.power(r, 2)?;
                    return self.finish(sq);
                }
                if xz == yy {
                    return Err(deviation(format!("{} is degenerate", self.val(r))));
                }
                // xz = -y²: the square is degenerate and f has mixed signs.
                let h = self.b.contract(
                    2,
                    1,
                    &[(r, vec![0, 2]), (r, vec![2, 1])],
                    Rational::one(),
                )?;
                self.b.annotate(h, "xz = -y²: squared the path product instead of f");
                self.finish(h)
            }
            _ => Err(deviation(format!("{} lies in Γ", self.val(r)))),
        }
    }

    fn h1(&mut self, r: Reg) -> Result<Reg> {
        self.b
            .contract(2, 2, &[(r, vec![0, 2, 3]), (r, vec![1, 2, 3])], Rational::one())
    }

    fn h2(&mut self, r: Reg) -> Result<Reg> {
        self.b
            .contract(2, 1, &[(r, vec![0, 2, 2]), (r, vec![1, 2, 2])], Rational::one())
    }

    fn h3(&mut self, r: Reg) -> Result<Reg> {
        self.b
            .contract(2, 1, &[(r, vec![0, 0, 2]), (r, vec![2, 1, 1])], Rational::one())
    }

    fn ternary(&mut self, r: Reg) -> Result<Reg> {
        let s = self.sig(r, false)?;
        let nz: Vec<usize> = (0..4).filter(|&i| !s[i].is_zero()).collect();
        match nz.as_slice() {
            [1] | [2] => {
                let g = self.b.marginalize(r, 0)?;
                self.finish(g)
            }
            [0, 1] | [2, 3] => {
                let rev = nz[0] == 2;
                let g = self.b.merge_all(r)?;
                self.learn(g, 0, rev)?;
                let h = self.pin(r, 0, rev)?;
                let sq = self.b.power(h, 2)?;
                self.finish(sq)
            }
            [1, 2] => {
                let h = self.pin(r, self.i0, false)?;
                self.binary(h)
            }
            [0, 2] | [1, 3] => {
                let rev = nz[0] == 1;
                let v = self.sig(r, rev)?;
                if v[0].abs() == v[2].abs() {
                    return Err(deviation(format!("{} alternates zeros", self.val(r))));
                }
                let g = self.b.marginalize(r, 0)?;
                let sq = self.b.power(g, 2)?;
                self.finish(sq)
            }
            [0, 1, 2] | [1, 2, 3] => {
                let g = self.b.merge(r, 0, 1)?;
                let h = self.b.contract(
                    2,
                    0,
                    &[(g, vec![0, 1]), (g, vec![0, 1]), (g, vec![1, 0]), (g, vec![1, 0])],
                    Rational::one(),
                )?;
                self.finish(h)
            }
            [0, 2, 3] | [0, 1, 3] => {
                let g = self.h1(r)?;
                let sq = self.b.power(g, 2)?;
                self.finish(sq)
            }
            [0, 1, 2, 3] => self.ternary_full(r),
            _ => Err(deviation(format!("{} lies in Γ", self.val(r)))),
        }
    }

    fn ternary_full(&mut self, r: Reg) -> Result<Reg> {
        let s = self.sig(r, false)?;
        let bends = |s: &[Rational]| {
            let p = &s[0] * &s[2];
            let q = &s[1] * &s[3];
            (p, &s[1] * &s[1], q, &s[2] * &s[2])
        };
        let (xz, yy, yw, zz) = bends(&s);
        let p = xz.abs() != yy;
        let q = yw.abs() != zz;
        if p && q {
            let h = self.pin(r, self.i0, false)?;
            let sq = self.b.power(h, 2)?;
            return self.finish(sq);
        }
        if p != q {
            // View in which only the upper bend is singular.
            let rev = !p;
            let v = self.sig(r, rev)?;
            let (_, _, yw, zz) = bends(&v);
            let cands = if yw == zz {
                vec![self.h3(r)?, self.h1(r)?]
            } else {
                vec![self.h3(r)?, self.h2(r)?, self.h1(r)?]
            };
            return self.first_hard(&cands);
        }
        match (xz == yy, yw == zz) {
            (true, true) => Err(deviation(format!("{} is degenerate", self.val(r)))),
            (true, false) | (false, true) => {
                let cands = [self.h2(r)?, self.h1(r)?];
                self.first_hard(&cands)
            }
            (false, false) => {
                let h = self.h1(r)?;
                self.first_hard(&[h])
            }
        }
    }

    fn higher(&mut self, r: Reg, restarts: u32) -> Result<Reg> {
        let s = self.sig(r, false)?;
        let (u, w) = (s[0].clone(), s[s.len() - 1].clone());
        match (u.is_zero(), w.is_zero()) {
            (true, false) => self.one_zero_end(r, false, restarts),
            (false, true) => self.one_zero_end(r, true, restarts),
            (true, true) => self.zero_ends(r, self.i0 == 1, restarts),
            (false, false) => {
                if u.abs() == w.abs() {
                    if u == -w {
                        if !gamma(&self.val(r).power(2)?) {
                            return self.restart(r, restarts);
                        }
                        return self.fallback(r, restarts, "u = -w with f² ∈ Γ");
                    }
                    self.equal_ends(r, self.i0 == 1, restarts)
                } else {
                    self.unequal_ends(r, u.abs() > w.abs(), restarts)
                }
            }
        }
    }

    /// View `[0, ..., w]` with `w != 0`.
    fn one_zero_end(&mut self, r: Reg, rev: bool, restarts: u32) -> Result<Reg> {
        let diag = self.b.merge_all(r)?;
        self.learn(diag, 1, rev)?;
        let g = self.pin(r, 1, rev)?;
        if !gamma(self.val(g)) {
            return self.solve(g, restarts);
        }
        let gs = self.sig(g, rev)?;
        if is_geometric(&gs).is_some_and(|z| z == -Rational::one()) {
            return self.restart(r, restarts);
        }
        let h = self.b.marginalize(r, 0)?;
        if classify_constraint(self.val(g))?.contains(&ClassLabel::B0) {
            self.b.annotate(h, format!("pinned {} lies in B0; descending through f^(x1=*)", self.val(g)));
        }
        self.descend(h, restarts)
    }

    /// View `[u, ..., u]` with `u != 0` and `Δ_0` available in the view.
    fn equal_ends(&mut self, r: Reg, rev: bool, restarts: u32) -> Result<Reg> {
        let g = self.pin(r, 0, rev)?;
        if !gamma(self.val(g)) {
            return self.solve(g, restarts);
        }
        let fs = self.sig(r, rev)?;
        let gs = self.sig(g, rev)?;
        let k = fs.len() - 1;
        let u = fs[0].clone();
        let labels = classify_constraint(self.val(g))?;
        let last_g = gs[gs.len() - 1].clone();

        if let Some(z) = is_geometric(&gs) {
            if z != -Rational::one() {
                let h = self.b.marginalize(r, 0)?;
                return self.descend(h, restarts);
            }
            // f = u[1,-1,...,1,1] with k odd; its square is degenerate.
            let h = self.b.marginalize(r, 0)?;
            let diag = self.b.merge_all(h)?;
            self.learn(diag, 1, rev)?;
            let t = self.pin_times(r, 1, k - 3, rev)?;
            self.b.annotate(t, "alternating pinned part: f² is degenerate, pinned f down to arity 3");
            return self.descend(t, restarts);
        }
        if labels.contains(&ClassLabel::Ed1Plus) {
            let h = self.b.marginalize(r, 0)?;
            if gamma(self.val(h)) {
                return self.restart(r, restarts);
            }
            return self.solve(h, restarts);
        }
        if labels.contains(&ClassLabel::Az) {
            let h = self.b.marginalize(r, 0)?;
            let diag = self.b.merge_all(h)?;
            self.learn(diag, 1, rev)?;
            let t = self.pin_times(r, 1, k - 2, rev)?;
            return self.finish(t);
        }
        if labels.contains(&ClassLabel::Az1) {
            if !last_g.is_zero() {
                return self.restart(r, restarts);
            }
            let h = self.b.marginalize(r, 0)?;
            let h2 = self.b.marginalize(h, 0)?;
            let diag = self.b.merge_all(h2)?;
            self.learn(diag, 1, rev)?;
            let t = self.pin_times(h2, 1, k - 4, rev)?;
            return self.finish(t);
        }
        if labels.contains(&ClassLabel::B0) {
            let first_clause = gs[1] == -u.clone();
            if !first_clause {
                let h = self.b.marginalize(r, 0)?;
                let h2 = self.b.marginalize(h, 0)?;
                self.b.annotate(h2, "pinned part in the second B0 pattern: descending through f^(x1=*,x2=*)");
                return self.descend(h2, restarts);
            }
            let prev = &fs[k - 1];
            if *prev == u {
                let h = self.b.marginalize(r, 0)?;
                let diag = self.b.merge_all(h)?;
                self.learn(diag, 1, rev)?;
                let t = self.pin_times(h, 1, k - 3, rev)?;
                return self.finish(t);
            }
            let mut m = r;
            for _ in 0..k - 1 {
                m = self.b.marginalize(m, 0)?;
            }
            let ms = self.sig(m, rev)?;
            if ms[1].is_zero() {
                return Err(deviation(format!(
                    "{}: summing out all but one variable gives {}",
                    self.val(r),
                    self.val(m)
                )));
            }
            self.learn(m, 1, rev)?;
            let h = self.b.marginalize(r, 0)?;
            let h2 = self.b.marginalize(h, 0)?;
            let t = self.pin_times(h2, 1, k - 4, rev)?;
            return self.finish(t);
        }
        Err(deviation(format!(
            "{} pinned to {} leaves no case",
            self.val(r),
            self.val(g)
        )))
    }

    /// View `[u, ..., w]` with `0 < |u| < |w|`.
    fn unequal_ends(&mut self, r: Reg, rev: bool, restarts: u32) -> Result<Reg> {
        let diag = self.b.merge_all(r)?;
        self.learn(diag, 1, rev)?;
        let g = self.pin(r, 1, rev)?;
        if !gamma(self.val(g)) {
            return self.solve(g, restarts);
        }
        let fs = self.sig(r, rev)?;
        let gs = self.sig(g, rev)?;
        let k = fs.len() - 1;
        let u = fs[0].clone();
        let labels = classify_constraint(self.val(g))?;

        if let Some(z) = is_geometric(&gs) {
            if z == -Rational::one() {
                let h = self.b.marginalize(r, 0)?;
                let hd = self.b.merge_all(h)?;
                self.learn(hd, 0, rev)?;
                let g0 = self.pin(r, 0, rev)?;
                return self.descend(g0, restarts);
            }
            let h = self.b.marginalize(r, 0)?;
            return self.descend(h, restarts);
        }
        if labels.contains(&ClassLabel::Ed1Plus) {
            if u == -gs[0].clone() {
                return self.restart(r, restarts);
            }
            let h = self.b.marginalize(r, 0)?;
            return self.descend(h, restarts);
        }
        if (labels.contains(&ClassLabel::Az) || labels.contains(&ClassLabel::Az1)) && !gs[0].is_zero() {
            let sq = self.b.power(r, 2)?;
            let m = self.b.marginalize(sq, 0)?;
            let md = self.b.merge_all(m)?;
            self.learn(md, 0, rev)?;
            let t = self.pin_times(sq, 0, k - 2, rev)?;
            return self.finish(t);
        }
        let h = self.b.marginalize(r, 0)?;
        self.descend(h, restarts)
    }

    /// View `[0, ..., 0]` ends with `Δ_0` available in the view.
    fn zero_ends(&mut self, r: Reg, rev: bool, restarts: u32) -> Result<Reg> {
        let g = self.pin(r, 0, rev)?;
        if !gamma(self.val(g)) {
            return self.solve(g, restarts);
        }
        let h = self.b.marginalize(r, 0)?;
        self.descend(h, restarts)
    }
}

/// A member of `OR ∪ NAND ∪ B` built from `f ∉ Γ` and `Δ_{i0}`.
///
/// The chain has sources `[f, Δ_{i0}]`.
pub fn hardness_gadget(f: &Constraint, i0: usize) -> Result<(Constraint, GadgetChain)> {
    if i0 > 1 {
        return Err(Error::IndexOutOfRange { index: i0, arity: 2 });
    }
    if !f.is_symmetric() {
        return Err(Error::Asymmetric);
    }
    if f.is_all_zero() {
        return Err(Error::AllZero);
    }
    if f.arity() < 2 || in_gamma(f)? {
        return Err(Error::Precondition(format!("{f} lies in Γ or has arity below 2")));
    }
    let mut b = ChainBuilder::new();
    let r = b.source(f.clone());
    let d = b.source(Constraint::delta(i0));
    let g = Ctx::new(&mut b, i0, d).solve(r, 0)?;
    let chain = b.finish(g);
    ensure_verified(&chain, DEFAULT_M_RANGE)?;
    let out = chain.output().clone();
    if !in_hard_target(&out) {
        return Err(deviation(format!("{out} is outside OR ∪ NAND ∪ B")));
    }
    Ok((out, chain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn sym(v: &[i64]) -> Constraint {
        Constraint::symmetric_ints(v)
    }

    #[test]
    fn anchors() {
        assert_eq!(hardness_gadget(&sym(&[1, 2, 0]), 0).unwrap().0, sym(&[1, 4, 0]));
        assert_eq!(hardness_gadget(&sym(&[0, 1, 0, 0]), 1).unwrap().0, sym(&[1, 1, 0]));
        for i0 in 0..2 {
            assert_eq!(hardness_gadget(&sym(&[1, 1, 1, -1]), i0).unwrap().0, sym(&[4, 2, 4]));
        }
    }

    #[test]
    fn mixed_sign_binary_uses_path_product() {
        // xz = -y²: f² = [1,4,16] is degenerate.
        let (g, chain) = hardness_gadget(&sym(&[1, 2, -4]), 0).unwrap();
        assert!(in_hard_target(&g));
        assert!(!chain.notes().is_empty());
    }

    #[test]
    fn flat_magnitudes_skip_squaring() {
        // u = -w and f² is constant; the pin with Δ_0 and the sum are in Γ too,
        // so Δ_1 is derived from f.
        let f = sym(&[2, -2, 2, -2, -2]);
        assert!(in_gamma(&f.power(2).unwrap()).unwrap());
        let (g, chain) = hardness_gadget(&f, 0).unwrap();
        assert!(in_hard_target(&g));
        assert!(chain.notes().iter().any(|n| n.contains("u = -w")));
        assert!(hardness_gadget(&sym(&[1, 0, -1, 0, -1]), 1).is_ok());
    }

    #[test]
    fn mirrored_cases_agree() {
        let f = Constraint::symmetric(&[q(1, 2), Rational::from_integer(3.into()), Rational::zero(), Rational::zero()]).unwrap();
        let (g, _) = hardness_gadget(&f, 1).unwrap();
        let (h, _) = hardness_gadget(&f.complemented(), 0).unwrap();
        assert_eq!(g.complemented(), h);
    }

    #[test]
    fn rejects_gamma_members() {
        assert!(hardness_gadget(&sym(&[1, 0, 1, 0]), 0).is_err());
        assert!(hardness_gadget(&sym(&[2, 2, 2]), 0).is_err());
        assert!(hardness_gadget(&Constraint::table_ints(&[1, 2, 3, 4]).unwrap(), 0).is_err());
    }
}
