//! Canonical-form arithmetic in O_max, the p-adic completion of A[E/p].
//!
//! Working elements are classes modulo (p^M, u^N, (E/p)^L). The canonical
//! form stores, for 0 <= l < L, the coefficient of (E/p)^l as a polynomial
//! of u-degree < e; uniqueness comes from E-adic digit expansion (division
//! by the monic E is exact, so no precision is lost in canonicalization).
//! The rewriting identities are E = p * (E/p) and E * (E/p)^l = p * (E/p)^{l+1}.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::padic::{PrimeConfig, TruncatedScalar};
use crate::series::{divrem_monic, e_adic_digits, Eisenstein, SeriesElement};

/// Context for O_max arithmetic: prime config, truncations and the Eisenstein polynomial.
#[derive(Debug, Clone)]
pub struct OMaxRing {
    pub cfg: PrimeConfig,
    /// u-adic truncation inside A.
    pub n: u32,
    /// (E/p)-order truncation: slots 0..l_max.
    pub l_max: u32,
    pub eis: Eisenstein,
    /// g = (E - u^e)/p, exact, degree < e.
    pub g: SeriesElement,
    /// E(0)/p, a p-adic unit.
    pub e0_over_p: TruncatedScalar,
}

impl OMaxRing {
    pub fn new(cfg: PrimeConfig, n: u32, l_max: u32, eis: Eisenstein) -> Result<Self> {
        eis.cfg().check_same(&cfg)?;
        if l_max < 2 {
            return Err(Error::BadInput("E/p-order truncation must be >= 2".into()));
        }
        let g = eis.g_exact();
        let e0_over_p = eis.unit_const();
        Ok(OMaxRing { cfg, n, l_max, eis, g, e0_over_p })
    }

    pub fn zero(&self) -> OMaxElement {
        OMaxElement { slots: BTreeMap::new() }
    }

    pub fn one(&self) -> OMaxElement {
        self.from_series(&SeriesElement::one(self.cfg, self.n))
    }

    pub fn constant(&self, c: TruncatedScalar) -> OMaxElement {
        self.from_series(&SeriesElement::constant(self.cfg, self.n, c))
    }

    /// Canonicalize an A-element (embedding A into O_max).
    pub fn from_series(&self, f: &SeriesElement) -> OMaxElement {
        self.canonicalize(&[(0, f.clone())])
    }

    /// The element E/p (slot 1, coefficient 1).
    pub fn e_over_p(&self) -> OMaxElement {
        let mut out = self.zero();
        out.slots.insert(1, SeriesElement::one(self.cfg, self.n));
        out
    }

    /// Canonicalize a list of raw (l, coefficient-series) pairs representing
    /// sum_l a_l (E/p)^l.
    pub fn canonicalize(&self, raw: &[(u32, SeriesElement)]) -> OMaxElement {
        let mut out = self.zero();
        for (l, a) in raw {
            self.add_raw_term(&mut out, *l, a);
        }
        out
    }

    fn add_raw_term(&self, out: &mut OMaxElement, l: u32, a: &SeriesElement) {
        if l >= self.l_max {
            // (E/p)^{l_max} multiples vanish in the working quotient
            return;
        }
        let depth = self.l_max - l;
        let (digits, _head) = e_adic_digits(a, &self.eis, depth);
        for (k, r) in digits.into_iter().enumerate() {
            if r.coeffs.is_empty() {
                continue;
            }
            let slot = l + k as u32;
            let scaled = r.mul_p_pow(k as u32);
            let cur = out.slot(self.cfg, self.n, slot);
            let sum = cur.add(&scaled).expect("same config");
            out.set_slot(slot, sum);
        }
    }

    pub fn add(&self, a: &OMaxElement, b: &OMaxElement) -> OMaxElement {
        let mut out = a.clone();
        for (&l, s) in &b.slots {
            let cur = out.slot(self.cfg, self.n, l);
            out.set_slot(l, cur.add(s).expect("same config"));
        }
        out
    }

    pub fn sub(&self, a: &OMaxElement, b: &OMaxElement) -> OMaxElement {
        self.add(a, &self.neg(b))
    }

    pub fn neg(&self, a: &OMaxElement) -> OMaxElement {
        let mut out = self.zero();
        for (&l, s) in &a.slots {
            out.set_slot(l, s.neg());
        }
        out
    }

    pub fn mul(&self, a: &OMaxElement, b: &OMaxElement) -> OMaxElement {
        let mut out = self.zero();
        for (&la, sa) in &a.slots {
            if sa.coeffs.is_empty() {
                continue;
            }
            for (&lb, sb) in &b.slots {
                let l = la + lb;
                if l >= self.l_max {
                    continue;
                }
                let prod = sa.mul(sb).expect("same config");
                // prod has degree <= 2e-2; one division by E renormalizes
                let (q, r) = divrem_monic(&prod, &self.eis.poly, self.eis.e);
                if !r.coeffs.is_empty() {
                    let cur = out.slot(self.cfg, self.n, l);
                    out.set_slot(l, cur.add(&r).expect("same config"));
                }
                if !q.coeffs.is_empty() && l + 1 < self.l_max {
                    let cur = out.slot(self.cfg, self.n, l + 1);
                    out.set_slot(l + 1, cur.add(&q.mul_p_pow(1)).expect("same config"));
                }
            }
        }
        out
    }

    pub fn mul_series(&self, a: &OMaxElement, f: &SeriesElement) -> OMaxElement {
        self.mul(a, &self.from_series(f))
    }

    pub fn scale(&self, a: &OMaxElement, c: &TruncatedScalar) -> OMaxElement {
        let mut out = self.zero();
        for (&l, s) in &a.slots {
            out.set_slot(l, s.scale(c));
        }
        out
    }

    pub fn pow(&self, a: &OMaxElement, e: u32) -> OMaxElement {
        let mut acc = self.one();
        for _ in 0..e {
            acc = self.mul(&acc, a);
        }
        acc
    }

    pub fn exact_div_p(&self, a: &OMaxElement, k: u32) -> Result<OMaxElement> {
        let mut out = self.zero();
        for (&l, s) in &a.slots {
            out.set_slot(l, s.exact_div_p(k)?);
        }
        Ok(out)
    }

    pub fn mul_p_pow(&self, a: &OMaxElement, k: u32) -> OMaxElement {
        let mut out = self.zero();
        for (&l, s) in &a.slots {
            out.set_slot(l, s.mul_p_pow(k));
        }
        out
    }

    /// Exact division by E. Requires slot 0 to vanish and every higher slot
    /// to be divisible by p. The top slot of the quotient leaves the window.
    pub fn exact_div_e(&self, a: &OMaxElement) -> Result<OMaxElement> {
        let s0 = a.slot(self.cfg, self.n, 0);
        if !s0.is_zero() {
            return Err(Error::InexactDivision(
                "slot 0 nonzero: element is not divisible by E".into(),
            ));
        }
        let mut out = self.zero();
        for (&l, s) in &a.slots {
            if l == 0 {
                continue;
            }
            let q = s.exact_div_p(1).map_err(|_| {
                Error::InexactDivision(format!(
                    "slot {l} not divisible by p: element is not divisible by E"
                ))
            })?;
            out.set_slot(l - 1, q);
        }
        Ok(out)
    }

    /// Multiplication by E (slot shift with p-scaling).
    pub fn mul_e(&self, a: &OMaxElement) -> OMaxElement {
        let mut out = self.zero();
        for (&l, s) in &a.slots {
            if l + 1 < self.l_max {
                out.set_slot(l + 1, s.mul_p_pow(1));
            }
        }
        out
    }

    pub fn mul_e_pow(&self, a: &OMaxElement, h: u32) -> OMaxElement {
        let mut out = a.clone();
        for _ in 0..h {
            out = self.mul_e(&out);
        }
        out
    }

    /// Evaluation at u = 0, E/p = E(0)/p; the residue map used by the
    /// I_plus-reduction.
    pub fn eval_origin(&self, a: &OMaxElement) -> TruncatedScalar {
        let mut acc = TruncatedScalar::zero(&self.cfg);
        for (&l, s) in &a.slots {
            let t = s.constant_term().mul(&self.cfg, &self.e0_over_p.pow(&self.cfg, l));
            acc = acc.add(&self.cfg, &t);
        }
        acc
    }

    /// Inverse of a unit (constant residue at the origin must be a p-adic unit).
    pub fn invert(&self, a: &OMaxElement) -> Result<OMaxElement> {
        let c0 = self.eval_origin(a);
        let c0inv = c0.invert(&self.cfg).map_err(|_| {
            Error::NotInvertible("O_max element with non-unit origin value".into())
        })?;
        let mut inv = self.constant(c0inv);
        for _ in 0..64 {
            let err = self.sub(&self.one(), &self.mul(a, &inv));
            if err.is_zero() {
                return Ok(inv);
            }
            inv = self.add(&inv, &self.mul(&inv, &err));
        }
        Err(Error::NoConvergence("O_max inversion did not stabilize".into()))
    }

    /// Exact division by u, failing when the element is not a u-multiple.
    ///
    /// The kernel of O_max -> O_max/(u) = Z_p is exactly (u), so the origin
    /// evaluation is checked first: the slot-by-slot triangular solve alone
    /// would push that obstruction beyond the (E/p)^L window. Afterwards
    /// u*b = a is solved slot by slot; the top u-digit of b_l is forced by
    /// the constant term of a_l, which must be divisible by p.
    pub fn exact_div_u(&self, a: &OMaxElement) -> Result<OMaxElement> {
        let ev = self.eval_origin(a);
        if !ev.is_zero() {
            return Err(Error::InexactDivision(format!(
                "element has nonzero residue {} at u = 0",
                ev.residue
            )));
        }
        let e = self.eis.e;
        let mut out = self.zero();
        let mut t_prev = TruncatedScalar::zero(&self.cfg); // T(b_{l-1})
        let g0inv = self
            .g
            .coeff(0)
            .invert(&self.cfg)
            .expect("E(0)/p is a unit");
        for l in 0..self.l_max {
            let al = a.slot(self.cfg, self.n, l);
            // constant-term equation: a_l(0) = -p T(b_l) g_0 + p T(b_{l-1}),
            // i.e. T(b_l) = (T(b_{l-1}) - a_l(0)/p) / g_0: only the slot's
            // own constant term spends a digit of precision.
            let c0 = al.coeff(0);
            let num = t_prev
                .mul_p_pow(&self.cfg, 1)
                .sub(&self.cfg, &c0);
            let t_l = num
                .exact_div_p(&self.cfg, 1)
                .map_err(|_| {
                    Error::InexactDivision(format!(
                        "slot {l} obstructs division by u (constant term v_p = 0)"
                    ))
                })?
                .mul(&self.cfg, &g0inv);
            // remaining coefficients: b_l[j-1] = a_l[j] + p T(b_l) g[j]
            let mut bl = SeriesElement::zero(self.cfg, self.n);
            let pt = t_l.mul_p_pow(&self.cfg, 1);
            for j in 1..e {
                let v = al.coeff(j).add(&self.cfg, &pt.mul(&self.cfg, &self.g.coeff(j)));
                bl.set(j - 1, v);
            }
            if e >= 1 {
                bl.set(e - 1, t_l);
            }
            if !bl.coeffs.is_empty() {
                out.set_slot(l, bl);
            }
            t_prev = t_l;
        }
        Ok(out)
    }

    /// Three-valued divisibility by u^k.
    ///
    /// A division failure is a confident obstruction (the blocking digit is
    /// known); `Undecided` only happens when the tested data carries no
    /// information at all (precision floor 0).
    pub fn divisible_by_u(&self, a: &OMaxElement, k: u32) -> DivisibilityOutcome {
        if a.is_zero() {
            // zero at its tracked precision: divisible, with the quotient
            // known at the same floor
            return if self.min_prec(a) > 0 || a.slots.is_empty() {
                DivisibilityOutcome::Yes(self.zero())
            } else {
                DivisibilityOutcome::Undecided
            };
        }
        let mut cur = a.clone();
        for _ in 0..k {
            let ev = self.eval_origin(&cur);
            if !ev.is_zero() {
                return DivisibilityOutcome::No;
            }
            if ev.prec == 0 {
                return DivisibilityOutcome::Undecided;
            }
            match self.exact_div_u(&cur) {
                Ok(next) => cur = next,
                Err(_) => return DivisibilityOutcome::No,
            }
        }
        DivisibilityOutcome::Yes(cur)
    }

    /// Equality at precision: the difference vanishes on every coefficient
    /// that is still above its precision floor.
    pub fn eq(&self, a: &OMaxElement, b: &OMaxElement) -> bool {
        self.sub(a, b).is_zero()
    }

    /// Minimum p-adic valuation over all stored coefficients; `None` for the
    /// zero element.
    pub fn min_valuation(&self, a: &OMaxElement) -> Option<u32> {
        let mut best: Option<u32> = None;
        for s in a.slots.values() {
            for c in s.coeffs.values() {
                if !c.is_zero() {
                    let v = c.valuation(&self.cfg);
                    best = Some(best.map_or(v, |b| b.min(v)));
                }
            }
        }
        best
    }

    pub fn min_prec(&self, a: &OMaxElement) -> u32 {
        a.slots.values().map(|s| s.min_prec()).min().unwrap_or(self.cfg.m)
    }

    /// phi(E)/p = delta(E) + p^{p-1} (E/p)^p, the distinguished unit of O_max.
    pub fn c_element(&self) -> Result<OMaxElement> {
        let de = self.eis.delta_exact();
        let mut out = self.from_series(&de);
        if self.cfg.p <= self.l_max {
            let cur = out.slot(self.cfg, self.n, self.cfg.p);
            let ppm1 = SeriesElement::constant(
                self.cfg,
                self.n,
                TruncatedScalar::from_u128(&self.cfg, self.cfg.pow_p((self.cfg.p - 1).min(self.cfg.m))),
            );
            out.set_slot(self.cfg.p, cur.add(&ppm1).expect("same config"));
        }
        Ok(out)
    }

    /// Frobenius on O_max: u -> u^p on series parts, (E/p)^l -> c^l.
    /// `c_pows` must be the table of powers of [`Self::c_element`].
    pub fn frobenius_with(&self, a: &OMaxElement, c_pows: &[OMaxElement]) -> OMaxElement {
        let mut out = self.zero();
        for (&l, s) in &a.slots {
            let fs = lift_poly_frobenius(self.cfg, self.n, s);
            let term = self.mul_series(&c_pows[l as usize], &fs);
            out = self.add(&out, &term);
        }
        out
    }

    pub fn c_pow_table(&self) -> Result<Vec<OMaxElement>> {
        let c = self.c_element()?;
        let mut tab = Vec::with_capacity(self.l_max as usize + 1);
        let mut acc = self.one();
        for _ in 0..=self.l_max {
            tab.push(acc.clone());
            acc = self.mul(&acc, &c);
        }
        Ok(tab)
    }
}

fn lift_poly_frobenius(cfg: PrimeConfig, n: u32, s: &SeriesElement) -> SeriesElement {
    let mut out = SeriesElement::zero(cfg, n);
    for (&e, c) in &s.coeffs {
        match e.checked_mul(cfg.p) {
            Some(pe) if pe < n => out.set(pe, *c),
            _ => {}
        }
    }
    out
}

/// Canonical O_max element: slot l holds the (E/p)^l coefficient, a
/// polynomial of u-degree < e.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OMaxElement {
    pub slots: BTreeMap<u32, SeriesElement>,
}

impl OMaxElement {
    pub fn slot(&self, cfg: PrimeConfig, n: u32, l: u32) -> SeriesElement {
        self.slots.get(&l).cloned().unwrap_or_else(|| SeriesElement::zero(cfg, n))
    }

    pub fn set_slot(&mut self, l: u32, s: SeriesElement) {
        if s.coeffs.is_empty() {
            self.slots.remove(&l);
        } else {
            self.slots.insert(l, s);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.slots.values().all(|s| s.is_zero())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DivisibilityOutcome {
    Yes(OMaxElement),
    No,
    Undecided,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(p: u32, m: u32, n: u32, l: u32, eis: &[i64]) -> OMaxRing {
        let cfg = PrimeConfig::new(p, m).unwrap();
        let e = Eisenstein::from_ints(cfg, n, eis).unwrap();
        OMaxRing::new(cfg, n, l, e).unwrap()
    }

    #[test]
    fn canonicalize_e_squared() {
        // E^2 at slot 0 becomes p^2 at slot 2
        let r = ring(2, 10, 16, 8, &[-2, 1]);
        let e2 = r.eis.poly.mul(&r.eis.poly).unwrap();
        let elem = r.from_series(&e2);
        assert_eq!(elem.slots.len(), 1);
        let s2 = elem.slot(r.cfg, r.n, 2);
        assert_eq!(s2.coeff(0).residue, 4);
        assert!(s2.coeff(1).is_zero());
    }

    #[test]
    fn canonicalize_slot_one_times_e() {
        // (l=1, E*u) -> (l=2, p*u), with e = 2 so u survives as a slot entry
        let r = ring(3, 10, 16, 8, &[-3, 0, 1]);
        let eu = r.eis.poly.mul(&SeriesElement::from_ints(r.cfg, 16, &[0, 1])).unwrap();
        let elem = r.canonicalize(&[(1, eu)]);
        let s2 = elem.slot(r.cfg, r.n, 2);
        assert_eq!(s2.coeff(1).residue, 3);
        assert!(elem.slot(r.cfg, r.n, 1).is_zero());
    }

    #[test]
    fn canonicalize_reduces_degree() {
        // (l=1, u^e + p) reduced so the l=1 coefficient has degree < e.
        // Oracle: u + 2 = 1*(u-2) + 4, so slot1 = 4, slot2 = 2p = ... p*1 pushed with scale p
        let r = ring(2, 10, 16, 8, &[-2, 1]);
        let f = SeriesElement::from_ints(r.cfg, 16, &[2, 1]); // u^e + p with e = 1
        let elem = r.canonicalize(&[(1, f)]);
        let s1 = elem.slot(r.cfg, r.n, 1);
        let s2 = elem.slot(r.cfg, r.n, 2);
        assert!(s1.degree().unwrap_or(0) < r.eis.e);
        assert_eq!(s1.coeff(0).residue, 4);
        assert_eq!(s2.coeff(0).residue, 2);
    }

    #[test]
    fn canonicalize_idempotent_and_value_preserving() {
        // re-canonicalizing the slots of a canonical element is the identity
        let r = ring(3, 8, 12, 6, &[-3, 0, 1]);
        let f = SeriesElement::from_ints(r.cfg, 12, &[1, 4, 9, 2, 0, 7]);
        let elem = r.from_series(&f);
        let raw: Vec<(u32, SeriesElement)> =
            elem.slots.iter().map(|(&l, s)| (l, s.clone())).collect();
        assert_eq!(r.canonicalize(&raw), elem);
        // value preservation: clear denominators and compare in A mod p^{M-L}:
        // p^{L-1} * elem must equal p^{L-1} * f as a raw A-expression
        let mut acc = SeriesElement::zero(r.cfg, r.n);
        let mut epow = SeriesElement::one(r.cfg, r.n);
        for l in 0..r.l_max {
            // p^{L-1} (E/p)^l = p^{L-1-l} E^l
            let term = elem.slot(r.cfg, r.n, l).mul_p_pow(r.l_max - 1 - l).mul(&epow).unwrap();
            acc = acc.add(&term).unwrap();
            epow = epow.mul(&r.eis.poly).unwrap();
        }
        let target = f.mul_p_pow(r.l_max - 1);
        let diff = acc.sub(&target).unwrap();
        for c in diff.coeffs.values() {
            assert!(c.is_zero(), "value not preserved: {diff:?}");
        }
    }

    #[test]
    fn c_times_c_inverse_is_one() {
        for (p, eis) in [(2u32, vec![-2i64, 1]), (3, vec![-3, 0, 1]), (3, vec![3, 3, 1])] {
            let r = ring(p, 12, 16, 8, &eis);
            let c = r.c_element().unwrap();
            let cinv = r.invert(&c).unwrap();
            let prod = r.mul(&c, &cinv);
            assert_eq!(prod, r.one(), "c * c^-1 != 1 for p={p}");
        }
    }

    #[test]
    fn c_closed_form_p2() {
        // p=2, E=u-2: c = (2u-3) + 2 (E/p)^2; canonical form of 2u-3 is
        // 2u-3 = 2E+1, so slot0 = 1, slot1 = 2p = 4, slot2 = 2.
        let r = ring(2, 10, 16, 8, &[-2, 1]);
        let c = r.c_element().unwrap();
        assert_eq!(c.slot(r.cfg, r.n, 0).coeff(0).residue, 1);
        assert_eq!(c.slot(r.cfg, r.n, 1).coeff(0).residue, 4);
        assert_eq!(c.slot(r.cfg, r.n, 2).coeff(0).residue, 2);
        // c - delta(E) sits in Fil^1 (slot 0 vanishes), delta(E)(0) = -3 a unit,
        // and c itself is a unit of O_max
        let diff = r.sub(&c, &r.from_series(&r.eis.delta_exact()));
        assert!(diff.slot(r.cfg, r.n, 0).is_zero());
        let de0 = r.eis.delta_exact().constant_term();
        assert_eq!(de0.residue, TruncatedScalar::from_i64(&r.cfg, -3).residue);
        assert!(de0.is_unit(&r.cfg));
        assert!(r.eval_origin(&c).is_unit(&r.cfg));
    }

    #[test]
    fn div_e_and_mul_e_roundtrip() {
        let r = ring(3, 8, 12, 8, &[-3, 0, 1]);
        let f = SeriesElement::from_ints(r.cfg, 12, &[2, 5, 1, 3]);
        let a = r.from_series(&f);
        let ea = r.mul_e(&a);
        let back = r.exact_div_e(&ea).unwrap();
        assert!(r.eq(&back, &a));
        // 1 is not divisible by E
        assert!(r.exact_div_e(&r.one()).is_err());
    }

    #[test]
    fn div_u_roundtrip_and_obstruction() {
        let r = ring(2, 10, 16, 8, &[-2, 1]);
        let f = SeriesElement::from_ints(r.cfg, 16, &[0, 3, 7]); // divisible by u
        let a = r.from_series(&f);
        match r.divisible_by_u(&a, 1) {
            DivisibilityOutcome::Yes(q) => {
                let uq = r.mul_series(&q, &SeriesElement::from_ints(r.cfg, 16, &[0, 1]));
                assert!(r.eq(&uq, &a));
            }
            other => panic!("expected divisible, got {other:?}"),
        }
        // E is not divisible by u (E(0) = -p != 0)
        let e = r.from_series(&r.eis.poly.clone());
        assert_eq!(r.divisible_by_u(&e, 1), DivisibilityOutcome::No);
    }

    #[test]
    fn frobenius_of_e_is_p_times_c() {
        let r = ring(3, 10, 18, 9, &[-3, 0, 1]);
        let c_pows = r.c_pow_table().unwrap();
        let e_elem = r.from_series(&r.eis.poly.clone());
        let phi_e = r.frobenius_with(&e_elem, &c_pows);
        let pc = r.mul_p_pow(&c_pows[1].clone(), 1);
        assert!(r.eq(&phi_e, &pc));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_raw() -> impl Strategy<Value = Vec<(u32, Vec<i64>)>> {
            proptest::collection::vec(
                (0u32..4, proptest::collection::vec(-9i64..10, 1..5)),
                1..4,
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn canonicalize_idempotent_and_value_preserving_random(raw in arb_raw()) {
                let r = ring(3, 10, 24, 6, &[-3, 0, 1]);
                let pairs: Vec<(u32, SeriesElement)> = raw
                    .iter()
                    .map(|(l, cs)| (*l, SeriesElement::from_ints(r.cfg, r.n, cs)))
                    .collect();
                let elem = r.canonicalize(&pairs);
                // idempotent on its own slots
                let again: Vec<(u32, SeriesElement)> =
                    elem.slots.iter().map(|(&l, s)| (l, s.clone())).collect();
                prop_assert_eq!(r.canonicalize(&again), elem.clone());
                // slots have u-degree < e
                for s in elem.slots.values() {
                    prop_assert!(s.degree().unwrap_or(0) < r.eis.e);
                }
                // value preserved: p^{L-1} * elem equals p^{L-1} * raw in A
                let mut lhs = SeriesElement::zero(r.cfg, r.n);
                let mut rhs = SeriesElement::zero(r.cfg, r.n);
                for l in 0..r.l_max {
                    let epow = r.eis.poly.pow(l).unwrap();
                    let t = elem
                        .slot(r.cfg, r.n, l)
                        .mul_p_pow(r.l_max - 1 - l)
                        .mul(&epow)
                        .unwrap();
                    lhs = lhs.add(&t).unwrap();
                }
                for (l, s) in &pairs {
                    let epow = r.eis.poly.pow(*l).unwrap();
                    let t = s.mul_p_pow(r.l_max - 1 - l).mul(&epow).unwrap();
                    rhs = rhs.add(&t).unwrap();
                }
                prop_assert!(lhs.sub(&rhs).unwrap().is_zero());
            }

            #[test]
            fn mul_commutes_and_distributes(a in arb_raw(), b in arb_raw(), c in arb_raw()) {
                let r = ring(2, 10, 16, 6, &[-2, 1]);
                let mk = |raw: &Vec<(u32, Vec<i64>)>| {
                    let pairs: Vec<(u32, SeriesElement)> = raw
                        .iter()
                        .map(|(l, cs)| (*l, SeriesElement::from_ints(r.cfg, r.n, cs)))
                        .collect();
                    r.canonicalize(&pairs)
                };
                let (x, y, z) = (mk(&a), mk(&b), mk(&c));
                prop_assert!(r.eq(&r.mul(&x, &y), &r.mul(&y, &x)));
                let lhs = r.mul(&x, &r.add(&y, &z));
                let rhs = r.add(&r.mul(&x, &y), &r.mul(&x, &z));
                prop_assert!(r.eq(&lhs, &rhs));
            }
        }
    }
}
