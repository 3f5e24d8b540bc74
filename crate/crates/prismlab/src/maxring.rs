//! Canonical-form arithmetic in the divided-power completions of the
//! prismatic envelopes: elements are finite sums of O_max coefficients
//! times divided powers gamma_i of the envelope generator (z for the
//! untwisted ring, w for the semistable variant), truncated at gamma-order
//! I. Divided powers are symbolic basis elements; multiplication uses
//! integer binomials only, so no factorial denominators ever reach the
//! scalars.

use std::collections::BTreeMap;

use crate::deltacalc::{DeltaPoly, GammaTables, XPoly};
use crate::error::{Error, Result};
use crate::omax::{DivisibilityOutcome, OMaxElement, OMaxRing};
use crate::padic::{binom_u128, factorial_parts, pd_composition_factor, PrimeConfig, TruncatedScalar};
use crate::series::{divrem_monic, Eisenstein, SeriesElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Z,
    W,
}

impl std::fmt::Display for Flavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Flavor::Z => write!(f, "z"),
            Flavor::W => write!(f, "w"),
        }
    }
}

/// The canonical flavor convention: an element carries a flavor exactly
/// when a positive divided-power index is present.
fn normalize_flavor(mut e: MaxRingElement) -> MaxRingElement {
    if !e.terms.keys().any(|&i| i > 0) {
        e.flavor = None;
    }
    e
}

/// Element of A(2)_max (z-flavor) or A(2)_st,max (w-flavor).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MaxRingElement {
    pub flavor: Option<Flavor>,
    pub terms: BTreeMap<u32, OMaxElement>,
}

impl MaxRingElement {
    pub fn coeff(&self, i: u32) -> OMaxElement {
        self.terms.get(&i).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    /// gamma_0-only elements are flavor-agnostic; anything else carries one.
    fn flavor_of(&self) -> Option<Flavor> {
        self.flavor
    }
}

/// The working context: O_max plus the gamma-order truncation and
/// precomputed Frobenius tables for both flavors.
pub struct MaxRing {
    pub omax: OMaxRing,
    pub i_max: u32,
    pub c_pows: Vec<OMaxElement>,
    phi_gamma_z: Vec<MaxRingElement>,
    phi_gamma_w: Vec<MaxRingElement>,
}

impl MaxRing {
    pub fn new(cfg: PrimeConfig, n: u32, l_max: u32, i_max: u32, eis: Eisenstein) -> Result<Self> {
        if !(2..=48).contains(&i_max) {
            return Err(Error::BadInput("gamma-order truncation must be in 2..=48".into()));
        }
        let omax = OMaxRing::new(cfg, n, l_max, eis)?;
        let c_pows = omax.c_pow_table()?;
        let mut ring = MaxRing { omax, i_max, c_pows, phi_gamma_z: Vec::new(), phi_gamma_w: Vec::new() };
        let phi_z = ring.phi_generator_image(Flavor::Z)?;
        ring.phi_gamma_z = ring.gamma_vec(&phi_z, ring.i_max - 1)?;
        let phi_w = ring.phi_generator_image(Flavor::W)?;
        ring.phi_gamma_w = ring.gamma_vec(&phi_w, ring.i_max - 1)?;
        Ok(ring)
    }

    pub fn cfg(&self) -> PrimeConfig {
        self.omax.cfg
    }

    pub fn zero(&self) -> MaxRingElement {
        MaxRingElement::default()
    }

    pub fn one(&self) -> MaxRingElement {
        self.from_omax(self.omax.one())
    }

    pub fn from_omax(&self, c: OMaxElement) -> MaxRingElement {
        let mut t = BTreeMap::new();
        if !c.slots.is_empty() {
            t.insert(0, c);
        }
        MaxRingElement { flavor: None, terms: t }
    }

    pub fn from_series(&self, s: &SeriesElement) -> MaxRingElement {
        self.from_omax(self.omax.from_series(s))
    }

    pub fn constant(&self, c: TruncatedScalar) -> MaxRingElement {
        self.from_omax(self.omax.constant(c))
    }

    /// The basis element gamma_i of the given flavor with coefficient 1.
    pub fn gamma(&self, flavor: Flavor, i: u32) -> MaxRingElement {
        let mut t = BTreeMap::new();
        t.insert(i, self.omax.one());
        MaxRingElement { flavor: if i > 0 { Some(flavor) } else { None }, terms: t }
    }

    pub fn gamma_with(&self, flavor: Flavor, i: u32, coeff: OMaxElement) -> MaxRingElement {
        let mut t = BTreeMap::new();
        if !coeff.slots.is_empty() {
            t.insert(i, coeff);
        }
        normalize_flavor(MaxRingElement { flavor: Some(flavor), terms: t })
    }

    fn join_flavor(&self, a: &MaxRingElement, b: &MaxRingElement) -> Result<Option<Flavor>> {
        match (a.flavor_of(), b.flavor_of()) {
            (Some(x), Some(y)) if x != y => Err(Error::FlavorMismatch {
                expected: x.to_string(),
                got: y.to_string(),
            }),
            (Some(x), _) => Ok(Some(x)),
            (_, y) => Ok(y),
        }
    }

    pub fn add(&self, a: &MaxRingElement, b: &MaxRingElement) -> Result<MaxRingElement> {
        let flavor = self.join_flavor(a, b)?;
        let mut out = a.clone();
        out.flavor = flavor;
        for (&i, c) in &b.terms {
            let cur = out.coeff(i);
            let s = self.omax.add(&cur, c);
            if s.slots.is_empty() {
                out.terms.remove(&i);
            } else {
                out.terms.insert(i, s);
            }
        }
        Ok(normalize_flavor(out))
    }

    pub fn neg(&self, a: &MaxRingElement) -> MaxRingElement {
        let mut out = self.zero();
        out.flavor = a.flavor;
        for (&i, c) in &a.terms {
            out.terms.insert(i, self.omax.neg(c));
        }
        out
    }

    pub fn sub(&self, a: &MaxRingElement, b: &MaxRingElement) -> Result<MaxRingElement> {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &MaxRingElement, b: &MaxRingElement) -> Result<MaxRingElement> {
        let flavor = self.join_flavor(a, b)?;
        let mut out = self.zero();
        out.flavor = flavor;
        for (&i, ca) in &a.terms {
            for (&j, cb) in &b.terms {
                if i + j >= self.i_max {
                    continue;
                }
                let binom = binom_u128(&self.cfg(), (i + j) as u64, i as u64);
                let c = self.omax.scale(&self.omax.mul(ca, cb), &binom);
                let cur = out.coeff(i + j);
                let s = self.omax.add(&cur, &c);
                if s.slots.is_empty() {
                    out.terms.remove(&(i + j));
                } else {
                    out.terms.insert(i + j, s);
                }
            }
        }
        Ok(normalize_flavor(out))
    }

    pub fn mul_omax(&self, a: &MaxRingElement, c: &OMaxElement) -> MaxRingElement {
        let mut out = self.zero();
        out.flavor = a.flavor;
        for (&i, ca) in &a.terms {
            let s = self.omax.mul(ca, c);
            if !s.slots.is_empty() {
                out.terms.insert(i, s);
            }
        }
        normalize_flavor(out)
    }

    pub fn mul_series(&self, a: &MaxRingElement, s: &SeriesElement) -> MaxRingElement {
        self.mul_omax(a, &self.omax.from_series(s))
    }

    pub fn scale(&self, a: &MaxRingElement, c: &TruncatedScalar) -> MaxRingElement {
        let mut out = self.zero();
        out.flavor = a.flavor;
        for (&i, ca) in &a.terms {
            let s = self.omax.scale(ca, c);
            if !s.slots.is_empty() {
                out.terms.insert(i, s);
            }
        }
        normalize_flavor(out)
    }

    pub fn pow(&self, a: &MaxRingElement, e: u32) -> Result<MaxRingElement> {
        let mut acc = self.one();
        for _ in 0..e {
            acc = self.mul(&acc, a)?;
        }
        Ok(acc)
    }

    pub fn eq(&self, a: &MaxRingElement, b: &MaxRingElement) -> bool {
        match self.sub(a, b) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }

    pub fn mul_e_pow(&self, a: &MaxRingElement, h: u32) -> MaxRingElement {
        let mut out = self.zero();
        out.flavor = a.flavor;
        for (&i, c) in &a.terms {
            let s = self.omax.mul_e_pow(c, h);
            if !s.slots.is_empty() {
                out.terms.insert(i, s);
            }
        }
        normalize_flavor(out)
    }

    pub fn exact_div_e(&self, a: &MaxRingElement) -> Result<MaxRingElement> {
        let mut out = self.zero();
        out.flavor = a.flavor;
        for (&i, c) in &a.terms {
            let q = self.omax.exact_div_e(c)?;
            if !q.slots.is_empty() {
                out.terms.insert(i, q);
            }
        }
        Ok(normalize_flavor(out))
    }

    pub fn exact_div_e_pow(&self, a: &MaxRingElement, h: u32) -> Result<MaxRingElement> {
        let mut out = a.clone();
        for _ in 0..h {
            out = self.exact_div_e(&out)?;
        }
        Ok(out)
    }

    pub fn exact_div_p(&self, a: &MaxRingElement, k: u32) -> Result<MaxRingElement> {
        let mut out = self.zero();
        out.flavor = a.flavor;
        for (&i, c) in &a.terms {
            let q = self.omax.exact_div_p(c, k)?;
            if !q.slots.is_empty() {
                out.terms.insert(i, q);
            }
        }
        Ok(normalize_flavor(out))
    }

    pub fn mul_p_pow(&self, a: &MaxRingElement, k: u32) -> MaxRingElement {
        let mut out = self.zero();
        out.flavor = a.flavor;
        for (&i, c) in &a.terms {
            let s = self.omax.mul_p_pow(c, k);
            if !s.slots.is_empty() {
                out.terms.insert(i, s);
            }
        }
        normalize_flavor(out)
    }

    /// Inverse of an element that is a unit modulo the augmentation ideal
    /// (u, gamma_{>=1}, E/p): Newton iteration, nilpotent correction.
    pub fn invert(&self, a: &MaxRingElement) -> Result<MaxRingElement> {
        let a0 = self.omax.eval_origin(&a.coeff(0));
        let a0inv = a0
            .invert(&self.cfg())
            .map_err(|_| Error::NotInvertible("max-ring element with non-unit residue".into()))?;
        let mut inv = self.constant(a0inv);
        inv.flavor = a.flavor;
        for _ in 0..96 {
            let err = self.sub(&self.one(), &self.mul(a, &inv)?)?;
            if err.is_zero() {
                return Ok(inv);
            }
            inv = self.add(&inv, &self.mul(&inv, &err)?)?;
        }
        Err(Error::NoConvergence("max-ring inversion did not stabilize".into()))
    }

    /// The element E/p (gamma_0 coefficient, slot 1).
    pub fn e_over_p(&self) -> MaxRingElement {
        self.from_omax(self.omax.e_over_p())
    }

    /// gamma_k(x) for k = 0..=k_max of a gamma_0-free element x, by the
    /// universal divided-power composition laws.
    pub fn gamma_vec(&self, x: &MaxRingElement, k_max: u32) -> Result<Vec<MaxRingElement>> {
        if !x.coeff(0).is_zero() {
            return Err(Error::BadInput("gamma of an element with constant term".into()));
        }
        let flavor = x.flavor;
        let mut state: Vec<MaxRingElement> = Vec::with_capacity(k_max as usize + 1);
        state.push(self.one());
        for _ in 1..=k_max {
            state.push(self.zero());
        }
        for (&i, b) in &x.terms {
            if i == 0 {
                continue;
            }
            // gamma_k(b gamma_i) = b^k M(k, i) gamma_{ki}
            let mut term_gammas: Vec<MaxRingElement> = Vec::with_capacity(k_max as usize + 1);
            term_gammas.push(self.one());
            let mut bpow = self.omax.one();
            for k in 1..=k_max {
                bpow = self.omax.mul(&bpow, b);
                let ki = (k as u64) * (i as u64);
                if ki >= self.i_max as u64 {
                    term_gammas.push(self.zero());
                    continue;
                }
                let m = pd_composition_factor(&self.cfg(), k as u64, i as u64);
                let coeff = self.omax.scale(&bpow, &m);
                term_gammas.push(self.gamma_with(flavor.unwrap_or(Flavor::Z), ki as u32, coeff));
            }
            // convolve into the state
            let mut next: Vec<MaxRingElement> = Vec::with_capacity(k_max as usize + 1);
            for k in 0..=k_max {
                let mut acc = self.zero();
                for k1 in 0..=k {
                    let t = self.mul(&term_gammas[k1 as usize], &state[(k - k1) as usize])?;
                    acc = self.add(&acc, &t)?;
                }
                next.push(acc);
            }
            state = next;
        }
        Ok(state)
    }

    /// phi(z) (resp. phi(w)) expanded in the gamma basis with O_max
    /// coefficients: c^{-1} [ sum_{0<i<p} (C(p,i)/p) i! u^{p-i} E^i gamma_i
    /// + (p-1)! E^p gamma_p ], with the u-powers present only for z.
    fn phi_generator_image(&self, flavor: Flavor) -> Result<MaxRingElement> {
        let cfg = self.cfg();
        let p = cfg.p;
        let cinv = self.omax.invert(&self.c_pows[1])?;
        let mut out = self.zero();
        out.flavor = Some(flavor);
        for i in 1..p {
            let cpi = binom_u128(&cfg, p as u64, i as u64).exact_div_p(&cfg, 1)?;
            let (_, ifact) = factorial_parts(&cfg, i as u64);
            // v_p(i!) = 0 for i < p
            let scalar = cpi.mul(&cfg, &ifact);
            let mut series = self.omax.eis.poly.pow(i)?;
            if flavor == Flavor::Z {
                series = series.mul_u_pow(p - i);
            }
            let coeff = self.omax.mul(&cinv, &self.omax.from_series(&series.scale(&scalar)));
            out = self.add(&out, &self.gamma_with(flavor, i, coeff))?;
        }
        if p < self.i_max {
            let (_, pm1fact) = factorial_parts(&cfg, (p - 1) as u64);
            let ep = self.omax.eis.poly.pow(p)?.scale(&pm1fact);
            let coeff = self.omax.mul(&cinv, &self.omax.from_series(&ep));
            out = self.add(&out, &self.gamma_with(flavor, p, coeff))?;
        }
        Ok(out)
    }

    /// The ring endomorphism extending the Frobenius of A.
    pub fn phi(&self, a: &MaxRingElement) -> Result<MaxRingElement> {
        let table = match a.flavor {
            Some(Flavor::W) => &self.phi_gamma_w,
            _ => &self.phi_gamma_z,
        };
        let mut out = self.zero();
        out.flavor = a.flavor;
        for (&i, c) in &a.terms {
            let fc = self.omax.frobenius_with(c, &self.c_pows);
            let t = self.mul_omax(&table[i as usize], &fc);
            out = self.add(&out, &t)?;
        }
        Ok(out)
    }

    /// The embedding of the delta-calculus generators: iota(z_0) = gamma_1(z),
    /// iota(z_{n+1}) = (phi(iota(z_n)) - iota(z_n)^p)/p, exact at each level.
    pub fn iota_z_table(&self, depth: u32) -> Result<Vec<MaxRingElement>> {
        let mut out = Vec::with_capacity(depth as usize + 1);
        out.push(self.gamma(Flavor::Z, 1));
        for n in 0..depth {
            let cur: &MaxRingElement = &out[n as usize];
            let num = self.sub(&self.phi(cur)?, &self.pow(cur, self.cfg().p)?)?;
            out.push(self.exact_div_p(&num, 1)?);
        }
        Ok(out)
    }

    /// Evaluate a delta-polynomial in the ring through the iota table.
    pub fn iota_delta(&self, f: &DeltaPoly, table: &[MaxRingElement]) -> Result<MaxRingElement> {
        let mut out = self.zero();
        for (m, c) in &f.terms {
            let mut t = self.from_series(c);
            for (j, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if j >= table.len() {
                    return Err(Error::DepthExceeded { needed: j as u32 + 1, have: table.len() as u32 });
                }
                t = self.mul(&t, &self.pow(&table[j], e)?)?;
            }
            out = self.add(&out, &t)?;
        }
        Ok(out)
    }

    /// Substitute X = E/p into an X-polynomial with delta-poly coefficients.
    pub fn iota_xpoly(&self, f: &XPoly, table: &[MaxRingElement]) -> Result<MaxRingElement> {
        let mut out = self.zero();
        let mut xpow = self.one();
        let mut last = 0u32;
        for (&k, d) in &f.coeffs {
            for _ in last..k {
                xpow = self.mul(&xpow, &self.e_over_p())?;
            }
            last = k;
            out = self.add(&out, &self.mul(&self.iota_delta(d, table)?, &xpow)?)?;
        }
        Ok(out)
    }

    /// The inclusion z = u*w: gamma_i(z) -> u^i gamma_i(w).
    pub fn st_embed(&self, a: &MaxRingElement) -> Result<MaxRingElement> {
        if a.flavor == Some(Flavor::W) {
            return Err(Error::FlavorMismatch { expected: "z".into(), got: "w".into() });
        }
        let mut out = self.zero();
        out.flavor = if a.terms.keys().any(|&i| i > 0) { Some(Flavor::W) } else { None };
        for (&i, c) in &a.terms {
            let ui = SeriesElement::monomial(self.cfg(), self.omax.n, 0, TruncatedScalar::one(&self.cfg()))
                .mul_u_pow(i.min(self.omax.n - 1));
            let s = if i >= self.omax.n {
                // u^i vanishes u-adically beyond the window
                continue;
            } else {
                self.omax.mul(c, &self.omax.from_series(&ui))
            };
            if !s.slots.is_empty() {
                out.terms.insert(i, s);
            }
        }
        Ok(out)
    }

    /// Reduction modulo E: slots l >= 1 die, the slot-0 polynomial is the
    /// residue-ring representative (u mapsto the uniformizer class).
    pub fn reduce_mod_e(&self, a: &MaxRingElement) -> ResidueDP {
        let mut out = ResidueDP { terms: BTreeMap::new() };
        for (&i, c) in &a.terms {
            let s0 = c.slot(self.cfg(), self.omax.n, 0);
            if !s0.coeffs.is_empty() {
                out.terms.insert(i, s0);
            }
        }
        out
    }

    /// Membership of a w-flavor element in the z-flavor subring: every
    /// gamma_i(w) coefficient must be divisible by u^i, and the quotients
    /// reassemble to the z-flavor preimage.
    pub fn a2_membership(&self, a: &MaxRingElement) -> Membership {
        if a.flavor == Some(Flavor::Z) || a.terms.keys().all(|&i| i == 0) {
            let mut pre = a.clone();
            pre.flavor = None;
            return Membership::Member(pre);
        }
        let mut pre = self.zero();
        let mut undecided = false;
        for (&i, c) in &a.terms {
            match self.omax.divisible_by_u(c, i) {
                DivisibilityOutcome::Yes(q) => {
                    if !q.slots.is_empty() {
                        pre.terms.insert(i, q);
                    }
                }
                DivisibilityOutcome::No => {
                    return Membership::NonMember { gamma_index: i, coeff: c.clone() };
                }
                DivisibilityOutcome::Undecided => undecided = true,
            }
        }
        if undecided {
            return Membership::Undecided;
        }
        pre.flavor = if pre.terms.keys().any(|&i| i > 0) { Some(Flavor::Z) } else { None };
        Membership::Member(pre)
    }

    /// Constructive closedness decomposition: given y = sum p^{n-i} E^i x_i
    /// (a p^n-multiple in the subring sense), recover such a decomposition.
    pub fn decompose_p_power(
        &self,
        y: &MaxRingElement,
        n: u32,
        lift: &A2Lift,
    ) -> Result<Vec<MaxRingElement>> {
        let mut out = Vec::with_capacity(n as usize + 1);
        let mut cur = y.clone();
        for i in 0..n {
            let r = self.reduce_mod_e(&cur);
            let l = lift.lift(self, &r)?;
            let xi = self.exact_div_p(&l, n - i)?;
            out.push(xi);
            cur = self.exact_div_e(&self.sub(&cur, &l)?)?;
        }
        out.push(cur);
        Ok(out)
    }
}

/// Divided-power polynomial over the residue ring R = A/E: the image of
/// reduce_mod_e. Coefficients are u-polynomials of degree < e standing for
/// R-elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueDP {
    pub terms: BTreeMap<u32, SeriesElement>,
}

impl ResidueDP {
    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|s| s.is_zero())
    }
}

/// Lift table from the residue divided-power ring back into the subring
/// generated by the delta-calculus: gamma-tilde^j(z) lifts to nu_j^{-1} z_j,
/// and a general gamma_i through its base-p digits.
pub struct A2Lift {
    /// lift of the basis element gamma_i(zbar) for i < i_max.
    pub lift_gamma: Vec<MaxRingElement>,
}

impl A2Lift {
    pub fn build(ring: &MaxRing, tables: &mut GammaTables, depth: u32) -> Result<A2Lift> {
        let cfg = ring.cfg();
        let p = cfg.p;
        let iota = ring.iota_z_table(depth)?;
        // level j lifts gamma~^j(z): nu_j^{-1} (iota(z_j) - P_j(0)), the
        // constant term of the materialized X-polynomial being the part of
        // z_j that survives reduction mod the filtration
        let mut level_lift: Vec<MaxRingElement> = Vec::new();
        level_lift.push(iota[0].clone()); // gamma~^0(z) = z
        let mut j = 1u32;
        while p.pow(j) < ring.i_max {
            let data = tables.eq_delta_data(j)?;
            let nuinv = data.nu.invert()?;
            let mut body = iota[j as usize].clone();
            if let Some(p0) = data.p_poly.coeffs.get(&0) {
                body = ring.sub(&body, &ring.iota_delta(p0, &iota)?)?;
            }
            level_lift.push(ring.mul_series(&body, &nuinv));
            j += 1;
        }
        let mut lift_gamma = Vec::with_capacity(ring.i_max as usize);
        for i in 0..ring.i_max {
            if i == 0 {
                lift_gamma.push(ring.one());
                continue;
            }
            let (vf, uf) = factorial_parts(&cfg, i as u64);
            let mut digits = Vec::new();
            let mut v = i;
            let mut s = 0u32;
            while v > 0 {
                digits.push(v % p);
                s += v % p;
                v /= p;
            }
            debug_assert_eq!(vf, (i - s) / (p - 1));
            let mut acc = ring.constant(uf.invert(&cfg)?);
            for (jj, &d) in digits.iter().enumerate() {
                for _ in 0..d {
                    acc = ring.mul(&acc, &level_lift[jj])?;
                }
            }
            lift_gamma.push(acc);
        }
        let lift = A2Lift { lift_gamma };
        lift.verify(ring)?;
        Ok(lift)
    }

    /// Build-time contract: each table entry reduces to exactly its
    /// divided-power basis element.
    fn verify(&self, ring: &MaxRing) -> Result<()> {
        for (i, l) in self.lift_gamma.iter().enumerate() {
            let red = ring.reduce_mod_e(l);
            for (&gi, s) in &red.terms {
                let expect_one = gi as usize == i;
                let ok = if expect_one {
                    s.sub(&SeriesElement::one(ring.cfg(), ring.omax.n))
                        .map(|d| d.is_zero())
                        .unwrap_or(false)
                } else {
                    s.is_zero()
                };
                if !ok {
                    return Err(Error::BadInput(format!(
                        "lift of gamma_{i} reduces with an unexpected gamma_{gi} component"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Lift a residue divided-power polynomial into the ring.
    pub fn lift(&self, ring: &MaxRing, r: &ResidueDP) -> Result<MaxRingElement> {
        let mut out = ring.zero();
        for (&i, s) in &r.terms {
            if i as usize >= self.lift_gamma.len() {
                return Err(Error::TruncationExceeded(format!(
                    "no lift table entry for gamma index {i}"
                )));
            }
            let t = ring.mul_series(&self.lift_gamma[i as usize], s);
            out = ring.add(&out, &t)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub enum Membership {
    Member(MaxRingElement),
    NonMember { gamma_index: u32, coeff: OMaxElement },
    Undecided,
}

/// Evaluate the I_plus-residue of a w-flavor element: u, the gamma_{>=1}(w)
/// and the E/p-free part of E all reduce away, leaving a scalar in W(k).
pub fn iplus_reduce(ring: &MaxRing, a: &MaxRingElement) -> TruncatedScalar {
    ring.omax.eval_origin(&a.coeff(0))
}

/// reduce_mod_e composed with the linear extension by gamma_i: used to
/// compare residue polynomials.
pub fn residue_eq(a: &ResidueDP, b: &ResidueDP) -> bool {
    let keys: std::collections::BTreeSet<u32> =
        a.terms.keys().chain(b.terms.keys()).copied().collect();
    for k in keys {
        match (a.terms.get(&k), b.terms.get(&k)) {
            (Some(x), Some(y)) => {
                if !x.sub(y).map(|d| d.is_zero()).unwrap_or(false) {
                    return false;
                }
            }
            (Some(x), None) | (None, Some(x)) => {
                if !x.is_zero() {
                    return false;
                }
            }
            (None, None) => {}
        }
    }
    true
}

/// Monic remainder mod E of a full series, used when building residue data
/// from raw series.
pub fn series_mod_e(eis: &Eisenstein, f: &SeriesElement) -> SeriesElement {
    let (_, r) = divrem_monic(f, &eis.poly, eis.e);
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(p: u32, m: u32, n: u32, l: u32, i: u32, eis: &[i64]) -> MaxRing {
        let cfg = PrimeConfig::new(p, m).unwrap();
        let e = Eisenstein::from_ints(cfg, n, eis).unwrap();
        MaxRing::new(cfg, n, l, i, e).unwrap()
    }

    #[test]
    fn gamma_products() {
        let r = ring(3, 8, 12, 6, 8, &[-3, 0, 1]);
        // gamma_1 * gamma_1 = 2 gamma_2
        let g1 = r.gamma(Flavor::Z, 1);
        let prod = r.mul(&g1, &g1).unwrap();
        let expect = r.scale(&r.gamma(Flavor::Z, 2), &TruncatedScalar::from_u128(&r.cfg(), 2));
        assert!(r.eq(&prod, &expect));
        // gamma_2(w) * gamma_3(w) = C(5,2) gamma_5 = 10 gamma_5
        let a = r.gamma(Flavor::W, 2);
        let b = r.gamma(Flavor::W, 3);
        let prod = r.mul(&a, &b).unwrap();
        let expect = r.scale(&r.gamma(Flavor::W, 5), &TruncatedScalar::from_u128(&r.cfg(), 10));
        assert!(r.eq(&prod, &expect));
        // flavor mismatch is an error
        assert!(r.mul(&r.gamma(Flavor::Z, 1), &r.gamma(Flavor::W, 1)).is_err());
    }

    #[test]
    fn square_of_eop_plus_gamma1() {
        // (E/p + gamma_1)^2 = (E/p)^2 + 2 (E/p) gamma_1 + 2 gamma_2
        let r = ring(2, 10, 12, 8, 8, &[-2, 1]);
        let x = r.add(&r.e_over_p(), &r.gamma(Flavor::Z, 1)).unwrap();
        let sq = r.mul(&x, &x).unwrap();
        let mut expect = r.mul(&r.e_over_p(), &r.e_over_p()).unwrap();
        let two = TruncatedScalar::from_u128(&r.cfg(), 2);
        expect = r
            .add(&expect, &r.scale(&r.mul(&r.e_over_p(), &r.gamma(Flavor::Z, 1)).unwrap(), &two))
            .unwrap();
        expect = r.add(&expect, &r.scale(&r.gamma(Flavor::Z, 2), &two)).unwrap();
        assert!(r.eq(&sq, &expect));
    }

    #[test]
    fn phi_is_ring_hom() {
        let r = ring(2, 8, 16, 10, 10, &[-2, 1]);
        let f = r
            .add(&r.from_series(&SeriesElement::from_ints(r.cfg(), 16, &[1, 2])), &r.gamma(Flavor::Z, 1))
            .unwrap();
        let g = r.add(&r.gamma(Flavor::Z, 2), &r.e_over_p()).unwrap();
        let lhs = r.phi(&r.mul(&f, &g).unwrap()).unwrap();
        let rhs = r.mul(&r.phi(&f).unwrap(), &r.phi(&g).unwrap()).unwrap();
        assert!(r.eq(&lhs, &rhs));
        // phi(gamma_0) = 1 on constants
        assert!(r.eq(&r.phi(&r.one()).unwrap(), &r.one()));
    }

    #[test]
    fn phi_z_leading_structure() {
        // p=2, E=u-2: phi(z) = c^{-1}(uE gamma_1 + E^2 gamma_2)
        let r = ring(2, 10, 16, 10, 10, &[-2, 1]);
        let phi_z = r.phi(&r.gamma(Flavor::Z, 1)).unwrap();
        let cinv = r.omax.invert(&r.c_pows[1]).unwrap();
        let ue = r.omax.eis.poly.mul(&SeriesElement::from_ints(r.cfg(), 16, &[0, 1])).unwrap();
        let e2 = r.omax.eis.poly.pow(2).unwrap();
        let mut expect = r.gamma_with(Flavor::Z, 1, r.omax.mul(&cinv, &r.omax.from_series(&ue)));
        expect = r
            .add(&expect, &r.gamma_with(Flavor::Z, 2, r.omax.mul(&cinv, &r.omax.from_series(&e2))))
            .unwrap();
        assert!(r.eq(&phi_z, &expect), "{phi_z:?}");
    }

    #[test]
    fn iota_defining_relation() {
        // E * iota(z_0) equals the canonical image of y - x = E*z
        let r = ring(2, 10, 16, 10, 10, &[-2, 1]);
        let table = r.iota_z_table(3).unwrap();
        let ez = r.mul_series(&table[0], &r.omax.eis.poly.clone());
        // y - x = E z = E gamma_1(z): same thing; the defining relation is
        // that iota(z_0) is exactly gamma_1(z)
        assert!(r.eq(&table[0], &r.gamma(Flavor::Z, 1)));
        assert!(!ez.is_zero());
    }

    #[test]
    fn phi_iota_compatible_with_delta_side_phi() {
        // phi(iota(f)) = iota(f^p + p delta(f)) on randomized delta-polynomials
        use crate::deltacalc::{delta_poly, DeltaCtx, DeltaPoly};
        use crate::rng::Rng;
        let r = ring(2, 8, 20, 20, 12, &[-2, 1]);
        let ctx = DeltaCtx::new(r.cfg(), 20, 6, 20, r.omax.eis.clone()).unwrap();
        let table = r.iota_z_table(4).unwrap();
        let mut rng = Rng::new(11);
        for _ in 0..4 {
            let mut f = DeltaPoly::zero();
            for _ in 0..2 {
                let m = vec![rng.below(3) as u32, rng.below(2) as u32];
                let mut s = SeriesElement::zero(r.cfg(), 20);
                s.set(rng.below(3) as u32, TruncatedScalar::from_i64(&r.cfg(), rng.i64_in(-5, 5)));
                f.add_term(m, s);
            }
            let lhs = r.phi(&r.iota_delta(&f, &table).unwrap()).unwrap();
            let fp = f.pow(&ctx, 2);
            let df = delta_poly(&ctx, &f).unwrap();
            let mut rhs_poly = fp.clone();
            for (m, c) in &df.terms {
                rhs_poly.add_term(m.clone(), c.mul_p_pow(1));
            }
            let rhs = r.iota_delta(&rhs_poly, &table).unwrap();
            assert!(r.eq(&lhs, &rhs));
        }
    }

    #[test]
    fn iota_z1_against_gamma_structure() {
        // iota(z_1) = -gamma~(z) + tail: its gamma_2(z) coefficient is -1 (p=2)
        let r = ring(2, 12, 16, 10, 10, &[-2, 1]);
        let table = r.iota_z_table(2).unwrap();
        let z1 = &table[1];
        let g2 = z1.coeff(2);
        let minus_one = TruncatedScalar::from_i64(&r.cfg(), -1);
        let s0 = g2.slot(r.cfg(), 16, 0);
        assert_eq!(s0.coeff(0).residue % r.cfg().pow_p(s0.coeff(0).prec), minus_one.residue % r.cfg().pow_p(s0.coeff(0).prec));
    }

    #[test]
    fn st_embed_is_hom_and_injective_shape() {
        let r = ring(3, 8, 12, 6, 9, &[-3, 0, 1]);
        // gamma_1(z) -> u gamma_1(w), gamma_2(z) -> u^2 gamma_2(w)
        let e1 = r.st_embed(&r.gamma(Flavor::Z, 1)).unwrap();
        let u = SeriesElement::from_ints(r.cfg(), 12, &[0, 1]);
        let expect = r.gamma_with(Flavor::W, 1, r.omax.from_series(&u));
        assert!(r.eq(&e1, &expect));
        let e2 = r.st_embed(&r.gamma(Flavor::Z, 2)).unwrap();
        let u2 = u.mul(&u).unwrap();
        let expect = r.gamma_with(Flavor::W, 2, r.omax.from_series(&u2));
        assert!(r.eq(&e2, &expect));
        // homomorphism on a product
        let a = r.add(&r.gamma(Flavor::Z, 1), &r.one()).unwrap();
        let b = r.add(&r.gamma(Flavor::Z, 2), &r.e_over_p()).unwrap();
        let lhs = r.st_embed(&r.mul(&a, &b).unwrap()).unwrap();
        let rhs = r.mul(&r.st_embed(&a).unwrap(), &r.st_embed(&b).unwrap()).unwrap();
        assert!(r.eq(&lhs, &rhs));
    }

    #[test]
    fn membership_examples() {
        let r = ring(2, 10, 12, 8, 8, &[-2, 1]);
        let u = SeriesElement::from_ints(r.cfg(), 12, &[0, 1]);
        // u gamma_1(w) is a member (it is gamma_1(z))
        let m = r.gamma_with(Flavor::W, 1, r.omax.from_series(&u));
        match r.a2_membership(&m) {
            Membership::Member(pre) => assert!(r.eq(&pre, &r.gamma(Flavor::Z, 1))),
            other => panic!("expected member, got {other:?}"),
        }
        // bare gamma_1(w) is not
        match r.a2_membership(&r.gamma(Flavor::W, 1)) {
            Membership::NonMember { gamma_index, .. } => assert_eq!(gamma_index, 1),
            other => panic!("expected non-member, got {other:?}"),
        }
        // a coefficient entirely below the precision floor stays undecided
        let below = TruncatedScalar { residue: 0, prec: 0 };
        let coeff = r.omax.constant(below);
        let elem = r.gamma_with(Flavor::W, 1, coeff);
        match r.a2_membership(&elem) {
            Membership::Undecided => {}
            other => panic!("expected undecided, got {other:?}"),
        }
    }

    #[test]
    fn reduce_mod_e_kills_fil_one() {
        let r = ring(2, 10, 12, 8, 8, &[-2, 1]);
        // E/p maps to zero
        let red = r.reduce_mod_e(&r.e_over_p());
        assert!(red.is_zero());
        // u + gamma_3(z) keeps both parts
        let f = r
            .add(&r.from_series(&SeriesElement::from_ints(r.cfg(), 12, &[0, 1])), &r.gamma(Flavor::Z, 3))
            .unwrap();
        let red = r.reduce_mod_e(&f);
        assert_eq!(red.terms.len(), 2);
    }

    #[test]
    fn iplus_reduction() {
        let r = ring(2, 10, 12, 8, 8, &[-2, 1]);
        // 3 + u + gamma_2(w) -> 3
        let f = r
            .add(
                &r.add(&r.constant(TruncatedScalar::from_u128(&r.cfg(), 3)),
                       &r.from_series(&SeriesElement::from_ints(r.cfg(), 12, &[0, 1]))).unwrap(),
                &r.gamma(Flavor::W, 2),
            )
            .unwrap();
        assert_eq!(iplus_reduce(&r, &f).residue, 3);
        // E = u - p maps to -p
        let e = r.from_series(&r.omax.eis.poly.clone());
        let v = iplus_reduce(&r, &e);
        assert_eq!(v.residue, TruncatedScalar::from_i64(&r.cfg(), -2).residue % r.cfg().pow_p(v.prec));
    }
}
