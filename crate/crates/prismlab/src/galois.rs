//! The group action on the semistable envelope: group elements are
//! parametrized by a Kummer coordinate a and a cyclotomic coordinate chi,
//! acting by u -> eps^a u and ye -> (1+ye)^chi - 1, where ye = eps - 1 is
//! stored as E*w. The composition law (a_g + chi_g a_h, chi_g chi_h) is
//! forced by evaluating on u and eps.

use crate::error::{Error, Result};
use crate::maxring::{Flavor, MaxRing, MaxRingElement};
use crate::omax::OMaxElement;
use crate::padic::{factorial_parts, PrimeConfig, TruncatedScalar};
use crate::series::SeriesElement;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupElement {
    /// Kummer coordinate: g(u) = eps^a u.
    pub a: TruncatedScalar,
    /// Cyclotomic coordinate, a p-adic unit: g(eps) = eps^chi.
    pub chi: TruncatedScalar,
}

impl GroupElement {
    pub fn identity(cfg: &PrimeConfig) -> Self {
        GroupElement { a: TruncatedScalar::zero(cfg), chi: TruncatedScalar::one(cfg) }
    }

    pub fn tau(cfg: &PrimeConfig) -> Self {
        GroupElement { a: TruncatedScalar::one(cfg), chi: TruncatedScalar::one(cfg) }
    }

    /// An element of the cyclotomic-side subgroup: fixes u, moves eps.
    pub fn hk(cfg: &PrimeConfig, chi: TruncatedScalar) -> Result<Self> {
        if !chi.is_unit(cfg) {
            return Err(Error::BadInput("chi must be a p-adic unit".into()));
        }
        Ok(GroupElement { a: TruncatedScalar::zero(cfg), chi })
    }

    pub fn new(cfg: &PrimeConfig, a: TruncatedScalar, chi: TruncatedScalar) -> Result<Self> {
        if !chi.is_unit(cfg) {
            return Err(Error::BadInput("chi must be a p-adic unit".into()));
        }
        Ok(GroupElement { a, chi })
    }

    pub fn is_identity(&self, cfg: &PrimeConfig) -> bool {
        self.a.is_zero() && self.chi.sub(cfg, &TruncatedScalar::one(cfg)).is_zero()
    }

    /// Semidirect composition: evaluate g(h(u)) = eps^{a_g + chi_g a_h} u.
    pub fn compose(&self, cfg: &PrimeConfig, rhs: &Self) -> Self {
        GroupElement {
            a: self.a.add(cfg, &self.chi.mul(cfg, &rhs.a)),
            chi: self.chi.mul(cfg, &rhs.chi),
        }
    }

    pub fn pow(&self, cfg: &PrimeConfig, e: u32) -> Self {
        let mut acc = GroupElement::identity(cfg);
        for _ in 0..e {
            acc = acc.compose(cfg, self);
        }
        acc
    }
}

/// Precomputed action data for one group element on one ring: the unit
/// r = g(E)/E, its inverse, and the multiplier V with g(w) = V * w, so that
/// g(gamma_i(w)) = V^i gamma_i(w).
pub struct GroupAction<'r> {
    pub ring: &'r MaxRing,
    pub g: GroupElement,
    pub r: MaxRingElement,
    pub r_inv: MaxRingElement,
    v_pows: Vec<MaxRingElement>,
}

impl<'r> GroupAction<'r> {
    pub fn new(ring: &'r MaxRing, g: GroupElement) -> Result<Self> {
        let cfg = ring.cfg();
        // r = 1 + (g(E) - E)/E, division exact since g(E) - E is a
        // ye-multiple and ye = E w
        let ge_minus_e = series_moved_part(ring, &ring.omax.eis.poly.clone(), &g.a)?;
        let r = ring.add(&ring.one(), &ring.exact_div_e(&ge_minus_e)?)?;
        let r_inv = ring.invert(&r)?;
        // g(w) = g(ye)/(r E) = r^{-1} * sum_{k>=1} C(chi,k) (k-1)! E^{k-1} gamma_{k-1}(w) * w
        let mut v = ring.zero();
        for k in 1..ring.i_max {
            let c = g.chi.binom(&cfg, k)?;
            if c.is_zero() && c.prec >= cfg.m {
                continue;
            }
            let (vf, uf) = factorial_parts(&cfg, (k - 1) as u64);
            let scalar = c.mul(&cfg, &uf).mul_p_pow(&cfg, vf);
            let ek = ring.omax.eis.poly.pow(k - 1)?.scale(&scalar);
            let term = ring.gamma_with(Flavor::W, k - 1, ring.omax.from_series(&ek));
            v = ring.add(&v, &term)?;
        }
        let v = ring.mul(&r_inv, &v)?;
        let mut v_pows = Vec::with_capacity(ring.i_max as usize);
        let mut acc = ring.one();
        for _ in 0..ring.i_max {
            v_pows.push(acc.clone());
            acc = ring.mul(&acc, &v)?;
        }
        Ok(GroupAction { ring, g, r, r_inv, v_pows })
    }

    /// Apply the action to a w-flavor (or scalar-flavored) element.
    pub fn act(&self, f: &MaxRingElement) -> Result<MaxRingElement> {
        if f.flavor == Some(Flavor::Z) {
            return Err(Error::FlavorMismatch { expected: "w".into(), got: "z".into() });
        }
        let ring = self.ring;
        let mut out = ring.zero();
        for (&i, b) in &f.terms {
            let moved = self.act_omax(b)?;
            let mut t = ring.mul(&moved, &self.v_pows[i as usize])?;
            t = ring.mul(&t, &ring.gamma(Flavor::W, i))?;
            out = ring.add(&out, &t)?;
        }
        Ok(out)
    }

    /// Action on an O_max coefficient: series composition on every slot plus
    /// (E/p)^l -> r^l (E/p)^l.
    fn act_omax(&self, b: &OMaxElement) -> Result<MaxRingElement> {
        let ring = self.ring;
        let mut out = ring.zero();
        let mut rpow = ring.one();
        let mut last = 0u32;
        for (&l, s) in &b.slots {
            for _ in last..l {
                rpow = ring.mul(&rpow, &self.r)?;
            }
            last = l;
            let moved = self.act_series(s)?;
            let mut t = ring.mul(&moved, &rpow)?;
            let eop_l = ring.from_omax({
                let mut o = OMaxElement::default();
                o.set_slot(l, SeriesElement::one(ring.cfg(), ring.omax.n));
                o
            });
            t = ring.mul(&t, &eop_l)?;
            out = ring.add(&out, &t)?;
        }
        Ok(out)
    }

    /// g(f) for an A-series: f(eps^a u) = sum_j f_j u^j eps^{a j}.
    pub fn act_series(&self, f: &SeriesElement) -> Result<MaxRingElement> {
        let ring = self.ring;
        let cfg = ring.cfg();
        let mut out = ring.from_series(f);
        for (&j, fj) in &f.coeffs {
            if fj.is_zero() && fj.prec >= cfg.m {
                continue;
            }
            let aj = self.g.a.mul_u128(&cfg, j as u128);
            let moved = eps_pow_minus_one(ring, &aj)?;
            let uj = SeriesElement::monomial(cfg, ring.omax.n, j, *fj);
            out = ring.add(&out, &ring.mul_series(&moved, &uj))?;
        }
        Ok(out)
    }
}

/// eps^a - 1 = sum_{k>=1} C(a,k) k! E^k gamma_k(w), the moved part of the
/// cyclotomic unit.
pub fn eps_pow_minus_one(ring: &MaxRing, a: &TruncatedScalar) -> Result<MaxRingElement> {
    let cfg = ring.cfg();
    let mut out = ring.zero();
    for k in 1..ring.i_max {
        let c = a.binom(&cfg, k)?;
        if c.is_zero() && c.prec >= cfg.m {
            continue;
        }
        let (vf, uf) = factorial_parts(&cfg, k as u64);
        let scalar = c.mul(&cfg, &uf).mul_p_pow(&cfg, vf);
        let ek = ring.omax.eis.poly.pow(k)?.scale(&scalar);
        let term = ring.gamma_with(Flavor::W, k, ring.omax.from_series(&ek));
        out = ring.add(&out, &term)?;
    }
    Ok(out)
}

/// g(f) - f for an A-series: the part moved by the action.
fn series_moved_part(
    ring: &MaxRing,
    f: &SeriesElement,
    a: &TruncatedScalar,
) -> Result<MaxRingElement> {
    let cfg = ring.cfg();
    let mut out = ring.zero();
    for (&j, fj) in &f.coeffs {
        if fj.is_zero() && fj.prec >= cfg.m {
            continue;
        }
        let aj = a.mul_u128(&cfg, j as u128);
        let moved = eps_pow_minus_one(ring, &aj)?;
        let uj = SeriesElement::monomial(cfg, ring.omax.n, j, *fj);
        out = ring.add(&out, &ring.mul_series(&moved, &uj))?;
    }
    Ok(out)
}

/// The structured image of phi on the w-side generators: phi(gamma_n(w))
/// expands as c^{-n} times an integer combination of the gamma_k(ye), where
/// ye = eps - 1. Witnessed by integer coefficient rows.
pub struct PhiImageForm {
    /// rows[n][k] is the integer coefficient of gamma_k(ye) in
    /// c^n * phi(gamma_n(w)); row 0 is [1].
    pub rows: Vec<Vec<TruncatedScalar>>,
}

/// Compute the expansion rows up to gamma-order I and verify them against
/// the ring Frobenius: phi(gamma_n(w)) == c^{-n} sum_k rows[n][k] gamma_k(ye),
/// with gamma_k(ye) = E^k gamma_k(w).
pub fn phi_image_form(ring: &MaxRing) -> Result<PhiImageForm> {
    let cfg = ring.cfg();
    let p = cfg.p;
    // the integer vector for phi(w): c * phi(w) = sum_i coef_i gamma_i(ye)
    let mut base = vec![TruncatedScalar::zero(&cfg); ring.i_max as usize];
    for i in 1..p {
        let cpi = crate::padic::binom_u128(&cfg, p as u64, i as u64).exact_div_p(&cfg, 1)?;
        let (_, ifact) = factorial_parts(&cfg, i as u64);
        base[i as usize] = cpi.mul(&cfg, &ifact);
    }
    if p < ring.i_max {
        let (_, pm1) = factorial_parts(&cfg, (p - 1) as u64);
        base[p as usize] = pm1;
    }
    // divided powers of the integer combination: gamma_n of sum coef_i gamma_i
    // via the same convolution as gamma_vec, but over scalar vectors.
    let imax = ring.i_max as usize;
    let mut rows: Vec<Vec<TruncatedScalar>> = Vec::with_capacity(imax);
    let mut row0 = vec![TruncatedScalar::zero(&cfg); imax];
    row0[0] = TruncatedScalar::one(&cfg);
    rows.push(row0);
    // state[n] = gamma_n(partial sum), built term by term
    let mut state: Vec<Vec<TruncatedScalar>> = Vec::new();
    state.push(rows[0].clone());
    for nn in 1..imax {
        state.push(vec![TruncatedScalar::zero(&cfg); imax]);
        let _ = nn;
    }
    for (i, coef) in base.clone().into_iter().enumerate() {
        if i == 0 || coef.is_zero() {
            continue;
        }
        // gamma_k(coef * gamma_i) = coef^k M(k, i) gamma_{ki}
        let mut term: Vec<Vec<TruncatedScalar>> = Vec::with_capacity(imax);
        let mut unit_row = vec![TruncatedScalar::zero(&cfg); imax];
        unit_row[0] = TruncatedScalar::one(&cfg);
        term.push(unit_row);
        for k in 1..imax {
            let mut row = vec![TruncatedScalar::zero(&cfg); imax];
            let ki = k * i;
            if ki < imax {
                let m = crate::padic::pd_composition_factor(&cfg, k as u64, i as u64);
                row[ki] = coef.pow(&cfg, k as u32).mul(&cfg, &m);
            }
            term.push(row);
        }
        let mut next: Vec<Vec<TruncatedScalar>> = Vec::with_capacity(imax);
        for k in 0..imax {
            let mut acc = vec![TruncatedScalar::zero(&cfg); imax];
            for k1 in 0..=k {
                // gamma-basis product gamma_a(ye) gamma_b(ye) = C(a+b,a) gamma_{a+b}(ye)
                for (a_idx, va) in term[k1].iter().enumerate() {
                    if va.is_zero() {
                        continue;
                    }
                    for (b_idx, vb) in state[k - k1].iter().enumerate() {
                        if vb.is_zero() {
                            continue;
                        }
                        if a_idx + b_idx >= imax {
                            continue;
                        }
                        let bc = crate::padic::binom_u128(&cfg, (a_idx + b_idx) as u64, a_idx as u64);
                        let v = va.mul(&cfg, vb).mul(&cfg, &bc);
                        acc[a_idx + b_idx] = acc[a_idx + b_idx].add(&cfg, &v);
                    }
                }
            }
            next.push(acc);
        }
        state = next;
    }
    let form = PhiImageForm { rows: state };
    verify_phi_image_form(ring, &form)?;
    Ok(form)
}

fn verify_phi_image_form(ring: &MaxRing, form: &PhiImageForm) -> Result<()> {
    let cinv = ring.omax.invert(&ring.c_pows[1])?;
    let mut cinv_pow = ring.one();
    for (n, row) in form.rows.iter().enumerate().take(ring.i_max as usize) {
        if n > 0 {
            cinv_pow = ring.mul_omax(&cinv_pow, &cinv);
        }
        // reassemble c^{-n} sum_k row[k] E^k gamma_k(w)
        let mut acc = ring.zero();
        for (k, coef) in row.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            let ek = ring.omax.eis.poly.pow(k as u32)?.scale(coef);
            let t = ring.gamma_with(Flavor::W, k as u32, ring.omax.from_series(&ek));
            acc = ring.add(&acc, &t)?;
        }
        acc = ring.mul(&acc, &cinv_pow)?;
        let phi_gn = ring.phi(&ring.gamma(Flavor::W, n as u32))?;
        if !ring.eq(&phi_gn, &acc) {
            return Err(Error::BadInput(format!(
                "phi image expansion fails at gamma_{n}(w)"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Eisenstein;

    fn ring(p: u32, m: u32, n: u32, l: u32, i: u32, eis: &[i64]) -> MaxRing {
        let cfg = PrimeConfig::new(p, m).unwrap();
        let e = Eisenstein::from_ints(cfg, n, eis).unwrap();
        MaxRing::new(cfg, n, l, i, e).unwrap()
    }

    #[test]
    fn compose_law() {
        let cfg = PrimeConfig::new(3, 8).unwrap();
        let tau = GroupElement::tau(&cfg);
        let t2 = tau.compose(&cfg, &tau);
        assert_eq!(t2.a.residue, 2);
        assert_eq!(t2.chi.residue, 1);
        let chi = GroupElement::hk(&cfg, TruncatedScalar::from_u128(&cfg, 4)).unwrap();
        let mixed = chi.compose(&cfg, &tau);
        assert_eq!(mixed.a.residue, 4);
        assert_eq!(mixed.chi.residue, 4);
        let id = GroupElement::identity(&cfg);
        assert_eq!(tau.compose(&cfg, &id), tau);
    }

    #[test]
    fn identity_acts_trivially() {
        let r = ring(2, 10, 12, 20, 10, &[-2, 1]);
        let act = GroupAction::new(&r, GroupElement::identity(&r.cfg())).unwrap();
        let f = r
            .add(&r.gamma(Flavor::W, 2), &r.from_series(&SeriesElement::from_ints(r.cfg(), 12, &[1, 1])))
            .unwrap();
        let moved = act.act(&f).unwrap();
        assert!(r.eq(&moved, &f));
        assert!(r.eq(&act.r, &r.one()));
    }

    #[test]
    fn tau_r_unit_for_linear_eisenstein() {
        // E = u - p, tau: r = 1 + u w exactly
        let r = ring(2, 10, 12, 20, 12, &[-2, 1]);
        let act = GroupAction::new(&r, GroupElement::tau(&r.cfg())).unwrap();
        let u = SeriesElement::from_ints(r.cfg(), 12, &[0, 1]);
        let expect = r
            .add(&r.one(), &r.gamma_with(Flavor::W, 1, r.omax.from_series(&u)))
            .unwrap();
        assert!(r.eq(&act.r, &expect), "{:?}", act.r);
        // r * r^{-1} = 1
        let prod = r.mul(&act.r, &act.r_inv).unwrap();
        assert!(r.eq(&prod, &r.one()));
        // r^{-1} = sum (-1)^k u^k k! gamma_k(w): check the first coefficients
        let rinv = &act.r_inv;
        let g1 = rinv.coeff(1);
        let minus_u = u.neg();
        assert!(r.omax.eq(&g1, &r.omax.from_series(&minus_u)));
        let g2 = rinv.coeff(2);
        let u2x2 = u.mul(&u).unwrap().scale(&TruncatedScalar::from_u128(&r.cfg(), 2));
        assert!(r.omax.eq(&g2, &r.omax.from_series(&u2x2)));
    }

    #[test]
    fn hk_fixes_u_and_moves_ye() {
        let r = ring(3, 8, 12, 16, 9, &[-3, 0, 1]);
        let cfg = r.cfg();
        let chi = GroupElement::hk(&cfg, TruncatedScalar::from_u128(&cfg, 2)).unwrap();
        let act = GroupAction::new(&r, chi).unwrap();
        // fixes u
        let u = SeriesElement::from_ints(cfg, 12, &[0, 1]);
        let moved = act.act(&r.from_series(&u)).unwrap();
        assert!(r.eq(&moved, &r.from_series(&u)));
        // ye = E gamma_1(w) goes to (1+ye)^2 - 1 = 2 ye + ye^2
        let ye = r.gamma_with(Flavor::W, 1, r.omax.from_series(&r.omax.eis.poly.clone()));
        let moved = act.act(&ye).unwrap();
        let two = TruncatedScalar::from_u128(&cfg, 2);
        let expect = r.add(&r.scale(&ye, &two), &r.mul(&ye, &ye).unwrap()).unwrap();
        assert!(r.eq(&moved, &expect));
    }

    #[test]
    fn action_is_multiplicative() {
        let r = ring(2, 8, 12, 16, 10, &[-2, 1]);
        let act = GroupAction::new(&r, GroupElement::tau(&r.cfg())).unwrap();
        let f = r
            .add(&r.gamma(Flavor::W, 1), &r.from_series(&SeriesElement::from_ints(r.cfg(), 12, &[2, 1])))
            .unwrap();
        let g = r.add(&r.gamma(Flavor::W, 2), &r.e_over_p()).unwrap();
        let lhs = act.act(&r.mul(&f, &g).unwrap()).unwrap();
        let rhs = r.mul(&act.act(&f).unwrap(), &act.act(&g).unwrap()).unwrap();
        assert!(r.eq(&lhs, &rhs));
    }

    #[test]
    fn iplus_invariance_of_action() {
        let r = ring(2, 8, 12, 16, 10, &[-2, 1]);
        let cfg = r.cfg();
        for g in [
            GroupElement::tau(&cfg),
            GroupElement::hk(&cfg, TruncatedScalar::from_u128(&cfg, 3)).unwrap(),
        ] {
            let act = GroupAction::new(&r, g).unwrap();
            let f = r
                .add(
                    &r.constant(TruncatedScalar::from_u128(&cfg, 5)),
                    &r.add(&r.gamma(Flavor::W, 1), &r.from_series(&SeriesElement::from_ints(cfg, 12, &[0, 3]))).unwrap(),
                )
                .unwrap();
            let moved = act.act(&f).unwrap();
            let d = r.sub(&moved, &f).unwrap();
            let res = crate::maxring::iplus_reduce(&r, &d);
            assert!(res.is_zero(), "{res:?}");
        }
    }

    #[test]
    fn phi_image_rows_verify() {
        let r = ring(2, 8, 12, 18, 8, &[-2, 1]);
        let form = phi_image_form(&r).unwrap();
        // phi(u) is trivially in form; row 1 has the C(p,i)/p-structure
        assert_eq!(form.rows[1][1].residue, 1); // C(2,1)/2 * 1! = 1
        let r3 = ring(3, 6, 12, 16, 9, &[-3, 0, 1]);
        let form3 = phi_image_form(&r3).unwrap();
        assert_eq!(form3.rows[1][1].residue, 1); // C(3,1)/3 = 1
        assert_eq!(form3.rows[1][2].residue, 2); // C(3,2)/3 * 2! = 2
        assert_eq!(form3.rows[1][3].residue, 2); // (p-1)! = 2
    }
}
