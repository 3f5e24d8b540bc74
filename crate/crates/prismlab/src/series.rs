//! The base ring A = W(k)[[u]] truncated modulo (p^M, u^N), with the
//! delta-structure determined by phi(u) = u^p, and Eisenstein polynomials.
//!
//! Coefficients are sparse and zero-pruned; all scalars share one
//! [`PrimeConfig`]. Arithmetic is exact in the quotient by (p^M, u^N).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::padic::{binom_u128, PrimeConfig, TruncatedScalar};

/// Element of W(k)[[u]] mod (p^M, u^N).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesElement {
    pub cfg: PrimeConfig,
    /// u-adic truncation order: exponents live in 0..n.
    pub n: u32,
    pub coeffs: BTreeMap<u32, TruncatedScalar>,
}

impl SeriesElement {
    pub fn zero(cfg: PrimeConfig, n: u32) -> Self {
        SeriesElement { cfg, n, coeffs: BTreeMap::new() }
    }

    pub fn one(cfg: PrimeConfig, n: u32) -> Self {
        Self::constant(cfg, n, TruncatedScalar::one(&cfg))
    }

    pub fn constant(cfg: PrimeConfig, n: u32, c: TruncatedScalar) -> Self {
        let mut s = Self::zero(cfg, n);
        s.set(0, c);
        s
    }

    pub fn monomial(cfg: PrimeConfig, n: u32, exp: u32, c: TruncatedScalar) -> Self {
        let mut s = Self::zero(cfg, n);
        s.set(exp, c);
        s
    }

    /// Build from integer coefficients, index = u-exponent.
    pub fn from_ints(cfg: PrimeConfig, n: u32, cs: &[i64]) -> Self {
        let mut s = Self::zero(cfg, n);
        for (i, &c) in cs.iter().enumerate() {
            s.set(i as u32, TruncatedScalar::from_i64(&cfg, c));
        }
        s
    }

    pub fn set(&mut self, exp: u32, c: TruncatedScalar) {
        if exp >= self.n || c.is_zero() {
            self.coeffs.remove(&exp);
            if c.is_zero() && c.prec < self.cfg.m {
                // keep a below-precision marker so equality stays honest
                if exp < self.n {
                    self.coeffs.insert(exp, c);
                }
            }
            return;
        }
        self.coeffs.insert(exp, c);
    }

    pub fn coeff(&self, exp: u32) -> TruncatedScalar {
        *self.coeffs.get(&exp).unwrap_or(&TruncatedScalar { residue: 0, prec: self.cfg.m })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.is_zero())
    }

    /// Minimum precision across coefficients (M when empty).
    pub fn min_prec(&self) -> u32 {
        self.coeffs.values().map(|c| c.prec).min().unwrap_or(self.cfg.m)
    }

    /// Largest exponent with a nonzero coefficient.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs.iter().rev().find(|(_, c)| !c.is_zero()).map(|(e, _)| *e)
    }

    pub fn check_compat(&self, other: &Self) -> Result<()> {
        self.cfg.check_same(&other.cfg)?;
        if self.n != other.n {
            return Err(Error::ConfigMismatch(format!(
                "u-truncation {} vs {}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_compat(rhs)?;
        let mut out = self.clone();
        for (&e, c) in &rhs.coeffs {
            out.set(e, out.coeff(e).add(&self.cfg, c));
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_compat(rhs)?;
        let mut out = self.clone();
        for (&e, c) in &rhs.coeffs {
            out.set(e, out.coeff(e).sub(&self.cfg, c));
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(self.cfg, self.n);
        for (&e, c) in &self.coeffs {
            out.set(e, c.neg(&self.cfg));
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check_compat(rhs)?;
        let mut out = Self::zero(self.cfg, self.n);
        for (&e1, c1) in &self.coeffs {
            if c1.is_zero() && c1.prec == self.cfg.m {
                continue;
            }
            for (&e2, c2) in &rhs.coeffs {
                let e = e1 + e2;
                if e >= self.n {
                    continue;
                }
                out.set(e, out.coeff(e).add(&self.cfg, &c1.mul(&self.cfg, c2)));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &TruncatedScalar) -> Self {
        let mut out = Self::zero(self.cfg, self.n);
        for (&e, a) in &self.coeffs {
            out.set(e, a.mul(&self.cfg, c));
        }
        out
    }

    pub fn mul_u_pow(&self, k: u32) -> Self {
        let mut out = Self::zero(self.cfg, self.n);
        for (&e, a) in &self.coeffs {
            if e + k < self.n {
                out.set(e + k, *a);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Self::one(self.cfg, self.n);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// The Frobenius lift: u |-> u^p, scalars fixed.
    pub fn frobenius(&self) -> Self {
        let mut out = Self::zero(self.cfg, self.n);
        for (&e, c) in &self.coeffs {
            match e.checked_mul(self.cfg.p) {
                Some(pe) if pe < self.n => out.set(pe, *c),
                _ => {}
            }
        }
        out
    }

    /// delta(f) = (phi(f) - f^p)/p; always exact; output precision M-1.
    pub fn delta(&self) -> Result<Self> {
        let fp = self.pow(self.cfg.p)?;
        let num = self.frobenius().sub(&fp)?;
        num.exact_div_p(1)
    }

    pub fn exact_div_p(&self, k: u32) -> Result<Self> {
        let mut out = Self::zero(self.cfg, self.n);
        for (&e, c) in &self.coeffs {
            out.set(e, c.exact_div_p(&self.cfg, k)?);
        }
        Ok(out)
    }

    pub fn mul_p_pow(&self, k: u32) -> Self {
        let mut out = Self::zero(self.cfg, self.n);
        for (&e, a) in &self.coeffs {
            out.set(e, a.mul_p_pow(&self.cfg, k));
        }
        out
    }

    /// Inverse of a unit series (constant term a p-adic unit).
    pub fn invert(&self) -> Result<Self> {
        let c0 = self.coeff(0);
        let c0inv = c0
            .invert(&self.cfg)
            .map_err(|_| Error::NotInvertible("series constant term is not a unit".into()))?;
        // f = c0 (1 - t) with t topologically nilpotent; invert by Newton
        let mut inv = SeriesElement::constant(self.cfg, self.n, c0inv);
        loop {
            // inv <- inv + inv*(1 - f*inv)
            let err = SeriesElement::one(self.cfg, self.n).sub(&self.mul(&inv)?)?;
            if err.is_zero() {
                return Ok(inv);
            }
            inv = inv.add(&inv.mul(&err)?)?;
        }
    }

    /// Hasse derivative H_j(f): coefficient-wise C(e, j) u^{e-j}; integral.
    pub fn hasse_derivative(&self, j: u32) -> Self {
        let mut out = Self::zero(self.cfg, self.n);
        for (&e, c) in &self.coeffs {
            if e >= j {
                let b = binom_u128(&self.cfg, e as u64, j as u64);
                out.set(e - j, c.mul(&self.cfg, &b));
            }
        }
        out
    }

    /// Evaluate at u = 0.
    pub fn constant_term(&self) -> TruncatedScalar {
        self.coeff(0)
    }
}

/// An Eisenstein polynomial: monic of degree e, constant term of valuation
/// exactly 1, middle coefficients of valuation >= 1.
///
/// The integer coefficients are kept: E is exact input data, so derived
/// quantities like delta(E) and (E - u^e)/p can be computed at full
/// precision instead of through precision-losing scalar division.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Eisenstein {
    pub e: u32,
    pub poly: SeriesElement,
    ints: Vec<i64>,
}

impl Eisenstein {
    pub fn from_ints(cfg: PrimeConfig, n: u32, cs: &[i64]) -> Result<Self> {
        let p = cfg.p as i64;
        let e = match cs.iter().rposition(|&c| c != 0) {
            Some(d) if d >= 1 => d as u32,
            _ => return Err(Error::NotEisenstein("degree must be >= 1".into())),
        };
        if cs[e as usize] != 1 {
            return Err(Error::NotEisenstein(format!(
                "not monic: leading coefficient {} at degree {e}",
                cs[e as usize]
            )));
        }
        if cs[0] % p != 0 || (cs[0] / p) % p == 0 {
            return Err(Error::NotEisenstein(format!(
                "constant term {} must have p-valuation exactly 1",
                cs[0]
            )));
        }
        for (i, &c) in cs.iter().enumerate().take(e as usize).skip(1) {
            if c % p != 0 {
                return Err(Error::NotEisenstein(format!(
                    "coefficient {c} of u^{i} has p-valuation 0 (need >= 1)"
                )));
            }
        }
        if e >= n {
            return Err(Error::NotEisenstein(format!(
                "degree {e} exceeds the u-adic truncation {n}"
            )));
        }
        let ints: Vec<i64> = cs[..=(e as usize)].to_vec();
        Ok(Eisenstein { e, poly: SeriesElement::from_ints(cfg, n, &ints), ints })
    }

    /// Parse strings like "u^2-3", "u - 2", "u^2+3*u+3".
    pub fn parse(cfg: PrimeConfig, n: u32, input: &str) -> Result<Self> {
        let ints = parse_poly_ints(input)?;
        Self::from_ints(cfg, n, &ints)
    }

    pub fn cfg(&self) -> PrimeConfig {
        self.poly.cfg
    }

    pub fn ints(&self) -> &[i64] {
        &self.ints
    }

    /// E(0)/p, a p-adic unit, exact.
    pub fn unit_const(&self) -> TruncatedScalar {
        TruncatedScalar::from_i64(&self.poly.cfg, self.ints[0] / self.poly.cfg.p as i64)
    }

    /// (E - u^e)/p at full precision.
    pub fn g_exact(&self) -> SeriesElement {
        let cfg = self.poly.cfg;
        let p = cfg.p as i64;
        let mut g: Vec<i64> = self.ints.clone();
        g[self.e as usize] -= 1;
        for c in g.iter_mut() {
            *c /= p;
        }
        SeriesElement::from_ints(cfg, self.poly.n, &g)
    }

    /// delta(E) = (E(u^p) - E(u)^p)/p at full precision, via exact integer
    /// polynomial arithmetic.
    pub fn delta_exact(&self) -> SeriesElement {
        let cfg = self.poly.cfg;
        let p = cfg.p;
        let ints128: Vec<i128> = self.ints.iter().map(|&c| c as i128).collect();
        let ep = int_poly_pow(&ints128, p);
        let mut phie = vec![0i128; (self.e * p + 1) as usize];
        for (i, &c) in ints128.iter().enumerate() {
            phie[i * p as usize] = c;
        }
        let mut d = vec![0i128; phie.len().max(ep.len())];
        for (i, &c) in phie.iter().enumerate() {
            d[i] += c;
        }
        for (i, &c) in ep.iter().enumerate() {
            d[i] -= c;
        }
        let mut out = SeriesElement::zero(cfg, self.poly.n);
        for (i, &c) in d.iter().enumerate() {
            debug_assert_eq!(c % p as i128, 0);
            let q = c / p as i128;
            if (i as u32) < self.poly.n {
                out.set(i as u32, from_i128(&cfg, q));
            }
        }
        out
    }
}

fn from_i128(cfg: &PrimeConfig, v: i128) -> TruncatedScalar {
    let m = cfg.modulus() as i128;
    TruncatedScalar::from_u128(cfg, v.rem_euclid(m) as u128)
}

fn int_poly_pow(f: &[i128], e: u32) -> Vec<i128> {
    let mut acc = vec![1i128];
    for _ in 0..e {
        let mut out = vec![0i128; acc.len() + f.len() - 1];
        for (i, &a) in acc.iter().enumerate() {
            for (j, &b) in f.iter().enumerate() {
                out[i + j] = out[i + j].checked_add(a.checked_mul(b).expect("overflow")).expect("overflow");
            }
        }
        acc = out;
    }
    acc
}

/// Exact division with remainder by a monic polynomial of degree e:
/// f = q * d + r with deg r < e. No precision is lost.
pub fn divrem_monic(f: &SeriesElement, d: &SeriesElement, e: u32) -> (SeriesElement, SeriesElement) {
    let cfg = f.cfg;
    let mut r = f.clone();
    let mut q = SeriesElement::zero(cfg, f.n);
    let deg = match r.degree() {
        Some(dg) => dg,
        None => return (q, r),
    };
    let mut k = deg;
    loop {
        if k < e {
            break;
        }
        let c = r.coeff(k);
        if !(c.is_zero() && c.prec == cfg.m) {
            q.set(k - e, c.add(&cfg, &q.coeff(k - e)));
            // r -= c * u^{k-e} * d
            for (&j, dj) in &d.coeffs {
                let t = k - e + j;
                if t < r.n {
                    r.set(t, r.coeff(t).sub(&cfg, &c.mul(&cfg, dj)));
                }
            }
        }
        if k == 0 {
            break;
        }
        k -= 1;
    }
    (q, r)
}

/// E-adic digit expansion to depth `depth`: f = sum_{l<depth} r_l E^l + E^depth * q,
/// with deg r_l < e. Exact: purely polynomial long division.
pub fn e_adic_digits(
    f: &SeriesElement,
    eis: &Eisenstein,
    depth: u32,
) -> (Vec<SeriesElement>, SeriesElement) {
    let mut digits = Vec::with_capacity(depth as usize);
    let mut cur = f.clone();
    for _ in 0..depth {
        let (q, r) = divrem_monic(&cur, &eis.poly, eis.e);
        digits.push(r);
        cur = q;
        if cur.is_zero() && cur.coeffs.is_empty() {
            // fill remaining digits with zero
            while digits.len() < depth as usize {
                digits.push(SeriesElement::zero(f.cfg, f.n));
            }
            return (digits, cur);
        }
    }
    (digits, cur)
}

/// Parse "u^2-3"-style polynomial strings into integer coefficients.
pub fn parse_poly_ints(input: &str) -> Result<Vec<i64>> {
    let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::BadInput("empty polynomial".into()));
    }
    let mut out: Vec<i64> = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0usize;
    let mut sign: i64 = 1;
    if bytes[0] == b'+' {
        i = 1;
    } else if bytes[0] == b'-' {
        sign = -1;
        i = 1;
    }
    while i < bytes.len() {
        // parse one term: [coeff][*][u[^exp]]
        let start = i;
        let mut coeff: Option<i64> = None;
        let mut num_end = i;
        while num_end < bytes.len() && bytes[num_end].is_ascii_digit() {
            num_end += 1;
        }
        if num_end > i {
            let v: i64 = s[i..num_end]
                .parse()
                .map_err(|_| Error::BadInput(format!("bad number at byte {i} in {input:?}")))?;
            coeff = Some(v);
            i = num_end;
        }
        if i < bytes.len() && bytes[i] == b'*' {
            i += 1;
        }
        let mut exp = 0u32;
        if i < bytes.len() && (bytes[i] == b'u' || bytes[i] == b'x') {
            i += 1;
            exp = 1;
            if i < bytes.len() && bytes[i] == b'^' {
                i += 1;
                let e_start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == e_start {
                    return Err(Error::BadInput(format!(
                        "missing exponent at byte {e_start} in {input:?}"
                    )));
                }
                exp = s[e_start..i]
                    .parse()
                    .map_err(|_| Error::BadInput(format!("bad exponent in {input:?}")))?;
                if exp > 4096 {
                    return Err(Error::BadInput(format!("exponent {exp} too large")));
                }
            }
        }
        if i == start && coeff.is_none() {
            return Err(Error::BadInput(format!(
                "unexpected character {:?} at byte {i} in {input:?}",
                bytes[i] as char
            )));
        }
        let c = coeff.unwrap_or(1) * sign;
        if out.len() <= exp as usize {
            out.resize(exp as usize + 1, 0);
        }
        out[exp as usize] = out[exp as usize]
            .checked_add(c)
            .ok_or_else(|| Error::BadInput("coefficient overflow".into()))?;
        // next sign
        if i < bytes.len() {
            match bytes[i] {
                b'+' => {
                    sign = 1;
                    i += 1;
                }
                b'-' => {
                    sign = -1;
                    i += 1;
                }
                _ => {
                    return Err(Error::BadInput(format!(
                        "expected + or - at byte {i} in {input:?}"
                    )))
                }
            }
            if i == bytes.len() {
                return Err(Error::BadInput(format!("trailing sign in {input:?}")));
            }
        }
    }
    Ok(out)
}

#[allow(dead_code)]
fn parse_poly(cfg: PrimeConfig, n: u32, input: &str) -> Result<SeriesElement> {
    Ok(SeriesElement::from_ints(cfg, n, &parse_poly_ints(input)?))
}

/// Whether delta(E) is a unit, i.e. E generates the prism ideal.
pub fn is_distinguished(f: &SeriesElement) -> Result<bool> {
    let d = f.delta()?;
    Ok(d.constant_term().is_unit(&f.cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PrimeConfig;

    fn cfg(p: u32, m: u32) -> PrimeConfig {
        PrimeConfig::new(p, m).unwrap()
    }

    #[test]
    fn mul_examples() {
        let c = cfg(2, 8);
        let u = SeriesElement::from_ints(c, 12, &[0, 1]);
        let u2 = u.mul(&u).unwrap();
        assert_eq!(u2, SeriesElement::from_ints(c, 12, &[0, 0, 1]));

        let a = SeriesElement::from_ints(c, 12, &[1, 1]);
        let b = SeriesElement::from_ints(c, 12, &[1, -1]);
        assert_eq!(a.mul(&b).unwrap(), SeriesElement::from_ints(c, 12, &[1, 0, -1]));

        // E*E for E = u-2: oracle = integer polynomial product
        let e = SeriesElement::from_ints(c, 12, &[-2, 1]);
        assert_eq!(e.mul(&e).unwrap(), SeriesElement::from_ints(c, 12, &[4, -4, 1]));
    }

    #[test]
    fn frobenius_examples() {
        let c = cfg(3, 6);
        let u = SeriesElement::from_ints(c, 10, &[0, 1]);
        assert_eq!(u.frobenius(), SeriesElement::from_ints(c, 10, &[0, 0, 0, 1]));
        let k = SeriesElement::from_ints(c, 10, &[7]);
        assert_eq!(k.frobenius(), k);
        let c2 = cfg(2, 6);
        let e = SeriesElement::from_ints(c2, 10, &[-2, 1]);
        assert_eq!(e.frobenius(), SeriesElement::from_ints(c2, 10, &[-2, 0, 1]));
    }

    #[test]
    fn delta_examples() {
        // delta(u) = 0
        let c = cfg(3, 6);
        let u = SeriesElement::from_ints(c, 10, &[0, 1]);
        assert!(u.delta().unwrap().is_zero());

        // delta(p) = 1 - p^{p-1}
        let p = SeriesElement::from_ints(c, 10, &[3]);
        let d = p.delta().unwrap();
        assert_eq!(d.coeff(0).residue, TruncatedScalar::from_i64(&c, 1 - 9).residue % c.pow_p(d.coeff(0).prec));

        // delta(u-2) at p=2: oracle = ((u^2-2)-(u-2)^2)/2 = 2u-3
        let c2 = cfg(2, 8);
        let e = SeriesElement::from_ints(c2, 10, &[-2, 1]);
        let d = e.delta().unwrap();
        let oracle = SeriesElement::from_ints(c2, 10, &[-3, 2]);
        assert_eq!(d.coeff(0).residue, oracle.coeff(0).residue % c2.pow_p(d.coeff(0).prec));
        assert_eq!(d.coeff(1).residue, oracle.coeff(1).residue % c2.pow_p(d.coeff(1).prec));
    }

    #[test]
    fn distinguished_examples() {
        let c2 = cfg(2, 8);
        let e = SeriesElement::from_ints(c2, 10, &[-2, 1]);
        assert!(is_distinguished(&e).unwrap());
        let u = SeriesElement::from_ints(c2, 10, &[0, 1]);
        assert!(!is_distinguished(&u).unwrap());
        // E = u^2-3 at p=3: delta(E) constant term is 8, a unit
        let c3 = cfg(3, 8);
        let e = SeriesElement::from_ints(c3, 12, &[-3, 0, 1]);
        assert!(is_distinguished(&e).unwrap());
    }

    #[test]
    fn eisenstein_validation() {
        let c = cfg(2, 8);
        assert!(Eisenstein::from_ints(c, 12, &[-2, 1]).is_ok());
        assert!(Eisenstein::from_ints(c, 12, &[-3, 1]).is_err()); // v(const) = 0
        assert!(Eisenstein::from_ints(c, 12, &[-4, 1]).is_err()); // v(const) = 2
        assert!(Eisenstein::from_ints(c, 12, &[-2, 2]).is_err()); // not monic
        let c3 = cfg(3, 8);
        assert!(Eisenstein::from_ints(c3, 12, &[3, 1, 1]).is_err()); // middle coeff unit
        assert!(Eisenstein::from_ints(c3, 12, &[3, 3, 1]).is_ok());
    }

    #[test]
    fn eisenstein_parser() {
        let c = cfg(3, 8);
        let e = Eisenstein::parse(c, 12, "u^2-3").unwrap();
        assert_eq!(e.e, 2);
        assert_eq!(e.poly, SeriesElement::from_ints(c, 12, &[-3, 0, 1]));
        let e2 = Eisenstein::parse(c, 12, "u^2 + 3*u + 3").unwrap();
        assert_eq!(e2.poly, SeriesElement::from_ints(c, 12, &[3, 3, 1]));
        assert!(Eisenstein::parse(c, 12, "u^^2").is_err());
        assert!(Eisenstein::parse(c, 12, "").is_err());
        assert!(Eisenstein::parse(c, 12, "u+").is_err());
    }

    #[test]
    fn divrem_by_eisenstein() {
        let c = cfg(2, 8);
        let e = Eisenstein::from_ints(c, 16, &[-2, 1]).unwrap();
        // u^3 = (u^2 + 2u + 4)(u-2) + 8
        let f = SeriesElement::from_ints(c, 16, &[0, 0, 0, 1]);
        let (q, r) = divrem_monic(&f, &e.poly, e.e);
        assert_eq!(q, SeriesElement::from_ints(c, 16, &[4, 2, 1]));
        assert_eq!(r, SeriesElement::from_ints(c, 16, &[8]));
        // reassemble
        let back = q.mul(&e.poly).unwrap().add(&r).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn e_adic_digit_expansion() {
        let c = cfg(2, 10);
        let e = Eisenstein::from_ints(c, 16, &[-2, 1]).unwrap();
        let f = SeriesElement::from_ints(c, 16, &[1, 0, 5]);
        let (digits, head) = e_adic_digits(&f, &e, 4);
        // reassemble: sum digits[l] E^l + E^4 head
        let mut acc = SeriesElement::zero(c, 16);
        let mut epow = SeriesElement::one(c, 16);
        for d in &digits {
            acc = acc.add(&d.mul(&epow).unwrap()).unwrap();
            epow = epow.mul(&e.poly).unwrap();
        }
        acc = acc.add(&head.mul(&epow).unwrap()).unwrap();
        assert_eq!(acc, f);
        for d in &digits {
            assert!(d.degree().unwrap_or(0) < e.e);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_series(p: u32, m: u32, n: u32) -> impl Strategy<Value = SeriesElement> {
            let c = cfg(p, m);
            proptest::collection::vec(0i64..64, 0..(n as usize).min(8))
                .prop_map(move |v| SeriesElement::from_ints(c, n, &v))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn frobenius_is_p_power_mod_p(f in arb_series(3, 6, 10)) {
                // phi(f) = f^p mod p
                let lhs = f.frobenius();
                let rhs = f.pow(3).unwrap();
                let diff = lhs.sub(&rhs).unwrap();
                prop_assert!(diff.exact_div_p(1).is_ok());
            }

            #[test]
            fn delta_product_rule(f in arb_series(2, 8, 8), g in arb_series(2, 8, 8)) {
                // delta(fg) = f^p delta(g) + g^p delta(f) + p delta(f) delta(g)
                let c = cfg(2, 8);
                let lhs = f.mul(&g).unwrap().delta().unwrap();
                let fp = f.pow(2).unwrap();
                let gp = g.pow(2).unwrap();
                let df = f.delta().unwrap();
                let dg = g.delta().unwrap();
                let rhs = fp.mul(&dg).unwrap()
                    .add(&gp.mul(&df).unwrap()).unwrap()
                    .add(&df.mul(&dg).unwrap().scale(&TruncatedScalar::from_u128(&c, 2))).unwrap();
                let d = lhs.sub(&rhs).unwrap();
                prop_assert!(d.is_zero(), "residual {:?}", d);
            }

            #[test]
            fn divrem_reassembles(f in arb_series(3, 8, 12)) {
                let c = cfg(3, 8);
                let e = Eisenstein::from_ints(c, 12, &[-3, 0, 1]).unwrap();
                let (q, r) = divrem_monic(&f, &e.poly, e.e);
                let back = q.mul(&e.poly).unwrap().add(&r).unwrap();
                prop_assert_eq!(back, f);
            }
        }
    }
}
