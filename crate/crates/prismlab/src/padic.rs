//! Truncated p-adic integer arithmetic with explicit precision bookkeeping.
//!
//! Every scalar is an integer known modulo `p^prec` for an effective
//! precision `prec <= M`. Operations propagate precision pessimistically:
//! ring operations take the minimum of the operand precisions, division by
//! `p^k` subtracts `k`. Divisions by `p` are the one place this tower of
//! rings loses information, and they are exactly the operations the
//! divided-power and delta-structure formulas keep performing, so the loss
//! is tracked per scalar rather than globally.

use crate::error::{Error, Result};

/// The prime and the global p-adic working precision.
///
/// Residues are stored in a `u128`; `p^M` must fit in 63 bits so products
/// cannot overflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeConfig {
    pub p: u32,
    pub m: u32,
    /// Cached modulus `p^m`.
    pm: u128,
}

impl PrimeConfig {
    pub fn new(p: u32, m: u32) -> Result<Self> {
        if p < 2 || !is_prime(p) {
            return Err(Error::BadInput(format!("p = {p} is not prime")));
        }
        if m == 0 {
            return Err(Error::BadInput("precision M must be >= 1".into()));
        }
        let mut pm: u128 = 1;
        for _ in 0..m {
            pm = pm
                .checked_mul(p as u128)
                .filter(|v| *v < (1u128 << 63))
                .ok_or_else(|| Error::BadInput(format!("p^M = {p}^{m} exceeds 63 bits")))?;
        }
        Ok(PrimeConfig { p, m, pm })
    }

    pub fn modulus(&self) -> u128 {
        self.pm
    }

    /// `p^k` for `k <= m`.
    pub fn pow_p(&self, k: u32) -> u128 {
        debug_assert!(k <= self.m);
        (self.p as u128).pow(k)
    }

    pub fn check_same(&self, other: &PrimeConfig) -> Result<()> {
        if self.p != other.p || self.m != other.m {
            return Err(Error::ConfigMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.p, self.m, other.p, other.m
            )));
        }
        Ok(())
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A p-adic integer known modulo `p^prec`.
///
/// Invariants: `residue < p^prec`; `prec = 0` means "no information" and
/// the residue is then 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TruncatedScalar {
    pub residue: u128,
    pub prec: u32,
}

impl TruncatedScalar {
    pub fn zero(cfg: &PrimeConfig) -> Self {
        TruncatedScalar { residue: 0, prec: cfg.m }
    }

    pub fn one(cfg: &PrimeConfig) -> Self {
        TruncatedScalar { residue: 1 % cfg.pm, prec: cfg.m }
    }

    /// Reduce an unsigned integer at full precision.
    pub fn from_u128(cfg: &PrimeConfig, v: u128) -> Self {
        TruncatedScalar { residue: v % cfg.pm, prec: cfg.m }
    }

    /// Reduce a signed integer at full precision; negatives wrap mod `p^M`.
    pub fn from_i64(cfg: &PrimeConfig, v: i64) -> Self {
        if v >= 0 {
            Self::from_u128(cfg, v as u128)
        } else {
            let r = (v.unsigned_abs() as u128) % cfg.pm;
            TruncatedScalar { residue: (cfg.pm - r) % cfg.pm, prec: cfg.m }
        }
    }

    fn normalized(cfg: &PrimeConfig, residue: u128, prec: u32) -> Self {
        let prec = prec.min(cfg.m);
        if prec == 0 {
            return TruncatedScalar { residue: 0, prec: 0 };
        }
        TruncatedScalar { residue: residue % cfg.pow_p(prec), prec }
    }

    pub fn is_zero(&self) -> bool {
        self.residue == 0
    }

    /// p-adic valuation of the residue, capped at the precision.
    pub fn valuation(&self, cfg: &PrimeConfig) -> u32 {
        if self.residue == 0 {
            return self.prec;
        }
        let mut v = 0;
        let mut r = self.residue;
        while r.is_multiple_of(cfg.p as u128) {
            r /= cfg.p as u128;
            v += 1;
        }
        v
    }

    /// True when the scalar is a unit with confidence (valuation 0, some precision left).
    pub fn is_unit(&self, cfg: &PrimeConfig) -> bool {
        self.prec > 0 && !self.residue.is_multiple_of(cfg.p as u128)
    }

    pub fn add(&self, cfg: &PrimeConfig, rhs: &Self) -> Self {
        let prec = self.prec.min(rhs.prec);
        Self::normalized(cfg, self.residue + rhs.residue, prec)
    }

    pub fn sub(&self, cfg: &PrimeConfig, rhs: &Self) -> Self {
        let prec = self.prec.min(rhs.prec);
        Self::normalized(cfg, self.residue + cfg.pm - (rhs.residue % cfg.pm), prec)
    }

    pub fn neg(&self, cfg: &PrimeConfig) -> Self {
        Self::normalized(cfg, cfg.pm - (self.residue % cfg.pm), self.prec)
    }

    pub fn mul(&self, cfg: &PrimeConfig, rhs: &Self) -> Self {
        // Annihilator convention: exact zero keeps the other operand's precision.
        let prec = if self.residue == 0 && self.prec == cfg.m {
            rhs.prec.min(cfg.m)
        } else if rhs.residue == 0 && rhs.prec == cfg.m {
            self.prec.min(cfg.m)
        } else {
            self.prec.min(rhs.prec)
        };
        Self::normalized(cfg, self.residue * rhs.residue, prec)
    }

    pub fn mul_u128(&self, cfg: &PrimeConfig, k: u128) -> Self {
        Self::normalized(cfg, self.residue * (k % cfg.pm), self.prec)
    }

    /// Multiply by p^k: a value known mod p^prec becomes known mod p^{prec+k}.
    pub fn mul_p_pow(&self, cfg: &PrimeConfig, k: u32) -> Self {
        if self.prec == 0 && k >= cfg.m {
            return TruncatedScalar { residue: 0, prec: cfg.m };
        }
        let prec = (self.prec + k).min(cfg.m);
        Self::normalized(cfg, self.residue * cfg.pow_p(k.min(cfg.m)), prec)
    }

    pub fn pow(&self, cfg: &PrimeConfig, mut e: u32) -> Self {
        let mut base = *self;
        let mut acc = TruncatedScalar { residue: 1, prec: self.prec };
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(cfg, &base);
            }
            base = base.mul(cfg, &base);
            e >>= 1;
        }
        acc
    }

    /// Inverse of a p-adic unit at the scalar's own precision.
    pub fn invert(&self, cfg: &PrimeConfig) -> Result<Self> {
        if self.prec == 0 || self.residue.is_multiple_of(cfg.p as u128) {
            return Err(Error::NotInvertible(format!(
                "v_p({}) > 0 at precision {}",
                self.residue, self.prec
            )));
        }
        let modulus = cfg.pow_p(self.prec);
        let inv = mod_inverse(self.residue, modulus);
        Ok(TruncatedScalar { residue: inv, prec: self.prec })
    }

    /// Exact division by `p^k`. The digits below `k` must vanish at the
    /// current precision; the quotient has precision `prec - k`.
    pub fn exact_div_p(&self, cfg: &PrimeConfig, k: u32) -> Result<Self> {
        if k == 0 {
            return Ok(*self);
        }
        if self.prec == 0 {
            return Ok(TruncatedScalar { residue: 0, prec: 0 });
        }
        let check = cfg.pow_p(k.min(self.prec));
        if !self.residue.is_multiple_of(check) {
            return Err(Error::InexactDivision(format!(
                "{} not divisible by {}^{} at precision {}",
                self.residue, cfg.p, k, self.prec
            )));
        }
        if k >= self.prec {
            return Ok(TruncatedScalar { residue: 0, prec: 0 });
        }
        Ok(TruncatedScalar { residue: self.residue / cfg.pow_p(k), prec: self.prec - k })
    }

    /// Binomial coefficient C(a, k) of a p-adic integer: a(a-1)...(a-k+1)/k!.
    ///
    /// The result is p-integral; precision drops by v_p(k!).
    pub fn binom(&self, cfg: &PrimeConfig, k: u32) -> Result<Self> {
        let mut num = TruncatedScalar { residue: 1, prec: self.prec };
        let mut term = *self;
        let one = TruncatedScalar { residue: 1, prec: cfg.m };
        for _ in 0..k {
            num = num.mul(cfg, &term);
            term = term.sub(cfg, &one);
        }
        // k! = p^vf * (unit uf)
        let mut vf = 0u32;
        let mut uf = TruncatedScalar { residue: 1, prec: cfg.m };
        for i in 1..=(k as u128) {
            let mut f = i;
            while f % (cfg.p as u128) == 0 {
                f /= cfg.p as u128;
                vf += 1;
            }
            uf = uf.mul_u128(cfg, f);
        }
        let num = num.exact_div_p(cfg, vf)?;
        Ok(num.mul(cfg, &uf.invert(cfg)?))
    }
}

fn mod_inverse(a: u128, modulus: u128) -> u128 {
    // extended Euclid on i128; modulus < 2^63 so this is safe
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (modulus as i128, (a % modulus) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "inverse of non-unit");
    (t.rem_euclid(modulus as i128)) as u128
}

/// `n!` as (p-adic valuation, unit part mod p^M); used by divided-power combinatorics.
pub fn factorial_parts(cfg: &PrimeConfig, n: u64) -> (u32, TruncatedScalar) {
    let mut v = 0u32;
    let mut unit = TruncatedScalar::one(cfg);
    for i in 1..=(n as u128) {
        let mut f = i;
        while f % (cfg.p as u128) == 0 {
            f /= cfg.p as u128;
            v += 1;
        }
        unit = unit.mul_u128(cfg, f);
    }
    (v, unit)
}

/// Integer binomial C(n, k) reduced mod p^M, computed exactly in u128.
pub fn binom_u128(cfg: &PrimeConfig, n: u64, k: u64) -> TruncatedScalar {
    if k > n {
        return TruncatedScalar::zero(cfg);
    }
    let k = k.min(n - k);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num = num.checked_mul((n - i) as u128).expect("binomial overflow");
        den = den.checked_mul((i + 1) as u128).expect("binomial overflow");
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    debug_assert_eq!(den, 1);
    TruncatedScalar::from_u128(cfg, num)
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// (nk)! / (n! * (k!)^n): the integer relating gamma_n(gamma_k(x)) to gamma_nk(x).
pub fn pd_composition_factor(cfg: &PrimeConfig, n: u64, k: u64) -> TruncatedScalar {
    let (v_nk, u_nk) = factorial_parts(cfg, n * k);
    let (v_n, u_n) = factorial_parts(cfg, n);
    let (v_k, u_k) = factorial_parts(cfg, k);
    let v = v_nk
        .checked_sub(v_n + (n as u32) * v_k)
        .expect("pd composition factor is integral");
    let unit = u_nk
        .mul(cfg, &u_n.invert(cfg).unwrap())
        .mul(cfg, &u_k.invert(cfg).unwrap().pow(cfg, n as u32));
    unit.mul_p_pow(cfg, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(p: u32, m: u32) -> PrimeConfig {
        PrimeConfig::new(p, m).unwrap()
    }

    #[test]
    fn add_simple() {
        let c = cfg(2, 8);
        let a = TruncatedScalar::from_u128(&c, 3);
        let b = TruncatedScalar::from_u128(&c, 5);
        assert_eq!(a.add(&c, &b), TruncatedScalar::from_u128(&c, 8));
    }

    #[test]
    fn mul_by_zero_keeps_precision() {
        let c = cfg(3, 6);
        let a = TruncatedScalar { residue: 5, prec: 4 };
        let z = TruncatedScalar::zero(&c);
        let r = a.mul(&c, &z);
        assert!(r.is_zero());
        assert_eq!(r.prec, 4);
    }

    #[test]
    fn unit_times_unit_near_top() {
        // (1 + 2^7)(1 - 2^7) = 1 - 2^14 = 1 mod 2^8; oracle: integer multiplication
        let c = cfg(2, 8);
        let a = TruncatedScalar::from_u128(&c, 1 + 128);
        let b = TruncatedScalar::from_i64(&c, 1 - 128);
        let oracle = ((1i64 + 128) * (1 - 128)).rem_euclid(256) as u128;
        assert_eq!(a.mul(&c, &b).residue, oracle);
        assert_eq!(a.mul(&c, &b).residue, 1);
    }

    #[test]
    fn invert_identity_and_three() {
        let c = cfg(2, 4);
        let one = TruncatedScalar::one(&c);
        assert_eq!(one.invert(&c).unwrap(), one);
        // 3 * 11 = 33 = 1 mod 16; oracle: extended Euclid by hand
        let three = TruncatedScalar::from_u128(&c, 3);
        assert_eq!(three.invert(&c).unwrap().residue, 11);
    }

    #[test]
    fn invert_non_unit_fails() {
        let c = cfg(2, 4);
        let two = TruncatedScalar::from_u128(&c, 2);
        assert!(matches!(two.invert(&c), Err(Error::NotInvertible(_))));
    }

    #[test]
    fn exact_div_p_cases() {
        let c = cfg(2, 6);
        let six = TruncatedScalar::from_u128(&c, 6);
        let r = six.exact_div_p(&c, 1).unwrap();
        assert_eq!((r.residue, r.prec), (3, 5));
        let three = TruncatedScalar::from_u128(&c, 3);
        assert!(three.exact_div_p(&c, 1).is_err());

        let c5 = cfg(5, 6);
        let p2 = TruncatedScalar::from_u128(&c5, 25);
        let r = p2.exact_div_p(&c5, 2).unwrap();
        assert_eq!((r.residue, r.prec), (1, 4));
    }

    #[test]
    fn binom_examples() {
        let c = cfg(3, 8);
        // C(1, 2) = 0: the falling factorial hits zero
        let one = TruncatedScalar::one(&c);
        assert!(one.binom(&c, 2).unwrap().is_zero());
        // C(-1, 2) = (-1)(-2)/2 = 1
        let m1 = TruncatedScalar::from_i64(&c, -1);
        assert_eq!(m1.binom(&c, 2).unwrap().residue, 1);
        // C(3, 2)/3 = 1; oracle: integer binomial
        let three = TruncatedScalar::from_u128(&c, 3);
        let b = three.binom(&c, 2).unwrap();
        assert_eq!(b.residue, binom_u128(&c, 3, 2).residue % c.pow_p(b.prec));
        assert_eq!(b.exact_div_p(&c, 1).unwrap().residue, 1);
    }

    #[test]
    fn pd_composition_factor_small() {
        let c = cfg(2, 10);
        // (2*2)!/(2!*(2!)^2) = 24/8 = 3
        assert_eq!(pd_composition_factor(&c, 2, 2).residue, 3);
        // gamma_2(gamma_1(x)) = gamma_2(x): factor 1
        assert_eq!(pd_composition_factor(&c, 2, 1).residue, 1);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_scalar(p: u32, m: u32) -> impl Strategy<Value = TruncatedScalar> {
            let c = cfg(p, m);
            (0..c.modulus(), 1..=m).prop_map(move |(r, prec)| TruncatedScalar {
                residue: r % c.pow_p(prec),
                prec,
            })
        }

        proptest! {
            #[test]
            fn ring_axioms_p2(a in arb_scalar(2, 10), b in arb_scalar(2, 10), c in arb_scalar(2, 10)) {
                let k = cfg(2, 10);
                ring_axioms(&k, a, b, c);
            }

            #[test]
            fn ring_axioms_p3(a in arb_scalar(3, 8), b in arb_scalar(3, 8), c in arb_scalar(3, 8)) {
                let k = cfg(3, 8);
                ring_axioms(&k, a, b, c);
            }

            #[test]
            fn ring_axioms_p5(a in arb_scalar(5, 8), b in arb_scalar(5, 8), c in arb_scalar(5, 8)) {
                let k = cfg(5, 8);
                ring_axioms(&k, a, b, c);
            }

            #[test]
            fn invert_two_sided(a in arb_scalar(3, 8)) {
                let k = cfg(3, 8);
                if a.is_unit(&k) {
                    let inv = a.invert(&k).unwrap();
                    let lhs = a.mul(&k, &inv);
                    prop_assert_eq!(lhs.residue, 1 % k.pow_p(lhs.prec));
                    let rhs = inv.mul(&k, &a);
                    prop_assert_eq!(rhs.residue, 1 % k.pow_p(rhs.prec));
                }
            }

            #[test]
            fn div_p_undoes_mul_p(a in arb_scalar(2, 12), k in 1u32..4) {
                let c = cfg(2, 12);
                let scaled = a.mul_u128(&c, c.pow_p(k));
                let back = scaled.exact_div_p(&c, k).unwrap();
                prop_assert_eq!(back.prec, a.prec.saturating_sub(k));
                prop_assert_eq!(back.residue % c.pow_p(back.prec), a.residue % c.pow_p(back.prec));
            }

            #[test]
            fn pascal_rule(a in arb_scalar(3, 9), k in 1u32..6) {
                // C(a, k) = C(a-1, k) + C(a-1, k-1) at precision M - v_p(k!)
                let c = cfg(3, 9);
                let one = TruncatedScalar::one(&c);
                let am1 = a.sub(&c, &one);
                let lhs = a.binom(&c, k).unwrap();
                let rhs = am1.binom(&c, k).unwrap().add(&c, &am1.binom(&c, k - 1).unwrap());
                let prec = lhs.prec.min(rhs.prec);
                prop_assert_eq!(lhs.residue % c.pow_p(prec), rhs.residue % c.pow_p(prec));
            }
        }

        fn ring_axioms(k: &PrimeConfig, a: TruncatedScalar, b: TruncatedScalar, c: TruncatedScalar) {
            let prec = a.prec.min(b.prec).min(c.prec);
            let md = k.pow_p(prec);
            // associativity
            assert_eq!(
                a.add(k, &b).add(k, &c).residue % md,
                a.add(k, &b.add(k, &c)).residue % md
            );
            assert_eq!(
                a.mul(k, &b).mul(k, &c).residue % md,
                a.mul(k, &b.mul(k, &c)).residue % md
            );
            // commutativity
            assert_eq!(a.mul(k, &b).residue, b.mul(k, &a).residue);
            // distributivity
            assert_eq!(
                a.mul(k, &b.add(k, &c)).residue % md,
                a.mul(k, &b).add(k, &a.mul(k, &c)).residue % md
            );
        }
    }
}
