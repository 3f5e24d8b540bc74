//! Suites for the base ring: the delta-ring axioms and the distinguished
//! unit c = phi(E)/p of O_max, with the negative control showing the
//! extended Frobenius is not a delta-structure there.

use crate::error::Result;
use crate::omax::OMaxRing;
use crate::padic::{binom_u128, PrimeConfig, TruncatedScalar};
use crate::report::{Report, ReportBuilder, SuiteConfig};
use crate::rng::Rng;
use crate::series::SeriesElement;

use super::{random_series, windows};

/// Randomized delta-ring identities on A:
/// delta(fg) = f^p delta(g) + g^p delta(f) + p delta(f) delta(g) and
/// delta(f+g) = delta(f) + delta(g) - sum_{0<i<p} (C(p,i)/p) f^i g^{p-i},
/// both exact at precision M-1, plus the Frobenius-lift property.
pub fn delta_axioms(cfg: &SuiteConfig) -> Result<Report> {
    let pc = PrimeConfig::new(cfg.p, cfg.m)?;
    let mut rb = ReportBuilder::new(cfg, windows(cfg.m, cfg.n, 0, 0, 0));
    let pairs = if cfg.budget > 0 { cfg.budget } else { 200 };
    let mut rng = Rng::new(cfg.seed);
    let p = cfg.p;

    rb.timed("product-rule-200-pairs", || {
        for k in 0..pairs {
            let f = random_series(&mut rng, pc, cfg.n, cfg.n.min(8));
            let g = random_series(&mut rng, pc, cfg.n, cfg.n.min(8));
            let lhs = f.mul(&g)?.delta()?;
            let df = f.delta()?;
            let dg = g.delta()?;
            let mut rhs = f.pow(p)?.mul(&dg)?.add(&g.pow(p)?.mul(&df)?)?;
            rhs = rhs.add(&df.mul(&dg)?.mul_p_pow(1))?;
            if !lhs.sub(&rhs)?.is_zero() {
                return Ok((false, format!("pair {k}: product rule residual nonzero")));
            }
        }
        Ok((true, format!("{pairs} randomized pairs, exact at precision M-1")))
    });

    let mut rng = Rng::new(cfg.seed.wrapping_add(1));
    rb.timed("additive-defect-200-pairs", || {
        for k in 0..pairs {
            let f = random_series(&mut rng, pc, cfg.n, cfg.n.min(8));
            let g = random_series(&mut rng, pc, cfg.n, cfg.n.min(8));
            let lhs = f.add(&g)?.delta()?;
            let mut rhs = f.delta()?.add(&g.delta()?)?;
            for i in 1..p {
                let c = binom_u128(&pc, p as u64, i as u64).exact_div_p(&pc, 1)?;
                let term = f.pow(i)?.mul(&g.pow(p - i)?)?.scale(&c.neg(&pc));
                rhs = rhs.add(&term)?;
            }
            if !lhs.sub(&rhs)?.is_zero() {
                return Ok((false, format!("pair {k}: additive defect residual nonzero")));
            }
        }
        Ok((true, format!("{pairs} randomized pairs, exact at precision M-1")))
    });

    let mut rng = Rng::new(cfg.seed.wrapping_add(2));
    rb.timed("frobenius-lift-mod-p", || {
        for k in 0..pairs {
            let f = random_series(&mut rng, pc, cfg.n, cfg.n.min(8));
            let diff = f.frobenius().sub(&f.pow(p)?)?;
            if diff.exact_div_p(1).is_err() {
                return Ok((false, format!("sample {k}: phi(f) - f^p not divisible by p")));
            }
        }
        Ok((true, format!("{pairs} randomized samples")))
    });

    Ok(rb.finish())
}

/// The unit c = phi(E)/p of O_max: c * c^{-1} = 1 in canonical form,
/// c = delta(E) modulo the filtration with delta(E) a unit, and the
/// negative control: phi(E/p) - (E/p)^p has a valuation-zero coefficient,
/// so the extended Frobenius is not a lift of Frobenius there.
pub fn lemma_2_2(cfg: &SuiteConfig) -> Result<Report> {
    let pc = PrimeConfig::new(cfg.p, cfg.m)?;
    let e_deg = (cfg.eisenstein.len() - 1) as u32;
    let n_work = cfg.n.max(crate::report::guard_n(e_deg, cfg.m)).max(16);
    let eis = crate::series::Eisenstein::from_ints(pc, n_work, &cfg.eisenstein)?;
    let ring = OMaxRing::new(pc, n_work, cfg.l, eis)?;
    let mut rb = ReportBuilder::new(cfg, windows(cfg.m, n_work, cfg.l, 0, 0));

    rb.timed("c-inverse-exact", || {
        let c = ring.c_element()?;
        let cinv = ring.invert(&c)?;
        let prod = ring.mul(&c, &cinv);
        let ok = ring.eq(&prod, &ring.one());
        Ok((ok, "c * c^{-1} = 1 in canonical form".into()))
    });

    rb.timed("c-inverse-closed-form", || {
        // c^{-1} = c0^{-1} sum_i (-c0^{-1} E^p)^i / p^i with c0 = delta(E)
        let c = ring.c_element()?;
        let de = ring.eis.delta_exact();
        let c0inv_series = de.invert()?;
        let mut acc = ring.zero();
        let mut term = ring.one();
        // (-c0^{-1} E^p)/p^1 per step: E^p/p = p^{p-1} (E/p)^p
        let step = {
            let eop_p = {
                let mut x = ring.e_over_p();
                for _ in 1..pc.p {
                    x = ring.mul(&x, &ring.e_over_p());
                }
                x
            };
            let scaled = ring.mul_p_pow(&eop_p, pc.p - 1);
            ring.neg(&ring.mul(&scaled, &ring.from_series(&c0inv_series)))
        };
        for _ in 0..=(ring.l_max / pc.p + 1) {
            acc = ring.add(&acc, &term);
            term = ring.mul(&term, &step);
        }
        let cinv = ring.mul(&acc, &ring.from_series(&c0inv_series));
        let ok = ring.eq(&ring.mul(&c, &cinv), &ring.one());
        Ok((ok, "geometric-series inverse agrees".into()))
    });

    rb.timed("c-congruent-delta-e-mod-fil1", || {
        let c = ring.c_element()?;
        let de = ring.eis.delta_exact();
        let diff = ring.sub(&c, &ring.from_series(&de));
        let slot0 = diff.slot(pc, ring.n, 0);
        let unit = de.constant_term().is_unit(&pc);
        Ok((
            slot0.is_zero() && unit,
            format!("c - delta(E) in Fil^1; delta(E)(0) unit = {unit}"),
        ))
    });

    rb.timed("not-frobenius-lift-negative-control", || {
        // phi(E/p) - (E/p)^p must have a valuation-0 coefficient
        let c_pows = ring.c_pow_table()?;
        let phi_eop = ring.frobenius_with(&ring.e_over_p(), &c_pows);
        let eop_p = {
            let mut x = ring.e_over_p();
            for _ in 1..pc.p {
                x = ring.mul(&x, &ring.e_over_p());
            }
            x
        };
        let diff = ring.sub(&phi_eop, &eop_p);
        match ring.min_valuation(&diff) {
            Some(0) => Ok((true, "phi(E/p) - (E/p)^p has a unit coefficient".into())),
            Some(v) => Ok((false, format!("difference lies in p^{v} times the ring"))),
            None => Ok((false, "difference vanished: extended Frobenius looked like a lift".into())),
        }
    });

    rb.timed("scalar-inversion-spot-checks", || {
        let three = TruncatedScalar::from_u128(&pc, 3 % pc.modulus());
        if pc.p != 3 {
            let inv = three.invert(&pc)?;
            let prod = three.mul(&pc, &inv);
            if prod.residue != 1 {
                return Ok((false, "3 * 3^{-1} != 1".into()));
            }
        }
        let pscalar = TruncatedScalar::from_u128(&pc, pc.p as u128);
        if pscalar.invert(&pc).is_ok() {
            return Ok((false, "p wrongly invertible".into()));
        }
        Ok((true, "unit inversions behave".into()))
    });

    let _ = SeriesElement::zero(pc, cfg.n);
    Ok(rb.finish())
}
