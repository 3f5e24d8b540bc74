//! The group-action suite: phi-equivariance, composition coherence,
//! I_plus-triviality, the u-containment of the moved part of embedded
//! elements, and the structured Frobenius image.

use crate::error::Result;
use crate::galois::{phi_image_form, GroupAction, GroupElement};
use crate::maxring::{iplus_reduce, Flavor};
use crate::omax::DivisibilityOutcome;
use crate::padic::TruncatedScalar;
use crate::report::{guard_l, Report, ReportBuilder, SuiteConfig};
use crate::rng::Rng;

use super::{build_ring, random_elem, windows};

pub fn lemma_3_7(cfg: &SuiteConfig) -> Result<Report> {
    let p = cfg.p;
    let l_work = cfg.l.max(guard_l(p, cfg.m));
    let i_work = cfg.i.max(3 * p + 4);
    let e_deg = (cfg.eisenstein.len() - 1) as u32;
    let n_ser = cfg.n.max(crate::report::guard_n(e_deg, cfg.m)).max(24);
    let ring = build_ring(cfg, cfg.m, n_ser, l_work, i_work)?;
    let pc = ring.cfg();
    let mut rb = ReportBuilder::new(cfg, windows(cfg.m, n_ser, l_work, i_work, 0));

    let tau = GroupElement::tau(&pc);
    let tau2 = tau.compose(&pc, &tau);
    let chi_elt = GroupElement::hk(&pc, TruncatedScalar::from_u128(&pc, (p + 1) as u128))?;
    let tested: Vec<(&str, GroupElement)> =
        vec![("tau", tau), ("tau2", tau2), ("chi", chi_elt)];

    for (gi, (name, g)) in tested.iter().enumerate() {
        let act = GroupAction::new(&ring, *g)?;
        rb.timed(format!("phi-equivariance-{name}"), || {
            let mut rng = Rng::new(cfg.seed.wrapping_add(gi as u64));
            for k in 0..5 {
                let f = random_elem(&mut rng, &ring, Flavor::W, 2, 1, 3);
                let lhs = act.act(&ring.phi(&f)?)?;
                let rhs = ring.phi(&act.act(&f)?)?;
                if !ring.eq(&lhs, &rhs) {
                    return Ok((false, format!("sample {k}: action does not commute with phi")));
                }
            }
            Ok((true, "5 randomized elements, exact at precision".into()))
        });

        rb.timed(format!("iplus-triviality-{name}"), || {
            let mut rng = Rng::new(cfg.seed.wrapping_add(7));
            for k in 0..8 {
                let f = random_elem(&mut rng, &ring, Flavor::W, 2, 1, 3);
                let moved = act.act(&f)?;
                let diff = ring.sub(&moved, &f)?;
                if !iplus_reduce(&ring, &diff).is_zero() {
                    return Ok((false, format!("sample {k}: action moves the I_plus residue")));
                }
            }
            Ok((true, "action is trivial on the I_plus quotient".into()))
        });

        rb.timed(format!("semilinearity-{name}"), || {
            let mut rng = Rng::new(cfg.seed.wrapping_add(13));
            for k in 0..5 {
                let f = random_elem(&mut rng, &ring, Flavor::W, 2, 1, 3);
                let h = random_elem(&mut rng, &ring, Flavor::W, 2, 1, 3);
                let lhs = act.act(&ring.mul(&f, &h)?)?;
                let rhs = ring.mul(&act.act(&f)?, &act.act(&h)?)?;
                if !ring.eq(&lhs, &rhs) {
                    return Ok((false, format!("sample {k}: action is not multiplicative")));
                }
                // fixes scalars
                let c = ring.constant(TruncatedScalar::from_u128(&pc, 1 + rng.below(50) as u128));
                if !ring.eq(&act.act(&c)?, &c) {
                    return Ok((false, format!("sample {k}: scalars moved")));
                }
            }
            Ok((true, "multiplicative, fixes scalars".into()))
        });
    }

    rb.timed("composition-coherence-10-triples", || {
        let mut rng = Rng::new(cfg.seed.wrapping_add(23));
        for k in 0..10 {
            let a = TruncatedScalar::from_u128(&pc, rng.below(16) as u128);
            let chi = TruncatedScalar::from_u128(&pc, 1 + p as u128 * rng.below(4) as u128);
            let g = GroupElement::new(&pc, a, chi)?;
            let a2 = TruncatedScalar::from_u128(&pc, rng.below(16) as u128);
            let chi2 = TruncatedScalar::from_u128(&pc, 1 + p as u128 * rng.below(4) as u128);
            let h = GroupElement::new(&pc, a2, chi2)?;
            let f = random_elem(&mut rng, &ring, Flavor::W, 2, 1, 3);
            let act_g = GroupAction::new(&ring, g)?;
            let act_h = GroupAction::new(&ring, h)?;
            let act_gh = GroupAction::new(&ring, g.compose(&pc, &h))?;
            let lhs = act_gh.act(&f)?;
            let rhs = act_g.act(&act_h.act(&f)?)?;
            if !ring.eq(&lhs, &rhs) {
                return Ok((false, format!("triple {k}: composition law fails")));
            }
        }
        Ok((true, "10 randomized triples, exact at precision".into()))
    });

    rb.timed("moved-part-u-containment", || {
        // for embedded generators f, act(g, st_embed(f)) - st_embed(f) has
        // every gamma coefficient divisible by u
        let act = GroupAction::new(&ring, tau)?;
        let iota = ring.iota_z_table(2)?;
        for (idx, f) in [ring.gamma(Flavor::Z, 1), ring.gamma(Flavor::Z, 2), iota[1].clone()]
            .iter()
            .enumerate()
        {
            let w = ring.st_embed(f)?;
            let moved = ring.sub(&act.act(&w)?, &w)?;
            for (gi, c) in &moved.terms {
                if c.is_zero() {
                    continue;
                }
                match ring.omax.divisible_by_u(c, 1) {
                    DivisibilityOutcome::Yes(_) => {}
                    _ => {
                        return Ok((
                            false,
                            format!("generator {idx}: gamma_{gi} coefficient not divisible by u"),
                        ))
                    }
                }
            }
        }
        Ok((true, "moved parts of embedded generators are u-multiples".into()))
    });

    rb.timed("iplus-residue-ring-map", || {
        let mut rng = Rng::new(cfg.seed.wrapping_add(31));
        for k in 0..6 {
            let f = random_elem(&mut rng, &ring, Flavor::W, 2, 1, 3);
            let h = random_elem(&mut rng, &ring, Flavor::W, 2, 1, 3);
            let lhs = iplus_reduce(&ring, &ring.mul(&f, &h)?);
            let rhs = iplus_reduce(&ring, &f).mul(&pc, &iplus_reduce(&ring, &h));
            if !lhs.sub(&pc, &rhs).is_zero() {
                return Ok((false, format!("sample {k}: residue map is not multiplicative")));
            }
        }
        // generators die: u, E - E(0), gamma_i(w)
        let u = crate::series::SeriesElement::monomial(pc, n_ser, 1, TruncatedScalar::one(&pc));
        let gu = iplus_reduce(&ring, &ring.from_series(&u));
        let gw = iplus_reduce(&ring, &ring.gamma(Flavor::W, 2));
        Ok((gu.is_zero() && gw.is_zero(), "kernel contains the stated generators".into()))
    });

    rb.timed("phi-image-structured-expansion", || {
        // integer rows reassemble to phi(gamma_n(w)); the builder verifies
        let form = phi_image_form(&ring)?;
        Ok((
            form.rows.len() >= ring.i_max as usize - 1,
            format!("rows for gamma_0..gamma_{} verified against phi", form.rows.len() - 1),
        ))
    });

    Ok(rb.finish())
}
