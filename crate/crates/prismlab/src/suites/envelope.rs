//! Envelope suites: the level-n decomposition of delta^n(Ez), the
//! divided-power-as-E/p-polynomial construction with its substitution
//! check, and the reduction-mod-E kernel equalities.

use crate::deltacalc::{delta_n_ez, lemma_delta_n, DeltaCtx, DeltaPoly, GammaTables, XPoly};
use crate::error::Result;
use crate::maxring::{A2Lift, Flavor};
use crate::report::{guard_l, Report, ReportBuilder, SuiteConfig};
use crate::rng::Rng;
use crate::series::SeriesElement;

use super::{build_ring, eisenstein_from_cfg, random_series, windows};

/// delta^n(Ez) = b_n z_n + sum a_i^{(n)} z_{n-1}^i exactly, with unit and
/// goodness flags and the b-recursion recomputed.
pub fn lemma_2_3(cfg: &SuiteConfig) -> Result<Report> {
    super::require_small_prime(cfg)?;
    let e_deg = (cfg.eisenstein.len() - 1) as u32;
    let n_ser = cfg.n.max(crate::report::guard_n(e_deg, cfg.m)).max(16);
    let (pc, eis) = eisenstein_from_cfg(cfg, n_ser)?;
    let depth = cfg.depth.max(cfg.nmax + 1);
    let ctx = DeltaCtx::new(pc, n_ser, depth, cfg.l, eis)?;
    let mut rb = ReportBuilder::new(cfg, windows(cfg.m, n_ser, cfg.l, 0, depth));
    let p = cfg.p;

    for n in 1..=cfg.nmax {
        let ctx = ctx.clone();
        rb.timed(format!("level-{n}-identity-and-flags"), move || {
            let data = lemma_delta_n(&ctx, n)?;
            let direct = delta_n_ez(&ctx, n)?;
            let mut acc = DeltaPoly::var(&ctx, n).scale(&data.b);
            for (i, ai) in data.a.iter().enumerate() {
                let zi = DeltaPoly::var(&ctx, n - 1).pow(&ctx, i as u32);
                acc = acc.add(&ai.mul(&zi));
            }
            if !direct.sub(&acc).is_zero() {
                return Ok((false, "decomposition does not reassemble".into()));
            }
            let ap = match data.a[p as usize].terms.get(&Vec::new()) {
                Some(s) => s.clone(),
                None => return Ok((false, "a_p is not a scalar of A".into())),
            };
            if !ap.constant_term().is_unit(&ctx.cfg) {
                return Ok((false, "a_p is not a unit".into()));
            }
            for (i, ai) in data.a.iter().enumerate().take(p as usize) {
                if !ai.is_good(p) {
                    return Ok((false, format!("a_{i} is not good")));
                }
                if let Some(v) = ai.max_var() {
                    if v + 2 > n {
                        return Ok((false, format!("a_{i} involves z_{v} beyond z_{}", n as i64 - 2)));
                    }
                }
            }
            let b0 = data.b.coeff(0);
            Ok((
                true,
                format!(
                    "identity exact; b_{n}(0) = {} (prec {}); a_p unit; a_0..a_{} good",
                    b0.residue,
                    b0.prec,
                    p - 1
                ),
            ))
        });
    }

    rb.timed("b-recursion-recomputed", || {
        let bs = crate::deltacalc::b_sequence(&ctx, cfg.nmax)?;
        // b_{n+1} = p delta(b_n) + b_n^p recomputed from scratch
        for k in 1..bs.len() {
            let (prev, _, _) = &bs[k - 1];
            let expect = prev.delta()?.mul_p_pow(1).add(&prev.pow(p)?)?;
            if !bs[k].0.sub(&expect)?.is_zero() {
                return Ok((false, format!("recursion fails at level {}", k + 1)));
            }
            // split b = p alpha + beta E^p with alpha a unit
            let (b, alpha, beta) = &bs[k];
            let recon = alpha.mul_p_pow(1).add(&beta.mul(&ctx.eis.poly.pow(p)?)?)?;
            if !b.sub(&recon)?.is_zero() || !alpha.constant_term().is_unit(&ctx.cfg) {
                return Ok((false, format!("alpha/beta split fails at level {}", k + 1)));
            }
        }
        Ok((true, format!("levels 1..{} verified", cfg.nmax)))
    });

    rb.timed("goodness-closure-randomized", || {
        let mut rng = Rng::new(cfg.seed);
        for trial in 0..10 {
            // random good polynomials: every monomial gets a z_j^p factor
            let mk = |rng: &mut Rng| {
                let mut f = DeltaPoly::zero();
                for _ in 0..2 {
                    let j = rng.below(2) as usize;
                    let extra = rng.below(2) as u32;
                    let mut m = vec![0u32; j + 2];
                    m[j] = p + extra;
                    m[j + 1] = rng.below(2) as u32;
                    f.add_term(m, random_series(rng, pc, n_ser, 4));
                }
                f
            };
            let f = mk(&mut rng);
            let g = mk(&mut rng);
            if !f.add(&g).is_good(p) || !f.mul(&g).is_good(p) {
                return Ok((false, format!("trial {trial}: closure under +/* fails")));
            }
            let df = crate::deltacalc::delta_poly(&ctx, &f)?;
            if !df.is_good(p) {
                return Ok((false, format!("trial {trial}: delta of a good poly is not good")));
            }
        }
        Ok((true, "10 randomized good inputs closed under +, *, delta".into()))
    });

    Ok(rb.finish())
}

/// gamma_i(z) = f_i(E/p): substitution through the embedding reproduces the
/// divided-power basis element, for i up to p^2; plus the materialized
/// eq-delta data with its residuals and side conditions.
pub fn lemma_2_4(cfg: &SuiteConfig) -> Result<Report> {
    super::require_small_prime(cfg)?;
    let p = cfg.p;
    let l_work = cfg.l.max(guard_l(p, cfg.m));
    let i_work = cfg.i.max(p * p + 2);
    let e_deg = (cfg.eisenstein.len() - 1) as u32;
    let n_ser = cfg.n.max(crate::report::guard_n(e_deg, cfg.m)).max(20);
    let ring = build_ring(cfg, cfg.m, n_ser, l_work, i_work)?;
    let ctx = DeltaCtx::new(ring.cfg(), n_ser, cfg.depth, l_work, ring.omax.eis.clone())?;
    let mut tabs = GammaTables::new(ctx);
    let iota = ring.iota_z_table(cfg.depth.min(4))?;
    let mut rb = ReportBuilder::new(cfg, windows(cfg.m, n_ser, l_work, i_work, cfg.depth));

    for i in 1..=p * p {
        let f = tabs.gamma_epoly(i)?;
        let sub = ring.iota_xpoly(&f, &iota)?;
        let target = ring.gamma(Flavor::Z, i);
        let ok = ring.eq(&sub, &target);
        rb.check(
            format!("gamma-{i:02}-substitution"),
            ok,
            if ok { "residual exactly zero at precision".into() } else { "nonzero residual".to_string() },
        );
    }

    for n in 1..=3u32 {
        let data = tabs.eq_delta_data(n)?;
        // residual: iota(z_n) - [nu Gamma_n + P_n(E/p) + p^{p-1}(E/p)^p d iota(z_n)]
        let gamma_n = tabs.big_gamma(n)?;
        let mut rhs = ring.iota_xpoly(&gamma_n, &iota)?;
        rhs = ring.mul_series(&rhs, &data.nu);
        rhs = ring.add(&rhs, &ring.iota_xpoly(&data.p_poly, &iota)?)?;
        let mut t = ring.mul_series(&iota[n as usize], &data.d);
        t = ring.mul_p_pow(&t, p - 1);
        t = ring.mul(&t, &ring.pow(&ring.e_over_p(), p)?)?;
        rhs = ring.add(&rhs, &t)?;
        let ok = ring.eq(&iota[n as usize], &rhs);
        rb.check(
            format!("eq-delta-residual-n{n}"),
            ok,
            if ok { "zero at precision".into() } else { "nonzero".to_string() },
        );
        let order_ok = data
            .p_poly
            .coeffs
            .values()
            .all(|d: &DeltaPoly| d.delta_order_at_most(n.saturating_sub(1)));
        rb.record(
            format!("eq-delta-p{n}-order-side-condition"),
            if order_ok { crate::report::Status::Pass } else { crate::report::Status::Undecided },
            format!("every coefficient of P_{n} has delta-order <= {}: {order_ok}", n as i64 - 1),
        );
        // nu_n is a unit
        rb.check(
            format!("eq-delta-nu{n}-unit"),
            data.nu.constant_term().is_unit(&ring.cfg()),
            "nu is a unit of A",
        );
    }

    // gamma~ tables against the direct square-and-divide oracle
    for j in 0..=2u32.min(cfg.depth - 2) {
        let tab: XPoly = tabs.gamma_tilde_z(j)?;
        let lhs = ring.iota_xpoly(&tab, &iota)?;
        let rhs = ring.exact_div_p(&ring.pow(&iota[j as usize], p)?, 1)?;
        rb.check(
            format!("gamma-tilde-z{j}-table"),
            ring.eq(&lhs, &rhs),
            "table equals z^p/p through the embedding",
        );
    }

    Ok(rb.finish())
}

/// Reduction mod E: the kernel on embedded elements is exactly divisible by
/// E, the filtration powers decompose bit-exactly, and the closedness
/// decomposition is constructive.
pub fn prop_2_5(cfg: &SuiteConfig) -> Result<Report> {
    super::require_small_prime(cfg)?;
    let p = cfg.p;
    let l_work = cfg.l.max(guard_l(p, cfg.m));
    let i_work = cfg.i.max(p * p + 2);
    let e_deg = (cfg.eisenstein.len() - 1) as u32;
    let n_ser = cfg.n.max(crate::report::guard_n(e_deg, cfg.m)).max(16);
    let ring = build_ring(cfg, cfg.m, n_ser, l_work, i_work)?;
    let ctx = DeltaCtx::new(ring.cfg(), n_ser, cfg.depth, l_work, ring.omax.eis.clone())?;
    let mut tabs = GammaTables::new(ctx.clone());
    let lift = A2Lift::build(&ring, &mut tabs, 3)?;
    let iota = ring.iota_z_table(3)?;
    let mut rb = ReportBuilder::new(cfg, windows(cfg.m, n_ser, l_work, i_work, cfg.depth));
    let samples = if cfg.budget > 0 { cfg.budget.min(200) } else { 100 };

    rb.timed(format!("kernel-divides-by-e-{samples}-samples"), || {
        let mut rng = Rng::new(cfg.seed);
        for k in 0..samples {
            // random embedded element: series combination of z-monomials
            let mut f = ring.zero();
            for _ in 0..=rng.below(2) {
                let d0 = rng.below(3) as u32;
                let d1 = rng.below(2) as u32;
                let mut t = ring.from_series(&random_series(&mut rng, ring.cfg(), n_ser, 5));
                for _ in 0..d0 {
                    t = ring.mul(&t, &iota[0])?;
                }
                for _ in 0..d1 {
                    t = ring.mul(&t, &iota[1])?;
                }
                f = ring.add(&f, &t)?;
            }
            let red = ring.reduce_mod_e(&f);
            let lifted = lift.lift(&ring, &red)?;
            let kernel = ring.sub(&f, &lifted)?;
            let q = match ring.exact_div_e(&kernel) {
                Ok(q) => q,
                Err(e) => return Ok((false, format!("sample {k}: kernel not divisible: {e}"))),
            };
            let back = ring.add(&ring.mul_e_pow(&q, 1), &lifted)?;
            if !ring.eq(&back, &f) {
                return Ok((false, format!("sample {k}: reassembly differs")));
            }
        }
        Ok((true, "kernel elements divide exactly by E and reassemble".into()))
    });

    rb.timed("fil-powers-reassemble", || {
        let mut rng = Rng::new(cfg.seed.wrapping_add(9));
        for i in 1..=3u32 {
            for k in 0..10 {
                let a = super::random_elem(&mut rng, &ring, Flavor::Z, 2, 1, 4);
                let scaled = ring.mul_e_pow(&a, i);
                let back = match ring.exact_div_e_pow(&scaled, i) {
                    Ok(b) => b,
                    Err(e) => return Ok((false, format!("i={i} sample {k}: division failed: {e}"))),
                };
                if !ring.eq(&ring.mul_e_pow(&back, i), &scaled) {
                    return Ok((false, format!("i={i} sample {k}: E^i reassembly differs")));
                }
            }
        }
        Ok((true, "E^i multiples decompose and reassemble bit-exactly, i <= 3".into()))
    });

    rb.timed("closedness-decomposition", || {
        let mut rng = Rng::new(cfg.seed.wrapping_add(17));
        for nn in 1..=2u32 {
            for trial in 0..5 {
                // y = sum p^{n-i} E^i x_i from random embedded x_i
                let mut xs = Vec::new();
                for _ in 0..=nn {
                    let mut t = ring.from_series(&random_series(&mut rng, ring.cfg(), n_ser, 4));
                    if rng.below(2) == 1 {
                        t = ring.mul(&t, &iota[0])?;
                    }
                    xs.push(t);
                }
                let mut y = ring.zero();
                for (i, x) in xs.iter().enumerate() {
                    let term = ring.mul_p_pow(&ring.mul_e_pow(x, i as u32), nn - i as u32);
                    y = ring.add(&y, &term)?;
                }
                let parts = ring.decompose_p_power(&y, nn, &lift)?;
                let mut back = ring.zero();
                for (i, x) in parts.iter().enumerate() {
                    let term = ring.mul_p_pow(&ring.mul_e_pow(x, i as u32), nn - i as u32);
                    back = ring.add(&back, &term)?;
                }
                if !ring.eq(&back, &y) {
                    return Ok((false, format!("n={nn} trial {trial}: decomposition does not reassemble")));
                }
            }
        }
        Ok((true, "p-power multiples decompose as sum p^{n-i} E^i x_i".into()))
    });

    rb.timed("reduce-kills-exactly-fil1", || {
        // E/p and E map to zero; units do not
        let red_eop = ring.reduce_mod_e(&ring.e_over_p());
        let red_e = ring.reduce_mod_e(&ring.from_series(&ring.omax.eis.poly.clone()));
        let red_one = ring.reduce_mod_e(&ring.one());
        let ok = red_eop.is_zero() && red_e.is_zero() && !red_one.is_zero();
        Ok((ok, "kernel contains Fil^1 generators, misses units".into()))
    });

    let _ = SeriesElement::zero(ring.cfg(), n_ser);
    Ok(rb.finish())
}
