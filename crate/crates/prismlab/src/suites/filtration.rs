//! Filtration suites: the auxiliary-ring membership witnesses, the phi-split
//! above the h0 threshold, and the E-adic reconstruction round-trip against
//! the fixed-point solver.

use crate::deltacalc::{DeltaCtx, GammaTables};
use crate::descent::{
    assemble_layers, descent_fixed_point, edadic_reconstruct, DescentProblem, Matrix, SolveOptions,
};
use crate::error::Result;
use crate::fil::{fil_decompose, h0_bound,phi_fil_split, verify_split, FiltrationWitness, SRingKind};
use crate::maxring::{A2Lift, Flavor};
use crate::report::{guard_l, Report, ReportBuilder, SuiteConfig};
use crate::rng::Rng;

use super::{build_ring, random_elem, windows};

/// Membership decompositions reassemble exactly and the phi-split lands in
/// the ring part plus E^h Fil^{m+1}, for 20 randomized level-m elements.
pub fn lemma_2_8(cfg: &SuiteConfig) -> Result<Report> {
    let p = cfg.p;
    let kind = if p == 2 { SRingKind::Hat } else { SRingKind::Tilde };
    // window sizing: the split expands phi(E)^i for i up to m+2
    let hs = [1u32, 2];
    let max_m = hs.iter().map(|&h| h0_bound(kind, p, h) + 1).max().unwrap() + 2;
    let e_deg = (cfg.eisenstein.len() - 1) as u32;
    let n_ser = cfg.n.max(2 * p.max(2) * (max_m + 2) * e_deg + 8);
    let l_work = cfg.l.max(p.max(2) * (max_m + 2) + 4).max(guard_l(p, cfg.m));
    let ring = build_ring(cfg, cfg.m, n_ser, l_work, cfg.i.max(6))?;
    let mut rb = ReportBuilder::new(cfg, windows(cfg.m, n_ser, l_work, cfg.i.max(6), 0));
    let trials = 20u32;

    for h in hs {
        let h0 = h0_bound(kind, p, h);
        let m = h0 + 1;
        rb.timed(format!("split-h{h}-m{m}-{trials}-samples"), || {
            let mut rng = Rng::new(cfg.seed.wrapping_add(h as u64));
            for k in 0..trials {
                // random Fil^m element: entries at levels m..m+2
                let mut entries = Vec::new();
                for lvl in m..m + 2 {
                    let a = random_elem(&mut rng, &ring, Flavor::Z, 1, 0, 3);
                    entries.push((lvl, a));
                }
                let x = FiltrationWitness { kind, h: m, entries };
                let (a, y) = phi_fil_split(&ring, &x, h)?;
                if !verify_split(&ring, &x, h, &a, &y)? {
                    return Ok((false, format!("sample {k}: split does not reassemble")));
                }
                if y.entries.iter().any(|(lvl, _)| *lvl < m + 1) {
                    return Ok((false, format!("sample {k}: tail below level m+1")));
                }
            }
            Ok((true, format!("h0 = {h0}; splits reassemble with tails above level {m}")))
        });
    }

    rb.timed("membership-witnesses-reassemble", || {
        let mut rng = Rng::new(cfg.seed.wrapping_add(100));
        let base = if kind == SRingKind::Hat { 4 } else { p };
        for k in 0..trials {
            // random presentation sum a_j (E^base/p)^j with j >= j0
            let j0 = 1 + rng.below(2) as u32;
            let mut pres = Vec::new();
            for j in j0..j0 + 2 {
                pres.push((j, random_elem(&mut rng, &ring, Flavor::Z, 1, 0, 3)));
            }
            let h = base * j0;
            match fil_decompose(&ring, kind, &pres, h)? {
                Ok(w) => {
                    let back = w.reassemble(&ring)?;
                    // direct assembly of the presentation
                    let mut direct = ring.zero();
                    for (j, a) in &pres {
                        let i = base * j;
                        let term = ring.mul(a, &ring.pow(&ring.e_over_p(), i)?)?;
                        direct = ring.add(&direct, &ring.mul_p_pow(&term, i - j))?;
                    }
                    if !ring.eq(&back, &direct) {
                        return Ok((false, format!("sample {k}: witness reassembly differs")));
                    }
                }
                Err(lvl) => return Ok((false, format!("sample {k}: rejected at level {lvl}"))),
            }
        }
        Ok((true, format!("{trials} randomized witnesses reassemble exactly")))
    });

    rb.timed("unit-not-in-fil1", || {
        let pres = vec![(0u32, ring.one())];
        let res = fil_decompose(&ring, kind, &pres, 1)?;
        Ok((res.is_err(), "1 is rejected from Fil^1".into()))
    });

    Ok(rb.finish())
}

/// Round-trip instances with known solutions: the E-adic reconstruction and
/// the fixed-point solver recover the generator's matrix entrywise.
pub fn prop_2_9(cfg: &SuiteConfig) -> Result<Report> {
    super::require_small_prime(cfg)?;
    let p = cfg.p;
    let target = 8u32.min(cfg.m);
    let order = cfg.nmax.max(8);
    let l_work = cfg.l.max(guard_l(p, cfg.m)).max(order + 6);
    let e_deg = (cfg.eisenstein.len() - 1) as u32;
    let n_ser = cfg.n.max(crate::report::guard_n(e_deg, cfg.m.max(10))).max(12);
    let ring = build_ring(cfg, cfg.m.max(10), n_ser, l_work, cfg.i.max(8))?;
    let ctx = DeltaCtx::new(ring.cfg(), n_ser, cfg.depth, l_work, ring.omax.eis.clone())?;
    let mut tabs = GammaTables::new(ctx);
    let lift = A2Lift::build(&ring, &mut tabs, 3)?;
    let mut rb = ReportBuilder::new(cfg, windows(ring.cfg().m, n_ser, l_work, cfg.i.max(8), cfg.depth));

    let mut rng = Rng::new(cfg.seed);
    let mut instance = 0;
    for d in [1usize, 2] {
        for h in [1u32, 2] {
            for _ in 0..if d == 1 { 3 } else { 2 } {
                instance += 1;
                let name = format!("roundtrip-{instance:02}-d{d}-h{h}");
                // Y = Id + E*u*R pins the phi-fixed gauge at the origin
                let mut y = Matrix::identity(&ring, d);
                for i in 0..d {
                    for j in 0..d {
                        let r = random_elem(&mut rng, &ring, Flavor::Z, 1, 0, 2);
                        let ur = ring.mul_series(
                            &r,
                            &crate::series::SeriesElement::monomial(
                                ring.cfg(),
                                n_ser,
                                1,
                                crate::padic::TruncatedScalar::one(&ring.cfg()),
                            ),
                        );
                        let pert = ring.mul_e_pow(&ur, 1);
                        y.entries[i * d + j] = ring.add(&y.entries[i * d + j], &pert)?;
                    }
                }
                rb.timed(name, || {
                    // B := E^h Y phi(Y)^{-1} via Neumann inversion; C := Id
                    let phiy = y.map(|e| ring.phi(e))?;
                    let phiy_inv = invert_matrix(&ring, &phiy)?;
                    let b = y.mul(&ring, &phiy_inv)?.map(|e| Ok(ring.mul_e_pow(e, h)))?;
                    let prob = DescentProblem {
                        d,
                        h,
                        b,
                        c: Matrix::identity(&ring, d),
                        order,
                    };
                    let fp = descent_fixed_point(&ring, &prob, SolveOptions { max_iterations: cfg.budget.max(48) })?;
                    let dfp = fp.sub(&ring, &y)?;
                    let vfp = dfp.min_valuation(&ring, ring.cfg().m);
                    if vfp < target {
                        return Ok((false, format!("fixed point differs from Y at valuation {vfp}")));
                    }
                    let layers = edadic_reconstruct(&ring, &prob, &lift, None, target)?;
                    let assembled = assemble_layers(&ring, &layers)?;
                    let dre = assembled.sub(&ring, &y)?;
                    let vre = dre.min_valuation(&ring, ring.cfg().m);
                    if vre < target {
                        return Ok((false, format!("reconstruction differs from Y at valuation {vre}")));
                    }
                    let dx = assembled.sub(&ring, &fp)?;
                    let vx = dx.min_valuation(&ring, ring.cfg().m);
                    if vx < target {
                        return Ok((false, format!("routes disagree at valuation {vx}")));
                    }
                    Ok((true, format!("both routes recover Y mod p^{target} (E-order {order})")))
                });
            }
        }
    }

    rb.timed("trivial-problems", || {
        // B = C = Id, h = 0: phi-fixed scalars; the identity seed returns Id
        let prob = DescentProblem {
            d: 1,
            h: 0,
            b: Matrix::identity(&ring, 1),
            c: Matrix::identity(&ring, 1),
            order: 4,
        };
        let fp = descent_fixed_point(&ring, &prob, SolveOptions::default())?;
        if !fp.eq(&ring, &Matrix::identity(&ring, 1)) {
            return Ok((false, "phi-fixed scalar case failed".into()));
        }
        // B = E^h Id, C = Id forces Y = phi(Y): constants again
        let eh = ring.mul_e_pow(&ring.one(), 1);
        let prob = DescentProblem {
            d: 1,
            h: 1,
            b: Matrix { d: 1, entries: vec![eh] },
            c: Matrix::identity(&ring, 1),
            order: 4,
        };
        let fp = descent_fixed_point(&ring, &prob, SolveOptions::default())?;
        Ok((
            fp.eq(&ring, &Matrix::identity(&ring, 1)),
            "degenerate instances solve to the identity".into(),
        ))
    });

    Ok(rb.finish())
}

/// Invert Id + (nilpotent-at-precision) matrices by Neumann series; general
/// enough for the phi-images of the round-trip generators.
fn invert_matrix(ring: &crate::maxring::MaxRing, m: &Matrix) -> Result<Matrix> {
    let d = m.d;
    let id = Matrix::identity(ring, d);
    let err = id.sub(ring, m)?;
    let mut inv = id.clone();
    let mut term = id.clone();
    for _ in 0..96 {
        term = term.mul(ring, &err)?;
        if term.is_zero() {
            return Ok(inv);
        }
        inv = inv.add(ring, &term)?;
    }
    Err(crate::error::Error::NoConvergence("matrix Neumann inversion".into()))
}
