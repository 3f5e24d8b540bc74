//! The verification suites: each one exercises a constructive statement and
//! reports per-check pass/fail records. Suite names are part of the CLI
//! contract.

use crate::error::{Error, Result};
use crate::maxring::{Flavor, MaxRing, MaxRingElement};
use crate::padic::PrimeConfig;
use crate::report::{EffectiveWindows, Report, SuiteConfig};
use crate::rng::Rng;
use crate::series::{Eisenstein, SeriesElement};

mod base;
mod envelope;
mod filtration;
mod galois_action;
mod descent_suites;

pub const SUITE_NAMES: [&str; 12] = [
    "delta-axioms",
    "lemma-2.2",
    "lemma-2.3",
    "lemma-2.4",
    "prop-2.5",
    "lemma-2.8",
    "prop-2.9",
    "lemma-3.7",
    "key-equation",
    "crystalline",
    "cocycle",
    "tau-convergence",
];

pub fn run_suite(cfg: &SuiteConfig) -> Result<Report> {
    match cfg.suite.as_str() {
        "delta-axioms" => base::delta_axioms(cfg),
        "lemma-2.2" => base::lemma_2_2(cfg),
        "lemma-2.3" => envelope::lemma_2_3(cfg),
        "lemma-2.4" => envelope::lemma_2_4(cfg),
        "prop-2.5" => envelope::prop_2_5(cfg),
        "lemma-2.8" => filtration::lemma_2_8(cfg),
        "prop-2.9" => filtration::prop_2_9(cfg),
        "lemma-3.7" => galois_action::lemma_3_7(cfg),
        "key-equation" => descent_suites::key_equation(cfg),
        "crystalline" => descent_suites::crystalline(cfg),
        "cocycle" => descent_suites::cocycle(cfg),
        "tau-convergence" => descent_suites::tau_convergence(cfg),
        other => Err(Error::BadInput(format!(
            "unknown suite {other:?}; expected one of {SUITE_NAMES:?}"
        ))),
    }
}

/// The default verification grid: primes and Eisenstein polynomials.
pub fn default_grid() -> Vec<(u32, Vec<i64>)> {
    let mut grid = Vec::new();
    for p in [2i64, 3, 5] {
        grid.push((p as u32, vec![-p, 1]));
        grid.push((p as u32, vec![-p, 0, 1]));
        grid.push((p as u32, vec![p, p, 1]));
    }
    grid
}

/// The delta-polynomial and divided-power tables grow multinomially in p;
/// the suites built on them are pinned to p in {2, 3}.
pub(crate) fn require_small_prime(cfg: &SuiteConfig) -> Result<()> {
    if cfg.p > 3 {
        return Err(Error::BadInput(format!(
            "suite {:?} runs at p in {{2, 3}}; the divided-power tables grow multinomially in p",
            cfg.suite
        )));
    }
    Ok(())
}

pub(crate) fn eisenstein_from_cfg(cfg: &SuiteConfig, n: u32) -> Result<(PrimeConfig, Eisenstein)> {
    let pc = PrimeConfig::new(cfg.p, cfg.m)?;
    let eis = Eisenstein::from_ints(pc, n, &cfg.eisenstein)?;
    Ok((pc, eis))
}

pub(crate) fn build_ring(cfg: &SuiteConfig, m: u32, n: u32, l: u32, i: u32) -> Result<MaxRing> {
    let pc = PrimeConfig::new(cfg.p, m)?;
    let eis = Eisenstein::from_ints(pc, n, &cfg.eisenstein)?;
    MaxRing::new(pc, n, l, i, eis)
}

pub(crate) fn windows(m: u32, n: u32, l: u32, i: u32, depth: u32) -> EffectiveWindows {
    EffectiveWindows { m, n, l, i, depth }
}

/// Random series with degree < deg_bound and small integer coefficients.
pub(crate) fn random_series(rng: &mut Rng, pc: PrimeConfig, n: u32, deg_bound: u32) -> SeriesElement {
    let mut s = SeriesElement::zero(pc, n);
    let terms = 1 + rng.below(deg_bound as u64);
    for _ in 0..terms {
        let e = rng.below(deg_bound as u64) as u32;
        let c = rng.i64_in(-9, 9);
        let cur = s.coeff(e);
        s.set(e, cur.add(&pc, &crate::padic::TruncatedScalar::from_i64(&pc, c)));
    }
    s
}

/// Random element with small gamma- and slot-support, of the given flavor.
pub(crate) fn random_elem(
    rng: &mut Rng,
    ring: &MaxRing,
    flavor: Flavor,
    gamma_max: u32,
    slot_max: u32,
    deg_bound: u32,
) -> MaxRingElement {
    let mut out = ring.zero();
    let terms = 1 + rng.below(3);
    for _ in 0..terms {
        let gi = rng.below(gamma_max as u64 + 1) as u32;
        let sl = rng.below(slot_max as u64 + 1) as u32;
        let s = random_series(rng, ring.cfg(), ring.omax.n, deg_bound);
        let coeff = ring.omax.canonicalize(&[(sl, s)]);
        let term = ring.gamma_with(flavor, gi, coeff);
        out = ring.add(&out, &term).expect("same ring");
    }
    out
}
