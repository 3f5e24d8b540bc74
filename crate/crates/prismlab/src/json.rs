//! JSON wire formats for elements, group elements and solver problems.
//!
//! Round-trips are bit-exact: serializing a canonical element and parsing
//! it back yields the identical value, including per-scalar precision.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galois::GroupElement;
use crate::maxring::{Flavor, MaxRing, MaxRingElement};
use crate::omax::OMaxElement;
use crate::padic::{PrimeConfig, TruncatedScalar};
use crate::series::{Eisenstein, SeriesElement};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ScalarWire {
    pub residue: String,
    pub prec: u32,
}

impl ScalarWire {
    pub fn from_scalar(s: &TruncatedScalar) -> Self {
        ScalarWire { residue: s.residue.to_string(), prec: s.prec }
    }

    pub fn to_scalar(&self, cfg: &PrimeConfig) -> Result<TruncatedScalar> {
        let residue: u128 = self
            .residue
            .parse()
            .map_err(|_| Error::BadInput(format!("bad residue {:?}", self.residue)))?;
        if self.prec > cfg.m {
            return Err(Error::BadInput(format!(
                "precision {} exceeds the working precision {}",
                self.prec, cfg.m
            )));
        }
        let modulus = cfg.pow_p(self.prec);
        if self.prec < cfg.m && residue >= modulus {
            return Err(Error::BadInput(format!(
                "residue {residue} not reduced mod p^{}",
                self.prec
            )));
        }
        Ok(TruncatedScalar { residue: residue % cfg.modulus(), prec: self.prec })
    }
}

/// A series is either a dense integer coefficient list (input shorthand) or
/// sparse exponent/scalar pairs (the canonical output form).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum SeriesWire {
    Dense(Vec<i64>),
    Sparse(Vec<SeriesTermWire>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SeriesTermWire {
    pub u: u32,
    pub c: ScalarWire,
}

impl SeriesWire {
    pub fn from_series(s: &SeriesElement) -> Self {
        SeriesWire::Sparse(
            s.coeffs
                .iter()
                .map(|(&u, c)| SeriesTermWire { u, c: ScalarWire::from_scalar(c) })
                .collect(),
        )
    }

    pub fn to_series(&self, cfg: PrimeConfig, n: u32) -> Result<SeriesElement> {
        match self {
            SeriesWire::Dense(v) => Ok(SeriesElement::from_ints(cfg, n, v)),
            SeriesWire::Sparse(terms) => {
                let mut s = SeriesElement::zero(cfg, n);
                for t in terms {
                    if t.u >= n {
                        return Err(Error::BadInput(format!(
                            "series exponent {} beyond the u-window {n}",
                            t.u
                        )));
                    }
                    s.set(t.u, t.c.to_scalar(&cfg)?);
                }
                Ok(s)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct OMaxWire {
    pub l0: SeriesWire,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tail: Vec<OMaxTailWire>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct OMaxTailWire {
    pub l: u32,
    pub poly: SeriesWire,
}

impl OMaxWire {
    pub fn from_omax(cfg: PrimeConfig, n: u32, o: &OMaxElement) -> Self {
        let l0 = o.slot(cfg, n, 0);
        let tail = o
            .slots
            .iter()
            .filter(|(&l, _)| l > 0)
            .map(|(&l, s)| OMaxTailWire { l, poly: SeriesWire::from_series(s) })
            .collect();
        OMaxWire { l0: SeriesWire::from_series(&l0), tail }
    }

    pub fn to_omax(&self, ring: &MaxRing) -> Result<OMaxElement> {
        let cfg = ring.cfg();
        let n = ring.omax.n;
        let mut raw = vec![(0u32, self.l0.to_series(cfg, n)?)];
        for t in &self.tail {
            raw.push((t.l, t.poly.to_series(cfg, n)?));
        }
        Ok(ring.omax.canonicalize(&raw))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ElementWire {
    pub flavor: Option<String>,
    pub terms: Vec<ElementTermWire>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ElementTermWire {
    pub gamma: u32,
    pub coeff: OMaxWire,
}

impl ElementWire {
    pub fn from_elem(ring: &MaxRing, e: &MaxRingElement) -> Self {
        ElementWire {
            flavor: e.flavor.map(|f| f.to_string()),
            terms: e
                .terms
                .iter()
                .map(|(&gamma, coeff)| ElementTermWire {
                    gamma,
                    coeff: OMaxWire::from_omax(ring.cfg(), ring.omax.n, coeff),
                })
                .collect(),
        }
    }

    pub fn to_elem(&self, ring: &MaxRing) -> Result<MaxRingElement> {
        let flavor = match self.flavor.as_deref() {
            None => None,
            Some("z") => Some(Flavor::Z),
            Some("w") => Some(Flavor::W),
            Some(other) => {
                return Err(Error::BadInput(format!("unknown flavor {other:?}")))
            }
        };
        let mut terms = BTreeMap::new();
        for t in &self.terms {
            if t.gamma >= ring.i_max {
                return Err(Error::BadInput(format!(
                    "gamma index {} beyond the window {}",
                    t.gamma, ring.i_max
                )));
            }
            let coeff = t.coeff.to_omax(ring)?;
            if !coeff.slots.is_empty() {
                terms.insert(t.gamma, coeff);
            }
        }
        let flavor = if terms.keys().any(|&g| g > 0) { flavor } else { None };
        Ok(MaxRingElement { flavor, terms })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecWire {
    pub p: u32,
    pub m: u32,
    pub n: u32,
    pub l: u32,
    pub i: u32,
}

impl PrecWire {
    pub fn build_ring(&self, eisenstein: &[i64]) -> Result<MaxRing> {
        let cfg = PrimeConfig::new(self.p, self.m)?;
        let eis = Eisenstein::from_ints(cfg, self.n, eisenstein)?;
        MaxRing::new(cfg, self.n, self.l, self.i, eis)
    }
}

/// A self-contained element file: the ring data plus one element.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementFile {
    pub prec: PrecWire,
    pub eisenstein: Vec<i64>,
    pub elem: ElementWire,
}

impl ElementFile {
    pub fn parse(text: &str) -> Result<(MaxRing, MaxRingElement)> {
        let file: ElementFile =
            serde_json::from_str(text).map_err(|e| Error::BadInput(format!("element JSON: {e}")))?;
        let ring = file.prec.build_ring(&file.eisenstein)?;
        let elem = file.elem.to_elem(&ring)?;
        Ok((ring, elem))
    }

    pub fn render(ring: &MaxRing, elem: &MaxRingElement) -> String {
        let file = ElementFile {
            prec: PrecWire {
                p: ring.cfg().p,
                m: ring.cfg().m,
                n: ring.omax.n,
                l: ring.omax.l_max,
                i: ring.i_max,
            },
            eisenstein: ring.omax.eis.ints().to_vec(),
            elem: ElementWire::from_elem(ring, elem),
        };
        serde_json::to_string_pretty(&file).expect("element serialization")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupElementWire {
    pub a: String,
    pub chi: String,
}

impl GroupElementWire {
    pub fn to_group(&self, cfg: &PrimeConfig) -> Result<GroupElement> {
        let parse = |s: &str| -> Result<TruncatedScalar> {
            let neg = s.starts_with('-');
            let digits = s.trim_start_matches('-');
            let v: u128 = digits
                .parse()
                .map_err(|_| Error::BadInput(format!("bad p-adic coordinate {s:?}")))?;
            let t = TruncatedScalar::from_u128(cfg, v);
            Ok(if neg { t.neg(cfg) } else { t })
        };
        GroupElement::new(cfg, parse(&self.a)?, parse(&self.chi)?)
    }
}

/// A solver problem: the module matrices over A, the group element and the
/// working windows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub prec: PrecWire,
    pub eisenstein: Vec<i64>,
    pub d: usize,
    pub h: u32,
    #[serde(rename = "A_mat")]
    pub a_mat: Vec<Vec<SeriesWire>>,
    #[serde(rename = "B_mat")]
    pub b_mat: Vec<Vec<SeriesWire>>,
    pub g: GroupElementWire,
    #[serde(default)]
    pub budget: Option<u32>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<(MaxRing, crate::descent::KisinModuleData, GroupElement, u32)> {
        let file: ProblemFile =
            serde_json::from_str(text).map_err(|e| Error::BadInput(format!("problem JSON: {e}")))?;
        let ring = file.prec.build_ring(&file.eisenstein)?;
        let cfg = ring.cfg();
        let n = ring.omax.n;
        let read_mat = |m: &Vec<Vec<SeriesWire>>, name: &str| -> Result<Vec<SeriesElement>> {
            if m.len() != file.d || m.iter().any(|row| row.len() != file.d) {
                return Err(Error::BadInput(format!("{name} is not {0}x{0}", file.d)));
            }
            let mut out = Vec::with_capacity(file.d * file.d);
            for row in m {
                for s in row {
                    out.push(s.to_series(cfg, n)?);
                }
            }
            Ok(out)
        };
        let a_mat = read_mat(&file.a_mat, "A_mat")?;
        let b_mat = read_mat(&file.b_mat, "B_mat")?;
        let km = crate::descent::KisinModuleData::new(file.d, file.h, a_mat, b_mat, &ring.omax.eis)?;
        let g = file.g.to_group(&cfg)?;
        Ok((ring, km, g, file.budget.unwrap_or(64)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Eisenstein;

    fn ring() -> MaxRing {
        let cfg = PrimeConfig::new(2, 10).unwrap();
        let eis = Eisenstein::from_ints(cfg, 16, &[-2, 1]).unwrap();
        MaxRing::new(cfg, 16, 10, 8, eis).unwrap()
    }

    #[test]
    fn element_roundtrip_bit_exact() {
        let r = ring();
        let f = r
            .add(
                &r.gamma_with(Flavor::W, 2, r.omax.canonicalize(&[(1, SeriesElement::from_ints(r.cfg(), 16, &[1, 3]))])),
                &r.from_series(&SeriesElement::from_ints(r.cfg(), 16, &[7, 0, 5])),
            )
            .unwrap();
        let text = ElementFile::render(&r, &f);
        let (r2, f2) = ElementFile::parse(&text).unwrap();
        assert_eq!(f, f2);
        let text2 = ElementFile::render(&r2, &f2);
        assert_eq!(text, text2);
    }

    #[test]
    fn problem_parse() {
        let text = r#"{
            "prec": {"p": 2, "m": 8, "n": 16, "l": 16, "i": 12},
            "eisenstein": [-2, 1],
            "d": 1, "h": 1,
            "A_mat": [[[-2, 1]]],
            "B_mat": [[[1]]],
            "g": {"a": "1", "chi": "1"}
        }"#;
        let (ring, km, g, _) = ProblemFile::parse(text).unwrap();
        assert_eq!(km.d, 1);
        assert_eq!(km.h, 1);
        assert!(g.a.residue == 1 && g.chi.residue == 1);
        let _ = ring;
    }

    mod properties {
        use super::*;
        use crate::maxring::Flavor;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn random_elements_roundtrip_bit_exact(
                raw in proptest::collection::vec(
                    (0u32..6, 0u32..4, proptest::collection::vec(-9i64..10, 1..4)),
                    1..4,
                )
            ) {
                let r = ring();
                let mut elem = r.zero();
                for (gi, sl, cs) in &raw {
                    let s = SeriesElement::from_ints(r.cfg(), 16, cs);
                    let coeff = r.omax.canonicalize(&[(*sl, s)]);
                    let t = r.gamma_with(Flavor::W, *gi, coeff);
                    elem = r.add(&elem, &t).unwrap();
                }
                let text = ElementFile::render(&r, &elem);
                let (r2, back) = ElementFile::parse(&text).unwrap();
                prop_assert_eq!(&elem, &back);
                prop_assert_eq!(text, ElementFile::render(&r2, &back));
            }
        }
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(ElementFile::parse("{").is_err());
        let text = r#"{
            "prec": {"p": 2, "m": 8, "n": 16, "l": 16, "i": 12},
            "eisenstein": [-3, 1],
            "d": 1, "h": 1,
            "A_mat": [[[-3, 1]]],
            "B_mat": [[[1]]],
            "g": {"a": "1", "chi": "1"}
        }"#;
        assert!(ProblemFile::parse(text).is_err()); // not Eisenstein at p=2
        let text = r#"{
            "prec": {"p": 2, "m": 8, "n": 16, "l": 16, "i": 12},
            "eisenstein": [-2, 1],
            "d": 1, "h": 1,
            "A_mat": [[[1]]],
            "B_mat": [[[1]]],
            "g": {"a": "1", "chi": "1"}
        }"#;
        assert!(ProblemFile::parse(text).is_err()); // AB != E^h
    }
}
