//! prismlab: an exact-arithmetic workbench for truncated prismatic period
//! rings, divided-power envelopes, Galois actions and Kisin-module descent.
//!
//! Everything is computed over Z_p at explicit finite precision: scalars
//! modulo p^M, the base ring W(k)[[u]] modulo u^N, the E/p-adic slots of
//! O_max up to order L, and divided powers gamma_i of the envelope
//! generators up to order I. All verification suites state their claims
//! "at precision", i.e. as exact identities in these finite quotients.

pub mod error;
pub mod padic;
pub mod series;
pub mod omax;
pub mod deltacalc;
pub mod maxring;
pub mod galois;
pub mod descent;
pub mod fil;
pub mod rng;
pub mod report;
pub mod suites;
pub mod json;

pub use error::{Error, Result};
