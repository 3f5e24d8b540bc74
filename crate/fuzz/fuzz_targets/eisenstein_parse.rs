#![no_main]

use libfuzzer_sys::fuzz_target;

use prismlab::padic::PrimeConfig;
use prismlab::series::{parse_poly_ints, Eisenstein};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // the string parser must never panic
    let Ok(ints) = parse_poly_ints(text) else { return };
    // validation must never panic either; accepted polynomials must
    // round-trip through the series layer
    for p in [2u32, 3, 5] {
        let Ok(cfg) = PrimeConfig::new(p, 8) else { continue };
        if let Ok(eis) = Eisenstein::from_ints(cfg, 16, &ints) {
            let _ = eis.delta_exact();
            let _ = eis.g_exact();
            assert!(eis.e >= 1);
        }
    }
});
