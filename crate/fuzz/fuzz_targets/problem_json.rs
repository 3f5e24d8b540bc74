#![no_main]

use libfuzzer_sys::fuzz_target;

use prismlab::json::ProblemFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // problem files are untrusted: parsing and validation (Eisenstein
    // conditions, the height relation A B = E^h Id) must never panic
    if let Ok((_ring, km, _g, _budget)) = ProblemFile::parse(text) {
        assert!(km.d >= 1);
    }
});
