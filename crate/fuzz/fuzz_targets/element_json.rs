#![no_main]

use libfuzzer_sys::fuzz_target;

use prismlab::json::ElementFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // parsing untrusted element files must never panic; accepted elements
    // must round-trip bit-exactly through their canonical form
    if let Ok((ring, elem)) = ElementFile::parse(text) {
        let rendered = ElementFile::render(&ring, &elem);
        let (_, back) = ElementFile::parse(&rendered).expect("canonical form reparses");
        assert_eq!(elem, back);
    }
});
