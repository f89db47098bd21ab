#![no_main]

use libfuzzer_sys::fuzz_target;
use torus_nls::io::parse_manifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(manifest) = parse_manifest(text) {
        let again = parse_manifest(&manifest.to_json().unwrap()).unwrap();
        assert_eq!(again, manifest);
    }
});
