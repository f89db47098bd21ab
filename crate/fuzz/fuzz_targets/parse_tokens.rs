#![no_main]

use libfuzzer_sys::fuzz_target;
use torus_nls::io::Subcommand;
use torus_nls::metric::Family;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(family) = text.parse::<Family>() {
        assert_eq!(family.token(), text);
    }
    if let Ok(sub) = text.parse::<Subcommand>() {
        assert_eq!(sub.name(), text);
    }
});
