#![no_main]

use libfuzzer_sys::fuzz_target;
use torus_nls::io::{parse_config_str, Subcommand};

// The first byte picks the subcommand, the rest is the TOML document.
fuzz_target!(|data: &[u8]| {
    let Some((&pick, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let sub = Subcommand::ALL[usize::from(pick) % Subcommand::ALL.len()];
    if let Ok(config) = parse_config_str(sub, text) {
        config.validate().expect("a parsed config must re-validate");
    }
});
