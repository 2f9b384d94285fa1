#![no_main]

use libfuzzer_sys::fuzz_target;
use mcflab_core::lab::{parse_config_with, parse_override};

const BASE: &str = "[run]\nscenario = \"cosh-neck\"\n";

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if parse_override(text).is_ok() {
            let _ = parse_config_with(BASE, &[text.to_string()]);
        }
    }
});
