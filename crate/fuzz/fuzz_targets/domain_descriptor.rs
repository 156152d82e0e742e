#![no_main]

use libfuzzer_sys::fuzz_target;
use openapprox::domain::parse_domain_spec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_domain_spec(text);
});
