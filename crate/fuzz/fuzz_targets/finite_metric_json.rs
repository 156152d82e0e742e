#![no_main]

use libfuzzer_sys::fuzz_target;
use openapprox::domain::{FiniteMetric, SampledDomain};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if FiniteMetric::from_json(text).is_ok() {
        let d = SampledDomain::from_descriptor("finite:m.json", |_| Ok(text.to_owned())).expect("validated metric loads");
        for i in 0..d.len() {
            let _ = d.point(i);
        }
    }
});
