#![no_main]

use libfuzzer_sys::fuzz_target;
use openapprox::parse;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for dim in 1..=2 {
        if let Ok(ast) = parse(text, dim) {
            // Evaluation may fail (domain errors) but must not panic.
            let _ = ast.evaluate(&[0.5, -1.25][..dim]);
            let _ = ast.evaluate(&[0.0, 0.0][..dim]);
        }
    }
});
