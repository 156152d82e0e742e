#![no_main]

use libfuzzer_sys::fuzz_target;
use openapprox::coefficients::{parse_sequence_spec, SequenceSpec};
use openapprox::CoefficientSequence;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(SequenceSpec::Sequence(seq)) = parse_sequence_spec(text) {
        for n in 1..=4 {
            let _ = seq.value(n);
        }
        let desc = seq.descriptor();
        let again = CoefficientSequence::from_descriptor(&desc).expect("descriptor round-trips");
        assert_eq!(again.descriptor(), desc);
    }
});
