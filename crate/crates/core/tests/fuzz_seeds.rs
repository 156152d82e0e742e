//! Replays the checked-in fuzz corpus through the same entry points as the
//! fuzz targets, so seed regressions show up in an ordinary test run.

use std::path::PathBuf;

use openapprox::coefficients::{parse_sequence_spec, SequenceSpec};
use openapprox::domain::{parse_domain_spec, FiniteMetric};
use openapprox::rational::{format_rational, parse_rational};
use openapprox::{parse, CoefficientSequence};

fn seeds(target: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| std::fs::read_to_string(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn dsl_seeds() {
    let ok = seeds("dsl_parse").iter().filter(|s| parse(s, 2).is_ok()).count();
    assert!(ok >= 5);
}

#[test]
fn rational_seeds() {
    for s in seeds("rational_parse") {
        if let Ok(q) = parse_rational(&s) {
            assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
        }
    }
}

#[test]
fn coefficient_seeds() {
    for s in seeds("coeffs_descriptor") {
        if let Ok(SequenceSpec::Sequence(seq)) = parse_sequence_spec(&s) {
            let desc = seq.descriptor();
            assert_eq!(CoefficientSequence::from_descriptor(&desc).unwrap().descriptor(), desc, "{s}");
        }
    }
}

#[test]
fn domain_seeds() {
    let ok = seeds("domain_descriptor").iter().filter(|s| parse_domain_spec(s).is_ok()).count();
    assert!(ok >= 4);
}

#[test]
fn finite_metric_seeds() {
    let ok = seeds("finite_metric_json").iter().filter(|s| FiniteMetric::from_json(s).is_ok()).count();
    assert_eq!(ok, 2);
}
