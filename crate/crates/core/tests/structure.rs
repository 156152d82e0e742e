use openapprox::decomposition::{decompose, default_epsilons, error_report};
use openapprox::domain::SampledDomain;
use openapprox::dsl::parse;
use openapprox::rational::{from_f64_exact, int, rat, Rational};
use openapprox::scalar::{audit, check_openness, expand_point, expand_with, AuditOptions, Interval, RationalIntervalSet};
use openapprox::semicontinuity::{dini_harness, level_lsc_verdicts, scalar_lsc_verdict, Verdict};
use openapprox::smooth::{minorize, open_cores, FD_TOLERANCE};
use openapprox::CoefficientSequence;
use proptest::prelude::*;

fn domain(desc: &str) -> SampledDomain {
    SampledDomain::from_descriptor(desc, |_| unreachable!()).unwrap()
}

#[test]
fn harmonic_audit() {
    let report = audit(&CoefficientSequence::harmonic(), 20, &int(10), &AuditOptions::default()).unwrap();
    assert_eq!(report.first_non_open_level, Some(2));
    assert_eq!(report.levels[0].intervals, vec!["(1/1..10/1]"]);
    assert!(report.levels[0].open);
    assert_eq!(report.levels[1].intervals, vec!["(1/2..1/1]", "(3/2..10/1]"]);
    assert_eq!(report.levels[1].witnesses, vec!["1/1"]);
    assert_eq!(report.cross_validation.random_samples, 10_000);
    assert_eq!(report.cross_validation.mismatches, 0);
}

// For the identity on [0, 1] the worst fiber is not v = 1: near v ≈ 0.61
// the level-7 error is about 0.11, so the domain needs more levels than the
// single value 1 does.
#[test]
fn identity_needs_more_levels_than_its_top_fiber() {
    let d = domain("grid1d:0:1:1025");
    let seq = CoefficientSequence::harmonic();
    let dec = decompose(&d, &parse("x1", 1).unwrap(), &seq, 40).unwrap();
    let rep = error_report(&dec);
    let top = expand_point(&int(1), &seq, 40);
    assert_eq!(top.levels_to_reach(&rat(1, 10)), Some(7));
    assert_eq!(rep.levels_to_reach(&rat(1, 10)), Some(10));

    // Brute-force oracle: sup over fibers, exactly.
    let coeffs = seq.values(40);
    let traces: Vec<_> = dec
        .values()
        .iter()
        .map(|&v| expand_with(&from_f64_exact(v).unwrap(), &coeffs))
        .collect();
    for n in 0..40 {
        let worst = traces.iter().map(|t| t.errors[n].clone()).max().unwrap();
        assert_eq!(rep.levels[n].sup_error_exact, worst);
    }
}

#[test]
fn dini_routes_for_clamped_identity() {
    let d = domain("grid1d:0:3:1025");
    let seq = CoefficientSequence::harmonic();
    let dec = decompose(&d, &parse("min(x1, 1.2)", 1).unwrap(), &seq, 200).unwrap();
    let rep = error_report(&dec);
    let verdicts = level_lsc_verdicts(&seq, 200, &dec.sup_value_exact()).unwrap();
    assert_eq!(verdicts[0].verdict, Verdict::Holds);
    assert_eq!(verdicts[1].witnesses, vec!["1/1"]);
    let dini = dini_harness(&dec, &rep, &default_epsilons(), Some(&verdicts)).unwrap();
    assert!(dini.monotone && dini.sup_monotone && dini.within_derived_bound);
    assert_eq!(dini.usc_certified_levels, vec![1]);
    assert_eq!(dini.n_eps["1/10"], Some(10));
}

#[test]
fn zero_function_everywhere() {
    let d = domain("grid2d:0:1:33x33");
    let seq = CoefficientSequence::harmonic();
    let dec = decompose(&d, &parse("0", 2).unwrap(), &seq, 10).unwrap();
    let rep = error_report(&dec);
    let dini = dini_harness(&dec, &rep, &default_epsilons(), None).unwrap();
    assert!(dini.n_eps.values().all(|n| *n == Some(1)));
    let m = minorize(&dec).unwrap();
    assert!(m.bumps.is_empty());
    assert_eq!(m.residual.sup_residual, 0.0);
}

#[test]
fn smooth_minorant_on_a_fine_grid() {
    let d = domain("grid1d:0:3:4097");
    let seq = CoefficientSequence::harmonic();
    let dec = decompose(&d, &parse("min(x1, 1.2)", 1).unwrap(), &seq, 50).unwrap();
    let m = minorize(&dec).unwrap();
    assert!(m.bumps.len() >= 2);
    let cores = open_cores(&dec);
    let grid = d.as_grid().unwrap();
    for b in &m.bumps {
        let a = seq.value(b.level as u64);
        assert!(from_f64_exact(b.height).unwrap() <= a);
        assert!(b.boundary_gradient() <= FD_TOLERANCE);
        for i in 0..grid.len() {
            let x = grid.point(i);
            let v = b.value(&x);
            assert!((0.0..=b.height).contains(&v));
            if b.distance(&x) <= b.radius {
                assert!(cores[b.level - 1][i], "level {} ball leaves its core at sample {i}", b.level);
            }
        }
    }
    for i in 0..grid.len() {
        assert!(m.sum_at(&grid.point(i)) <= dec.values()[i]);
    }
}

#[test]
fn smooth_minorant_in_two_dimensions() {
    let d = domain("grid2d:-1:1:129x129");
    let dec = decompose(&d, &parse("x1^2 + x2^2", 2).unwrap(), &CoefficientSequence::harmonic(), 30).unwrap();
    let m = minorize(&dec).unwrap();
    assert!(!m.bumps.is_empty());
    for b in &m.bumps {
        assert_eq!(b.value(&[0.0, 0.0]), 0.0);
    }
}

fn interval_set() -> impl Strategy<Value = RationalIntervalSet> {
    prop::collection::vec((0i64..40, 0i64..40, any::<bool>(), any::<bool>(), any::<bool>()), 0..6).prop_map(|items| {
        RationalIntervalSet::from_intervals(items.into_iter().map(|(a, len, lc, hc, ray)| {
            let lo: Rational = rat(a, 4);
            let hi = (!ray).then(|| rat(a + len, 4));
            Interval::new(lo, lc, hi, hc)
        }))
    })
}

proptest! {
    #[test]
    fn lsc_verdict_matches_openness(u in interval_set()) {
        let v = scalar_lsc_verdict(&u);
        prop_assert_eq!(v.verdict == Verdict::Holds, check_openness(&u).is_open());
        prop_assert_eq!(scalar_lsc_verdict(&u.interior()).verdict, Verdict::Holds);
    }
}
