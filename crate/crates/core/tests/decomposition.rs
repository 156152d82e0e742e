use num_traits::Zero;
use openapprox::decomposition::{decompose, error_report, verify_invariants, Decomposition};
use openapprox::domain::SampledDomain;
use openapprox::dsl::parse;
use openapprox::rational::{from_f64_exact, next_down, next_up, rat, Rational};
use openapprox::scalar::{expand_with, level_sets};
use openapprox::CoefficientSequence;
use proptest::prelude::*;

fn domain(desc: &str) -> SampledDomain {
    SampledDomain::from_descriptor(desc, |_| unreachable!()).unwrap()
}

fn run(f: &str, desc: &str, levels: usize) -> Decomposition {
    run_with(f, desc, &CoefficientSequence::harmonic(), levels)
}

fn run_with(f: &str, desc: &str, seq: &CoefficientSequence, levels: usize) -> Decomposition {
    let d = domain(desc);
    decompose(&d, &parse(f, d.dim()).unwrap(), seq, levels).unwrap()
}

fn exact(v: f64) -> Rational {
    from_f64_exact(v).unwrap()
}

#[test]
fn masks_match_the_rational_recursion() {
    let seq = CoefficientSequence::scaled_harmonic(rat(1, 2)).unwrap();
    for (f, desc) in [
        ("min(x1, 1.2)", "grid1d:0:3:257"),
        ("sin(3*x1)^2 + x2", "grid2d:0:1:17x13"),
        ("exp(-x1) * 2.5", "grid1d:-1:2:101"),
    ] {
        let dec = run_with(f, desc, &seq, 40);
        let coeffs = seq.values(40);
        for i in 0..dec.samples() {
            let t = expand_with(&exact(dec.values()[i]), &coeffs);
            for n in 1..=40 {
                assert_eq!(dec.mask_bit(n, i), t.bits[n - 1], "{f}: sample {i}, level {n}");
            }
            assert_eq!(dec.error(i, 40), t.errors[39]);
        }
    }
}

#[test]
fn masks_agree_with_level_set_membership() {
    let seq = CoefficientSequence::harmonic();
    let dec = run("x1 * (3 - x1)", "grid1d:0:3:513", 30);
    let sets = level_sets(&seq, 30, &dec.sup_value_exact()).unwrap();
    for i in 0..dec.samples() {
        let v = exact(dec.values()[i]);
        for level in &sets.levels {
            assert_eq!(dec.mask_bit(level.index, i), level.within.contains(&v), "sample {i}, level {}", level.index);
        }
    }
}

#[test]
fn fibers_share_mask_columns() {
    // |x1| is symmetric on a symmetric grid: x and -x are exact negatives.
    let dec = run("abs(x1) + 0.3", "grid1d:-2:2:401", 60);
    for i in 0..dec.samples() {
        let j = dec.samples() - 1 - i;
        assert_eq!(dec.values()[i], dec.values()[j]);
        for n in 1..=60 {
            assert_eq!(dec.mask_bit(n, i), dec.mask_bit(n, j));
        }
    }
}

// Fragile exactly when some bit differs between the value and one of its
// double neighbours, by the rational recursion.
#[test]
fn fragility_matches_neighbour_oracle() {
    let seq = CoefficientSequence::harmonic();
    let dec = run("min(x1, 1.2)", "grid1d:0:3:257", 60);
    let coeffs = seq.values(60);
    let fragile = dec.fragile_samples();
    assert!(!fragile.is_empty());
    for i in 0..dec.samples() {
        let v = dec.values()[i];
        let bits = expand_with(&exact(v), &coeffs).bits;
        let differs = v > 0.0
            && [next_down(v), next_up(v)]
                .iter()
                .any(|&w| expand_with(&exact(w), &coeffs).bits != bits);
        assert_eq!(fragile.contains(&i), differs, "sample {i}, v = {v}");
    }
}

#[test]
fn constant_one() {
    let dec = run("1", "grid2d:0:1:9x9", 4);
    let rep = error_report(&dec);
    assert_eq!(rep.levels[3].sup_error_exact, rat(1, 6));
    assert!((rep.levels[3].mean_error - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn clamped_identity_reaches_two_hundredths() {
    let dec = run("min(x1, 1.2)", "grid1d:0:3:1025", 200);
    let rep = error_report(&dec);
    let sups = rep.sup_errors();
    assert!(sups.windows(2).all(|w| w[1] <= w[0]));
    let n = rep.levels_to_reach(&rat(1, 50)).expect("N(0.02) is finite");
    assert!(n <= 200);
    // Frozen from a run of the implementation.
    assert_eq!(n, 50);
    let bound = dec.derived_bound();
    assert!(sups.iter().zip(&bound).all(|(s, b)| s <= b));
    // At n = 200 every k < n term a_k - (a_{k+1} + .. + a_n) is below a_n,
    // and M - P_n < 0, so the bound is a_200 itself.
    assert_eq!(bound[199], rat(1, 200));
    assert!(verify_invariants(&dec).is_empty());
}

#[test]
fn scheduling_does_not_change_results() {
    let go = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let dec = run("sqrt(x1^2 + x2^2)", "grid2d:-1:1:65x65", 80);
                let rep = error_report(&dec);
                ((1..=80).map(|n| dec.mask_words(n).to_vec()).collect::<Vec<_>>(), rep.to_csv())
            })
    };
    assert_eq!(go(1), go(4));
}

#[test]
fn finite_metric_domain() {
    let json = r#"{"labels":["a","b","c","d"],"coords":[[0],[1],[2],[2.5]],
        "distances":[[0,1,2,2.5],[1,0,1,1.5],[2,1,0,0.5],[2.5,1.5,0.5,0]]}"#;
    let d = SampledDomain::from_descriptor("finite:m.json", |_| Ok(json.to_owned())).unwrap();
    let dec = decompose(&d, &parse("x1 / 2", 1).unwrap(), &CoefficientSequence::harmonic(), 20).unwrap();
    assert!(verify_invariants(&dec).is_empty());
    assert!(error_report(&dec).levels[0].sup_error_exact > Rational::zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn correct_builds_have_no_violations(values in prop::collection::vec(0.0f64..6.0, 2..40), levels in 2usize..80) {
        let d = SampledDomain::grid1d(rat(0, 1), rat(1, 1), values.len()).unwrap();
        let dec = Decomposition::from_values(d, parse("x1", 1).unwrap(), &CoefficientSequence::harmonic(), levels, values);
        prop_assert!(verify_invariants(&dec).is_empty());
        let rep = error_report(&dec);
        prop_assert!(rep.sup_errors().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn every_single_flip_is_detected(
        values in prop::collection::vec(0.0f64..4.0, 2..24),
        levels in 2usize..60,
        pick in any::<(usize, usize)>(),
    ) {
        let d = SampledDomain::grid1d(rat(0, 1), rat(1, 1), values.len()).unwrap();
        let mut dec = Decomposition::from_values(d, parse("x1", 1).unwrap(), &CoefficientSequence::harmonic(), levels, values);
        let (level, sample) = (1 + pick.0 % levels, pick.1 % dec.samples());
        dec.flip_bit(level, sample);
        let v = verify_invariants(&dec);
        prop_assert!(v.at_sample(sample).count() > 0);
    }
}
