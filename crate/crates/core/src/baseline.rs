//! The textbook dyadic simple-function approximation
//! `φ_n(v) = min(2⁻ⁿ⌊2ⁿv⌋, 2ⁿ)`, for side-by-side comparison.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::decomposition::{Decomposition, ErrorReport};
use crate::rational::{ldexp, Rational};

pub const CAP_NOTE: &str = "dyadic cap: phi_n(v) = 2^n for v > 2^n (not n)";
pub const STRUCTURE_NOTE: &str = "dyadic pieces are preimages of half-open intervals [k/2^n, (k+1)/2^n), not open in general; greedy pieces are preimages of the audited level sets U_n";

/// `φ_n(v)`; exact for every finite double (scaling by `2ⁿ` and `floor` do
/// not round).
pub fn dyadic_value(v: f64, n: u32) -> f64 {
    assert!(v >= 0.0, "dyadic approximation needs v >= 0");
    let scale = ldexp(1.0, n as i64);
    (ldexp(v, n as i64).floor() / scale).min(scale)
}

pub fn dyadic_value_exact(v: &Rational, n: u32) -> Rational {
    let scale = BigInt::from(1) << n;
    let floor = (v.numer() * &scale).div_floor(v.denom());
    Rational::new(floor, scale.clone()).min(Rational::from_integer(scale))
}

#[derive(Debug, Clone, Serialize)]
pub struct DyadicApprox {
    pub level: u32,
    pub values: Vec<f64>,
}

pub fn dyadic_approx(values: &[f64], n: u32) -> DyadicApprox {
    DyadicApprox {
        level: n,
        values: values.par_iter().map(|&v| dyadic_value(v, n)).collect(),
    }
}

/// `max_i (v_i - φ_n(v_i))`.
pub fn dyadic_sup_error(values: &[f64], n: u32) -> f64 {
    values
        .par_iter()
        .map(|&v| v - dyadic_value(v, n))
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub level: usize,
    pub greedy_sup_error: Option<f64>,
    pub dyadic_sup_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub cap: &'static str,
    pub structure: &'static str,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    /// `level,greedy_sup_error,dyadic_sup_error`; a cell is empty where the
    /// method was not run at that level.
    pub fn to_csv(&self) -> String {
        let cell = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        let mut out = String::from("level,greedy_sup_error,dyadic_sup_error\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.level, cell(r.greedy_sup_error), cell(r.dyadic_sup_error));
        }
        out
    }
}

pub fn compare(dec: &Decomposition, report: &ErrorReport, dyadic_levels: &[u32]) -> ComparisonReport {
    let levels: BTreeSet<usize> = (1..=dec.levels())
        .chain(dyadic_levels.iter().map(|&n| n as usize))
        .collect();
    let dyadic: BTreeSet<u32> = dyadic_levels.iter().copied().collect();
    let rows = levels
        .into_iter()
        .map(|level| ComparisonRow {
            level,
            greedy_sup_error: report.levels.get(level.wrapping_sub(1)).map(|l| l.sup_error),
            dyadic_sup_error: dyadic
                .contains(&(level as u32))
                .then(|| dyadic_sup_error(dec.values(), level as u32)),
        })
        .collect();
    ComparisonReport {
        cap: CAP_NOTE,
        structure: STRUCTURE_NOTE,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientSequence;
    use crate::decomposition::{decompose, error_report};
    use crate::domain::SampledDomain;
    use crate::dsl::parse;
    use crate::rational::{from_f64_exact, int, rat};
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(dyadic_value(0.0, 7), 0.0);
        assert_eq!(dyadic_value(0.7, 2), 0.5);
        assert_eq!(dyadic_value(1.2, 3), 1.125);
        assert_eq!(dyadic_value(5.0, 2), 4.0);
        assert_eq!(dyadic_value(1.0, 0), 1.0);
        assert_eq!(dyadic_value_exact(&rat(6, 5), 3), rat(9, 8));
        assert_eq!(dyadic_value_exact(&int(9), 3), int(8));
    }

    #[test]
    fn comparison_rows() {
        let d = SampledDomain::from_descriptor("grid1d:0:3:65", |_| unreachable!()).unwrap();
        let dec = decompose(&d, &parse("1", 1).unwrap(), &CoefficientSequence::harmonic(), 4).unwrap();
        let rep = error_report(&dec);
        let cmp = compare(&dec, &rep, &[0, 2, 6]);
        let levels: Vec<usize> = cmp.rows.iter().map(|r| r.level).collect();
        assert_eq!(levels, vec![0, 1, 2, 3, 4, 6]);
        assert_eq!(cmp.rows[4].greedy_sup_error, Some(1.0 / 6.0));
        assert!(cmp.rows.iter().filter_map(|r| r.dyadic_sup_error).all(|e| e == 0.0));
        let csv = cmp.to_csv();
        assert!(csv.starts_with("level,greedy_sup_error,dyadic_sup_error\n0,,0e0\n"));
        assert!(csv.contains("\n6,,0e0\n"));
    }

    proptest! {
        #[test]
        fn float_matches_exact(v in 0.0f64..100.0, n in 0u32..40) {
            let exact = dyadic_value_exact(&from_f64_exact(v).unwrap(), n);
            prop_assert_eq!(from_f64_exact(dyadic_value(v, n)).unwrap(), exact);
        }

        #[test]
        fn refinement_is_monotone(v in 0.0f64..1e6, n in 0u32..60) {
            let (a, b) = (dyadic_value(v, n), dyadic_value(v, n + 1));
            prop_assert!(a <= b && b <= v);
            if v <= ldexp(1.0, n as i64) {
                prop_assert!(v - a <= ldexp(1.0, -(n as i64)));
            }
        }
    }
}
