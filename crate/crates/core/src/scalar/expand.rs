//! The pointwise greedy recursion on exact rationals.
//!
//! `s_0 = 0`, `b_n = [v > a_n + s_{n-1}]`, `s_n = s_{n-1} + a_n b_n`.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::coefficients::CoefficientSequence;
use crate::rational::{serde_rational, serde_rational_vec, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionTrace {
    #[serde(with = "serde_rational")]
    pub v: Rational,
    pub bits: Vec<bool>,
    #[serde(with = "serde_rational_vec")]
    pub partial_sums: Vec<Rational>,
    /// `e_n = v - s_n`.
    #[serde(with = "serde_rational_vec")]
    pub errors: Vec<Rational>,
}

impl ExpansionTrace {
    pub fn levels(&self) -> usize {
        self.bits.len()
    }

    /// Least `n` (1-based) with `e_n <= eps`.
    pub fn levels_to_reach(&self, eps: &Rational) -> Option<usize> {
        self.errors.iter().position(|e| e <= eps).map(|i| i + 1)
    }
}

pub fn expand_point(v: &Rational, seq: &CoefficientSequence, levels: usize) -> ExpansionTrace {
    expand_with(v, &seq.values(levels))
}

/// [`expand_point`] over precomputed coefficients `a_1..a_N`.
pub fn expand_with(v: &Rational, coeffs: &[Rational]) -> ExpansionTrace {
    assert!(!v.is_negative(), "expansion input must be nonnegative");
    let mut s = Rational::zero();
    let mut bits = Vec::with_capacity(coeffs.len());
    let mut partial_sums = Vec::with_capacity(coeffs.len());
    let mut errors = Vec::with_capacity(coeffs.len());
    for a in coeffs {
        let threshold = a + &s;
        let fire = v > &threshold;
        if fire {
            s = threshold;
        }
        bits.push(fire);
        errors.push(v - &s);
        partial_sums.push(s.clone());
    }
    ExpansionTrace {
        v: v.clone(),
        bits,
        partial_sums,
        errors,
    }
}

/// Membership bits of the right limit `v⁺`: `b_n(v⁺) = [v >= a_n + s_{n-1}(v⁺)]`.
/// `U_n` contains `(v, v + δ)` for small `δ` exactly when this bit is set.
pub fn right_limit_bits(v: &Rational, coeffs: &[Rational]) -> Vec<bool> {
    let mut s = Rational::zero();
    coeffs
        .iter()
        .map(|a| {
            let threshold = a + &s;
            let fire = v >= &threshold;
            if fire {
                s = threshold;
            }
            fire
        })
        .collect()
}

/// Uniform error bound over `{v <= m}` at each level `n = 1..N`:
/// `max(a_n, max_{k<n}(a_k - Σ_{j=k+1}^n a_j), m - Σ_{j=1}^n a_j)`,
/// from unrolling `e_n <= max(a_n, e_{n-1} - a_n)`.
pub fn derived_bound(coeffs: &[Rational], m: &Rational) -> Vec<Rational> {
    let mut out = Vec::with_capacity(coeffs.len());
    let mut prefix = Rational::zero();
    // max_{k<n} (a_k + P_k), where P_k = a_1 + .. + a_k.
    let mut best: Option<Rational> = None;
    for a in coeffs {
        prefix += a;
        let mut bound = a.clone();
        if let Some(b) = &best {
            bound = bound.max(b - &prefix);
        }
        bound = bound.max(m - &prefix);
        out.push(bound);
        let candidate = a + &prefix;
        best = Some(match best {
            Some(b) if b >= candidate => b,
            _ => candidate,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn harmonic(n: usize) -> Vec<Rational> {
        CoefficientSequence::harmonic().values(n)
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let t = expand_point(&int(0), &CoefficientSequence::harmonic(), 5);
        assert_eq!(t.bits, vec![false; 5]);
        assert!(t.partial_sums.iter().all(Zero::is_zero));
    }

    // Hand-unrolled: 1 > 1? no; 1 > 1/2 yes (s=1/2); 1 > 1/3 + 1/2 yes
    // (s=5/6); 1 > 1/4 + 5/6 = 13/12? no.
    #[test]
    fn one_with_harmonic() {
        let t = expand_point(&int(1), &CoefficientSequence::harmonic(), 4);
        assert_eq!(t.bits, vec![false, true, true, false]);
        assert_eq!(t.partial_sums[3], rat(5, 6));
        assert_eq!(t.errors[3], rat(1, 6));
    }

    // 2 > 1 yes (s=1); 2 > 3/2 yes (s=3/2); 2 > 11/6 yes (s=11/6).
    #[test]
    fn two_with_harmonic() {
        let t = expand_point(&int(2), &CoefficientSequence::harmonic(), 3);
        assert_eq!(t.bits, vec![true, true, true]);
        assert_eq!(t.partial_sums[2], rat(11, 6));
        assert_eq!(t.errors[2], rat(1, 6));
    }

    #[test]
    fn right_limit_differs_only_at_closed_ends() {
        let c = harmonic(4);
        // v = 1 is the closed right end of (1/2, 1] in U_2.
        assert_eq!(right_limit_bits(&int(1), &c), vec![true, false, false, false]);
        assert_eq!(right_limit_bits(&rat(7, 10), &c), expand_with(&rat(7, 10), &c).bits);
        // 3/4 = a_4 + s_3 is a closed right end of U_4.
        assert_eq!(right_limit_bits(&rat(3, 4), &c), vec![false, true, false, true]);
    }

    // Brute-force oracle: maximize e_n over a fine rational grid of [0, m].
    #[test]
    fn derived_bound_dominates_brute_force() {
        let c = harmonic(12);
        let m = int(2);
        let bound = derived_bound(&c, &m);
        let mut worst = vec![Rational::zero(); c.len()];
        for k in 0..=2400 {
            let t = expand_with(&rat(k, 1200), &c);
            for (w, e) in worst.iter_mut().zip(&t.errors) {
                if e > w {
                    *w = e.clone();
                }
            }
        }
        for n in 0..c.len() {
            assert!(worst[n] <= bound[n], "level {}: {} > {}", n + 1, worst[n], bound[n]);
        }
        // Level 1: max(a_1, m - a_1) = max(1, 1) = 1.
        assert_eq!(bound[0], int(1));
    }

    #[test]
    fn levels_to_reach() {
        let t = expand_point(&int(1), &CoefficientSequence::harmonic(), 10);
        // e_3..e_6 = 1/6, e_7 = 1/42.
        assert_eq!(t.levels_to_reach(&rat(1, 10)), Some(7));
        assert_eq!(t.levels_to_reach(&rat(1, 6)), Some(3));
        assert_eq!(t.levels_to_reach(&rat(1, 1000)), None);
    }
}
