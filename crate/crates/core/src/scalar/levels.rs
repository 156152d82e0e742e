//! Set-level lift of the greedy recursion.
//!
//! Membership of `x` in `G_n` depends only on `v = f(x)`, so `G_n = f⁻¹(U_n)`
//! with `U_n = {v : v > a_n + s_{n-1}(v)}`. Starting from the profile
//! `s_0 ≡ 0` on `[0, vmax]`, each level splits every constant piece at its
//! threshold `a_n + c` and raises the part above it by `a_n`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::expand::right_limit_bits;
use super::interval::{check_openness, Interval, OpennessCheck, RationalIntervalSet};
use crate::coefficients::CoefficientSequence;
use crate::rational::{format_rational, Rational};

pub const DEFAULT_PIECE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LevelSetError {
    #[error("level {level}: partition has {pieces} pieces, above the cap of {cap}")]
    PieceBudgetExceeded { level: usize, pieces: usize, cap: usize },
    #[error("exact level sets need an exactly rational sequence ({family} terms are approximations)")]
    InexactSequence { family: &'static str },
    #[error("vmax must be positive")]
    NonPositiveVmax,
    #[error("at least one level is required")]
    NoLevels,
}

/// Piece of the scalar profile, in integer units of `1/den`.
#[derive(Debug, Clone)]
struct Piece {
    lo: BigInt,
    lo_closed: bool,
    hi: BigInt,
    hi_closed: bool,
    value: BigInt,
}

impl Piece {
    fn is_empty(&self) -> bool {
        match self.lo.cmp(&self.hi) {
            Ordering::Less => false,
            Ordering::Equal => !(self.lo_closed && self.hi_closed),
            Ordering::Greater => true,
        }
    }

    /// `(self ∩ (-∞, t], self ∩ (t, ∞))`.
    fn split(self, t: &BigInt) -> (Option<Piece>, Option<Piece>) {
        if t < &self.lo {
            return (None, Some(self));
        }
        if t >= &self.hi {
            return (Some(self), None);
        }
        let below = Piece {
            hi: t.clone(),
            hi_closed: true,
            ..self.clone()
        };
        let above = Piece {
            lo: t.clone(),
            lo_closed: false,
            ..self
        };
        (
            (!below.is_empty()).then_some(below),
            (!above.is_empty()).then_some(above),
        )
    }
}

/// `s_N` on `[0, vmax]`: piecewise constant, a subset sum of `a_1..a_N` on
/// each piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseConstantProfile {
    pieces: Vec<(Interval, Rational)>,
}

impl PiecewiseConstantProfile {
    pub fn pieces(&self) -> &[(Interval, Rational)] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn value_at(&self, v: &Rational) -> Option<&Rational> {
        let idx = self
            .pieces
            .partition_point(|(iv, _)| &iv.lo < v || (&iv.lo == v && iv.lo_closed));
        idx.checked_sub(1)
            .map(|i| &self.pieces[i])
            .filter(|(iv, _)| iv.contains(v))
            .map(|(_, value)| value)
    }

    /// Distinct breakpoints in increasing order.
    pub fn breakpoints(&self) -> Vec<Rational> {
        let mut out: Vec<Rational> = Vec::with_capacity(self.pieces.len() + 1);
        for (iv, _) in &self.pieces {
            for p in [Some(&iv.lo), iv.hi.as_ref()].into_iter().flatten() {
                if out.last() != Some(p) {
                    out.push(p.clone());
                }
            }
        }
        out
    }

    /// A point strictly inside each nondegenerate piece.
    pub fn midpoints(&self) -> Vec<Rational> {
        self.pieces
            .iter()
            .filter_map(|(iv, _)| iv.hi.as_ref().filter(|hi| *hi > &iv.lo).map(|hi| (&iv.lo + hi) / BigInt::from(2)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSet {
    pub index: usize,
    pub coefficient: Rational,
    /// `U_n ∩ [0, vmax]`.
    pub within: RationalIntervalSet,
    /// `U_n` contains `(vmax, vmax + δ)` for small `δ`.
    pub continues_above: bool,
    vmax: Rational,
}

impl LevelSet {
    /// `U_n ∩ [0, vmax]`, plus `(vmax, ∞)` when `U_n` continues past `vmax`.
    /// Agrees with `U_n` on a neighbourhood of every point of `[0, vmax]`,
    /// which is all that openness on `[0, vmax]` depends on.
    pub fn extended(&self) -> RationalIntervalSet {
        if self.continues_above {
            self.within
                .union(&RationalIntervalSet::from_intervals([Interval::ray_open(self.vmax.clone())]))
        } else {
            self.within.clone()
        }
    }

    pub fn openness(&self) -> OpennessCheck {
        check_openness(&self.extended())
    }

    /// Interior of `U_n` restricted to `[0, vmax]`.
    pub fn interior_within(&self) -> RationalIntervalSet {
        let window = Interval::closed(Rational::zero(), self.vmax.clone());
        self.extended().interior().intersect_interval(&window)
    }
}

#[derive(Debug, Clone)]
pub struct LevelSets {
    pub vmax: Rational,
    pub levels: Vec<LevelSet>,
    pub profile: PiecewiseConstantProfile,
    /// `s_N(vmax⁺)`, the profile value just above the analysed window.
    pub tail_value: Rational,
    pub warnings: Vec<String>,
}

impl LevelSets {
    pub fn level(&self, n: usize) -> &LevelSet {
        &self.levels[n - 1]
    }

    pub fn first_non_open(&self) -> Option<usize> {
        self.levels.iter().find(|l| !l.openness().is_open()).map(|l| l.index)
    }
}

pub fn level_sets(
    seq: &CoefficientSequence,
    levels: usize,
    vmax: &Rational,
) -> Result<LevelSets, LevelSetError> {
    level_sets_with_cap(seq, levels, vmax, DEFAULT_PIECE_CAP)
}

pub fn level_sets_with_cap(
    seq: &CoefficientSequence,
    levels: usize,
    vmax: &Rational,
    cap: usize,
) -> Result<LevelSets, LevelSetError> {
    if !seq.is_exact() {
        return Err(LevelSetError::InexactSequence {
            family: seq.family_name(),
        });
    }
    if !vmax.is_positive() {
        return Err(LevelSetError::NonPositiveVmax);
    }
    if levels == 0 {
        return Err(LevelSetError::NoLevels);
    }
    let mut warnings = Vec::new();
    // Terms below 2^-64 * vmax stop the recursion early.
    let floor = vmax / Rational::from_integer(BigInt::one() << 64);
    let mut coeffs = Vec::with_capacity(levels);
    for j in 1..=levels as u64 {
        let a = seq.value(j);
        if a < floor {
            warnings.push(format!(
                "stopped after level {}: a_{j} = {} is below 2^-64 * vmax",
                j - 1,
                format_rational(&a)
            ));
            break;
        }
        coeffs.push(a);
    }
    if coeffs.is_empty() {
        return Err(LevelSetError::NoLevels);
    }

    let den = coeffs
        .iter()
        .fold(vmax.denom().clone(), |acc, a| acc.lcm(a.denom()));
    let scale = |r: &Rational| r.numer() * (&den / r.denom());
    let to_rational = |n: &BigInt| Rational::new(n.clone(), den.clone());
    let vmax_units = scale(vmax);

    let mut pieces = vec![Piece {
        lo: BigInt::zero(),
        lo_closed: true,
        hi: vmax_units,
        hi_closed: true,
        value: BigInt::zero(),
    }];
    let mut out_levels = Vec::with_capacity(coeffs.len());
    let tail_bits = right_limit_bits(vmax, &coeffs);

    for (i, a) in coeffs.iter().enumerate() {
        let a_units = scale(a);
        let mut next: Vec<Piece> = Vec::with_capacity(pieces.len() + 8);
        let mut within = RationalIntervalSet::empty();
        for piece in pieces {
            let threshold = &a_units + &piece.value;
            let (below, above) = piece.split(&threshold);
            if let Some(b) = below {
                push_merged(&mut next, b);
            }
            if let Some(mut up) = above {
                within.push_sorted(Interval::new(
                    to_rational(&up.lo),
                    up.lo_closed,
                    Some(to_rational(&up.hi)),
                    up.hi_closed,
                ));
                up.value += &a_units;
                push_merged(&mut next, up);
            }
        }
        if next.len() > cap {
            return Err(LevelSetError::PieceBudgetExceeded {
                level: i + 1,
                pieces: next.len(),
                cap,
            });
        }
        pieces = next;
        out_levels.push(LevelSet {
            index: i + 1,
            coefficient: a.clone(),
            within,
            continues_above: tail_bits[i],
            vmax: vmax.clone(),
        });
    }

    let tail_value = coeffs
        .iter()
        .zip(&tail_bits)
        .filter(|(_, b)| **b)
        .fold(Rational::zero(), |acc, (a, _)| acc + a);
    let profile = PiecewiseConstantProfile {
        pieces: pieces
            .iter()
            .map(|p| {
                (
                    Interval::new(to_rational(&p.lo), p.lo_closed, Some(to_rational(&p.hi)), p.hi_closed),
                    to_rational(&p.value),
                )
            })
            .collect(),
    };
    Ok(LevelSets {
        vmax: vmax.clone(),
        levels: out_levels,
        profile,
        tail_value,
        warnings,
    })
}

fn push_merged(out: &mut Vec<Piece>, piece: Piece) {
    if let Some(last) = out.last_mut() {
        if last.value == piece.value {
            last.hi = piece.hi;
            last.hi_closed = piece.hi_closed;
            return;
        }
    }
    out.push(piece);
}

/// One row of the JSON audit report.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub index: usize,
    pub coefficient: String,
    pub intervals: Vec<String>,
    pub open: bool,
    pub witnesses: Vec<String>,
    pub continues_above_vmax: bool,
}

impl From<&LevelSet> for LevelSummary {
    fn from(l: &LevelSet) -> Self {
        let check = l.openness();
        LevelSummary {
            index: l.index,
            coefficient: format_rational(&l.coefficient),
            intervals: l.within.to_strings(),
            open: check.is_open(),
            witnesses: check.witnesses.iter().map(format_rational).collect(),
            continues_above_vmax: l.continues_above,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use crate::scalar::expand::expand_with;

    fn harmonic_sets(n: usize, vmax: i64) -> LevelSets {
        level_sets(&CoefficientSequence::harmonic(), n, &int(vmax)).unwrap()
    }

    #[test]
    fn first_level_is_a_superlevel_ray() {
        let ls = harmonic_sets(1, 10);
        assert_eq!(ls.level(1).within.to_strings(), vec!["(1/1..10/1]"]);
        assert!(ls.level(1).continues_above);
        assert!(ls.level(1).openness().is_open());
    }

    // On [0,1] the profile is 0, so v > 1/2; on (1,10] it is 1, so v > 3/2.
    #[test]
    fn second_level() {
        let ls = harmonic_sets(2, 10);
        assert_eq!(ls.level(2).within.to_strings(), vec!["(1/2..1/1]", "(3/2..10/1]"]);
        let check = ls.level(2).openness();
        assert!(!check.is_open());
        assert_eq!(check.witnesses, vec![int(1)]);
        assert_eq!(ls.first_non_open(), Some(2));
    }

    // Profile after level 2: 0 on [0,1/2], 1/2 on (1/2,1], 1 on (1,3/2],
    // 3/2 on (3/2,10]. Thresholds add 1/3 to each.
    #[test]
    fn third_level() {
        let ls = harmonic_sets(3, 10);
        assert_eq!(
            ls.level(3).within.to_strings(),
            vec!["(1/3..1/2]", "(5/6..1/1]", "(4/3..3/2]", "(11/6..10/1]"]
        );
    }

    #[test]
    fn scaled_harmonic_second_level() {
        let seq = CoefficientSequence::scaled_harmonic(rat(1, 2)).unwrap();
        let ls = level_sets(&seq, 2, &int(10)).unwrap();
        assert_eq!(ls.level(2).within.to_strings(), vec!["(1/4..1/2]", "(3/4..10/1]"]);
        assert_eq!(ls.level(2).openness().witnesses, vec![rat(1, 2)]);
    }

    #[test]
    fn truncation_at_a_real_endpoint_is_reported() {
        // vmax = 1 is the closed right end of (1/2, 1] in U_2.
        let ls = harmonic_sets(2, 1);
        assert_eq!(ls.level(2).within.to_strings(), vec!["(1/2..1/1]"]);
        assert!(!ls.level(2).continues_above);
        assert_eq!(ls.level(2).openness().witnesses, vec![int(1)]);
        // U_1 = (1, ∞) is empty inside [0, 1] but starts right above it.
        assert!(ls.level(1).within.is_empty());
        assert!(ls.level(1).continues_above);
        assert!(ls.level(1).openness().is_open());
    }

    #[test]
    fn setwise_agrees_with_pointwise_on_breakpoints_and_midpoints() {
        let ls = level_sets(&CoefficientSequence::harmonic(), 40, &rat(13, 10)).unwrap();
        let coeffs = CoefficientSequence::harmonic().values(40);
        let mut probes = ls.profile.breakpoints();
        probes.extend(ls.profile.midpoints());
        for v in &probes {
            let t = expand_with(v, &coeffs);
            for (n, bit) in t.bits.iter().enumerate() {
                assert_eq!(ls.level(n + 1).within.contains(v), *bit, "v={v} n={}", n + 1);
            }
            assert_eq!(ls.profile.value_at(v), Some(&t.partial_sums[39]));
        }
    }

    #[test]
    fn level_sets_sit_above_their_coefficient() {
        let ls = harmonic_sets(30, 4);
        for l in &ls.levels {
            for iv in l.within.intervals() {
                assert!(iv.lo >= l.coefficient);
                assert!(!(iv.lo == l.coefficient && iv.lo_closed));
            }
        }
    }

    #[test]
    fn piece_cap_is_enforced() {
        let err = level_sets_with_cap(&CoefficientSequence::harmonic(), 50, &int(3), 20).unwrap_err();
        assert!(matches!(err, LevelSetError::PieceBudgetExceeded { cap: 20, .. }));
    }

    #[test]
    fn rejects_inexact_and_bad_inputs() {
        let p = CoefficientSequence::power(rat(1, 2)).unwrap();
        assert!(matches!(level_sets(&p, 3, &int(1)), Err(LevelSetError::InexactSequence { .. })));
        assert!(level_sets(&CoefficientSequence::harmonic(), 3, &int(0)).is_err());
        assert!(level_sets(&CoefficientSequence::harmonic(), 0, &int(1)).is_err());
    }

    #[test]
    fn tiny_terms_stop_early() {
        let seq = CoefficientSequence::explicit(
            vec![int(1), Rational::new(BigInt::one(), BigInt::one() << 70)],
            crate::coefficients::Continuation::Harmonic,
        )
        .unwrap();
        let ls = level_sets(&seq, 5, &int(1)).unwrap();
        assert_eq!(ls.levels.len(), 1);
        assert_eq!(ls.warnings.len(), 1);
    }
}
