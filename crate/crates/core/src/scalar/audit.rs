use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::expand::expand_with;
use super::levels::{level_sets_with_cap, LevelSetError, LevelSets, LevelSummary, DEFAULT_PIECE_CAP};
use crate::coefficients::CoefficientSequence;
use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone)]
pub struct AuditOptions {
    pub samples: usize,
    pub seed: u64,
    pub piece_cap: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            piece_cap: DEFAULT_PIECE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuditError {
    #[error(transparent)]
    LevelSets(#[from] LevelSetError),
    #[error("cross-validation mismatch at v = {v}, level {level}: pointwise bit {pointwise}, setwise {setwise}")]
    CrossValidationMismatch {
        v: String,
        level: usize,
        pointwise: bool,
        setwise: bool,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub random_samples: usize,
    pub structural_samples: usize,
    pub mismatches: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OpennessAuditReport {
    pub sequence: Value,
    pub levels_requested: usize,
    pub levels_analysed: usize,
    pub vmax: String,
    pub first_non_open_level: Option<usize>,
    pub levels: Vec<LevelSummary>,
    pub profile_pieces: usize,
    pub tail_value: String,
    pub cross_validation: CrossValidation,
    pub warnings: Vec<String>,
}

/// Random rationals `k/d` in `[0, vmax]` with `d <= 4096`.
fn random_rationals(vmax: &Rational, count: usize, seed: u64) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vmax_f = vmax.to_f64().unwrap_or(1.0);
    (0..count)
        .map(|_| {
            let d: i64 = rng.gen_range(1..=4096);
            let top = (vmax_f * d as f64).floor().max(0.0) as i64;
            let k: i64 = rng.gen_range(0..=top);
            let r = Rational::new(BigInt::from(k), BigInt::from(d));
            r.min(vmax.clone())
        })
        .collect()
}

/// Pointwise recursion vs setwise membership. Returns the first mismatch.
pub fn cross_validate(
    sets: &LevelSets,
    probes: &[Rational],
) -> Result<(), AuditError> {
    let coeffs: Vec<Rational> = sets.levels.iter().map(|l| l.coefficient.clone()).collect();
    let mismatch = probes.par_iter().find_map_first(|v| {
        let trace = expand_with(v, &coeffs);
        trace.bits.iter().enumerate().find_map(|(i, bit)| {
            let setwise = sets.levels[i].within.contains(v);
            (setwise != *bit).then(|| AuditError::CrossValidationMismatch {
                v: format_rational(v),
                level: i + 1,
                pointwise: *bit,
                setwise,
            })
        })
    });
    match mismatch {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Exact level sets, per-level openness verdicts and a pointwise cross-check.
pub fn audit(
    seq: &CoefficientSequence,
    levels: usize,
    vmax: &Rational,
    options: &AuditOptions,
) -> Result<OpennessAuditReport, AuditError> {
    let sets = level_sets_with_cap(seq, levels, vmax, options.piece_cap)?;
    let random = random_rationals(vmax, options.samples, options.seed);
    let mut structural = sets.profile.breakpoints();
    structural.extend(sets.profile.midpoints());
    cross_validate(&sets, &random)?;
    cross_validate(&sets, &structural)?;

    let summaries: Vec<LevelSummary> = sets.levels.iter().map(LevelSummary::from).collect();
    Ok(OpennessAuditReport {
        sequence: seq.descriptor(),
        levels_requested: levels,
        levels_analysed: sets.levels.len(),
        vmax: format_rational(vmax),
        first_non_open_level: summaries.iter().find(|l| !l.open).map(|l| l.index),
        levels: summaries,
        profile_pieces: sets.profile.len(),
        tail_value: format_rational(&sets.tail_value),
        cross_validation: CrossValidation {
            random_samples: random.len(),
            structural_samples: structural.len(),
            mismatches: 0,
        },
        warnings: sets.warnings,
    })
}
