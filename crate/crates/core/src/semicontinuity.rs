//! Semicontinuity verdicts and the Dini-style convergence harness.
//!
//! Two tiers: exact verdicts for `1_{f⁻¹(U)}` from the interval structure of
//! `U`, and a multi-scale defect heuristic on sampled data that only ever
//! flags candidates.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::CoefficientSequence;
use crate::decomposition::{Decomposition, ErrorReport};
use crate::domain::Grid;
use crate::rational::{format_rational, Rational};
use crate::scalar::interval::check_openness;
use crate::scalar::{level_sets, LevelSetError, RationalIntervalSet};

pub const DEFAULT_DEFECT_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Lsc,
    Usc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactScalar,
    SampledHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SemicontinuityVerdict {
    pub mode: Mode,
    pub method: Method,
    pub verdict: Verdict,
    pub witnesses: Vec<String>,
}

/// `1_{f⁻¹(U)}` is l.s.c. for every continuous `f` exactly when `U` is open
/// in `[0, ∞)`; otherwise the closed endpoints are the witnesses.
pub fn scalar_lsc_verdict(u: &RationalIntervalSet) -> SemicontinuityVerdict {
    let check = check_openness(u);
    SemicontinuityVerdict {
        mode: Mode::Lsc,
        method: Method::ExactScalar,
        verdict: if check.is_open() { Verdict::Holds } else { Verdict::Fails },
        witnesses: check.witnesses.iter().map(format_rational).collect(),
    }
}

/// Exact verdicts for `1_{G_n}`, `n = 1..N`, for functions with range inside
/// `[0, vmax]`. Levels past the analysed depth are inconclusive.
pub fn level_lsc_verdicts(
    seq: &CoefficientSequence,
    levels: usize,
    vmax: &Rational,
) -> Result<Vec<SemicontinuityVerdict>, LevelSetError> {
    let sets = level_sets(seq, levels, vmax)?;
    let mut out: Vec<_> = sets.levels.iter().map(|l| scalar_lsc_verdict(&l.extended())).collect();
    out.resize(
        levels,
        SemicontinuityVerdict {
            mode: Mode::Lsc,
            method: Method::ExactScalar,
            verdict: Verdict::Inconclusive,
            witnesses: Vec::new(),
        },
    );
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DefectError {
    #[error("radius {radius} is below the mesh {mesh}")]
    RadiusBelowMesh { radius: f64, mesh: f64 },
    #[error("expected {expected} values, got {found}")]
    LengthMismatch { expected: usize, found: usize },
}

/// lsc: `g(x) - min g` over the punctured ball of `radius`; usc: `max g - g(x)`.
/// Positive entries mark candidate failures.
pub fn sampled_defect(grid: &Grid, values: &[f64], mode: Mode, radius: f64) -> Result<Vec<f64>, DefectError> {
    if values.len() != grid.len() {
        return Err(DefectError::LengthMismatch {
            expected: grid.len(),
            found: values.len(),
        });
    }
    // Every axis must have a neighbour inside the ball.
    let mesh = grid.mesh();
    if !(radius >= mesh * (1.0 - 1e-12)) {
        return Err(DefectError::RadiusBelowMesh { radius, mesh });
    }
    let axes = grid.axes();
    let reach: Vec<isize> = axes
        .iter()
        .map(|a| (radius / a.mesh() * (1.0 + 1e-9)).floor() as isize)
        .collect();
    let shape = grid.shape();
    let offsets: Vec<Vec<isize>> = match reach[..] {
        [r] => (-r..=r).filter(|&d| d != 0).map(|d| vec![d]).collect(),
        [rx, ry] => {
            let (hx, hy) = (axes[0].mesh(), axes[1].mesh());
            let r2 = radius * radius * (1.0 + 1e-9);
            (-ry..=ry)
                .flat_map(|dy| (-rx..=rx).map(move |dx| vec![dx, dy]))
                .filter(|d| d.iter().any(|&c| c != 0))
                .filter(|d| {
                    let (x, y) = (d[0] as f64 * hx, d[1] as f64 * hy);
                    x * x + y * y <= r2
                })
                .collect()
        }
        _ => unreachable!(),
    };
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| {
            let here = grid.multi_index(i);
            let mut extreme: Option<f64> = None;
            'next: for d in &offsets {
                let mut idx = Vec::with_capacity(d.len());
                for ((&c, &off), &n) in here.iter().zip(d).zip(&shape) {
                    let j = c as isize + off;
                    if j < 0 || j >= n as isize {
                        continue 'next;
                    }
                    idx.push(j as usize);
                }
                let g = values[grid.index_of(&idx)];
                extreme = Some(match (extreme, mode) {
                    (None, _) => g,
                    (Some(e), Mode::Lsc) => e.min(g),
                    (Some(e), Mode::Usc) => e.max(g),
                });
            }
            match (extreme, mode) {
                (None, _) => 0.0,
                (Some(e), Mode::Lsc) => values[i] - e,
                (Some(e), Mode::Usc) => e - values[i],
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusFlags {
    pub radius: f64,
    pub flagged: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementStudy {
    pub mode: Mode,
    pub method: Method,
    pub threshold: f64,
    /// Flag counts on the working mesh at radii `h, 2h, 4h`.
    pub scales: Vec<RadiusFlags>,
    /// Working-mesh samples flagged at radius `h` whose counterpart on the
    /// once-refined mesh is flagged at radius `h/2` as well.
    pub persistent: Vec<usize>,
    pub persistent_points: Vec<Vec<f64>>,
}

impl RefinementStudy {
    /// Heuristic tier only: never `Holds`/`Fails`.
    pub fn verdict(&self) -> Verdict {
        Verdict::Inconclusive
    }
}

/// Multi-scale defect study of `g`, evaluated on `grid` and on its
/// refinement.
pub fn refinement_study(
    grid: &Grid,
    g: impl Fn(&Grid) -> Vec<f64>,
    mode: Mode,
    threshold: f64,
) -> Result<RefinementStudy, DefectError> {
    let h = grid.mesh();
    let coarse = g(grid);
    let mut scales = Vec::new();
    let mut base = Vec::new();
    for k in [1.0, 2.0, 4.0] {
        let d = sampled_defect(grid, &coarse, mode, k * h)?;
        if k == 1.0 {
            base = d.iter().map(|&x| x > threshold).collect::<Vec<bool>>();
        }
        scales.push(RadiusFlags {
            radius: k * h,
            flagged: d.iter().filter(|&&x| x > threshold).count(),
        });
    }
    let fine_grid = grid.refined();
    let fine = g(&fine_grid);
    let fine_defect = sampled_defect(&fine_grid, &fine, mode, fine_grid.mesh())?;
    let persistent: Vec<usize> = (0..grid.len())
        .filter(|&i| base[i])
        .filter(|&i| {
            let idx: Vec<usize> = grid.multi_index(i).iter().map(|c| 2 * c).collect();
            fine_defect[fine_grid.index_of(&idx)] > threshold
        })
        .collect();
    Ok(RefinementStudy {
        mode,
        method: Method::SampledHeuristic,
        threshold,
        scales,
        persistent_points: persistent.iter().map(|&i| grid.point(i)).collect(),
        persistent,
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiniError {
    #[error("error increased at sample {sample}, level {level}")]
    MonotonicityViolation { sample: usize, level: usize },
    #[error("sup error increased at level {level}")]
    SupCurveViolation { level: usize },
    #[error("at least 2 levels are required")]
    TooFewLevels,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiniReport {
    /// `e_{n+1} <= e_n` at every sample and level.
    pub monotone: bool,
    pub sup_monotone: bool,
    #[serde(rename = "N_eps")]
    pub n_eps: BTreeMap<String, Option<usize>>,
    /// Levels `n` for which `U_1..U_n` are all open on the sampled range, so
    /// `f - S_n` is certified u.s.c. for every continuous `f`.
    pub usc_certified_levels: Vec<usize>,
    /// Sup error at or below the derived uniform bound at every level.
    pub within_derived_bound: bool,
    pub notes: Vec<String>,
}

pub fn dini_harness(
    dec: &Decomposition,
    report: &ErrorReport,
    epsilons: &[Rational],
    verdicts: Option<&[SemicontinuityVerdict]>,
) -> Result<DiniReport, DiniError> {
    if dec.levels() < 2 {
        return Err(DiniError::TooFewLevels);
    }
    let first_bad = (0..dec.samples())
        .into_par_iter()
        .filter_map(|i| {
            let mut prev: Option<BigInt> = None;
            dec.remainders_scaled(i).into_iter().enumerate().find_map(|(k, r)| {
                let bad = prev.as_ref().is_some_and(|p| &r > p);
                prev = Some(r);
                bad.then_some((i, k + 1))
            })
        })
        .min();
    if let Some((sample, level)) = first_bad {
        return Err(DiniError::MonotonicityViolation { sample, level });
    }
    let sups = report.sup_errors();
    if let Some(k) = sups.windows(2).position(|w| w[1] > w[0]) {
        return Err(DiniError::SupCurveViolation { level: k + 2 });
    }

    let bound = dec.derived_bound();
    let over: Vec<usize> = sups
        .iter()
        .zip(&bound)
        .enumerate()
        .filter(|(_, (s, b))| s > b)
        .map(|(k, _)| k + 1)
        .collect();

    let mut notes = Vec::new();
    let usc_certified_levels = match verdicts {
        Some(v) => {
            let k = v.iter().take_while(|v| v.verdict == Verdict::Holds).count();
            if let Some(bad) = v.iter().position(|v| v.verdict != Verdict::Holds) {
                let w = &v[bad].witnesses;
                notes.push(format!(
                    "U_{} is not certified open on the sampled range (witnesses: {}); the u.s.c. hypothesis of the Dini route is not certified from level {} on",
                    bad + 1,
                    if w.is_empty() { "none computed".to_owned() } else { w.join(", ") },
                    bad + 1
                ));
            }
            (1..=k).collect()
        }
        None => {
            notes.push("no exact level-set verdicts available; the Dini route is not certified at any level".into());
            Vec::new()
        }
    };
    if over.is_empty() {
        notes.push("uniform convergence is certified by the derived bound, which holds at every level".into());
    } else {
        notes.push(format!("sup error exceeds the derived bound at levels {over:?}"));
    }
    Ok(DiniReport {
        monotone: true,
        sup_monotone: true,
        n_eps: epsilons
            .iter()
            .map(|e| (format_rational(e), report.levels_to_reach(e)))
            .collect(),
        usc_certified_levels,
        within_derived_bound: over.is_empty(),
        notes,
    })
}
