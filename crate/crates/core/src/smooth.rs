//! Smooth nonnegative minorants: one mollifier bump per level, placed in a
//! ball inside the open core `f⁻¹(interior U_n)` of `G_n`.
//!
//! `v` lies in the interior of `U_n` exactly when both `v` and its right
//! limit `v⁺` pass the level-`n` test (`U_n` is a union of `(lo, hi]`
//! pieces), so cores come straight from the [`LevelTable`](crate::scalar::LevelTable).

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::CoefficientSequence;
use crate::decomposition::{decompose, DecomposeError, Decomposition};
use crate::domain::{Grid, SampledDomain};
use crate::dsl::FunctionAst;
use crate::rational::{from_f64_exact, serde_f64_exact, serde_f64_exact_vec, to_f64_floor, Rational};

/// Step in the normalized radius `t` for the boundary smoothness check.
pub const FD_STEP: f64 = 1e-3;
pub const FD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SmoothError {
    #[error("smooth minorants need a 1D or 2D grid domain")]
    NotAGrid,
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error("bumps exceed f at sample {sample} (level {level})")]
    DominationViolation { sample: usize, level: usize },
}

/// Per-level core masks for `n = 1..N`.
pub fn open_cores(dec: &Decomposition) -> Vec<Vec<bool>> {
    let table = dec.table();
    let mut distinct = dec.values().to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let right: Vec<Vec<u64>> = distinct.par_iter().map(|&v| table.expand_right_limit(v)).collect();
    let class: Vec<usize> = dec
        .values()
        .iter()
        .map(|v| distinct.binary_search_by(|d| d.total_cmp(v)).expect("value is present"))
        .collect();
    (1..=dec.levels())
        .into_par_iter()
        .map(|n| {
            let (w, b) = ((n - 1) / 64, (n - 1) % 64);
            class
                .iter()
                .enumerate()
                .map(|(i, &c)| dec.mask_bit(n, i) && right[c][w] >> b & 1 == 1)
                .collect()
        })
        .collect()
}

pub fn open_core(dec: &Decomposition, level: usize) -> Vec<bool> {
    open_cores(dec).swap_remove(level - 1)
}

/// Squared distance transform along one line with sample spacing `h`:
/// `d(p) = min_q (h(p - q))² + f(q)`.
fn edt_1d(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let h2 = h * h;
    let mut v = vec![0usize; n];
    let mut z = vec![0f64; n + 1];
    let mut k: Option<usize> = None;
    let key = |q: usize| f[q] + h2 * (q * q) as f64;
    for q in (0..n).filter(|&q| f[q].is_finite()) {
        let Some(mut top) = k else {
            k = Some(0);
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            continue;
        };
        loop {
            let p = v[top];
            let s = (key(q) - key(p)) / (2.0 * h2 * (q - p) as f64);
            if s <= z[top] && top > 0 {
                top -= 1;
                continue;
            }
            if s <= z[top] {
                // Replaces the only parabola.
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                k = Some(0);
            } else {
                top += 1;
                v[top] = q;
                z[top] = s;
                z[top + 1] = f64::INFINITY;
                k = Some(top);
            }
            break;
        }
    }
    let Some(_) = k else {
        out.fill(f64::INFINITY);
        return;
    };
    let mut j = 0;
    for (p, o) in out.iter_mut().enumerate() {
        while z[j + 1] < p as f64 {
            j += 1;
        }
        let d = (p as f64 - v[j] as f64) * h;
        *o = d * d + f[v[j]];
    }
}

/// Exact Euclidean distance from every sample to the nearest sample outside
/// `mask`, capped by the distance to the box boundary.
pub fn distance_to_complement(mask: &[bool], grid: &Grid) -> Vec<f64> {
    let shape = grid.shape();
    let init: Vec<f64> = mask.iter().map(|&m| if m { f64::INFINITY } else { 0.0 }).collect();
    let squared = match shape[..] {
        [n] => {
            let mut out = vec![0.0; n];
            edt_1d(&init, grid.axes()[0].mesh(), &mut out);
            out
        }
        [nx, ny] => {
            let (hx, hy) = (grid.axes()[0].mesh(), grid.axes()[1].mesh());
            let mut rows = vec![0.0; nx * ny];
            rows.par_chunks_mut(nx)
                .zip(init.par_chunks(nx))
                .for_each(|(out, f)| edt_1d(f, hx, out));
            let cols: Vec<Vec<f64>> = (0..nx)
                .into_par_iter()
                .map(|i| {
                    let f: Vec<f64> = (0..ny).map(|j| rows[j * nx + i]).collect();
                    let mut out = vec![0.0; ny];
                    edt_1d(&f, hy, &mut out);
                    out
                })
                .collect();
            (0..nx * ny).map(|k| cols[k % nx][k / nx]).collect()
        }
        _ => unreachable!(),
    };
    squared
        .iter()
        .enumerate()
        .map(|(i, d2)| d2.sqrt().min(grid.distance_to_boundary(&grid.point(i))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ball {
    #[serde(skip)]
    pub center_index: usize,
    #[serde(with = "serde_f64_exact_vec")]
    pub center: Vec<f64>,
    #[serde(with = "serde_f64_exact")]
    pub radius: f64,
}

/// Largest-distance sample (first in sample order on ties) with radius
/// shrunk by one mesh step; `None` when less than `2h` remains.
pub fn inscribe_ball(mask: &[bool], grid: &Grid) -> Option<Ball> {
    let dist = distance_to_complement(mask, grid);
    let (center_index, &d) = dist
        .iter()
        .enumerate()
        .filter(|(i, _)| mask[*i])
        .fold(None, |best: Option<(usize, &f64)>, (i, d)| match best {
            Some((_, b)) if b >= d => best,
            _ => Some((i, d)),
        })?;
    let h = grid.mesh();
    let radius = d - h;
    (radius >= 2.0 * h).then(|| Ball {
        center_index,
        center: grid.point(center_index),
        radius,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpSpec {
    pub level: usize,
    #[serde(with = "serde_f64_exact_vec")]
    pub center: Vec<f64>,
    #[serde(with = "serde_f64_exact")]
    pub radius: f64,
    #[serde(with = "serde_f64_exact")]
    pub height: f64,
}

/// `exp(1 - 1/(1 - t²))` for `t < 1`, else 0.
pub fn mollifier(t: f64) -> f64 {
    let t = t.abs();
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

impl BumpSpec {
    pub fn distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        // Clamped so rounding in exp cannot push past the height.
        (self.height * mollifier(self.distance(x) / self.radius)).min(self.height)
    }

    /// Largest central-difference directional derivative across the support
    /// boundary, probed along each axis in both directions.
    pub fn boundary_gradient(&self) -> f64 {
        let delta = FD_STEP * self.radius;
        let mut worst = 0.0f64;
        for axis in 0..self.center.len() {
            for sign in [-1.0, 1.0] {
                let at = |t: f64| {
                    let mut p = self.center.clone();
                    p[axis] += sign * t * self.radius;
                    self.value(&p)
                };
                let g = (at(1.0 + FD_STEP) - at(1.0 - FD_STEP)) / (2.0 * delta);
                worst = worst.max(g.abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedLevel {
    pub level: usize,
    pub reason: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// `max_i f(x_i) - Σ_j B_j(x_i)`.
    #[serde(with = "serde_f64_exact")]
    pub sup_residual: f64,
    #[serde(with = "serde_f64_exact")]
    pub mean_residual: f64,
    pub skipped_levels: Vec<SkippedLevel>,
    /// Σ heights `<= Σ_{j<=N} a_j`, so the finite bump series converges
    /// uniformly on the box.
    #[serde(with = "serde_f64_exact")]
    pub height_sum: f64,
    #[serde(with = "serde_f64_exact")]
    pub max_boundary_gradient: f64,
    pub domination_verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Minorant {
    pub bumps: Vec<BumpSpec>,
    pub residual: ResidualReport,
}

impl Minorant {
    pub fn sum_at(&self, x: &[f64]) -> f64 {
        self.bumps.iter().map(|b| b.value(x)).sum()
    }
}

pub fn minorize_function(
    domain: &SampledDomain,
    function: &FunctionAst,
    seq: &CoefficientSequence,
    levels: usize,
) -> Result<Minorant, SmoothError> {
    if domain.as_grid().is_none() {
        return Err(SmoothError::NotAGrid);
    }
    minorize(&decompose(domain, function, seq, levels)?)
}

pub fn minorize(dec: &Decomposition) -> Result<Minorant, SmoothError> {
    let grid = dec.domain().as_grid().ok_or(SmoothError::NotAGrid)?;
    let cores = open_cores(dec);
    let coeffs = dec.table().coefficients();
    let balls: Vec<Option<Ball>> = cores.par_iter().map(|c| inscribe_ball(c, grid)).collect();

    let mut bumps = Vec::new();
    let mut skipped_levels = Vec::new();
    let mut core_of_bump = Vec::new();
    for (k, ball) in balls.into_iter().enumerate() {
        let level = k + 1;
        match ball {
            Some(b) => {
                bumps.push(BumpSpec {
                    level,
                    center: b.center,
                    radius: b.radius,
                    height: to_f64_floor(&coeffs[k]),
                });
                core_of_bump.push(k);
            }
            None => skipped_levels.push(SkippedLevel {
                level,
                reason: if cores[k].iter().any(|&c| c) {
                    "open core admits no ball of radius 2h"
                } else {
                    "open core is empty on the samples"
                },
            }),
        }
    }

    // A sample inside a ball must lie in that level's core, hence in G_j;
    // with B_j <= height <= a_j this gives Σ B_j <= S_N <= f exactly.
    let sums: Vec<Result<f64, SmoothError>> = (0..dec.samples())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let mut total = 0.0;
            let mut exact = Rational::zero();
            for (b, &k) in bumps.iter().zip(&core_of_bump) {
                let v = b.value(&x);
                if v > 0.0 {
                    if !cores[k][i] || !(v <= b.height) {
                        return Err(SmoothError::DominationViolation { sample: i, level: b.level });
                    }
                    total += v;
                    exact += from_f64_exact(v).expect("finite");
                }
            }
            let f = dec.values()[i];
            if total > f && exact > from_f64_exact(f).expect("finite") {
                let level = bumps.iter().rev().find(|b| b.value(&x) > 0.0).map_or(0, |b| b.level);
                return Err(SmoothError::DominationViolation { sample: i, level });
            }
            Ok(total)
        })
        .collect();
    let sums = sums.into_iter().collect::<Result<Vec<_>, _>>()?;

    let residuals: Vec<f64> = dec.values().iter().zip(&sums).map(|(f, s)| (f - s).max(0.0)).collect();
    let sup_residual = residuals.iter().copied().fold(0.0, f64::max);
    // Exact mean, rounded down once.
    let total: Rational = residuals.iter().map(|r| from_f64_exact(*r).expect("finite")).sum();
    let mean_residual = if residuals.is_empty() {
        0.0
    } else {
        to_f64_floor(&(total / BigInt::from(residuals.len())))
    };
    let residual = ResidualReport {
        sup_residual,
        mean_residual,
        skipped_levels,
        height_sum: bumps.iter().map(|b| b.height).sum(),
        max_boundary_gradient: bumps.iter().map(BumpSpec::boundary_gradient).fold(0.0, f64::max),
        domination_verified: true,
    };
    Ok(Minorant { bumps, residual })
}
