//! The greedy recursion applied to every sample of a domain.
//!
//! Values `f(x_i)` are doubles; each one is expanded exactly as the binary
//! rational it is. All per-level quantities (partial sums, errors, bounds)
//! are kept as integers in the [`LevelTable`] unit, so sup errors and
//! invariant checks are exact and do not depend on summation order.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::coefficients::CoefficientSequence;
use crate::domain::SampledDomain;
use crate::dsl::{EvalError, FunctionAst};
use crate::rational::{format_rational, from_f64_exact, rat, Rational};
use crate::scalar::LevelTable;

/// Fixed work unit for parallel reductions; keeps results independent of the
/// worker count.
const CHUNK: usize = 512;
pub const MAX_STORED_VIOLATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecomposeError {
    #[error("sample {sample}: {source}")]
    Eval { sample: usize, source: EvalError },
    #[error("function has {function} variable(s) but the domain has dimension {domain}")]
    DimensionMismatch { function: usize, domain: usize },
    #[error("at least one level is required")]
    NoLevels,
}

impl DecomposeError {
    pub fn is_negative_value(&self) -> bool {
        matches!(self, DecomposeError::Eval { source: EvalError::NegativeValue { .. }, .. })
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    domain: SampledDomain,
    function: FunctionAst,
    seq: CoefficientSequence,
    values: Vec<f64>,
    table: LevelTable,
    /// `masks[n-1]` packs membership of every sample in `G_n`.
    masks: Vec<Vec<u64>>,
    fragile: Vec<usize>,
    sup_index: Option<usize>,
}

fn bit(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

/// Evaluates `f` at every sample; the first failure in sample order wins.
pub fn sample_values(domain: &SampledDomain, function: &FunctionAst) -> Result<Vec<f64>, DecomposeError> {
    if function.dim() != domain.dim() {
        return Err(DecomposeError::DimensionMismatch {
            function: function.dim(),
            domain: domain.dim(),
        });
    }
    let results: Vec<Result<f64, EvalError>> = (0..domain.len())
        .into_par_iter()
        .map(|i| function.evaluate(&domain.point(i)))
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(sample, r)| r.map_err(|source| DecomposeError::Eval { sample, source }))
        .collect()
}

pub fn decompose(
    domain: &SampledDomain,
    function: &FunctionAst,
    seq: &CoefficientSequence,
    levels: usize,
) -> Result<Decomposition, DecomposeError> {
    if levels == 0 {
        return Err(DecomposeError::NoLevels);
    }
    let values = sample_values(domain, function)?;
    Ok(Decomposition::from_values(domain.clone(), function.clone(), seq, levels, values))
}

impl Decomposition {
    /// Builds the decomposition from precomputed sample values.
    pub fn from_values(
        domain: SampledDomain,
        function: FunctionAst,
        seq: &CoefficientSequence,
        levels: usize,
        values: Vec<f64>,
    ) -> Self {
        assert_eq!(values.len(), domain.len());
        assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        let table = LevelTable::new(seq, levels, LevelTable::required_shift(&values));

        // Equal values share a fiber: expand each distinct value once.
        let mut distinct = values.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let expansions: Vec<_> = distinct.par_iter().map(|&v| table.expand(v)).collect();
        let class: Vec<usize> = values
            .iter()
            .map(|v| distinct.binary_search_by(|d| d.total_cmp(v)).expect("value is present"))
            .collect();

        let words = values.len().div_ceil(64);
        let masks: Vec<Vec<u64>> = (1..=levels)
            .into_par_iter()
            .map(|n| {
                let mut m = vec![0u64; words];
                for (i, &c) in class.iter().enumerate() {
                    if expansions[c].bit(n) {
                        m[i / 64] |= 1 << (i % 64);
                    }
                }
                m
            })
            .collect();
        let fragile = class
            .iter()
            .enumerate()
            .filter(|(_, &c)| expansions[c].fragile)
            .map(|(i, _)| i)
            .collect();
        let sup_index = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i);

        Self {
            domain,
            function,
            seq: seq.clone(),
            values,
            table,
            masks,
            fragile,
            sup_index,
        }
    }

    pub fn domain(&self) -> &SampledDomain {
        &self.domain
    }

    pub fn function(&self) -> &FunctionAst {
        &self.function
    }

    pub fn sequence(&self) -> &CoefficientSequence {
        &self.seq
    }

    pub fn levels(&self) -> usize {
        self.masks.len()
    }

    pub fn samples(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn table(&self) -> &LevelTable {
        &self.table
    }

    /// Samples whose value is within one ulp of some threshold.
    pub fn fragile_samples(&self) -> &[usize] {
        &self.fragile
    }

    pub fn sup_value(&self) -> f64 {
        self.sup_index.map_or(0.0, |i| self.values[i])
    }

    pub fn sup_value_exact(&self) -> Rational {
        from_f64_exact(self.sup_value()).expect("finite")
    }

    pub fn mask_words(&self, level: usize) -> &[u64] {
        &self.masks[level - 1]
    }

    pub fn mask_bit(&self, level: usize, sample: usize) -> bool {
        bit(&self.masks[level - 1], sample)
    }

    pub fn mask(&self, level: usize) -> Vec<bool> {
        (0..self.samples()).map(|i| self.mask_bit(level, i)).collect()
    }

    pub fn members(&self, level: usize) -> usize {
        self.masks[level - 1].iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Fault injection: toggles one membership bit.
    pub fn flip_bit(&mut self, level: usize, sample: usize) {
        self.masks[level - 1][sample / 64] ^= 1 << (sample % 64);
    }

    /// `f(x_i) - S_n(x_i)` for `n = 1..N` in table units, following the masks.
    pub fn remainders_scaled(&self, sample: usize) -> Vec<BigInt> {
        let mut r = self.table.scale_value(self.values[sample]);
        (1..=self.levels())
            .map(|n| {
                if self.mask_bit(n, sample) {
                    r -= self.table.scaled_coefficient(n);
                }
                r.clone()
            })
            .collect()
    }

    pub fn partial_sum(&self, sample: usize, level: usize) -> Rational {
        (1..=level)
            .filter(|&n| self.mask_bit(n, sample))
            .map(|n| self.table.coefficients()[n - 1].clone())
            .sum()
    }

    pub fn error(&self, sample: usize, level: usize) -> Rational {
        from_f64_exact(self.values[sample]).expect("finite") - self.partial_sum(sample, level)
    }

    /// Derived uniform bound with `M = max sampled f`, per level.
    pub fn derived_bound(&self) -> Vec<Rational> {
        let m = self.table.scale_value(self.sup_value());
        self.table
            .derived_bound_scaled(&m)
            .iter()
            .map(|b| self.table.unscale(b))
            .collect()
    }

    fn derived_bound_scaled(&self) -> Vec<BigInt> {
        self.table.derived_bound_scaled(&self.table.scale_value(self.sup_value()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelError {
    pub level: usize,
    /// Double-precision rendering of `sup_error_exact` (monotone rounding).
    pub sup_error: f64,
    pub mean_error: f64,
    pub frac_in_g: f64,
    #[serde(skip)]
    pub sup_error_exact: Rational,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonLevel {
    pub eps: String,
    /// Least level with sup error `<= eps`; `None` if not reached.
    pub level: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub samples: usize,
    pub levels: Vec<LevelError>,
    pub n_eps: Vec<EpsilonLevel>,
}

pub fn default_epsilons() -> Vec<Rational> {
    vec![rat(1, 10), rat(1, 100), rat(1, 1000)]
}

impl ErrorReport {
    pub fn sup_errors(&self) -> Vec<Rational> {
        self.levels.iter().map(|l| l.sup_error_exact.clone()).collect()
    }

    pub fn levels_to_reach(&self, eps: &Rational) -> Option<usize> {
        self.levels.iter().find(|l| &l.sup_error_exact <= eps).map(|l| l.level)
    }

    /// `level,sup_error,mean_error,frac_in_G`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,sup_error,mean_error,frac_in_G\n");
        for l in &self.levels {
            let _ = writeln!(out, "{},{:e},{:e},{}", l.level, l.sup_error, l.mean_error, l.frac_in_g);
        }
        out
    }
}

struct ChunkStats {
    sup: Vec<BigInt>,
    sum: Vec<BigInt>,
    members: Vec<usize>,
}

pub fn error_report(dec: &Decomposition) -> ErrorReport {
    error_report_with(dec, &default_epsilons())
}

pub fn error_report_with(dec: &Decomposition, epsilons: &[Rational]) -> ErrorReport {
    let levels = dec.levels();
    let stats: Vec<ChunkStats> = (0..dec.samples())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut s = ChunkStats {
                sup: vec![BigInt::zero(); levels],
                sum: vec![BigInt::zero(); levels],
                members: vec![0; levels],
            };
            for &i in chunk {
                let mut r = dec.table.scale_value(dec.values[i]);
                for n in 1..=levels {
                    if dec.mask_bit(n, i) {
                        r -= dec.table.scaled_coefficient(n);
                        s.members[n - 1] += 1;
                    }
                    if r > s.sup[n - 1] {
                        s.sup[n - 1] = r.clone();
                    }
                    s.sum[n - 1] += &r;
                }
            }
            s
        })
        .collect();

    let count = dec.samples().max(1);
    let rows = (0..levels)
        .map(|k| {
            let sup = stats.iter().map(|s| &s.sup[k]).max().cloned().unwrap_or_default();
            let sum: BigInt = stats.iter().map(|s| &s.sum[k]).sum();
            let members: usize = stats.iter().map(|s| s.members[k]).sum();
            LevelError {
                level: k + 1,
                sup_error: dec.table.to_f64(&sup),
                mean_error: dec.table.to_f64(&sum) / count as f64,
                frac_in_g: members as f64 / count as f64,
                sup_error_exact: dec.table.unscale(&sup),
            }
        })
        .collect::<Vec<_>>();
    let mut report = ErrorReport {
        samples: dec.samples(),
        levels: rows,
        n_eps: Vec::new(),
    };
    report.n_eps = epsilons
        .iter()
        .map(|e| EpsilonLevel {
            eps: format_rational(e),
            level: report.levels_to_reach(e),
        })
        .collect();
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantKind {
    /// `S_n >= S_{n-1}`, i.e. `e_n <= e_{n-1}`.
    Monotone,
    /// `S_n <= f`, strict where `f > 0`.
    Underapproximation,
    /// `f - S_{n-1} <= a_n` wherever `x ∉ G_n`.
    OffSetBound,
    /// `f - S_n <=` the derived uniform bound.
    UniformBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub sample: usize,
    pub level: usize,
    pub kind: InvariantKind,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ViolationList {
    /// First [`MAX_STORED_VIOLATIONS`] in (sample, level) order.
    pub violations: Vec<Violation>,
    pub total: usize,
}

impl ViolationList {
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, kind: InvariantKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub fn at_sample(&self, sample: usize) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.sample == sample)
    }
}

fn check_sample(dec: &Decomposition, i: usize, bounds: &[BigInt], out: &mut Vec<Violation>) {
    let v = dec.table.scale_value(dec.values[i]);
    let positive = v.is_positive();
    let mut r = v;
    for (k, bound) in bounds.iter().enumerate() {
        let n = k + 1;
        let a = dec.table.scaled_coefficient(n);
        let member = dec.mask_bit(n, i);
        let mut push = |kind| out.push(Violation { sample: i, level: n, kind });
        if !member && &r > a {
            push(InvariantKind::OffSetBound);
        }
        let next = if member { &r - a } else { r.clone() };
        if next > r {
            push(InvariantKind::Monotone);
        }
        if next.is_negative() || (positive && next.is_zero()) {
            push(InvariantKind::Underapproximation);
        }
        if &next > bound {
            push(InvariantKind::UniformBound);
        }
        r = next;
    }
}

pub fn verify_invariants(dec: &Decomposition) -> ViolationList {
    let bounds = dec.derived_bound_scaled();
    let per_chunk: Vec<Vec<Violation>> = (0..dec.samples())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut out = Vec::new();
            for &i in chunk {
                check_sample(dec, i, &bounds, &mut out);
            }
            out
        })
        .collect();
    let total = per_chunk.iter().map(Vec::len).sum();
    let violations = per_chunk.into_iter().flatten().take(MAX_STORED_VIOLATIONS).collect();
    ViolationList { violations, total }
}

/// Binary PGM (P5, maxval 255) of one level's mask on a 2D grid; 255 marks
/// members. Row `j` holds samples with the `j`-th `x2` coordinate, lowest
/// first.
pub fn mask_pgm(dec: &Decomposition, level: usize) -> Option<Vec<u8>> {
    let grid = dec.domain.as_grid()?;
    let [nx, ny] = grid.shape()[..] else {
        return None;
    };
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    let words = dec.mask_words(level);
    out.extend((0..nx * ny).map(|i| if bit(words, i) { 255u8 } else { 0 }));
    Some(out)
}

pub fn mask_file_name(level: usize) -> String {
    format!("mask_L{level}.pgm")
}

/// JSON summary of a run: descriptors, N(ε) table, fragile-sample count.
pub fn summary_json(dec: &Decomposition, report: &ErrorReport, violations: &ViolationList) -> Value {
    let n_eps: serde_json::Map<String, Value> = report
        .n_eps
        .iter()
        .map(|e| (e.eps.clone(), e.level.map_or(json!("not reached"), |n| json!(n))))
        .collect();
    let mut notes = vec![Value::from(
        "sup errors are taken over samples; the true sup-norm can exceed them by the modulus of continuity of f over half a mesh step",
    )];
    if matches!(dec.domain, SampledDomain::Finite { .. }) {
        notes.push(Value::from(
            "finite metric space: every subset is open, so no openness audit applies",
        ));
    }
    json!({
        "domain": dec.domain.descriptor(),
        "function": dec.function.to_string(),
        "sequence": dec.seq.descriptor(),
        "levels": dec.levels(),
        "samples": dec.samples(),
        "sup_f": format_rational(&dec.sup_value_exact()),
        "n_eps": n_eps,
        "boundary_fragile_samples": dec.fragile.len(),
        "violations": {
            "total": violations.total,
            "monotone": violations.count(InvariantKind::Monotone),
            "underapproximation": violations.count(InvariantKind::Underapproximation),
            "off_set_bound": violations.count(InvariantKind::OffSetBound),
            "uniform_bound": violations.count(InvariantKind::UniformBound),
        },
        "notes": notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::rational::int;
    use crate::scalar::expand_point;

    fn grid(desc: &str) -> SampledDomain {
        SampledDomain::from_descriptor(desc, |_| unreachable!()).unwrap()
    }

    fn run(f: &str, desc: &str, levels: usize) -> Decomposition {
        let d = grid(desc);
        decompose(&d, &parse(f, d.dim()).unwrap(), &CoefficientSequence::harmonic(), levels).unwrap()
    }

    #[test]
    fn zero_function() {
        let dec = run("0", "grid1d:0:1:33", 10);
        assert!((1..=10).all(|n| dec.members(n) == 0));
        let rep = error_report(&dec);
        assert!(rep.levels.iter().all(|l| l.sup_error_exact.is_zero()));
        assert!(rep.n_eps.iter().all(|e| e.level == Some(1)));
        assert!(verify_invariants(&dec).is_empty());
    }

    #[test]
    fn second_level_of_clamped_identity() {
        let dec = run("min(x1, 1.2)", "grid1d:0:3:1025", 2);
        let grid = dec.domain().as_grid().unwrap();
        for i in 0..dec.samples() {
            let x = grid.point(i)[0];
            assert_eq!(dec.mask_bit(2, i), x > 0.5 && x <= 1.0, "x = {x}");
            assert_eq!(dec.mask_bit(1, i), x > 1.0, "x = {x}");
        }
    }

    #[test]
    fn constant_matches_scalar_trace() {
        let dec = run("1", "grid2d:0:1:5x4", 4);
        let rep = error_report(&dec);
        let trace = expand_point(&int(1), &CoefficientSequence::harmonic(), 4);
        for n in 1..=4 {
            assert!(dec.members(n) == 0 || dec.members(n) == 20);
            assert_eq!(rep.levels[n - 1].sup_error_exact, trace.errors[n - 1]);
        }
        assert_eq!(rep.levels[3].sup_error_exact, rat(1, 6));
    }

    #[test]
    fn single_flips_are_detected() {
        let mut dec = run("min(x1, 1.2)", "grid1d:0:3:129", 30);
        assert!(verify_invariants(&dec).is_empty());
        for (level, sample) in [(1, 100), (2, 30), (5, 0), (30, 128), (7, 64)] {
            dec.flip_bit(level, sample);
            let v = verify_invariants(&dec);
            assert!(v.at_sample(sample).count() > 0, "flip ({level}, {sample}) went unnoticed");
            dec.flip_bit(level, sample);
        }
    }

    #[test]
    fn exports() {
        let dec = run("x1 + x2", "grid2d:0:1:3x2", 3);
        let pgm = mask_pgm(&dec, 1).unwrap();
        assert!(pgm.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(pgm.len(), b"P5\n3 2\n255\n".len() + 6);
        // Values 0, .5, 1, 1, 1.5, 2: only those above a_1 = 1 are in G_1.
        assert_eq!(&pgm[pgm.len() - 6..], &[0, 0, 0, 0, 255, 255]);
        let rep = error_report(&dec);
        let csv = rep.to_csv();
        assert!(csv.starts_with("level,sup_error,mean_error,frac_in_G\n"));
        assert_eq!(csv.lines().count(), 4);
        let s = summary_json(&dec, &rep, &verify_invariants(&dec));
        assert_eq!(s["sup_f"], "2/1");
        assert_eq!(s["violations"]["total"], 0);
        assert_eq!(mask_file_name(7), "mask_L7.pgm");
        assert!(mask_pgm(&run("x1", "grid1d:0:1:4", 2), 1).is_none());
    }

    #[test]
    fn negative_values_propagate() {
        let d = grid("grid1d:0:3:17");
        let err = decompose(&d, &parse("x1 - 2", 1).unwrap(), &CoefficientSequence::harmonic(), 5).unwrap_err();
        assert!(err.is_negative_value());
        assert!(matches!(err, DecomposeError::Eval { sample: 0, .. }));
    }
}
