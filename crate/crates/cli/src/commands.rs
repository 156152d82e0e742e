use std::fs;
use std::io::Write as _;
use std::path::Path;

use clap::Args;
use openapprox::baseline;
use openapprox::coefficients::{parse_sequence, parse_sequence_spec, validate, validate_values, SequenceSpec, ValidationVerdict};
use openapprox::decomposition::{
    decompose as build, default_epsilons, error_report, mask_file_name, mask_pgm, summary_json, verify_invariants,
    DecomposeError, Decomposition,
};
use openapprox::domain::SampledDomain;
use openapprox::dsl::{parse, FunctionAst};
use openapprox::rational::{format_rational, parse_rational, Rational};
use openapprox::scalar::{audit as run_audit, AuditError, AuditOptions};
use openapprox::semicontinuity::{
    dini_harness, level_lsc_verdicts, refinement_study, Method, Mode, SemicontinuityVerdict, Verdict,
    DEFAULT_DEFECT_THRESHOLD,
};
use openapprox::smooth::{minorize, SmoothError};
use openapprox::CoefficientSequence;
use serde_json::{json, Value};

use crate::Global;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

type Outcome = Result<(), Failure>;

fn config(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

fn violation(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 3,
        message: message.to_string(),
    }
}

#[derive(Args, Debug, serde::Serialize)]
pub struct FnArgs {
    /// Expression in x1..xd, e.g. `min(x1, 1.2)`.
    #[arg(long = "fn", value_name = "EXPR", allow_hyphen_values = true)]
    #[serde(rename = "fn")]
    pub function: String,
    /// `grid1d:<lo>:<hi>:<n>`, `grid2d:<lo>:<hi>:<n>x<m>` or `finite:<path.json>`.
    #[arg(long, default_value = "grid1d:0:3:1025")]
    pub domain: String,
    /// `harmonic`, `power:p=<q>`, `scaled-harmonic:c=<q>`, `explicit:<list>[+<tail>]` or JSON.
    #[arg(long, default_value = "harmonic")]
    pub coeffs: String,
    /// Number of greedy levels N.
    #[arg(long, default_value_t = 200)]
    pub levels: usize,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub base: FnArgs,
    /// `a..b` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "1..12")]
    pub dyadic_levels: String,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct AuditArgs {
    /// `harmonic`, `power:p=<q>`, `scaled-harmonic:c=<q>`, `explicit:<list>[+<tail>]` or JSON.
    #[arg(long, default_value = "harmonic")]
    pub coeffs: String,
    #[arg(long, default_value_t = 20)]
    pub levels: usize,
    /// Upper end of the audited value range [0, vmax], a rational.
    #[arg(long, default_value = "10")]
    pub vmax: String,
    /// Random rationals cross-checked against the pointwise recursion.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct ValidateArgs {
    /// `harmonic`, `power:p=<q>`, `scaled-harmonic:c=<q>`, `explicit:<list>[+<tail>]` or JSON.
    #[arg(long)]
    pub coeffs: String,
    /// Terms scanned for positivity, monotonicity and partial sums.
    #[arg(long, default_value_t = 100)]
    pub horizon: u64,
}

fn meta(command: &str, global: &Global, args: &impl serde::Serialize) -> Value {
    json!({
        "tool": "openapprox",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": {"args": args, "global": global},
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| config(format!("cannot write {}: {e}", path.display())))
}

/// JSON goes to `--out-json`, or stdout when `primary` and no path is set.
fn emit_json(global: &Global, value: &Value, primary: bool) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| config(e.to_string()))?;
    text.push('\n');
    match &global.out_json {
        Some(p) => write_bytes(p, text.as_bytes()),
        None if primary => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
        None => Ok(()),
    }
}

fn emit_csv(global: &Global, csv: &str, primary: bool) -> Outcome {
    match &global.out_csv {
        Some(p) => write_bytes(p, csv.as_bytes()),
        None if primary => {
            let _ = std::io::stdout().write_all(csv.as_bytes());
            Ok(())
        }
        None => Ok(()),
    }
}

fn load_domain(text: &str) -> Result<SampledDomain, Failure> {
    SampledDomain::from_descriptor(text, |p| fs::read_to_string(p)).map_err(config)
}

fn load_function(text: &str, domain: &SampledDomain) -> Result<FunctionAst, Failure> {
    parse(text, domain.dim()).map_err(|e| {
        let caret = e
            .offset()
            .map(|o| format!("\n  {text}\n  {}^", " ".repeat(text[..o.min(text.len())].chars().count())))
            .unwrap_or_default();
        config(format!("--fn: {e}{caret}"))
    })
}

fn load_sequence(text: &str) -> Result<CoefficientSequence, Failure> {
    parse_sequence(text).map_err(|e| config(format!("--coeffs: {e}")))
}

fn decomposition_failure(e: DecomposeError) -> Failure {
    let code = if e.is_negative_value() { 4 } else { 2 };
    Failure {
        code,
        message: e.to_string(),
    }
}

struct Setup {
    domain: SampledDomain,
    function: FunctionAst,
    seq: CoefficientSequence,
}

fn setup(a: &FnArgs) -> Result<Setup, Failure> {
    if a.levels == 0 {
        return Err(config("--levels must be at least 1"));
    }
    let domain = load_domain(&a.domain)?;
    let function = load_function(&a.function, &domain)?;
    let seq = load_sequence(&a.coeffs)?;
    Ok(Setup { domain, function, seq })
}

/// Exact `1_{G_n}` verdicts on the sampled range, with notes on why they
/// are missing when they are.
fn exact_verdicts(dec: &Decomposition, notes: &mut Vec<String>) -> Option<Vec<SemicontinuityVerdict>> {
    let holds = || SemicontinuityVerdict {
        mode: Mode::Lsc,
        method: Method::ExactScalar,
        verdict: Verdict::Holds,
        witnesses: Vec::new(),
    };
    if matches!(dec.domain(), SampledDomain::Finite { .. }) {
        notes.push("finite metric space: every subset is open; openness audit skipped".into());
        return Some(vec![holds(); dec.levels()]);
    }
    let sup = dec.sup_value_exact();
    if sup <= Rational::from_integer(0.into()) {
        notes.push("f vanishes on the samples: every G_n is empty".into());
        return Some(vec![holds(); dec.levels()]);
    }
    match level_lsc_verdicts(dec.sequence(), dec.levels(), &sup) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("exact level sets unavailable: {e}"));
            None
        }
    }
}

/// Multi-scale defect study of `S_k` at the first level whose exact verdict
/// fails.
fn sampled_study(
    setup: &Setup,
    dec: &Decomposition,
    verdicts: Option<&[SemicontinuityVerdict]>,
) -> Value {
    let (Some(grid), Some(v)) = (dec.domain().as_grid(), verdicts) else {
        return Value::Null;
    };
    let Some(k) = v.iter().position(|v| v.verdict == Verdict::Fails).map(|i| i + 1) else {
        return Value::Null;
    };
    let partial_sums = |g: &openapprox::domain::Grid| -> Vec<f64> {
        let d = SampledDomain::Grid(g.clone());
        match build(&d, &setup.function, &setup.seq, k) {
            Ok(dd) => (0..dd.samples())
                .map(|i| {
                    (1..=k)
                        .filter(|&n| dd.mask_bit(n, i))
                        .map(|n| openapprox::rational::to_f64_floor(&dd.table().coefficients()[n - 1]))
                        .sum()
                })
                .collect(),
            Err(_) => vec![f64::NAN; g.len()],
        }
    };
    match refinement_study(grid, partial_sums, Mode::Lsc, DEFAULT_DEFECT_THRESHOLD) {
        Ok(study) => json!({
            "partial_sum_level": k,
            "verdict": study.verdict(),
            "method": study.method,
            "flag_counts": study.scales.iter().map(|s| s.flagged).collect::<Vec<_>>(),
            "persistent_samples": study.persistent.len(),
            "persistent_first": study.persistent.iter().take(16).collect::<Vec<_>>(),
        }),
        Err(e) => json!({"partial_sum_level": k, "error": e.to_string()}),
    }
}

pub fn decompose(global: &Global, a: &FnArgs) -> Outcome {
    let s = setup(a)?;
    for &m in &global.masks {
        if m == 0 || m > a.levels {
            return Err(config(format!("--masks: level {m} is outside 1..={}", a.levels)));
        }
    }
    let dec = build(&s.domain, &s.function, &s.seq, a.levels).map_err(decomposition_failure)?;
    let report = error_report(&dec);
    let violations = verify_invariants(&dec);
    let mut notes = Vec::new();
    let verdicts = exact_verdicts(&dec, &mut notes);
    let dini = match a.levels {
        1 => Err("dini harness needs at least 2 levels".to_owned()),
        _ => dini_harness(&dec, &report, &default_epsilons(), verdicts.as_deref()).map_err(|e| e.to_string()),
    };
    let non_holding: Vec<Value> = verdicts
        .iter()
        .flatten()
        .enumerate()
        .filter(|(_, v)| v.verdict != Verdict::Holds)
        .map(|(k, v)| json!({"level": k + 1, "verdict": v.verdict, "witnesses": v.witnesses}))
        .collect();
    let out = json!({
        "meta": meta("decompose", global, a),
        "summary": summary_json(&dec, &report, &violations),
        "dini": match &dini {
            Ok(d) => serde_json::to_value(d).unwrap_or(Value::Null),
            Err(e) => json!({"error": e}),
        },
        "semicontinuity": {
            "exact": {
                "available": verdicts.is_some(),
                "levels_not_holding": non_holding.len(),
                "first_not_holding": non_holding.iter().take(5).collect::<Vec<_>>(),
            },
            "sampled": sampled_study(&s, &dec, verdicts.as_deref()),
            "notes": notes,
        },
        "violations_first": violations.violations.iter().take(20).collect::<Vec<_>>(),
    });
    emit_json(global, &out, true)?;
    emit_csv(global, &report.to_csv(), false)?;
    if !global.masks.is_empty() {
        if s.domain.as_grid().is_some_and(|g| g.dim() == 2) {
            fs::create_dir_all(&global.mask_dir).map_err(|e| config(format!("--mask-dir: {e}")))?;
            for &m in &global.masks {
                let bytes = mask_pgm(&dec, m).expect("2D grid");
                write_bytes(&global.mask_dir.join(mask_file_name(m)), &bytes)?;
            }
        } else {
            eprintln!("warning: --masks applies to 2D grids only; no images written");
        }
    }
    if violations.total > 0 {
        return Err(violation(format!("{} invariant violation(s)", violations.total)));
    }
    if let Err(e) = dini {
        if a.levels > 1 {
            return Err(violation(e));
        }
    }
    Ok(())
}

pub fn audit(global: &Global, a: &AuditArgs) -> Outcome {
    if a.levels == 0 {
        return Err(config("--levels must be at least 1"));
    }
    let seq = load_sequence(&a.coeffs)?;
    let vmax = parse_rational(&a.vmax).map_err(|e| config(format!("--vmax: {e}")))?;
    let options = AuditOptions {
        samples: a.samples,
        seed: global.seed,
        ..AuditOptions::default()
    };
    let report = match run_audit(&seq, a.levels, &vmax, &options) {
        Ok(r) => r,
        Err(e @ AuditError::CrossValidationMismatch { .. }) => return Err(violation(e)),
        Err(e) => return Err(config(e)),
    };
    let out = json!({"meta": meta("audit", global, a), "report": report});
    emit_json(global, &out, true)
}

fn parse_levels(text: &str) -> Result<Vec<u32>, Failure> {
    let bad = || config(format!("--dyadic-levels: expected a..b or a list, got {text:?}"));
    let levels: Vec<u32> = match text.split_once("..") {
        Some((a, b)) => {
            let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            (a..=b).collect()
        }
        None => text
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?,
    };
    if levels.iter().any(|&n| n > 1000) {
        return Err(config("--dyadic-levels: levels above 1000 are not supported"));
    }
    Ok(levels)
}

pub fn compare(global: &Global, a: &CompareArgs) -> Outcome {
    let levels = parse_levels(&a.dyadic_levels)?;
    let s = setup(&a.base)?;
    let dec = build(&s.domain, &s.function, &s.seq, a.base.levels).map_err(decomposition_failure)?;
    let report = error_report(&dec);
    let cmp = baseline::compare(&dec, &report, &levels);
    emit_csv(global, &cmp.to_csv(), true)?;
    let out = json!({
        "meta": meta("compare", global, a),
        "cap": cmp.cap,
        "structure": cmp.structure,
        "greedy_levels": a.base.levels,
        "dyadic_levels": levels,
        "sup_f": format_rational(&dec.sup_value_exact()),
    });
    emit_json(global, &out, false)
}

pub fn smooth(global: &Global, a: &FnArgs) -> Outcome {
    let s = setup(a)?;
    if s.domain.as_grid().is_none() {
        return Err(config("smooth needs a grid domain"));
    }
    let dec = build(&s.domain, &s.function, &s.seq, a.levels).map_err(decomposition_failure)?;
    let minorant = match minorize(&dec) {
        Ok(m) => m,
        Err(e @ SmoothError::DominationViolation { .. }) => return Err(violation(e)),
        Err(e) => return Err(config(e)),
    };
    let out = json!({
        "meta": meta("smooth", global, a),
        "bumps": minorant.bumps,
        "residual": minorant.residual,
        "notes": [
            "bumps sit in f^-1(interior U_j), a certified-open subset of G_j; one bump per level",
            "the bump series is a finite sum of bounded terms, hence uniformly convergent on the box; sup_residual is the uniform gap f - sum B_j over samples",
        ],
    });
    emit_json(global, &out, true)
}

pub fn validate_seq(global: &Global, a: &ValidateArgs) -> Outcome {
    if a.horizon == 0 {
        return Err(config("--horizon must be at least 1"));
    }
    let report = match parse_sequence_spec(&a.coeffs).map_err(|e| config(format!("--coeffs: {e}")))? {
        SequenceSpec::Sequence(seq) => validate(&seq, a.horizon),
        SequenceSpec::BarePrefix(values) => validate_values(&values),
    };
    let verdict = report.verdict;
    let out = json!({"meta": meta("validate-seq", global, a), "report": report});
    emit_json(global, &out, true)?;
    if verdict == ValidationVerdict::Fail {
        return Err(violation("sequence failed validation"));
    }
    Ok(())
}
