//! Coefficient sequences `(a_j)`: positive, vanishing, with divergent sum.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::rational::{format_rational, parse_rational, Rational};

/// Fractional bits of the dyadic grid used for non-rational power terms.
/// The stored value is the midpoint of a width `2^-POWER_GRID_BITS`
/// enclosure, so the absolute error is at most `2^-(POWER_GRID_BITS + 1)`.
pub const POWER_GRID_BITS: u32 = 70;

/// Denominator cap for the power exponent; the root extraction works on
/// integers of `POWER_GRID_BITS * den` bits.
pub const MAX_POWER_DENOMINATOR: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SequenceError {
    #[error("illegal parameter for family {family}: {reason}")]
    IllegalFamilyParam { family: &'static str, reason: String },
    #[error("explicit prefix needs a declared continuation family (e.g. `+harmonic`)")]
    MissingContinuation,
    #[error("cannot parse sequence descriptor {text:?}: {reason}")]
    Descriptor { text: String, reason: String },
}

fn illegal(family: &'static str, reason: impl Into<String>) -> SequenceError {
    SequenceError::IllegalFamilyParam {
        family,
        reason: reason.into(),
    }
}

/// Family used as the tail of an explicit prefix. Indices are absolute, so
/// `explicit:1,1/2,1/3+harmonic` is the harmonic sequence itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Continuation {
    Harmonic,
    Power { p: Rational },
    ScaledHarmonic { c: Rational },
    /// `r^(j-1)`; convergent for `r < 1`, so it never satisfies the divergence
    /// hypothesis. Accepted so that such inputs can be rejected by `validate`.
    Geometric { r: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    Harmonic,
    Power { p: Rational },
    ScaledHarmonic { c: Rational },
    ExplicitPrefix {
        prefix: Vec<Rational>,
        continuation: Continuation,
    },
}

/// Which family to build with [`make_sequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Harmonic,
    Power,
    ScaledHarmonic,
    ExplicitPrefix,
}

/// Parameters for [`make_sequence`]; only the fields relevant to the chosen
/// family are read.
#[derive(Debug, Clone, Default)]
pub struct FamilyParams {
    pub p: Option<Rational>,
    pub c: Option<Rational>,
    pub prefix: Vec<Rational>,
    pub continuation: Option<Continuation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientSequence {
    family: Family,
}

pub fn make_sequence(
    kind: FamilyKind,
    params: FamilyParams,
) -> Result<CoefficientSequence, SequenceError> {
    let family = match kind {
        FamilyKind::Harmonic => Family::Harmonic,
        FamilyKind::Power => {
            let p = params.p.ok_or_else(|| illegal("power", "missing exponent p"))?;
            check_power_exponent(&p, true)?;
            Family::Power { p }
        }
        FamilyKind::ScaledHarmonic => {
            let c = params
                .c
                .ok_or_else(|| illegal("scaled-harmonic", "missing scale c"))?;
            if !c.is_positive() {
                return Err(illegal("scaled-harmonic", "scale c must be > 0"));
            }
            Family::ScaledHarmonic { c }
        }
        FamilyKind::ExplicitPrefix => {
            let continuation = params.continuation.ok_or(SequenceError::MissingContinuation)?;
            check_continuation(&continuation)?;
            if params.prefix.is_empty() {
                return Err(illegal("explicit-prefix", "prefix is empty"));
            }
            if let Some(bad) = params.prefix.iter().find(|v| !v.is_positive()) {
                return Err(illegal(
                    "explicit-prefix",
                    format!("prefix value {} is not > 0", format_rational(bad)),
                ));
            }
            Family::ExplicitPrefix {
                prefix: params.prefix,
                continuation,
            }
        }
    };
    Ok(CoefficientSequence { family })
}

fn check_power_exponent(p: &Rational, top_level: bool) -> Result<(), SequenceError> {
    if !p.is_positive() {
        return Err(illegal("power", "p must be > 0 (terms must vanish)"));
    }
    if top_level && p > &Rational::one() {
        return Err(illegal("power", "p must be <= 1 (p-series with p > 1 converges)"));
    }
    let den = p.denom().to_u64().unwrap_or(u64::MAX);
    if den > MAX_POWER_DENOMINATOR {
        return Err(illegal(
            "power",
            format!("denominator of p exceeds {MAX_POWER_DENOMINATOR}"),
        ));
    }
    if p.numer().to_u64().unwrap_or(u64::MAX) > MAX_POWER_DENOMINATOR * 8 {
        return Err(illegal("power", "numerator of p too large"));
    }
    Ok(())
}

fn check_continuation(c: &Continuation) -> Result<(), SequenceError> {
    match c {
        Continuation::Harmonic => Ok(()),
        Continuation::Power { p } => check_power_exponent(p, false),
        Continuation::ScaledHarmonic { c } if c.is_positive() => Ok(()),
        Continuation::ScaledHarmonic { .. } => Err(illegal("scaled-harmonic", "scale c must be > 0")),
        Continuation::Geometric { r } if r.is_positive() => Ok(()),
        Continuation::Geometric { .. } => Err(illegal("geometric", "ratio r must be > 0")),
    }
}

fn harmonic(j: u64) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(j))
}

/// Midpoint of the dyadic enclosure of `j^(-p)`.
fn power_term(j: u64, p: &Rational) -> Rational {
    if p.is_one() {
        return harmonic(j);
    }
    let num = p.numer().to_u32().expect("validated numerator");
    let den = p.denom().to_u32().expect("validated denominator");
    // m = floor(2^K * j^(-num/den)) = floor((2^(K*den) / j^num)^(1/den)).
    let scaled = BigUint::one() << (POWER_GRID_BITS as usize * den as usize);
    let radicand = scaled / num_traits::pow(BigUint::from(j), num as usize);
    let m = radicand.nth_root(den);
    let numer = BigInt::from(m) * 2 + 1;
    Rational::new(numer, BigInt::one() << (POWER_GRID_BITS as usize + 1))
}

fn geometric_term(j: u64, r: &Rational) -> Rational {
    num_traits::pow(r.clone(), (j - 1) as usize)
}

impl Continuation {
    fn value(&self, j: u64) -> Rational {
        match self {
            Continuation::Harmonic => harmonic(j),
            Continuation::Power { p } => power_term(j, p),
            Continuation::ScaledHarmonic { c } => c * harmonic(j),
            Continuation::Geometric { r } => geometric_term(j, r),
        }
    }

    fn is_exact(&self) -> bool {
        match self {
            Continuation::Power { p } => p.is_integer(),
            _ => true,
        }
    }

    /// `Some(true)` when the tail sum provably diverges, `Some(false)` when it
    /// provably converges or the terms do not vanish.
    fn diverges_and_vanishes(&self) -> (bool, &'static str) {
        match self {
            Continuation::Harmonic => (true, "harmonic tail diverges"),
            Continuation::ScaledHarmonic { .. } => (true, "scaled harmonic tail diverges"),
            Continuation::Power { p } if p <= &Rational::one() => (true, "p-series tail with p <= 1 diverges"),
            Continuation::Power { .. } => (false, "p-series tail with p > 1 converges"),
            Continuation::Geometric { r } if r < &Rational::one() => {
                (false, "geometric tail with ratio < 1 converges")
            }
            Continuation::Geometric { .. } => (false, "geometric tail with ratio >= 1 does not vanish"),
        }
    }

    fn descriptor(&self) -> Value {
        match self {
            Continuation::Harmonic => json!({"family": "harmonic", "params": {}}),
            Continuation::Power { p } => json!({"family": "power", "params": power_params(p)}),
            Continuation::ScaledHarmonic { c } => {
                json!({"family": "scaled-harmonic", "params": {"c": format_rational(c)}})
            }
            Continuation::Geometric { r } => {
                json!({"family": "geometric", "params": {"r": format_rational(r)}})
            }
        }
    }
}

fn power_params(p: &Rational) -> Value {
    if p.is_integer() {
        json!({"p": format_rational(p), "precision_bits": Value::Null})
    } else {
        json!({"p": format_rational(p), "precision_bits": POWER_GRID_BITS + 1})
    }
}

impl CoefficientSequence {
    pub fn harmonic() -> Self {
        Self {
            family: Family::Harmonic,
        }
    }

    pub fn scaled_harmonic(c: Rational) -> Result<Self, SequenceError> {
        make_sequence(
            FamilyKind::ScaledHarmonic,
            FamilyParams {
                c: Some(c),
                ..Default::default()
            },
        )
    }

    pub fn power(p: Rational) -> Result<Self, SequenceError> {
        make_sequence(
            FamilyKind::Power,
            FamilyParams {
                p: Some(p),
                ..Default::default()
            },
        )
    }

    pub fn explicit(prefix: Vec<Rational>, continuation: Continuation) -> Result<Self, SequenceError> {
        make_sequence(
            FamilyKind::ExplicitPrefix,
            FamilyParams {
                prefix,
                continuation: Some(continuation),
                ..Default::default()
            },
        )
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Harmonic => "harmonic",
            Family::Power { .. } => "power",
            Family::ScaledHarmonic { .. } => "scaled-harmonic",
            Family::ExplicitPrefix { .. } => "explicit-prefix",
        }
    }

    /// `a_j` for `j >= 1`.
    pub fn value(&self, j: u64) -> Rational {
        assert!(j >= 1, "coefficient indices start at 1");
        match &self.family {
            Family::Harmonic => harmonic(j),
            Family::Power { p } => power_term(j, p),
            Family::ScaledHarmonic { c } => c * harmonic(j),
            Family::ExplicitPrefix {
                prefix,
                continuation,
            } => match prefix.get((j - 1) as usize) {
                Some(v) => v.clone(),
                None => continuation.value(j),
            },
        }
    }

    /// `a_1 ..= a_n`.
    pub fn values(&self, n: usize) -> Vec<Rational> {
        (1..=n as u64).map(|j| self.value(j)).collect()
    }

    /// True when every `value(j)` is the exact term rather than a dyadic
    /// approximation of an irrational one.
    pub fn is_exact(&self) -> bool {
        match &self.family {
            Family::Power { p } => p.is_integer(),
            Family::ExplicitPrefix { continuation, .. } => continuation.is_exact(),
            _ => true,
        }
    }

    /// Absolute error bound of the stored terms, as a number of fractional
    /// bits (`None` for exact families).
    pub fn precision_bits(&self) -> Option<u32> {
        (!self.is_exact()).then_some(POWER_GRID_BITS + 1)
    }

    /// JSON descriptor `{"family": ..., "params": {...}}`.
    pub fn descriptor(&self) -> Value {
        match &self.family {
            Family::Harmonic => json!({"family": "harmonic", "params": {}}),
            Family::Power { p } => json!({"family": "power", "params": power_params(p)}),
            Family::ScaledHarmonic { c } => {
                json!({"family": "scaled-harmonic", "params": {"c": format_rational(c)}})
            }
            Family::ExplicitPrefix {
                prefix,
                continuation,
            } => json!({
                "family": "explicit-prefix",
                "params": {
                    "prefix": prefix.iter().map(format_rational).collect::<Vec<_>>(),
                    "continuation": continuation.descriptor(),
                }
            }),
        }
    }

    pub fn from_descriptor(value: &Value) -> Result<Self, SequenceError> {
        let text = value.to_string();
        let err = |reason: &str| SequenceError::Descriptor {
            text: text.clone(),
            reason: reason.to_owned(),
        };
        let family = value
            .get("family")
            .and_then(Value::as_str)
            .ok_or_else(|| err("missing string field `family`"))?;
        let params = value.get("params").cloned().unwrap_or_else(|| json!({}));
        if !params.is_object() {
            return Err(err("`params` must be an object"));
        }
        let rational_param = |name: &str| -> Result<Option<Rational>, SequenceError> {
            match params.get(name) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => parse_rational(s)
                    .map(Some)
                    .map_err(|e| err(&e.to_string())),
                Some(_) => Err(err("rational parameters must be \"p/q\" strings")),
            }
        };
        match family {
            "harmonic" => Ok(Self::harmonic()),
            "power" => make_sequence(
                FamilyKind::Power,
                FamilyParams {
                    p: rational_param("p")?,
                    ..Default::default()
                },
            ),
            "scaled-harmonic" => make_sequence(
                FamilyKind::ScaledHarmonic,
                FamilyParams {
                    c: rational_param("c")?,
                    ..Default::default()
                },
            ),
            "explicit-prefix" => {
                let prefix = match params.get("prefix") {
                    Some(Value::Array(items)) => items
                        .iter()
                        .map(|v| match v {
                            Value::String(s) => parse_rational(s).map_err(|e| err(&e.to_string())),
                            _ => Err(err("prefix entries must be \"p/q\" strings")),
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                    _ => return Err(err("explicit-prefix needs a `prefix` array")),
                };
                let continuation = match params.get("continuation") {
                    None | Some(Value::Null) => None,
                    Some(c) => Some(continuation_from_descriptor(c).map_err(|e| err(&e.to_string()))?),
                };
                make_sequence(
                    FamilyKind::ExplicitPrefix,
                    FamilyParams {
                        prefix,
                        continuation,
                        ..Default::default()
                    },
                )
            }
            other => Err(err(&format!("unknown family {other:?}"))),
        }
    }
}

fn continuation_from_descriptor(value: &Value) -> Result<Continuation, SequenceError> {
    let family = value.get("family").and_then(Value::as_str).unwrap_or("");
    let param = |name: &str| -> Result<Rational, SequenceError> {
        let s = value
            .get("params")
            .and_then(|p| p.get(name))
            .and_then(Value::as_str)
            .ok_or_else(|| illegal("continuation", format!("missing parameter {name}")))?;
        parse_rational(s).map_err(|e| illegal("continuation", e.to_string()))
    };
    let c = match family {
        "harmonic" => Continuation::Harmonic,
        "power" => Continuation::Power { p: param("p")? },
        "scaled-harmonic" => Continuation::ScaledHarmonic { c: param("c")? },
        "geometric" => Continuation::Geometric { r: param("r")? },
        other => return Err(illegal("continuation", format!("unknown family {other:?}"))),
    };
    check_continuation(&c)?;
    Ok(c)
}

impl Serialize for CoefficientSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.descriptor().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoefficientSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Self::from_descriptor(&v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for CoefficientSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_spec(&self.family))
    }
}

fn format_continuation(c: &Continuation) -> String {
    match c {
        Continuation::Harmonic => "harmonic".into(),
        Continuation::Power { p } => format!("power:p={}", format_rational(p)),
        Continuation::ScaledHarmonic { c } => format!("scaled-harmonic:c={}", format_rational(c)),
        Continuation::Geometric { r } => format!("geometric:r={}", format_rational(r)),
    }
}

fn format_spec(family: &Family) -> String {
    match family {
        Family::Harmonic => "harmonic".into(),
        Family::Power { p } => format!("power:p={}", format_rational(p)),
        Family::ScaledHarmonic { c } => format!("scaled-harmonic:c={}", format_rational(c)),
        Family::ExplicitPrefix {
            prefix,
            continuation,
        } => format!(
            "explicit:{}+{}",
            prefix.iter().map(format_rational).collect::<Vec<_>>().join(","),
            format_continuation(continuation)
        ),
    }
}

/// Result of parsing a `--coeffs` flag: either a full sequence or a bare
/// explicit list without continuation (only usable for heuristic validation).
#[derive(Debug, Clone)]
pub enum SequenceSpec {
    Sequence(CoefficientSequence),
    BarePrefix(Vec<Rational>),
}

/// Parses the compact flag syntax:
///
/// ```text
/// harmonic
/// power:p=1/2
/// scaled-harmonic:c=1/2
/// explicit:1,1/2,1/3+harmonic
/// explicit:1,1/2,1/4+geometric:r=1/2
/// {"family": "...", "params": {...}}
/// ```
pub fn parse_sequence_spec(text: &str) -> Result<SequenceSpec, SequenceError> {
    let t = text.trim();
    let err = |reason: &str| SequenceError::Descriptor {
        text: text.to_owned(),
        reason: reason.to_owned(),
    };
    if t.starts_with('{') {
        let v: Value = serde_json::from_str(t).map_err(|e| err(&e.to_string()))?;
        return match CoefficientSequence::from_descriptor(&v) {
            Ok(s) => Ok(SequenceSpec::Sequence(s)),
            Err(SequenceError::MissingContinuation) => {
                let prefix = v["params"]["prefix"]
                    .as_array()
                    .map(|items| {
                        items
                            .iter()
                            .filter_map(Value::as_str)
                            .filter_map(|s| parse_rational(s).ok())
                            .collect()
                    })
                    .unwrap_or_default();
                Ok(SequenceSpec::BarePrefix(prefix))
            }
            Err(e) => Err(e),
        };
    }
    if let Some(rest) = t.strip_prefix("explicit:") {
        let (list, tail) = match rest.split_once('+') {
            Some((l, c)) => (l, Some(c)),
            None => (rest, None),
        };
        let prefix = list
            .split(',')
            .map(|s| parse_rational(s).map_err(|e| err(&e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        return match tail {
            None => {
                if let Some(bad) = prefix.iter().find(|v| !v.is_positive()) {
                    return Err(illegal(
                        "explicit-prefix",
                        format!("prefix value {} is not > 0", format_rational(bad)),
                    ));
                }
                Ok(SequenceSpec::BarePrefix(prefix))
            }
            Some(c) => {
                let continuation = parse_family_token(c, true)?
                    .ok_or_else(|| err("continuation must be a single family"))?;
                CoefficientSequence::explicit(prefix, continuation).map(SequenceSpec::Sequence)
            }
        };
    }
    let continuation = parse_family_token(t, false)?.ok_or_else(|| err("unknown family"))?;
    let seq = match continuation {
        Continuation::Harmonic => CoefficientSequence::harmonic(),
        Continuation::Power { p } => CoefficientSequence::power(p)?,
        Continuation::ScaledHarmonic { c } => CoefficientSequence::scaled_harmonic(c)?,
        Continuation::Geometric { .. } => {
            return Err(illegal(
                "geometric",
                "only usable as the continuation of an explicit prefix",
            ))
        }
    };
    Ok(SequenceSpec::Sequence(seq))
}

/// Like [`parse_sequence_spec`] but requires a full sequence.
pub fn parse_sequence(text: &str) -> Result<CoefficientSequence, SequenceError> {
    match parse_sequence_spec(text)? {
        SequenceSpec::Sequence(s) => Ok(s),
        SequenceSpec::BarePrefix(_) => Err(SequenceError::MissingContinuation),
    }
}

fn parse_family_token(text: &str, allow_geometric: bool) -> Result<Option<Continuation>, SequenceError> {
    let (name, args) = match text.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (text.trim(), None),
    };
    let arg = |key: &'static str| -> Result<Rational, SequenceError> {
        let a = args.ok_or_else(|| illegal("descriptor", format!("{name} needs {key}=<rational>")))?;
        let value = a
            .strip_prefix(key)
            .and_then(|r| r.trim_start().strip_prefix('='))
            .ok_or_else(|| illegal("descriptor", format!("{name} needs {key}=<rational>")))?;
        parse_rational(value).map_err(|e| illegal("descriptor", e.to_string()))
    };
    let c = match name {
        "harmonic" if args.is_none() => Continuation::Harmonic,
        "power" => Continuation::Power { p: arg("p")? },
        "scaled-harmonic" => Continuation::ScaledHarmonic { c: arg("c")? },
        "geometric" if allow_geometric => Continuation::Geometric { r: arg("r")? },
        _ => return Ok(None),
    };
    check_continuation(&c)?;
    Ok(Some(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationVerdict {
    ProvenByFamily,
    HeuristicPass,
    Fail,
}

/// A certified lower bound of a partial sum, on a dyadic grid.
#[derive(Debug, Clone, Serialize)]
pub struct PartialSumCheckpoint {
    pub n: u64,
    #[serde(with = "crate::rational::serde_rational")]
    pub lower_bound: Rational,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub horizon: u64,
    pub verdict: ValidationVerdict,
    pub positive: bool,
    pub nonincreasing: bool,
    pub trends_to_zero: bool,
    pub partial_sums: Vec<PartialSumCheckpoint>,
    pub notes: Vec<String>,
}

const CHECKPOINT_BITS: usize = 32;

fn dyadic_floor(v: &Rational) -> BigInt {
    (v.numer() << CHECKPOINT_BITS) / v.denom()
}

fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(1u64), |n| n.checked_mul(10))
        .take_while(|&n| n < horizon)
        .collect();
    out.push(horizon);
    out
}

struct HorizonScan {
    positive: bool,
    nonincreasing: bool,
    trends_to_zero: bool,
    partial_sums: Vec<PartialSumCheckpoint>,
}

fn scan(horizon: u64, mut term: impl FnMut(u64) -> Rational) -> HorizonScan {
    let marks = checkpoints(horizon);
    let mut next_mark = marks.iter().peekable();
    let mut positive = true;
    let mut nonincreasing = true;
    let mut first_half_max = Rational::zero();
    let mut second_half_max = Rational::zero();
    let mut prev: Option<Rational> = None;
    let mut acc = BigInt::zero();
    let mut partial_sums = Vec::new();
    for j in 1..=horizon {
        let v = term(j);
        positive &= v.is_positive();
        if let Some(p) = &prev {
            nonincreasing &= &v <= p;
        }
        if 2 * j <= horizon {
            if v > first_half_max {
                first_half_max = v.clone();
            }
        } else if v > second_half_max {
            second_half_max = v.clone();
        }
        acc += dyadic_floor(&v);
        if next_mark.peek() == Some(&&j) {
            next_mark.next();
            partial_sums.push(PartialSumCheckpoint {
                n: j,
                lower_bound: Rational::new(acc.clone(), BigInt::one() << CHECKPOINT_BITS),
            });
        }
        prev = Some(v);
    }
    HorizonScan {
        positive,
        nonincreasing,
        trends_to_zero: horizon < 2 || second_half_max < first_half_max,
        partial_sums,
    }
}

/// Checks the hypotheses over `1..=horizon` and certifies divergence from the
/// declared family where possible.
pub fn validate(seq: &CoefficientSequence, horizon: u64) -> ValidationReport {
    let horizon = horizon.max(1);
    let scanned = scan(horizon, |j| seq.value(j));
    let mut notes = Vec::new();
    let verdict = match &seq.family {
        Family::Harmonic | Family::Power { .. } | Family::ScaledHarmonic { .. } => {
            notes.push(format!("{}: divergence and vanishing hold for the family", seq.family_name()));
            ValidationVerdict::ProvenByFamily
        }
        Family::ExplicitPrefix { continuation, prefix } => {
            let (ok, why) = continuation.diverges_and_vanishes();
            notes.push(format!("tail after {} explicit terms: {why}", prefix.len()));
            if ok {
                ValidationVerdict::ProvenByFamily
            } else {
                ValidationVerdict::Fail
            }
        }
    };
    if !seq.is_exact() {
        notes.push(format!(
            "terms are dyadic approximations with absolute error below 2^-{}",
            POWER_GRID_BITS + 1
        ));
    }
    let verdict = if scanned.positive {
        verdict
    } else {
        notes.push("nonpositive term within horizon".into());
        ValidationVerdict::Fail
    };
    ValidationReport {
        horizon,
        verdict,
        positive: scanned.positive,
        nonincreasing: scanned.nonincreasing,
        trends_to_zero: scanned.trends_to_zero,
        partial_sums: scanned.partial_sums,
        notes,
    }
}

/// Heuristic check of a bare finite list. Divergence cannot be decided
/// from finitely many terms, so the best possible verdict is `HeuristicPass`.
pub fn validate_values(values: &[Rational]) -> ValidationReport {
    let horizon = values.len() as u64;
    let mut notes = vec!["no continuation family declared; divergence is not certified".to_owned()];
    if values.is_empty() {
        notes.push("empty list".into());
        return ValidationReport {
            horizon: 0,
            verdict: ValidationVerdict::Fail,
            positive: false,
            nonincreasing: true,
            trends_to_zero: false,
            partial_sums: Vec::new(),
            notes,
        };
    }
    let scanned = scan(horizon, |j| values[(j - 1) as usize].clone());
    let mut verdict = ValidationVerdict::HeuristicPass;
    if !scanned.positive {
        notes.push("nonpositive term".into());
        verdict = ValidationVerdict::Fail;
    } else if !scanned.trends_to_zero {
        notes.push("terms do not trend to zero".into());
        verdict = ValidationVerdict::Fail;
    } else if let Some(p) = decay_exponent(values) {
        notes.push(format!("estimated decay exponent {p:.3}"));
        if p > 1.05 {
            notes.push("tail decays faster than the harmonic series".into());
            verdict = ValidationVerdict::Fail;
        }
    } else {
        notes.push("too few terms to estimate the decay rate".into());
        verdict = ValidationVerdict::Fail;
    }
    ValidationReport {
        horizon,
        verdict,
        positive: scanned.positive,
        nonincreasing: scanned.nonincreasing,
        trends_to_zero: scanned.trends_to_zero,
        partial_sums: scanned.partial_sums,
        notes,
    }
}

/// Log-log slope of the terms over the second half of the list.
fn decay_exponent(values: &[Rational]) -> Option<f64> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let m = n.div_ceil(2);
    let a_m = values[m - 1].to_f64()?;
    let a_n = values[n - 1].to_f64()?;
    if a_m <= 0.0 || a_n <= 0.0 {
        return None;
    }
    Some(-(a_n.ln() - a_m.ln()) / ((n as f64).ln() - (m as f64).ln()))
}
