//! Finite unions of rational intervals with open/closed endpoint flags.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub lo_closed: bool,
    /// `None` is `+∞` (always open).
    pub hi: Option<Rational>,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: Rational, lo_closed: bool, hi: Option<Rational>, hi_closed: bool) -> Self {
        let hi_closed = hi_closed && hi.is_some();
        Self {
            lo,
            lo_closed,
            hi,
            hi_closed,
        }
    }

    /// `(lo, hi]`, the shape produced by the strict greedy test.
    pub fn open_closed(lo: Rational, hi: Rational) -> Self {
        Self::new(lo, false, Some(hi), true)
    }

    pub fn open(lo: Rational, hi: Option<Rational>) -> Self {
        Self::new(lo, false, hi, false)
    }

    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Self::new(lo, true, Some(hi), true)
    }

    pub fn ray_open(lo: Rational) -> Self {
        Self::new(lo, false, None, false)
    }

    pub fn is_empty(&self) -> bool {
        match &self.hi {
            None => false,
            Some(hi) => match self.lo.cmp(hi) {
                Ordering::Less => false,
                Ordering::Equal => !(self.lo_closed && self.hi_closed),
                Ordering::Greater => true,
            },
        }
    }

    pub fn contains(&self, v: &Rational) -> bool {
        let above_lo = match v.cmp(&self.lo) {
            Ordering::Greater => true,
            Ordering::Equal => self.lo_closed,
            Ordering::Less => false,
        };
        let below_hi = match &self.hi {
            None => true,
            Some(hi) => match v.cmp(hi) {
                Ordering::Less => true,
                Ordering::Equal => self.hi_closed,
                Ordering::Greater => false,
            },
        };
        above_lo && below_hi
    }

    /// True when `self` ends exactly where `next` starts and the shared point
    /// is covered by at least one of them (or both overlap).
    fn joins(&self, next: &Interval) -> bool {
        match &self.hi {
            None => true,
            Some(hi) => match hi.cmp(&next.lo) {
                Ordering::Greater => true,
                Ordering::Equal => self.hi_closed || next.lo_closed,
                Ordering::Less => false,
            },
        }
    }

    fn extend_to(&mut self, other: &Interval) {
        let replace = match (&self.hi, &other.hi) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(a), Some(b)) => b > a || (b == a && other.hi_closed),
        };
        if replace {
            self.hi = other.hi.clone();
            self.hi_closed = other.hi_closed;
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed { '[' } else { '(' };
        match &self.hi {
            Some(hi) => write!(
                f,
                "{open}{}..{}{}",
                format_rational(&self.lo),
                format_rational(hi),
                if self.hi_closed { ']' } else { ')' }
            ),
            None => write!(f, "{open}{}..+inf)", format_rational(&self.lo)),
        }
    }
}

/// Sorted, pairwise disjoint, non-adjacent intervals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RationalIntervalSet {
    intervals: Vec<Interval>,
}

impl RationalIntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Normalizes an arbitrary collection: drops empty members, sorts, and
    /// merges overlapping or touching intervals.
    pub fn from_intervals(items: impl IntoIterator<Item = Interval>) -> Self {
        let mut items: Vec<Interval> = items.into_iter().filter(|i| !i.is_empty()).collect();
        items.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| b.lo_closed.cmp(&a.lo_closed)));
        let mut out: Vec<Interval> = Vec::with_capacity(items.len());
        for item in items {
            match out.last_mut() {
                Some(last) if last.joins(&item) => last.extend_to(&item),
                _ => out.push(item),
            }
        }
        Self { intervals: out }
    }

    /// Appends intervals known to be sorted; touching members are merged.
    pub(crate) fn push_sorted(&mut self, item: Interval) {
        if item.is_empty() {
            return;
        }
        match self.intervals.last_mut() {
            Some(last) if last.joins(&item) => last.extend_to(&item),
            _ => self.intervals.push(item),
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, v: &Rational) -> bool {
        // First interval whose lower end is not below v, then step back.
        let idx = self.intervals.partition_point(|i| &i.lo < v || (&i.lo == v && i.lo_closed));
        idx > 0 && self.intervals[idx - 1].contains(v)
    }

    pub fn intersect_interval(&self, window: &Interval) -> Self {
        Self::from_intervals(self.intervals.iter().filter_map(|i| intersect(i, window)))
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_intervals(self.intervals.iter().chain(other.intervals.iter()).cloned())
    }

    /// Interior relative to `[0, +∞)`: closed endpoints are opened, except a
    /// closed lower end at 0, which is interior in the subspace topology.
    pub fn interior(&self) -> Self {
        Self::from_intervals(self.intervals.iter().map(|i| {
            let keep_zero = i.lo_closed && i.lo.is_zero();
            Interval::new(i.lo.clone(), keep_zero, i.hi.clone(), false)
        }))
    }

    /// Every endpoint that belongs to the set but is not interior to it
    /// relative to `[0, +∞)`.
    pub fn boundary_witnesses(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        for i in &self.intervals {
            if i.lo_closed && i.lo.is_positive() {
                out.push(i.lo.clone());
            }
            if i.hi_closed {
                if let Some(hi) = &i.hi {
                    if out.last() != Some(hi) {
                        out.push(hi.clone());
                    }
                }
            }
        }
        out
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.intervals.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for RationalIntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("{}");
        }
        let parts = self.to_strings();
        f.write_str(&parts.join(" U "))
    }
}

impl Serialize for RationalIntervalSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

pub fn intersect(a: &Interval, b: &Interval) -> Option<Interval> {
    let (lo, lo_closed) = match a.lo.cmp(&b.lo) {
        Ordering::Greater => (a.lo.clone(), a.lo_closed),
        Ordering::Less => (b.lo.clone(), b.lo_closed),
        Ordering::Equal => (a.lo.clone(), a.lo_closed && b.lo_closed),
    };
    let (hi, hi_closed) = match (&a.hi, &b.hi) {
        (None, None) => (None, false),
        (Some(h), None) => (Some(h.clone()), a.hi_closed),
        (None, Some(h)) => (Some(h.clone()), b.hi_closed),
        (Some(x), Some(y)) => match x.cmp(y) {
            Ordering::Less => (Some(x.clone()), a.hi_closed),
            Ordering::Greater => (Some(y.clone()), b.hi_closed),
            Ordering::Equal => (Some(x.clone()), a.hi_closed && b.hi_closed),
        },
    };
    let out = Interval::new(lo, lo_closed, hi, hi_closed);
    (!out.is_empty()).then_some(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpennessVerdict {
    Open,
    NotOpen,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpennessCheck {
    pub verdict: OpennessVerdict,
    /// Closed endpoints `v*`; for any continuous `f` with `v*` interior to
    /// its range, the preimage of the set is not open.
    pub witnesses: Vec<Rational>,
}

impl OpennessCheck {
    pub fn is_open(&self) -> bool {
        self.verdict == OpennessVerdict::Open
    }
}

/// Openness of `set` as a subset of `[0, +∞)`.
pub fn check_openness(set: &RationalIntervalSet) -> OpennessCheck {
    let witnesses = set.boundary_witnesses();
    OpennessCheck {
        verdict: if witnesses.is_empty() {
            OpennessVerdict::Open
        } else {
            OpennessVerdict::NotOpen
        },
        witnesses,
    }
}
