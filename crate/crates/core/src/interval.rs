//! Finite unions of closed integer intervals.

use std::fmt;

use serde::Serialize;

use crate::expr::CompareOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Interval {
    pub min: i64,
    pub max: i64,
}

impl Interval {
    pub fn new(min: i64, max: i64) -> Self {
        debug_assert!(min <= max);
        Interval { min, max }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.min <= v && v <= self.max
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.min, self.max)
    }
}

/// Sorted, disjoint, non-adjacent intervals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn full() -> Self {
        IntervalSet::range(i64::MIN, i64::MAX)
    }

    pub fn range(min: i64, max: i64) -> Self {
        if min > max {
            IntervalSet::empty()
        } else {
            IntervalSet {
                parts: vec![Interval::new(min, max)],
            }
        }
    }

    pub fn point(v: i64) -> Self {
        IntervalSet::range(v, v)
    }

    /// The set of integers `x` with `x <op> value`.
    pub fn from_compare(op: CompareOp, value: i64) -> Self {
        match op {
            CompareOp::Eq => IntervalSet::point(value),
            CompareOp::Ne => IntervalSet::point(value).complement(),
            CompareOp::Lt => match value.checked_sub(1) {
                Some(hi) => IntervalSet::range(i64::MIN, hi),
                None => IntervalSet::empty(),
            },
            CompareOp::Le => IntervalSet::range(i64::MIN, value),
            CompareOp::Gt => match value.checked_add(1) {
                Some(lo) => IntervalSet::range(lo, i64::MAX),
                None => IntervalSet::empty(),
            },
            CompareOp::Ge => IntervalSet::range(value, i64::MAX),
        }
    }

    fn normalise(mut parts: Vec<Interval>) -> Self {
        parts.sort();
        let mut out: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            if let Some(last) = out.last_mut() {
                // merge overlapping or adjacent
                if last.max == i64::MAX || p.min <= last.max + 1 {
                    last.max = last.max.max(p.max);
                    continue;
                }
            }
            out.push(p);
        }
        IntervalSet { parts: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, v: i64) -> bool {
        self.parts.iter().any(|p| p.contains(v))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut parts = self.parts.clone();
        parts.extend_from_slice(&other.parts);
        IntervalSet::normalise(parts)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let a = self.parts[i];
            let b = other.parts[j];
            let lo = a.min.max(b.min);
            let hi = a.max.min(b.max);
            if lo <= hi {
                out.push(Interval::new(lo, hi));
            }
            if a.max < b.max {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { parts: out }
    }

    pub fn complement(&self) -> IntervalSet {
        let mut out = Vec::new();
        let mut next = Some(i64::MIN);
        for p in &self.parts {
            if let Some(lo) = next {
                if lo < p.min {
                    out.push(Interval::new(lo, p.min - 1));
                }
            }
            next = p.max.checked_add(1);
        }
        if let Some(lo) = next {
            out.push(Interval::new(lo, i64::MAX));
        }
        IntervalSet { parts: out }
    }

    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        self.intersect(&other.complement())
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("∅");
        }
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}
