//! Pairwise structural consistency checks.

use std::collections::BTreeSet;

use serde::Serialize;

use super::ConstraintBase;
use crate::constraint::{ProcessConstraint, RelationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictKind {
    /// One constraint requires an activity the other forbids.
    Contradiction,
    /// Mandatory orderings in opposite directions.
    OrderingCycle,
    /// Structurally identical constraints.
    Duplicate,
}

/// A conflict between two constraints; `first < second` by id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub first: String,
    pub second: String,
    pub detail: String,
}

fn required_labels(c: &ProcessConstraint) -> BTreeSet<&str> {
    c.pattern().consequents().map(|b| b.label.as_str()).collect()
}

/// Mandatory precedences as (earlier label, later label).
fn mandatory_orderings(c: &ProcessConstraint) -> BTreeSet<(&str, &str)> {
    let p = c.pattern();
    p.consequent_relations()
        .filter(|r| matches!(r.kind, RelationKind::EventuallyPrecedes | RelationKind::DirectlyPrecedes))
        .filter_map(|r| Some((p.label_of(&r.left)?, p.label_of(&r.right)?)))
        .collect()
}

fn contradiction(a: &ProcessConstraint, b: &ProcessConstraint) -> Option<String> {
    let shared_anchor = !a.pattern().anchor_labels().is_disjoint(&b.pattern().anchor_labels());
    if !shared_anchor {
        return None;
    }
    let mut clashes: BTreeSet<&str> = BTreeSet::new();
    for (x, y) in [(a, b), (b, a)] {
        let forbidden: BTreeSet<&str> = y.pattern().absences.iter().map(String::as_str).collect();
        clashes.extend(required_labels(x).intersection(&forbidden));
    }
    (!clashes.is_empty()).then(|| {
        format!(
            "required and forbidden: {}",
            clashes.into_iter().collect::<Vec<_>>().join(", ")
        )
    })
}

fn ordering_cycle(a: &ProcessConstraint, b: &ProcessConstraint) -> Option<String> {
    let oa = mandatory_orderings(a);
    let ob = mandatory_orderings(b);
    let cycles: Vec<String> = oa
        .iter()
        .filter(|(x, y)| x != y && ob.contains(&(*y, *x)))
        .map(|(x, y)| format!("{x} before {y} and {y} before {x}"))
        .collect();
    (!cycles.is_empty()).then(|| cycles.join("; "))
}

/// Each conflicting pair is reported once per kind, ordered by (first,
/// second, kind).
pub fn check_consistency(base: &ConstraintBase) -> Vec<Conflict> {
    let all: Vec<&ProcessConstraint> = base.constraints().collect();
    let mut out = Vec::new();
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            if !a.linkage.context.overlaps(&b.linkage.context) {
                continue;
            }
            let (first, second) = if a.id <= b.id { (a, b) } else { (b, a) };
            let mut push = |kind, detail: String| {
                out.push(Conflict {
                    kind,
                    first: first.id.clone(),
                    second: second.id.clone(),
                    detail,
                })
            };
            if let Some(d) = contradiction(first, second) {
                push(ConflictKind::Contradiction, d);
            }
            if let Some(d) = ordering_cycle(first, second) {
                push(ConflictKind::OrderingCycle, d);
            }
            if first.canonical() == second.canonical() {
                push(ConflictKind::Duplicate, "structurally identical".to_string());
            }
        }
    }
    out.sort_by(|x, y| (&x.first, &x.second, x.kind).cmp(&(&y.first, &y.second, y.kind)));
    out
}
