//! Interval analysis for constraints gated by a single integer data element.

use super::{ensure_checkable, Status, Verdict, VerifyError, Witness, DEFAULT_LOOP_BOUND};
use crate::constraint::{Condition, ProcessConstraint};
use crate::eval;
use crate::expr::Truth;
use crate::interval::IntervalSet;
use crate::matcher::PathFacts;
use crate::model::{enumerate_paths, DataType, Domain, ExecutionPath, ProcessSchema};

pub fn analyze_data_coverage(c: &ProcessConstraint, s: &ProcessSchema) -> Result<Verdict, VerifyError> {
    analyze_data_coverage_bounded(c, s, DEFAULT_LOOP_BOUND)
}

fn undecidable(msg: impl Into<String>) -> VerifyError {
    VerifyError::NotIntervalDecidable(msg.into())
}

/// Values of `element` admitted by every guard taken on `path`.
fn path_guard_set(path: &ExecutionPath, element: &str) -> Result<IntervalSet, VerifyError> {
    let mut set = IntervalSet::full();
    for g in &path.guards {
        match g.guard.integer_constraint() {
            Some((f, vals)) if f.var.is_none() && f.field == element => set = set.intersect(&vals),
            _ => {
                return Err(undecidable(format!(
                    "guard on {} -> {} is not an interval over {element}",
                    g.from, g.to
                )))
            }
        }
    }
    Ok(set)
}

/// The values of the gating data element for which an instance can take a
/// path on which the structural requirement fails. Their intersection with
/// the values the constraint applies to is reported as interval witnesses.
pub fn analyze_data_coverage_bounded(
    c: &ProcessConstraint,
    s: &ProcessSchema,
    loop_bound: usize,
) -> Result<Verdict, VerifyError> {
    let data = c
        .condition
        .data
        .as_ref()
        .ok_or_else(|| undecidable("constraint has no data condition"))?;
    if !c.condition.time.is_empty() || !c.condition.resource.is_empty() {
        return Err(undecidable("condition has time or resource atoms"));
    }
    let (field, required) = data
        .integer_constraint()
        .ok_or_else(|| undecidable("condition is not a comparison over one integer field"))?;
    if !field.var.as_deref().is_some_and(|v| c.pattern().is_anchor(v)) {
        return Err(undecidable("condition field does not belong to an anchor"));
    }
    let element = s
        .data_element(&field.field)
        .filter(|e| e.data_type == DataType::Integer)
        .ok_or_else(|| undecidable(format!("schema has no integer data element {}", field.field)))?;
    if !s.guard_overlaps().is_empty() {
        return Err(undecidable("xor guards are not provably disjoint"));
    }
    ensure_checkable(c, s)?;

    let mut structural = c.clone();
    structural.condition = Condition::default();
    let mut failing = IntervalSet::empty();
    for path in &enumerate_paths(s, loop_bound)? {
        let facts = PathFacts::new(s, path);
        match eval::evaluate_all(&structural, &facts)?.map(|e| e.truth) {
            None | Some(Truth::True) => {}
            Some(Truth::False) => failing = failing.union(&path_guard_set(path, &element.name)?),
            Some(Truth::Unknown) => return Err(undecidable("structure is not decidable on a path")),
        }
    }
    let mut witness = required.intersect(&failing);
    if let Some(Domain::Interval { min, max }) = &element.domain {
        witness = witness.intersect(&IntervalSet::range(*min, *max));
    }
    if witness.is_empty() {
        return Ok(Verdict::satisfied());
    }
    Ok(Verdict {
        status: Status::PossiblyViolated,
        witnesses: witness
            .intervals()
            .iter()
            .map(|i| Witness::Interval {
                element: element.name.clone(),
                min: i.min,
                max: i.max,
            })
            .collect(),
        monitor_required: true,
    })
}
