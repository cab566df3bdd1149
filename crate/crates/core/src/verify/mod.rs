//! Design-time compliance checking of constraints against process schemas.

mod coverage;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::base::{BaseError, ConstraintBase};
use crate::constraint::{ProcessConstraint, Usage};
use crate::eval::{self, TooManyBindings};
use crate::expr::Truth;
use crate::identify::IdentificationStatus;
use crate::matcher::PathFacts;
use crate::model::{enumerate_paths, ModelError, ProcessSchema};

pub use coverage::{analyze_data_coverage, analyze_data_coverage_bounded};

pub const DEFAULT_LOOP_BOUND: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Satisfied,
    Violated,
    PossiblyViolated,
}

impl Status {
    pub fn keyword(self) -> &'static str {
        match self {
            Status::Satisfied => "satisfied",
            Status::Violated => "violated",
            Status::PossiblyViolated => "possibly-violated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Witness {
    /// Activity node ids of a failing execution path.
    Path(Vec<String>),
    /// Values of an integer data element for which the constraint fails.
    Interval { element: String, min: i64, max: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub witnesses: Vec<Witness>,
    pub monitor_required: bool,
}

impl Verdict {
    pub fn satisfied() -> Self {
        Verdict {
            status: Status::Satisfied,
            witnesses: Vec::new(),
            monitor_required: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("constraint {0} is not a compliance constraint")]
    NotCompliance(String),
    #[error("no anchor activity of constraint {constraint} occurs in schema {schema}; identification is stale")]
    PatternUnmatched { constraint: String, schema: String },
    #[error("data condition is not interval-decidable: {0}")]
    NotIntervalDecidable(String),
    #[error("too many pattern bindings")]
    TooManyBindings,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<TooManyBindings> for VerifyError {
    fn from(_: TooManyBindings) -> Self {
        VerifyError::TooManyBindings
    }
}

fn ensure_checkable(c: &ProcessConstraint, s: &ProcessSchema) -> Result<(), VerifyError> {
    if c.properties.usage != Usage::Compliance {
        return Err(VerifyError::NotCompliance(c.id.clone()));
    }
    if !c.pattern().anchors().any(|b| s.contains_label(&b.label)) {
        return Err(VerifyError::PatternUnmatched {
            constraint: c.id.clone(),
            schema: s.id.clone(),
        });
    }
    Ok(())
}

/// Checks `c` on every execution path of `s` with loops unrolled up to
/// `loop_bound` body executions.
///
/// Paths without an anchor binding are irrelevant. The verdict is satisfied
/// when the constraint holds on every relevant path, violated when it fails
/// on every relevant path, and possibly violated otherwise, including when
/// the outcome depends on run-time values.
pub fn check_design_time(c: &ProcessConstraint, s: &ProcessSchema, loop_bound: usize) -> Result<Verdict, VerifyError> {
    ensure_checkable(c, s)?;
    let paths = enumerate_paths(s, loop_bound)?;
    let mut relevant = 0usize;
    let mut falses = 0usize;
    let mut first_false = None;
    let mut first_unknown = None;
    for path in &paths {
        let facts = PathFacts::new(s, path);
        let Some(e) = eval::evaluate_all(c, &facts)? else {
            continue;
        };
        relevant += 1;
        match e.truth {
            Truth::True => {}
            Truth::False => {
                falses += 1;
                first_false.get_or_insert(path);
            }
            Truth::Unknown => {
                first_unknown.get_or_insert(path);
            }
        }
    }
    if first_false.is_none() && first_unknown.is_none() {
        return Ok(Verdict::satisfied());
    }
    let witness = first_false.or(first_unknown).expect("some path failed");
    let status = if relevant > 0 && falses == relevant {
        Status::Violated
    } else {
        Status::PossiblyViolated
    };
    Ok(Verdict {
        status,
        witnesses: vec![Witness::Path(witness.nodes.clone())],
        monitor_required: status == Status::PossiblyViolated,
    })
}

/// One line of a batch report: a checked (constraint, schema) pair, a
/// failed check, or a skipped constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportEntry {
    pub constraint: String,
    pub schema: Option<String>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Checked(Verdict),
    Failed(String),
    Skipped(String),
}

impl Serialize for ReportEntry {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut m = ser.serialize_map(None)?;
        m.serialize_entry("constraint", &self.constraint)?;
        if let Some(s) = &self.schema {
            m.serialize_entry("schema", s)?;
        }
        match &self.outcome {
            Outcome::Checked(v) => {
                m.serialize_entry("status", &v.status)?;
                m.serialize_entry("witnesses", &v.witnesses)?;
                m.serialize_entry("monitor_required", &v.monitor_required)?;
            }
            Outcome::Failed(e) => {
                m.serialize_entry("witnesses", &Vec::<Witness>::new())?;
                m.serialize_entry("monitor_required", &false)?;
                m.serialize_entry("error", e)?;
            }
            Outcome::Skipped(r) => {
                m.serialize_entry("witnesses", &Vec::<Witness>::new())?;
                m.serialize_entry("monitor_required", &false)?;
                m.serialize_entry("skipped_reason", r)?;
            }
        }
        m.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct VerifyReport {
    pub entries: Vec<ReportEntry>,
    /// Number of (constraint, schema) pairs actually checked.
    pub checked: usize,
    pub skipped: usize,
}

impl VerifyReport {
    /// True when every checked pair is satisfied and no check failed.
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| match &e.outcome {
            Outcome::Checked(v) => v.status == Status::Satisfied,
            Outcome::Failed(_) => false,
            Outcome::Skipped(_) => true,
        })
    }
}

fn check_pair(c: &ProcessConstraint, s: &ProcessSchema, loop_bound: usize) -> Result<Verdict, VerifyError> {
    if c.condition.data.is_some() {
        match analyze_data_coverage_bounded(c, s, loop_bound) {
            Err(VerifyError::NotIntervalDecidable(_)) => {}
            other => return other,
        }
    }
    check_design_time(c, s, loop_bound)
}

fn skip_reason(c: &ProcessConstraint, status: Option<IdentificationStatus>) -> Option<String> {
    match status {
        None => Some("not identified".into()),
        Some(IdentificationStatus::Idle) => Some("idle: no anchor activity in any schema".into()),
        Some(IdentificationStatus::NonProcess) => Some("not a process constraint".into()),
        Some(IdentificationStatus::Enabled) if c.properties.usage != Usage::Compliance => {
            Some("behavioral constraint, enforced at run time".into())
        }
        Some(IdentificationStatus::Enabled) => None,
    }
}

/// Checks every enabled compliance constraint against the schemas it was
/// identified in; every other constraint is reported as skipped.
pub fn verify_all(base: &ConstraintBase, schemas: &[ProcessSchema], loop_bound: usize) -> Result<VerifyReport, BaseError> {
    base.ensure_identified()?;
    let mut report = VerifyReport::default();
    for c in base.constraints() {
        if let Some(reason) = skip_reason(c, base.status_of(&c.id)) {
            report.entries.push(ReportEntry {
                constraint: c.id.clone(),
                schema: None,
                outcome: Outcome::Skipped(reason),
            });
            report.skipped += 1;
            continue;
        }
        let evidence = &base.identification()[&c.id].evidence;
        for ev in &evidence.schemas {
            let outcome = match schemas.iter().find(|s| s.id == ev.schema_id) {
                None => Outcome::Failed(format!("schema {} is not loaded", ev.schema_id)),
                Some(s) => {
                    report.checked += 1;
                    match check_pair(c, s, loop_bound) {
                        Ok(v) => Outcome::Checked(v),
                        Err(e) => Outcome::Failed(e.to_string()),
                    }
                }
            };
            report.entries.push(ReportEntry {
                constraint: c.id.clone(),
                schema: Some(ev.schema_id.clone()),
                outcome,
            });
        }
    }
    report
        .entries
        .sort_by(|a, b| (&a.constraint, &a.schema).cmp(&(&b.constraint, &b.schema)));
    Ok(report)
}
