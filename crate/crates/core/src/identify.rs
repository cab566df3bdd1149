//! Separates process constraints from other domain rules and classifies
//! them as enabled or idle.
//!
//! A rule is a process constraint when every activity label it references is
//! known, either from a loaded schema or from the activity repository. It is
//! enabled when at least one anchor label occurs in a schema within its
//! context, and idle otherwise.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::ProcessConstraint;
use crate::dsl::Item;
use crate::model::{ActivityRepository, ModelError, ProcessSchema};

/// A free-text domain rule with no structural pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpaqueRule {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainRule {
    Constraint(ProcessConstraint),
    Opaque(OpaqueRule),
}

impl DomainRule {
    pub fn id(&self) -> &str {
        match self {
            DomainRule::Constraint(c) => &c.id,
            DomainRule::Opaque(r) => &r.id,
        }
    }

    fn references(&self, label: &str) -> bool {
        match self {
            DomainRule::Constraint(c) => c.pattern().referenced_labels().contains(label),
            DomainRule::Opaque(_) => false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdentifyError {
    #[error("rule id {0} is used more than once")]
    DuplicateId(String),
    #[error("no schema with id {0}")]
    UnknownSchema(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainRuleSet {
    rules: Vec<DomainRule>,
}

impl DomainRuleSet {
    pub fn new(rules: Vec<DomainRule>) -> Result<Self, IdentifyError> {
        let mut ids = BTreeSet::new();
        for r in &rules {
            if !ids.insert(r.id()) {
                return Err(IdentifyError::DuplicateId(r.id().to_string()));
            }
        }
        Ok(DomainRuleSet { rules })
    }

    /// Rules from a parsed document. Meta constraints are not domain rules
    /// and are left out.
    pub fn from_items(items: Vec<Item>) -> Result<Self, IdentifyError> {
        DomainRuleSet::new(
            items
                .into_iter()
                .filter_map(|i| match i {
                    Item::Constraint(c) => Some(DomainRule::Constraint(c)),
                    Item::Rule(r) => Some(DomainRule::Opaque(r)),
                    Item::Meta(_) => None,
                })
                .collect(),
        )
    }

    pub fn from_constraints(constraints: impl IntoIterator<Item = ProcessConstraint>) -> Result<Self, IdentifyError> {
        DomainRuleSet::new(constraints.into_iter().map(DomainRule::Constraint).collect())
    }

    pub fn rules(&self) -> &[DomainRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentificationStatus {
    Enabled,
    Idle,
    NonProcess,
}

impl IdentificationStatus {
    pub fn keyword(self) -> &'static str {
        match self {
            IdentificationStatus::Enabled => "enabled",
            IdentificationStatus::Idle => "idle",
            IdentificationStatus::NonProcess => "non-process",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEvidence {
    pub schema_id: String,
    pub anchor_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Evidence {
    /// In-scope schemas containing an anchor label (enabled rules).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schemas: Vec<SchemaEvidence>,
    /// Referenced labels found in the activity repository (idle rules).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repository_labels: Vec<String>,
    /// Referenced labels known nowhere (non-process rules).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unresolved_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub rule: String,
    pub status: IdentificationStatus,
    pub evidence: Evidence,
}

fn identify_rule(rule: &DomainRule, schemas: &[ProcessSchema], known: &BTreeSet<&str>, repo: &ActivityRepository) -> IdentificationResult {
    let c = match rule {
        DomainRule::Opaque(r) => {
            return IdentificationResult {
                rule: r.id.clone(),
                status: IdentificationStatus::NonProcess,
                evidence: Evidence::default(),
            }
        }
        DomainRule::Constraint(c) => c,
    };
    let referenced = c.pattern().referenced_labels();
    let unresolved: Vec<String> = referenced
        .iter()
        .filter(|l| !known.contains(*l))
        .map(|l| l.to_string())
        .collect();
    if !unresolved.is_empty() {
        return IdentificationResult {
            rule: c.id.clone(),
            status: IdentificationStatus::NonProcess,
            evidence: Evidence {
                unresolved_labels: unresolved,
                ..Evidence::default()
            },
        };
    }
    let anchors = c.pattern().anchor_labels();
    let mut found: Vec<SchemaEvidence> = schemas
        .iter()
        .filter(|s| c.linkage.context.applies_to_process(&s.id))
        .filter_map(|s| {
            let labels: Vec<String> = anchors
                .iter()
                .filter(|l| s.contains_label(l))
                .map(|l| l.to_string())
                .collect();
            (!labels.is_empty()).then(|| SchemaEvidence {
                schema_id: s.id.clone(),
                anchor_labels: labels,
            })
        })
        .collect();
    found.sort_by(|a, b| a.schema_id.cmp(&b.schema_id));
    if found.is_empty() {
        IdentificationResult {
            rule: c.id.clone(),
            status: IdentificationStatus::Idle,
            evidence: Evidence {
                repository_labels: referenced
                    .iter()
                    .filter(|l| repo.contains(l))
                    .map(|l| l.to_string())
                    .collect(),
                ..Evidence::default()
            },
        }
    } else {
        IdentificationResult {
            rule: c.id.clone(),
            status: IdentificationStatus::Enabled,
            evidence: Evidence {
                schemas: found,
                ..Evidence::default()
            },
        }
    }
}

fn known_labels<'a>(schemas: &'a [ProcessSchema], repo: &'a ActivityRepository) -> BTreeSet<&'a str> {
    schemas
        .iter()
        .flat_map(|s| s.labels())
        .chain(repo.labels.iter().map(String::as_str))
        .collect()
}

/// One result per rule, in rule order.
pub fn identify(rules: &DomainRuleSet, schemas: &[ProcessSchema], repo: &ActivityRepository) -> Vec<IdentificationResult> {
    let known = known_labels(schemas, repo);
    rules
        .rules
        .iter()
        .map(|r| identify_rule(r, schemas, &known, repo))
        .collect()
}

/// A newly added activity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Change {
    pub schema_id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub rule: String,
    pub from: IdentificationStatus,
    pub to: IdentificationStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeOutcome {
    pub results: Vec<IdentificationResult>,
    pub transitions: Vec<Transition>,
}

/// Applies `change` to the schema set by inserting a new activity right
/// before the end node of the named schema.
pub fn apply_change(schemas: &[ProcessSchema], change: &Change) -> Result<Vec<ProcessSchema>, IdentifyError> {
    let target = schemas
        .iter()
        .position(|s| s.id == change.schema_id)
        .ok_or_else(|| IdentifyError::UnknownSchema(change.schema_id.clone()))?;
    let s = &schemas[target];
    let mut n = s.nodes.len();
    let node_id = loop {
        let candidate = format!("added-{n}");
        if s.node(&candidate).is_none() {
            break candidate;
        }
        n += 1;
    };
    let mut out = schemas.to_vec();
    out[target] = s.with_activity_before_end(&node_id, &change.label)?;
    Ok(out)
}

/// Re-identifies only the rules referencing the added label. `schemas_after`
/// must already contain the change.
pub fn recompute_on_change(
    prev: &[IdentificationResult],
    rules: &DomainRuleSet,
    schemas_after: &[ProcessSchema],
    repo: &ActivityRepository,
    change: &Change,
) -> ChangeOutcome {
    let known = known_labels(schemas_after, repo);
    let prev_by_rule: BTreeMap<&str, &IdentificationResult> = prev.iter().map(|r| (r.rule.as_str(), r)).collect();
    let mut results = Vec::with_capacity(rules.len());
    let mut transitions = Vec::new();
    for rule in &rules.rules {
        let old = prev_by_rule.get(rule.id()).copied();
        let fresh = match old {
            Some(o) if !rule.references(&change.label) => o.clone(),
            _ => identify_rule(rule, schemas_after, &known, repo),
        };
        if let Some(o) = old {
            if o.status != fresh.status {
                transitions.push(Transition {
                    rule: fresh.rule.clone(),
                    from: o.status,
                    to: fresh.status,
                });
            }
        }
        results.push(fresh);
    }
    ChangeOutcome { results, transitions }
}
