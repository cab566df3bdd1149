//! Structural pattern matching against schemas, execution paths and trace
//! prefixes.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::constraint::StructuralPattern;
use crate::eval::{self, Assignment, Facts};
use crate::expr::{Truth, Value};
use crate::model::{Event, EventKind, ExecutionPath, ProcessSchema, ResourceModel, Trace};
use crate::time::{Duration, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Completeness {
    AnchorOnly,
    Full,
}

/// Pattern variables bound to schema node ids or trace occurrence ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MatchBinding {
    pub vars: BTreeMap<String, String>,
    pub completeness: Completeness,
}

/// One binding per injective assignment of anchor variables to activity
/// nodes carrying the anchor labels.
pub fn match_schema(p: &StructuralPattern, s: &ProcessSchema) -> Vec<MatchBinding> {
    let mut out: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for b in p.anchors() {
        let nodes: Vec<&str> = s.nodes_with_label(&b.label).map(|n| n.id.as_str()).collect();
        let mut next = Vec::new();
        for partial in &out {
            for &n in &nodes {
                if partial.values().any(|v| v == n) {
                    continue;
                }
                let mut m = partial.clone();
                m.insert(b.var.clone(), n.to_string());
                next.push(m);
                if next.len() > eval::MATCH_CAP {
                    return next.into_iter().map(anchor_only).collect();
                }
            }
        }
        out = next;
    }
    out.into_iter().map(anchor_only).collect()
}

fn anchor_only(vars: BTreeMap<String, String>) -> MatchBinding {
    MatchBinding {
        vars,
        completeness: Completeness::AnchorOnly,
    }
}

/// Facts of one execution path. Run-time values are unknown; resource usage
/// comes from the schema's node annotations.
pub struct PathFacts<'a> {
    schema: &'a ProcessSchema,
    nodes: Vec<&'a str>,
    labels: Vec<&'a str>,
}

impl<'a> PathFacts<'a> {
    pub fn new(schema: &'a ProcessSchema, path: &'a ExecutionPath) -> Self {
        let nodes: Vec<&str> = path.nodes.iter().map(String::as_str).collect();
        let labels = nodes.iter().map(|n| schema.label_of(n).unwrap_or("")).collect();
        PathFacts { schema, nodes, labels }
    }

    pub fn node(&self, occ: usize) -> &'a str {
        self.nodes[occ]
    }
}

impl Facts for PathFacts<'_> {
    fn occurrences(&self, label: &str) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == label).collect()
    }

    fn precedes(&self, a: usize, b: usize) -> bool {
        a < b
    }

    fn directly_precedes(&self, a: usize, b: usize) -> bool {
        b == a + 1
    }

    fn parallel(&self, a: usize, b: usize) -> bool {
        self.schema.concurrent(self.nodes[a], self.nodes[b])
    }

    fn field(&self, _: usize, _: &str) -> Option<Value> {
        None
    }

    fn gap(&self, _: usize, _: usize) -> Option<Duration> {
        None
    }

    fn actor(&self, _: usize) -> Option<&str> {
        None
    }

    fn has_role(&self, _: usize, _: &str) -> Truth {
        Truth::Unknown
    }

    fn uses_resource(&self, occ: usize, resource: &str) -> Truth {
        self.schema
            .node(self.nodes[occ])
            .is_some_and(|n| n.resources.iter().any(|r| r == resource))
            .into()
    }
}

/// Structural check of `p` on one path for a given anchor binding over
/// schema nodes: anchor relations hold, consequents can be bound, and no
/// absent label occurs.
pub fn holds_on_path(p: &StructuralPattern, schema: &ProcessSchema, path: &ExecutionPath, anchor: &MatchBinding) -> bool {
    let facts = PathFacts::new(schema, path);
    let mut alphas: Vec<Assignment> = vec![Assignment::new()];
    for (var, node) in &anchor.vars {
        let positions: Vec<usize> = (0..path.nodes.len()).filter(|&i| path.nodes[i] == *node).collect();
        alphas = alphas
            .iter()
            .flat_map(|a| {
                positions.iter().map(move |&pos| {
                    let mut a = a.clone();
                    a.insert(var.clone(), pos);
                    a
                })
            })
            .collect();
    }
    if p.absences.iter().any(|l| facts.label_occurs(l)) {
        return false;
    }
    alphas.iter().any(|alpha| {
        let anchors_ok = p
            .anchor_relations()
            .all(|r| eval::relation_holds(&facts, r.kind, alpha[&r.left], alpha[&r.right]));
        anchors_ok && eval::extensions(p, &facts, alpha).is_ok_and(|e| !e.is_empty())
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogError {
    #[error("COMPLETE of occurrence {0} without a matching START")]
    UnmatchedComplete(String),
    #[error("occurrence {0} started twice")]
    DuplicateStart(String),
}

/// One activity execution inside an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceRecord {
    pub occurrence_id: String,
    pub label: String,
    pub start: Timestamp,
    pub complete: Option<Timestamp>,
    pub actor: Option<String>,
    /// Data carried by this occurrence's own events.
    pub data: BTreeMap<String, Value>,
    /// Instance data as it stood when the occurrence started.
    pub snapshot: BTreeMap<String, Value>,
}

/// Occurrences of one instance, built event by event.
#[derive(Debug, Clone, Default)]
pub struct InstanceLog {
    pub records: Vec<OccurrenceRecord>,
    by_id: BTreeMap<String, usize>,
    /// Record indices in completion order.
    pub completed: Vec<usize>,
    pub data: BTreeMap<String, Value>,
}

impl InstanceLog {
    /// Applies one event and returns the index of the affected record.
    pub fn apply(&mut self, e: &Event) -> Result<usize, LogError> {
        match e.kind {
            EventKind::Start => {
                if self.by_id.contains_key(&e.occurrence_id) {
                    return Err(LogError::DuplicateStart(e.occurrence_id.clone()));
                }
                let idx = self.records.len();
                self.records.push(OccurrenceRecord {
                    occurrence_id: e.occurrence_id.clone(),
                    label: e.activity_label.clone(),
                    start: e.timestamp,
                    complete: None,
                    actor: e.actor.clone(),
                    data: e.data.clone(),
                    snapshot: self.data.clone(),
                });
                self.by_id.insert(e.occurrence_id.clone(), idx);
                self.data.extend(e.data.iter().map(|(k, v)| (k.clone(), v.clone())));
                Ok(idx)
            }
            EventKind::Complete => {
                let idx = match self.by_id.get(&e.occurrence_id) {
                    Some(&i) if self.records[i].complete.is_none() && self.records[i].label == e.activity_label => i,
                    _ => return Err(LogError::UnmatchedComplete(e.occurrence_id.clone())),
                };
                let rec = &mut self.records[idx];
                rec.complete = Some(e.timestamp);
                if rec.actor.is_none() {
                    rec.actor = e.actor.clone();
                }
                rec.data.extend(e.data.iter().map(|(k, v)| (k.clone(), v.clone())));
                self.data.extend(e.data.iter().map(|(k, v)| (k.clone(), v.clone())));
                self.completed.push(idx);
                Ok(idx)
            }
        }
    }

    pub fn record(&self, occurrence_id: &str) -> Option<&OccurrenceRecord> {
        self.by_id.get(occurrence_id).map(|&i| &self.records[i])
    }

    pub fn facts<'a>(&'a self, schema: Option<&'a ProcessSchema>, resources: Option<&'a ResourceModel>) -> InstanceFacts<'a> {
        InstanceFacts {
            log: self,
            schema,
            resources,
        }
    }
}

/// Facts over the completed occurrences of an instance. Handles are
/// positions in completion order.
pub struct InstanceFacts<'a> {
    log: &'a InstanceLog,
    schema: Option<&'a ProcessSchema>,
    resources: Option<&'a ResourceModel>,
}

impl<'a> InstanceFacts<'a> {
    pub fn record(&self, occ: usize) -> &'a OccurrenceRecord {
        &self.log.records[self.log.completed[occ]]
    }

    /// Handle of a completed record.
    pub fn handle_of(&self, record: usize) -> Option<usize> {
        self.log.completed.iter().position(|&r| r == record)
    }
}

impl Facts for InstanceFacts<'_> {
    fn occurrences(&self, label: &str) -> Vec<usize> {
        (0..self.log.completed.len())
            .filter(|&i| self.record(i).label == label)
            .collect()
    }

    fn precedes(&self, a: usize, b: usize) -> bool {
        a < b
    }

    fn directly_precedes(&self, a: usize, b: usize) -> bool {
        b == a + 1
    }

    fn parallel(&self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.record(a), self.record(b));
        match self.schema {
            Some(s) => s.nodes_with_label(&ra.label).any(|x| {
                s.nodes_with_label(&rb.label)
                    .any(|y| s.concurrent(&x.id, &y.id))
            }),
            None => match (ra.complete, rb.complete) {
                (Some(ca), Some(cb)) => ra.start < cb && rb.start < ca,
                _ => false,
            },
        }
    }

    fn field(&self, occ: usize, field: &str) -> Option<Value> {
        let r = self.record(occ);
        r.data.get(field).or_else(|| r.snapshot.get(field)).cloned()
    }

    fn gap(&self, from: usize, to: usize) -> Option<Duration> {
        Some(self.record(to).start - self.record(from).complete?)
    }

    fn actor(&self, occ: usize) -> Option<&str> {
        self.record(occ).actor.as_deref()
    }

    fn has_role(&self, occ: usize, role: &str) -> Truth {
        match (self.resources, self.actor(occ)) {
            (Some(m), Some(actor)) if !m.is_empty() => m.has_role(actor, role),
            _ => Truth::Unknown,
        }
    }

    fn uses_resource(&self, occ: usize, resource: &str) -> Truth {
        match self.schema {
            Some(s) => s
                .nodes_with_label(&self.record(occ).label)
                .any(|n| n.resources.iter().any(|r| r == resource))
                .into(),
            None => Truth::Unknown,
        }
    }
}

/// Bindings over the occurrences completed within `trace.events[..upto]`.
/// Ordering relations follow completion order.
pub fn match_trace_prefix(p: &StructuralPattern, t: &Trace, upto: usize) -> Result<Vec<MatchBinding>, LogError> {
    let mut log = InstanceLog::default();
    for e in &t.events[..upto.min(t.events.len())] {
        log.apply(e)?;
    }
    let facts = log.facts(None, None);
    let name = |asg: &Assignment| -> BTreeMap<String, String> {
        asg.iter()
            .map(|(v, &o)| (v.clone(), facts.record(o).occurrence_id.clone()))
            .collect()
    };
    let mut out = Vec::new();
    for alpha in eval::anchor_bindings(p, &facts).unwrap_or_default() {
        let exts = eval::extensions(p, &facts, &alpha).unwrap_or_default();
        if exts.is_empty() {
            out.push(MatchBinding {
                vars: name(&alpha),
                completeness: Completeness::AnchorOnly,
            });
        }
        for beta in exts {
            out.push(MatchBinding {
                vars: name(&beta),
                completeness: Completeness::Full,
            });
        }
    }
    out.sort();
    Ok(out)
}
