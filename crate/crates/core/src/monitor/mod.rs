//! Event-by-event monitoring of process instances: run-time checks of
//! compliance constraints and enforcement of behavioral constraints.
//!
//! Compliance constraints open an obligation when their anchor pattern
//! completes. Requirements on a full binding are decided as soon as all of
//! its occurrences have completed; missing consequents and absent labels are
//! decided when the instance closes. Ordering relations follow completion
//! order.

mod behavior;
mod sync;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::base::ConstraintBase;
use crate::constraint::{Application, AttributeValue, ProcessConstraint, Usage};
use crate::eval::{self, Assignment, Facts, ViolationReason};
use crate::matcher::{InstanceLog, LogError};
use crate::model::{merge_events, Event, EventKind, ProcessSchema, ResourceModel, Trace};
use crate::time::Timestamp;

pub use sync::MutexTable;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MonitorError {
    #[error("event at {at} arrives after an event at {last}")]
    OutOfOrderEvent { at: Timestamp, last: Timestamp },
    #[error("instance {instance}: COMPLETE of occurrence {occurrence} without a matching START")]
    UnmatchedComplete { instance: String, occurrence: String },
    #[error("instance {instance}: occurrence {occurrence} started twice")]
    DuplicateStart { instance: String, occurrence: String },
    #[error("instance {0} is already closed")]
    InstanceClosed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum ActionKind {
    Attribute { key: String, value: AttributeValue },
    /// The occurrence obtained the resource.
    Acquire { resource: String },
    /// The occurrence has to wait for the resource.
    Queue { resource: String },
    Release { resource: String },
    /// A queued occurrence obtained the resource.
    Grant { resource: String },
    RaiseException { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Action {
    pub constraint: String,
    pub instance: String,
    pub occurrence: String,
    pub timestamp: Timestamp,
    #[serde(flatten)]
    pub kind: ActionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Violation {
    pub constraint: String,
    pub instance: String,
    /// Pattern variables bound to occurrence ids.
    #[serde(skip)]
    pub binding: BTreeMap<String, String>,
    pub reason: ViolationReason,
    pub timestamp: Timestamp,
}

/// An anchor match whose requirement is not decided yet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PendingObligation {
    pub constraint: String,
    pub instance: String,
    /// The anchor occurrence whose completion opened the obligation.
    pub anchor_occurrence: String,
    pub binding: BTreeMap<String, String>,
}

/// Variable to record index within an instance log.
type RecordBinding = BTreeMap<String, usize>;

#[derive(Debug, Clone)]
struct Obligation {
    constraint: usize,
    anchor: RecordBinding,
    opened_by: usize,
    /// A full binding satisfying the structural pattern has been seen.
    discharged: bool,
}

#[derive(Debug, Clone)]
struct InstanceState {
    process_type: String,
    log: InstanceLog,
    closed: bool,
    active: BTreeSet<usize>,
    obligations: Vec<Obligation>,
    /// Full bindings already evaluated, per constraint.
    evaluated: BTreeSet<(usize, Vec<usize>)>,
    last: Timestamp,
}

#[derive(Debug, Clone)]
pub struct MonitorSession {
    constraints: Vec<ProcessConstraint>,
    schemas: BTreeMap<String, ProcessSchema>,
    resources: ResourceModel,
    instances: BTreeMap<String, InstanceState>,
    mutexes: MutexTable,
    /// Attribute store: (instance, occurrence) to key/value.
    attributes: BTreeMap<(String, String), BTreeMap<String, AttributeValue>>,
    violations: Vec<Violation>,
    last: Option<Timestamp>,
}

impl MonitorSession {
    /// A session over the enabled constraints of `base` that apply at run
    /// time.
    pub fn open(base: &ConstraintBase, schemas: &[ProcessSchema], resources: &ResourceModel) -> Self {
        let enabled = base
            .constraints()
            .filter(|c| base.status_of(&c.id) == Some(crate::identify::IdentificationStatus::Enabled))
            .filter(|c| c.properties.applies_at(Application::RunTime))
            .cloned();
        MonitorSession::with_constraints(enabled, schemas, resources)
    }

    /// A session over an explicit set of constraints.
    pub fn with_constraints(
        constraints: impl IntoIterator<Item = ProcessConstraint>,
        schemas: &[ProcessSchema],
        resources: &ResourceModel,
    ) -> Self {
        let mut constraints: Vec<ProcessConstraint> = constraints.into_iter().collect();
        constraints.sort_by(|a, b| a.id.cmp(&b.id));
        MonitorSession {
            constraints,
            schemas: schemas.iter().map(|s| (s.id.clone(), s.clone())).collect(),
            resources: resources.clone(),
            instances: BTreeMap::new(),
            mutexes: MutexTable::default(),
            attributes: BTreeMap::new(),
            violations: Vec::new(),
            last: None,
        }
    }

    pub fn constraint_ids(&self) -> Vec<&str> {
        self.constraints.iter().map(|c| c.id.as_str()).collect()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn mutexes(&self) -> &MutexTable {
        &self.mutexes
    }

    pub fn attributes(&self, instance: &str, occurrence: &str) -> Option<&BTreeMap<String, AttributeValue>> {
        self.attributes.get(&(instance.to_string(), occurrence.to_string()))
    }

    /// True while `constraint` is registered for the running `instance`.
    pub fn is_active(&self, constraint: &str, instance: &str) -> bool {
        self.instances.get(instance).is_some_and(|st| {
            !st.closed && st.active.iter().any(|&i| self.constraints[i].id == constraint)
        })
    }

    fn applicable(&self, process_type: &str, instance: &str) -> BTreeSet<usize> {
        (0..self.constraints.len())
            .filter(|&i| self.constraints[i].linkage.context.applies_to_instance(process_type, instance))
            .collect()
    }

    pub fn step_event(
        &mut self,
        instance: &str,
        process_type: &str,
        e: &Event,
    ) -> Result<(Vec<Action>, Vec<Violation>), MonitorError> {
        if let Some(last) = self.last {
            if e.timestamp < last {
                return Err(MonitorError::OutOfOrderEvent { at: e.timestamp, last });
            }
        }
        if self.instances.get(instance).is_some_and(|st| st.closed) {
            return Err(MonitorError::InstanceClosed(instance.to_string()));
        }
        if !self.instances.contains_key(instance) {
            let active = self.applicable(process_type, instance);
            self.instances.insert(
                instance.to_string(),
                InstanceState {
                    process_type: process_type.to_string(),
                    log: InstanceLog::default(),
                    closed: false,
                    active,
                    obligations: Vec::new(),
                    evaluated: BTreeSet::new(),
                    last: e.timestamp,
                },
            );
        }
        let st = self.instances.get_mut(instance).expect("instance registered");
        let applied = st.log.apply(e);
        if applied.is_err() && st.log.records.is_empty() {
            self.instances.remove(instance);
        }
        let record = applied.map_err(|err| match err {
            LogError::UnmatchedComplete(o) => MonitorError::UnmatchedComplete {
                instance: instance.to_string(),
                occurrence: o,
            },
            LogError::DuplicateStart(o) => MonitorError::DuplicateStart {
                instance: instance.to_string(),
                occurrence: o,
            },
        })?;
        let st = self.instances.get_mut(instance).expect("instance registered");
        st.last = e.timestamp;
        self.last = Some(e.timestamp);

        let mut actions = Vec::new();
        let mut violations = Vec::new();
        let active: Vec<usize> = st.active.iter().copied().collect();
        for ci in active {
            let c = &self.constraints[ci];
            match c.properties.usage {
                Usage::Compliance if e.kind == EventKind::Complete => {
                    violations.extend(self.check_compliance(ci, instance, record, e.timestamp));
                }
                Usage::Behavioral => {
                    let (a, v) = self.enforce_behavior(ci, instance, record, e);
                    actions.extend(a);
                    violations.extend(v);
                }
                _ => {}
            }
        }
        self.violations.extend(violations.iter().cloned());
        Ok((actions, violations))
    }

    fn occurrence_names(log: &InstanceLog, b: &RecordBinding) -> BTreeMap<String, String> {
        b.iter()
            .map(|(v, &r)| (v.clone(), log.records[r].occurrence_id.clone()))
            .collect()
    }

    fn check_compliance(&mut self, ci: usize, instance: &str, record: usize, at: Timestamp) -> Vec<Violation> {
        let c = &self.constraints[ci];
        let st = self.instances.get_mut(instance).expect("instance registered");
        let schema = self.schemas.get(&st.process_type);
        let facts = st.log.facts(schema, Some(&self.resources));
        let Some(h) = facts.handle_of(record) else {
            return Vec::new();
        };
        let to_records = |a: &Assignment| -> RecordBinding {
            a.iter()
                .map(|(v, &occ)| (v.clone(), st.log.completed[occ]))
                .collect()
        };
        let to_handles = |b: &RecordBinding| -> Assignment {
            b.iter()
                .map(|(v, &r)| (v.clone(), facts.handle_of(r).expect("anchors are completed")))
                .collect()
        };
        let (gate_parts, rest) = eval::split_data(c);
        let p = c.pattern();

        for alpha in eval::anchor_bindings(p, &facts).unwrap_or_default() {
            if !alpha.values().any(|&o| o == h) {
                continue;
            }
            if eval::eval_all_data(&gate_parts, &facts, &alpha).is_false() {
                continue;
            }
            st.obligations.push(Obligation {
                constraint: ci,
                anchor: to_records(&alpha),
                opened_by: record,
                discharged: false,
            });
        }

        let mut found = Vec::new();
        for (oi, ob) in st.obligations.iter().enumerate().filter(|(_, o)| o.constraint == ci) {
            let alpha = to_handles(&ob.anchor);
            let gate = eval::eval_all_data(&gate_parts, &facts, &alpha);
            for beta in eval::extensions(p, &facts, &alpha).unwrap_or_default() {
                let recs = to_records(&beta);
                let key: Vec<usize> = p.bindings.iter().map(|b| recs[&b.var]).collect();
                found.push((oi, key, recs, gate, beta));
            }
        }
        let mut out = Vec::new();
        for (oi, key, recs, gate, beta) in found {
            st.obligations[oi].discharged = true;
            if !st.evaluated.insert((ci, key)) {
                continue;
            }
            let g = eval::eval_all_data(&rest, &facts, &beta);
            let (req, why) = eval::requirement(c, &facts, &beta);
            if gate.is_true() && g.implies(req).is_false() {
                out.push(Violation {
                    constraint: c.id.clone(),
                    instance: instance.to_string(),
                    binding: Self::occurrence_names(&st.log, &recs),
                    reason: why.unwrap_or(ViolationReason::Pattern),
                    timestamp: at,
                });
            }
        }
        out
    }

    /// Closes an instance: decides its open obligations and deregisters its
    /// constraints. Closing an unknown or closed instance yields nothing.
    pub fn close_instance(&mut self, instance: &str) -> Vec<Violation> {
        let Some(st) = self.instances.get_mut(instance) else {
            return Vec::new();
        };
        if st.closed {
            return Vec::new();
        }
        st.closed = true;
        let schema = self.schemas.get(&st.process_type);
        let facts = st.log.facts(schema, Some(&self.resources));
        let mut out = Vec::new();
        for ob in &st.obligations {
            let c = &self.constraints[ob.constraint];
            let p = c.pattern();
            let alpha: Assignment = ob
                .anchor
                .iter()
                .map(|(v, &r)| (v.clone(), facts.handle_of(r).expect("anchors are completed")))
                .collect();
            let (gate_parts, _) = eval::split_data(c);
            let gate = eval::eval_all_data(&gate_parts, &facts, &alpha);
            let absent_hit = p.absences.iter().any(|l| facts.label_occurs(l));
            if gate.is_true() && (!ob.discharged || absent_hit) {
                out.push(Violation {
                    constraint: c.id.clone(),
                    instance: instance.to_string(),
                    binding: Self::occurrence_names(&st.log, &ob.anchor),
                    reason: if gate_parts.is_empty() {
                        ViolationReason::Pattern
                    } else {
                        ViolationReason::Data
                    },
                    timestamp: st.last,
                });
            }
        }
        st.obligations.clear();
        st.active.clear();
        let held: Vec<String> = st.log.records.iter().map(|r| r.occurrence_id.clone()).collect();
        for occ in held {
            self.mutexes.abandon(instance, &occ);
        }
        self.violations.extend(out.iter().cloned());
        out
    }

    /// Open obligations ordered by (constraint, instance, anchor occurrence).
    pub fn pending_obligations(&self) -> Vec<PendingObligation> {
        let mut out: Vec<PendingObligation> = self
            .instances
            .iter()
            .filter(|(_, st)| !st.closed)
            .flat_map(|(id, st)| {
                st.obligations.iter().filter(|o| !o.discharged).map(move |o| PendingObligation {
                    constraint: self.constraints[o.constraint].id.clone(),
                    instance: id.clone(),
                    anchor_occurrence: st.log.records[o.opened_by].occurrence_id.clone(),
                    binding: Self::occurrence_names(&st.log, &o.anchor),
                })
            })
            .collect();
        out.sort();
        out
    }

    fn applies_to(&self, ci: usize, st: &InstanceState, record: usize) -> bool {
        behavior::applies_to(&self.constraints[ci], st, self.schemas.get(&st.process_type), &self.resources, record)
    }
}

/// Output of replaying a set of traces.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ReplayOutcome {
    pub actions: Vec<Action>,
    pub violations: Vec<Violation>,
}

/// Feeds the events of all traces in timestamp order, then closes every
/// instance in id order.
pub fn replay(session: &mut MonitorSession, traces: &[Trace]) -> Result<ReplayOutcome, MonitorError> {
    let mut out = ReplayOutcome::default();
    for (t, e) in merge_events(traces) {
        let (a, v) = session.step_event(&t.instance_id, &t.process_type, e)?;
        out.actions.extend(a);
        out.violations.extend(v);
    }
    let mut ids: Vec<&str> = traces.iter().map(|t| t.instance_id.as_str()).collect();
    ids.sort();
    ids.dedup();
    for id in ids {
        out.violations.extend(session.close_instance(id));
    }
    Ok(out)
}
