//! Behavioral constraints: attribution, synchronization and exceptions.

use std::collections::BTreeMap;

use super::sync::{Completion, Request};
use super::{Action, ActionKind, InstanceState, MonitorSession, Violation};
use crate::constraint::{AttributeValue, Behavior, Position, ProcessConstraint, ACTOR_KEY, ROLE_KEY};
use crate::eval::{self, Facts, ViolationReason};
use crate::expr::Truth;
use crate::model::{Event, EventKind, ProcessSchema, ResourceModel};

/// The event at which the behavior takes effect on its target.
fn moment(c: &ProcessConstraint) -> EventKind {
    let target = c.behavior.target();
    let explicit = c
        .linkage
        .triggers
        .iter()
        .find(|t| Some(t.target.as_str()) == target)
        .map(|t| t.position);
    match (explicit, &c.behavior) {
        (Some(Position::Before), _) => EventKind::Start,
        (Some(Position::After), _) => EventKind::Complete,
        (None, Behavior::RaiseException { .. }) => EventKind::Complete,
        (None, _) => EventKind::Start,
    }
}

/// True when some full binding puts the behavior's target on `record` and
/// the condition definitely holds on it. A running occurrence is treated as
/// the latest one for this purpose.
pub(super) fn applies_to(
    c: &ProcessConstraint,
    st: &InstanceState,
    schema: Option<&ProcessSchema>,
    resources: &ResourceModel,
    record: usize,
) -> bool {
    let Some(target) = c.behavior.target() else {
        return false;
    };
    let mut view;
    let log = if st.log.completed.contains(&record) {
        &st.log
    } else {
        view = st.log.clone();
        view.completed.push(record);
        &view
    };
    let facts = log.facts(schema, Some(resources));
    let Some(h) = facts.handle_of(record) else {
        return false;
    };
    let p = c.pattern();
    let data: Vec<_> = c.condition.data.iter().collect();
    let alphas = eval::anchor_bindings(p, &facts).unwrap_or_default();
    alphas.iter().any(|alpha| {
        eval::extensions(p, &facts, alpha)
            .unwrap_or_default()
            .iter()
            .filter(|beta| beta.get(target) == Some(&h))
            .any(|beta| {
                let cond = eval::eval_all_data(&data, &facts, beta).and(eval::requirement(c, &facts, beta).0);
                cond == Truth::True && !p.absences.iter().any(|l| facts.label_occurs(l))
            })
    })
}

impl MonitorSession {
    pub(super) fn enforce_behavior(
        &mut self,
        ci: usize,
        instance: &str,
        record: usize,
        e: &Event,
    ) -> (Vec<Action>, Vec<Violation>) {
        let mut actions = Vec::new();
        let mut violations = Vec::new();
        let c = &self.constraints[ci];
        let st = &self.instances[instance];
        let rec = &st.log.records[record];
        let Some(target) = c.behavior.target() else {
            return (actions, violations);
        };
        if c.pattern().label_of(target) != Some(rec.label.as_str()) {
            return (actions, violations);
        }
        let occurrence = rec.occurrence_id.clone();
        let action = |kind: ActionKind, inst: &str, occ: &str| Action {
            constraint: c.id.clone(),
            instance: inst.to_string(),
            occurrence: occ.to_string(),
            timestamp: e.timestamp,
            kind,
        };
        let violation = |reason| Violation {
            constraint: c.id.clone(),
            instance: instance.to_string(),
            binding: BTreeMap::from([(target.to_string(), occurrence.clone())]),
            reason,
            timestamp: e.timestamp,
        };

        match &c.behavior {
            Behavior::None => {}
            Behavior::Attribute { key, value, .. } => {
                if e.kind != moment(c) || !self.applies_to(ci, st, record) {
                    return (actions, violations);
                }
                actions.push(action(
                    ActionKind::Attribute {
                        key: key.clone(),
                        value: value.clone(),
                    },
                    instance,
                    &occurrence,
                ));
                let breaks = match (key.as_str(), value, rec.actor.as_deref()) {
                    (ROLE_KEY, AttributeValue::Text(role), Some(actor)) => {
                        !self.resources.is_empty() && self.resources.has_role(actor, role).is_false()
                    }
                    (ACTOR_KEY, AttributeValue::Text(who), Some(actor)) => actor != who,
                    _ => false,
                };
                if breaks {
                    violations.push(violation(ViolationReason::Resource));
                }
                self.attributes
                    .entry((instance.to_string(), occurrence.clone()))
                    .or_default()
                    .insert(key.clone(), value.clone());
            }
            Behavior::Synchronize { resource, .. } => match e.kind {
                EventKind::Start => {
                    if !self.applies_to(ci, st, record) {
                        return (actions, violations);
                    }
                    let kind = match self.mutexes.request(resource, instance, &occurrence) {
                        Request::Acquired => ActionKind::Acquire {
                            resource: resource.clone(),
                        },
                        Request::Queued => ActionKind::Queue {
                            resource: resource.clone(),
                        },
                    };
                    actions.push(action(kind, instance, &occurrence));
                }
                EventKind::Complete => match self.mutexes.complete(resource, instance, &occurrence) {
                    Completion::Released { granted } => {
                        actions.push(action(
                            ActionKind::Release {
                                resource: resource.clone(),
                            },
                            instance,
                            &occurrence,
                        ));
                        if let Some((gi, go)) = granted {
                            actions.push(action(
                                ActionKind::Grant {
                                    resource: resource.clone(),
                                },
                                &gi,
                                &go,
                            ));
                        }
                    }
                    Completion::WasQueued => violations.push(violation(ViolationReason::Sync)),
                    Completion::NotInvolved => {}
                },
            },
            Behavior::RaiseException { message, .. } => {
                if e.kind == moment(c) && self.applies_to(ci, st, record) {
                    actions.push(action(
                        ActionKind::RaiseException {
                            message: message.clone(),
                        },
                        instance,
                        &occurrence,
                    ));
                }
            }
        }
        (actions, violations)
    }
}
