//! Meta constraints: requirements over activities or over other constraints.
//!
//! ```text
//! meta C5 {
//!     for each activity uses-resource 'centrifuge';
//!     require attached 'C10';
//! }
//! ```

use std::collections::BTreeSet;

use serde::Serialize;

use super::ConstraintBase;
use crate::constraint::{
    Application, ConstraintType, DerivedProperties, Origin, ProcessConstraint, Scope, Usage,
};
use crate::model::{Node, ProcessSchema, ResourceModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetaConstraint {
    pub id: String,
    pub source_text: Option<String>,
    pub for_each: MetaSelector,
    pub require: MetaRequirement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetaSelector {
    /// Activities annotated with the resource.
    ActivitiesUsing(String),
    ActivitiesLabeled(String),
    Constraints(ConstraintFilter),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintFilter {
    All,
    Usage(Usage),
    Type(ConstraintType),
    Scope(Scope),
    Application(Application),
}

impl ConstraintFilter {
    pub fn selects(&self, c: &ProcessConstraint) -> bool {
        match self {
            ConstraintFilter::All => true,
            ConstraintFilter::Usage(u) => c.properties.usage == *u,
            ConstraintFilter::Type(t) => c.constraint_type() == *t,
            ConstraintFilter::Scope(s) => c.properties.scope.contains(s),
            ConstraintFilter::Application(a) => c.properties.application.contains(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetaRequirement {
    /// Every selected activity is covered by each listed constraint.
    Attached(Vec<String>),
    Trigger,
    Condition,
    Behavior,
    Scope(Scope),
    Application(Application),
    Usage(Usage),
}

impl MetaRequirement {
    fn holds_for(&self, c: &ProcessConstraint) -> bool {
        match self {
            MetaRequirement::Attached(ids) => ids.iter().all(|id| *id == c.id),
            MetaRequirement::Trigger => !c.linkage.triggers.is_empty(),
            MetaRequirement::Condition => !c.condition.is_empty(),
            MetaRequirement::Behavior => !c.behavior.is_none(),
            MetaRequirement::Scope(s) => c.properties.scope.contains(s),
            MetaRequirement::Application(a) => c.properties.application.contains(a),
            MetaRequirement::Usage(u) => c.properties.usage == *u,
        }
    }

    fn describe(&self) -> String {
        match self {
            MetaRequirement::Attached(ids) => format!("attached {}", ids.join(", ")),
            MetaRequirement::Trigger => "a trigger position".into(),
            MetaRequirement::Condition => "a condition".into(),
            MetaRequirement::Behavior => "a behavior".into(),
            MetaRequirement::Scope(s) => format!("scope {s}"),
            MetaRequirement::Application(a) => format!("application {a}"),
            MetaRequirement::Usage(u) => format!("usage {u}"),
        }
    }
}

impl MetaConstraint {
    pub fn properties(&self) -> DerivedProperties {
        DerivedProperties {
            usage: Usage::Meta,
            application: BTreeSet::from([Application::DesignTime]),
            scope: BTreeSet::from([Scope::Structure]),
            origin: Origin::External,
        }
    }

    pub fn constraint_type(&self) -> ConstraintType {
        ConstraintType::Meta
    }
}

/// An unmet meta requirement and the element that breaks it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MetaViolation {
    pub meta: String,
    pub element: String,
    pub message: String,
}

fn attached(base: &ConstraintBase, id: &str, schema: &ProcessSchema, node: &Node) -> bool {
    let label = node.label.as_deref().unwrap_or_default();
    base.constraint(id).is_some_and(|c| {
        c.linkage.context.applies_to_process(&schema.id)
            && c.pattern().bindings.iter().any(|b| b.label == label)
    })
}

pub fn evaluate_meta(base: &ConstraintBase, schemas: &[ProcessSchema], resources: &ResourceModel) -> Vec<MetaViolation> {
    let mut out = Vec::new();
    for m in base.meta_constraints() {
        let violation = |element: String, message: String| MetaViolation {
            meta: m.id.clone(),
            element,
            message,
        };
        match &m.for_each {
            MetaSelector::ActivitiesUsing(_) | MetaSelector::ActivitiesLabeled(_) => {
                if let MetaSelector::ActivitiesUsing(r) = &m.for_each {
                    if !resources.is_empty() && !resources.resources.contains(r) {
                        out.push(violation(
                            format!("resource {r}"),
                            "resource is not declared in the resource model".into(),
                        ));
                        continue;
                    }
                }
                let ids = match &m.require {
                    MetaRequirement::Attached(ids) => ids,
                    _ => continue,
                };
                for id in ids {
                    if base.constraint(id).is_none() {
                        out.push(violation(format!("constraint {id}"), "no such constraint in the base".into()));
                    }
                }
                for s in schemas {
                    for node in s.activities() {
                        let selected = match &m.for_each {
                            MetaSelector::ActivitiesUsing(r) => node.resources.contains(r),
                            MetaSelector::ActivitiesLabeled(l) => node.label.as_deref() == Some(l.as_str()),
                            MetaSelector::Constraints(_) => false,
                        };
                        if !selected {
                            continue;
                        }
                        let missing: Vec<&str> = ids
                            .iter()
                            .filter(|id| base.constraint(id).is_some() && !attached(base, id, s, node))
                            .map(String::as_str)
                            .collect();
                        if !missing.is_empty() {
                            out.push(violation(
                                format!("schema {} node {}", s.id, node.id),
                                format!(
                                    "activity '{}' lacks attached constraint {}",
                                    node.label.as_deref().unwrap_or_default(),
                                    missing.join(", ")
                                ),
                            ));
                        }
                    }
                }
            }
            MetaSelector::Constraints(filter) => {
                for c in base.constraints().filter(|c| filter.selects(c)) {
                    if !m.require.holds_for(c) {
                        out.push(violation(
                            format!("constraint {}", c.id),
                            format!("requires {}", m.require.describe()),
                        ));
                    }
                }
            }
        }
    }
    out.sort();
    out
}
