//! Unified constraint representation: a [`Linkage`] (context, structural
//! pattern, trigger positions), a [`Condition`] over data, time and resources,
//! and a [`Behavior`].

mod properties;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{quoted, DataExpr};
use crate::time::Duration;

pub use properties::{
    classify_type, derive_properties, Application, ConstraintType, DerivedProperties, Origin, Scope,
    Usage,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("constraint {id}: {message}")]
pub struct ConstraintError {
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ProcessConstraint {
    pub id: String,
    /// The domain rule as originally written, if recorded.
    pub source_text: Option<String>,
    pub linkage: Linkage,
    pub condition: Condition,
    pub behavior: Behavior,
    pub properties: DerivedProperties,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Linkage {
    pub context: Context,
    pub pattern: StructuralPattern,
    pub triggers: Vec<TriggerPosition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Context {
    /// Every instance of every process type.
    All,
    Processes(BTreeMap<String, InstanceSelector>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceSelector {
    All,
    Named(BTreeSet<String>),
}

impl InstanceSelector {
    pub fn includes(&self, instance: &str) -> bool {
        match self {
            InstanceSelector::All => true,
            InstanceSelector::Named(set) => set.contains(instance),
        }
    }

    fn overlaps(&self, other: &InstanceSelector) -> bool {
        match (self, other) {
            (InstanceSelector::Named(a), InstanceSelector::Named(b)) => !a.is_disjoint(b),
            _ => true,
        }
    }
}

impl Context {
    pub fn single(process: impl Into<String>) -> Self {
        Context::Processes(BTreeMap::from([(process.into(), InstanceSelector::All)]))
    }

    pub fn applies_to_process(&self, process: &str) -> bool {
        match self {
            Context::All => true,
            Context::Processes(map) => map.contains_key(process),
        }
    }

    pub fn applies_to_instance(&self, process: &str, instance: &str) -> bool {
        match self {
            Context::All => true,
            Context::Processes(map) => map.get(process).is_some_and(|sel| sel.includes(instance)),
        }
    }

    /// True when the context names specific instances rather than whole
    /// process types.
    pub fn is_instance_specific(&self) -> bool {
        match self {
            Context::All => false,
            Context::Processes(map) => map.values().any(|s| matches!(s, InstanceSelector::Named(_))),
        }
    }

    /// Instances named by an instance-specific context, across all processes.
    pub fn named_instances(&self) -> BTreeSet<&str> {
        match self {
            Context::All => BTreeSet::new(),
            Context::Processes(map) => map
                .values()
                .filter_map(|s| match s {
                    InstanceSelector::Named(set) => Some(set.iter().map(String::as_str)),
                    InstanceSelector::All => None,
                })
                .flatten()
                .collect(),
        }
    }

    pub fn overlaps(&self, other: &Context) -> bool {
        match (self, other) {
            (Context::All, _) | (_, Context::All) => true,
            (Context::Processes(a), Context::Processes(b)) => a
                .iter()
                .any(|(p, sel)| b.get(p).is_some_and(|other_sel| sel.overlaps(other_sel))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BindingRole {
    /// Part of the triggering (antecedent) pattern.
    Anchor,
    /// Part of the required (consequent) pattern.
    Consequent,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Binding {
    pub var: String,
    pub label: String,
    pub role: BindingRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    EventuallyPrecedes,
    DirectlyPrecedes,
    ParallelWith,
}

impl RelationKind {
    pub fn keyword(self) -> &'static str {
        match self {
            RelationKind::EventuallyPrecedes => "eventually-precedes",
            RelationKind::DirectlyPrecedes => "directly-precedes",
            RelationKind::ParallelWith => "parallel-with",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "eventually-precedes" => Some(RelationKind::EventuallyPrecedes),
            "directly-precedes" => Some(RelationKind::DirectlyPrecedes),
            "parallel-with" => Some(RelationKind::ParallelWith),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Relation {
    pub kind: RelationKind,
    pub left: String,
    pub right: String,
    /// Anchor relations restrict which anchor bindings trigger the
    /// constraint; consequent relations are part of the requirement.
    pub role: BindingRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct StructuralPattern {
    pub bindings: Vec<Binding>,
    pub relations: Vec<Relation>,
    pub absences: Vec<String>,
}

impl StructuralPattern {
    pub fn anchors(&self) -> impl Iterator<Item = &Binding> {
        self.bindings.iter().filter(|b| b.role == BindingRole::Anchor)
    }

    pub fn consequents(&self) -> impl Iterator<Item = &Binding> {
        self.bindings.iter().filter(|b| b.role == BindingRole::Consequent)
    }

    pub fn binding(&self, var: &str) -> Option<&Binding> {
        self.bindings.iter().find(|b| b.var == var)
    }

    pub fn label_of(&self, var: &str) -> Option<&str> {
        self.binding(var).map(|b| b.label.as_str())
    }

    pub fn is_anchor(&self, var: &str) -> bool {
        self.binding(var).is_some_and(|b| b.role == BindingRole::Anchor)
    }

    pub fn anchor_relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.iter().filter(|r| r.role == BindingRole::Anchor)
    }

    pub fn consequent_relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.iter().filter(|r| r.role == BindingRole::Consequent)
    }

    /// True when the pattern requires something beyond its anchors.
    pub fn has_requirement(&self) -> bool {
        self.consequents().next().is_some()
            || self.consequent_relations().next().is_some()
            || !self.absences.is_empty()
    }

    pub fn anchor_labels(&self) -> BTreeSet<&str> {
        self.anchors().map(|b| b.label.as_str()).collect()
    }

    /// Every activity label the pattern mentions, including absences.
    pub fn referenced_labels(&self) -> BTreeSet<&str> {
        self.bindings
            .iter()
            .map(|b| b.label.as_str())
            .chain(self.absences.iter().map(String::as_str))
            .collect()
    }
}

impl fmt::Display for StructuralPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .bindings
            .iter()
            .map(|b| format!("∃{} Is({}, {})", b.var, b.var, b.label))
            .collect();
        for r in &self.relations {
            let op = match r.kind {
                RelationKind::EventuallyPrecedes => "𝒜*",
                RelationKind::DirectlyPrecedes => "→",
                RelationKind::ParallelWith => "∥",
            };
            parts.push(format!("{}{op}{}", r.left, r.right));
        }
        for a in &self.absences {
            parts.push(format!("∄ Is(_, {a})"));
        }
        f.write_str(&parts.join(" ∧ "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TriggerPosition {
    pub position: Position,
    pub target: String,
}

impl fmt::Display for TriggerPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.position {
            Position::Before => "before",
            Position::After => "after",
        };
        write!(f, "{p}({})", self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Condition {
    pub data: Option<DataExpr>,
    pub time: Vec<TimeAtom>,
    pub resource: Vec<ResourceAtom>,
}

impl Condition {
    pub fn is_empty(&self) -> bool {
        self.data.is_none() && self.time.is_empty() && self.resource.is_empty()
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        let mut vars: BTreeSet<&str> = self.data.iter().flat_map(|d| d.variables()).collect();
        for t in &self.time {
            vars.extend(t.variables());
        }
        for r in &self.resource {
            vars.extend(r.variables());
        }
        vars
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeAtom {
    /// The gap from completion of `from` to the start of `to` is at least `duration`.
    MinTimeBetween { from: String, to: String, duration: Duration },
    /// The gap from completion of `from` to the start of `to` is at most `duration`.
    MaxTimeBetween { from: String, to: String, duration: Duration },
}

impl TimeAtom {
    pub fn variables(&self) -> [&str; 2] {
        match self {
            TimeAtom::MinTimeBetween { from, to, .. } | TimeAtom::MaxTimeBetween { from, to, .. } => {
                [from, to]
            }
        }
    }

    pub fn duration(&self) -> Duration {
        match self {
            TimeAtom::MinTimeBetween { duration, .. } | TimeAtom::MaxTimeBetween { duration, .. } => *duration,
        }
    }
}

impl fmt::Display for TimeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeAtom::MinTimeBetween { from, to, duration } => {
                write!(f, "min_time_between({from}, {to}, {duration})")
            }
            TimeAtom::MaxTimeBetween { from, to, duration } => {
                write!(f, "max_time_between({from}, {to}, {duration})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceAtom {
    Role { var: String, role: String },
    SameActor(String, String),
    DifferentActor(String, String),
    UsesResource { var: String, resource: String },
}

impl ResourceAtom {
    pub fn variables(&self) -> Vec<&str> {
        match self {
            ResourceAtom::Role { var, .. } | ResourceAtom::UsesResource { var, .. } => vec![var],
            ResourceAtom::SameActor(a, b) | ResourceAtom::DifferentActor(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for ResourceAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceAtom::Role { var, role } => write!(f, "role({var}) == {}", quoted(role)),
            ResourceAtom::SameActor(a, b) => write!(f, "same-actor({a}, {b})"),
            ResourceAtom::DifferentActor(a, b) => write!(f, "different-actor({a}, {b})"),
            ResourceAtom::UsesResource { var, resource } => {
                write!(f, "uses-resource({var}, {})", quoted(resource))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributeValue {
    Text(String),
    Duration(Duration),
    /// Mean and standard deviation of an activity duration.
    Distribution { mean: Duration, deviation: Duration },
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Text(s) => f.write_str(&quoted(s)),
            AttributeValue::Duration(d) => write!(f, "{d}"),
            AttributeValue::Distribution { mean, deviation } => write!(f, "({mean}, {deviation})"),
        }
    }
}

pub const ROLE_KEY: &str = "ROLE";
pub const ACTOR_KEY: &str = "ACTOR";
pub const DURATION_KEY: &str = "DURATION";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    #[default]
    None,
    Attribute {
        target: String,
        key: String,
        value: AttributeValue,
    },
    Synchronize {
        target: String,
        resource: String,
    },
    RaiseException {
        target: String,
        message: String,
    },
}

impl Behavior {
    pub fn is_none(&self) -> bool {
        matches!(self, Behavior::None)
    }

    pub fn target(&self) -> Option<&str> {
        match self {
            Behavior::None => None,
            Behavior::Attribute { target, .. }
            | Behavior::Synchronize { target, .. }
            | Behavior::RaiseException { target, .. } => Some(target),
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Behavior::None => f.write_str("∅"),
            Behavior::Attribute { target, key, value } => write!(f, "attribute {target} {key} := {value}"),
            Behavior::Synchronize { target, resource } => {
                write!(f, "synchronize {target} {}", quoted(resource))
            }
            Behavior::RaiseException { target, message } => write!(f, "raise {target} {}", quoted(message)),
        }
    }
}

impl ProcessConstraint {
    /// Validates the structural invariants and derives the properties.
    pub fn new(
        id: impl Into<String>,
        source_text: Option<String>,
        linkage: Linkage,
        condition: Condition,
        behavior: Behavior,
    ) -> Result<Self, ConstraintError> {
        let id = id.into();
        let fail = |message: String| ConstraintError {
            id: id.clone(),
            message,
        };
        validate(&linkage, &condition, &behavior).map_err(fail)?;
        let mut c = ProcessConstraint {
            id,
            source_text,
            linkage,
            condition,
            behavior,
            properties: DerivedProperties::default(),
        };
        c.properties = derive_properties(&c);
        Ok(c)
    }

    pub fn pattern(&self) -> &StructuralPattern {
        &self.linkage.pattern
    }

    pub fn constraint_type(&self) -> ConstraintType {
        classify_type(self)
    }

    /// Linkage in compact tuple form, e.g. `((Invasive Surgery, ALL), SP_C6, ∅)`.
    pub fn compact_linkage(&self) -> String {
        let ctx = match &self.linkage.context {
            Context::All => "(*, ALL)".to_string(),
            Context::Processes(map) => map
                .iter()
                .map(|(p, sel)| match sel {
                    InstanceSelector::All => format!("({p}, ALL)"),
                    InstanceSelector::Named(set) => {
                        format!("({p}, {{{}}})", set.iter().cloned().collect::<Vec<_>>().join(", "))
                    }
                })
                .collect::<Vec<_>>()
                .join(" | "),
        };
        let tp = match self.linkage.triggers.as_slice() {
            [] => "∅".to_string(),
            [one] => one.to_string(),
            many => format!(
                "{{{}}}",
                many.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
            ),
        };
        format!("({ctx}, SP_{}, {tp})", self.id)
    }

    /// Copy with variables renamed in binding order (`v0`, `v1`, ...), the id
    /// cleared and the source text dropped. Two constraints are duplicates when
    /// their canonical forms are equal.
    pub fn canonical(&self) -> ProcessConstraint {
        let names: BTreeMap<&str, String> = self
            .linkage
            .pattern
            .bindings
            .iter()
            .enumerate()
            .map(|(i, b)| (b.var.as_str(), format!("v{i}")))
            .collect();
        let r = |v: &str| names.get(v).cloned().unwrap_or_else(|| v.to_string());
        let pattern = &self.linkage.pattern;
        let linkage = Linkage {
            context: self.linkage.context.clone(),
            pattern: StructuralPattern {
                bindings: pattern
                    .bindings
                    .iter()
                    .map(|b| Binding {
                        var: r(&b.var),
                        ..b.clone()
                    })
                    .collect(),
                relations: pattern
                    .relations
                    .iter()
                    .map(|rel| Relation {
                        left: r(&rel.left),
                        right: r(&rel.right),
                        ..rel.clone()
                    })
                    .collect(),
                absences: pattern.absences.clone(),
            },
            triggers: self
                .linkage
                .triggers
                .iter()
                .map(|t| TriggerPosition {
                    position: t.position,
                    target: r(&t.target),
                })
                .collect(),
        };
        let condition = Condition {
            data: self.condition.data.as_ref().map(|d| rename_expr(d, &r)),
            time: self
                .condition
                .time
                .iter()
                .map(|t| match t {
                    TimeAtom::MinTimeBetween { from, to, duration } => TimeAtom::MinTimeBetween {
                        from: r(from),
                        to: r(to),
                        duration: *duration,
                    },
                    TimeAtom::MaxTimeBetween { from, to, duration } => TimeAtom::MaxTimeBetween {
                        from: r(from),
                        to: r(to),
                        duration: *duration,
                    },
                })
                .collect(),
            resource: self
                .condition
                .resource
                .iter()
                .map(|a| match a {
                    ResourceAtom::Role { var, role } => ResourceAtom::Role {
                        var: r(var),
                        role: role.clone(),
                    },
                    ResourceAtom::SameActor(a, b) => ResourceAtom::SameActor(r(a), r(b)),
                    ResourceAtom::DifferentActor(a, b) => ResourceAtom::DifferentActor(r(a), r(b)),
                    ResourceAtom::UsesResource { var, resource } => ResourceAtom::UsesResource {
                        var: r(var),
                        resource: resource.clone(),
                    },
                })
                .collect(),
        };
        let behavior = match &self.behavior {
            Behavior::None => Behavior::None,
            Behavior::Attribute { target, key, value } => Behavior::Attribute {
                target: r(target),
                key: key.clone(),
                value: value.clone(),
            },
            Behavior::Synchronize { target, resource } => Behavior::Synchronize {
                target: r(target),
                resource: resource.clone(),
            },
            Behavior::RaiseException { target, message } => Behavior::RaiseException {
                target: r(target),
                message: message.clone(),
            },
        };
        ProcessConstraint {
            id: String::new(),
            source_text: None,
            linkage,
            condition,
            behavior,
            properties: self.properties.clone(),
        }
    }
}

fn rename_expr(e: &DataExpr, r: &dyn Fn(&str) -> String) -> DataExpr {
    let f = |fr: &crate::expr::FieldRef| crate::expr::FieldRef {
        var: fr.var.as_deref().map(r),
        field: fr.field.clone(),
    };
    match e {
        DataExpr::Compare { field, op, value } => DataExpr::Compare {
            field: f(field),
            op: *op,
            value: value.clone(),
        },
        DataExpr::SameValue(a, b) => DataExpr::SameValue(f(a), f(b)),
        DataExpr::And(a, b) => DataExpr::And(Box::new(rename_expr(a, r)), Box::new(rename_expr(b, r))),
        DataExpr::Or(a, b) => DataExpr::Or(Box::new(rename_expr(a, r)), Box::new(rename_expr(b, r))),
        DataExpr::Not(a) => DataExpr::Not(Box::new(rename_expr(a, r))),
    }
}

fn validate(linkage: &Linkage, condition: &Condition, behavior: &Behavior) -> Result<(), String> {
    let pattern = &linkage.pattern;
    if pattern.anchors().next().is_none() {
        return Err("structural pattern needs at least one anchor binding".into());
    }
    let mut seen = BTreeSet::new();
    for b in &pattern.bindings {
        if !seen.insert(b.var.as_str()) {
            return Err(format!("variable {} bound twice", b.var));
        }
        if b.label.is_empty() {
            return Err(format!("variable {} bound to an empty label", b.var));
        }
    }
    let bound = |v: &str| seen.contains(v);
    for r in &pattern.relations {
        for v in [&r.left, &r.right] {
            if !bound(v) {
                return Err(format!("relation references unbound variable {v}"));
            }
            if r.role == BindingRole::Anchor && !pattern.is_anchor(v) {
                return Err(format!("anchor relation references non-anchor variable {v}"));
            }
        }
        if r.left == r.right {
            return Err(format!("relation {} relates {} to itself", r.kind.keyword(), r.left));
        }
    }
    if let Context::Processes(map) = &linkage.context {
        if map.is_empty() {
            return Err("context names no process".into());
        }
        for (p, sel) in map {
            if matches!(sel, InstanceSelector::Named(s) if s.is_empty()) {
                return Err(format!("context for process {p} names no instance"));
            }
        }
    }
    for t in &linkage.triggers {
        if !bound(&t.target) {
            return Err(format!("trigger position references unbound variable {}", t.target));
        }
    }
    if !linkage.triggers.is_empty() && behavior.is_none() {
        return Err("trigger positions require a behavior".into());
    }
    if let Some(d) = &condition.data {
        for fr in d.field_refs() {
            match &fr.var {
                None => return Err(format!("data condition field {} lacks a variable", fr.field)),
                Some(v) if !bound(v) => return Err(format!("condition references unbound variable {v}")),
                _ => {}
            }
        }
    }
    for v in condition.variables() {
        if !bound(v) {
            return Err(format!("condition references unbound variable {v}"));
        }
    }
    for t in &condition.time {
        if !t.duration().is_positive() {
            return Err(format!("duration in {t} must be positive"));
        }
    }
    if let Some(target) = behavior.target() {
        if !bound(target) {
            return Err(format!("behavior references unbound variable {target}"));
        }
    }
    if matches!(behavior, Behavior::RaiseException { .. }) && condition.is_empty() {
        return Err("raise behavior needs a condition describing the exceptional case".into());
    }
    if let Behavior::Attribute {
        value: AttributeValue::Distribution { mean, deviation },
        ..
    } = behavior
    {
        if mean.millis() < 0 || deviation.millis() < 0 {
            return Err("duration distribution must be non-negative".into());
        }
    }
    Ok(())
}
