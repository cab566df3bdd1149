//! Property derivation (usage, application, scope, origin) and the
//! constraint-type classification built on top of it.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{AttributeValue, Behavior, ProcessConstraint, ResourceAtom, ACTOR_KEY, DURATION_KEY, ROLE_KEY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Usage {
    #[default]
    Compliance,
    Behavioral,
    Meta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Application {
    DesignTime,
    RunTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Structure,
    Data,
    Resource,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    #[default]
    External,
    ThroughExecution,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $kw:literal),* $(,)? }) => {
        impl $ty {
            pub fn keyword(self) -> &'static str {
                match self { $($ty::$variant => $kw),* }
            }

            pub fn from_keyword(word: &str) -> Option<Self> {
                match word { $($kw => Some($ty::$variant),)* _ => None }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.keyword())
            }
        }
    };
}

keyword_enum!(Usage { Compliance => "compliance", Behavioral => "behavioral", Meta => "meta" });
keyword_enum!(Application { DesignTime => "design-time", RunTime => "run-time" });
keyword_enum!(Scope { Structure => "structure", Data => "data", Resource => "resource", Time => "time" });

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DerivedProperties {
    pub usage: Usage,
    pub application: BTreeSet<Application>,
    pub scope: BTreeSet<Scope>,
    pub origin: Origin,
}

impl Default for DerivedProperties {
    fn default() -> Self {
        DerivedProperties {
            usage: Usage::Compliance,
            application: BTreeSet::from([Application::DesignTime]),
            scope: BTreeSet::from([Scope::Structure]),
            origin: Origin::External,
        }
    }
}

impl DerivedProperties {
    pub fn applies_at(&self, a: Application) -> bool {
        self.application.contains(&a)
    }
}

/// Pure function of the constraint's linkage, condition and behavior.
pub fn derive_properties(c: &ProcessConstraint) -> DerivedProperties {
    let usage = if c.behavior.is_none() {
        Usage::Compliance
    } else {
        Usage::Behavioral
    };

    let mut scope = BTreeSet::from([Scope::Structure]);
    if c.condition.data.is_some() {
        scope.insert(Scope::Data);
    }
    if !c.condition.time.is_empty() {
        scope.insert(Scope::Time);
    }
    if !c.condition.resource.is_empty() {
        scope.insert(Scope::Resource);
    }
    match &c.behavior {
        Behavior::Attribute { key, value, .. } => {
            let aspect = if key == DURATION_KEY || matches!(value, AttributeValue::Distribution { .. }) {
                Scope::Time
            } else if key == ROLE_KEY || key == ACTOR_KEY {
                Scope::Resource
            } else {
                Scope::Data
            };
            scope.insert(aspect);
        }
        Behavior::Synchronize { .. } => {
            scope.insert(Scope::Resource);
        }
        Behavior::RaiseException { .. } | Behavior::None => {}
    }

    let mut application = BTreeSet::new();
    if matches!(usage, Usage::Compliance | Usage::Meta) {
        application.insert(Application::DesignTime);
    }
    let beyond_structure = scope.iter().any(|s| *s != Scope::Structure);
    if beyond_structure || !c.behavior.is_none() {
        application.insert(Application::RunTime);
    }

    let origin = if c.linkage.context.is_instance_specific() {
        Origin::ThroughExecution
    } else {
        Origin::External
    };

    DerivedProperties {
        usage,
        application,
        scope,
        origin,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintType {
    ResourceAttribution,
    TimingAttribution,
    StructuralCompliance,
    DataCompliance,
    TemporalCompliance,
    SeparationOfDuty,
    BindingOfDuty,
    AccessConstraint,
    Synchronization,
    Meta,
    GenericBusinessCompliance,
}

keyword_enum!(ConstraintType {
    ResourceAttribution => "resource-attribution",
    TimingAttribution => "timing-attribution",
    StructuralCompliance => "structural-compliance",
    DataCompliance => "data-compliance",
    TemporalCompliance => "temporal-compliance",
    SeparationOfDuty => "separation-of-duty",
    BindingOfDuty => "binding-of-duty",
    AccessConstraint => "access-constraint",
    Synchronization => "synchronization",
    Meta => "meta",
    GenericBusinessCompliance => "generic-business-compliance",
});

/// Maps a constraint onto one of the implemented type names. Duty and access
/// atoms take precedence over time, time over data, data over pure structure.
pub fn classify_type(c: &ProcessConstraint) -> ConstraintType {
    let props = &c.properties;
    match props.usage {
        Usage::Meta => return ConstraintType::Meta,
        Usage::Behavioral => {
            return match &c.behavior {
                Behavior::Synchronize { .. } => ConstraintType::Synchronization,
                Behavior::Attribute { key, value, .. } => {
                    if key == ROLE_KEY || key == ACTOR_KEY {
                        ConstraintType::ResourceAttribution
                    } else if key == DURATION_KEY || matches!(value, AttributeValue::Distribution { .. }) {
                        ConstraintType::TimingAttribution
                    } else {
                        ConstraintType::GenericBusinessCompliance
                    }
                }
                _ => ConstraintType::GenericBusinessCompliance,
            };
        }
        Usage::Compliance => {}
    }
    let res = &c.condition.resource;
    if res.iter().any(|a| matches!(a, ResourceAtom::DifferentActor(..))) {
        return ConstraintType::SeparationOfDuty;
    }
    if res.iter().any(|a| matches!(a, ResourceAtom::SameActor(..))) {
        return ConstraintType::BindingOfDuty;
    }
    if res.iter().any(|a| matches!(a, ResourceAtom::Role { .. })) {
        return ConstraintType::AccessConstraint;
    }
    if props.scope.contains(&Scope::Time) {
        return ConstraintType::TemporalCompliance;
    }
    if props.scope.contains(&Scope::Data) {
        return ConstraintType::DataCompliance;
    }
    if props.scope.len() == 1 {
        return ConstraintType::StructuralCompliance;
    }
    ConstraintType::GenericBusinessCompliance
}
