use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{from_json, ModelError};
use crate::expr::Truth;

/// Roles, actors and passive resources of the organization.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceModel {
    #[serde(default)]
    pub roles: BTreeSet<String>,
    #[serde(default)]
    pub actors: BTreeSet<String>,
    #[serde(default)]
    pub role_assignments: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub resources: BTreeSet<String>,
}

impl ResourceModel {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let model: ResourceModel = from_json(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (actor, roles) in &self.role_assignments {
            if !self.actors.contains(actor) {
                return Err(ModelError::invalid(
                    format!("role assignment of {actor}"),
                    "actor is not declared",
                ));
            }
            for role in roles {
                if !self.roles.contains(role) {
                    return Err(ModelError::invalid(
                        format!("role assignment of {actor}"),
                        format!("role {role} is not declared"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("resource model serializes")
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty() && self.actors.is_empty() && self.resources.is_empty()
    }

    /// Unknown when the model does not describe the actor.
    pub fn has_role(&self, actor: &str, role: &str) -> Truth {
        if !self.actors.contains(actor) {
            return Truth::Unknown;
        }
        self.role_assignments
            .get(actor)
            .is_some_and(|roles| roles.contains(role))
            .into()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityRepository {
    pub labels: BTreeSet<String>,
}

impl ActivityRepository {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        from_json(text)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }
}
