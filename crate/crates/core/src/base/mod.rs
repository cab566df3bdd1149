//! Versioned constraint base with identification cache, on-disk storage,
//! consistency checks and meta constraints.
//!
//! Layout on disk:
//!
//! ```text
//! base/index.json
//! base/constraints/<id>.iupc
//! ```

mod consistency;
mod meta;
mod store;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::constraint::ProcessConstraint;
use crate::dsl::DslError;
use crate::identify::{identify, DomainRuleSet, IdentificationResult, IdentificationStatus};
use crate::model::{ActivityRepository, ProcessSchema};

pub use consistency::{check_consistency, Conflict, ConflictKind};
pub use meta::{evaluate_meta, ConstraintFilter, MetaConstraint, MetaRequirement, MetaSelector, MetaViolation};

#[derive(Debug, Error)]
pub enum BaseError {
    #[error("syntax error in {file}: {message}")]
    Syntax { file: String, message: String },
    #[error("constraint file {file}: {source}")]
    Dsl { file: String, source: DslError },
    #[error("base on disk is at version {on_disk}, this copy was loaded at version {loaded}")]
    VersionConflict { on_disk: u64, loaded: u64 },
    #[error("identification computed at version {identified} is older than base version {version}")]
    StaleIdentification { version: u64, identified: u64 },
    #[error("constraint id {0} is used more than once")]
    DuplicateId(String),
    #[error("no constraint with id {0}")]
    UnknownConstraint(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintBase {
    constraints: BTreeMap<String, ProcessConstraint>,
    meta_constraints: BTreeMap<String, MetaConstraint>,
    identification: BTreeMap<String, IdentificationResult>,
    version: u64,
    identification_version: u64,
    /// Version this copy was loaded at (0 for a fresh base).
    loaded_version: u64,
}

impl ConstraintBase {
    pub fn new() -> Self {
        ConstraintBase::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn identification_version(&self) -> u64 {
        self.identification_version
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty() && self.meta_constraints.is_empty()
    }

    pub fn constraints(&self) -> impl Iterator<Item = &ProcessConstraint> {
        self.constraints.values()
    }

    pub fn constraint(&self, id: &str) -> Option<&ProcessConstraint> {
        self.constraints.get(id)
    }

    pub fn meta_constraints(&self) -> impl Iterator<Item = &MetaConstraint> {
        self.meta_constraints.values()
    }

    pub fn identification(&self) -> &BTreeMap<String, IdentificationResult> {
        &self.identification
    }

    pub fn status_of(&self, id: &str) -> Option<IdentificationStatus> {
        self.identification.get(id).map(|r| r.status)
    }

    fn bump(&mut self) {
        self.version += 1;
    }

    /// Adds a constraint; ids are unique across constraints and meta constraints.
    pub fn insert(&mut self, c: ProcessConstraint) -> Result<(), BaseError> {
        if self.constraints.contains_key(&c.id) || self.meta_constraints.contains_key(&c.id) {
            return Err(BaseError::DuplicateId(c.id));
        }
        self.constraints.insert(c.id.clone(), c);
        self.bump();
        Ok(())
    }

    /// Replaces an existing constraint with the same id.
    pub fn replace(&mut self, c: ProcessConstraint) -> Result<(), BaseError> {
        if !self.constraints.contains_key(&c.id) {
            return Err(BaseError::UnknownConstraint(c.id));
        }
        self.constraints.insert(c.id.clone(), c);
        self.bump();
        Ok(())
    }

    pub fn remove(&mut self, id: &str) -> Result<ProcessConstraint, BaseError> {
        let c = self
            .constraints
            .remove(id)
            .ok_or_else(|| BaseError::UnknownConstraint(id.to_string()))?;
        self.identification.remove(id);
        self.bump();
        Ok(c)
    }

    pub fn insert_meta(&mut self, m: MetaConstraint) -> Result<(), BaseError> {
        if self.constraints.contains_key(&m.id) || self.meta_constraints.contains_key(&m.id) {
            return Err(BaseError::DuplicateId(m.id));
        }
        self.meta_constraints.insert(m.id.clone(), m);
        self.bump();
        Ok(())
    }

    /// Builds a base from parsed document items. Opaque rules are skipped.
    pub fn from_items(items: Vec<crate::dsl::Item>) -> Result<Self, BaseError> {
        let mut base = ConstraintBase::new();
        for item in items {
            match item {
                crate::dsl::Item::Constraint(c) => base.insert(c)?,
                crate::dsl::Item::Meta(m) => base.insert_meta(m)?,
                crate::dsl::Item::Rule(_) => {}
            }
        }
        Ok(base)
    }

    /// Recomputes identification for every constraint.
    pub fn identify(&mut self, schemas: &[ProcessSchema], repo: &ActivityRepository) {
        let rules = DomainRuleSet::from_constraints(self.constraints.values().cloned())
            .expect("base ids are unique");
        self.identification = identify(&rules, schemas, repo)
            .into_iter()
            .map(|r| (r.rule.clone(), r))
            .collect();
        self.bump();
        self.identification_version = self.version;
    }

    /// Replaces the identification cache with precomputed results.
    pub fn set_identification(&mut self, results: Vec<IdentificationResult>) {
        self.identification = results
            .into_iter()
            .filter(|r| self.constraints.contains_key(&r.rule))
            .map(|r| (r.rule.clone(), r))
            .collect();
        self.bump();
        self.identification_version = self.version;
    }

    pub fn is_identification_current(&self) -> bool {
        self.identification_version >= self.version
            && self.constraints.keys().all(|id| self.identification.contains_key(id))
    }

    pub fn ensure_identified(&self) -> Result<(), BaseError> {
        if self.is_identification_current() {
            Ok(())
        } else {
            Err(BaseError::StaleIdentification {
                version: self.version,
                identified: self.identification_version,
            })
        }
    }

    /// The enabled constraints, as a base of their own.
    pub fn filter_enabled(&self) -> Result<ConstraintBase, BaseError> {
        self.ensure_identified()?;
        let mut sub = ConstraintBase::new();
        for c in self.constraints.values() {
            if self.status_of(&c.id) == Some(IdentificationStatus::Enabled) {
                sub.constraints.insert(c.id.clone(), c.clone());
                sub.identification.insert(c.id.clone(), self.identification[&c.id].clone());
            }
        }
        sub.version = self.version;
        sub.identification_version = self.version;
        Ok(sub)
    }
}
