//! Process schemas, the activity repository, the resource model and
//! execution traces.

mod paths;
mod resources;
mod schema;
mod trace;

use thiserror::Error;

pub use paths::{enumerate_paths, enumerate_paths_capped, ExecutionPath, TakenGuard, DEFAULT_PATH_CAP};
pub use resources::{ActivityRepository, ResourceModel};
pub use schema::{
    AccessMode, ControlEdge, DataEdge, DataElement, DataType, Domain, GuardOverlap, Node, NodeKind,
    ProcessSchema,
};
pub use trace::{merge_events, parse_trace, serialize_trace, Event, EventKind, EventRecord, Trace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("invalid {element}: {message}")]
    Invalid { element: String, message: String },
    #[error("more than {cap} execution paths")]
    PathExplosion { cap: usize },
    #[error("event order error in instance {instance}, occurrence {occurrence}: {message}")]
    Order {
        instance: String,
        occurrence: String,
        message: String,
    },
}

impl ModelError {
    pub(crate) fn invalid(element: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Invalid {
            element: element.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ModelError> {
    serde_json::from_str(text).map_err(|e| ModelError::Syntax(e.to_string()))
}
