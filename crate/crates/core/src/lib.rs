//! Process-constraint engine: identification of process constraints among
//! domain rules, a unified Linkage/Condition/Behavior representation with a
//! text DSL, design-time verification against process schemas, run-time
//! monitoring of instances, and a versioned constraint base.

pub mod base;
pub mod constraint;
pub mod dsl;
pub mod eval;
pub mod expr;
pub mod identify;
pub mod interval;
pub mod matcher;
pub mod model;
pub mod monitor;
pub mod time;
pub mod verify;
