use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::expr::Value;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Start,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub activity_label: String,
    pub occurrence_id: String,
    pub timestamp: Timestamp,
    #[serde(default)]
    pub actor: Option<String>,
    #[serde(default)]
    pub data: BTreeMap<String, Value>,
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub instance_id: String,
    pub process_type: String,
    pub kind: EventKind,
    pub activity_label: String,
    pub occurrence_id: String,
    pub timestamp: Timestamp,
    #[serde(default)]
    pub actor: Option<String>,
    #[serde(default)]
    pub data: BTreeMap<String, Value>,
}

impl EventRecord {
    pub fn event(&self) -> Event {
        Event {
            kind: self.kind,
            activity_label: self.activity_label.clone(),
            occurrence_id: self.occurrence_id.clone(),
            timestamp: self.timestamp,
            actor: self.actor.clone(),
            data: self.data.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub instance_id: String,
    pub process_type: String,
    pub events: Vec<Event>,
}

impl Trace {
    /// Builds a trace, ordering events stably by timestamp and checking that
    /// every COMPLETE follows a START of the same occurrence.
    pub fn new(instance_id: impl Into<String>, process_type: impl Into<String>, mut events: Vec<Event>) -> Result<Self, ModelError> {
        let instance_id = instance_id.into();
        events.sort_by_key(|e| e.timestamp);
        let mut open: BTreeMap<&str, &str> = BTreeMap::new();
        let mut closed: BTreeSet<&str> = BTreeSet::new();
        for e in &events {
            let order = |message: &str| ModelError::Order {
                instance: instance_id.clone(),
                occurrence: e.occurrence_id.clone(),
                message: message.to_string(),
            };
            let occ = e.occurrence_id.as_str();
            match e.kind {
                EventKind::Start => {
                    if open.contains_key(occ) || closed.contains(occ) {
                        return Err(order("occurrence started twice"));
                    }
                    open.insert(occ, &e.activity_label);
                }
                EventKind::Complete => match open.remove(occ) {
                    None if closed.contains(occ) => return Err(order("occurrence completed twice")),
                    None => return Err(order("COMPLETE without a matching START")),
                    Some(label) if label != e.activity_label => {
                        return Err(order("COMPLETE names a different activity than its START"))
                    }
                    Some(_) => {
                        closed.insert(occ);
                    }
                },
            }
        }
        Ok(Trace {
            instance_id,
            process_type: process_type.into(),
            events,
        })
    }

    /// Copy with every timestamp shifted by `delta`.
    pub fn shifted(&self, delta: crate::time::Duration) -> Trace {
        Trace {
            events: self
                .events
                .iter()
                .map(|e| Event {
                    timestamp: e.timestamp + delta,
                    ..e.clone()
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Parses a JSON-lines event log into traces ordered by instance id.
pub fn parse_trace(text: &str) -> Result<Vec<Trace>, ModelError> {
    let mut grouped: BTreeMap<String, (String, Vec<Event>)> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: EventRecord =
            serde_json::from_str(line).map_err(|e| ModelError::Syntax(format!("line {}: {e}", n + 1)))?;
        let event = rec.event();
        let entry = grouped
            .entry(rec.instance_id.clone())
            .or_insert_with(|| (rec.process_type.clone(), Vec::new()));
        if entry.0 != rec.process_type {
            return Err(ModelError::invalid(
                format!("instance {}", rec.instance_id),
                format!("events name process types {} and {}", entry.0, rec.process_type),
            ));
        }
        entry.1.push(event);
    }
    grouped
        .into_iter()
        .map(|(id, (ptype, events))| Trace::new(id, ptype, events))
        .collect()
}

pub fn serialize_trace(traces: &[Trace]) -> String {
    let mut out = String::new();
    for t in traces {
        for e in &t.events {
            let rec = EventRecord {
                instance_id: t.instance_id.clone(),
                process_type: t.process_type.clone(),
                kind: e.kind,
                activity_label: e.activity_label.clone(),
                occurrence_id: e.occurrence_id.clone(),
                timestamp: e.timestamp,
                actor: e.actor.clone(),
                data: e.data.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("event serializes"));
            out.push('\n');
        }
    }
    out
}

/// All events of all traces in one stream, ordered by timestamp. Ties keep
/// trace order, then event order within a trace.
pub fn merge_events(traces: &[Trace]) -> Vec<(&Trace, &Event)> {
    let mut all: Vec<(&Trace, &Event)> = traces.iter().flat_map(|t| t.events.iter().map(move |e| (t, e))).collect();
    all.sort_by_key(|(_, e)| e.timestamp);
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(inst: &str, kind: &str, label: &str, occ: &str, ts: &str) -> String {
        format!(
            r#"{{"instance_id":"{inst}","process_type":"treatment","kind":"{kind}","activity_label":"{label}","occurrence_id":"{occ}","timestamp":"{ts}","actor":null,"data":{{}}}}"#
        )
    }

    #[test]
    fn start_complete_pair() {
        let text = [
            line("i1", "start", "blood test", "o1", "2024-01-01T10:00:00Z"),
            line("i1", "complete", "blood test", "o1", "2024-01-01T10:30:00Z"),
        ]
        .join("\n");
        let traces = parse_trace(&text).unwrap();
        assert_eq!(traces.len(), 1);
        assert_eq!(traces[0].events.len(), 2);
    }

    #[test]
    fn interleaved_instances_split() {
        let text = [
            line("i1", "start", "a", "o1", "2024-01-01T10:00:00Z"),
            line("i2", "start", "a", "o2", "2024-01-01T10:01:00Z"),
            line("i1", "complete", "a", "o1", "2024-01-01T10:02:00Z"),
            line("i2", "complete", "a", "o2", "2024-01-01T10:03:00Z"),
        ]
        .join("\n");
        assert_eq!(parse_trace(&text).unwrap().len(), 2);
    }

    #[test]
    fn complete_before_start_is_order_error() {
        let text = [
            line("i1", "complete", "a", "o1", "2024-01-01T10:00:00Z"),
            line("i1", "start", "a", "o1", "2024-01-01T10:30:00Z"),
        ]
        .join("\n");
        assert!(matches!(parse_trace(&text), Err(ModelError::Order { .. })));
    }

    #[test]
    fn floats_are_rejected() {
        let text = line("i1", "start", "a", "o1", "2024-01-01T10:00:00Z").replace(r#""data":{}"#, r#""data":{"x":1.5}"#);
        assert!(matches!(parse_trace(&text), Err(ModelError::Syntax(_))));
    }

    #[test]
    fn round_trip() {
        let text = [
            line("i1", "start", "a", "o1", "2024-01-01T10:00:00Z"),
            line("i1", "complete", "a", "o1", "2024-01-01T10:00:00.250Z"),
        ]
        .join("\n");
        let traces = parse_trace(&text).unwrap();
        assert_eq!(parse_trace(&serialize_trace(&traces)).unwrap(), traces);
    }
}
