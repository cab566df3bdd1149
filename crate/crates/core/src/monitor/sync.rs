use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

/// (instance id, occurrence id)
pub type Holder = (String, String);

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
struct MutexEntry {
    holder: Option<Holder>,
    queue: VecDeque<Holder>,
}

/// Session-wide exclusive resources. Each resource has at most one holder;
/// waiting occurrences are granted the resource in arrival order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MutexTable {
    entries: BTreeMap<String, MutexEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Request {
    Acquired,
    Queued,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Completion {
    Released { granted: Option<Holder> },
    /// The occurrence finished while still waiting for the resource.
    WasQueued,
    NotInvolved,
}

impl MutexTable {
    pub fn holder(&self, resource: &str) -> Option<(&str, &str)> {
        self.entries
            .get(resource)
            .and_then(|e| e.holder.as_ref())
            .map(|(i, o)| (i.as_str(), o.as_str()))
    }

    pub fn holders(&self) -> impl Iterator<Item = (&str, &Holder)> {
        self.entries
            .iter()
            .filter_map(|(r, e)| e.holder.as_ref().map(|h| (r.as_str(), h)))
    }

    pub fn queued(&self, resource: &str) -> Vec<&Holder> {
        self.entries.get(resource).map(|e| e.queue.iter().collect()).unwrap_or_default()
    }

    pub fn request(&mut self, resource: &str, instance: &str, occurrence: &str) -> Request {
        let who = (instance.to_string(), occurrence.to_string());
        let e = self.entries.entry(resource.to_string()).or_default();
        if e.holder.is_none() {
            e.holder = Some(who);
            Request::Acquired
        } else {
            e.queue.push_back(who);
            Request::Queued
        }
    }

    pub fn complete(&mut self, resource: &str, instance: &str, occurrence: &str) -> Completion {
        let Some(e) = self.entries.get_mut(resource) else {
            return Completion::NotInvolved;
        };
        let is_me = |h: &Holder| h.0 == instance && h.1 == occurrence;
        if e.holder.as_ref().is_some_and(is_me) {
            e.holder = e.queue.pop_front();
            return Completion::Released {
                granted: e.holder.clone(),
            };
        }
        if let Some(pos) = e.queue.iter().position(is_me) {
            e.queue.remove(pos);
            return Completion::WasQueued;
        }
        Completion::NotInvolved
    }

    /// Drops an occurrence from every queue and releases whatever it holds.
    pub fn abandon(&mut self, instance: &str, occurrence: &str) {
        let is_me = |h: &Holder| h.0 == instance && h.1 == occurrence;
        for e in self.entries.values_mut() {
            e.queue.retain(|h| !is_me(h));
            if e.holder.as_ref().is_some_and(is_me) {
                e.holder = e.queue.pop_front();
            }
        }
    }
}
