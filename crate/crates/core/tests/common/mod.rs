//! Shared helpers for integration tests: fixture access, random block
//! structured schemas, a brute-force path oracle and trace linearization.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use iupc_core::constraint::ProcessConstraint;
use iupc_core::dsl::parse_constraint;
use iupc_core::model::{Event, EventKind, ProcessSchema, Trace};
use iupc_core::time::{Duration, Timestamp};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn schema_fixture(rel: &str) -> ProcessSchema {
    ProcessSchema::parse(&read_fixture(rel)).unwrap()
}

pub const LABELS: [&str; 5] = ["A", "B", "C", "D", "E"];

/// Block-structured process model. Activities are numbered in creation order.
#[derive(Debug, Clone)]
pub enum Tree {
    Act(usize),
    Seq(Vec<Tree>),
    /// Branches; at most one is an empty sequence.
    Xor(Vec<Tree>),
    And(Vec<Tree>),
}

#[derive(Debug, Clone)]
pub struct RandomModel {
    pub tree: Tree,
    /// Label of activity `i`.
    pub labels: Vec<&'static str>,
}

struct Budget {
    acts: usize,
    xors: usize,
    ands: usize,
}

/// A random loop-free model with at most `max_acts` activities, two xor
/// blocks and one and-block.
pub fn random_model(rng: &mut impl Rng, max_acts: usize) -> RandomModel {
    let mut budget = Budget {
        acts: rng.gen_range(1..=max_acts),
        xors: 2,
        ands: 1,
    };
    let mut labels = Vec::new();
    let tree = gen_seq(rng, &mut budget, &mut labels, 1);
    RandomModel { tree, labels }
}

fn gen_seq(rng: &mut impl Rng, b: &mut Budget, labels: &mut Vec<&'static str>, min: usize) -> Tree {
    let n = rng.gen_range(min..=3);
    let mut items = Vec::new();
    for _ in 0..n {
        if b.acts == 0 {
            break;
        }
        items.push(gen_item(rng, b, labels));
    }
    Tree::Seq(items)
}

fn gen_item(rng: &mut impl Rng, b: &mut Budget, labels: &mut Vec<&'static str>) -> Tree {
    let roll = rng.gen_range(0..10);
    if roll < 2 && b.xors > 0 && b.acts >= 1 {
        b.xors -= 1;
        let k = rng.gen_range(2..=3);
        let mut branches = Vec::new();
        let mut empty = false;
        for _ in 0..k {
            let allow_empty = !empty && rng.gen_bool(0.3);
            let br = gen_seq(rng, b, labels, usize::from(!allow_empty));
            if matches!(&br, Tree::Seq(v) if v.is_empty()) {
                if empty {
                    continue;
                }
                empty = true;
            }
            branches.push(br);
        }
        if branches.len() >= 2 {
            return Tree::Xor(branches);
        }
        return Tree::Seq(branches);
    }
    if roll < 4 && b.ands > 0 && b.acts >= 2 {
        b.ands -= 1;
        let mut branches = Vec::new();
        for _ in 0..2 {
            let br = gen_seq(rng, b, labels, 1);
            if !matches!(&br, Tree::Seq(v) if v.is_empty()) {
                branches.push(br);
            }
        }
        if branches.len() == 2 {
            return Tree::And(branches);
        }
        return Tree::Seq(branches);
    }
    b.acts -= 1;
    labels.push(*LABELS.choose(rng).unwrap());
    Tree::Act(labels.len() - 1)
}

pub fn act_id(i: usize) -> String {
    format!("t{i}")
}

struct Builder<'a> {
    labels: &'a [&'static str],
    nodes: Vec<String>,
    edges: Vec<String>,
    gateways: usize,
    xors: usize,
}

impl Builder<'_> {
    fn edge(&mut self, from: &str, to: &str, guard: Option<String>) {
        match guard {
            Some(g) => self
                .edges
                .push(format!(r#"{{"from": "{from}", "to": "{to}", "guard": "{g}"}}"#)),
            None => self.edges.push(format!(r#"{{"from": "{from}", "to": "{to}"}}"#)),
        }
    }

    fn node(&mut self, id: &str, kind: &str) {
        self.nodes.push(format!(r#"{{"id": "{id}", "kind": "{kind}"}}"#));
    }

    /// Emits `t` after `prev`; the first edge carries `guard`. Returns the
    /// exit node, or `None` when `t` is empty.
    fn build(&mut self, t: &Tree, prev: &str, guard: Option<String>) -> Option<String> {
        match t {
            Tree::Act(i) => {
                let id = act_id(*i);
                self.nodes.push(format!(
                    r#"{{"id": "{id}", "kind": "activity", "label": "{}"}}"#,
                    self.labels[*i]
                ));
                self.edge(prev, &id, guard);
                Some(id)
            }
            Tree::Seq(items) => {
                let mut cur = prev.to_string();
                let mut guard = guard;
                let mut any = false;
                for it in items {
                    if let Some(exit) = self.build(it, &cur, guard.clone()) {
                        guard = None;
                        cur = exit;
                        any = true;
                    }
                }
                any.then_some(cur)
            }
            Tree::Xor(branches) | Tree::And(branches) => {
                let xor = matches!(t, Tree::Xor(_));
                let g = self.gateways;
                self.gateways += 1;
                let (split, join) = (format!("g{g}s"), format!("g{g}j"));
                let element = format!("x{}", self.xors);
                if xor {
                    self.xors += 1;
                    self.node(&split, "xor-split");
                    self.node(&join, "xor-join");
                } else {
                    self.node(&split, "and-split");
                    self.node(&join, "and-join");
                }
                self.edge(prev, &split, guard);
                for (i, br) in branches.iter().enumerate() {
                    let bg = xor.then(|| format!("{element} == {i}"));
                    match self.build(br, &split, bg.clone()) {
                        Some(exit) => self.edge(&exit, &join, None),
                        None => self.edge(&split, &join, bg),
                    }
                }
                Some(join)
            }
        }
    }
}

impl RandomModel {
    pub fn schema(&self, id: &str) -> ProcessSchema {
        let mut b = Builder {
            labels: &self.labels,
            nodes: vec![r#"{"id": "start", "kind": "start"}"#.into(), r#"{"id": "end", "kind": "end"}"#.into()],
            edges: Vec::new(),
            gateways: 0,
            xors: 0,
        };
        let exit = b.build(&self.tree, "start", None).unwrap_or_else(|| "start".into());
        b.edge(&exit, "end", None);
        let data: Vec<String> = (0..b.xors)
            .map(|i| format!(r#"{{"name": "x{i}", "type": "integer"}}"#))
            .collect();
        let text = format!(
            r#"{{"id": "{id}", "nodes": [{}], "control_edges": [{}], "data_elements": [{}]}}"#,
            b.nodes.join(","),
            b.edges.join(","),
            data.join(",")
        );
        ProcessSchema::parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"))
    }

    /// Every activity sequence the model admits, computed from the tree.
    pub fn paths(&self) -> BTreeSet<Vec<usize>> {
        lang(&self.tree).into_iter().collect()
    }

    /// Activity pairs that may run concurrently.
    pub fn concurrent_pairs(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        collect_concurrency(&self.tree, &mut out);
        out
    }

    /// One random run.
    pub fn linearize(&self, rng: &mut impl Rng) -> Vec<usize> {
        walk(&self.tree, rng)
    }

    pub fn used_labels(&self) -> Vec<&'static str> {
        let set: BTreeSet<_> = self.labels.iter().copied().collect();
        set.into_iter().collect()
    }
}

fn lang(t: &Tree) -> Vec<Vec<usize>> {
    match t {
        Tree::Act(i) => vec![vec![*i]],
        Tree::Seq(items) => items.iter().fold(vec![vec![]], |acc, it| {
            let tails = lang(it);
            acc.iter()
                .flat_map(|h| tails.iter().map(move |t| [h.clone(), t.clone()].concat()))
                .collect()
        }),
        Tree::Xor(branches) => branches.iter().flat_map(lang).collect(),
        Tree::And(branches) => branches.iter().fold(vec![vec![]], |acc, br| {
            let alts = lang(br);
            acc.iter()
                .flat_map(|a| alts.iter().flat_map(move |b| shuffles(a, b)))
                .collect()
        }),
    }
}

fn shuffles(a: &[usize], b: &[usize]) -> Vec<Vec<usize>> {
    if a.is_empty() {
        return vec![b.to_vec()];
    }
    if b.is_empty() {
        return vec![a.to_vec()];
    }
    let mut out = Vec::new();
    for mut s in shuffles(&a[1..], b) {
        s.insert(0, a[0]);
        out.push(s);
    }
    for mut s in shuffles(a, &b[1..]) {
        s.insert(0, b[0]);
        out.push(s);
    }
    out
}

fn acts(t: &Tree) -> Vec<usize> {
    match t {
        Tree::Act(i) => vec![*i],
        Tree::Seq(v) | Tree::Xor(v) | Tree::And(v) => v.iter().flat_map(acts).collect(),
    }
}

fn collect_concurrency(t: &Tree, out: &mut BTreeSet<(usize, usize)>) {
    match t {
        Tree::Act(_) => {}
        Tree::Seq(v) | Tree::Xor(v) => v.iter().for_each(|c| collect_concurrency(c, out)),
        Tree::And(v) => {
            for (i, x) in v.iter().enumerate() {
                for y in &v[i + 1..] {
                    for a in acts(x) {
                        for b in acts(y) {
                            out.insert((a, b));
                            out.insert((b, a));
                        }
                    }
                }
                collect_concurrency(x, out);
            }
        }
    }
}

fn walk(t: &Tree, rng: &mut impl Rng) -> Vec<usize> {
    match t {
        Tree::Act(i) => vec![*i],
        Tree::Seq(items) => items.iter().flat_map(|i| walk(i, rng)).collect(),
        Tree::Xor(branches) => walk(branches.choose(rng).unwrap(), rng),
        Tree::And(branches) => {
            let mut queues: Vec<Vec<usize>> = branches.iter().map(|b| walk(b, rng)).collect();
            queues.iter_mut().for_each(|q| q.reverse());
            let mut out = Vec::new();
            loop {
                let open: Vec<usize> = (0..queues.len()).filter(|&i| !queues[i].is_empty()).collect();
                let Some(&pick) = open.choose(rng) else {
                    break;
                };
                out.push(queues[pick].pop().unwrap());
            }
            out
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    /// consequent before anchor
    Before,
    /// anchor before consequent
    After,
    /// anchor immediately before consequent
    DirectlyAfter,
    /// consequent immediately before anchor
    DirectlyBefore,
    Parallel,
    /// consequent anywhere
    Exists,
}

/// A single-anchor pattern: `anchor` must be accompanied by `consequent`
/// in relation `rel`, and `absent` must not occur.
#[derive(Debug, Clone)]
pub struct RandomPattern {
    pub anchor: &'static str,
    pub consequent: Option<(&'static str, Rel)>,
    pub absent: Option<&'static str>,
}

pub fn random_pattern(rng: &mut impl Rng, anchor_pool: &[&'static str]) -> RandomPattern {
    let anchor = *anchor_pool.choose(rng).unwrap();
    let rels = [
        Rel::Before,
        Rel::After,
        Rel::DirectlyAfter,
        Rel::DirectlyBefore,
        Rel::Parallel,
        Rel::Exists,
    ];
    let consequent = rng
        .gen_bool(0.85)
        .then(|| (*LABELS.choose(rng).unwrap(), *rels.choose(rng).unwrap()));
    let absent = (consequent.is_none() || rng.gen_bool(0.2)).then(|| *LABELS.choose(rng).unwrap());
    RandomPattern {
        anchor,
        consequent,
        absent,
    }
}

impl RandomPattern {
    pub fn source(&self, id: &str) -> String {
        let mut s = format!("constraint {id} {{ context all; on exists a is '{}';", self.anchor);
        if let Some((label, rel)) = self.consequent {
            let relation = match rel {
                Rel::Before => " and b eventually-precedes a",
                Rel::After => " and a eventually-precedes b",
                Rel::DirectlyAfter => " and a directly-precedes b",
                Rel::DirectlyBefore => " and b directly-precedes a",
                Rel::Parallel => " and a parallel-with b",
                Rel::Exists => "",
            };
            s += &format!(" require exists b is '{label}'{relation};");
        }
        if let Some(label) = self.absent {
            s += &format!(" absent '{label}';");
        }
        s + " }"
    }

    pub fn constraint(&self, id: &str) -> ProcessConstraint {
        parse_constraint(&self.source(id)).unwrap()
    }

    /// Decides the pattern on one path independently of the library:
    /// `None` when the anchor does not occur.
    pub fn holds(&self, model: &RandomModel, path: &[usize], concurrent: &BTreeSet<(usize, usize)>) -> Option<bool> {
        let label = |pos: usize| model.labels[path[pos]];
        let anchors: Vec<usize> = (0..path.len()).filter(|&i| label(i) == self.anchor).collect();
        if anchors.is_empty() {
            return None;
        }
        if self.absent.is_some_and(|z| (0..path.len()).any(|i| label(i) == z)) {
            return Some(false);
        }
        let Some((cons, rel)) = self.consequent else {
            return Some(true);
        };
        Some(anchors.iter().all(|&i| {
            (0..path.len()).any(|j| {
                j != i
                    && label(j) == cons
                    && match rel {
                        Rel::Before => j < i,
                        Rel::After => i < j,
                        Rel::DirectlyAfter => j == i + 1,
                        Rel::DirectlyBefore => i == j + 1,
                        Rel::Parallel => concurrent.contains(&(path[i], path[j])),
                        Rel::Exists => true,
                    }
            })
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVerdict {
    Unmatched,
    Satisfied,
    Violated,
    PossiblyViolated,
}

/// Brute force over every path of the tree.
pub fn oracle_verdict(model: &RandomModel, p: &RandomPattern) -> (OracleVerdict, BTreeSet<Vec<usize>>) {
    let concurrent = model.concurrent_pairs();
    let mut relevant = 0;
    let mut failing = BTreeSet::new();
    for path in model.paths() {
        match p.holds(model, &path, &concurrent) {
            None => {}
            Some(ok) => {
                relevant += 1;
                if !ok {
                    failing.insert(path);
                }
            }
        }
    }
    let v = if !model.labels.contains(&p.anchor) {
        OracleVerdict::Unmatched
    } else if failing.is_empty() {
        OracleVerdict::Satisfied
    } else if failing.len() == relevant {
        OracleVerdict::Violated
    } else {
        OracleVerdict::PossiblyViolated
    };
    (v, failing)
}

/// Sequential START/COMPLETE events for one run, one minute apart.
pub fn trace_of(model: &RandomModel, run: &[usize], instance: &str, process: &str, origin: Timestamp) -> Trace {
    let mut events = Vec::new();
    let mut t = origin;
    for &i in run {
        for kind in [EventKind::Start, EventKind::Complete] {
            events.push(Event {
                kind,
                activity_label: model.labels[i].to_string(),
                occurrence_id: format!("{}-{i}", act_id(i)),
                timestamp: t,
                actor: None,
                data: BTreeMap::new(),
            });
            t = t + Duration::minutes(1);
        }
    }
    Trace::new(instance, process, events).unwrap()
}
