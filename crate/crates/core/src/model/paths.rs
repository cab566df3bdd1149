//! Bounded execution-path enumeration by a token game over the control flow.
//!
//! Gateways fire silently and eagerly; activities enabled at the same time
//! are interleaved in every order. A loop body runs at most `loop_bound`
//! times, i.e. each back edge is taken at most `loop_bound - 1` times.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{ModelError, NodeKind, ProcessSchema};
use crate::expr::DataExpr;

pub const DEFAULT_PATH_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TakenGuard {
    pub from: String,
    pub to: String,
    pub guard: DataExpr,
}

/// The activities executed along one run, with the xor guards taken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionPath {
    /// Activity node ids in execution order.
    pub nodes: Vec<String>,
    pub guards: Vec<TakenGuard>,
}

impl ExecutionPath {
    pub fn labels<'a>(&'a self, schema: &'a ProcessSchema) -> Vec<&'a str> {
        self.nodes.iter().filter_map(|n| schema.label_of(n)).collect()
    }

    pub fn position(&self, node: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == node)
    }

    pub fn contains(&self, node: &str) -> bool {
        self.nodes.iter().any(|n| n == node)
    }
}

#[derive(Clone)]
struct State {
    tokens: Vec<u32>,
    back_taken: Vec<u32>,
    nodes: Vec<usize>,
    guards: Vec<usize>,
}

pub fn enumerate_paths(schema: &ProcessSchema, loop_bound: usize) -> Result<Vec<ExecutionPath>, ModelError> {
    enumerate_paths_capped(schema, loop_bound, DEFAULT_PATH_CAP)
}

pub fn enumerate_paths_capped(
    schema: &ProcessSchema,
    loop_bound: usize,
    cap: usize,
) -> Result<Vec<ExecutionPath>, ModelError> {
    let loop_bound = loop_bound.max(1);
    let max_back = (loop_bound - 1) as u32;
    let back_slot: BTreeMap<usize, usize> = schema.back_edges().iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let edge_count = schema.control_edges.len();

    let mut init = State {
        tokens: vec![0; edge_count],
        back_taken: vec![0; back_slot.len()],
        nodes: Vec::new(),
        guards: Vec::new(),
    };
    let first = schema.outgoing(schema.start_index())[0];
    init.tokens[first] = 1;

    // keyed by (activity nodes, guard edges) so equal runs collapse
    let mut done: BTreeSet<(Vec<usize>, Vec<usize>)> = BTreeSet::new();
    let mut stack = Vec::new();
    settle(schema, init, &back_slot, max_back, &mut stack);

    let end_in = schema.incoming(end_index(schema))[0];
    while let Some(state) = stack.pop() {
        if state.tokens[end_in] > 0 {
            let others = state.tokens.iter().enumerate().any(|(e, &t)| t > 0 && e != end_in) || state.tokens[end_in] > 1;
            if !others {
                done.insert((state.nodes, state.guards));
                if done.len() > cap {
                    return Err(ModelError::PathExplosion { cap });
                }
            }
            continue;
        }
        let mut enabled: Vec<usize> = Vec::new();
        for (e, &t) in state.tokens.iter().enumerate() {
            if t > 0 {
                let target = schema.edge_target(e);
                if schema.nodes[target].kind == NodeKind::Activity && !enabled.contains(&target) {
                    enabled.push(target);
                }
            }
        }
        // explore in reverse so the stack pops in ascending node order
        for &act in enabled.iter().rev() {
            let mut next = state.clone();
            let inc = schema.incoming(act)[0];
            next.tokens[inc] -= 1;
            next.nodes.push(act);
            if put(schema, &mut next, schema.outgoing(act)[0], &back_slot, max_back).is_none() {
                continue;
            }
            settle(schema, next, &back_slot, max_back, &mut stack);
        }
    }

    let mut paths: Vec<ExecutionPath> = done
        .into_iter()
        .map(|(nodes, guards)| ExecutionPath {
            nodes: nodes.iter().map(|&n| schema.nodes[n].id.clone()).collect(),
            guards: guards
                .iter()
                .map(|&e| {
                    let edge = &schema.control_edges[e];
                    TakenGuard {
                        from: edge.from.clone(),
                        to: edge.to.clone(),
                        guard: edge.guard.clone().expect("xor edges carry guards"),
                    }
                })
                .collect(),
        })
        .collect();
    paths.sort_by(|a, b| {
        (a.nodes.len(), &a.nodes)
            .cmp(&(b.nodes.len(), &b.nodes))
            .then_with(|| guard_key(a).cmp(&guard_key(b)))
    });
    Ok(paths)
}

fn guard_key(p: &ExecutionPath) -> Vec<(&str, &str)> {
    p.guards.iter().map(|g| (g.from.as_str(), g.to.as_str())).collect()
}

fn end_index(schema: &ProcessSchema) -> usize {
    schema.node_index(&schema.end().id).expect("end node indexed")
}

/// Places a token on `edge`; `None` when the loop bound forbids it.
fn put(
    schema: &ProcessSchema,
    state: &mut State,
    edge: usize,
    back_slot: &BTreeMap<usize, usize>,
    max_back: u32,
) -> Option<()> {
    if schema.is_back_edge(edge) {
        let slot = back_slot[&edge];
        if state.back_taken[slot] >= max_back {
            return None;
        }
        state.back_taken[slot] += 1;
    }
    state.tokens[edge] += 1;
    Some(())
}

/// Fires enabled gateways until only activities (or the end) hold tokens,
/// pushing every resulting state. Xor-splits branch the state.
fn settle(
    schema: &ProcessSchema,
    state: State,
    back_slot: &BTreeMap<usize, usize>,
    max_back: u32,
    out: &mut Vec<State>,
) {
    let mut work = vec![state];
    'states: while let Some(mut s) = work.pop() {
        loop {
            let Some(gw) = enabled_gateway(schema, &s) else {
                out.push(s);
                continue 'states;
            };
            let kind = schema.nodes[gw].kind;
            match kind {
                NodeKind::AndJoin => {
                    for &e in schema.incoming(gw) {
                        s.tokens[e] -= 1;
                    }
                    if put(schema, &mut s, schema.outgoing(gw)[0], back_slot, max_back).is_none() {
                        continue 'states;
                    }
                }
                NodeKind::XorJoin => {
                    let e = *schema
                        .incoming(gw)
                        .iter()
                        .find(|&&e| s.tokens[e] > 0)
                        .expect("enabled join has a token");
                    s.tokens[e] -= 1;
                    if put(schema, &mut s, schema.outgoing(gw)[0], back_slot, max_back).is_none() {
                        continue 'states;
                    }
                }
                NodeKind::AndSplit => {
                    s.tokens[schema.incoming(gw)[0]] -= 1;
                    for &e in schema.outgoing(gw) {
                        if put(schema, &mut s, e, back_slot, max_back).is_none() {
                            continue 'states;
                        }
                    }
                }
                NodeKind::XorSplit => {
                    s.tokens[schema.incoming(gw)[0]] -= 1;
                    for &e in schema.outgoing(gw).iter().rev() {
                        let mut branch = s.clone();
                        if put(schema, &mut branch, e, back_slot, max_back).is_some() {
                            branch.guards.push(e);
                            work.push(branch);
                        }
                    }
                    continue 'states;
                }
                NodeKind::Start | NodeKind::End | NodeKind::Activity => unreachable!("not a gateway"),
            }
        }
    }
}

fn enabled_gateway(schema: &ProcessSchema, s: &State) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (e, &t) in s.tokens.iter().enumerate() {
        if t == 0 {
            continue;
        }
        let g = schema.edge_target(e);
        let enabled = match schema.nodes[g].kind {
            NodeKind::AndJoin => schema.incoming(g).iter().all(|&i| s.tokens[i] > 0),
            NodeKind::XorJoin | NodeKind::AndSplit | NodeKind::XorSplit => true,
            _ => false,
        };
        if enabled && best.is_none_or(|b| g < b) {
            best = Some(g);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ControlEdge, Node};

    fn edge(from: &str, to: &str) -> ControlEdge {
        ControlEdge {
            from: from.into(),
            to: to.into(),
            guard: None,
        }
    }

    fn schema(nodes: Vec<Node>, edges: Vec<ControlEdge>) -> ProcessSchema {
        ProcessSchema::new("t", nodes, edges, vec![], vec![]).unwrap()
    }

    #[test]
    fn linear_chain_has_one_path() {
        let s = schema(
            vec![
                Node::gateway("s", NodeKind::Start),
                Node::activity("a", "A"),
                Node::activity("b", "B"),
                Node::activity("c", "C"),
                Node::gateway("e", NodeKind::End),
            ],
            vec![edge("s", "a"), edge("a", "b"), edge("b", "c"), edge("c", "e")],
        );
        let paths = enumerate_paths(&s, 2).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes, ["a", "b", "c"]);
    }

    #[test]
    fn and_split_interleaves() {
        let s = schema(
            vec![
                Node::gateway("s", NodeKind::Start),
                Node::gateway("p", NodeKind::AndSplit),
                Node::activity("a", "A"),
                Node::activity("b", "B"),
                Node::gateway("j", NodeKind::AndJoin),
                Node::gateway("e", NodeKind::End),
            ],
            vec![
                edge("s", "p"),
                edge("p", "a"),
                edge("p", "b"),
                edge("a", "j"),
                edge("b", "j"),
                edge("j", "e"),
            ],
        );
        let paths = enumerate_paths(&s, 2).unwrap();
        let seqs: Vec<_> = paths.iter().map(|p| p.nodes.join("")).collect();
        assert_eq!(seqs, ["ab", "ba"]);
        assert!(s.concurrent("a", "b"));
    }

    #[test]
    fn loop_is_bounded() {
        // s -> j -> a -> x -> (back to j | e)
        let mut back = edge("x", "j");
        back.guard = Some(crate::dsl::parse_guard("again == true").unwrap());
        let mut exit = edge("x", "e");
        exit.guard = Some(crate::dsl::parse_guard("again == false").unwrap());
        let s = ProcessSchema::new(
            "loop",
            vec![
                Node::gateway("s", NodeKind::Start),
                Node::gateway("j", NodeKind::XorJoin),
                Node::activity("a", "A"),
                Node::gateway("x", NodeKind::XorSplit),
                Node::gateway("e", NodeKind::End),
            ],
            vec![edge("s", "j"), edge("j", "a"), edge("a", "x"), back, exit],
            vec![crate::model::DataElement {
                name: "again".into(),
                data_type: crate::model::DataType::Boolean,
                domain: None,
            }],
            vec![],
        )
        .unwrap();
        let lens = |b| {
            enumerate_paths(&s, b)
                .unwrap()
                .iter()
                .map(|p| p.nodes.len())
                .collect::<Vec<_>>()
        };
        assert_eq!(lens(1), [1]);
        assert_eq!(lens(2), [1, 2]);
        assert_eq!(lens(3), [1, 2, 3]);
    }

    #[test]
    fn cap_is_enforced() {
        let s = schema(
            vec![
                Node::gateway("s", NodeKind::Start),
                Node::gateway("p", NodeKind::AndSplit),
                Node::activity("a", "A"),
                Node::activity("b", "B"),
                Node::gateway("j", NodeKind::AndJoin),
                Node::gateway("e", NodeKind::End),
            ],
            vec![
                edge("s", "p"),
                edge("p", "a"),
                edge("p", "b"),
                edge("a", "j"),
                edge("b", "j"),
                edge("j", "e"),
            ],
        );
        assert_eq!(
            enumerate_paths_capped(&s, 2, 1).unwrap_err(),
            ModelError::PathExplosion { cap: 1 }
        );
    }
}
