use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{from_json, ModelError};
use crate::dsl::parse_guard;
use crate::expr::DataExpr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Activity,
    Start,
    End,
    XorSplit,
    XorJoin,
    AndSplit,
    AndJoin,
}

impl NodeKind {
    pub fn is_split(self) -> bool {
        matches!(self, NodeKind::XorSplit | NodeKind::AndSplit)
    }

    pub fn is_join(self) -> bool {
        matches!(self, NodeKind::XorJoin | NodeKind::AndJoin)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Passive resources (devices) an activity uses.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resources: Vec<String>,
}

impl Node {
    pub fn activity(id: impl Into<String>, label: impl Into<String>) -> Self {
        Node {
            id: id.into(),
            kind: NodeKind::Activity,
            label: Some(label.into()),
            resources: Vec::new(),
        }
    }

    pub fn gateway(id: impl Into<String>, kind: NodeKind) -> Self {
        Node {
            id: id.into(),
            kind,
            label: None,
            resources: Vec::new(),
        }
    }

    pub fn is_activity(&self) -> bool {
        self.kind == NodeKind::Activity
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlEdge {
    pub from: String,
    pub to: String,
    pub guard: Option<DataExpr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    Integer,
    String,
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Interval { min: i64, max: i64 },
    Enumeration(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataElement {
    pub name: String,
    #[serde(rename = "type")]
    pub data_type: DataType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessMode {
    Read,
    Write,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataEdge {
    pub activity: String,
    pub data_element: String,
    pub mode: AccessMode,
}

/// Two guards of one xor-split that could not be shown disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GuardOverlap {
    pub split: String,
    pub first: String,
    pub second: String,
}

/// A validated control-flow graph with guards and data elements.
///
/// Construct through [`ProcessSchema::parse`] or [`ProcessSchema::new`];
/// both enforce the structural invariants and build a graph index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SchemaDocument", try_from = "SchemaDocument")]
pub struct ProcessSchema {
    pub id: String,
    pub nodes: Vec<Node>,
    pub control_edges: Vec<ControlEdge>,
    pub data_elements: Vec<DataElement>,
    pub data_edges: Vec<DataEdge>,
    index: GraphIndex,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct GraphIndex {
    pos: BTreeMap<String, usize>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
    start: usize,
    end: usize,
    back_edges: BTreeSet<usize>,
    /// `reach[a][b]`: b reachable from a over at least one forward edge.
    reach: Vec<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDocument {
    from: String,
    to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    guard: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaDocument {
    id: String,
    nodes: Vec<Node>,
    #[serde(default)]
    control_edges: Vec<EdgeDocument>,
    #[serde(default)]
    data_elements: Vec<DataElement>,
    #[serde(default)]
    data_edges: Vec<DataEdge>,
}

impl From<ProcessSchema> for SchemaDocument {
    fn from(s: ProcessSchema) -> Self {
        SchemaDocument {
            id: s.id,
            nodes: s.nodes,
            control_edges: s
                .control_edges
                .into_iter()
                .map(|e| EdgeDocument {
                    from: e.from,
                    to: e.to,
                    guard: e.guard.map(|g| g.to_string()),
                })
                .collect(),
            data_elements: s.data_elements,
            data_edges: s.data_edges,
        }
    }
}

impl TryFrom<SchemaDocument> for ProcessSchema {
    type Error = ModelError;

    fn try_from(doc: SchemaDocument) -> Result<Self, ModelError> {
        let mut edges = Vec::with_capacity(doc.control_edges.len());
        for e in doc.control_edges {
            let guard = match e.guard {
                None => None,
                Some(text) => Some(parse_guard(&text).map_err(|err| {
                    ModelError::invalid(format!("edge {}->{}", e.from, e.to), format!("guard '{text}': {err}"))
                })?),
            };
            edges.push(ControlEdge {
                from: e.from,
                to: e.to,
                guard,
            });
        }
        ProcessSchema::new(doc.id, doc.nodes, edges, doc.data_elements, doc.data_edges)
    }
}

fn edge_name(e: &ControlEdge) -> String {
    format!("edge {}->{}", e.from, e.to)
}

impl ProcessSchema {
    pub fn new(
        id: impl Into<String>,
        nodes: Vec<Node>,
        control_edges: Vec<ControlEdge>,
        data_elements: Vec<DataElement>,
        data_edges: Vec<DataEdge>,
    ) -> Result<Self, ModelError> {
        let mut s = ProcessSchema {
            id: id.into(),
            nodes,
            control_edges,
            data_elements,
            data_edges,
            index: GraphIndex::default(),
        };
        s.index = s.validate()?;
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let doc: SchemaDocument = from_json(text)?;
        ProcessSchema::try_from(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    fn validate(&self) -> Result<GraphIndex, ModelError> {
        let schema = format!("schema {}", self.id);
        if self.id.is_empty() {
            return Err(ModelError::invalid("schema", "id must not be empty"));
        }
        let mut pos = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let name = format!("node {}", n.id);
            if pos.insert(n.id.clone(), i).is_some() {
                return Err(ModelError::invalid(name, "duplicate node id"));
            }
            let labeled = n.label.as_deref().is_some_and(|l| !l.is_empty());
            if n.is_activity() != labeled {
                return Err(ModelError::invalid(name, "a node has a nonempty label exactly when it is an activity"));
            }
            if !n.resources.is_empty() && !n.is_activity() {
                return Err(ModelError::invalid(name, "only activities use resources"));
            }
        }
        let only = |kind: NodeKind| -> Result<usize, ModelError> {
            let found: Vec<usize> = (0..self.nodes.len()).filter(|&i| self.nodes[i].kind == kind).collect();
            match found.as_slice() {
                [one] => Ok(*one),
                [] => Err(ModelError::invalid(&schema, format!("missing {kind:?} node").to_lowercase())),
                _ => Err(ModelError::invalid(&schema, format!("more than one {kind:?} node").to_lowercase())),
            }
        };
        let start = only(NodeKind::Start)?;
        let end = only(NodeKind::End)?;

        let n = self.nodes.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        let mut seen_edges = BTreeSet::new();
        let elements: BTreeSet<&str> = self.data_elements.iter().map(|d| d.name.as_str()).collect();
        for (ei, e) in self.control_edges.iter().enumerate() {
            let name = edge_name(e);
            let from = *pos
                .get(&e.from)
                .ok_or_else(|| ModelError::invalid(&name, format!("unknown source node {}", e.from)))?;
            let to = *pos
                .get(&e.to)
                .ok_or_else(|| ModelError::invalid(&name, format!("unknown target node {}", e.to)))?;
            if !seen_edges.insert((from, to)) {
                return Err(ModelError::invalid(name, "duplicate edge"));
            }
            let from_xor = self.nodes[from].kind == NodeKind::XorSplit;
            match (&e.guard, from_xor) {
                (None, true) => return Err(ModelError::invalid(name, "xor-split edge lacks a guard")),
                (Some(_), false) => {
                    return Err(ModelError::invalid(name, "only edges leaving an xor-split carry guards"))
                }
                (Some(g), true) => {
                    for f in g.field_refs() {
                        if f.var.is_some() || !elements.contains(f.field.as_str()) {
                            return Err(ModelError::invalid(
                                name,
                                format!("guard references undeclared data element {f}"),
                            ));
                        }
                    }
                }
                (None, false) => {}
            }
            out[from].push(ei);
            inc[to].push(ei);
        }

        for (i, node) in self.nodes.iter().enumerate() {
            let (ins, outs) = (inc[i].len(), out[i].len());
            let ok = match node.kind {
                NodeKind::Start => ins == 0 && outs == 1,
                NodeKind::End => ins == 1 && outs == 0,
                NodeKind::Activity => ins == 1 && outs == 1,
                NodeKind::XorSplit | NodeKind::AndSplit => ins == 1 && outs >= 2,
                NodeKind::XorJoin | NodeKind::AndJoin => ins >= 2 && outs == 1,
            };
            if !ok {
                let rule = match node.kind {
                    NodeKind::Start => "a start node has no incoming and one outgoing edge",
                    NodeKind::End => "an end node has one incoming and no outgoing edge",
                    NodeKind::Activity => "an activity has exactly one incoming and one outgoing edge",
                    NodeKind::XorSplit | NodeKind::AndSplit => "a split has one incoming and at least two outgoing edges",
                    NodeKind::XorJoin | NodeKind::AndJoin => "a join has at least two incoming and one outgoing edge",
                };
                return Err(ModelError::invalid(
                    format!("node {}", node.id),
                    format!("{rule} (found {ins} in, {outs} out)"),
                ));
            }
        }

        let mut names = BTreeSet::new();
        for d in &self.data_elements {
            let name = format!("data element {}", d.name);
            if !names.insert(d.name.as_str()) {
                return Err(ModelError::invalid(name, "declared twice"));
            }
            match (&d.domain, d.data_type) {
                (None, _) => {}
                (Some(Domain::Interval { min, max }), DataType::Integer) => {
                    if min > max {
                        return Err(ModelError::invalid(name, "empty interval domain"));
                    }
                }
                (Some(Domain::Enumeration(values)), DataType::String) => {
                    if values.is_empty() {
                        return Err(ModelError::invalid(name, "empty enumeration domain"));
                    }
                }
                (Some(_), _) => return Err(ModelError::invalid(name, "domain does not fit the element type")),
            }
        }
        for de in &self.data_edges {
            let name = format!("data edge {}->{}", de.activity, de.data_element);
            match pos.get(&de.activity) {
                Some(&i) if self.nodes[i].is_activity() => {}
                _ => return Err(ModelError::invalid(name, "activity is not an activity node of the schema")),
            }
            if !elements.contains(de.data_element.as_str()) {
                return Err(ModelError::invalid(name, "undeclared data element"));
            }
        }

        let from_start = reachable(n, start, |v| out[v].iter().map(|&e| pos[&self.control_edges[e].to]).collect());
        let to_end = reachable(n, end, |v| inc[v].iter().map(|&e| pos[&self.control_edges[e].from]).collect());
        for (i, node) in self.nodes.iter().enumerate() {
            if !from_start[i] || !to_end[i] {
                return Err(ModelError::invalid(format!("node {}", node.id), "not on any start-to-end path"));
            }
        }

        let succ = |e: usize| pos[&self.control_edges[e].to];
        let back_edges = find_back_edges(n, start, &out, succ);
        let mut reach = vec![vec![false; n]; n];
        for a in 0..n {
            let mut stack: Vec<usize> = out[a].iter().filter(|e| !back_edges.contains(e)).map(|&e| succ(e)).collect();
            while let Some(v) = stack.pop() {
                if !reach[a][v] {
                    reach[a][v] = true;
                    stack.extend(out[v].iter().filter(|e| !back_edges.contains(e)).map(|&e| succ(e)));
                }
            }
        }
        Ok(GraphIndex {
            pos,
            out,
            inc,
            start,
            end,
            back_edges,
            reach,
        })
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.pos.get(id).map(|&i| &self.nodes[i])
    }

    pub(crate) fn node_index(&self, id: &str) -> Option<usize> {
        self.index.pos.get(id).copied()
    }

    pub fn start(&self) -> &Node {
        &self.nodes[self.index.start]
    }

    pub fn end(&self) -> &Node {
        &self.nodes[self.index.end]
    }

    pub(crate) fn start_index(&self) -> usize {
        self.index.start
    }

    pub(crate) fn outgoing(&self, node: usize) -> &[usize] {
        &self.index.out[node]
    }

    pub(crate) fn incoming(&self, node: usize) -> &[usize] {
        &self.index.inc[node]
    }

    pub(crate) fn edge_target(&self, edge: usize) -> usize {
        self.index.pos[&self.control_edges[edge].to]
    }

    pub(crate) fn is_back_edge(&self, edge: usize) -> bool {
        self.index.back_edges.contains(&edge)
    }

    pub(crate) fn back_edges(&self) -> &BTreeSet<usize> {
        &self.index.back_edges
    }

    pub fn has_cycles(&self) -> bool {
        !self.index.back_edges.is_empty()
    }

    pub fn activities(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_activity())
    }

    pub fn labels(&self) -> BTreeSet<&str> {
        self.activities().filter_map(|n| n.label.as_deref()).collect()
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.activities().any(|n| n.label.as_deref() == Some(label))
    }

    /// Activity nodes carrying `label`, in declaration order.
    pub fn nodes_with_label<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a Node> + 'a {
        self.activities().filter(move |n| n.label.as_deref() == Some(label))
    }

    pub fn label_of(&self, node_id: &str) -> Option<&str> {
        self.node(node_id).and_then(|n| n.label.as_deref())
    }

    pub fn data_element(&self, name: &str) -> Option<&DataElement> {
        self.data_elements.iter().find(|d| d.name == name)
    }

    /// True when `b` can be reached from `a` without traversing a back edge.
    pub fn reaches(&self, a: &str, b: &str) -> bool {
        match (self.node_index(a), self.node_index(b)) {
            (Some(x), Some(y)) => self.index.reach[x][y],
            _ => false,
        }
    }

    /// Two nodes are concurrent when neither reaches the other and some
    /// and-split reaches them through different outgoing edges.
    pub fn concurrent(&self, a: &str, b: &str) -> bool {
        let (Some(x), Some(y)) = (self.node_index(a), self.node_index(b)) else {
            return false;
        };
        if x == y || self.index.reach[x][y] || self.index.reach[y][x] {
            return false;
        }
        let via = |edge: usize, target: usize| {
            let t = self.edge_target(edge);
            t == target || self.index.reach[t][target]
        };
        self.nodes.iter().enumerate().any(|(s, node)| {
            node.kind == NodeKind::AndSplit
                && self.index.out[s].iter().any(|&e1| {
                    via(e1, x) && self.index.out[s].iter().any(|&e2| e2 != e1 && via(e2, y))
                })
        })
    }

    /// Guard pairs of one xor-split that interval analysis cannot prove disjoint.
    pub fn guard_overlaps(&self) -> Vec<GuardOverlap> {
        let mut found = Vec::new();
        for (s, node) in self.nodes.iter().enumerate() {
            if node.kind != NodeKind::XorSplit {
                continue;
            }
            let edges = &self.index.out[s];
            for (i, &a) in edges.iter().enumerate() {
                for &b in &edges[i + 1..] {
                    let (ea, eb) = (&self.control_edges[a], &self.control_edges[b]);
                    let disjoint = match (ea.guard.as_ref(), eb.guard.as_ref()) {
                        (Some(ga), Some(gb)) => match (ga.integer_constraint(), gb.integer_constraint()) {
                            (Some((fa, sa)), Some((fb, sb))) => fa == fb && sa.intersect(&sb).is_empty(),
                            _ => false,
                        },
                        _ => false,
                    };
                    if !disjoint {
                        found.push(GuardOverlap {
                            split: node.id.clone(),
                            first: ea.to.clone(),
                            second: eb.to.clone(),
                        });
                    }
                }
            }
        }
        found
    }

    /// A copy with a new activity inserted directly before the end node.
    pub fn with_activity_before_end(&self, node_id: &str, label: &str) -> Result<ProcessSchema, ModelError> {
        let end_id = self.end().id.clone();
        let mut nodes = self.nodes.clone();
        nodes.push(Node::activity(node_id, label));
        let mut edges = self.control_edges.clone();
        let last = edges
            .iter_mut()
            .find(|e| e.to == end_id)
            .expect("validated schema has an edge into its end node");
        last.to = node_id.to_string();
        edges.push(ControlEdge {
            from: node_id.to_string(),
            to: end_id,
            guard: None,
        });
        ProcessSchema::new(
            self.id.clone(),
            nodes,
            edges,
            self.data_elements.clone(),
            self.data_edges.clone(),
        )
    }
}

fn reachable(n: usize, from: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend(next(v));
        }
    }
    seen
}

/// Edges closing a cycle in a depth-first traversal from `start`.
fn find_back_edges(n: usize, start: usize, out: &[Vec<usize>], succ: impl Fn(usize) -> usize) -> BTreeSet<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; n];
    let mut back = BTreeSet::new();
    let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
    mark[start] = Mark::Open;
    while let Some(&mut (v, ref mut k)) = stack.last_mut() {
        if let Some(&e) = out[v].get(*k) {
            *k += 1;
            let w = succ(e);
            match mark[w] {
                Mark::Open => {
                    back.insert(e);
                }
                Mark::New => {
                    mark[w] = Mark::Open;
                    stack.push((w, 0));
                }
                Mark::Done => {}
            }
        } else {
            mark[v] = Mark::Done;
            stack.pop();
        }
    }
    back
}
