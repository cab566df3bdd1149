//! Constraint evaluation over an abstract set of occurrence facts.
//!
//! The same code decides a constraint on an enumerated schema path (design
//! time) and on an instance's completed occurrences (run time); only the
//! [`Facts`] differ. Facts that are not available evaluate to
//! [`Truth::Unknown`].
//!
//! For an anchor binding `α` the result is
//!
//! ```text
//! gate(α) ⇒ (∃β structural ∧ no absent label ∧ ∀β (g(β) ⇒ req(β)))
//! ```
//!
//! where `gate` is the conjunction of data conjuncts that mention anchor
//! variables only, `g` the remaining data conjuncts, `req` the time and
//! resource atoms, and `β` ranges over full bindings extending `α` on which
//! all relations hold.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::constraint::{
    BindingRole, ProcessConstraint, RelationKind, ResourceAtom, StructuralPattern, TimeAtom,
};
use crate::expr::{DataExpr, Truth, Value};
use crate::time::Duration;

/// Upper bound on bindings enumerated for one pattern.
pub const MATCH_CAP: usize = 100_000;

/// Variable to occurrence handle.
pub type Assignment = BTreeMap<String, usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationReason {
    Pattern,
    Data,
    Time,
    Resource,
    Sync,
}

impl ViolationReason {
    pub fn keyword(self) -> &'static str {
        match self {
            ViolationReason::Pattern => "pattern",
            ViolationReason::Data => "data",
            ViolationReason::Time => "time",
            ViolationReason::Resource => "resource",
            ViolationReason::Sync => "sync",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TooManyBindings;

/// What is known about the occurrences of one path or instance. Occurrences
/// are opaque handles.
pub trait Facts {
    fn occurrences(&self, label: &str) -> Vec<usize>;
    fn precedes(&self, a: usize, b: usize) -> bool;
    fn directly_precedes(&self, a: usize, b: usize) -> bool;
    fn parallel(&self, a: usize, b: usize) -> bool;
    fn field(&self, occ: usize, field: &str) -> Option<Value>;
    /// Time from completion of `from` to the start of `to`.
    fn gap(&self, from: usize, to: usize) -> Option<Duration>;
    fn actor(&self, occ: usize) -> Option<&str>;
    fn has_role(&self, occ: usize, role: &str) -> Truth;
    fn uses_resource(&self, occ: usize, resource: &str) -> Truth;

    fn label_occurs(&self, label: &str) -> bool {
        !self.occurrences(label).is_empty()
    }
}

pub fn relation_holds(facts: &dyn Facts, kind: RelationKind, a: usize, b: usize) -> bool {
    match kind {
        RelationKind::EventuallyPrecedes => facts.precedes(a, b),
        RelationKind::DirectlyPrecedes => facts.directly_precedes(a, b),
        RelationKind::ParallelWith => facts.parallel(a, b),
    }
}

fn relations_hold(p: &StructuralPattern, facts: &dyn Facts, asg: &Assignment, anchors_only: bool) -> bool {
    p.relations
        .iter()
        .filter(|r| !anchors_only || r.role == BindingRole::Anchor)
        .all(|r| match (asg.get(&r.left), asg.get(&r.right)) {
            (Some(&a), Some(&b)) => relation_holds(facts, r.kind, a, b),
            _ => true,
        })
}

/// Injective assignments of `vars` (var, label) extending `base`.
fn assign(
    vars: &[(&str, &str)],
    facts: &dyn Facts,
    base: &Assignment,
    cap: usize,
) -> Result<Vec<Assignment>, TooManyBindings> {
    let mut out = vec![base.clone()];
    for (var, label) in vars {
        let occs = facts.occurrences(label);
        let mut next = Vec::new();
        for asg in &out {
            for &o in &occs {
                if asg.values().any(|&used| used == o) {
                    continue;
                }
                let mut a = asg.clone();
                a.insert(var.to_string(), o);
                next.push(a);
                if next.len() > cap {
                    return Err(TooManyBindings);
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// Anchor bindings on which every anchor relation holds.
pub fn anchor_bindings(p: &StructuralPattern, facts: &dyn Facts) -> Result<Vec<Assignment>, TooManyBindings> {
    let vars: Vec<(&str, &str)> = p.anchors().map(|b| (b.var.as_str(), b.label.as_str())).collect();
    let all = assign(&vars, facts, &Assignment::new(), MATCH_CAP)?;
    Ok(all.into_iter().filter(|a| relations_hold(p, facts, a, true)).collect())
}

/// Full bindings extending `alpha` on which every relation holds.
pub fn extensions(p: &StructuralPattern, facts: &dyn Facts, alpha: &Assignment) -> Result<Vec<Assignment>, TooManyBindings> {
    let vars: Vec<(&str, &str)> = p
        .consequents()
        .filter(|b| !alpha.contains_key(&b.var))
        .map(|b| (b.var.as_str(), b.label.as_str()))
        .collect();
    let all = assign(&vars, facts, alpha, MATCH_CAP)?;
    Ok(all.into_iter().filter(|a| relations_hold(p, facts, a, false)).collect())
}

/// Data conjuncts split into the anchor gate and the per-extension rest.
pub fn split_data(c: &ProcessConstraint) -> (Vec<&DataExpr>, Vec<&DataExpr>) {
    let Some(d) = &c.condition.data else {
        return (Vec::new(), Vec::new());
    };
    d.conjuncts()
        .into_iter()
        .partition(|e| e.variables().iter().all(|v| c.pattern().is_anchor(v)))
}

pub fn eval_data(expr: &DataExpr, facts: &dyn Facts, asg: &Assignment) -> Truth {
    expr.eval(&|fr| {
        let occ = *asg.get(fr.var.as_deref()?)?;
        facts.field(occ, &fr.field)
    })
}

pub fn eval_all_data(exprs: &[&DataExpr], facts: &dyn Facts, asg: &Assignment) -> Truth {
    Truth::all(exprs.iter().map(|e| eval_data(e, facts, asg)))
}

pub fn eval_time(atom: &TimeAtom, facts: &dyn Facts, asg: &Assignment) -> Truth {
    let [from, to] = atom.variables();
    let (Some(&a), Some(&b)) = (asg.get(from), asg.get(to)) else {
        return Truth::Unknown;
    };
    match (facts.gap(a, b), atom) {
        (None, _) => Truth::Unknown,
        (Some(gap), TimeAtom::MinTimeBetween { duration, .. }) => (gap >= *duration).into(),
        (Some(gap), TimeAtom::MaxTimeBetween { duration, .. }) => (gap <= *duration).into(),
    }
}

pub fn eval_resource(atom: &ResourceAtom, facts: &dyn Facts, asg: &Assignment) -> Truth {
    let occ = |v: &str| asg.get(v).copied();
    match atom {
        ResourceAtom::Role { var, role } => occ(var).map_or(Truth::Unknown, |o| facts.has_role(o, role)),
        ResourceAtom::SameActor(a, b) | ResourceAtom::DifferentActor(a, b) => {
            let (Some(x), Some(y)) = (occ(a), occ(b)) else {
                return Truth::Unknown;
            };
            match (facts.actor(x), facts.actor(y)) {
                (Some(p), Some(q)) => {
                    let same = p == q;
                    if matches!(atom, ResourceAtom::SameActor(..)) {
                        same.into()
                    } else {
                        (!same).into()
                    }
                }
                _ => Truth::Unknown,
            }
        }
        ResourceAtom::UsesResource { var, resource } => {
            occ(var).map_or(Truth::Unknown, |o| facts.uses_resource(o, resource))
        }
    }
}

/// Time and resource requirements on one full binding, with the scope of
/// the first atom that is definitely false.
pub fn requirement(c: &ProcessConstraint, facts: &dyn Facts, beta: &Assignment) -> (Truth, Option<ViolationReason>) {
    let mut acc = Truth::True;
    let mut reason = None;
    for t in &c.condition.time {
        let v = eval_time(t, facts, beta);
        if v.is_false() && reason.is_none() {
            reason = Some(ViolationReason::Time);
        }
        acc = acc.and(v);
    }
    for r in &c.condition.resource {
        let v = eval_resource(r, facts, beta);
        if v.is_false() && reason.is_none() {
            reason = Some(ViolationReason::Resource);
        }
        acc = acc.and(v);
    }
    (acc, reason)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evaluation {
    pub truth: Truth,
    /// Set when `truth` is false.
    pub reason: Option<ViolationReason>,
}

/// Decides a compliance constraint for one anchor binding.
pub fn evaluate_binding(
    c: &ProcessConstraint,
    facts: &dyn Facts,
    alpha: &Assignment,
) -> Result<Evaluation, TooManyBindings> {
    let (gate_parts, rest) = split_data(c);
    let gate = eval_all_data(&gate_parts, facts, alpha);
    if gate.is_false() {
        return Ok(Evaluation {
            truth: Truth::True,
            reason: None,
        });
    }
    let p = c.pattern();
    let absent_hit = p.absences.iter().any(|l| facts.label_occurs(l));
    let exts = extensions(p, facts, alpha)?;
    let exists = !exts.is_empty() && !absent_hit;

    let mut forall = Truth::True;
    let mut req_reason = None;
    for beta in &exts {
        let g = eval_all_data(&rest, facts, beta);
        let (req, why) = requirement(c, facts, beta);
        let v = g.implies(req);
        if v.is_false() && req_reason.is_none() {
            req_reason = why;
        }
        forall = forall.and(v);
    }
    let truth = gate.implies(Truth::from(exists).and(forall));
    let reason = truth.is_false().then(|| {
        if !exists {
            if gate_parts.is_empty() {
                ViolationReason::Pattern
            } else {
                ViolationReason::Data
            }
        } else {
            req_reason.unwrap_or(ViolationReason::Pattern)
        }
    });
    Ok(Evaluation { truth, reason })
}

/// Conjunction over all anchor bindings; `None` when no anchor binding exists.
pub fn evaluate_all(c: &ProcessConstraint, facts: &dyn Facts) -> Result<Option<Evaluation>, TooManyBindings> {
    let alphas = anchor_bindings(c.pattern(), facts)?;
    if alphas.is_empty() {
        return Ok(None);
    }
    let mut truth = Truth::True;
    let mut reason = None;
    for alpha in &alphas {
        let e = evaluate_binding(c, facts, alpha)?;
        if e.truth.is_false() && reason.is_none() {
            reason = e.reason;
        }
        truth = truth.and(e.truth);
    }
    Ok(Some(Evaluation { truth, reason }))
}
