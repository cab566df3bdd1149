//! Canonical DSL rendering. Output re-parses to a structurally equal item.

use std::fmt::Write;

use super::Item;
use crate::base::{ConstraintFilter, MetaConstraint, MetaRequirement, MetaSelector};
use crate::constraint::{
    Binding, Context, InstanceSelector, Position, ProcessConstraint, Relation,
};
use crate::expr::quoted;
use crate::identify::OpaqueRule;

const INDENT: &str = "    ";

fn quoted_list<'a>(items: impl IntoIterator<Item = &'a String>) -> String {
    items.into_iter().map(|s| quoted(s)).collect::<Vec<_>>().join(", ")
}

fn pattern_items(bindings: &[&Binding], relations: &[&Relation]) -> String {
    let mut parts: Vec<String> = bindings
        .iter()
        .map(|b| format!("exists {} is {}", b.var, quoted(&b.label)))
        .collect();
    parts.extend(
        relations
            .iter()
            .map(|r| format!("{} {} {}", r.left, r.kind.keyword(), r.right)),
    );
    parts.join(" and ")
}

pub fn serialize_constraint(c: &ProcessConstraint) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "constraint {} {{", c.id);
    if let Some(text) = &c.source_text {
        let _ = writeln!(out, "{INDENT}text {};", quoted(text));
    }
    let ctx = match &c.linkage.context {
        Context::All => "all".to_string(),
        Context::Processes(map) => map
            .iter()
            .map(|(p, sel)| match sel {
                InstanceSelector::All => format!("process {} all", quoted(p)),
                InstanceSelector::Named(set) => format!("process {} instances {}", quoted(p), quoted_list(set)),
            })
            .collect::<Vec<_>>()
            .join(", "),
    };
    let _ = writeln!(out, "{INDENT}context {ctx};");

    let p = &c.linkage.pattern;
    let anchors: Vec<_> = p.anchors().collect();
    let anchor_rels: Vec<_> = p.anchor_relations().collect();
    let _ = writeln!(out, "{INDENT}on {};", pattern_items(&anchors, &anchor_rels));
    let cons: Vec<_> = p.consequents().collect();
    let cons_rels: Vec<_> = p.consequent_relations().collect();
    if !cons.is_empty() || !cons_rels.is_empty() {
        let _ = writeln!(out, "{INDENT}require {};", pattern_items(&cons, &cons_rels));
    }
    if !p.absences.is_empty() {
        let _ = writeln!(out, "{INDENT}absent {};", quoted_list(&p.absences));
    }

    let cond = &c.condition;
    let mut sections = Vec::new();
    if let Some(d) = &cond.data {
        sections.push(format!("data({d})"));
    }
    if !cond.time.is_empty() {
        let atoms: Vec<String> = cond.time.iter().map(|t| t.to_string()).collect();
        sections.push(format!("time({})", atoms.join(" and ")));
    }
    if !cond.resource.is_empty() {
        let atoms: Vec<String> = cond.resource.iter().map(|r| r.to_string()).collect();
        sections.push(format!("resource({})", atoms.join(" and ")));
    }
    if !sections.is_empty() {
        let _ = writeln!(out, "{INDENT}condition {};", sections.join(" and "));
    }

    if !c.linkage.triggers.is_empty() {
        let tps: Vec<String> = c
            .linkage
            .triggers
            .iter()
            .map(|t| {
                let pos = match t.position {
                    Position::Before => "before",
                    Position::After => "after",
                };
                format!("{pos} {}", t.target)
            })
            .collect();
        let _ = writeln!(out, "{INDENT}trigger {};", tps.join(", "));
    }
    if !c.behavior.is_none() {
        let _ = writeln!(out, "{INDENT}behavior {};", c.behavior);
    }
    out.push_str("}\n");
    out
}

pub fn serialize_meta(m: &MetaConstraint) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "meta {} {{", m.id);
    if let Some(text) = &m.source_text {
        let _ = writeln!(out, "{INDENT}text {};", quoted(text));
    }
    let sel = match &m.for_each {
        MetaSelector::ActivitiesUsing(r) => format!("activity uses-resource {}", quoted(r)),
        MetaSelector::ActivitiesLabeled(l) => format!("activity is {}", quoted(l)),
        MetaSelector::Constraints(f) => match f {
            ConstraintFilter::All => "constraint".to_string(),
            ConstraintFilter::Usage(u) => format!("constraint usage {u}"),
            ConstraintFilter::Type(t) => format!("constraint type {t}"),
            ConstraintFilter::Scope(s) => format!("constraint scope {s}"),
            ConstraintFilter::Application(a) => format!("constraint application {a}"),
        },
    };
    let _ = writeln!(out, "{INDENT}for each {sel};");
    let req = match &m.require {
        MetaRequirement::Attached(ids) => format!("attached {}", quoted_list(ids)),
        MetaRequirement::Trigger => "trigger".to_string(),
        MetaRequirement::Condition => "condition".to_string(),
        MetaRequirement::Behavior => "behavior".to_string(),
        MetaRequirement::Scope(s) => format!("scope {s}"),
        MetaRequirement::Application(a) => format!("application {a}"),
        MetaRequirement::Usage(u) => format!("usage {u}"),
    };
    let _ = writeln!(out, "{INDENT}require {req};");
    out.push_str("}\n");
    out
}

pub fn serialize_rule(r: &OpaqueRule) -> String {
    format!("rule {} {};\n", r.id, quoted(&r.text))
}

/// Items separated by blank lines.
pub fn serialize_items(items: &[Item]) -> String {
    items
        .iter()
        .map(|i| match i {
            Item::Constraint(c) => serialize_constraint(c),
            Item::Meta(m) => serialize_meta(m),
            Item::Rule(r) => serialize_rule(r),
        })
        .collect::<Vec<_>>()
        .join("\n")
}
