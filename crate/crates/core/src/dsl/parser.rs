//! Recursive-descent parser. Variable binding is checked after a whole
//! `constraint` block is read, so clauses may appear in any order.

use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Pos, Tok};
use super::{DslError, Item};
use crate::base::{ConstraintFilter, MetaConstraint, MetaRequirement, MetaSelector};
use crate::constraint::{
    Application, AttributeValue, Behavior, Binding, BindingRole, Condition, ConstraintType, Context,
    InstanceSelector, Linkage, Position, ProcessConstraint, Relation, RelationKind, ResourceAtom, Scope,
    StructuralPattern, TimeAtom, TriggerPosition, Usage,
};
use crate::expr::{CompareOp, DataExpr, FieldRef, Value};
use crate::identify::OpaqueRule;
use crate::time::Duration;

const RESERVED: &[&str] = &["and", "or", "not", "exists", "is", "true", "false"];

type PResult<T> = Result<T, DslError>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum FieldMode {
    /// `field`, used by schema guards
    Bare,
    /// `var.field`, used by constraint conditions
    Qualified,
}

pub struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

/// Variable uses collected while parsing a constraint block.
#[derive(Default)]
struct Uses {
    vars: Vec<(String, Pos)>,
}

impl Uses {
    fn add(&mut self, var: &str, pos: Pos) {
        self.vars.push((var.to_string(), pos));
    }
}

impl Parser {
    pub fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            i: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let idx = (self.i + n).min(self.toks.len() - 1);
        &self.toks[idx].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        Err(DslError::syntax(
            self.pos(),
            format!("expected {expected}, found {}", self.peek()),
        ))
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Pos> {
        if self.is_kw(kw) {
            Ok(self.bump().1)
        } else {
            self.unexpected(&format!("'{kw}'"))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<Pos> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            self.unexpected(&tok.to_string())
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.bump().1;
                Ok((s, pos))
            }
            _ => self.unexpected(what),
        }
    }

    fn var(&mut self) -> PResult<(String, Pos)> {
        let (v, pos) = self.ident("variable name")?;
        if RESERVED.contains(&v.as_str()) {
            return Err(DslError::syntax(pos, format!("'{v}' is reserved and cannot name a variable")));
        }
        Ok((v, pos))
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn string_list(&mut self, what: &str) -> PResult<Vec<String>> {
        let mut out = vec![self.string(what)?];
        while matches!(self.peek(), Tok::Comma) && matches!(self.peek_at(1), Tok::Str(_)) {
            self.bump();
            out.push(self.string(what)?);
        }
        Ok(out)
    }

    fn duration(&mut self) -> PResult<Duration> {
        match self.peek().clone() {
            Tok::Dur(d) => {
                self.bump();
                Ok(d)
            }
            _ => self.unexpected("duration such as 4h, 30m or 2d"),
        }
    }

    fn end_clause(&mut self) {
        self.eat(&Tok::Semi);
    }

    pub fn document(&mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        loop {
            if matches!(self.peek(), Tok::Eof) {
                return Ok(items);
            }
            if self.is_kw("constraint") {
                items.push(Item::Constraint(self.constraint()?));
            } else if self.is_kw("meta") {
                items.push(Item::Meta(self.meta()?));
            } else if self.is_kw("rule") {
                items.push(Item::Rule(self.rule()?));
            } else {
                return self.unexpected("'constraint', 'meta' or 'rule'");
            }
        }
    }

    pub fn standalone_guard(&mut self) -> PResult<DataExpr> {
        let e = self.data_expr(FieldMode::Bare)?;
        if !matches!(self.peek(), Tok::Eof) {
            return self.unexpected("end of guard");
        }
        Ok(e)
    }

    fn rule(&mut self) -> PResult<OpaqueRule> {
        self.expect_kw("rule")?;
        let (id, _) = self.ident("rule id")?;
        let text = self.string("rule text")?;
        self.end_clause();
        Ok(OpaqueRule { id, text })
    }

    fn constraint(&mut self) -> PResult<ProcessConstraint> {
        let start = self.expect_kw("constraint")?;
        let (id, _) = self.ident("constraint id")?;
        self.expect(Tok::LBrace)?;

        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut text = None;
        let mut context = None;
        let mut pattern = StructuralPattern::default();
        let mut decls: BTreeMap<String, (BindingRole, Pos)> = BTreeMap::new();
        let mut uses = Uses::default();
        let mut relation_checks: Vec<(Relation, Pos)> = Vec::new();
        let mut condition = Condition::default();
        let mut triggers = Vec::new();
        let mut trigger_pos = None;
        let mut behavior = Behavior::None;

        while !matches!(self.peek(), Tok::RBrace) {
            let (kw, kw_pos) = self.ident("clause keyword")?;
            if !seen.insert(kw.clone()) {
                return Err(DslError::syntax(kw_pos, format!("duplicate '{kw}' clause")));
            }
            match kw.as_str() {
                "text" => text = Some(self.string("rule text")?),
                "context" => context = Some(self.context()?),
                "on" => self.pattern_items(BindingRole::Anchor, &mut pattern, &mut decls, &mut relation_checks)?,
                "require" => {
                    self.pattern_items(BindingRole::Consequent, &mut pattern, &mut decls, &mut relation_checks)?
                }
                "absent" => pattern.absences = self.string_list("activity label")?,
                "condition" => condition = self.condition(&mut uses)?,
                "trigger" => {
                    trigger_pos = Some(kw_pos);
                    loop {
                        let position = if self.eat_kw("before") {
                            Position::Before
                        } else if self.eat_kw("after") {
                            Position::After
                        } else {
                            return self.unexpected("'before' or 'after'");
                        };
                        let (target, p) = self.var()?;
                        uses.add(&target, p);
                        triggers.push(TriggerPosition { position, target });
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                "behavior" => behavior = self.behavior(&mut uses)?,
                other => {
                    return Err(DslError::syntax(
                        kw_pos,
                        format!(
                            "unknown clause '{other}'; expected text, context, on, require, absent, condition, trigger or behavior"
                        ),
                    ))
                }
            }
            self.end_clause();
        }
        self.expect(Tok::RBrace)?;

        let context = context.ok_or_else(|| DslError::syntax(start, format!("constraint {id} lacks a context clause")))?;
        if !seen.contains("on") {
            return Err(DslError::syntax(start, format!("constraint {id} lacks an 'on' clause")));
        }

        for (rel, pos) in &relation_checks {
            for v in [&rel.left, &rel.right] {
                match decls.get(v) {
                    None => return Err(DslError::bind(*pos, format!("relation uses unbound variable {v}"))),
                    Some((BindingRole::Consequent, _)) if rel.role == BindingRole::Anchor => {
                        return Err(DslError::bind(
                            *pos,
                            format!("'on' relation uses {v}, which is only bound by 'require'"),
                        ))
                    }
                    _ => {}
                }
            }
            if rel.left == rel.right {
                return Err(DslError::invalid(*pos, format!("relation relates {} to itself", rel.left)));
            }
        }
        for (v, pos) in &uses.vars {
            if !decls.contains_key(v) {
                return Err(DslError::bind(*pos, format!("unbound variable {v}")));
            }
        }
        if let Some(pos) = trigger_pos {
            if behavior.is_none() {
                return Err(DslError::invalid(pos, "trigger positions require a behavior clause"));
            }
        }

        let linkage = Linkage {
            context,
            pattern,
            triggers,
        };
        ProcessConstraint::new(id, text, linkage, condition, behavior)
            .map_err(|e| DslError::invalid(start, e.to_string()))
    }

    fn context(&mut self) -> PResult<Context> {
        if self.eat_kw("all") {
            return Ok(Context::All);
        }
        let mut map = BTreeMap::new();
        loop {
            let pos = self.expect_kw("process")?;
            let name = self.string("process name")?;
            let sel = if self.eat_kw("all") {
                InstanceSelector::All
            } else if self.eat_kw("instances") {
                InstanceSelector::Named(self.string_list("instance id")?.into_iter().collect())
            } else {
                return self.unexpected("'all' or 'instances'");
            };
            if map.insert(name.clone(), sel).is_some() {
                return Err(DslError::syntax(pos, format!("process '{name}' listed twice in context")));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(Context::Processes(map))
    }

    fn pattern_items(
        &mut self,
        role: BindingRole,
        pattern: &mut StructuralPattern,
        decls: &mut BTreeMap<String, (BindingRole, Pos)>,
        relation_checks: &mut Vec<(Relation, Pos)>,
    ) -> PResult<()> {
        loop {
            if self.eat_kw("exists") {
                let (var, pos) = self.var()?;
                self.expect_kw("is")?;
                let label = self.string("activity label")?;
                if label.is_empty() {
                    return Err(DslError::syntax(pos, "activity label must not be empty"));
                }
                if decls.insert(var.clone(), (role, pos)).is_some() {
                    return Err(DslError::bind(pos, format!("variable {var} bound twice")));
                }
                pattern.bindings.push(Binding { var, label, role });
            } else {
                let (left, pos) = self.var()?;
                let (kw, kw_pos) = self.ident("relation")?;
                let kind = RelationKind::from_keyword(&kw).ok_or_else(|| {
                    DslError::syntax(
                        kw_pos,
                        format!("unknown relation '{kw}'; expected eventually-precedes, directly-precedes or parallel-with"),
                    )
                })?;
                let (right, _) = self.var()?;
                let rel = Relation { kind, left, right, role };
                relation_checks.push((rel.clone(), pos));
                pattern.relations.push(rel);
            }
            if !self.eat_kw("and") {
                return Ok(());
            }
        }
    }

    fn condition(&mut self, uses: &mut Uses) -> PResult<Condition> {
        let mut cond = Condition::default();
        let mut sections = BTreeSet::new();
        loop {
            let (kw, pos) = self.ident("'data', 'time' or 'resource'")?;
            if !sections.insert(kw.clone()) {
                return Err(DslError::syntax(pos, format!("duplicate {kw}(...) section in condition")));
            }
            self.expect(Tok::LParen)?;
            match kw.as_str() {
                "data" => {
                    let start = self.i;
                    let e = self.data_expr(FieldMode::Qualified)?;
                    // record variable uses with the position of the expression
                    let pos = self.toks[start].1;
                    for v in e.variables() {
                        uses.add(v, pos);
                    }
                    cond.data = Some(e);
                }
                "time" => loop {
                    cond.time.push(self.time_atom(uses)?);
                    if !self.eat_kw("and") {
                        break;
                    }
                },
                "resource" => loop {
                    cond.resource.push(self.resource_atom(uses)?);
                    if !self.eat_kw("and") {
                        break;
                    }
                },
                other => {
                    return Err(DslError::syntax(
                        pos,
                        format!("unknown condition section '{other}'; expected data, time or resource"),
                    ))
                }
            }
            self.expect(Tok::RParen)?;
            if !self.eat_kw("and") {
                return Ok(cond);
            }
        }
    }

    fn time_atom(&mut self, uses: &mut Uses) -> PResult<TimeAtom> {
        let (kw, pos) = self.ident("min_time_between or max_time_between")?;
        let min = match kw.as_str() {
            "min_time_between" => true,
            "max_time_between" => false,
            other => return Err(DslError::syntax(pos, format!("unknown time atom '{other}'"))),
        };
        self.expect(Tok::LParen)?;
        let (from, p1) = self.var()?;
        self.expect(Tok::Comma)?;
        let (to, p2) = self.var()?;
        self.expect(Tok::Comma)?;
        let dpos = self.pos();
        let duration = self.duration()?;
        if !duration.is_positive() {
            return Err(DslError::syntax(dpos, "duration must be positive"));
        }
        self.expect(Tok::RParen)?;
        uses.add(&from, p1);
        uses.add(&to, p2);
        Ok(if min {
            TimeAtom::MinTimeBetween { from, to, duration }
        } else {
            TimeAtom::MaxTimeBetween { from, to, duration }
        })
    }

    fn resource_atom(&mut self, uses: &mut Uses) -> PResult<ResourceAtom> {
        let (kw, pos) = self.ident("resource atom")?;
        self.expect(Tok::LParen)?;
        let atom = match kw.as_str() {
            "role" => {
                let (var, p) = self.var()?;
                uses.add(&var, p);
                self.expect(Tok::RParen)?;
                self.expect(Tok::EqEq)?;
                let role = self.string("role name")?;
                return Ok(ResourceAtom::Role { var, role });
            }
            "same-actor" | "different-actor" => {
                let (a, p1) = self.var()?;
                self.expect(Tok::Comma)?;
                let (b, p2) = self.var()?;
                uses.add(&a, p1);
                uses.add(&b, p2);
                if kw == "same-actor" {
                    ResourceAtom::SameActor(a, b)
                } else {
                    ResourceAtom::DifferentActor(a, b)
                }
            }
            "uses-resource" => {
                let (var, p) = self.var()?;
                uses.add(&var, p);
                self.expect(Tok::Comma)?;
                let resource = self.string("resource name")?;
                ResourceAtom::UsesResource { var, resource }
            }
            other => {
                return Err(DslError::syntax(
                    pos,
                    format!("unknown resource atom '{other}'; expected role, same-actor, different-actor or uses-resource"),
                ))
            }
        };
        self.expect(Tok::RParen)?;
        Ok(atom)
    }

    fn behavior(&mut self, uses: &mut Uses) -> PResult<Behavior> {
        let (kw, pos) = self.ident("behavior kind")?;
        let (target, tpos) = self.var()?;
        uses.add(&target, tpos);
        match kw.as_str() {
            "attribute" => {
                let (key, _) = self.ident("attribute key")?;
                self.expect(Tok::Assign)?;
                let value = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        AttributeValue::Text(s)
                    }
                    Tok::Dur(d) => {
                        self.bump();
                        AttributeValue::Duration(d)
                    }
                    Tok::LParen => {
                        self.bump();
                        let mean = self.duration()?;
                        self.expect(Tok::Comma)?;
                        let deviation = self.duration()?;
                        self.expect(Tok::RParen)?;
                        AttributeValue::Distribution { mean, deviation }
                    }
                    _ => return self.unexpected("attribute value"),
                };
                Ok(Behavior::Attribute { target, key, value })
            }
            "synchronize" => Ok(Behavior::Synchronize {
                target,
                resource: self.string("resource name")?,
            }),
            "raise" => Ok(Behavior::RaiseException {
                target,
                message: self.string("exception message")?,
            }),
            other => Err(DslError::syntax(
                pos,
                format!("unknown behavior '{other}'; expected attribute, synchronize or raise"),
            )),
        }
    }

    fn data_expr(&mut self, mode: FieldMode) -> PResult<DataExpr> {
        let mut lhs = self.data_and(mode)?;
        while self.is_kw("or") {
            self.bump();
            let rhs = self.data_and(mode)?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    fn data_and(&mut self, mode: FieldMode) -> PResult<DataExpr> {
        let mut lhs = self.data_unary(mode)?;
        while self.is_kw("and") {
            self.bump();
            let rhs = self.data_unary(mode)?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    fn data_unary(&mut self, mode: FieldMode) -> PResult<DataExpr> {
        if self.eat_kw("not") {
            return Ok(self.data_unary(mode)?.negate());
        }
        if self.eat(&Tok::LParen) {
            let e = self.data_expr(mode)?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        let field = self.field_ref(mode)?;
        let op_pos = self.pos();
        let op = match self.peek() {
            Tok::EqEq => CompareOp::Eq,
            Tok::NotEq => CompareOp::Ne,
            Tok::Lt => CompareOp::Lt,
            Tok::Le => CompareOp::Le,
            Tok::Gt => CompareOp::Gt,
            Tok::Ge => CompareOp::Ge,
            _ => return self.unexpected("comparison operator"),
        };
        self.bump();
        let value = match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Value::Int(i)
            }
            Tok::Str(s) => {
                self.bump();
                Value::Str(s)
            }
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.bump();
                Value::Bool(w == "true")
            }
            Tok::Ident(_) => {
                let other = self.field_ref(mode)?;
                if op != CompareOp::Eq {
                    return Err(DslError::syntax(op_pos, "two fields can only be compared with =="));
                }
                return Ok(DataExpr::SameValue(field, other));
            }
            _ => return self.unexpected("literal or field"),
        };
        Ok(DataExpr::compare(field, op, value))
    }

    fn field_ref(&mut self, mode: FieldMode) -> PResult<FieldRef> {
        let (first, pos) = self.ident("field reference")?;
        if RESERVED.contains(&first.as_str()) {
            return Err(DslError::syntax(pos, format!("'{first}' is reserved")));
        }
        let qualified = self.eat(&Tok::Dot);
        match (mode, qualified) {
            (FieldMode::Qualified, true) => {
                let (field, _) = self.ident("field name")?;
                Ok(FieldRef::of(first, field))
            }
            (FieldMode::Qualified, false) => Err(DslError::syntax(
                pos,
                format!("condition fields are written var.field; '{first}' has no variable"),
            )),
            (FieldMode::Bare, false) => Ok(FieldRef::bare(first)),
            (FieldMode::Bare, true) => Err(DslError::syntax(pos, "guards name data elements directly, without a variable")),
        }
    }

    fn meta(&mut self) -> PResult<MetaConstraint> {
        self.expect_kw("meta")?;
        let (id, _) = self.ident("meta constraint id")?;
        self.expect(Tok::LBrace)?;
        let mut text = None;
        let mut for_each = None;
        let mut require = None;
        while !matches!(self.peek(), Tok::RBrace) {
            let (kw, pos) = self.ident("'text', 'for' or 'require'")?;
            match kw.as_str() {
                "text" if text.is_none() => text = Some(self.string("text")?),
                "for" if for_each.is_none() => {
                    self.expect_kw("each")?;
                    for_each = Some(self.meta_selector()?);
                }
                "require" if require.is_none() => require = Some(self.meta_requirement()?),
                "text" | "for" | "require" => {
                    return Err(DslError::syntax(pos, format!("duplicate '{kw}' clause")))
                }
                other => return Err(DslError::syntax(pos, format!("unknown meta clause '{other}'"))),
            }
            self.end_clause();
        }
        let close = self.expect(Tok::RBrace)?;
        let for_each = for_each.ok_or_else(|| DslError::syntax(close, "meta constraint lacks 'for each'"))?;
        let require = require.ok_or_else(|| DslError::syntax(close, "meta constraint lacks 'require'"))?;
        let activity_selector = matches!(for_each, MetaSelector::ActivitiesUsing(_) | MetaSelector::ActivitiesLabeled(_));
        if activity_selector != matches!(require, MetaRequirement::Attached(_)) {
            return Err(DslError::invalid(
                close,
                "activity selectors take 'require attached'; constraint selectors take property requirements",
            ));
        }
        Ok(MetaConstraint {
            id,
            source_text: text,
            for_each,
            require,
        })
    }

    fn meta_selector(&mut self) -> PResult<MetaSelector> {
        if self.eat_kw("activity") {
            if self.eat_kw("uses-resource") {
                return Ok(MetaSelector::ActivitiesUsing(self.string("resource name")?));
            }
            if self.eat_kw("is") {
                return Ok(MetaSelector::ActivitiesLabeled(self.string("activity label")?));
            }
            return self.unexpected("'uses-resource' or 'is'");
        }
        self.expect_kw("constraint")?;
        let filter = if self.eat_kw("usage") {
            ConstraintFilter::Usage(self.keyword_of("usage", Usage::from_keyword)?)
        } else if self.eat_kw("type") {
            ConstraintFilter::Type(self.keyword_of("constraint type", ConstraintType::from_keyword)?)
        } else if self.eat_kw("scope") {
            ConstraintFilter::Scope(self.keyword_of("scope", Scope::from_keyword)?)
        } else if self.eat_kw("application") {
            ConstraintFilter::Application(self.keyword_of("application", Application::from_keyword)?)
        } else {
            ConstraintFilter::All
        };
        Ok(MetaSelector::Constraints(filter))
    }

    fn meta_requirement(&mut self) -> PResult<MetaRequirement> {
        let (kw, pos) = self.ident("meta requirement")?;
        Ok(match kw.as_str() {
            "attached" => MetaRequirement::Attached(self.string_list("constraint id")?),
            "trigger" => MetaRequirement::Trigger,
            "condition" => MetaRequirement::Condition,
            "behavior" => MetaRequirement::Behavior,
            "scope" => MetaRequirement::Scope(self.keyword_of("scope", Scope::from_keyword)?),
            "application" => MetaRequirement::Application(self.keyword_of("application", Application::from_keyword)?),
            "usage" => MetaRequirement::Usage(self.keyword_of("usage", Usage::from_keyword)?),
            other => return Err(DslError::syntax(pos, format!("unknown meta requirement '{other}'"))),
        })
    }

    fn keyword_of<T>(&mut self, what: &str, f: fn(&str) -> Option<T>) -> PResult<T> {
        let (w, pos) = self.ident(what)?;
        f(&w).ok_or_else(|| DslError::syntax(pos, format!("unknown {what} '{w}'")))
    }
}
