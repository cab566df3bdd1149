//! Boolean data expressions shared by schema guards and constraint conditions,
//! plus the three-valued truth domain they evaluate into.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::interval::IntervalSet;

/// A data value carried by trace events or written as a literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    /// Literal syntax of the constraint language.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write_quoted(f, s),
        }
    }
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('\'')?;
    for c in s.chars() {
        match c {
            '\'' => f.write_str("\\'")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('\'')
}

pub(crate) fn quoted(s: &str) -> String {
    let mut out = String::new();
    let _ = write_quoted(&mut out, s);
    out
}

/// Kleene three-valued logic. `Unknown` covers facts that are not available
/// (run-time values at design time, missing data at run time).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    pub fn or(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Unknown,
        }
    }

    pub fn not(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }

    pub fn implies(self, other: Truth) -> Truth {
        self.not().or(other)
    }

    pub fn all(items: impl IntoIterator<Item = Truth>) -> Truth {
        items.into_iter().fold(Truth::True, Truth::and)
    }

    pub fn any(items: impl IntoIterator<Item = Truth>) -> Truth {
        items.into_iter().fold(Truth::False, Truth::or)
    }

    pub fn is_true(self) -> bool {
        self == Truth::True
    }

    pub fn is_false(self) -> bool {
        self == Truth::False
    }
}

impl From<bool> for Truth {
    fn from(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "==",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            CompareOp::Eq => ord == Ordering::Equal,
            CompareOp::Ne => ord != Ordering::Equal,
            CompareOp::Lt => ord == Ordering::Less,
            CompareOp::Le => ord != Ordering::Greater,
            CompareOp::Gt => ord == Ordering::Greater,
            CompareOp::Ge => ord != Ordering::Less,
        }
    }

    /// Compares two values; mismatched types are unequal and unordered.
    pub fn apply(self, lhs: &Value, rhs: &Value) -> bool {
        let ord = match (lhs, rhs) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            _ => return self == CompareOp::Ne,
        };
        self.holds(ord)
    }
}

/// `field` in a schema guard, `var.field` in a constraint condition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FieldRef {
    pub var: Option<String>,
    pub field: String,
}

impl FieldRef {
    pub fn bare(field: impl Into<String>) -> Self {
        FieldRef {
            var: None,
            field: field.into(),
        }
    }

    pub fn of(var: impl Into<String>, field: impl Into<String>) -> Self {
        FieldRef {
            var: Some(var.into()),
            field: field.into(),
        }
    }
}

impl fmt::Display for FieldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.var {
            Some(v) => write!(f, "{v}.{}", self.field),
            None => f.write_str(&self.field),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DataExpr {
    Compare {
        field: FieldRef,
        op: CompareOp,
        value: Value,
    },
    SameValue(FieldRef, FieldRef),
    And(Box<DataExpr>, Box<DataExpr>),
    Or(Box<DataExpr>, Box<DataExpr>),
    Not(Box<DataExpr>),
}

impl DataExpr {
    pub fn compare(field: FieldRef, op: CompareOp, value: Value) -> Self {
        DataExpr::Compare { field, op, value }
    }

    pub fn and(self, rhs: DataExpr) -> Self {
        DataExpr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: DataExpr) -> Self {
        DataExpr::Or(Box::new(self), Box::new(rhs))
    }

    pub fn negate(self) -> Self {
        DataExpr::Not(Box::new(self))
    }

    pub fn field_refs(&self) -> Vec<&FieldRef> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a FieldRef>) {
        match self {
            DataExpr::Compare { field, .. } => out.push(field),
            DataExpr::SameValue(a, b) => {
                out.push(a);
                out.push(b);
            }
            DataExpr::And(a, b) | DataExpr::Or(a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
            DataExpr::Not(a) => a.collect_refs(out),
        }
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.field_refs()
            .into_iter()
            .filter_map(|r| r.var.as_deref())
            .collect()
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&DataExpr> {
        match self {
            DataExpr::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            other => vec![other],
        }
    }

    pub fn eval(&self, lookup: &dyn Fn(&FieldRef) -> Option<Value>) -> Truth {
        match self {
            DataExpr::Compare { field, op, value } => match lookup(field) {
                Some(v) => op.apply(&v, value).into(),
                None => Truth::Unknown,
            },
            DataExpr::SameValue(a, b) => match (lookup(a), lookup(b)) {
                (Some(x), Some(y)) => (x == y).into(),
                _ => Truth::Unknown,
            },
            DataExpr::And(a, b) => a.eval(lookup).and(b.eval(lookup)),
            DataExpr::Or(a, b) => a.eval(lookup).or(b.eval(lookup)),
            DataExpr::Not(a) => a.eval(lookup).not(),
        }
    }

    /// When the expression only compares a single field against integer
    /// literals, returns that field and the exact set of satisfying integers.
    pub fn integer_constraint(&self) -> Option<(&FieldRef, IntervalSet)> {
        let mut field = None;
        let set = self.interval_of(&mut field)?;
        field.map(|f| (f, set))
    }

    fn interval_of<'a>(&'a self, field: &mut Option<&'a FieldRef>) -> Option<IntervalSet> {
        match self {
            DataExpr::Compare {
                field: f,
                op,
                value: Value::Int(v),
            } => {
                match field {
                    Some(seen) if seen.field != f.field || seen.var != f.var => return None,
                    _ => *field = Some(f),
                }
                Some(IntervalSet::from_compare(*op, *v))
            }
            DataExpr::And(a, b) => Some(a.interval_of(field)?.intersect(&b.interval_of(field)?)),
            DataExpr::Or(a, b) => Some(a.interval_of(field)?.union(&b.interval_of(field)?)),
            DataExpr::Not(a) => Some(a.interval_of(field)?.complement()),
            _ => None,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            DataExpr::Or(..) => 0,
            DataExpr::And(..) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for DataExpr {
    /// Prints in the surface syntax; binary connectives are left-associative,
    /// so a right operand of the same connective keeps its parentheses.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn side(f: &mut fmt::Formatter<'_>, e: &DataExpr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            DataExpr::Compare { field, op, value } => write!(f, "{field} {} {value}", op.symbol()),
            DataExpr::SameValue(a, b) => write!(f, "{a} == {b}"),
            DataExpr::And(a, b) => {
                side(f, a, a.precedence() < 1)?;
                f.write_str(" and ")?;
                side(f, b, b.precedence() <= 1)
            }
            DataExpr::Or(a, b) => {
                side(f, a, false)?;
                f.write_str(" or ")?;
                side(f, b, b.precedence() == 0)
            }
            DataExpr::Not(a) => {
                f.write_str("not ")?;
                side(f, a, a.precedence() < 2)
            }
        }
    }
}
