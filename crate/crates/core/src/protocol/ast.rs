use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::value::{CmpOp, DateField, EvalError, Value};

/// 1-based position of a query in document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct QueryId(pub usize);

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// 1-based position of an `if` statement in document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct BranchId(pub usize);

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProtocolAst {
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Statement {
    Query(Query),
    Branch(Branch),
    Action(Action),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Query {
    pub id: QueryId,
    pub bindings: Vec<Binding>,
    pub class_refs: Vec<ClassRef>,
    pub conditions: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Binding {
    pub attribute: String,
    /// `None` for the wildcard `*`.
    pub variable: Option<String>,
}

/// A single class or a specialization sequence `C1.C2.….Ck`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ClassRef(pub Vec<String>);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Operand,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Operand {
    Var(String),
    Field(String, DateField),
    Literal(Value),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Branch {
    pub id: BranchId,
    pub conditions: Vec<Condition>,
    pub then_block: Vec<Statement>,
    pub else_block: Option<Vec<Statement>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Action {
    pub name: String,
    pub args: Vec<Operand>,
}

/// A branch guard on the path to a statement.
///
/// `Holds` comes from a `then` block; `Fails` from an `else` block and is
/// satisfied when at least one of the branch's conjuncts is false.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathCondition {
    Holds(Condition),
    Fails(Vec<Condition>),
}

impl ClassRef {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        ClassRef(names.into_iter().map(Into::into).collect())
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn is_sequence(&self) -> bool {
        self.0.len() > 1
    }

    pub fn terminal(&self) -> &str {
        self.0.last().map(String::as_str).unwrap_or("")
    }
}

impl fmt::Display for ClassRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("."))
    }
}

impl Operand {
    pub fn variable(&self) -> Option<&str> {
        match self {
            Operand::Var(v) | Operand::Field(v, _) => Some(v),
            Operand::Literal(_) => None,
        }
    }

    pub fn evaluate<'a, F>(&self, lookup: &F) -> Result<Value, EvalError>
    where
        F: Fn(&str) -> Option<&'a Value>,
    {
        match self {
            Operand::Literal(v) => Ok(v.clone()),
            Operand::Var(name) => lookup(name)
                .cloned()
                .ok_or_else(|| EvalError::UnknownColumn(name.clone())),
            Operand::Field(name, field) => lookup(name)
                .ok_or_else(|| EvalError::UnknownColumn(name.clone()))?
                .date_field(*field),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => f.write_str(v),
            Operand::Field(v, field) => write!(f, "{v}.{}", field.as_str()),
            Operand::Literal(v) => write!(f, "{v}"),
        }
    }
}

impl Condition {
    pub fn new(lhs: Operand, op: CmpOp, rhs: Operand) -> Self {
        Condition { lhs, op, rhs }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.lhs.variable().into_iter().chain(self.rhs.variable())
    }

    /// The same comparison with the operator flipped to its negation.
    pub fn negated(&self) -> Condition {
        Condition {
            lhs: self.lhs.clone(),
            op: self.op.negated(),
            rhs: self.rhs.clone(),
        }
    }

    pub fn evaluate<'a, F>(&self, lookup: &F) -> Result<bool, EvalError>
    where
        F: Fn(&str) -> Option<&'a Value>,
    {
        let l = self.lhs.evaluate(lookup)?;
        let r = self.rhs.evaluate(lookup)?;
        l.compare(self.op, &r)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.lhs, self.op, self.rhs)
    }
}

impl PathCondition {
    pub fn variables(&self) -> BTreeSet<&str> {
        match self {
            PathCondition::Holds(c) => c.variables().collect(),
            PathCondition::Fails(cs) => cs.iter().flat_map(Condition::variables).collect(),
        }
    }

    /// Conditions in true form: the guard as written for `Holds`, the
    /// operator-flipped conjuncts for `Fails` (read as a disjunction when
    /// there is more than one).
    pub fn true_form(&self) -> Vec<Condition> {
        match self {
            PathCondition::Holds(c) => vec![c.clone()],
            PathCondition::Fails(cs) => cs.iter().map(Condition::negated).collect(),
        }
    }

    pub fn evaluate<'a, F>(&self, lookup: &F) -> Result<bool, EvalError>
    where
        F: Fn(&str) -> Option<&'a Value>,
    {
        match self {
            PathCondition::Holds(c) => c.evaluate(lookup),
            PathCondition::Fails(cs) => {
                for c in cs {
                    if !c.evaluate(lookup)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }
}

impl fmt::Display for PathCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.true_form().iter().map(|c| c.to_string()).collect();
        if parts.len() == 1 {
            f.write_str(&parts[0])
        } else {
            write!(f, "({})", parts.join(" or "))
        }
    }
}

impl Query {
    /// Variables named by non-wildcard bindings, in binding order, without repeats.
    pub fn bound_variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for b in &self.bindings {
            if let Some(v) = &b.variable {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Every variable the query mentions, in bindings or in its where clause.
    pub fn referenced_variables(&self) -> BTreeSet<&str> {
        self.bindings
            .iter()
            .filter_map(|b| b.variable.as_deref())
            .chain(self.conditions.iter().flat_map(Condition::variables))
            .collect()
    }
}

impl ProtocolAst {
    /// Every query in document order, including those nested in blocks.
    pub fn queries(&self) -> Vec<&Query> {
        fn walk<'a>(stmts: &'a [Statement], out: &mut Vec<&'a Query>) {
            for s in stmts {
                match s {
                    Statement::Query(q) => out.push(q),
                    Statement::Branch(b) => {
                        walk(&b.then_block, out);
                        if let Some(e) = &b.else_block {
                            walk(e, out);
                        }
                    }
                    Statement::Action(_) => {}
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.statements, &mut out);
        out
    }

    pub fn query(&self, id: QueryId) -> Option<&Query> {
        self.queries().into_iter().find(|q| q.id == id)
    }

    /// Every branch in document order.
    pub fn branches(&self) -> Vec<&Branch> {
        fn walk<'a>(stmts: &'a [Statement], out: &mut Vec<&'a Branch>) {
            for s in stmts {
                if let Statement::Branch(b) = s {
                    out.push(b);
                    walk(&b.then_block, out);
                    if let Some(e) = &b.else_block {
                        walk(e, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.statements, &mut out);
        out
    }
}
