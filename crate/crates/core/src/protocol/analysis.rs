//! Static analyses over a parsed protocol: variable classification, the
//! branch guards on the path to a query, and instantiation sites.

use std::collections::BTreeMap;

use serde::Serialize;

use super::ast::*;
use super::ProtocolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Occurrence {
    Uninstantiated,
    Instantiated,
}

/// Classifies every `(query, variable)` occurrence. The query that first
/// binds a variable sees it uninstantiated; every other query that mentions
/// it, in a binding or a where condition, sees it instantiated.
pub fn classify_variables(p: &ProtocolAst) -> BTreeMap<(QueryId, String), Occurrence> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = BTreeMap::new();
    for q in p.queries() {
        let mut fresh = Vec::new();
        for v in q.bound_variables() {
            if !seen.contains(v) {
                fresh.push(v.to_string());
            }
        }
        for v in q.referenced_variables() {
            let occ = if fresh.iter().any(|f| f == v) {
                Occurrence::Uninstantiated
            } else {
                Occurrence::Instantiated
            };
            out.insert((q.id, v.to_string()), occ);
        }
        seen.extend(fresh);
    }
    out
}

/// Variables first bound by `q`, in binding order.
pub fn new_variables(p: &ProtocolAst, q: &Query) -> Vec<String> {
    let classes = classify_variables(p);
    q.bound_variables()
        .into_iter()
        .filter(|v| classes.get(&(q.id, v.to_string())) == Some(&Occurrence::Uninstantiated))
        .map(str::to_string)
        .collect()
}

/// Variables `q` reads that an earlier query instantiated.
pub fn instantiated_variables(p: &ProtocolAst, q: &Query) -> Vec<String> {
    let classes = classify_variables(p);
    q.referenced_variables()
        .into_iter()
        .filter(|v| classes.get(&(q.id, v.to_string())) == Some(&Occurrence::Instantiated))
        .map(str::to_string)
        .collect()
}

/// Guards on the unique syntactic path from the start of the protocol to
/// `target`, outermost first.
pub fn path_conditions(
    p: &ProtocolAst,
    target: QueryId,
) -> Result<Vec<PathCondition>, ProtocolError> {
    fn walk(stmts: &[Statement], target: QueryId, acc: &mut Vec<PathCondition>) -> bool {
        for s in stmts {
            match s {
                Statement::Query(q) if q.id == target => return true,
                Statement::Branch(b) => {
                    let mark = acc.len();
                    acc.extend(b.conditions.iter().cloned().map(PathCondition::Holds));
                    if walk(&b.then_block, target, acc) {
                        return true;
                    }
                    acc.truncate(mark);
                    if let Some(e) = &b.else_block {
                        acc.push(PathCondition::Fails(b.conditions.clone()));
                        if walk(e, target, acc) {
                            return true;
                        }
                        acc.truncate(mark);
                    }
                }
                _ => {}
            }
        }
        false
    }
    let mut acc = Vec::new();
    if walk(&p.statements, target, &mut acc) {
        Ok(acc)
    } else {
        Err(ProtocolError::UnknownQuery(target))
    }
}

/// The query whose bindings introduce `variable`.
pub fn instantiating_query(p: &ProtocolAst, variable: &str) -> Result<QueryId, ProtocolError> {
    p.queries()
        .into_iter()
        .find(|q| q.bound_variables().contains(&variable))
        .map(|q| q.id)
        .ok_or_else(|| ProtocolError::UnknownVariable(variable.to_string()))
}

/// Precomputed lookups used by the verification engine.
#[derive(Debug, Clone)]
pub struct ProtocolIndex<'a> {
    pub ast: &'a ProtocolAst,
    queries: BTreeMap<QueryId, &'a Query>,
    instantiated_by: BTreeMap<String, QueryId>,
    new_vars: BTreeMap<QueryId, Vec<String>>,
    inputs: BTreeMap<QueryId, Vec<String>>,
}

impl<'a> ProtocolIndex<'a> {
    pub fn new(ast: &'a ProtocolAst) -> Self {
        let classes = classify_variables(ast);
        let mut queries = BTreeMap::new();
        let mut instantiated_by = BTreeMap::new();
        let mut new_vars: BTreeMap<QueryId, Vec<String>> = BTreeMap::new();
        let mut inputs: BTreeMap<QueryId, Vec<String>> = BTreeMap::new();
        for q in ast.queries() {
            queries.insert(q.id, q);
            new_vars.entry(q.id).or_default();
            inputs.entry(q.id).or_default();
        }
        for ((qid, var), occ) in classes {
            match occ {
                Occurrence::Uninstantiated => {
                    instantiated_by.insert(var.clone(), qid);
                    new_vars.get_mut(&qid).unwrap().push(var);
                }
                Occurrence::Instantiated => inputs.get_mut(&qid).unwrap().push(var),
            }
        }
        ProtocolIndex {
            ast,
            queries,
            instantiated_by,
            new_vars,
            inputs,
        }
    }

    pub fn query(&self, id: QueryId) -> Result<&'a Query, ProtocolError> {
        self.queries
            .get(&id)
            .copied()
            .ok_or(ProtocolError::UnknownQuery(id))
    }

    pub fn queries(&self) -> impl Iterator<Item = &'a Query> + '_ {
        self.queries.values().copied()
    }

    pub fn instantiating_query(&self, var: &str) -> Result<QueryId, ProtocolError> {
        self.instantiated_by
            .get(var)
            .copied()
            .ok_or_else(|| ProtocolError::UnknownVariable(var.to_string()))
    }

    /// Variables first bound by the query, sorted.
    pub fn new_variables(&self, id: QueryId) -> &[String] {
        self.new_vars.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Previously instantiated variables the query reads, sorted.
    pub fn inputs(&self, id: QueryId) -> &[String] {
        self.inputs.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.instantiated_by.keys().map(String::as_str)
    }
}
