use std::collections::{BTreeMap, BTreeSet};

use crate::protocol::{
    path_conditions, PathCondition, ProtocolAst, ProtocolError, ProtocolIndex, QueryId,
};

/// Variable dependencies of a protocol.
///
/// A query that reads previously instantiated variables `φ1..φk` (in its
/// bindings or its where clause) and introduces `φk+1..φn` contributes the
/// constrain edges `(φi, φj)` for every `i <= k < j`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyInfo {
    edges: BTreeMap<QueryId, BTreeSet<(String, String)>>,
    predecessors: BTreeMap<String, BTreeSet<String>>,
    successors: BTreeMap<String, BTreeSet<String>>,
    instantiated_by: BTreeMap<String, QueryId>,
}

pub fn constrain_relation(p: &ProtocolAst) -> DependencyInfo {
    let index = ProtocolIndex::new(p);
    let mut dep = DependencyInfo::default();
    for q in index.queries() {
        let mut edges = BTreeSet::new();
        for new in index.new_variables(q.id) {
            dep.instantiated_by.insert(new.clone(), q.id);
            dep.predecessors.entry(new.clone()).or_default();
            for input in index.inputs(q.id) {
                edges.insert((input.clone(), new.clone()));
                dep.predecessors.get_mut(new).unwrap().insert(input.clone());
                dep.successors
                    .entry(input.clone())
                    .or_default()
                    .insert(new.clone());
            }
        }
        dep.edges.insert(q.id, edges);
    }
    dep
}

impl DependencyInfo {
    /// Constrain edges contributed by one query.
    pub fn edges_of(&self, q: QueryId) -> impl Iterator<Item = (&str, &str)> {
        self.edges
            .get(&q)
            .into_iter()
            .flatten()
            .map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges
            .values()
            .flatten()
            .map(|(a, b)| (a.as_str(), b.as_str()))
    }

    /// Variables whose values directly constrain `var`.
    pub fn predecessors(&self, var: &str) -> impl Iterator<Item = &str> {
        self.predecessors
            .get(var)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    /// The constrain set of `var`: variables whose values it directly constrains.
    pub fn successors(&self, var: &str) -> impl Iterator<Item = &str> {
        self.successors
            .get(var)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn instantiating_query(&self, var: &str) -> Result<QueryId, ProtocolError> {
        self.instantiated_by
            .get(var)
            .copied()
            .ok_or_else(|| ProtocolError::UnknownVariable(var.to_string()))
    }
}

/// Every variable `v` transitively depends on, excluding `v` itself.
pub fn restrict_set(dep: &DependencyInfo, v: &BTreeSet<String>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<&str> = v.iter().map(String::as_str).collect();
    while let Some(var) = stack.pop() {
        for pred in dep.predecessors(var) {
            if out.insert(pred.to_string()) {
                stack.push(pred);
            }
        }
    }
    out.retain(|x| !v.contains(x));
    out
}

/// Variables of `v` or its restrict set that occur in a guard on the path to
/// `conflict`.
pub fn split_set(
    dep: &DependencyInfo,
    p: &ProtocolAst,
    v: &BTreeSet<String>,
    conflict: QueryId,
) -> Result<BTreeSet<String>, ProtocolError> {
    let guarded: BTreeSet<String> = path_conditions(p, conflict)?
        .iter()
        .flat_map(|c| c.variables())
        .map(str::to_string)
        .collect();
    let mut scope = restrict_set(dep, v);
    scope.extend(v.iter().cloned());
    Ok(scope.intersection(&guarded).cloned().collect())
}

/// Partitions `v` by instantiating query, in instantiation order.
pub fn make_sets(
    dep: &DependencyInfo,
    v: &BTreeSet<String>,
) -> Result<Vec<(QueryId, BTreeSet<String>)>, ProtocolError> {
    let mut groups: BTreeMap<QueryId, BTreeSet<String>> = BTreeMap::new();
    for var in v {
        groups
            .entry(dep.instantiating_query(var)?)
            .or_default()
            .insert(var.clone());
    }
    Ok(groups.into_iter().collect())
}

/// Path guards of `conflict` mentioning at least one variable of `split`.
pub fn relevant_conditions(
    p: &ProtocolAst,
    split: &BTreeSet<String>,
    conflict: QueryId,
) -> Result<Vec<PathCondition>, ProtocolError> {
    Ok(path_conditions(p, conflict)?
        .into_iter()
        .filter(|c| c.variables().iter().any(|v| split.contains(*v)))
        .collect())
}
