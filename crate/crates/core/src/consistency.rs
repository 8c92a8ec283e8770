//! Ontology-level conflict detection.
//!
//! Every query of a protocol is checked against the server ontology: each
//! class reference must resolve (specialization sequences must descend the
//! server's hierarchy), and every bound attribute must be a data property of
//! at least one resolved class.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::ontology::{ClassNode, OntologyGraph};
use crate::protocol::{ClassRef, ProtocolAst, Query, QueryId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnmatchedVariable {
    pub attribute: String,
    pub variable: String,
}

/// A conflict between the protocol and the server ontology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mismatch {
    /// A class of the query has no equivalent in the server ontology.
    ClassNotFound {
        query: QueryId,
        class_ref: usize,
        path: ClassRef,
        class: String,
    },
    /// Element `index` of a specialization sequence is not a subclass of
    /// `parent`, the server class matched for the element before it.
    SpecializationMismatch {
        query: QueryId,
        class_ref: usize,
        path: ClassRef,
        index: usize,
        class: String,
        parent: String,
    },
    /// Bound attributes no resolved class of the query carries.
    UnmatchedVariables {
        query: QueryId,
        classes: Vec<ClassRef>,
        variables: Vec<UnmatchedVariable>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MismatchKind {
    ClassNotFound,
    SpecializationMismatch,
    UnmatchedVariables,
}

impl Mismatch {
    pub fn kind(&self) -> MismatchKind {
        match self {
            Mismatch::ClassNotFound { .. } => MismatchKind::ClassNotFound,
            Mismatch::SpecializationMismatch { .. } => MismatchKind::SpecializationMismatch,
            Mismatch::UnmatchedVariables { .. } => MismatchKind::UnmatchedVariables,
        }
    }

    pub fn query(&self) -> QueryId {
        match self {
            Mismatch::ClassNotFound { query, .. }
            | Mismatch::SpecializationMismatch { query, .. }
            | Mismatch::UnmatchedVariables { query, .. } => *query,
        }
    }

    pub fn path(&self) -> String {
        match self {
            Mismatch::ClassNotFound { path, .. }
            | Mismatch::SpecializationMismatch { path, .. } => path.to_string(),
            Mismatch::UnmatchedVariables { classes, .. } => classes
                .iter()
                .map(ClassRef::to_string)
                .collect::<Vec<_>>()
                .join(", "),
        }
    }

    /// The stable JSON record `{kind, queryId, path, details}`.
    pub fn to_json(&self) -> serde_json::Value {
        let details = match self {
            Mismatch::ClassNotFound {
                class_ref, class, ..
            } => json!({ "classRef": class_ref, "class": class }),
            Mismatch::SpecializationMismatch {
                class_ref,
                index,
                class,
                parent,
                ..
            } => json!({
                "classRef": class_ref,
                "index": index,
                "class": class,
                "parent": parent,
            }),
            Mismatch::UnmatchedVariables { variables, .. } => json!({ "variables": variables }),
        };
        json!({
            "kind": self.kind(),
            "queryId": self.query().0,
            "path": self.path(),
            "details": details,
        })
    }
}

/// Why a class reference failed to resolve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolveFailure {
    NotFound {
        class: String,
    },
    NotSubclass {
        index: usize,
        class: String,
        parent: String,
    },
}

/// Resolves a class reference to the server class matching its last element.
pub fn resolve_class_ref<'g>(
    graph: &'g OntologyGraph,
    class_ref: &ClassRef,
) -> Result<&'g ClassNode, ResolveFailure> {
    let names = class_ref.names();
    let head = names.first().map(String::as_str).unwrap_or("");
    let mut current = graph
        .find_match(head)
        .ok_or_else(|| ResolveFailure::NotFound {
            class: head.to_string(),
        })?;
    for (index, name) in names.iter().enumerate().skip(1) {
        let next = graph
            .find_match(name)
            .filter(|n| graph.is_subclass(&current.name, &n.name).unwrap_or(false))
            .ok_or_else(|| ResolveFailure::NotSubclass {
                index,
                class: name.clone(),
                parent: current.name.clone(),
            })?;
        current = next;
    }
    Ok(current)
}

/// Checks one query, appending its mismatches in class-reference order.
fn check_query(q: &Query, server: &OntologyGraph, out: &mut Vec<Mismatch>) {
    let mut covered: BTreeSet<String> = BTreeSet::new();
    let mut all_resolved = true;
    for (i, cref) in q.class_refs.iter().enumerate() {
        match resolve_class_ref(server, cref) {
            Ok(node) => {
                covered.extend(
                    server
                        .effective_properties(&node.name)
                        .expect("resolved class exists"),
                );
            }
            Err(ResolveFailure::NotFound { class }) => {
                all_resolved = false;
                out.push(Mismatch::ClassNotFound {
                    query: q.id,
                    class_ref: i,
                    path: cref.clone(),
                    class,
                });
            }
            Err(ResolveFailure::NotSubclass {
                index,
                class,
                parent,
            }) => {
                all_resolved = false;
                out.push(Mismatch::SpecializationMismatch {
                    query: q.id,
                    class_ref: i,
                    path: cref.clone(),
                    index,
                    class,
                    parent,
                });
            }
        }
    }
    // attribute coverage is only meaningful once every class matched
    if !all_resolved {
        return;
    }
    let mut variables = Vec::new();
    for b in &q.bindings {
        if let Some(var) = &b.variable {
            let entry = UnmatchedVariable {
                attribute: b.attribute.clone(),
                variable: var.clone(),
            };
            if !covered.contains(&b.attribute) && !variables.contains(&entry) {
                variables.push(entry);
            }
        }
    }
    if !variables.is_empty() {
        out.push(Mismatch::UnmatchedVariables {
            query: q.id,
            classes: q.class_refs.clone(),
            variables,
        });
    }
}

/// Collects every mismatch of the protocol against the server ontology,
/// ordered by query and then by class-reference position.
pub fn check_consistency(p: &ProtocolAst, server: &OntologyGraph) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for q in p.queries() {
        check_query(q, server, &mut out);
    }
    out
}

/// Like [`check_consistency`] but stops at the first mismatch.
pub fn check_consistency_fail_fast(p: &ProtocolAst, server: &OntologyGraph) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for q in p.queries() {
        check_query(q, server, &mut out);
        if !out.is_empty() {
            out.truncate(1);
            break;
        }
    }
    out
}

/// Distinct conflicting queries, in protocol order.
pub fn conflicting_queries(mismatches: &[Mismatch]) -> Vec<QueryId> {
    let set: BTreeSet<QueryId> = mismatches.iter().map(Mismatch::query).collect();
    set.into_iter().collect()
}

// ------------------------------------------------------------------------------------------------
// Explanations
// ------------------------------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed mismatch report: {0}")]
pub struct MalformedReport(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Explanation {
    pub query_id: QueryId,
    pub element: String,
    pub message: String,
    /// For specialization mismatches: every server ancestor of the failing class.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub superclasses: Vec<String>,
    /// For unmatched variables: server classes declaring each missing attribute.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub carriers: Vec<(String, Vec<String>)>,
}

pub fn explain_mismatch(
    m: &Mismatch,
    server: &OntologyGraph,
) -> Result<Explanation, MalformedReport> {
    match m {
        Mismatch::ClassNotFound {
            query, path, class, ..
        } => {
            if class.is_empty() {
                return Err(MalformedReport("class name is empty".into()));
            }
            Ok(Explanation {
                query_id: *query,
                element: class.clone(),
                message: format!(
                    "query {} uses class `{class}` (in `{path}`) which the server ontology does not define",
                    query.0
                ),
                superclasses: vec![],
                carriers: vec![],
            })
        }
        Mismatch::SpecializationMismatch {
            query,
            path,
            index,
            class,
            parent,
            ..
        } => {
            if class.is_empty() || parent.is_empty() || *index == 0 || *index >= path.names().len()
            {
                return Err(MalformedReport(format!(
                    "specialization mismatch at index {index} of `{path}` is inconsistent"
                )));
            }
            let superclasses: Vec<String> = match server.find_match(class) {
                Some(node) => server
                    .ancestors(&node.name)
                    .expect("matched class exists")
                    .into_iter()
                    .skip(1)
                    .map(|c| c.name.clone())
                    .collect(),
                None => vec![],
            };
            let message = if server.find_match(class).is_none() {
                format!(
                    "query {}: `{path}` expects `{class}` under `{parent}`, but the server \
                     ontology has no class `{class}`",
                    query.0
                )
            } else if superclasses.is_empty() {
                format!(
                    "query {}: `{path}` expects `{class}` under `{parent}`, but in the server \
                     ontology `{class}` is a root class",
                    query.0
                )
            } else {
                format!(
                    "query {}: `{path}` expects `{class}` under `{parent}`, but in the server \
                     ontology its superclasses are {}",
                    query.0,
                    superclasses.join(", ")
                )
            };
            Ok(Explanation {
                query_id: *query,
                element: class.clone(),
                message,
                superclasses,
                carriers: vec![],
            })
        }
        Mismatch::UnmatchedVariables {
            query,
            classes,
            variables,
        } => {
            if variables.is_empty() {
                return Err(MalformedReport("unmatched variable set is empty".into()));
            }
            let carriers: Vec<(String, Vec<String>)> = variables
                .iter()
                .map(|v| {
                    let owners = server
                        .classes_declaring(&v.attribute)
                        .into_iter()
                        .map(|c| c.name.clone())
                        .collect();
                    (v.attribute.clone(), owners)
                })
                .collect();
            let listed: Vec<String> = carriers
                .iter()
                .map(|(attr, owners)| {
                    if owners.is_empty() {
                        format!("`{attr}` (declared nowhere)")
                    } else {
                        format!("`{attr}` (declared on {})", owners.join(", "))
                    }
                })
                .collect();
            let names: Vec<String> = classes.iter().map(ClassRef::to_string).collect();
            Ok(Explanation {
                query_id: *query,
                element: variables
                    .iter()
                    .map(|v| v.variable.clone())
                    .collect::<Vec<_>>()
                    .join(", "),
                message: format!(
                    "query {}: the server cannot answer {} for {}",
                    query.0,
                    listed.join(", "),
                    names.join(", ")
                ),
                superclasses: vec![],
                carriers,
            })
        }
    }
}
