//! Database-level verification of ontology conflicts.
//!
//! A conflicting query is *spurious* when no assignment the server's
//! database allows for the variables on the way to it satisfies the branch
//! guards that lead there. Assignable sets are built per group of
//! variables introduced by one query, following the constrain relation
//! between variables, and memoized for the whole run.

mod assignable;
mod deps;
mod engine;
mod step;

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

pub use assignable::{generate_assignable_set, split_assignable_set};
pub use deps::{
    constrain_relation, make_sets, relevant_conditions, restrict_set, split_set, DependencyInfo,
};
pub use engine::{
    conflict_variables, group_relation, incoherent_entries, verify_all, verify_conflict,
    verify_conflict_detailed, CacheKey, VerifyContext,
};
pub use step::{parse_trace, replay_trace, step_verify, BranchDecision, Replay, TraceEntry};

use crate::protocol::{ProtocolError, QueryId};
use crate::relstore::{Combine, RelError};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Relation(#[from] RelError),
    #[error("query {0} cannot be evaluated against the server ontology")]
    Unanswerable(QueryId),
    #[error("dependency cycle through {{{}}}", .0.join(", "))]
    DependencyCycle(Vec<String>),
    #[error("variables {{{}}} are introduced by more than one query", .0.join(", "))]
    MixedGroup(Vec<String>),
    #[error("inconsistent trace: {0}")]
    InconsistentTrace(String),
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Spurious,
    Realizable,
}

/// Agreement of a verdict with the brute-force executor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleCheck {
    pub reachable: bool,
    pub agrees: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConflictVerdict {
    #[serde(rename = "queryId")]
    pub query: QueryId,
    pub verdict: Verdict,
    /// One assignment reaching the conflict, over every variable it depends on.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<BTreeMap<String, Value>>,
    /// The variables the conflict depends on directly, whose assignable set
    /// came out empty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emptied_at: Option<Vec<String>>,
    #[serde(serialize_with = "mode_name")]
    pub mode: Combine,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCheck>,
}

fn mode_name<S: serde::Serializer>(mode: &Combine, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match mode {
        Combine::Conjunction => "conjunction",
        Combine::Disjunction => "disjunction",
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SpuriousnessReport {
    pub verdicts: Vec<ConflictVerdict>,
}

impl SpuriousnessReport {
    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }

    pub fn verdict(&self, q: QueryId) -> Option<&ConflictVerdict> {
        self.verdicts.iter().find(|v| v.query == q)
    }

    pub fn realizable(&self) -> impl Iterator<Item = &ConflictVerdict> {
        self.verdicts
            .iter()
            .filter(|v| v.verdict == Verdict::Realizable)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            let _ = match v.verdict {
                Verdict::Realizable => {
                    let w: Vec<String> = v
                        .witness
                        .iter()
                        .flatten()
                        .map(|(k, val)| format!("{k} = {val}"))
                        .collect();
                    writeln!(
                        out,
                        "query {}: realizable (witness: {})",
                        v.query.0,
                        w.join(", ")
                    )
                }
                Verdict::Spurious => writeln!(
                    out,
                    "query {}: spurious (no assignment for {{{}}})",
                    v.query.0,
                    v.emptied_at.as_deref().unwrap_or_default().join(", ")
                ),
            };
            if let Some(o) = v.oracle {
                let _ = writeln!(
                    out,
                    "  oracle: {} ({}){}",
                    if o.reachable {
                        "reachable"
                    } else {
                        "unreachable"
                    },
                    if o.agrees { "agrees" } else { "DISAGREES" },
                    if o.truncated {
                        ", search truncated"
                    } else {
                        ""
                    }
                );
            }
        }
        out
    }
}
