use std::collections::{BTreeMap, BTreeSet};
use std::iter::Peekable;

use serde::{Deserialize, Serialize};

use super::engine::{verify_with, VerifyContext};
use super::{SpuriousnessReport, VerifyError};
use crate::consistency::{conflicting_queries, resolve_class_ref, Mismatch};
use crate::protocol::{BranchId, ProtocolAst, ProtocolIndex, Query, QueryId, Statement};
use crate::relstore::{Combine, Database};
use crate::value::{Tag, Value};

/// One exchange of a running conversation: a query's answer (`null` when
/// the server found none), a branch decision, or both in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TraceEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_id: Option<usize>,
    #[serde(default)]
    pub answer: Option<BTreeMap<String, serde_json::Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<BranchDecision>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDecision {
    /// 1-based position of the `if` in document order.
    pub index: usize,
    pub taken: bool,
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceEntry>, VerifyError> {
    serde_json::from_str(text).map_err(|e| VerifyError::MalformedTrace(e.to_string()))
}

#[derive(Debug)]
enum Event<'t> {
    Answer(QueryId, Option<&'t BTreeMap<String, serde_json::Value>>),
    Branch(BranchId, bool),
}

/// What a trace prefix established.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Replay {
    pub values: BTreeMap<String, Value>,
    pub executed: BTreeSet<QueryId>,
    /// Queries inside blocks the conversation decided not to enter.
    pub pruned: BTreeSet<QueryId>,
}

fn inconsistent(msg: impl Into<String>) -> VerifyError {
    VerifyError::InconsistentTrace(msg.into())
}

/// Tag a query's answer for `attribute` carries, when the server can tell.
fn answer_tag(q: &Query, attribute: &str, db: &Database) -> Option<Tag> {
    q.class_refs.iter().find_map(|c| {
        let node = resolve_class_ref(db.ontology(), c).ok()?;
        db.tag_of(&node.name, attribute)
    })
}

fn infer(json: &serde_json::Value) -> Result<Value, String> {
    use serde_json::Value as J;
    match json {
        J::Null => Ok(Value::Null),
        J::Number(n) if n.is_i64() => Tag::Int.from_json(json),
        J::Number(_) => Tag::Decimal.from_json(json),
        J::String(_) => Tag::Str.from_json(json),
        other => Err(format!("unsupported answer value {other}")),
    }
}

struct Replayer<'a, 't, I: Iterator<Item = Event<'t>>> {
    index: ProtocolIndex<'a>,
    db: &'a Database,
    events: Peekable<I>,
    out: Replay,
}

impl<'a, 't, I: Iterator<Item = Event<'t>>> Replayer<'a, 't, I> {
    /// Returns `false` once the trace is exhausted.
    fn block(&mut self, stmts: &[Statement]) -> Result<bool, VerifyError> {
        for s in stmts {
            match s {
                Statement::Query(q) => {
                    let answer = match self.events.peek() {
                        None => return Ok(false),
                        Some(Event::Answer(id, _)) if *id == q.id => match self.events.next() {
                            Some(Event::Answer(_, a)) => a,
                            _ => unreachable!(),
                        },
                        Some(Event::Answer(id, _)) => {
                            return Err(inconsistent(format!(
                                "expected an answer to {}, found one to {id}",
                                q.id
                            )))
                        }
                        Some(Event::Branch(b, _)) => {
                            return Err(inconsistent(format!(
                                "expected an answer to {}, found a decision for branch {}",
                                q.id, b.0
                            )))
                        }
                    };
                    self.answer(q, answer)?;
                }
                Statement::Branch(b) => {
                    let holds = {
                        let values = &self.out.values;
                        let lookup = |v: &str| values.get(v);
                        let mut all = true;
                        for c in &b.conditions {
                            if !c
                                .evaluate(&lookup)
                                .map_err(|e| inconsistent(format!("branch {}: {e}", b.id.0)))?
                            {
                                all = false;
                                break;
                            }
                        }
                        all
                    };
                    match self.events.peek() {
                        None => return Ok(false),
                        Some(Event::Branch(id, taken)) if *id == b.id => {
                            if *taken != holds {
                                return Err(inconsistent(format!(
                                    "branch {} recorded as {} but its conditions are {}",
                                    b.id.0,
                                    if *taken { "taken" } else { "not taken" },
                                    holds
                                )));
                            }
                            self.events.next();
                        }
                        Some(_) => {}
                    }
                    let (enter, skip) = if holds {
                        (Some(&b.then_block), b.else_block.as_ref())
                    } else {
                        (b.else_block.as_ref(), Some(&b.then_block))
                    };
                    if let Some(skip) = skip {
                        prune(skip, &mut self.out.pruned);
                    }
                    if let Some(enter) = enter {
                        if !self.block(enter)? {
                            return Ok(false);
                        }
                    }
                }
                Statement::Action(_) => {}
            }
        }
        Ok(true)
    }

    fn answer(
        &mut self,
        q: &Query,
        answer: Option<&BTreeMap<String, serde_json::Value>>,
    ) -> Result<(), VerifyError> {
        let new = self.index.new_variables(q.id);
        let Some(answer) = answer else {
            for v in new {
                self.out.values.insert(v.clone(), Value::Null);
            }
            self.out.executed.insert(q.id);
            return Ok(());
        };
        let given: BTreeSet<&String> = answer.keys().collect();
        let wanted: BTreeSet<&String> = new.iter().collect();
        if given != wanted {
            return Err(inconsistent(format!(
                "answer to {} binds {{{}}}, the query introduces {{{}}}",
                q.id,
                given
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", "),
                new.join(", ")
            )));
        }
        for (var, json) in answer {
            let attribute = q
                .bindings
                .iter()
                .find(|b| b.variable.as_deref() == Some(var))
                .map(|b| b.attribute.as_str())
                .expect("new variable is bound");
            let value = match answer_tag(q, attribute, self.db) {
                Some(tag) => tag.from_json(json),
                None => infer(json),
            }
            .map_err(|e| inconsistent(format!("answer to {}, `{var}`: {e}", q.id)))?;
            self.out.values.insert(var.clone(), value);
        }
        let values = &self.out.values;
        let lookup = |v: &str| values.get(v);
        for c in &q.conditions {
            let ok = c
                .evaluate(&lookup)
                .map_err(|e| inconsistent(format!("answer to {}: {e}", q.id)))?;
            if !ok {
                return Err(inconsistent(format!("answer to {} violates {c}", q.id)));
            }
        }
        self.out.executed.insert(q.id);
        Ok(())
    }
}

fn prune(stmts: &[Statement], out: &mut BTreeSet<QueryId>) {
    for s in stmts {
        match s {
            Statement::Query(q) => {
                out.insert(q.id);
            }
            Statement::Branch(b) => {
                prune(&b.then_block, out);
                if let Some(e) = &b.else_block {
                    prune(e, out);
                }
            }
            Statement::Action(_) => {}
        }
    }
}

/// Replays a trace prefix against the protocol, checking every answer
/// against its where clause and every recorded decision against the values.
/// Branches without a recorded decision are decided from the values.
pub fn replay_trace(
    p: &ProtocolAst,
    db: &Database,
    trace: &[TraceEntry],
) -> Result<Replay, VerifyError> {
    let mut events = Vec::new();
    for (i, e) in trace.iter().enumerate() {
        match e.query_id {
            Some(0) => {
                return Err(VerifyError::MalformedTrace(format!(
                    "entry {i}: query ids start at 1"
                )))
            }
            Some(id) => events.push(Event::Answer(QueryId(id), e.answer.as_ref())),
            None if e.answer.is_some() => {
                return Err(VerifyError::MalformedTrace(format!(
                    "entry {i}: answer without queryId"
                )))
            }
            None => {}
        }
        if let Some(b) = e.branch {
            events.push(Event::Branch(BranchId(b.index), b.taken));
        }
        if e.query_id.is_none() && e.branch.is_none() {
            return Err(VerifyError::MalformedTrace(format!("entry {i} is empty")));
        }
    }
    let mut r = Replayer {
        index: ProtocolIndex::new(p),
        db,
        events: events.into_iter().peekable(),
        out: Replay::default(),
    };
    r.block(&p.statements)?;
    if let Some(e) = r.events.next() {
        return Err(inconsistent(format!(
            "trace continues past the protocol: {e:?}"
        )));
    }
    Ok(r.out)
}

/// Re-verifies the conflicts a running conversation can still reach.
///
/// Conflicts inside blocks the trace decided against are dropped; the
/// values exchanged so far replace the corresponding assignable sets.
pub fn step_verify(
    p: &ProtocolAst,
    db: &Database,
    conflicts: &[Mismatch],
    trace: &[TraceEntry],
    mode: Combine,
) -> Result<SpuriousnessReport, VerifyError> {
    let replay = replay_trace(p, db, trace)?;
    let mut ctx = VerifyContext::new(mode, conflicts);
    ctx.seed(replay.executed, replay.values);
    let live: Vec<QueryId> = conflicting_queries(conflicts)
        .into_iter()
        .filter(|q| !replay.pruned.contains(q))
        .collect();
    verify_with(&mut ctx, p, db, &live)
}
