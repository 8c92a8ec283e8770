//! Brute-force executor: runs a protocol against the database along every
//! possible sequence of answers and records the runs that reach a query.
//!
//! Answers are computed by nested loops over raw table rows, straight from
//! the ontology and the tables; nothing here goes through the relational
//! operators or the dependency analysis the verifier uses.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::ontology::OntologyGraph;
use crate::protocol::{BranchId, ClassRef, ProtocolAst, Query, QueryId, Statement};
use crate::relstore::Database;
use crate::value::{EvalError, Value};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no query {0} in protocol")]
    UnknownQuery(QueryId),
    #[error("query {query}: {source}")]
    Eval {
        query: QueryId,
        #[source]
        source: EvalError,
    },
    #[error("branch {branch}: {source}", branch = .branch.0)]
    Guard {
        branch: BranchId,
        #[source]
        source: EvalError,
    },
    #[error("search exceeded {0} steps without reaching the target")]
    BoundExceeded(u64),
}

pub type Bindings = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum TraceStep {
    /// `answer` is `None` when the server had no answer.
    Answer {
        query: QueryId,
        answer: Option<Bindings>,
    },
    Branch {
        branch: BranchId,
        taken: bool,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    /// Every variable bound when the target is reached, `Null` for those of
    /// unanswered queries.
    pub bindings: Bindings,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Enumeration {
    pub traces: Vec<Trace>,
    /// The step budget ran out before the search finished.
    pub truncated: bool,
    pub steps: u64,
}

/// Resolves a class reference by walking the hierarchy directly.
fn resolve<'g>(graph: &'g OntologyGraph, cref: &ClassRef) -> Option<&'g str> {
    let mut names = cref.names().iter();
    let mut current = graph.find_match(names.next()?)?;
    for name in names {
        let next = graph.find_match(name)?;
        if !graph.is_subclass(&current.name, &next.name).ok()? {
            return None;
        }
        current = next;
    }
    Some(&current.name)
}

/// Rows of `class` and of every class below it, as attribute maps.
fn instances(db: &Database, class: &str) -> Vec<Bindings> {
    let graph = db.ontology();
    let mut out = Vec::new();
    for d in graph.descendants(class).expect("resolved class") {
        let Some(t) = db.table(&d.name) else { continue };
        let names = t.column_names();
        for row in t.rows() {
            out.push(
                names
                    .iter()
                    .map(|n| n.to_string())
                    .zip(row.iter().cloned())
                    .collect(),
            );
        }
    }
    out
}

/// Distinct answers of `q` given the values bound so far, over the
/// variables `q` introduces. A query the server cannot evaluate (a class
/// that does not resolve, or an attribute no class carries) has none.
pub fn answer_set(
    q: &Query,
    bound: &Bindings,
    db: &Database,
) -> Result<Vec<Bindings>, OracleError> {
    let graph = db.ontology();
    // per class ref: the attributes it carries and its instances
    let mut sources: Vec<(BTreeSet<String>, Vec<Bindings>)> = Vec::new();
    for cref in &q.class_refs {
        let Some(class) = resolve(graph, cref) else {
            return Ok(vec![]);
        };
        let props: BTreeSet<String> = graph
            .effective_properties(class)
            .expect("resolved class")
            .into_iter()
            .collect();
        sources.push((props, instances(db, class)));
    }
    for b in &q.bindings {
        if b.variable.is_some()
            && !sources
                .iter()
                .any(|(props, _)| props.contains(&b.attribute))
        {
            return Ok(vec![]);
        }
    }
    let fresh: Vec<&str> = {
        let mut v: Vec<&str> = Vec::new();
        for b in &q.bindings {
            if let Some(var) = b.variable.as_deref() {
                if !bound.contains_key(var) && !v.contains(&var) {
                    v.push(var);
                }
            }
        }
        v
    };

    let mut answers: BTreeSet<Vec<Value>> = BTreeSet::new();
    let mut picks = vec![0usize; sources.len()];
    if sources.iter().any(|(_, rows)| rows.is_empty()) {
        return Ok(vec![]);
    }
    loop {
        let mut cand: Bindings = Bindings::new();
        let mut ok = true;
        'refs: for (i, (props, rows)) in sources.iter().enumerate() {
            let row = &rows[picks[i]];
            for b in &q.bindings {
                let Some(var) = b.variable.as_deref() else {
                    continue;
                };
                if !props.contains(&b.attribute) {
                    continue;
                }
                let value = &row[&b.attribute];
                let prior = bound.get(var).or_else(|| cand.get(var));
                match prior {
                    Some(p) if !p.joins_with(value) => {
                        ok = false;
                        break 'refs;
                    }
                    Some(_) => {}
                    None => {
                        cand.insert(var.to_string(), value.clone());
                    }
                }
            }
        }
        if ok {
            let lookup = |v: &str| cand.get(v).or_else(|| bound.get(v));
            for c in &q.conditions {
                let holds = c.evaluate(&lookup).map_err(|source| OracleError::Eval {
                    query: q.id,
                    source,
                })?;
                if !holds {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            answers.insert(fresh.iter().map(|v| cand[*v].clone()).collect());
        }
        // next combination, odometer style
        let mut i = 0;
        loop {
            if i == picks.len() {
                return Ok(answers
                    .into_iter()
                    .map(|vals| fresh.iter().map(|v| v.to_string()).zip(vals).collect())
                    .collect());
            }
            picks[i] += 1;
            if picks[i] < sources[i].1.len() {
                break;
            }
            picks[i] = 0;
            i += 1;
        }
    }
}

struct Search<'a, F: FnMut(&Trace) -> bool> {
    db: &'a Database,
    target: QueryId,
    max_steps: u64,
    steps: u64,
    truncated: bool,
    /// Called on each reaching trace; returning `false` stops the search.
    on_trace: F,
    stopped: bool,
}

type Frames<'a> = Vec<(&'a [Statement], usize)>;

impl<'a, F: FnMut(&Trace) -> bool> Search<'a, F> {
    fn run(
        &mut self,
        mut frames: Frames<'_>,
        mut env: Bindings,
        trace: &mut Trace,
    ) -> Result<(), OracleError> {
        loop {
            if self.stopped {
                return Ok(());
            }
            self.steps += 1;
            if self.steps > self.max_steps {
                self.truncated = true;
                self.stopped = true;
                return Ok(());
            }
            let Some((block, pos)) = frames.last_mut() else {
                return Ok(());
            };
            let Some(stmt) = block.get(*pos) else {
                frames.pop();
                continue;
            };
            *pos += 1;
            match stmt {
                Statement::Action(_) => {}
                Statement::Branch(b) => {
                    let lookup = |v: &str| env.get(v);
                    let mut holds = true;
                    for c in &b.conditions {
                        if !c.evaluate(&lookup).map_err(|source| OracleError::Guard {
                            branch: b.id,
                            source,
                        })? {
                            holds = false;
                            break;
                        }
                    }
                    trace.steps.push(TraceStep::Branch {
                        branch: b.id,
                        taken: holds,
                    });
                    let enter = if holds {
                        Some(&b.then_block)
                    } else {
                        b.else_block.as_ref()
                    };
                    if let Some(block) = enter {
                        frames.push((block, 0));
                    }
                }
                Statement::Query(q) => {
                    if q.id == self.target {
                        trace.bindings = env;
                        let more = (self.on_trace)(trace);
                        trace.bindings = Bindings::new();
                        if !more {
                            self.stopped = true;
                        }
                        return Ok(());
                    }
                    let answers = answer_set(q, &env, self.db)?;
                    if answers.is_empty() {
                        for v in q.bound_variables() {
                            env.entry(v.to_string()).or_insert(Value::Null);
                        }
                        trace.steps.push(TraceStep::Answer {
                            query: q.id,
                            answer: None,
                        });
                        continue;
                    }
                    let mark = trace.steps.len();
                    for a in answers {
                        let mut env2 = env.clone();
                        env2.extend(a.iter().map(|(k, v)| (k.clone(), v.clone())));
                        trace.steps.push(TraceStep::Answer {
                            query: q.id,
                            answer: Some(a),
                        });
                        self.run(frames.clone(), env2, trace)?;
                        trace.steps.truncate(mark);
                        if self.stopped {
                            break;
                        }
                    }
                    return Ok(());
                }
            }
        }
    }
}

fn search<F: FnMut(&Trace) -> bool>(
    p: &ProtocolAst,
    db: &Database,
    target: QueryId,
    max_steps: u64,
    on_trace: F,
) -> Result<(u64, bool), OracleError> {
    if p.query(target).is_none() {
        return Err(OracleError::UnknownQuery(target));
    }
    let mut s = Search {
        db,
        target,
        max_steps,
        steps: 0,
        truncated: false,
        on_trace,
        stopped: false,
    };
    s.run(
        vec![(&p.statements, 0)],
        Bindings::new(),
        &mut Trace::default(),
    )?;
    Ok((s.steps, s.truncated))
}

/// Every trace, up to `max_traces`, that reaches `target`.
pub fn enumerate_reaching_traces(
    p: &ProtocolAst,
    db: &Database,
    target: QueryId,
    max_traces: usize,
) -> Result<Enumeration, OracleError> {
    let mut traces = Vec::new();
    let mut full = false;
    let (steps, truncated) = search(p, db, target, DEFAULT_MAX_STEPS, |t| {
        traces.push(t.clone());
        full = traces.len() >= max_traces;
        !full
    })?;
    Ok(Enumeration {
        traces,
        truncated: truncated || full,
        steps,
    })
}

/// Whether some run reaches `target`, and whether the search was cut short
/// before finding one.
pub fn reachability(
    p: &ProtocolAst,
    db: &Database,
    target: QueryId,
    max_steps: u64,
) -> Result<(bool, bool), OracleError> {
    let mut found = false;
    let (_, truncated) = search(p, db, target, max_steps, |_| {
        found = true;
        false
    })?;
    Ok((found, truncated && !found))
}

pub fn is_reachable(p: &ProtocolAst, db: &Database, target: QueryId) -> Result<bool, OracleError> {
    match reachability(p, db, target, DEFAULT_MAX_STEPS)? {
        (_, true) => Err(OracleError::BoundExceeded(DEFAULT_MAX_STEPS)),
        (found, false) => Ok(found),
    }
}

/// Whether some run reaches `target` binding every variable of `witness` to
/// its witnessed value (compared by identity, so `Null` matches `Null`).
pub fn reaches_with(
    p: &ProtocolAst,
    db: &Database,
    target: QueryId,
    witness: &Bindings,
) -> Result<bool, OracleError> {
    let mut found = false;
    let (_, truncated) = search(p, db, target, DEFAULT_MAX_STEPS, |t| {
        found = witness.iter().all(|(k, v)| t.bindings.get(k) == Some(v));
        !found
    })?;
    if truncated && !found {
        return Err(OracleError::BoundExceeded(DEFAULT_MAX_STEPS));
    }
    Ok(found)
}
