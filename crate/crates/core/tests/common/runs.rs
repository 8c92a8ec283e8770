//! Helpers that work straight off the ontology graph, the raw tables and
//! the brute-force answer sets.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;

use ontocheck::consistency::Mismatch;
use ontocheck::ontology::OntologyGraph;
use ontocheck::oracle::{answer_set, Bindings};
use ontocheck::protocol::{ProtocolAst, QueryId, Statement};
use ontocheck::relstore::{Database, Relation};
use ontocheck::value::Value;

/// Re-derives the defining condition of a mismatch from the graph alone.
pub fn audit(m: &Mismatch, p: &ProtocolAst, graph: &OntologyGraph) -> Result<(), String> {
    let resolve = |names: &[String]| -> Option<String> {
        let mut cur = graph.find_match(&names[0])?.name.clone();
        for n in &names[1..] {
            let next = graph.find_match(n)?.name.clone();
            if !graph.is_subclass(&cur, &next).ok()? {
                return None;
            }
            cur = next;
        }
        Some(cur)
    };
    match m {
        Mismatch::ClassNotFound { class, path, .. } => {
            if graph.find_match(class).is_some() {
                return Err(format!("{class} exists"));
            }
            if !path.names().iter().any(|n| n == class) {
                return Err(format!("{class} not on {path:?}"));
            }
        }
        Mismatch::SpecializationMismatch {
            path,
            index,
            class,
            parent,
            ..
        } => {
            let names = path.names();
            let Some(resolved_parent) = resolve(&names[..*index]) else {
                return Err("prefix does not resolve".into());
            };
            if &resolved_parent != parent {
                return Err(format!("parent {parent} vs {resolved_parent}"));
            }
            if let Some(c) = graph.find_match(class) {
                if graph.is_subclass(parent, &c.name).unwrap() {
                    return Err(format!("{} is under {parent}", c.name));
                }
            }
        }
        Mismatch::UnmatchedVariables {
            query, variables, ..
        } => {
            let q = p.query(*query).ok_or("no such query")?;
            let mut carried = BTreeSet::new();
            for c in &q.class_refs {
                let class = resolve(c.names()).ok_or("class ref does not resolve")?;
                // walk the ancestors by hand rather than trusting effective_properties
                let mut stack = vec![class];
                while let Some(c) = stack.pop() {
                    let node = graph.class(&c).unwrap();
                    carried.extend(node.data_properties.iter().cloned());
                    stack.extend(node.superclasses.iter().cloned());
                }
            }
            for v in variables {
                if carried.contains(&v.attribute) {
                    return Err(format!("{} is carried", v.attribute));
                }
                if !q.bindings.iter().any(|b| {
                    b.attribute == v.attribute && b.variable.as_deref() == Some(&v.variable)
                }) {
                    return Err(format!("{} not bound", v.attribute));
                }
            }
        }
    }
    Ok(())
}

fn contains(stmts: &[Statement], q: QueryId) -> bool {
    stmts.iter().any(|s| match s {
        Statement::Query(x) => x.id == q,
        Statement::Branch(b) => {
            contains(&b.then_block, q) || b.else_block.as_deref().is_some_and(|e| contains(e, q))
        }
        Statement::Action(_) => false,
    })
}

/// A run prefix, as trace entries, that decides some branch on the way to
/// `target` against it. Depth-first over the answer sets.
pub fn diverting_trace(
    p: &ProtocolAst,
    db: &Database,
    target: QueryId,
) -> Option<serde_json::Value> {
    fn go(
        db: &Database,
        target: QueryId,
        mut frames: Vec<(Vec<Statement>, usize)>,
        mut env: Bindings,
        mut out: Vec<serde_json::Value>,
        budget: &mut usize,
    ) -> Option<Vec<serde_json::Value>> {
        loop {
            *budget = budget.checked_sub(1)?;
            let (block, pos) = frames.last_mut()?;
            let Some(stmt) = block.get(*pos).cloned() else {
                frames.pop();
                continue;
            };
            *pos += 1;
            match stmt {
                Statement::Action(_) => {}
                Statement::Branch(b) => {
                    let holds = b
                        .conditions
                        .iter()
                        .all(|c| c.evaluate(&|v: &str| env.get(v)).unwrap());
                    out.push(json!({"branch": {"index": b.id.0, "taken": holds}}));
                    let in_then = contains(&b.then_block, target);
                    let in_else = b.else_block.as_deref().is_some_and(|e| contains(e, target));
                    if (in_then && !holds) || (in_else && holds) {
                        return Some(out);
                    }
                    let enter = if holds {
                        Some(b.then_block)
                    } else {
                        b.else_block
                    };
                    if let Some(block) = enter {
                        frames.push((block, 0));
                    }
                }
                Statement::Query(q) => {
                    if q.id == target {
                        return None;
                    }
                    let answers = answer_set(&q, &env, db).unwrap();
                    let fresh: Vec<&str> = {
                        let mut v = Vec::new();
                        for var in q.bound_variables() {
                            if !env.contains_key(var) && !v.contains(&var) {
                                v.push(var);
                            }
                        }
                        v
                    };
                    if answers.is_empty() {
                        for v in &fresh {
                            env.insert(v.to_string(), Value::Null);
                        }
                        out.push(json!({"queryId": q.id.0, "answer": null}));
                        continue;
                    }
                    for a in answers {
                        let mut env2 = env.clone();
                        let mut obj = serde_json::Map::new();
                        for (k, v) in &a {
                            obj.insert(k.clone(), v.to_json());
                            env2.insert(k.clone(), v.clone());
                        }
                        let mut out2 = out.clone();
                        out2.push(json!({"queryId": q.id.0, "answer": obj}));
                        if let Some(t) = go(db, target, frames.clone(), env2, out2, budget) {
                            return Some(t);
                        }
                    }
                    return None;
                }
            }
        }
    }
    let mut budget = 200_000;
    go(
        db,
        target,
        vec![(p.statements.clone(), 0)],
        BTreeMap::new(),
        Vec::new(),
        &mut budget,
    )
    .map(serde_json::Value::Array)
}

/// Queries inside branches.
pub fn guarded_queries(p: &ProtocolAst) -> Vec<QueryId> {
    let top: BTreeSet<QueryId> = p
        .statements
        .iter()
        .filter_map(|s| match s {
            Statement::Query(q) => Some(q.id),
            _ => None,
        })
        .collect();
    p.queries()
        .into_iter()
        .map(|q| q.id)
        .filter(|q| !top.contains(q))
        .collect()
}

/// The database with every table of `class`'s extent emptied.
pub fn empty_extent(db: &Database, class: &str) -> Database {
    let mut out = db.clone();
    for d in db.ontology().descendants(class).unwrap() {
        if let Some(t) = db.table(&d.name) {
            let empty = Relation::new(t.name(), t.columns().to_vec()).unwrap();
            out = out.with_table(empty).unwrap();
        }
    }
    out
}

/// The database without the rows of any table whose values agree with the
/// witness on every attribute a query binds to a witnessed variable.
pub fn without_supporting_rows(
    db: &Database,
    p: &ProtocolAst,
    witness: &BTreeMap<String, Value>,
) -> Database {
    let mut out = db.clone();
    for t in db.tables() {
        let mut keep = Relation::new(t.name(), t.columns().to_vec()).unwrap();
        for row in t.rows() {
            let cells = t.row_map(row);
            let supports = p.queries().iter().any(|q| {
                let mut hit = false;
                for b in &q.bindings {
                    let (Some(var), Some(cell)) = (b.variable.as_deref(), cells.get(&b.attribute))
                    else {
                        continue;
                    };
                    match witness.get(var) {
                        Some(w) if w == cell => hit = true,
                        Some(_) => return false,
                        None => {}
                    }
                }
                hit
            });
            if !supports {
                keep.insert(row.clone()).unwrap();
            }
        }
        out = out.with_table(keep).unwrap();
    }
    out
}
