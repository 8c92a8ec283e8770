//! Randomized and mutation checks shared by the integration tests and the
//! acceptance target. Each returns what it covered and what went wrong.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use ontocheck::consistency::{
    check_consistency, conflicting_queries, resolve_class_ref, Mismatch, MismatchKind,
};
use ontocheck::ontology::{OntologyDocument, OntologyGraph};
use ontocheck::oracle::{is_reachable, reaches_with};
use ontocheck::protocol::{path_conditions, Condition, Operand, ProtocolAst, QueryId};
use ontocheck::relstore::Combine;
use ontocheck::spuriousness::{
    constrain_relation, make_sets, parse_trace, restrict_set, step_verify, verify_all, Verdict,
};
use ontocheck::value::{CmpOp, Value};

use super::gen::{self, instance, Shape};
use super::runs::{audit, diverting_trace, empty_extent, guarded_queries, without_supporting_rows};

#[derive(Debug, Default)]
pub struct Outcome {
    pub cases: usize,
    pub failures: Vec<String>,
    /// Every mismatch seen, with the protocol and ontology it came from.
    pub mismatches: Vec<(Mismatch, ProtocolAst, OntologyDocument)>,
}

impl Outcome {
    pub fn fail(&mut self, msg: String) {
        if self.failures.len() < 20 {
            self.failures.push(msg);
        } else if self.failures.len() == 20 {
            self.failures.push("...".into());
        }
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Verdicts of verify_all against brute-force reachability, witness replay
/// included. Counts conflicting queries.
pub fn oracle_agreement(seeds: std::ops::Range<u64>) -> Outcome {
    let mut out = Outcome::default();
    for seed in seeds {
        let inst = instance(seed, Shape::default());
        for m in &inst.conflicts {
            out.mismatches
                .push((m.clone(), inst.protocol.clone(), inst.document.clone()));
        }
        let report = match verify_all(
            &inst.protocol,
            &inst.db,
            &inst.conflicts,
            Combine::Conjunction,
        ) {
            Ok(r) => r,
            Err(e) => {
                out.fail(format!("seed {seed}: {e}"));
                continue;
            }
        };
        for q in conflicting_queries(&inst.conflicts) {
            out.cases += 1;
            let v = report.verdict(q).expect("every conflict has a verdict");
            let reachable = is_reachable(&inst.protocol, &inst.db, q).unwrap();
            if (v.verdict == Verdict::Realizable) != reachable {
                out.fail(format!(
                    "seed {seed} {q}: {:?}, oracle reachable={reachable}",
                    v.verdict
                ));
            }
            if let Some(w) = &v.witness {
                if !reaches_with(&inst.protocol, &inst.db, q, w).unwrap() {
                    out.fail(format!("seed {seed} {q}: witness does not replay"));
                }
            }
        }
    }
    out
}

/// Empty traces reproduce verify_all byte for byte; traces deciding a branch
/// against a conflict drop it. Counts instances.
pub fn step_consistency(seeds: std::ops::Range<u64>) -> (Outcome, usize) {
    let shape = Shape {
        guarded_conflicts: true,
        ..Shape::default()
    };
    let mut out = Outcome::default();
    let mut diverted = 0;
    for seed in seeds {
        out.cases += 1;
        let inst = instance(seed, shape);
        for mode in [Combine::Conjunction, Combine::Disjunction] {
            let a =
                verify_all(&inst.protocol, &inst.db, &inst.conflicts, mode).map(|r| r.to_json());
            let b = step_verify(&inst.protocol, &inst.db, &inst.conflicts, &[], mode)
                .map(|r| r.to_json());
            if a != b {
                out.fail(format!("seed {seed}: empty trace differs from verify_all"));
            }
        }
        let conflicting = conflicting_queries(&inst.conflicts);
        for q in guarded_queries(&inst.protocol) {
            if !conflicting.contains(&q) {
                continue;
            }
            let Some(trace) = diverting_trace(&inst.protocol, &inst.db, q) else {
                continue;
            };
            diverted += 1;
            let trace = parse_trace(&trace.to_string()).unwrap();
            match step_verify(
                &inst.protocol,
                &inst.db,
                &inst.conflicts,
                &trace,
                Combine::Conjunction,
            ) {
                Ok(r) if r.verdict(q).is_some() => {
                    out.fail(format!("seed {seed}: {q} survives its branch"))
                }
                Ok(r) => {
                    // when it was the only conflict, nothing is left
                    if conflicting.len() == 1 && !r.is_empty() {
                        out.fail(format!("seed {seed}: report not empty"));
                    }
                }
                Err(e) => out.fail(format!("seed {seed}: {e}")),
            }
        }
    }
    (out, diverted)
}

fn guard_chain(p: &ProtocolAst, conflict: QueryId) -> Vec<QueryId> {
    let dep = constrain_relation(p);
    let vars: BTreeSet<String> = path_conditions(p, conflict)
        .unwrap()
        .iter()
        .flat_map(|g| {
            g.variables()
                .into_iter()
                .map(str::to_string)
                .collect::<Vec<_>>()
        })
        .collect();
    let mut scope = restrict_set(&dep, &vars);
    scope.extend(vars);
    make_sets(&dep, &scope)
        .unwrap()
        .into_iter()
        .map(|(q, _)| q)
        .collect()
}

/// On realizable instances of the positive fragment: dropping the rows that
/// support the witness never turns a spurious verdict realizable, and
/// emptying any extent on the guard chain makes the conflict spurious.
/// Returns the outcome (cases = realizable instances) and the number of
/// extents emptied.
pub fn monotonicity(seeds: impl Iterator<Item = u64>, wanted: usize) -> (Outcome, usize) {
    let shape = Shape {
        positive: true,
        guarded_conflicts: true,
        ..Shape::default()
    };
    let mut out = Outcome::default();
    let mut emptied = 0;
    for seed in seeds {
        if out.cases >= wanted {
            break;
        }
        let inst = instance(seed, shape);
        let (p, db) = (&inst.protocol, &inst.db);
        let before = verify_all(p, db, &inst.conflicts, Combine::Conjunction).unwrap();
        let Some(v) = before
            .realizable()
            .find(|v| !path_conditions(p, v.query).unwrap().is_empty())
        else {
            continue;
        };
        out.cases += 1;

        let smaller = without_supporting_rows(db, p, v.witness.as_ref().unwrap());
        let after = verify_all(p, &smaller, &inst.conflicts, Combine::Conjunction).unwrap();
        for (b, a) in before.verdicts.iter().zip(&after.verdicts) {
            if b.verdict == Verdict::Spurious && a.verdict == Verdict::Realizable {
                out.fail(format!(
                    "seed {seed}: {} flipped spurious -> realizable",
                    a.query
                ));
            }
            if (a.verdict == Verdict::Realizable) != is_reachable(p, &smaller, a.query).unwrap() {
                out.fail(format!(
                    "seed {seed}: {} disagrees with the oracle after deletion",
                    a.query
                ));
            }
        }

        for qid in guard_chain(p, v.query) {
            for c in &p.query(qid).unwrap().class_refs {
                let Ok(node) = resolve_class_ref(&inst.ontology, c) else {
                    continue;
                };
                emptied += 1;
                let db2 = empty_extent(db, &node.name);
                let r = verify_all(p, &db2, &inst.conflicts, Combine::Conjunction).unwrap();
                if r.verdict(v.query).unwrap().verdict != Verdict::Spurious {
                    out.fail(format!(
                        "seed {seed}: emptying {} leaves {} realizable",
                        node.name, v.query
                    ));
                }
            }
        }
    }
    (out, emptied)
}

/// A single change to a server ontology and the mismatch it must cause.
#[derive(Debug, Clone)]
pub struct Mutation {
    pub label: String,
    pub document: OntologyDocument,
    pub query: QueryId,
    pub kind: MismatchKind,
    pub attribute: Option<String>,
}

/// Deletions of inheritance edges a query relies on, and relocations of a
/// queried attribute to a class off the query's path. Queries whose classes
/// do not resolve, and attributes already uncovered, are left alone.
pub fn mutations(p: &ProtocolAst, server: &OntologyGraph) -> Vec<Mutation> {
    let doc = server.to_document();
    let baseline = check_consistency(p, server);
    let unmatched: BTreeSet<(QueryId, &str)> = baseline
        .iter()
        .flat_map(|m| match m {
            Mismatch::UnmatchedVariables {
                query, variables, ..
            } => variables
                .iter()
                .map(|v| (*query, v.attribute.as_str()))
                .collect(),
            _ => Vec::new(),
        })
        .collect();
    let mut out = Vec::new();
    for q in p.queries() {
        if q.class_refs
            .iter()
            .any(|c| resolve_class_ref(server, c).is_err())
        {
            continue;
        }
        let resolved: Vec<String> = q
            .class_refs
            .iter()
            .map(|c| resolve_class_ref(server, c).unwrap().name.clone())
            .collect();
        // lineage of each resolved class, child first
        let lineage = |class: &str| -> Vec<String> {
            let mut v = vec![class.to_string()];
            v.extend(
                server
                    .ancestors(class)
                    .unwrap()
                    .into_iter()
                    .map(|c| c.name.clone()),
            );
            v.dedup();
            v
        };

        for cref in &q.class_refs {
            let names = cref.names();
            for w in names.windows(2) {
                let (sup, sub) = (
                    &server.find_match(&w[0]).unwrap().name,
                    &server.find_match(&w[1]).unwrap().name,
                );
                // every edge between sub and sup; dropping one breaks the sequence
                // when it is the only route
                let mut cur = sub.clone();
                while &cur != sup {
                    let node = server.class(&cur).unwrap();
                    let [parent] = node.superclasses.as_slice() else {
                        break;
                    };
                    let mut d = doc.clone();
                    let c = d.classes.iter_mut().find(|c| c.name == cur).unwrap();
                    c.superclasses.clear();
                    out.push(Mutation {
                        label: format!(
                            "{}: drop {cur} -> {parent} under {}",
                            q.id,
                            names.join(".")
                        ),
                        document: d,
                        query: q.id,
                        kind: MismatchKind::SpecializationMismatch,
                        attribute: None,
                    });
                    cur = parent.clone();
                }
            }
        }

        for b in &q.bindings {
            if b.variable.is_none() || unmatched.contains(&(q.id, b.attribute.as_str())) {
                continue;
            }
            let a = &b.attribute;
            let path: BTreeSet<String> = resolved.iter().flat_map(|c| lineage(c)).collect();
            let declaring: Vec<&String> = path
                .iter()
                .filter(|c| server.class(c).unwrap().data_properties.contains(a))
                .collect();
            // inherited attribute: dropping the edge below its declaring class
            if declaring.len() == 1 && resolved.len() == 1 && q.class_refs[0].names().len() == 1 {
                let owner = declaring[0];
                let chain = lineage(&resolved[0]);
                if chain.len() > 1 && &chain[0] != owner {
                    let mut d = doc.clone();
                    let c = d.classes.iter_mut().find(|c| c.name == chain[0]).unwrap();
                    if c.superclasses.len() == 1 {
                        c.superclasses.clear();
                        out.push(Mutation {
                            label: format!("{}: drop {} -> {} ({a})", q.id, chain[0], chain[1]),
                            document: d,
                            query: q.id,
                            kind: MismatchKind::UnmatchedVariables,
                            attribute: Some(a.clone()),
                        });
                    }
                }
            }
            // relocation to every class off the path; one that already
            // declares it just keeps its own copy
            for target in server.classes() {
                if path.contains(&target.name) {
                    continue;
                }
                let mut d = doc.clone();
                for c in d.classes.iter_mut() {
                    if declaring.contains(&&c.name) {
                        c.data_properties.retain(|x| x != a);
                    }
                }
                let t = d
                    .classes
                    .iter_mut()
                    .find(|c| c.name == target.name)
                    .unwrap();
                if !t.data_properties.contains(a) {
                    t.data_properties.push(a.clone());
                }
                // a descendant of the target may sit on the path again
                let g = OntologyGraph::from_document(d.clone()).unwrap();
                if resolved
                    .iter()
                    .any(|c| g.effective_properties(c).unwrap().contains(a))
                {
                    continue;
                }
                out.push(Mutation {
                    label: format!("{}: move {a} to {}", q.id, target.name),
                    document: d,
                    query: q.id,
                    kind: MismatchKind::UnmatchedVariables,
                    attribute: Some(a.clone()),
                });
            }
        }
    }
    out
}

/// Runs every mutation of a fixture protocol; cases = mutations.
pub fn mutation_detection(p: &ProtocolAst, server: &OntologyGraph) -> Outcome {
    let mut out = Outcome::default();
    for m in mutations(p, server) {
        out.cases += 1;
        let g = match OntologyGraph::from_document(m.document.clone()) {
            Ok(g) => g,
            Err(e) => {
                out.fail(format!("{}: {e}", m.label));
                continue;
            }
        };
        let found = check_consistency(p, &g);
        let hit = found.iter().any(|x| {
            x.query() == m.query
                && x.kind() == m.kind
                && match (&m.attribute, x) {
                    (Some(a), Mismatch::UnmatchedVariables { variables, .. }) => {
                        variables.iter().any(|v| &v.attribute == a)
                    }
                    _ => true,
                }
        });
        if !hit {
            out.fail(format!("{}: not detected", m.label));
        }
        for x in found {
            out.mismatches.push((x, p.clone(), m.document.clone()));
        }
    }
    out
}

/// Re-derives every collected mismatch from its graph.
pub fn soundness(mismatches: &[(Mismatch, ProtocolAst, OntologyDocument)]) -> Outcome {
    let mut out = Outcome::default();
    for (m, p, d) in mismatches {
        out.cases += 1;
        let g = OntologyGraph::from_document(d.clone()).unwrap();
        if let Err(e) = audit(m, p, &g) {
            out.fail(format!("{} {:?}: {e}", m.query(), m.kind()));
        }
    }
    out
}

fn condition(rng: &mut impl Rng, col: &str) -> Condition {
    let ops = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
    ];
    Condition::new(
        Operand::Var(col.to_string()),
        *ops.choose(rng).unwrap(),
        Operand::Literal(Value::Int(rng.gen_range(0..3))),
    )
}

/// Join commutativity and associativity up to column order, projection
/// idempotence and selection fusion; cases = relations drawn.
pub fn algebra_laws(seed: u64, triples: usize) -> Outcome {
    let mut rng = gen::rng(seed);
    let mut out = Outcome::default();
    for i in 0..triples {
        let (r, s, t) = (
            gen::relation(&mut rng),
            gen::relation(&mut rng),
            gen::relation(&mut rng),
        );
        out.cases += 3;
        let rs = r.natural_join(&s).unwrap();
        if rs.canonical() != s.natural_join(&r).unwrap().canonical() {
            out.fail(format!("#{i}: join not commutative\n{r}\n{s}"));
        }
        let left = rs.natural_join(&t).unwrap();
        let right = r.natural_join(&s.natural_join(&t).unwrap()).unwrap();
        if left.canonical() != right.canonical() {
            out.fail(format!("#{i}: join not associative"));
        }
        let mut cols: Vec<&str> = r.column_names();
        cols.shuffle(&mut rng);
        cols.truncate(rng.gen_range(0..=cols.len()));
        let once = r.project(&cols).unwrap();
        if once.project(&cols).unwrap() != once {
            out.fail(format!("#{i}: projection not idempotent"));
        }
        let sub: Vec<&str> = cols.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if once.project(&sub).unwrap() != r.project(&sub).unwrap() {
            out.fail(format!("#{i}: projections do not compose"));
        }
        if let Some(&c) = r.column_names().choose(&mut rng) {
            let c1 = condition(&mut rng, c);
            let other = r.column_names().choose(&mut rng).unwrap().to_string();
            let c2 = condition(&mut rng, &other);
            let fused = r
                .select(&[c1.clone(), c2.clone()], Combine::Conjunction)
                .unwrap();
            let chained = r
                .select(&[c1], Combine::Conjunction)
                .unwrap()
                .select(&[c2], Combine::Conjunction)
                .unwrap();
            if fused != chained {
                out.fail(format!("#{i}: selections do not fuse"));
            }
        }
    }
    out
}
