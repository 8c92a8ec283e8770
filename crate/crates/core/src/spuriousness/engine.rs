use std::collections::{BTreeMap, BTreeSet};

use super::assignable::{singleton, split_assignable_set, transition};
use super::deps::{make_sets, relevant_conditions, restrict_set, split_set, DependencyInfo};
use super::{ConflictVerdict, SpuriousnessReport, Verdict, VerifyError};
use crate::consistency::{conflicting_queries, Mismatch};
use crate::protocol::{path_conditions, ProtocolAst, ProtocolIndex, QueryId};
use crate::relstore::{Combine, Database, Relation};
use crate::value::Value;

pub type CacheKey = Vec<String>;

fn key_of(vars: &BTreeSet<String>) -> CacheKey {
    vars.iter().cloned().collect()
}

/// State of one verification run: the assignable-set cache, the keys being
/// computed, and in step mode the values already exchanged.
#[derive(Debug, Clone, Default)]
pub struct VerifyContext {
    pub mode: Combine,
    cache: BTreeMap<CacheKey, Relation>,
    in_flight: BTreeSet<CacheKey>,
    conflicting: BTreeSet<QueryId>,
    seeds: BTreeMap<String, Value>,
    executed: BTreeSet<QueryId>,
}

impl VerifyContext {
    pub fn new(mode: Combine, conflicts: &[Mismatch]) -> Self {
        VerifyContext {
            mode,
            conflicting: conflicting_queries(conflicts).into_iter().collect(),
            ..Default::default()
        }
    }

    /// Fixes the values of queries that have already been answered.
    pub fn seed(&mut self, executed: BTreeSet<QueryId>, values: BTreeMap<String, Value>) {
        self.executed = executed;
        self.seeds = values;
    }

    pub fn is_step(&self) -> bool {
        !self.executed.is_empty()
    }

    pub fn cache(&self) -> &BTreeMap<CacheKey, Relation> {
        &self.cache
    }

    pub fn conflicting(&self) -> &BTreeSet<QueryId> {
        &self.conflicting
    }
}

/// The assignable set of a group of variables introduced by one query,
/// joined with everything they depend on. Cached under the group's key.
///
/// Every input assignment has a continuation: when the server has no
/// answer the query's variables become `Null`, so a group relation is
/// empty only when the database leaves its inputs no assignment at all.
pub fn group_relation(
    group: &BTreeSet<String>,
    ctx: &mut VerifyContext,
    p: &ProtocolAst,
    db: &Database,
    dep: &DependencyInfo,
) -> Result<Relation, VerifyError> {
    let key = key_of(group);
    if let Some(r) = ctx.cache.get(&key) {
        return Ok(r.clone());
    }
    if !ctx.in_flight.insert(key.clone()) {
        return Err(VerifyError::DependencyCycle(key));
    }

    let restrict = restrict_set(dep, group);
    let sets = make_sets(dep, group)?;
    let [(qid, _)] = sets.as_slice() else {
        ctx.in_flight.remove(&key);
        return Err(VerifyError::MixedGroup(key));
    };
    let qid = *qid;

    let rel = if ctx.executed.contains(&qid) {
        let seeds = &ctx.seeds;
        let mut vars: Vec<&String> = group.iter().chain(&restrict).collect();
        vars.sort();
        singleton(vars, |v| seeds.get(v).cloned())?
    } else {
        let mut priors = Relation::unit();
        for (_, g) in make_sets(dep, &restrict)? {
            let r = group_relation(&g, ctx, p, db, dep)?;
            priors = priors.merge(&r)?;
        }
        let q = p.query(qid).ok_or(VerifyError::Protocol(
            crate::protocol::ProtocolError::UnknownQuery(qid),
        ))?;
        let keep: Vec<String> = group.iter().cloned().collect();
        transition(q, &priors, &keep, !ctx.conflicting.contains(&qid), db)?
    };

    ctx.in_flight.remove(&key);
    ctx.cache.insert(key, rel.clone());
    Ok(rel)
}

/// Variables whose values decide whether `conflict` is reached: those it
/// reads and those its path guards test.
pub fn conflict_variables(
    p: &ProtocolAst,
    conflict: QueryId,
) -> Result<BTreeSet<String>, VerifyError> {
    let index = ProtocolIndex::new(p);
    index.query(conflict)?;
    let mut v: BTreeSet<String> = index.inputs(conflict).iter().cloned().collect();
    for g in path_conditions(p, conflict)? {
        v.extend(g.variables().into_iter().map(str::to_string));
    }
    Ok(v)
}

/// Decides one conflicting query.
pub fn verify_conflict_detailed(
    conflict: QueryId,
    ctx: &mut VerifyContext,
    p: &ProtocolAst,
    db: &Database,
    dep: &DependencyInfo,
) -> Result<ConflictVerdict, VerifyError> {
    let v = conflict_variables(p, conflict)?;
    let mut scope = restrict_set(dep, &v);
    scope.extend(v.iter().cloned());

    let mut delta = Relation::unit();
    for (_, g) in make_sets(dep, &scope)? {
        let r = group_relation(&g, ctx, p, db, dep)?;
        delta = delta.merge(&r)?;
    }

    let guards = match ctx.mode {
        Combine::Conjunction => path_conditions(p, conflict)?,
        Combine::Disjunction => {
            let split = split_set(dep, p, &v, conflict)?;
            relevant_conditions(p, &split, conflict)?
        }
    };
    let delta = split_assignable_set(&delta, &guards, ctx.mode)?;

    let first = delta.rows().next().map(|row| delta.row_map(row));
    Ok(match first {
        Some(witness) => ConflictVerdict {
            query: conflict,
            verdict: Verdict::Realizable,
            witness: Some(witness),
            emptied_at: None,
            mode: ctx.mode,
            oracle: None,
        },
        None => ConflictVerdict {
            query: conflict,
            verdict: Verdict::Spurious,
            witness: None,
            emptied_at: Some(key_of(&v)),
            mode: ctx.mode,
            oracle: None,
        },
    })
}

/// `true` iff the conflict at `conflict` is reachable under some assignment
/// the database allows for the variables `v` it depends on.
pub fn verify_conflict(
    v: &BTreeSet<String>,
    conflict: QueryId,
    ctx: &mut VerifyContext,
    p: &ProtocolAst,
    db: &Database,
    dep: &DependencyInfo,
) -> Result<bool, VerifyError> {
    let expected = conflict_variables(p, conflict)?;
    if !v.is_subset(&expected) {
        let extra: Vec<String> = v.difference(&expected).cloned().collect();
        return Err(VerifyError::Protocol(
            crate::protocol::ProtocolError::UnknownVariable(extra.join(", ")),
        ));
    }
    Ok(verify_conflict_detailed(conflict, ctx, p, db, dep)?.verdict == Verdict::Realizable)
}

/// Verdicts for every distinct conflicting query, in protocol order.
pub fn verify_all(
    p: &ProtocolAst,
    db: &Database,
    conflicts: &[Mismatch],
    mode: Combine,
) -> Result<SpuriousnessReport, VerifyError> {
    let mut ctx = VerifyContext::new(mode, conflicts);
    verify_with(&mut ctx, p, db, &conflicting_queries(conflicts))
}

pub(crate) fn verify_with(
    ctx: &mut VerifyContext,
    p: &ProtocolAst,
    db: &Database,
    targets: &[QueryId],
) -> Result<SpuriousnessReport, VerifyError> {
    let dep = super::deps::constrain_relation(p);
    let mut verdicts = Vec::with_capacity(targets.len());
    for &q in targets {
        verdicts.push(verify_conflict_detailed(q, ctx, p, db, &dep)?);
    }
    Ok(SpuriousnessReport { verdicts })
}

/// Recomputes every cached relation from the cached relations of its
/// dependencies and returns the keys whose cached value differs, or whose
/// dependencies are missing from the cache.
pub fn incoherent_entries(
    ctx: &VerifyContext,
    p: &ProtocolAst,
    db: &Database,
) -> Result<Vec<CacheKey>, VerifyError> {
    let dep = super::deps::constrain_relation(p);
    let mut bad = Vec::new();
    'keys: for (key, cached) in &ctx.cache {
        let group: BTreeSet<String> = key.iter().cloned().collect();
        let qid = dep.instantiating_query(&key[0])?;
        let restrict = restrict_set(&dep, &group);
        let again = if ctx.executed.contains(&qid) {
            let mut vars: Vec<&String> = group.iter().chain(&restrict).collect();
            vars.sort();
            singleton(vars, |v| ctx.seeds.get(v).cloned())?
        } else {
            let mut priors = Relation::unit();
            for (_, g) in make_sets(&dep, &restrict)? {
                let Some(r) = ctx.cache.get(&key_of(&g)) else {
                    bad.push(key.clone());
                    continue 'keys;
                };
                priors = priors.merge(r)?;
            }
            let q = p.query(qid).expect("instantiating query exists");
            transition(q, &priors, key, !ctx.conflicting.contains(&qid), db)?
        };
        if again.canonical() != cached.canonical() {
            bad.push(key.clone());
        }
    }
    Ok(bad)
}
