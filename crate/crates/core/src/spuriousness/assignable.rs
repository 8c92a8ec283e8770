use std::collections::BTreeSet;

use super::VerifyError;
use crate::consistency::resolve_class_ref;
use crate::protocol::{ClassRef, PathCondition, Query};
use crate::relstore::{Column, Combine, Database, RelError, Relation, Row};
use crate::value::Value;

/// The extent of one class reference of `q`, with bound attributes renamed
/// to their variables and every other column dropped. An attribute bound to
/// the same variable twice keeps only rows where both cells join.
fn bound_extent(q: &Query, cref: &ClassRef, db: &Database) -> Result<Relation, VerifyError> {
    let graph = db.ontology();
    let node = resolve_class_ref(graph, cref).map_err(|_| VerifyError::Unanswerable(q.id))?;
    let props = graph
        .effective_properties(&node.name)
        .expect("resolved class");
    let extent = match db.class_extent(&node.name) {
        Ok(r) => Some(r),
        Err(RelError::NoExtent(_)) => None,
        Err(e) => return Err(e.into()),
    };

    // (variable, source column) pairs, variables in first-binding order
    let mut pairs: Vec<(&str, &str)> = Vec::new();
    let mut columns: Vec<Column> = Vec::new();
    for b in &q.bindings {
        let Some(var) = b.variable.as_deref() else {
            continue;
        };
        if !props.contains(&b.attribute) {
            continue;
        }
        pairs.push((var, &b.attribute));
        if !columns.iter().any(|c| c.name == var) {
            let tag = extent.as_ref().and_then(|e| {
                e.columns()[e.column_index(&b.attribute).expect("effective property")].tag
            });
            columns.push(Column {
                name: var.to_string(),
                tag,
            });
        }
    }
    let mut out = Relation::new(cref.to_string(), columns)?;
    let Some(extent) = extent else { return Ok(out) };
    let idx: Vec<usize> = pairs
        .iter()
        .map(|(_, attr)| extent.column_index(attr).expect("effective property"))
        .collect();
    'rows: for row in extent.rows() {
        let mut values: Vec<Option<&Value>> = vec![None; out.columns().len()];
        for ((var, _), &i) in pairs.iter().zip(&idx) {
            let slot = out.column_index(var).expect("column added above");
            match values[slot] {
                None => values[slot] = Some(&row[i]),
                Some(prev) if prev.joins_with(&row[i]) => {}
                Some(_) => continue 'rows,
            }
        }
        out.insert(
            values
                .into_iter()
                .map(|v| v.cloned().unwrap_or(Value::Null))
                .collect(),
        )?;
    }
    Ok(out)
}

/// Every value assignment for `q`'s variables that the server can produce,
/// given the assignments in `priors` for the variables `q` reads.
///
/// The extents of `q`'s classes and the prior tables are joined (`Null`
/// never joins), the where clause is applied, and the result is projected
/// onto `q`'s bound variables plus the prior columns.
pub fn generate_assignable_set(
    q: &Query,
    priors: &[Relation],
    db: &Database,
) -> Result<Relation, VerifyError> {
    let mut covered: BTreeSet<&str> = BTreeSet::new();
    let graph = db.ontology();
    let mut t = Relation::unit();
    for cref in &q.class_refs {
        let e = bound_extent(q, cref, db)?;
        let node = resolve_class_ref(graph, cref).map_err(|_| VerifyError::Unanswerable(q.id))?;
        let props = graph
            .effective_properties(&node.name)
            .expect("resolved class");
        for b in &q.bindings {
            if props.contains(&b.attribute) {
                covered.insert(&b.attribute);
            }
        }
        t = t.natural_join(&e)?;
    }
    if q.bindings
        .iter()
        .any(|b| b.variable.is_some() && !covered.contains(b.attribute.as_str()))
    {
        return Err(VerifyError::Unanswerable(q.id));
    }
    for prior in priors {
        t = t.natural_join(prior)?;
    }
    let t = t.select(&q.conditions, Combine::Conjunction)?;

    let mut keep: Vec<String> = Vec::new();
    for v in q.bound_variables() {
        keep.push(v.to_string());
    }
    for prior in priors {
        for c in prior.column_names() {
            if !keep.iter().any(|k| k == c) {
                keep.push(c.to_string());
            }
        }
    }
    Ok(t.project(&keep)?.renamed(format!("{}", q.id)))
}

/// `σ(δ)` over the relevant guards: all of them must hold in conjunction
/// mode; in disjunction mode their true-form conditions are flattened and
/// any one suffices.
pub fn split_assignable_set(
    delta: &Relation,
    guards: &[PathCondition],
    mode: Combine,
) -> Result<Relation, VerifyError> {
    if guards.is_empty() {
        return Ok(delta.clone());
    }
    for g in guards {
        for v in g.variables() {
            if !delta.has_column(v) {
                return Err(RelError::UnknownColumn(v.to_string()).into());
            }
        }
    }
    Ok(match mode {
        Combine::Conjunction => delta.filter(|rel, row| {
            let lookup = rel.lookup(row);
            for g in guards {
                if !g.evaluate(&lookup)? {
                    return Ok(false);
                }
            }
            Ok(true)
        })?,
        Combine::Disjunction => {
            let flat: Vec<_> = guards.iter().flat_map(PathCondition::true_form).collect();
            delta.select(&flat, Combine::Disjunction)?
        }
    })
}

/// `rel × {(Null, …, Null)}` over `vars`.
pub(crate) fn pad_with_nulls(rel: &Relation, vars: &[String]) -> Result<Relation, RelError> {
    let nulls = Relation::with_rows(
        "",
        vars.iter().map(Column::untyped).collect(),
        [vec![Value::Null; vars.len()]],
    )?;
    rel.natural_join(&nulls)
}

/// How a query's variables are assigned for each assignment of its inputs:
/// the assignable rows where the server has an answer, and `Null` for `keep`
/// where it has none. `priors` holds the input assignments; the result is
/// over `keep` plus the prior columns, sorted by name.
pub(crate) fn transition(
    q: &Query,
    priors: &Relation,
    keep: &[String],
    answerable: bool,
    db: &Database,
) -> Result<Relation, VerifyError> {
    let mut cols: Vec<String> = keep.to_vec();
    cols.extend(priors.column_names().into_iter().map(str::to_string));
    cols.sort();
    cols.dedup();

    let (matched, unmatched) = if answerable {
        let gas = generate_assignable_set(q, std::slice::from_ref(priors), db)?;
        let matched = gas.project(&cols)?;
        let seen = gas.project(&priors.column_names())?;
        (Some(matched), priors.antijoin(&seen)?)
    } else {
        (None, priors.clone())
    };
    let padded = pad_with_nulls(&unmatched, keep)?.project(&cols)?;
    let out = match matched {
        Some(m) => m.union(&padded)?,
        None => padded,
    };
    Ok(out.renamed(""))
}

/// A single-row relation holding `values` for `vars`, typed by the values.
pub(crate) fn singleton<'a>(
    vars: impl IntoIterator<Item = &'a String>,
    lookup: impl Fn(&str) -> Option<Value>,
) -> Result<Relation, VerifyError> {
    let mut cols = Vec::new();
    let mut row: Row = Vec::new();
    for v in vars {
        let value = lookup(v)
            .ok_or_else(|| VerifyError::InconsistentTrace(format!("no value for `{v}`")))?;
        cols.push(Column {
            name: v.clone(),
            tag: value.tag(),
        });
        row.push(value);
    }
    Ok(Relation::with_rows("", cols, [row])?)
}
