use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::RelError;
use crate::protocol::Condition;
use crate::value::{Tag, Value};

pub type Row = Vec<Value>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Column {
    pub name: String,
    /// `None` for columns that can only be typed by their values, such as
    /// the null padding of an unanswerable query.
    pub tag: Option<Tag>,
}

impl Column {
    pub fn new(name: impl Into<String>, tag: Tag) -> Self {
        Column {
            name: name.into(),
            tag: Some(tag),
        }
    }

    pub fn untyped(name: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            tag: None,
        }
    }
}

/// How a list of conditions is combined in a selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combine {
    #[default]
    Conjunction,
    Disjunction,
}

/// Treatment of `Null` in join columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NullMatch {
    /// Query semantics: `Null` joins nothing.
    Never,
    /// Value identity: `Null` joins `Null`. Used when merging relations
    /// whose shared columns hold the same variable's value.
    Identity,
}

/// A named relation with set semantics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    name: String,
    columns: Vec<Column>,
    rows: BTreeSet<Row>,
}

impl Relation {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self, RelError> {
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(RelError::DuplicateColumn(c.name.clone()));
            }
        }
        Ok(Relation {
            name: name.into(),
            columns,
            rows: BTreeSet::new(),
        })
    }

    /// The relation with no columns and a single empty row: the identity of
    /// natural join.
    pub fn unit() -> Self {
        Relation {
            name: String::new(),
            columns: Vec::new(),
            rows: BTreeSet::from([Vec::new()]),
        }
    }

    pub fn with_rows(
        name: impl Into<String>,
        columns: Vec<Column>,
        rows: impl IntoIterator<Item = Row>,
    ) -> Result<Self, RelError> {
        let mut r = Relation::new(name, columns)?;
        for row in rows {
            r.insert(row)?;
        }
        Ok(r)
    }

    /// Adds a row after checking arity and tags. Returns whether it was new.
    pub fn insert(&mut self, row: Row) -> Result<bool, RelError> {
        if row.len() != self.columns.len() {
            return Err(RelError::Arity {
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        for (col, v) in self.columns.iter().zip(&row) {
            if let (Some(tag), Some(vt)) = (col.tag, v.tag()) {
                if tag != vt {
                    return Err(RelError::ValueTag {
                        column: col.name.clone(),
                        expected: tag,
                        found: vt,
                    });
                }
            }
        }
        Ok(self.rows.insert(row))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    pub fn rows(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter()
    }

    pub fn contains(&self, row: &Row) -> bool {
        self.rows.contains(row)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column lookup for one row of this relation.
    pub fn lookup<'r>(&'r self, row: &'r Row) -> impl Fn(&str) -> Option<&'r Value> + 'r {
        move |name| self.column_index(name).map(|i| &row[i])
    }

    /// A row as a column-name map.
    pub fn row_map(&self, row: &Row) -> BTreeMap<String, Value> {
        self.columns
            .iter()
            .map(|c| c.name.clone())
            .zip(row.iter().cloned())
            .collect()
    }

    /// Renames columns; names absent from `mapping` are kept.
    pub fn rename_columns(&self, mapping: &BTreeMap<String, String>) -> Result<Relation, RelError> {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: mapping
                    .get(&c.name)
                    .cloned()
                    .unwrap_or_else(|| c.name.clone()),
                tag: c.tag,
            })
            .collect();
        let mut out = Relation::new(self.name.clone(), columns)?;
        out.rows = self.rows.clone();
        Ok(out)
    }

    pub fn project<S: AsRef<str>>(&self, cols: &[S]) -> Result<Relation, RelError> {
        let idx: Vec<usize> = cols
            .iter()
            .map(|c| {
                self.column_index(c.as_ref())
                    .ok_or_else(|| RelError::UnknownColumn(c.as_ref().to_string()))
            })
            .collect::<Result<_, _>>()?;
        let columns = idx.iter().map(|&i| self.columns[i].clone()).collect();
        let mut out = Relation::new(self.name.clone(), columns)?;
        out.rows = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
            .collect();
        Ok(out)
    }

    /// Keeps the rows for which `pred` holds.
    pub fn filter<F>(&self, mut pred: F) -> Result<Relation, RelError>
    where
        F: FnMut(&Relation, &Row) -> Result<bool, RelError>,
    {
        let mut out = Relation::new(self.name.clone(), self.columns.clone())?;
        for row in &self.rows {
            if pred(self, row)? {
                out.rows.insert(row.clone());
            }
        }
        Ok(out)
    }

    pub fn select(&self, conds: &[Condition], mode: Combine) -> Result<Relation, RelError> {
        for c in conds {
            for v in c.variables() {
                if !self.has_column(v) {
                    return Err(RelError::UnknownColumn(v.to_string()));
                }
            }
        }
        self.filter(|rel, row| {
            let lookup = rel.lookup(row);
            match mode {
                Combine::Conjunction => {
                    for c in conds {
                        if !c.evaluate(&lookup)? {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                }
                Combine::Disjunction => {
                    for c in conds {
                        if c.evaluate(&lookup)? {
                            return Ok(true);
                        }
                    }
                    Ok(false)
                }
            }
        })
    }

    pub fn natural_join(&self, other: &Relation) -> Result<Relation, RelError> {
        self.join(other, NullMatch::Never)
    }

    /// Natural join in which `Null` matches `Null`.
    pub fn merge(&self, other: &Relation) -> Result<Relation, RelError> {
        self.join(other, NullMatch::Identity)
    }

    fn join(&self, other: &Relation, nulls: NullMatch) -> Result<Relation, RelError> {
        let mut shared: Vec<(usize, usize)> = Vec::new();
        let mut columns = self.columns.clone();
        let mut extra: Vec<usize> = Vec::new();
        for (j, c) in other.columns.iter().enumerate() {
            match self.column_index(&c.name) {
                Some(i) => {
                    let left = &self.columns[i];
                    let tag = match (left.tag, c.tag) {
                        (Some(a), Some(b)) if a != b => {
                            return Err(RelError::TagMismatch {
                                column: c.name.clone(),
                                left: a,
                                right: b,
                            })
                        }
                        (a, b) => a.or(b),
                    };
                    columns[i].tag = tag;
                    shared.push((i, j));
                }
                None => {
                    columns.push(c.clone());
                    extra.push(j);
                }
            }
        }
        let name = if self.name.is_empty() {
            other.name.clone()
        } else if other.name.is_empty() {
            self.name.clone()
        } else {
            format!("{}*{}", self.name, other.name)
        };
        let mut out = Relation::new(name, columns)?;

        let keyed = |row: &Row, pick: &dyn Fn(&(usize, usize)) -> usize| -> Option<Vec<Value>> {
            let key: Vec<Value> = shared.iter().map(|p| row[pick(p)].clone()).collect();
            if nulls == NullMatch::Never && key.iter().any(Value::is_null) {
                None
            } else {
                Some(key)
            }
        };
        let mut index: HashMap<Vec<Value>, Vec<&Row>> = HashMap::new();
        for r in &other.rows {
            if let Some(k) = keyed(r, &|p| p.1) {
                index.entry(k).or_default().push(r);
            }
        }
        for l in &self.rows {
            let Some(k) = keyed(l, &|p| p.0) else {
                continue;
            };
            if let Some(matches) = index.get(&k) {
                for r in matches {
                    let mut row = l.clone();
                    row.extend(extra.iter().map(|&j| r[j].clone()));
                    out.rows.insert(row);
                }
            }
        }
        Ok(out)
    }

    /// Set union; `other` must have the same column names, in any order.
    pub fn union(&self, other: &Relation) -> Result<Relation, RelError> {
        if self.columns.len() != other.columns.len() {
            return Err(RelError::Arity {
                expected: self.columns.len(),
                found: other.columns.len(),
            });
        }
        let aligned = other.project(&self.column_names())?;
        let mut out = self.clone();
        for (c, o) in out.columns.iter_mut().zip(aligned.columns.iter()) {
            c.tag = match (c.tag, o.tag) {
                (Some(a), Some(b)) if a != b => {
                    return Err(RelError::TagMismatch {
                        column: c.name.clone(),
                        left: a,
                        right: b,
                    })
                }
                (a, b) => a.or(b),
            };
        }
        out.rows.extend(aligned.rows);
        Ok(out)
    }

    /// Rows of `self` whose projection onto `other`'s columns (compared by
    /// value identity) does not occur in `other`.
    pub fn antijoin(&self, other: &Relation) -> Result<Relation, RelError> {
        let cols = other.column_names();
        let idx: Vec<usize> = cols
            .iter()
            .map(|c| {
                self.column_index(c)
                    .ok_or_else(|| RelError::UnknownColumn(c.to_string()))
            })
            .collect::<Result<_, _>>()?;
        self.filter(|_, row| {
            let key: Row = idx.iter().map(|&i| row[i].clone()).collect();
            Ok(!other.rows.contains(&key))
        })
    }

    /// Columns sorted by name, rows permuted to match. Two relations that
    /// differ only in column order have equal canonical forms.
    pub fn canonical(&self) -> Relation {
        let mut names: Vec<&str> = self.column_names();
        names.sort_unstable();
        self.project(&names).expect("own columns").renamed("")
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}({})", self.name, self.column_names().join(", "))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(f, "  ({})", cells.join(", "))?;
        }
        Ok(())
    }
}

/// `r1 ⋈ r2`: rows agreeing on every shared column; `Null` never matches.
pub fn natural_join(r1: &Relation, r2: &Relation) -> Result<Relation, RelError> {
    r1.natural_join(r2)
}

/// `π_cols(r)` with duplicate elimination.
pub fn project<S: AsRef<str>>(r: &Relation, cols: &[S]) -> Result<Relation, RelError> {
    r.project(cols)
}

/// `σ(r)` over a list of conditions combined by `mode`.
pub fn select(r: &Relation, conds: &[Condition], mode: Combine) -> Result<Relation, RelError> {
    r.select(conds, mode)
}
