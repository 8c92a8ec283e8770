//! In-memory relational store: typed relations with set semantics, the
//! algebra kernel (natural join, projection, selection) and a CSV-backed
//! database holding one table per non-abstract ontology class.

mod database;
mod relation;

use thiserror::Error;

pub use database::{class_extent, load_database, read_table, Database, Manifest};
pub use relation::{natural_join, project, select, Column, Combine, Relation, Row};

use crate::ontology::OntologyError;
use crate::value::{EvalError, Tag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelError {
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("row has {found} values, schema has {expected} columns")]
    Arity { expected: usize, found: usize },
    #[error("column `{column}` is {left} on one side and {right} on the other")]
    TagMismatch {
        column: String,
        left: Tag,
        right: Tag,
    },
    #[error("column `{column}` holds {expected}, got a {found} value")]
    ValueTag {
        column: String,
        expected: Tag,
        found: Tag,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("class `{0}` has no table at or below it")]
    NoExtent(String),
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("table `{class}` does not match the ontology (missing: [{}], extra: [{}])", missing.join(", "), extra.join(", "))]
    SchemaDrift {
        class: String,
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("`{0}` is abstract and cannot own a table")]
    AbstractTable(String),
    #[error("table `{0}` names no class of the ontology")]
    UnknownTable(String),
    #[error("no table for non-abstract class `{0}`")]
    MissingTable(String),
    #[error("two tables for class `{0}`")]
    DuplicateTable(String),
    #[error("{file}:{line}: column `{column}`: {message}")]
    Cell {
        file: String,
        line: usize,
        column: String,
        message: String,
    },
    #[error("property `{property}` of `{class}` is {first} in one table and {second} in another")]
    TagConflict {
        class: String,
        property: String,
        first: Tag,
        second: Tag,
    },
    #[error(transparent)]
    Relation(#[from] RelError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}
