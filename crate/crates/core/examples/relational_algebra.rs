//! The relational operators on small hand-built relations and a class extent.

use std::sync::Arc;

use ontocheck::ontology::load_ontology;
use ontocheck::protocol::{Condition, Operand};
use ontocheck::relstore::{load_database, Column, Combine, Relation};
use ontocheck::value::{CmpOp, Tag, Value};

fn main() -> anyhow::Result<()> {
    let s = |v: &str| Value::str(v);
    let authors = Relation::with_rows(
        "authors",
        vec![Column::new("a", Tag::Str), Column::new("city", Tag::Str)],
        [
            vec![s("Bob"), s("Oslo")],
            vec![s("Carol"), s("Lima")],
            vec![Value::Null, s("Rome")],
        ],
    )?;
    let books = Relation::with_rows(
        "books",
        vec![Column::new("t", Tag::Str), Column::new("a", Tag::Str)],
        [
            vec![s("Lattices"), s("Bob")],
            vec![s("Untitled"), Value::Null],
        ],
    )?;

    // Null never joins under query semantics, but merges with Null by identity
    println!("{}", authors.natural_join(&books)?);
    println!("{}", authors.merge(&books)?);
    println!("{}", authors.antijoin(&books.project(&["a"])?)?);

    let oslo = Condition::new(
        Operand::Var("city".into()),
        CmpOp::Eq,
        Operand::Literal(s("Oslo")),
    );
    let lima = Condition::new(
        Operand::Var("city".into()),
        CmpOp::Eq,
        Operand::Literal(s("Lima")),
    );
    println!("{}", authors.select(&[oslo, lima], Combine::Disjunction)?);

    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/pub");
    let g = Arc::new(load_ontology(format!("{root}/server.json"))?);
    let db = load_database(format!("{root}/db-realizable"), g)?;
    println!("{}", db.class_extent("Book")?);
    Ok(())
}
