//! Re-verifying a conflict while the conversation runs.

use std::sync::Arc;

use ontocheck::consistency::check_consistency;
use ontocheck::ontology::load_ontology;
use ontocheck::protocol::parse_protocol;
use ontocheck::relstore::{load_database, Combine};
use ontocheck::spuriousness::{parse_trace, step_verify};

fn main() -> anyhow::Result<()> {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/pub");
    let g = Arc::new(load_ontology(format!("{root}/server.json"))?);
    let p = parse_protocol(&std::fs::read_to_string(format!("{root}/protocol1.pv"))?)?;
    let db = load_database(format!("{root}/db-realizable"), g.clone())?;
    let conflicts = check_consistency(&p, &g);

    let steps = [
        ("before anything ran", "[]"),
        (
            "after the manual lookup",
            r#"[{"queryId": 1, "answer": {"t1": "ManualName", "a": "Carol", "d1": "2004-05-01"}}]"#,
        ),
        (
            "after no book was found",
            r#"[{"queryId": 1, "answer": {"t1": "ManualName", "a": "Carol", "d1": "2004-05-01"}},
                {"queryId": 2, "answer": null, "branch": {"index": 1, "taken": false}}]"#,
        ),
    ];
    for (label, trace) in steps {
        let report = step_verify(
            &p,
            &db,
            &conflicts,
            &parse_trace(trace)?,
            Combine::Conjunction,
        )?;
        println!("== {label}");
        if report.is_empty() {
            println!("no reachable conflict left");
        }
        print!("{}", report.to_text());
    }

    let bad = r#"[{"queryId": 1, "answer": {"t1": "Other", "a": "Carol", "d1": null}}]"#;
    if let Err(e) = step_verify(
        &p,
        &db,
        &conflicts,
        &parse_trace(bad)?,
        Combine::Conjunction,
    ) {
        println!("rejected: {e}");
    }
    Ok(())
}
