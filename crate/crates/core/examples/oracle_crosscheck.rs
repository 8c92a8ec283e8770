//! Brute-force runs of a protocol next to the verifier's verdicts.

use std::sync::Arc;

use ontocheck::consistency::{check_consistency, conflicting_queries};
use ontocheck::ontology::load_ontology;
use ontocheck::oracle::{enumerate_reaching_traces, reaches_with};
use ontocheck::protocol::parse_protocol;
use ontocheck::relstore::{load_database, Combine};
use ontocheck::spuriousness::verify_all;

fn main() -> anyhow::Result<()> {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/store");
    let g = Arc::new(load_ontology(format!("{root}/server.json"))?);
    let p = parse_protocol(&std::fs::read_to_string(format!("{root}/protocol3.pv"))?)?;
    let db = load_database(format!("{root}/db"), g.clone())?;
    let conflicts = check_consistency(&p, &g);
    let report = verify_all(&p, &db, &conflicts, Combine::Conjunction)?;

    for q in conflicting_queries(&conflicts) {
        let runs = enumerate_reaching_traces(&p, &db, q, 5)?;
        let v = report.verdict(q).expect("verdict per conflict");
        println!(
            "{q}: verifier says {:?}, {} run(s) reach it",
            v.verdict,
            runs.traces.len()
        );
        for t in &runs.traces {
            println!("   {}", serde_json::to_string(&t.steps)?);
        }
        if let Some(w) = &v.witness {
            println!("   witness replays: {}", reaches_with(&p, &db, q, w)?);
        }
    }
    Ok(())
}
