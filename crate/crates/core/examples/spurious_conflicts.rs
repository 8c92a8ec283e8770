//! Database-level verdicts for every fixture, in both guard modes.

use std::sync::Arc;

use ontocheck::consistency::check_consistency;
use ontocheck::ontology::load_ontology;
use ontocheck::protocol::parse_protocol;
use ontocheck::relstore::{load_database, Combine};
use ontocheck::spuriousness::verify_all;

fn main() -> anyhow::Result<()> {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    for (dir, proto, db) in [
        ("pub", "protocol1.pv", "db-spurious"),
        ("pub", "protocol1.pv", "db-realizable"),
        ("auto", "protocol2.pv", "db"),
        ("store", "protocol3.pv", "db"),
    ] {
        let g = Arc::new(load_ontology(format!("{root}/{dir}/server.json"))?);
        let p = parse_protocol(&std::fs::read_to_string(format!("{root}/{dir}/{proto}"))?)?;
        let db_ = load_database(format!("{root}/{dir}/{db}"), g.clone())?;
        let conflicts = check_consistency(&p, &g);
        for mode in [Combine::Conjunction, Combine::Disjunction] {
            println!("== {dir}/{db} ({mode:?})");
            print!("{}", verify_all(&p, &db_, &conflicts, mode)?.to_text());
        }
    }
    Ok(())
}
