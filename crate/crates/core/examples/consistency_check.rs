//! Ontology-level conflicts of the three fixture protocols.

use ontocheck::consistency::{check_consistency, explain_mismatch};
use ontocheck::ontology::load_ontology;
use ontocheck::protocol::parse_protocol;

fn main() -> anyhow::Result<()> {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    for (server, proto) in [
        ("pub/server.json", "pub/protocol1.pv"),
        ("auto/server.json", "auto/protocol2.pv"),
        ("store/server.json", "store/protocol3.pv"),
    ] {
        let g = load_ontology(format!("{root}/{server}"))?;
        let p = parse_protocol(&std::fs::read_to_string(format!("{root}/{proto}"))?)?;
        println!("== {proto}");
        for m in check_consistency(&p, &g) {
            println!("{}", serde_json::to_string(&m.to_json())?);
            println!("   {}", explain_mismatch(&m, &g)?.message);
        }
    }
    Ok(())
}
