use std::path::PathBuf;
use std::sync::Arc;

use ontocheck::ontology::{load_ontology, OntologyGraph};
use ontocheck::protocol::{parse_protocol, ProtocolAst};
use ontocheck::relstore::{load_database, Database};

pub fn path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
}

pub fn ontology(rel: &str) -> Arc<OntologyGraph> {
    Arc::new(load_ontology(path(rel)).unwrap())
}

pub fn protocol(rel: &str) -> ProtocolAst {
    parse_protocol(&std::fs::read_to_string(path(rel)).unwrap()).unwrap()
}

pub fn database(rel: &str, server: &str) -> Database {
    load_database(path(rel), ontology(server)).unwrap()
}

/// (domain, server ontology, client ontology, protocol, databases)
pub const DOMAINS: &[(&str, &str, &str, &str, &[&str])] = &[
    (
        "pub",
        "pub/server.json",
        "pub/client.json",
        "pub/protocol1.pv",
        &["pub/db-spurious", "pub/db-realizable"],
    ),
    (
        "auto",
        "auto/server.json",
        "auto/client.json",
        "auto/protocol2.pv",
        &["auto/db"],
    ),
    (
        "store",
        "store/server.json",
        "store/client.json",
        "store/protocol3.pv",
        &["store/db"],
    ),
];
