//! Hierarchy and property lookups on the publication server ontology.

use ontocheck::ontology::load_ontology;

fn main() -> anyhow::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/pub/server.json");
    let g = load_ontology(path)?;

    let names = |v: Vec<&ontocheck::ontology::ClassNode>| {
        v.iter().map(|c| c.name.clone()).collect::<Vec<_>>()
    };
    println!(
        "ancestors of Monograph: {:?}",
        names(g.ancestors("Monograph")?)
    );
    println!(
        "descendants of Entry:   {:?}",
        names(g.descendants("Entry")?)
    );
    println!("Book under Entry: {}", g.is_subclass("Entry", "Book")?);
    println!(
        "Proceedings under Book: {}",
        g.is_subclass("Book", "Proceedings")?
    );
    println!("Manual carries: {:?}", g.effective_properties("Manual")?);
    // aliases and case folding
    println!(
        "handbook -> {}",
        g.find_match("handbook").map_or("?", |c| &c.name)
    );
    Ok(())
}
