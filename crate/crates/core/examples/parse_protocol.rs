//! Parses a protocol, prints it back and lists its variables and guards.

use ontocheck::protocol::{
    classify_variables, parse_protocol, path_conditions, print_protocol, QueryId,
};

fn main() -> anyhow::Result<()> {
    let src = include_str!("../fixtures/store/protocol3.pv");
    let p = parse_protocol(src)?;
    print!("{}", print_protocol(&p));

    for ((q, var), occ) in classify_variables(&p) {
        println!("{q} {var}: {occ:?}");
    }
    for q in [QueryId(2), QueryId(3)] {
        let guards: Vec<String> = path_conditions(&p, q)?
            .iter()
            .map(|g| g.to_string())
            .collect();
        println!("reaching {q} needs {}", guards.join(" and "));
    }

    match parse_protocol("get (title: t) from Book where (t = );") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
