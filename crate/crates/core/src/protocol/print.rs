use std::fmt::Write;

use super::ast::*;

/// Canonical source text. Re-parsing it yields an identical AST.
pub fn print_protocol(p: &ProtocolAst) -> String {
    let mut out = String::new();
    block(&mut out, &p.statements, 0);
    out
}

fn block(out: &mut String, stmts: &[Statement], depth: usize) {
    for s in stmts {
        statement(out, s, depth);
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn statement(out: &mut String, s: &Statement, depth: usize) {
    indent(out, depth);
    match s {
        Statement::Query(q) => {
            out.push_str(&query_text(q));
            out.push('\n');
        }
        Statement::Branch(b) => {
            out.push_str("if ");
            out.push_str(&conditions(&b.conditions));
            out.push_str(" {\n");
            block(out, &b.then_block, depth + 1);
            indent(out, depth);
            out.push('}');
            if let Some(e) = &b.else_block {
                out.push_str(" else {\n");
                block(out, e, depth + 1);
                indent(out, depth);
                out.push('}');
            }
            out.push('\n');
        }
        Statement::Action(a) => {
            let args: Vec<String> = a.args.iter().map(|o| o.to_string()).collect();
            let _ = writeln!(out, "do {}({});", a.name, args.join(", "));
        }
    }
}

fn conditions(cs: &[Condition]) -> String {
    cs.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("")
}

/// One query on a single line, terminated by `;`.
pub fn query_text(q: &Query) -> String {
    let bindings: Vec<String> = q
        .bindings
        .iter()
        .map(|b| format!("{}: {}", b.attribute, b.variable.as_deref().unwrap_or("*")))
        .collect();
    let classes: Vec<String> = q.class_refs.iter().map(|c| c.to_string()).collect();
    let mut s = format!("get ({}) from {}", bindings.join(", "), classes.join(", "));
    if !q.conditions.is_empty() {
        s.push_str(" where ");
        s.push_str(&conditions(&q.conditions));
    }
    s.push(';');
    s
}
