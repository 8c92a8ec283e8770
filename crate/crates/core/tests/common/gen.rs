//! Seeded random instances: a server ontology, a database over it and a
//! protocol with some queries the ontology cannot answer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ontocheck::consistency::{check_consistency, Mismatch};
use ontocheck::ontology::{ClassDocument, OntologyDocument, OntologyGraph};
use ontocheck::protocol::{parse_protocol, ProtocolAst};
use ontocheck::relstore::{Column, Database, Relation};
use ontocheck::value::{Tag, Value};

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_classes: usize,
    pub max_attributes: usize,
    pub max_rows: usize,
    pub max_queries: usize,
    pub max_branches: usize,
    /// No `!=`, no null literals, no null cells and no `else` blocks.
    pub positive: bool,
    /// Every conflict sits inside a `then` block.
    pub guarded_conflicts: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_classes: 4,
            max_attributes: 6,
            max_rows: 20,
            max_queries: 5,
            max_branches: 2,
            positive: false,
            guarded_conflicts: false,
        }
    }
}

pub struct Instance {
    pub seed: u64,
    pub document: OntologyDocument,
    pub ontology: Arc<OntologyGraph>,
    pub protocol: ProtocolAst,
    pub text: String,
    pub db: Database,
    pub conflicts: Vec<Mismatch>,
}

impl Instance {
    pub fn with_db(&self, db: Database) -> Instance {
        Instance {
            seed: self.seed,
            document: self.document.clone(),
            ontology: self.ontology.clone(),
            protocol: self.protocol.clone(),
            text: self.text.clone(),
            db,
            conflicts: self.conflicts.clone(),
        }
    }
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    shape: Shape,
    doc: &'a OntologyDocument,
    graph: &'a OntologyGraph,
    attributes: Vec<String>,
    queries: usize,
    branches: usize,
    fresh: usize,
    conflicts: usize,
    out: String,
}

const OPS: &[&str] = &["<", "<=", ">", ">=", "="];

fn ontology(rng: &mut ChaCha8Rng, shape: Shape) -> OntologyDocument {
    let n = rng.gen_range(2..=shape.max_classes);
    let mut classes: Vec<ClassDocument> = (0..n)
        .map(|i| ClassDocument {
            name: format!("C{i}"),
            ..Default::default()
        })
        .collect();
    for (i, c) in classes.iter_mut().enumerate().skip(1) {
        if rng.gen_bool(0.5) {
            let parent = rng.gen_range(0..i);
            c.superclasses.push(format!("C{parent}"));
        }
    }
    let parent_of = |classes: &[ClassDocument], i: usize| -> Option<usize> {
        classes[i]
            .superclasses
            .first()
            .map(|s| s[1..].parse().unwrap())
    };
    let lineage = |classes: &[ClassDocument], i: usize| -> Vec<usize> {
        let mut out = vec![i];
        let mut cur = i;
        while let Some(p) = parent_of(classes, cur) {
            out.push(p);
            cur = p;
        }
        out
    };
    let related = |classes: &[ClassDocument], a: usize, b: usize| {
        lineage(classes, a).contains(&b) || lineage(classes, b).contains(&a)
    };

    let roots: Vec<usize> = (0..n)
        .filter(|&i| parent_of(&classes, i).is_none())
        .collect();
    let m = rng.gen_range(roots.len().max(2)..=shape.max_attributes);
    for a in 0..m {
        let attr = format!("a{a}");
        let home = if a < roots.len() {
            roots[a]
        } else {
            rng.gen_range(0..n)
        };
        classes[home].data_properties.push(attr.clone());
        // the same name on an unrelated class, as with Brand on SaleStats and Vehicle
        if rng.gen_bool(0.2) {
            let other = rng.gen_range(0..n);
            let clash = (0..n)
                .any(|c| classes[c].data_properties.contains(&attr) && related(&classes, c, other));
            if !clash {
                classes[other].data_properties.push(attr);
            }
        }
    }
    let has_children: BTreeSet<usize> = (0..n).filter_map(|i| parent_of(&classes, i)).collect();
    for i in has_children {
        if rng.gen_bool(0.3) {
            classes[i].is_abstract = true;
        }
    }
    OntologyDocument {
        classes,
        aliases: BTreeMap::new(),
    }
}

fn database(rng: &mut ChaCha8Rng, shape: Shape, graph: Arc<OntologyGraph>) -> Database {
    let mut tables = Vec::new();
    for c in graph.classes() {
        if c.is_abstract {
            continue;
        }
        let props = graph.effective_properties(&c.name).unwrap();
        let cols: Vec<Column> = props
            .iter()
            .map(|p| Column::new(p.clone(), Tag::Int))
            .collect();
        let rows = rng.gen_range(0..=shape.max_rows);
        let mut r = Relation::new(c.name.clone(), cols).unwrap();
        for _ in 0..rows {
            let row = props
                .iter()
                .map(|_| {
                    if !shape.positive && rng.gen_bool(0.08) {
                        Value::Null
                    } else {
                        Value::Int(rng.gen_range(0..4))
                    }
                })
                .collect();
            r.insert(row).unwrap();
        }
        tables.push(r);
    }
    Database::new(graph, tables).unwrap()
}

impl Gen<'_> {
    fn var(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn op(&mut self) -> &'static str {
        if !self.shape.positive && self.rng.gen_bool(0.15) {
            "!="
        } else {
            OPS.choose(&mut self.rng).unwrap()
        }
    }

    fn literal(&mut self) -> String {
        self.rng.gen_range(0..4).to_string()
    }

    fn query(&mut self, scope: &mut Vec<String>, conflict: bool) {
        self.queries += 1;
        let names: Vec<String> = self.doc.classes.iter().map(|c| c.name.clone()).collect();
        let class = names.choose(&mut self.rng).unwrap().clone();
        let props = self.graph.effective_properties(&class).unwrap();
        let mut cref = class.clone();
        let mut attrs: Vec<String> = props.clone();
        attrs.shuffle(&mut self.rng);
        attrs.truncate(self.rng.gen_range(1..=3.min(props.len().max(1))));
        attrs.retain(|a| props.contains(a));

        let mut broken = false;
        if conflict {
            let foreign: Vec<&String> = self
                .attributes
                .iter()
                .filter(|a| !props.contains(a))
                .collect();
            let unrelated: Vec<&String> = names
                .iter()
                .filter(|n| **n != class && !self.graph.is_subclass(n, &class).unwrap())
                .collect();
            if self.rng.gen_bool(0.15) {
                // a class the server never heard of, alone or at the head of a sequence
                cref = if self.rng.gen_bool(0.5) {
                    "Ghost".to_string()
                } else {
                    format!("Ghost.{class}")
                };
                broken = true;
            } else if !foreign.is_empty() && (unrelated.is_empty() || self.rng.gen_bool(0.6)) {
                attrs.push(foreign.choose(&mut self.rng).unwrap().to_string());
                broken = true;
            } else if !unrelated.is_empty() {
                cref = format!("{}.{class}", unrelated.choose(&mut self.rng).unwrap());
                broken = true;
            }
        } else if self.rng.gen_bool(0.2) {
            let ancestors: Vec<String> = self
                .graph
                .ancestors(&class)
                .unwrap()
                .into_iter()
                .map(|c| c.name.clone())
                .filter(|c| *c != class)
                .collect();
            if let Some(a) = ancestors.choose(&mut self.rng) {
                cref = format!("{a}.{class}");
            }
        }
        if broken {
            self.conflicts += 1;
        }

        let mut vars: Vec<String> = Vec::new();
        let mut bindings = Vec::new();
        for a in &attrs {
            let reusable: Vec<&String> = scope.iter().filter(|v| !vars.contains(v)).collect();
            let v = if !reusable.is_empty() && self.rng.gen_bool(0.4) {
                reusable.choose(&mut self.rng).unwrap().to_string()
            } else {
                self.var()
            };
            bindings.push(format!("{a}: {v}"));
            vars.push(v);
        }
        let mut text = format!("get ({}) from {cref}", bindings.join(", "));
        if !vars.is_empty() && self.rng.gen_bool(0.4) {
            let lhs = vars.choose(&mut self.rng).unwrap().clone();
            let op = self.op();
            let rhs = if !scope.is_empty() && self.rng.gen_bool(0.3) {
                scope.choose(&mut self.rng).unwrap().clone()
            } else if !self.shape.positive && self.rng.gen_bool(0.05) {
                "null".to_string()
            } else {
                self.literal()
            };
            let _ = write!(text, " where ({lhs} {op} {rhs})");
        }
        let _ = writeln!(self.out, "{text};");
        for v in vars {
            if !scope.contains(&v) {
                scope.push(v);
            }
        }
    }

    fn block(&mut self, scope: &mut Vec<String>, depth: usize, min: usize) {
        let len = self.rng.gen_range(min..=3);
        for _ in 0..len {
            if self.queries >= self.shape.max_queries {
                return;
            }
            let roll: f64 = self.rng.gen();
            if roll < 0.3
                && self.branches < self.shape.max_branches
                && depth < 2
                && !scope.is_empty()
            {
                self.branch(scope, depth);
            } else if roll < 0.35 {
                let v = scope
                    .choose(&mut self.rng)
                    .cloned()
                    .unwrap_or_else(|| "1".into());
                let _ = writeln!(self.out, "do Act({v});");
            } else {
                let conflict = if self.shape.guarded_conflicts {
                    depth > 0 && self.rng.gen_bool(0.6)
                } else {
                    self.rng.gen_bool(0.3)
                };
                self.query(scope, conflict);
            }
        }
    }

    fn branch(&mut self, scope: &[String], depth: usize) {
        self.branches += 1;
        let lhs = scope.choose(&mut self.rng).unwrap().clone();
        let op = self.op();
        let rhs = self.literal();
        let _ = writeln!(self.out, "if ({lhs} {op} {rhs}) {{");
        let mut inner = scope.to_vec();
        self.block(&mut inner, depth + 1, 1);
        if !self.shape.positive && self.rng.gen_bool(0.5) {
            let _ = writeln!(self.out, "}} else {{");
            let mut inner = scope.to_vec();
            self.block(&mut inner, depth + 1, 1);
        }
        let _ = writeln!(self.out, "}}");
    }
}

/// A random instance with at least one conflicting query.
pub fn instance(seed: u64, shape: Shape) -> Instance {
    let mut attempt = 0u64;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(attempt));
        attempt += 1;
        let doc = ontology(&mut rng, shape);
        let graph = Arc::new(OntologyGraph::from_document(doc.clone()).unwrap());
        let attributes: BTreeSet<String> = doc
            .classes
            .iter()
            .flat_map(|c| c.data_properties.iter().cloned())
            .collect();
        let db = database(&mut rng, shape, graph.clone());
        let mut g = Gen {
            rng,
            shape,
            doc: &doc,
            graph: &graph,
            attributes: attributes.into_iter().collect(),
            queries: 0,
            branches: 0,
            fresh: 0,
            conflicts: 0,
            out: String::new(),
        };
        let mut scope = Vec::new();
        g.block(&mut scope, 0, 2);
        while g.queries < 2 {
            g.query(&mut scope, false);
        }
        if g.conflicts == 0 {
            continue;
        }
        let text = g.out;
        let protocol = parse_protocol(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        let conflicts = check_consistency(&protocol, &graph);
        if conflicts.is_empty() {
            continue;
        }
        return Instance {
            seed,
            document: doc,
            ontology: graph,
            protocol,
            text,
            db,
            conflicts,
        };
    }
}

/// A random relation over columns drawn from `c0..c3`, small int values.
pub fn relation(rng: &mut ChaCha8Rng) -> Relation {
    let mut names: Vec<&str> = vec!["c0", "c1", "c2", "c3"];
    names.shuffle(rng);
    names.truncate(rng.gen_range(0..=3));
    let cols: Vec<Column> = names.iter().map(|n| Column::new(*n, Tag::Int)).collect();
    let mut r = Relation::new("r", cols).unwrap();
    for _ in 0..rng.gen_range(0..6) {
        let row = names
            .iter()
            .map(|_| {
                if rng.gen_bool(0.1) {
                    Value::Null
                } else {
                    Value::Int(rng.gen_range(0..3))
                }
            })
            .collect();
        r.insert(row).unwrap();
    }
    r
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
