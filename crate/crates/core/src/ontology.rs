//! Graph model of an ontology: classes with data-property lists, inheritance
//! edges forming a DAG, object-property edges, and an alias table used for
//! equivalence lookup.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("cannot read ontology {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed ontology document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid class name {0:?}")]
    InvalidName(String),
    #[error("duplicate class `{0}`")]
    DuplicateClass(String),
    #[error("class `{class}` lists data property `{property}` twice")]
    DuplicateProperty { class: String, property: String },
    #[error("{context} refers to unknown class `{target}`")]
    DanglingReference { context: String, target: String },
    #[error("alias `{0}` shadows a class name")]
    AliasShadowsClass(String),
    #[error("inheritance cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
}

pub type Result<T, E = OntologyError> = std::result::Result<T, E>;

/// One class of the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassNode {
    pub name: String,
    pub is_abstract: bool,
    /// Direct superclasses in declaration order.
    pub superclasses: Vec<String>,
    pub data_properties: Vec<String>,
    pub object_properties: BTreeMap<String, String>,
}

/// Immutable ontology graph. Built through [`OntologyGraph::from_document`]
/// or [`load_ontology`], both of which enforce the structural invariants.
#[derive(Debug, Clone)]
pub struct OntologyGraph {
    classes: BTreeMap<String, ClassNode>,
    /// Direct subclasses, in class-name order.
    children: BTreeMap<String, Vec<String>>,
    aliases: BTreeMap<String, String>,
    /// Lower-cased class and alias names to canonical names.
    folded: HashMap<String, String>,
}

// ------------------------------------------------------------------------------------------------
// Document format
// ------------------------------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologyDocument {
    #[serde(default)]
    pub classes: Vec<ClassDocument>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aliases: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ClassDocument {
    pub name: String,
    #[serde(default, rename = "abstract")]
    pub is_abstract: bool,
    #[serde(default)]
    pub superclasses: Vec<String>,
    #[serde(default)]
    pub data_properties: Vec<String>,
    #[serde(default)]
    pub object_properties: BTreeMap<String, String>,
}

/// Reads and validates an ontology document from disk.
pub fn load_ontology(path: impl AsRef<Path>) -> Result<OntologyGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| OntologyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    OntologyGraph::from_json(&text)
}

impl OntologyGraph {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: OntologyDocument = serde_json::from_str(text)?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: OntologyDocument) -> Result<Self> {
        let mut classes = BTreeMap::new();
        let mut folded = HashMap::new();
        for c in doc.classes {
            if !is_identifier(&c.name) {
                return Err(OntologyError::InvalidName(c.name));
            }
            if folded
                .insert(c.name.to_lowercase(), c.name.clone())
                .is_some()
            {
                return Err(OntologyError::DuplicateClass(c.name));
            }
            let mut seen = BTreeSet::new();
            for p in &c.data_properties {
                if !seen.insert(p) {
                    return Err(OntologyError::DuplicateProperty {
                        class: c.name.clone(),
                        property: p.clone(),
                    });
                }
            }
            classes.insert(
                c.name.clone(),
                ClassNode {
                    name: c.name,
                    is_abstract: c.is_abstract,
                    superclasses: c.superclasses,
                    data_properties: c.data_properties,
                    object_properties: c.object_properties,
                },
            );
        }

        let mut children: BTreeMap<String, Vec<String>> =
            classes.keys().map(|k| (k.clone(), Vec::new())).collect();
        for node in classes.values() {
            for sup in &node.superclasses {
                if !classes.contains_key(sup) {
                    return Err(OntologyError::DanglingReference {
                        context: format!("superclass of `{}`", node.name),
                        target: sup.clone(),
                    });
                }
                let kids = children.get_mut(sup).expect("checked above");
                if !kids.contains(&node.name) {
                    kids.push(node.name.clone());
                }
            }
            for (prop, target) in &node.object_properties {
                if !classes.contains_key(target) {
                    return Err(OntologyError::DanglingReference {
                        context: format!("object property `{}.{prop}`", node.name),
                        target: target.clone(),
                    });
                }
            }
        }
        for kids in children.values_mut() {
            kids.sort();
        }

        for (alias, target) in &doc.aliases {
            if !classes.contains_key(target) {
                return Err(OntologyError::DanglingReference {
                    context: format!("alias `{alias}`"),
                    target: target.clone(),
                });
            }
            if folded
                .insert(alias.to_lowercase(), target.clone())
                .is_some()
            {
                return Err(OntologyError::AliasShadowsClass(alias.clone()));
            }
        }

        let graph = OntologyGraph {
            classes,
            children,
            aliases: doc.aliases,
            folded,
        };
        if let Some(cycle) = graph.find_cycle() {
            return Err(OntologyError::Cycle(cycle));
        }
        Ok(graph)
    }

    pub fn to_document(&self) -> OntologyDocument {
        OntologyDocument {
            classes: self
                .classes
                .values()
                .map(|c| ClassDocument {
                    name: c.name.clone(),
                    is_abstract: c.is_abstract,
                    superclasses: c.superclasses.clone(),
                    data_properties: c.data_properties.clone(),
                    object_properties: c.object_properties.clone(),
                })
                .collect(),
            aliases: self.aliases.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document serializes")
    }

    /// Superclass-to-subclass walk looking for a back edge; returns the cycle
    /// with its first node repeated at the end.
    fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Fresh,
            Open,
            Done,
        }
        let mut marks: HashMap<&str, Mark> = self
            .classes
            .keys()
            .map(|k| (k.as_str(), Mark::Fresh))
            .collect();

        fn visit<'a>(
            g: &'a OntologyGraph,
            node: &'a str,
            marks: &mut HashMap<&'a str, Mark>,
            stack: &mut Vec<&'a str>,
        ) -> Option<Vec<String>> {
            marks.insert(node, Mark::Open);
            stack.push(node);
            for kid in &g.children[node] {
                match marks[kid.as_str()] {
                    Mark::Open => {
                        let start = stack.iter().position(|n| *n == kid).unwrap();
                        let mut cycle: Vec<String> =
                            stack[start..].iter().map(|s| s.to_string()).collect();
                        cycle.push(kid.clone());
                        return Some(cycle);
                    }
                    Mark::Fresh => {
                        if let Some(c) = visit(g, kid, marks, stack) {
                            return Some(c);
                        }
                    }
                    Mark::Done => {}
                }
            }
            stack.pop();
            marks.insert(node, Mark::Done);
            None
        }

        for name in self.classes.keys() {
            if marks[name.as_str()] == Mark::Fresh {
                let mut stack = Vec::new();
                if let Some(c) = visit(self, name, &mut marks, &mut stack) {
                    return Some(c);
                }
            }
        }
        None
    }

    // --------------------------------------------------------------------------------------------
    // Queries
    // --------------------------------------------------------------------------------------------

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassNode> {
        self.classes.values()
    }

    pub fn class(&self, canonical: &str) -> Option<&ClassNode> {
        self.classes.get(canonical)
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    /// All `(superclass, subclass)` pairs.
    pub fn inheritance_edges(&self) -> BTreeSet<(String, String)> {
        self.classes
            .values()
            .flat_map(|c| {
                c.superclasses
                    .iter()
                    .map(move |s| (s.clone(), c.name.clone()))
            })
            .collect()
    }

    /// All `(owner, property, target)` object-property edges.
    pub fn property_edges(&self) -> Vec<(String, String, String)> {
        self.classes
            .values()
            .flat_map(|c| {
                c.object_properties
                    .iter()
                    .map(move |(p, t)| (c.name.clone(), p.clone(), t.clone()))
            })
            .collect()
    }

    /// Equivalence lookup: case-insensitive class name, then alias.
    pub fn find_match(&self, name: &str) -> Option<&ClassNode> {
        self.folded
            .get(&name.to_lowercase())
            .and_then(|canonical| self.classes.get(canonical))
    }

    fn resolve(&self, name: &str) -> Result<&ClassNode> {
        self.find_match(name)
            .ok_or_else(|| OntologyError::UnknownClass(name.to_string()))
    }

    /// Reflexive-transitive subclass test.
    pub fn is_subclass(&self, ancestor: &str, descendant: &str) -> Result<bool> {
        let ancestor = &self.resolve(ancestor)?.name;
        let descendant = self.resolve(descendant)?;
        Ok(self
            .ancestors(&descendant.name)?
            .iter()
            .any(|a| &a.name == ancestor))
    }

    /// The class and every class above it, each once, nearest first.
    pub fn ancestors(&self, name: &str) -> Result<Vec<&ClassNode>> {
        let start = self.resolve(name)?;
        let mut out = vec![start];
        let mut seen: BTreeSet<&str> = BTreeSet::from([start.name.as_str()]);
        let mut i = 0;
        while i < out.len() {
            for sup in &out[i].superclasses {
                if seen.insert(sup) {
                    out.push(&self.classes[sup]);
                }
            }
            i += 1;
        }
        Ok(out)
    }

    /// The class and every class below it, each once, nearest first.
    pub fn descendants(&self, name: &str) -> Result<Vec<&ClassNode>> {
        let start = self.resolve(name)?;
        let mut out = vec![start];
        let mut seen: BTreeSet<&str> = BTreeSet::from([start.name.as_str()]);
        let mut i = 0;
        while i < out.len() {
            for kid in &self.children[&out[i].name] {
                if seen.insert(kid) {
                    out.push(&self.classes[kid]);
                }
            }
            i += 1;
        }
        Ok(out)
    }

    /// Own data properties plus those inherited from every ancestor.
    ///
    /// Ordered root-first: a class lists its superclasses' properties (in
    /// superclass declaration order) before its own. This order is the
    /// canonical column order of the class's table.
    pub fn effective_properties(&self, name: &str) -> Result<Vec<String>> {
        fn collect<'a>(
            g: &'a OntologyGraph,
            node: &'a ClassNode,
            visited: &mut BTreeSet<&'a str>,
            out: &mut Vec<String>,
        ) {
            if !visited.insert(&node.name) {
                return;
            }
            for sup in &node.superclasses {
                collect(g, &g.classes[sup], visited, out);
            }
            for p in &node.data_properties {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
        }
        let node = self.resolve(name)?;
        let mut out = Vec::new();
        collect(self, node, &mut BTreeSet::new(), &mut out);
        Ok(out)
    }

    /// Classes whose own property list contains `property`.
    pub fn classes_declaring(&self, property: &str) -> Vec<&ClassNode> {
        self.classes
            .values()
            .filter(|c| c.data_properties.iter().any(|p| p == property))
            .collect()
    }
}

/// Free-function form of [`OntologyGraph::find_match`].
pub fn find_match<'g>(graph: &'g OntologyGraph, class_name: &str) -> Option<&'g ClassNode> {
    graph.find_match(class_name)
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
