use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::relation::{Column, Relation};
use super::{LoadError, RelError};
use crate::ontology::OntologyGraph;
use crate::value::Tag;

/// Column tags per class, as declared in `manifest.json`.
pub type Manifest = BTreeMap<String, BTreeMap<String, Tag>>;

/// One table per non-abstract class of the server ontology.
#[derive(Debug, Clone)]
pub struct Database {
    ontology: Arc<OntologyGraph>,
    tables: BTreeMap<String, Relation>,
    /// Tags of every class's effective properties, for classes with at least
    /// one table at or below them.
    class_tags: BTreeMap<String, Vec<Column>>,
}

impl Database {
    /// Validates `tables` against the ontology: exactly the non-abstract
    /// classes, each with columns equal to its effective properties, with
    /// one tag per inherited property across the hierarchy.
    pub fn new(ontology: Arc<OntologyGraph>, tables: Vec<Relation>) -> Result<Self, LoadError> {
        let mut by_class: BTreeMap<String, Relation> = BTreeMap::new();
        for t in tables {
            let node = ontology
                .find_match(t.name())
                .ok_or_else(|| LoadError::UnknownTable(t.name().to_string()))?;
            if node.is_abstract {
                return Err(LoadError::AbstractTable(node.name.clone()));
            }
            let props = ontology.effective_properties(&node.name)?;
            let have: BTreeSet<&str> = t.column_names().into_iter().collect();
            let want: BTreeSet<&str> = props.iter().map(String::as_str).collect();
            if have != want {
                return Err(LoadError::SchemaDrift {
                    class: node.name.clone(),
                    missing: want.difference(&have).map(|s| s.to_string()).collect(),
                    extra: have.difference(&want).map(|s| s.to_string()).collect(),
                });
            }
            if let Some(c) = t.columns().iter().find(|c| c.tag.is_none()) {
                return Err(LoadError::Manifest(format!(
                    "column `{}` of `{}` has no declared tag",
                    c.name, node.name
                )));
            }
            let t = t.project(&props)?.renamed(node.name.clone());
            if by_class.insert(node.name.clone(), t).is_some() {
                return Err(LoadError::DuplicateTable(node.name.clone()));
            }
        }
        for c in ontology.classes() {
            if !c.is_abstract && !by_class.contains_key(&c.name) {
                return Err(LoadError::MissingTable(c.name.clone()));
            }
        }

        let mut class_tags = BTreeMap::new();
        for c in ontology.classes() {
            let props = ontology.effective_properties(&c.name)?;
            let mut tags: BTreeMap<&str, Tag> = BTreeMap::new();
            let mut any = false;
            for d in ontology.descendants(&c.name)? {
                let Some(t) = by_class.get(&d.name) else {
                    continue;
                };
                any = true;
                for p in &props {
                    let tag = t.columns()[t.column_index(p).expect("validated")]
                        .tag
                        .expect("validated");
                    if let Some(prev) = tags.insert(p, tag) {
                        if prev != tag {
                            return Err(LoadError::TagConflict {
                                class: c.name.clone(),
                                property: p.clone(),
                                first: prev,
                                second: tag,
                            });
                        }
                    }
                }
            }
            if any {
                let cols = props
                    .iter()
                    .map(|p| Column::new(p.clone(), tags[p.as_str()]))
                    .collect();
                class_tags.insert(c.name.clone(), cols);
            }
        }
        Ok(Database {
            ontology,
            tables: by_class,
            class_tags,
        })
    }

    pub fn ontology(&self) -> &OntologyGraph {
        &self.ontology
    }

    pub fn shared_ontology(&self) -> Arc<OntologyGraph> {
        Arc::clone(&self.ontology)
    }

    pub fn table(&self, class: &str) -> Option<&Relation> {
        self.tables.get(class)
    }

    pub fn tables(&self) -> impl Iterator<Item = &Relation> {
        self.tables.values()
    }

    /// Declared tag of `property` as seen through `class`, when any table
    /// at or below the class carries it.
    pub fn tag_of(&self, class: &str, property: &str) -> Option<Tag> {
        self.class_tags
            .get(class)?
            .iter()
            .find(|c| c.name == property)
            .and_then(|c| c.tag)
    }

    /// A copy with one table replaced. The replacement is validated like any
    /// other table.
    pub fn with_table(&self, table: Relation) -> Result<Database, LoadError> {
        let mut tables: Vec<Relation> = self
            .tables
            .values()
            .filter(|t| t.name() != table.name())
            .cloned()
            .collect();
        tables.push(table);
        Database::new(Arc::clone(&self.ontology), tables)
    }

    /// The relation a query `from class` scans: the class's own table and
    /// those of all its non-abstract descendants, projected onto the class's
    /// effective properties.
    pub fn class_extent(&self, class: &str) -> Result<Relation, RelError> {
        let node = self
            .ontology
            .find_match(class)
            .ok_or_else(|| RelError::UnknownClass(class.to_string()))?;
        let columns = self
            .class_tags
            .get(&node.name)
            .ok_or_else(|| RelError::NoExtent(node.name.clone()))?;
        let names: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
        let mut out = Relation::new(node.name.clone(), columns.clone())?;
        for d in self.ontology.descendants(&node.name).expect("class exists") {
            if let Some(t) = self.tables.get(&d.name) {
                out = out.union(&t.project(&names)?)?;
            }
        }
        Ok(out)
    }
}

/// `class_extent(db, class)`.
pub fn class_extent(db: &Database, class: &str) -> Result<Relation, RelError> {
    db.class_extent(class)
}

/// Loads `manifest.json` and one `<Class>.csv` per non-abstract class from
/// `dir`. Files other than CSVs and the manifest are ignored.
pub fn load_database(
    dir: impl AsRef<Path>,
    ontology: Arc<OntologyGraph>,
) -> Result<Database, LoadError> {
    let dir = dir.as_ref();
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| LoadError::Io { path, source }
    };
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(io(&manifest_path))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| LoadError::Manifest(format!("{}: {e}", manifest_path.display())))?;

    let mut csvs: Vec<(String, std::path::PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(io(dir))? {
        let path = entry.map_err(io(dir))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("csv") {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            csvs.push((stem, path));
        }
    }
    csvs.sort();

    let mut tables = Vec::new();
    let mut seen = BTreeSet::new();
    for (stem, path) in &csvs {
        let node = ontology
            .find_match(stem)
            .ok_or_else(|| LoadError::UnknownTable(stem.clone()))?;
        if node.is_abstract {
            return Err(LoadError::AbstractTable(node.name.clone()));
        }
        let tags = manifest
            .get(&node.name)
            .or_else(|| manifest.get(stem))
            .ok_or_else(|| LoadError::Manifest(format!("no entry for `{}`", node.name)))?;
        seen.insert(node.name.clone());
        tables.push(read_table(path, &node.name, tags)?);
    }
    for class in manifest.keys() {
        let known = ontology.find_match(class).map(|n| n.name.clone());
        match known {
            Some(name) if seen.contains(&name) => {}
            Some(name) => return Err(LoadError::MissingTable(name)),
            None => return Err(LoadError::UnknownTable(class.clone())),
        }
    }
    Database::new(ontology, tables)
}

/// Reads one CSV file into a relation typed by `tags`.
pub fn read_table(
    path: &Path,
    class: &str,
    tags: &BTreeMap<String, Tag>,
) -> Result<Relation, LoadError> {
    let file = path.display().to_string();
    let csv_err = |source| LoadError::Csv {
        file: file.clone(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(csv_err)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns = Vec::with_capacity(header.len());
    for h in &header {
        let tag = tags.get(h).ok_or_else(|| LoadError::SchemaDrift {
            class: class.to_string(),
            missing: vec![],
            extra: vec![h.clone()],
        })?;
        columns.push(Column::new(h.clone(), *tag));
    }
    let mut rel = Relation::new(class, columns)?;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // header is line 1
        let line = i + 2;
        if record.len() != header.len() {
            return Err(LoadError::Cell {
                file: file.clone(),
                line,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(header.len());
        for (h, raw) in header.iter().zip(record.iter()) {
            let value = tags[h].parse_cell(raw).map_err(|message| LoadError::Cell {
                file: file.clone(),
                line,
                column: h.clone(),
                message,
            })?;
            row.push(value);
        }
        rel.insert(row)?;
    }
    Ok(rel)
}
