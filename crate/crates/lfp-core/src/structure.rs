//! Finite structures: explicit universe `{0..n-1}` plus named relations as
//! tuple sets, with a JSON storage format.
//!
//! File format:
//! ```json
//! {"name": "opt", "size": 3, "relations": {"S": [[0,1],[1,2]]},
//!  "arities": {"S": 2}}
//! ```
//! `name` and `arities` are optional; arities are inferred from the tuples
//! and only needed to declare an empty relation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signature::{valid_relation_name, Signature};

pub type Tuple = Vec<usize>;
pub type TupleSet = BTreeSet<Tuple>;

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("universe size must be >= 1")]
    EmptyUniverse,
    #[error("relation `{rel}`: tuple entry {entry} out of range for size {size}")]
    OutOfRange {
        rel: String,
        entry: usize,
        size: usize,
    },
    #[error("relation `{rel}`: mixed tuple arities {a} and {b}")]
    MixedArity { rel: String, a: usize, b: usize },
    #[error("relation `{rel}`: declared arity {declared} but tuples have arity {actual}")]
    ArityMismatch {
        rel: String,
        declared: usize,
        actual: usize,
    },
    #[error("relation `{rel}` is empty and has no declared arity")]
    UnknownArity { rel: String },
    #[error("invalid relation name `{0}` (expected `<` or an uppercase identifier)")]
    BadName(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed structure file: {0}")]
    Json(#[from] serde_json::Error),
}

/// A named relation: tuples stored sorted for deterministic iteration, with
/// a hash index for O(1) membership during evaluation.
#[derive(Debug, Clone)]
pub struct Relation {
    arity: usize,
    sorted: TupleSet,
    index: HashSet<Tuple>,
}

impl Relation {
    pub fn new(arity: usize, tuples: TupleSet) -> Self {
        let index = tuples.iter().cloned().collect();
        Relation {
            arity,
            sorted: tuples,
            index,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn contains(&self, tuple: &[usize]) -> bool {
        self.index.contains(tuple)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> {
        self.sorted.iter()
    }

    pub fn tuples(&self) -> &TupleSet {
        &self.sorted
    }
}

impl PartialEq for Relation {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity && self.sorted == other.sorted
    }
}
impl Eq for Relation {}

/// A finite structure over the universe `0..size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    name: String,
    size: usize,
    relations: BTreeMap<String, Relation>,
}

impl FiniteStructure {
    pub fn new(
        name: impl Into<String>,
        size: usize,
        relations: impl IntoIterator<Item = (String, usize, TupleSet)>,
    ) -> Result<Self, StructureError> {
        if size == 0 {
            return Err(StructureError::EmptyUniverse);
        }
        let mut rels = BTreeMap::new();
        for (rel, arity, tuples) in relations {
            if !valid_relation_name(&rel) {
                return Err(StructureError::BadName(rel));
            }
            for t in &tuples {
                if t.len() != arity {
                    return Err(StructureError::ArityMismatch {
                        rel,
                        declared: arity,
                        actual: t.len(),
                    });
                }
                if let Some(&entry) = t.iter().find(|&&e| e >= size) {
                    return Err(StructureError::OutOfRange { rel, entry, size });
                }
            }
            rels.insert(rel, Relation::new(arity, tuples));
        }
        Ok(FiniteStructure {
            name: name.into(),
            size,
            relations: rels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn universe(&self) -> impl Iterator<Item = usize> {
        0..self.size
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(n, r)| (n.as_str(), r))
    }

    pub fn holds(&self, rel: &str, tuple: &[usize]) -> bool {
        self.relations.get(rel).is_some_and(|r| r.contains(tuple))
    }

    /// The signature induced by this structure's relations.
    pub fn signature(&self) -> Signature {
        Signature::new(self.relations.iter().map(|(n, r)| (n.clone(), r.arity())))
            .expect("structure relations form a valid signature")
    }

    pub fn to_json(&self) -> String {
        let file = RawStructure {
            name: Some(self.name.clone()),
            size: self.size,
            relations: self
                .relations
                .iter()
                .map(|(n, r)| (n.clone(), r.iter().cloned().collect()))
                .collect(),
            arities: Some(
                self.relations
                    .iter()
                    .map(|(n, r)| (n.clone(), r.arity()))
                    .collect(),
            ),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("structure serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawStructure {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    size: usize,
    #[serde(default)]
    relations: BTreeMap<String, Vec<Tuple>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arities: Option<BTreeMap<String, usize>>,
}

/// Parse and validate a structure from JSON text.
pub fn structure_from_json(
    text: &str,
    default_name: &str,
) -> Result<FiniteStructure, StructureError> {
    let raw: RawStructure = serde_json::from_str(text)?;
    let arities = raw.arities.unwrap_or_default();
    let mut rels = Vec::new();
    for (name, tuples) in raw.relations {
        let arity = match (arities.get(&name), tuples.first()) {
            (Some(&a), _) => a,
            (None, Some(t)) => t.len(),
            (None, None) => return Err(StructureError::UnknownArity { rel: name }),
        };
        if let Some(bad) = tuples.iter().find(|t| t.len() != arity) {
            return Err(StructureError::MixedArity {
                rel: name,
                a: arity,
                b: bad.len(),
            });
        }
        rels.push((name, arity, tuples.into_iter().collect()));
    }
    let name = raw.name.unwrap_or_else(|| default_name.to_string());
    FiniteStructure::new(name, raw.size, rels)
}

/// Load a structure from a JSON file; the file stem is the default name.
pub fn load_structure(path: impl AsRef<Path>) -> Result<FiniteStructure, StructureError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "structure".to_string());
    structure_from_json(&text, &stem)
}

/// Disjoint union: the left structure keeps its element indices, the right
/// one is shifted by `|left|`. Fresh unary markers `L` and `R` label the two
/// sides. Colliding relation names (including collisions with the markers)
/// are disambiguated by suffixing `_r` on the right side, `_l` on the left.
pub fn disjoint_union(left: &FiniteStructure, right: &FiniteStructure) -> FiniteStructure {
    let size = left.size + right.size;
    let mut rels: Vec<(String, usize, TupleSet)> = Vec::new();
    let mut taken: BTreeSet<String> = ["L".to_string(), "R".to_string()].into();

    let claim = |base: &str, suffix: &str, taken: &mut BTreeSet<String>| {
        let mut name = base.to_string();
        while taken.contains(&name) {
            name.push_str(suffix);
        }
        taken.insert(name.clone());
        name
    };

    for (name, rel) in left.relations() {
        let name = claim(name, "_l", &mut taken);
        rels.push((name, rel.arity(), rel.tuples().clone()));
    }
    for (name, rel) in right.relations() {
        let name = claim(name, "_r", &mut taken);
        let shifted: TupleSet = rel
            .iter()
            .map(|t| t.iter().map(|&e| e + left.size).collect())
            .collect();
        rels.push((name, rel.arity(), shifted));
    }
    rels.push((
        "L".to_string(),
        1,
        (0..left.size).map(|i| vec![i]).collect(),
    ));
    rels.push((
        "R".to_string(),
        1,
        (left.size..size).map(|i| vec![i]).collect(),
    ));

    let name = format!("union({},{})", left.name, right.name);
    FiniteStructure::new(name, size, rels).expect("union of valid structures is valid")
}
