//! Concept hierarchies and concept-level matching.
//!
//! An [`Ontology`] is a DAG of subsumption edges (parent → child) over named
//! concepts, plus symmetric equivalence links. Equivalent concepts are merged
//! into one class before the hierarchy is closed transitively, so every query
//! after loading is a couple of bitset lookups.
//!
//! Matching follows the "a super-concept can stand in for its sub-concepts"
//! reading: `match(n, m)` is
//!
//! * [`MatchValue::Exact`] when `n` and `m` are the same concept or linked by
//!   equivalence,
//! * [`MatchValue::PlugIn`] when `n` is a strict ancestor of `m`,
//! * [`MatchValue::Subsume`] when `n` is a strict descendant of `m`,
//! * [`MatchValue::Fail`] otherwise, including every cross-ontology pair.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("malformed ontology document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("ontology `{ontology}`: subsumption cycle through concept `{concept}`")]
    Cycle { ontology: String, concept: String },
    #[error("ontology `{ontology}`: {relation} references undeclared concept `{concept}`")]
    Dangling {
        ontology: String,
        relation: &'static str,
        concept: String,
    },
    #[error("ontology `{ontology}`: concept `{concept}` declared twice")]
    DuplicateConcept { ontology: String, concept: String },
    #[error("ontology `{0}` loaded twice")]
    DuplicateOntology(String),
    #[error("unknown ontology `{0}`")]
    UnknownOntology(String),
    #[error("concept `{name}` not found in ontology `{ontology}`")]
    UnknownConcept { ontology: String, name: String },
    #[error("invalid distance table: {0}")]
    InvalidDistances(String),
}

/// Outcome of comparing two concepts, operations or interfaces.
///
/// The derived ordering ranks matches best-first: `Exact < PlugIn < Subsume < Fail`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MatchValue {
    Exact,
    PlugIn,
    Subsume,
    Fail,
}

impl MatchValue {
    pub const ALL: [MatchValue; 4] = [
        MatchValue::Exact,
        MatchValue::PlugIn,
        MatchValue::Subsume,
        MatchValue::Fail,
    ];

    /// Value seen from the other side of the comparison.
    pub fn reversed(self) -> MatchValue {
        match self {
            MatchValue::PlugIn => MatchValue::Subsume,
            MatchValue::Subsume => MatchValue::PlugIn,
            other => other,
        }
    }

    pub fn is_substitutable(self) -> bool {
        matches!(self, MatchValue::Exact | MatchValue::PlugIn)
    }
}

impl fmt::Display for MatchValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MatchValue::Exact => "Exact",
            MatchValue::PlugIn => "PlugIn",
            MatchValue::Subsume => "Subsume",
            MatchValue::Fail => "Fail",
        };
        f.write_str(s)
    }
}

/// A concept named inside a specific ontology.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConceptRef {
    pub ontology: String,
    pub name: String,
}

impl ConceptRef {
    pub fn new(ontology: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            ontology: ontology.into(),
            name: name.into(),
        }
    }
}

impl fmt::Display for ConceptRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.ontology, self.name)
    }
}

/// Numeric distance assigned to each match value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    pub exact: f64,
    pub plug_in: f64,
    pub subsume: f64,
    pub fail: f64,
}

impl Default for DistanceTable {
    fn default() -> Self {
        Self {
            exact: 0.0,
            plug_in: 0.2,
            subsume: 0.8,
            fail: 1.0,
        }
    }
}

impl DistanceTable {
    /// Values must lie in `[0, 1]` and strictly increase from `exact` to `fail`.
    pub fn new(exact: f64, plug_in: f64, subsume: f64, fail: f64) -> Result<Self, OntologyError> {
        let table = Self {
            exact,
            plug_in,
            subsume,
            fail,
        };
        let values = [exact, plug_in, subsume, fail];
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(OntologyError::InvalidDistances(format!(
                "{values:?} leaves the unit interval"
            )));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OntologyError::InvalidDistances(format!(
                "{values:?} is not strictly increasing"
            )));
        }
        Ok(table)
    }

    pub fn of(&self, value: MatchValue) -> f64 {
        match value {
            MatchValue::Exact => self.exact,
            MatchValue::PlugIn => self.plug_in,
            MatchValue::Subsume => self.subsume,
            MatchValue::Fail => self.fail,
        }
    }
}

/// Anything that can resolve and compare concept references.
///
/// Implemented by a single [`Ontology`] and by an [`Ontologies`] collection;
/// the matching and QoS modules are generic over it.
pub trait ConceptMatcher {
    fn resolve(&self, concept: &ConceptRef) -> Result<(), OntologyError>;

    fn match_concepts(&self, n: &ConceptRef, m: &ConceptRef) -> Result<MatchValue, OntologyError>;

    fn distances(&self) -> &DistanceTable;

    fn concept_distance(&self, n: &ConceptRef, m: &ConceptRef) -> Result<f64, OntologyError> {
        Ok(self.distances().of(self.match_concepts(n, m)?))
    }
}

impl<T: ConceptMatcher + ?Sized> ConceptMatcher for &T {
    fn resolve(&self, concept: &ConceptRef) -> Result<(), OntologyError> {
        (**self).resolve(concept)
    }

    fn match_concepts(&self, n: &ConceptRef, m: &ConceptRef) -> Result<MatchValue, OntologyError> {
        (**self).match_concepts(n, m)
    }

    fn distances(&self) -> &DistanceTable {
        (**self).distances()
    }
}

/// Wire form of an ontology document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologyDocument {
    pub id: String,
    #[serde(default)]
    pub concepts: Vec<String>,
    #[serde(default)]
    pub subsumption: Vec<[String; 2]>,
    #[serde(default)]
    pub equivalences: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ClassSet {
    words: Vec<u64>,
}

impl ClassSet {
    fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
        }
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    fn union_with(&mut self, other: &ClassSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }
}

/// An immutable, validated concept hierarchy.
#[derive(Debug, Clone)]
pub struct Ontology {
    id: String,
    names: Vec<String>,
    index: HashMap<String, usize>,
    class_of: Vec<usize>,
    // strict descendants of each equivalence class
    descendants: Vec<ClassSet>,
    document: OntologyDocument,
    distances: DistanceTable,
}

impl Ontology {
    pub fn from_json(json: &str) -> Result<Self, OntologyError> {
        let doc: OntologyDocument = serde_json::from_str(json)?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: OntologyDocument) -> Result<Self, OntologyError> {
        let id = doc.id.clone();
        let mut index = HashMap::with_capacity(doc.concepts.len());
        for (i, name) in doc.concepts.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(OntologyError::DuplicateConcept {
                    ontology: id,
                    concept: name.clone(),
                });
            }
        }
        let lookup = |name: &str, relation: &'static str| {
            index.get(name).copied().ok_or_else(|| OntologyError::Dangling {
                ontology: id.clone(),
                relation,
                concept: name.to_string(),
            })
        };

        let n = doc.concepts.len();
        let mut uf = UnionFind::new(n);
        for [a, b] in &doc.equivalences {
            let (a, b) = (lookup(a, "equivalence")?, lookup(b, "equivalence")?);
            uf.union(a, b);
        }
        let mut edges = Vec::with_capacity(doc.subsumption.len());
        for [parent, child] in &doc.subsumption {
            edges.push((lookup(parent, "subsumption")?, lookup(child, "subsumption")?));
        }

        // dense class ids in first-seen order
        let mut class_ids = HashMap::new();
        let class_of: Vec<usize> = (0..n)
            .map(|i| {
                let root = uf.find(i);
                let next = class_ids.len();
                *class_ids.entry(root).or_insert(next)
            })
            .collect();
        let classes = class_ids.len();

        let mut children: Vec<Vec<usize>> = vec![Vec::new(); classes];
        let mut indegree = vec![0usize; classes];
        for &(p, c) in &edges {
            let (pc, cc) = (class_of[p], class_of[c]);
            if pc == cc {
                return Err(OntologyError::Cycle {
                    ontology: id,
                    concept: doc.concepts[p].clone(),
                });
            }
            children[pc].push(cc);
            indegree[cc] += 1;
        }

        // Kahn's algorithm; anything left over sits on a cycle.
        let mut order = Vec::with_capacity(classes);
        let mut queue: VecDeque<usize> = (0..classes).filter(|&c| indegree[c] == 0).collect();
        while let Some(c) = queue.pop_front() {
            order.push(c);
            for &child in &children[c] {
                indegree[child] -= 1;
                if indegree[child] == 0 {
                    queue.push_back(child);
                }
            }
        }
        if order.len() != classes {
            let stuck = (0..n)
                .find(|&i| indegree[class_of[i]] > 0)
                .expect("a class with remaining in-degree exists");
            return Err(OntologyError::Cycle {
                ontology: id,
                concept: doc.concepts[stuck].clone(),
            });
        }

        let mut descendants = vec![ClassSet::new(classes); classes];
        for &c in order.iter().rev() {
            let mut acc = ClassSet::new(classes);
            for &child in &children[c] {
                acc.insert(child);
                acc.union_with(&descendants[child]);
            }
            descendants[c] = acc;
        }

        Ok(Self {
            id,
            names: doc.concepts.clone(),
            index,
            class_of,
            descendants,
            document: doc,
            distances: DistanceTable::default(),
        })
    }

    pub fn with_distances(mut self, distances: DistanceTable) -> Self {
        self.distances = distances;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn document(&self) -> &OntologyDocument {
        &self.document
    }

    pub fn concept(&self, name: &str) -> ConceptRef {
        ConceptRef::new(self.id.clone(), name)
    }

    /// Concepts without sub-concepts (equivalents of a leaf are leaves too).
    pub fn leaves(&self) -> Vec<&str> {
        self.names
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.descendants[self.class_of[i]].words.iter().all(|w| *w == 0))
            .map(|(_, name)| name.as_str())
            .collect()
    }

    /// Match two concept names of this ontology.
    pub fn match_names(&self, n: &str, m: &str) -> Result<MatchValue, OntologyError> {
        let cn = self.class_of[self.position(n)?];
        let cm = self.class_of[self.position(m)?];
        Ok(if cn == cm {
            MatchValue::Exact
        } else if self.descendants[cn].contains(cm) {
            MatchValue::PlugIn
        } else if self.descendants[cm].contains(cn) {
            MatchValue::Subsume
        } else {
            MatchValue::Fail
        })
    }

    fn position(&self, name: &str) -> Result<usize, OntologyError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| OntologyError::UnknownConcept {
                ontology: self.id.clone(),
                name: name.to_string(),
            })
    }
}

impl ConceptMatcher for Ontology {
    fn resolve(&self, concept: &ConceptRef) -> Result<(), OntologyError> {
        if concept.ontology != self.id {
            return Err(OntologyError::UnknownOntology(concept.ontology.clone()));
        }
        self.position(&concept.name).map(|_| ())
    }

    fn match_concepts(&self, n: &ConceptRef, m: &ConceptRef) -> Result<MatchValue, OntologyError> {
        if n.ontology != m.ontology {
            return Ok(MatchValue::Fail);
        }
        self.resolve(n)?;
        self.match_names(&n.name, &m.name)
    }

    fn distances(&self) -> &DistanceTable {
        &self.distances
    }
}

/// A set of loaded ontologies, keyed by id, sharing one distance table.
#[derive(Debug, Clone, Default)]
pub struct Ontologies {
    by_id: BTreeMap<String, Ontology>,
    distances: DistanceTable,
}

impl Ontologies {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_distances(mut self, distances: DistanceTable) -> Self {
        self.distances = distances;
        self
    }

    pub fn try_from_iter(iter: impl IntoIterator<Item = Ontology>) -> Result<Self, OntologyError> {
        let mut set = Self::new();
        for o in iter {
            set.insert(o)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, ontology: Ontology) -> Result<(), OntologyError> {
        if self.by_id.contains_key(ontology.id()) {
            return Err(OntologyError::DuplicateOntology(ontology.id().to_string()));
        }
        self.by_id.insert(ontology.id().to_string(), ontology);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Ontology> {
        self.by_id.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Ontology> {
        self.by_id.values()
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    fn ontology(&self, id: &str) -> Result<&Ontology, OntologyError> {
        self.by_id
            .get(id)
            .ok_or_else(|| OntologyError::UnknownOntology(id.to_string()))
    }
}

impl ConceptMatcher for Ontologies {
    fn resolve(&self, concept: &ConceptRef) -> Result<(), OntologyError> {
        self.ontology(&concept.ontology)?.resolve(concept)
    }

    fn match_concepts(&self, n: &ConceptRef, m: &ConceptRef) -> Result<MatchValue, OntologyError> {
        self.resolve(n)?;
        self.resolve(m)?;
        if n.ontology != m.ontology {
            return Ok(MatchValue::Fail);
        }
        self.ontology(&n.ontology)?.match_names(&n.name, &m.name)
    }

    fn distances(&self) -> &DistanceTable {
        &self.distances
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb] = ra;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(concepts: &[&str], edges: &[(&str, &str)], eqs: &[(&str, &str)]) -> OntologyDocument {
        OntologyDocument {
            id: "t".into(),
            concepts: concepts.iter().map(|s| s.to_string()).collect(),
            subsumption: edges.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect(),
            equivalences: eqs.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect(),
        }
    }

    #[test]
    fn empty_ontology_loads() {
        let o = Ontology::from_json(r#"{"id":"empty","concepts":[],"subsumption":[],"equivalences":[]}"#).unwrap();
        assert!(o.is_empty());
        assert_eq!(o.id(), "empty");
    }

    #[test]
    fn two_cycle_is_rejected() {
        let err = Ontology::from_document(doc(&["a", "b"], &[("a", "b"), ("b", "a")], &[])).unwrap_err();
        assert!(matches!(err, OntologyError::Cycle { .. }), "{err}");
    }

    #[test]
    fn self_loop_is_rejected() {
        let err = Ontology::from_document(doc(&["a"], &[("a", "a")], &[])).unwrap_err();
        assert!(matches!(err, OntologyError::Cycle { .. }));
    }

    #[test]
    fn edge_between_equivalents_is_a_cycle() {
        let err = Ontology::from_document(doc(&["a", "b"], &[("a", "b")], &[("a", "b")])).unwrap_err();
        assert!(matches!(err, OntologyError::Cycle { .. }));
    }

    #[test]
    fn dangling_edge_is_rejected() {
        let err = Ontology::from_document(doc(&["a"], &[("a", "ghost")], &[])).unwrap_err();
        match err {
            OntologyError::Dangling { concept, .. } => assert_eq!(concept, "ghost"),
            other => panic!("unexpected {other}"),
        }
        let err = Ontology::from_document(doc(&["a"], &[], &[("a", "ghost")])).unwrap_err();
        assert!(matches!(
            err,
            OntologyError::Dangling {
                relation: "equivalence",
                ..
            }
        ));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            Ontology::from_json("{\"id\": 3}"),
            Err(OntologyError::Parse(_))
        ));
        assert!(matches!(
            Ontology::from_json(r#"{"id":"x","concepts":["a"],"extra":1}"#),
            Err(OntologyError::Parse(_))
        ));
    }

    #[test]
    fn duplicate_concept_is_rejected() {
        let err = Ontology::from_document(doc(&["a", "a"], &[], &[])).unwrap_err();
        assert!(matches!(err, OntologyError::DuplicateConcept { .. }));
    }

    #[test]
    fn diamond_reaches_through_both_parents() {
        let o = Ontology::from_document(doc(
            &["top", "l", "r", "bottom"],
            &[("top", "l"), ("top", "r"), ("l", "bottom"), ("r", "bottom")],
            &[],
        ))
        .unwrap();
        assert_eq!(o.match_names("top", "bottom").unwrap(), MatchValue::PlugIn);
        assert_eq!(o.match_names("bottom", "r").unwrap(), MatchValue::Subsume);
        assert_eq!(o.match_names("l", "r").unwrap(), MatchValue::Fail);
        assert_eq!(o.leaves(), vec!["bottom"]);
    }

    #[test]
    fn equivalence_is_exact_and_shares_the_hierarchy() {
        let o =
            Ontology::from_document(doc(&["a", "a2", "b", "c"], &[("a", "b"), ("c", "a2")], &[("a", "a2")])).unwrap();
        assert_eq!(o.match_names("a", "a2").unwrap(), MatchValue::Exact);
        assert_eq!(o.match_names("a2", "b").unwrap(), MatchValue::PlugIn);
        assert_eq!(o.match_names("c", "a").unwrap(), MatchValue::PlugIn);
        assert_eq!(o.match_names("b", "c").unwrap(), MatchValue::Subsume);
    }

    #[test]
    fn cross_ontology_pairs_fail_and_unknowns_error() {
        let mut set = Ontologies::new();
        set.insert(Ontology::from_document(doc(&["a"], &[], &[])).unwrap())
            .unwrap();
        let mut other = doc(&["a"], &[], &[]);
        other.id = "u".into();
        set.insert(Ontology::from_document(other).unwrap()).unwrap();
        let ta = ConceptRef::new("t", "a");
        let ua = ConceptRef::new("u", "a");
        assert_eq!(set.match_concepts(&ta, &ua).unwrap(), MatchValue::Fail);
        assert!(matches!(
            set.match_concepts(&ta, &ConceptRef::new("t", "zzz")),
            Err(OntologyError::UnknownConcept { .. })
        ));
        assert!(matches!(
            set.match_concepts(&ta, &ConceptRef::new("nope", "a")),
            Err(OntologyError::UnknownOntology(_))
        ));
        assert!(set
            .insert(Ontology::from_document(doc(&[], &[], &[])).unwrap())
            .is_err());
    }

    #[test]
    fn distance_table_validation() {
        assert!(DistanceTable::new(0.0, 0.1, 0.5, 1.0).is_ok());
        assert!(DistanceTable::new(0.0, 0.5, 0.5, 1.0).is_err());
        assert!(DistanceTable::new(0.0, 0.2, 0.8, 1.5).is_err());
        let t = DistanceTable::default();
        assert_eq!(MatchValue::ALL.map(|v| t.of(v)), [0.0, 0.2, 0.8, 1.0]);
    }

    #[test]
    fn reversed_swaps_plugin_and_subsume() {
        assert_eq!(MatchValue::PlugIn.reversed(), MatchValue::Subsume);
        assert_eq!(MatchValue::Exact.reversed(), MatchValue::Exact);
        assert!(MatchValue::Exact < MatchValue::PlugIn && MatchValue::Subsume < MatchValue::Fail);
    }
}
