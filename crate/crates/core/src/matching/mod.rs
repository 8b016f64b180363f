//! Semantic matching of operations and interfaces.
//!
//! Operation matching compares the operation concept, the output and the
//! inputs paired by a bijection. The class of one pairing is its worst item;
//! the class of the match is the best class over all pairings, ties broken by
//! the smallest weighted concept distance. Interfaces are matched the same way
//! one level up, with operation matches as the items.
//!
//! Direction matters everywhere: `match_operations(a, b) == PlugIn` means `a`
//! is the more general of the two and can stand in for `b`.

pub mod assignment;

use thiserror::Error;

use crate::model::{Interface, Operation};
use crate::ontology::{ConceptMatcher, ConceptRef, MatchValue};
use assignment::{best_injection, Cell};

pub use assignment::MAX_ENUM;

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("expected {expected} weights, got {got}")]
    WeightArity { expected: usize, got: usize },
    #[error("weights must sum to 1, got {0}")]
    WeightSum(f64),
    #[error("weights must be finite and non-negative")]
    NegativeWeight,
    #[error("operations are not comparable: {0}")]
    NotComparable(String),
    #[error("unknown operation `{0}` in subset")]
    UnknownOperation(String),
    #[error("operation `{0}` listed twice in subset")]
    DuplicateOperation(String),
}

/// Non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, MatchError> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(MatchError::NegativeWeight);
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(MatchError::WeightSum(sum));
        }
        Ok(Self(weights))
    }

    /// `1/n` each. An empty vector stays empty.
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n.max(1) as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Item weights for an operation with `inputs` inputs, ordered
    /// (concept, output, inputs...).
    pub fn for_operation(inputs: usize) -> Self {
        Self::uniform(2 + inputs)
    }
}

/// Bijection between the inputs of two operations, as `(i, j)` index pairs
/// sorted by `i`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InputPairing {
    pub pairs: Vec<(usize, usize)>,
}

impl InputPairing {
    fn from_columns(columns: &[usize]) -> Self {
        Self {
            pairs: columns.iter().copied().enumerate().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemMatches {
    pub concept: MatchValue,
    pub output: MatchValue,
    /// Per input of the first operation, under the chosen pairing.
    pub inputs: Vec<MatchValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperationMatch {
    pub value: MatchValue,
    /// `None` when the operations are not comparable.
    pub pairing: Option<InputPairing>,
    pub per_item: ItemMatches,
    /// Weighted concept distance under the chosen pairing.
    pub distance: f64,
    /// Unresolved references, each of which was scored as `Fail`.
    pub warnings: Vec<String>,
}

impl OperationMatch {
    pub fn is_comparable(&self) -> bool {
        self.pairing.is_some()
    }
}

/// `(i, j)` operation index pairs between two interfaces.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OperationPairing {
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceMatch {
    pub value: MatchValue,
    /// `None` when no pairing exists (operation count mismatch).
    pub pairing: Option<OperationPairing>,
    /// Operation matches for each pair, in pairing order.
    pub operations: Vec<OperationMatch>,
    /// Weighted semantic distance under the chosen pairing.
    pub distance: f64,
}

impl InterfaceMatch {
    fn fail() -> Self {
        Self {
            value: MatchValue::Fail,
            pairing: None,
            operations: Vec::new(),
            distance: 1.0,
        }
    }
}

fn concept_match<M: ConceptMatcher + ?Sized>(
    sem: &M,
    a: &ConceptRef,
    b: &ConceptRef,
    warnings: &mut Vec<String>,
) -> MatchValue {
    sem.match_concepts(a, b).unwrap_or_else(|e| {
        warnings.push(e.to_string());
        MatchValue::Fail
    })
}

/// Same input count and same output presence.
pub fn is_comparable(op_i: &Operation, op_j: &Operation) -> bool {
    op_i.inputs.len() == op_j.inputs.len() && op_i.output.is_some() == op_j.output.is_some()
}

/// Candidate input bijections for two operations.
///
/// `None` when they are not comparable. Up to [`MAX_ENUM`] inputs every
/// bijection is listed; above that only the cost-optimal one.
pub fn comparable_operations<M: ConceptMatcher + ?Sized>(
    sem: &M,
    op_i: &Operation,
    op_j: &Operation,
) -> Option<Vec<InputPairing>> {
    if !is_comparable(op_i, op_j) {
        return None;
    }
    let n = op_i.inputs.len();
    if n <= MAX_ENUM {
        let mut all = Vec::new();
        let mut current = Vec::with_capacity(n);
        let mut used = vec![false; n];
        permutations(n, &mut used, &mut current, &mut all);
        Some(all.iter().map(|c| InputPairing::from_columns(c)).collect())
    } else {
        let m = match_operations(sem, op_i, op_j);
        Some(vec![m.pairing.expect("comparable operations have a pairing")])
    }
}

fn permutations(n: usize, used: &mut [bool], current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == n {
        out.push(current.clone());
        return;
    }
    for j in 0..n {
        if !used[j] {
            used[j] = true;
            current.push(j);
            permutations(n, used, current, out);
            current.pop();
            used[j] = false;
        }
    }
}

/// Semantic match of two operations with uniform item weights for tie-breaks.
pub fn match_operations<M: ConceptMatcher + ?Sized>(sem: &M, op_i: &Operation, op_j: &Operation) -> OperationMatch {
    evaluate_operation(sem, op_i, op_j, &WeightVector::for_operation(op_i.inputs.len()))
}

fn evaluate_operation<M: ConceptMatcher + ?Sized>(
    sem: &M,
    op_i: &Operation,
    op_j: &Operation,
    weights: &WeightVector,
) -> OperationMatch {
    let table = sem.distances();
    let mut warnings = Vec::new();
    let concept = concept_match(sem, &op_i.concept.semantic, &op_j.concept.semantic, &mut warnings);
    let output = match (&op_i.output, &op_j.output) {
        (None, None) => MatchValue::Exact,
        (Some(a), Some(b)) => concept_match(sem, &a.semantic, &b.semantic, &mut warnings),
        _ => MatchValue::Fail,
    };

    if !is_comparable(op_i, op_j) {
        return OperationMatch {
            value: MatchValue::Fail,
            pairing: None,
            per_item: ItemMatches {
                concept,
                output,
                inputs: Vec::new(),
            },
            distance: table.fail,
            warnings,
        };
    }

    let w = weights.as_slice();
    let cells: Vec<Vec<Cell>> = op_i
        .inputs
        .iter()
        .enumerate()
        .map(|(k, a)| {
            op_j.inputs
                .iter()
                .map(|b| {
                    let class = concept_match(sem, &a.semantic, &b.semantic, &mut warnings);
                    Cell {
                        class,
                        cost: w[2 + k] * table.of(class),
                    }
                })
                .collect()
        })
        .collect();
    let floor = concept.max(output);
    let best = best_injection(&cells, op_j.inputs.len(), floor).expect("equal arity");
    let inputs = best
        .columns
        .iter()
        .enumerate()
        .map(|(r, &c)| cells[r][c].class)
        .collect();
    warnings.sort();
    warnings.dedup();
    OperationMatch {
        value: best.class,
        pairing: Some(InputPairing::from_columns(&best.columns)),
        per_item: ItemMatches {
            concept,
            output,
            inputs,
        },
        distance: w[0] * table.of(concept) + w[1] * table.of(output) + best.cost,
        warnings,
    }
}

/// `≡`: the operations match `Exact`.
pub fn equivalent_operations<M: ConceptMatcher + ?Sized>(sem: &M, op_i: &Operation, op_j: &Operation) -> bool {
    match_operations(sem, op_i, op_j).value == MatchValue::Exact
}

/// `▷`: the operations match `PlugIn`, i.e. `op_i` can replace `op_j`.
pub fn almost_equivalent_operations<M: ConceptMatcher + ?Sized>(sem: &M, op_i: &Operation, op_j: &Operation) -> bool {
    match_operations(sem, op_i, op_j).value == MatchValue::PlugIn
}

/// Weighted concept distance between two comparable operations.
///
/// `weights` are ordered (concept, output, inputs...) with the inputs in
/// `op_i` order.
pub fn operation_distance<M: ConceptMatcher + ?Sized>(
    sem: &M,
    op_i: &Operation,
    op_j: &Operation,
    weights: &WeightVector,
) -> Result<f64, MatchError> {
    check_arity(weights, 2 + op_i.inputs.len())?;
    if !is_comparable(op_i, op_j) {
        return Err(MatchError::NotComparable(format!(
            "`{}` has {} inputs, `{}` has {}",
            op_i.name(),
            op_i.inputs.len(),
            op_j.name(),
            op_j.inputs.len()
        )));
    }
    Ok(evaluate_operation(sem, op_i, op_j, weights).distance)
}

fn check_arity(weights: &WeightVector, expected: usize) -> Result<(), MatchError> {
    if weights.len() != expected {
        return Err(MatchError::WeightArity {
            expected,
            got: weights.len(),
        });
    }
    Ok(())
}

/// Pairs `rows` operations of one side with operations of `columns`, where
/// `cell(row_op, col_op)` produces the operation match for that pair.
fn pair_operations<'a>(
    rows: &[(usize, &'a Operation)],
    columns: &[&'a Operation],
    op_weights: &[f64],
    cell: impl Fn(usize, &'a Operation, &'a Operation) -> OperationMatch,
) -> InterfaceMatch {
    let matches: Vec<Vec<OperationMatch>> = rows
        .iter()
        .enumerate()
        .map(|(r, &(_, op))| columns.iter().map(|c| cell(r, op, c)).collect())
        .collect();
    let cells: Vec<Vec<Cell>> = matches
        .iter()
        .zip(op_weights)
        .map(|(row, w)| {
            row.iter()
                .map(|m| Cell {
                    class: m.value,
                    cost: w * m.distance,
                })
                .collect()
        })
        .collect();
    let Some(best) = best_injection(&cells, columns.len(), MatchValue::Exact) else {
        return InterfaceMatch::fail();
    };
    let mut matches = matches;
    let operations = best
        .columns
        .iter()
        .enumerate()
        .map(|(r, &c)| std::mem::replace(&mut matches[r][c], placeholder()))
        .collect();
    InterfaceMatch {
        value: best.class,
        pairing: Some(OperationPairing {
            pairs: best.columns.iter().enumerate().map(|(r, &c)| (rows[r].0, c)).collect(),
        }),
        operations,
        distance: best.cost,
    }
}

fn placeholder() -> OperationMatch {
    OperationMatch {
        value: MatchValue::Fail,
        pairing: None,
        per_item: ItemMatches {
            concept: MatchValue::Fail,
            output: MatchValue::Fail,
            inputs: Vec::new(),
        },
        distance: 1.0,
        warnings: Vec::new(),
    }
}

/// Full interface match: equal operation counts and the best class over all
/// operation bijections.
pub fn match_interfaces<M: ConceptMatcher + ?Sized>(sem: &M, ifc_i: &Interface, ifc_j: &Interface) -> InterfaceMatch {
    if ifc_i.len() != ifc_j.len() {
        return InterfaceMatch::fail();
    }
    let rows: Vec<_> = ifc_i.operations.iter().enumerate().collect();
    let cols: Vec<_> = ifc_j.operations.iter().collect();
    let weights = WeightVector::uniform(rows.len());
    pair_operations(&rows, &cols, weights.as_slice(), |_, a, b| match_operations(sem, a, b))
}

pub fn equivalent_interfaces<M: ConceptMatcher + ?Sized>(sem: &M, ifc_i: &Interface, ifc_j: &Interface) -> bool {
    match_interfaces(sem, ifc_i, ifc_j).value == MatchValue::Exact
}

pub fn almost_equivalent_interfaces<M: ConceptMatcher + ?Sized>(sem: &M, ifc_i: &Interface, ifc_j: &Interface) -> bool {
    match_interfaces(sem, ifc_i, ifc_j).value == MatchValue::PlugIn
}

fn subset_rows<'a, S: AsRef<str>>(ifc: &'a Interface, subset: &[S]) -> Result<Vec<(usize, &'a Operation)>, MatchError> {
    let mut rows: Vec<(usize, &Operation)> = Vec::with_capacity(subset.len());
    for name in subset {
        let name = name.as_ref();
        let idx = ifc
            .position(name)
            .ok_or_else(|| MatchError::UnknownOperation(name.to_string()))?;
        if rows.iter().any(|(i, _)| *i == idx) {
            return Err(MatchError::DuplicateOperation(name.to_string()));
        }
        rows.push((idx, &ifc.operations[idx]));
    }
    Ok(rows)
}

/// Interface match restricted to `subset` (operation names of `ifc_i`), each
/// injectively paired with some operation of `ifc_j`.
pub fn match_interfaces_over<M: ConceptMatcher + ?Sized, S: AsRef<str>>(
    sem: &M,
    ifc_i: &Interface,
    ifc_j: &Interface,
    subset: &[S],
) -> Result<InterfaceMatch, MatchError> {
    let rows = subset_rows(ifc_i, subset)?;
    let cols: Vec<_> = ifc_j.operations.iter().collect();
    let weights = WeightVector::uniform(rows.len());
    Ok(pair_operations(&rows, &cols, weights.as_slice(), |_, a, b| {
        match_operations(sem, a, b)
    }))
}

/// How well `provider` covers the operations of `required` (all of them, or
/// only the named `subset`).
///
/// Each required operation is injectively paired with a provider operation
/// and scored as `match_operations(provider_op, required_op)`, so `PlugIn`
/// means the provider can stand in for the requirement. Pairs are
/// `(required index, provider index)`.
pub fn match_coverage<M: ConceptMatcher + ?Sized, S: AsRef<str>>(
    sem: &M,
    provider: &Interface,
    required: &Interface,
    subset: Option<&[S]>,
) -> Result<InterfaceMatch, MatchError> {
    let rows = match subset {
        Some(names) => subset_rows(required, names)?,
        None => required.operations.iter().enumerate().collect(),
    };
    let cols: Vec<_> = provider.operations.iter().collect();
    let weights = WeightVector::uniform(rows.len());
    Ok(pair_operations(&rows, &cols, weights.as_slice(), |_, req, prov| {
        match_operations(sem, prov, req)
    }))
}

/// Weighted semantic distance between two interfaces with equal operation counts.
///
/// `op_weights` has one entry per operation of `ifc_i`; `item_weights`, when
/// given, holds one (concept, output, inputs...) vector per operation of
/// `ifc_i`. Pairs that are not comparable count as the `Fail` distance.
pub fn interface_distance<M: ConceptMatcher + ?Sized>(
    sem: &M,
    ifc_i: &Interface,
    ifc_j: &Interface,
    op_weights: &WeightVector,
    item_weights: Option<&[WeightVector]>,
) -> Result<f64, MatchError> {
    if ifc_i.len() != ifc_j.len() {
        return Err(MatchError::NotComparable(format!(
            "{} operations vs {}",
            ifc_i.len(),
            ifc_j.len()
        )));
    }
    check_arity(op_weights, ifc_i.len())?;
    let defaults: Vec<WeightVector>;
    let items = match item_weights {
        Some(items) => {
            if items.len() != ifc_i.len() {
                return Err(MatchError::WeightArity {
                    expected: ifc_i.len(),
                    got: items.len(),
                });
            }
            for (w, op) in items.iter().zip(&ifc_i.operations) {
                check_arity(w, 2 + op.inputs.len())?;
            }
            items
        }
        None => {
            defaults = ifc_i
                .operations
                .iter()
                .map(|op| WeightVector::for_operation(op.inputs.len()))
                .collect();
            &defaults
        }
    };
    let rows: Vec<_> = ifc_i.operations.iter().enumerate().collect();
    let cols: Vec<_> = ifc_j.operations.iter().collect();
    Ok(pair_operations(&rows, &cols, op_weights.as_slice(), |r, a, b| {
        if is_comparable(a, b) {
            evaluate_operation(sem, a, b, &items[r])
        } else {
            match_operations(sem, a, b)
        }
    })
    .distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NamedConcept, OutputSpec, Parameter, TypeRef};
    use crate::ontology::Ontology;

    fn onto() -> Ontology {
        Ontology::from_json(
            r#"{"id":"o","concepts":["thing","doc","uri","path","out","sub","x","y"],
               "subsumption":[["thing","doc"],["doc","uri"],["uri","path"],["out","sub"]]}"#,
        )
        .unwrap()
    }

    fn op(concept: &str, inputs: &[&str], output: Option<&str>) -> Operation {
        Operation {
            concept: NamedConcept {
                name: concept.to_string(),
                semantic: ConceptRef::new("o", concept),
            },
            inputs: inputs
                .iter()
                .enumerate()
                .map(|(k, s)| Parameter {
                    name: format!("in{k}"),
                    ty: TypeRef::new("rust", "String"),
                    semantic: ConceptRef::new("o", *s),
                })
                .collect(),
            output: output.map(|s| OutputSpec {
                ty: TypeRef::new("rust", "String"),
                semantic: ConceptRef::new("o", s),
            }),
            nfps: Vec::new(),
        }
    }

    #[test]
    fn arity_mismatch_is_not_comparable() {
        let o = onto();
        let a = op("x", &["doc", "uri"], Some("out"));
        let b = op("x", &["doc", "uri", "path"], Some("out"));
        assert!(comparable_operations(&o, &a, &b).is_none());
        assert_eq!(match_operations(&o, &a, &b).value, MatchValue::Fail);
        let c = op("x", &["doc", "uri"], None);
        assert!(comparable_operations(&o, &a, &c).is_none());
    }

    #[test]
    fn zero_inputs_have_the_empty_pairing() {
        let o = onto();
        let a = op("x", &[], None);
        let pairings = comparable_operations(&o, &a, &a).unwrap();
        assert_eq!(pairings, vec![InputPairing::default()]);
        assert_eq!(match_operations(&o, &a, &a).value, MatchValue::Exact);
    }

    #[test]
    fn all_bijections_are_listed() {
        let o = onto();
        let a = op("x", &["doc", "uri", "path"], None);
        assert_eq!(comparable_operations(&o, &a, &a).unwrap().len(), 6);
    }

    #[test]
    fn pairing_is_found_regardless_of_input_order() {
        let o = onto();
        let a = op("x", &["doc", "out"], Some("out"));
        let b = op("x", &["sub", "path"], Some("out"));
        let m = match_operations(&o, &a, &b);
        assert_eq!(m.value, MatchValue::PlugIn);
        assert_eq!(m.pairing.unwrap().pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(match_operations(&o, &b, &a).value, MatchValue::Subsume);
    }

    #[test]
    fn unresolved_reference_fails_with_warning() {
        let o = onto();
        let a = op("x", &["doc"], None);
        let mut b = op("x", &["doc"], None);
        b.inputs[0].semantic = ConceptRef::new("o", "ghost");
        let m = match_operations(&o, &a, &b);
        assert_eq!(m.value, MatchValue::Fail);
        assert_eq!(m.warnings.len(), 1);
        assert!(m.warnings[0].contains("ghost"));
    }

    #[test]
    fn distance_rejects_bad_weights() {
        let o = onto();
        let a = op("x", &["doc"], Some("out"));
        let err = operation_distance(&o, &a, &a, &WeightVector::uniform(2)).unwrap_err();
        assert_eq!(err, MatchError::WeightArity { expected: 3, got: 2 });
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
        let b = op("x", &[], Some("out"));
        assert!(matches!(
            operation_distance(&o, &a, &b, &WeightVector::uniform(3)),
            Err(MatchError::NotComparable(_))
        ));
    }

    #[test]
    fn weighted_distance_sums_items() {
        let o = onto();
        let a = op("thing", &["doc"], Some("out"));
        let b = op("doc", &["path"], Some("sub"));
        let w = WeightVector::new(vec![0.5, 0.25, 0.25]).unwrap();
        let d = operation_distance(&o, &a, &b, &w).unwrap();
        assert!((d - (0.5 * 0.2 + 0.25 * 0.2 + 0.25 * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn subset_errors() {
        let o = onto();
        let ifc = Interface::new(vec![op("x", &[], None), op("y", &[], None)]);
        assert_eq!(
            match_interfaces_over(&o, &ifc, &ifc, &["nope"]).unwrap_err(),
            MatchError::UnknownOperation("nope".into())
        );
        assert_eq!(
            match_interfaces_over(&o, &ifc, &ifc, &["x", "x"]).unwrap_err(),
            MatchError::DuplicateOperation("x".into())
        );
    }

    #[test]
    fn coverage_scores_provider_against_requirement() {
        let o = onto();
        let provider = Interface::new(vec![op("y", &[], None), op("x", &["doc"], None)]);
        let required = Interface::new(vec![op("x", &["path"], None)]);
        let m = match_coverage::<_, &str>(&o, &provider, &required, None).unwrap();
        assert_eq!(m.value, MatchValue::PlugIn);
        assert_eq!(m.pairing.unwrap().pairs, vec![(0, 1)]);
    }
}
