//! QoS similarity between functionally matched operations.
//!
//! Quantitative properties are compared through z-scores over a population of
//! offers, folded into `[0, 1]` by a direction-aware map η. Qualitative
//! properties are compared by concept distance. The degree between two
//! operations is the weighted sum of the per-property degrees; lower is closer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::{OperationPairing, WeightVector};
use crate::model::{Interface, NonFunctionalProperty, Operation, Operator};
use crate::ontology::{ConceptMatcher, OntologyError};

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum QosError {
    #[error("weights must sum to 1, got {0}")]
    WeightSum(f64),
    #[error("weight for `{0}` must be finite and non-negative")]
    NegativeWeight(String),
    #[error("weight given for `{0}`, which the reference operation does not declare")]
    UnknownWeight(String),
    #[error("no weight for property `{0}`")]
    MissingWeight(String),
    #[error("no population for property `{0}`")]
    MissingPopulation(String),
    #[error("property `{property}` uses `{expected}` in one offer and `{found}` in another")]
    OperatorMismatch {
        property: String,
        expected: Operator,
        found: Operator,
    },
    #[error("cannot compare property `{left}` with `{right}`")]
    NameMismatch { left: String, right: String },
    #[error("`{0}` is not a qualitative property")]
    NotQualitative(String),
    #[error("no operation pairing between the services")]
    NoPairing,
    #[error(transparent)]
    Concept(#[from] OntologyError),
}

/// The values offered for one quantitative property, used to normalize it.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    name: String,
    operator: Operator,
    values: Vec<(String, f64)>,
}

impl Population {
    pub fn new(name: impl Into<String>, operator: Operator) -> Self {
        Self {
            name: name.into(),
            operator,
            values: Vec::new(),
        }
    }

    /// Population over anonymous values, owners named by position.
    pub fn from_values(name: impl Into<String>, operator: Operator, values: &[f64]) -> Self {
        let mut pop = Self::new(name, operator);
        for (k, v) in values.iter().enumerate() {
            pop.push(format!("#{k}"), *v);
        }
        pop
    }

    pub fn push(&mut self, owner: impl Into<String>, value: f64) {
        self.values.push((owner.into(), value));
    }

    /// Adds `op`'s value for this property, if it declares one.
    ///
    /// Returns whether a value was added; an operator that disagrees with the
    /// population's is an error.
    pub fn add_operation(&mut self, owner: impl Into<String>, op: &Operation) -> Result<bool, QosError> {
        match op.nfp(&self.name) {
            Some(NonFunctionalProperty::Quantitative { value, operator, .. }) => {
                if operator.strict() != self.operator.strict() {
                    return Err(QosError::OperatorMismatch {
                        property: self.name.clone(),
                        expected: self.operator,
                        found: *operator,
                    });
                }
                self.push(owner, *value);
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn operator(&self) -> Operator {
        self.operator
    }

    pub fn values(&self) -> &[(String, f64)] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Arithmetic mean; 0 for an empty population.
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|(_, v)| v).sum::<f64>() / self.values.len() as f64
    }

    /// Population standard deviation (divides by N).
    pub fn std_dev(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let mean = self.mean();
        let var = self.values.iter().map(|(_, v)| (v - mean).powi(2)).sum::<f64>() / self.values.len() as f64;
        var.sqrt()
    }
}

/// `(value - μ) / σ`, or 0 when the population has no spread.
pub fn z_score(pop: &Population, value: f64) -> f64 {
    let sigma = pop.std_dev();
    if sigma == 0.0 || !sigma.is_finite() {
        return 0.0;
    }
    (value - pop.mean()) / sigma
}

/// Maps the z-score of `value` into `[0, 1]` so that 0 is the best offer.
///
/// Linear in `z` on `[-2, 2]`, saturating outside.
pub fn eta(pop: &Population, value: f64) -> f64 {
    let z = z_score(pop, value);
    let raw = if pop.operator.prefers_higher() {
        0.5 - z / 4.0
    } else {
        z / 4.0 + 0.5
    };
    raw.clamp(0.0, 1.0)
}

/// Degree between two quantitative values of the same property.
pub fn qn_degree(pop: &Population, v_i: f64, v_j: f64) -> f64 {
    (eta(pop, v_i) - eta(pop, v_j)).abs()
}

/// Degree between two qualitative values: the concept distance from `np_i`
/// to `np_j`.
pub fn ql_degree<M: ConceptMatcher + ?Sized>(
    sem: &M,
    np_i: &NonFunctionalProperty,
    np_j: &NonFunctionalProperty,
) -> Result<f64, QosError> {
    if np_i.name() != np_j.name() {
        return Err(QosError::NameMismatch {
            left: np_i.name().to_string(),
            right: np_j.name().to_string(),
        });
    }
    match (np_i, np_j) {
        (
            NonFunctionalProperty::Qualitative { semantic: a, .. },
            NonFunctionalProperty::Qualitative { semantic: b, .. },
        ) => Ok(sem.concept_distance(a, b)?),
        (NonFunctionalProperty::Qualitative { .. }, other) | (other, _) => {
            Err(QosError::NotQualitative(other.name().to_string()))
        }
    }
}

/// Non-negative per-property weights summing to one.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct QosWeights(BTreeMap<String, f64>);

impl QosWeights {
    /// Validates the map. An empty map is accepted and means "no properties".
    pub fn new(weights: BTreeMap<String, f64>) -> Result<Self, QosError> {
        for (name, w) in &weights {
            if !w.is_finite() || *w < 0.0 {
                return Err(QosError::NegativeWeight(name.clone()));
            }
        }
        if !weights.is_empty() {
            let sum: f64 = weights.values().sum();
            if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
                return Err(QosError::WeightSum(sum));
            }
        }
        Ok(Self(weights))
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self, QosError> {
        Self::new(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn uniform<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let w = 1.0 / names.len().max(1) as f64;
        Self(names.into_iter().map(|n| (n, w)).collect())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Restricts the weights to the properties `op` declares and renormalizes.
    ///
    /// Falls back to uniform weights over `op`'s properties when none of them
    /// carries weight.
    pub fn for_operation(&self, op: &Operation) -> QosWeights {
        let names: Vec<&str> = op.nfps.iter().map(NonFunctionalProperty::name).collect();
        let total: f64 = names.iter().filter_map(|n| self.get(n)).sum();
        if total <= 0.0 {
            return QosWeights::uniform(names);
        }
        QosWeights(
            names
                .into_iter()
                .map(|n| (n.to_string(), self.get(n).unwrap_or(0.0) / total))
                .collect(),
        )
    }
}

impl TryFrom<BTreeMap<String, f64>> for QosWeights {
    type Error = QosError;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self, Self::Error> {
        Self::new(map)
    }
}

impl From<QosWeights> for BTreeMap<String, f64> {
    fn from(w: QosWeights) -> Self {
        w.0
    }
}

/// One population per quantitative property name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Populations(BTreeMap<String, Population>);

impl Populations {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pop: Population) {
        self.0.insert(pop.name.clone(), pop);
    }

    pub fn get(&self, name: &str) -> Option<&Population> {
        self.0.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Population> {
        self.0.values()
    }

    /// Populations for every quantitative property of `ops[0]`, over all of
    /// `ops`. Operator disagreement is an error.
    pub fn from_operations<'a>(ops: impl IntoIterator<Item = (&'a str, &'a Operation)>) -> Result<Self, QosError> {
        let ops: Vec<_> = ops.into_iter().collect();
        let mut out = Self::new();
        let Some((_, reference)) = ops.first() else {
            return Ok(out);
        };
        for nfp in &reference.nfps {
            if let NonFunctionalProperty::Quantitative { name, operator, .. } = nfp {
                let mut pop = Population::new(name.clone(), *operator);
                for (owner, op) in &ops {
                    pop.add_operation(*owner, op)?;
                }
                out.insert(pop);
            }
        }
        Ok(out)
    }

    /// Like [`Populations::from_operations`], but offers whose operator
    /// disagrees with the reference are left out instead of failing.
    pub fn lenient<'a>(
        reference: (&'a str, &'a Operation),
        others: impl IntoIterator<Item = (&'a str, &'a Operation)>,
    ) -> Self {
        let others: Vec<_> = others.into_iter().collect();
        let mut out = Self::new();
        for nfp in &reference.1.nfps {
            if let NonFunctionalProperty::Quantitative { name, operator, value } = nfp {
                let mut pop = Population::new(name.clone(), *operator);
                pop.push(reference.0, *value);
                for (owner, op) in &others {
                    let _ = pop.add_operation(*owner, op);
                }
                out.insert(pop);
            }
        }
        out
    }
}

/// How close `op_j` is to `op_i` on the properties of `op_i`.
///
/// `w` must be keyed exactly by `op_i`'s property names. A property `op_j`
/// lacks, or declares with the other kind, contributes degree 1. Qualitative
/// properties are scored as the concept distance from `op_j`'s concept to
/// `op_i`'s, so a more general offer than the reference costs the `PlugIn`
/// distance.
pub fn qos_degree<M: ConceptMatcher + ?Sized>(
    sem: &M,
    op_i: &Operation,
    op_j: &Operation,
    w: &QosWeights,
    pops: &Populations,
) -> Result<f64, QosError> {
    for (name, _) in w.iter() {
        if op_i.nfp(name).is_none() {
            return Err(QosError::UnknownWeight(name.to_string()));
        }
    }
    let mut total = 0.0;
    for nfp in &op_i.nfps {
        let weight = w
            .get(nfp.name())
            .ok_or_else(|| QosError::MissingWeight(nfp.name().to_string()))?;
        let degree = match (nfp, op_j.nfp(nfp.name())) {
            (
                NonFunctionalProperty::Quantitative {
                    name,
                    value: v_i,
                    operator,
                },
                Some(NonFunctionalProperty::Quantitative {
                    value: v_j,
                    operator: other,
                    ..
                }),
            ) => {
                if operator.strict() != other.strict() {
                    return Err(QosError::OperatorMismatch {
                        property: name.clone(),
                        expected: *operator,
                        found: *other,
                    });
                }
                let pop = pops
                    .get(name)
                    .ok_or_else(|| QosError::MissingPopulation(name.clone()))?;
                if pop.operator.strict() != operator.strict() {
                    return Err(QosError::OperatorMismatch {
                        property: name.clone(),
                        expected: *operator,
                        found: pop.operator,
                    });
                }
                qn_degree(pop, *v_i, *v_j)
            }
            (NonFunctionalProperty::Qualitative { .. }, Some(other @ NonFunctionalProperty::Qualitative { .. })) => {
                ql_degree(sem, other, nfp)?
            }
            _ => 1.0,
        };
        total += weight * degree;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Weighted mean of operation degrees over a service-level pairing.
///
/// `pairing` holds `(reference op, candidate op)` index pairs and
/// `populations[k]` belongs to reference operation `pairing.pairs[k].0`.
/// Property weights are restricted to each reference operation's properties.
pub fn service_qos_degree<M: ConceptMatcher + ?Sized>(
    sem: &M,
    reference: &Interface,
    candidate: &Interface,
    pairing: &OperationPairing,
    op_weights: Option<&WeightVector>,
    weights: &QosWeights,
    populations: &[Populations],
) -> Result<f64, QosError> {
    if pairing.pairs.is_empty() || populations.len() != pairing.pairs.len() {
        return Err(QosError::NoPairing);
    }
    let uniform = WeightVector::uniform(pairing.pairs.len());
    let op_weights = op_weights.unwrap_or(&uniform);
    if op_weights.len() != pairing.pairs.len() {
        return Err(QosError::NoPairing);
    }
    let mut total = 0.0;
    for ((&(i, j), pops), w) in pairing.pairs.iter().zip(populations).zip(op_weights.as_slice()) {
        let (Some(op_i), Some(op_j)) = (reference.operations.get(i), candidate.operations.get(j)) else {
            return Err(QosError::NoPairing);
        };
        total += w * qos_degree(sem, op_i, op_j, &weights.for_operation(op_i), pops)?;
    }
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NamedConcept, Operator};
    use crate::ontology::{ConceptRef, Ontology};
    use proptest::prelude::*;

    fn net() -> Ontology {
        Ontology::from_json(
            r#"{"id":"network","concepts":["connectivity","wireless","wifi","bluetooth"],
               "subsumption":[["connectivity","wireless"],["wireless","wifi"],["connectivity","bluetooth"]]}"#,
        )
        .unwrap()
    }

    fn op(nfps: Vec<NonFunctionalProperty>) -> Operation {
        Operation {
            concept: NamedConcept {
                name: "op".into(),
                semantic: ConceptRef::new("network", "connectivity"),
            },
            inputs: Vec::new(),
            output: None,
            nfps,
        }
    }

    fn access(c: &str) -> NonFunctionalProperty {
        NonFunctionalProperty::qualitative("access", ConceptRef::new("network", c))
    }

    #[test]
    fn constant_population_has_zero_z() {
        let pop = Population::from_values("x", Operator::Less, &[5.0, 5.0, 5.0]);
        assert_eq!(z_score(&pop, 5.0), 0.0);
        assert_eq!(eta(&pop, 5.0), 0.5);
    }

    #[test]
    fn eta_saturates() {
        let pop = Population::from_values("x", Operator::Less, &[0.0, 0.0, 0.0, 0.0, 100.0]);
        // z(100) = 2, z(0) = -0.5
        assert!((eta(&pop, 100.0) - 1.0).abs() < 1e-12);
        assert_eq!(eta(&pop, 1000.0), 1.0);
        assert_eq!(eta(&pop, -1000.0), 0.0);
        let pop = Population::from_values("x", Operator::GreaterOrEqual, &[0.0, 0.0, 0.0, 0.0, 100.0]);
        assert_eq!(eta(&pop, 1000.0), 0.0);
    }

    #[test]
    fn qualitative_degrees() {
        let o = net();
        assert_eq!(ql_degree(&o, &access("wifi"), &access("wifi")).unwrap(), 0.0);
        assert_eq!(ql_degree(&o, &access("wireless"), &access("wifi")).unwrap(), 0.2);
        assert_eq!(ql_degree(&o, &access("bluetooth"), &access("wifi")).unwrap(), 1.0);
        let other = NonFunctionalProperty::qualitative("medium", ConceptRef::new("network", "wifi"));
        assert!(matches!(
            ql_degree(&o, &access("wifi"), &other),
            Err(QosError::NameMismatch { .. })
        ));
        let ghost = access("ghost");
        assert!(matches!(ql_degree(&o, &ghost, &ghost), Err(QosError::Concept(_))));
    }

    #[test]
    fn weights_are_validated() {
        assert!(QosWeights::from_pairs([("a", 0.5), ("b", 0.6)]).is_err());
        assert!(QosWeights::from_pairs([("a", 1.5), ("b", -0.5)]).is_err());
        assert!(QosWeights::from_pairs([("a", 0.25), ("b", 0.75)]).is_ok());
        let parsed: Result<QosWeights, _> = serde_json::from_str(r#"{"a":0.3}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn missing_counterpart_counts_as_one() {
        let o = net();
        let a = op(vec![
            access("wifi"),
            NonFunctionalProperty::quantitative("price", 3.0, Operator::Less),
        ]);
        let b = op(vec![access("wifi")]);
        let pops = Populations::from_operations([("a", &a), ("b", &b)]).unwrap();
        let w = QosWeights::from_pairs([("access", 0.5), ("price", 0.5)]).unwrap();
        assert_eq!(qos_degree(&o, &a, &b, &w, &pops).unwrap(), 0.5);
    }

    #[test]
    fn operator_disagreement_is_an_error() {
        let o = net();
        let a = op(vec![NonFunctionalProperty::quantitative("price", 3.0, Operator::Less)]);
        let b = op(vec![NonFunctionalProperty::quantitative(
            "price",
            4.0,
            Operator::Greater,
        )]);
        assert!(matches!(
            Populations::from_operations([("a", &a), ("b", &b)]),
            Err(QosError::OperatorMismatch { .. })
        ));
        let pops = Populations::lenient(("a", &a), [("b", &b)]);
        assert_eq!(pops.get("price").unwrap().len(), 1);
        let w = QosWeights::uniform(["price"]);
        assert!(matches!(
            qos_degree(&o, &a, &b, &w, &pops),
            Err(QosError::OperatorMismatch { .. })
        ));
    }

    #[test]
    fn weight_keys_must_match_reference() {
        let o = net();
        let a = op(vec![access("wifi")]);
        let w = QosWeights::from_pairs([("price", 1.0)]).unwrap();
        assert!(matches!(
            qos_degree(&o, &a, &a, &w, &Populations::new()),
            Err(QosError::UnknownWeight(n)) if n == "price"
        ));
        let w = QosWeights::default();
        assert!(matches!(
            qos_degree(&o, &a, &a, &w, &Populations::new()),
            Err(QosError::MissingWeight(n)) if n == "access"
        ));
    }

    #[test]
    fn restriction_renormalizes() {
        let a = op(vec![
            access("wifi"),
            NonFunctionalProperty::quantitative("price", 1.0, Operator::Less),
        ]);
        let w = QosWeights::from_pairs([("access", 0.2), ("price", 0.2), ("latency", 0.6)]).unwrap();
        let r = w.for_operation(&a);
        assert!((r.get("access").unwrap() - 0.5).abs() < 1e-12);
        assert!((r.get("price").unwrap() - 0.5).abs() < 1e-12);
        let w = QosWeights::from_pairs([("latency", 1.0)]).unwrap();
        assert_eq!(w.for_operation(&a).get("access"), Some(0.5));
    }

    proptest! {
        #[test]
        fn qn_degree_is_symmetric(values in proptest::collection::vec(-1e3f64..1e3, 1..12), a in 0usize..12, b in 0usize..12) {
            let pop = Population::from_values("x", Operator::Greater, &values);
            let (va, vb) = (values[a % values.len()], values[b % values.len()]);
            prop_assert_eq!(qn_degree(&pop, va, vb), qn_degree(&pop, vb, va));
        }

        #[test]
        fn eta_is_monotone(values in proptest::collection::vec(-1e3f64..1e3, 2..12), x in -2e3f64..2e3, dx in 0f64..100.0) {
            let less = Population::from_values("x", Operator::Less, &values);
            let more = Population::from_values("x", Operator::Greater, &values);
            prop_assert!(eta(&less, x) <= eta(&less, x + dx) + 1e-12);
            prop_assert!(eta(&more, x) + 1e-12 >= eta(&more, x + dx));
        }
    }
}
