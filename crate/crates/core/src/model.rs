//! Service, interface, operation and non-functional property types, plus the
//! JSON service descriptor format.
//!
//! Descriptors are parsed into a private wire form first and then converted,
//! so the domain types stay free of serde plumbing. Semantic references are
//! only recorded at parse time; [`validate_service`] resolves them against a
//! loaded ontology set.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{ConceptMatcher, ConceptRef};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed service descriptor: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("service `{0}` has an empty interface")]
    EmptyInterface(String),
    #[error("service `{service}`: operation `{operation}` declared twice")]
    DuplicateOperation { service: String, operation: String },
    #[error("service `{service}`, operation `{operation}`: duplicate input `{name}`")]
    DuplicateInput {
        service: String,
        operation: String,
        name: String,
    },
    #[error("service `{service}`, operation `{operation}`: duplicate non-functional property `{name}`")]
    DuplicateNfp {
        service: String,
        operation: String,
        name: String,
    },
    #[error("service `{service}`, operation `{operation}`: property `{name}` has non-finite value")]
    NonFiniteValue {
        service: String,
        operation: String,
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServiceId(pub String);

impl ServiceId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ServiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ServiceId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Syntactic type of a parameter. Carried for completeness, never compared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRef {
    pub language: String,
    pub name: String,
}

impl TypeRef {
    pub fn new(language: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            language: language.into(),
            name: name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedConcept {
    pub name: String,
    pub semantic: ConceptRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parameter {
    pub name: String,
    pub ty: TypeRef,
    pub semantic: ConceptRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSpec {
    pub ty: TypeRef,
    pub semantic: ConceptRef,
}

/// Order operator of a quantitative property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operator {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "<=")]
    LessOrEqual,
    #[serde(rename = ">=")]
    GreaterOrEqual,
}

impl Operator {
    /// `true` when larger values are better (`>` and `>=`).
    pub fn prefers_higher(self) -> bool {
        matches!(self, Operator::Greater | Operator::GreaterOrEqual)
    }

    /// `<=`/`>=` collapse onto `<`/`>`.
    pub fn strict(self) -> Operator {
        if self.prefers_higher() {
            Operator::Greater
        } else {
            Operator::Less
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Operator::Less => "<",
            Operator::Greater => ">",
            Operator::LessOrEqual => "<=",
            Operator::GreaterOrEqual => ">=",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NonFunctionalProperty {
    Qualitative {
        name: String,
        semantic: ConceptRef,
    },
    Quantitative {
        name: String,
        value: f64,
        operator: Operator,
    },
}

impl NonFunctionalProperty {
    pub fn qualitative(name: impl Into<String>, semantic: ConceptRef) -> Self {
        Self::Qualitative {
            name: name.into(),
            semantic,
        }
    }

    pub fn quantitative(name: impl Into<String>, value: f64, operator: Operator) -> Self {
        Self::Quantitative {
            name: name.into(),
            value,
            operator,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Qualitative { name, .. } | Self::Quantitative { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operation {
    pub concept: NamedConcept,
    pub inputs: Vec<Parameter>,
    pub output: Option<OutputSpec>,
    pub nfps: Vec<NonFunctionalProperty>,
}

impl Operation {
    pub fn name(&self) -> &str {
        &self.concept.name
    }

    pub fn nfp(&self, name: &str) -> Option<&NonFunctionalProperty> {
        self.nfps.iter().find(|p| p.name() == name)
    }

    fn check(&self, service: &str) -> Result<(), ModelError> {
        let operation = || self.concept.name.clone();
        let mut seen = HashSet::new();
        for input in &self.inputs {
            if !seen.insert(input.name.as_str()) {
                return Err(ModelError::DuplicateInput {
                    service: service.to_string(),
                    operation: operation(),
                    name: input.name.clone(),
                });
            }
        }
        let mut seen = HashSet::new();
        for nfp in &self.nfps {
            if !seen.insert(nfp.name()) {
                return Err(ModelError::DuplicateNfp {
                    service: service.to_string(),
                    operation: operation(),
                    name: nfp.name().to_string(),
                });
            }
            if let NonFunctionalProperty::Quantitative { value, name, .. } = nfp {
                if !value.is_finite() {
                    return Err(ModelError::NonFiniteValue {
                        service: service.to_string(),
                        operation: operation(),
                        name: name.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Interface {
    pub operations: Vec<Operation>,
}

impl Interface {
    pub fn new(operations: Vec<Operation>) -> Self {
        Self { operations }
    }

    pub fn len(&self) -> usize {
        self.operations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operations.is_empty()
    }

    pub fn position(&self, operation: &str) -> Option<usize> {
        self.operations.iter().position(|op| op.name() == operation)
    }

    /// Checks operation-name uniqueness plus every operation's own invariants.
    /// `owner` only labels errors.
    pub fn check(&self, owner: &str) -> Result<(), ModelError> {
        let mut seen = HashSet::new();
        for op in &self.operations {
            if !seen.insert(op.name()) {
                return Err(ModelError::DuplicateOperation {
                    service: owner.to_string(),
                    operation: op.name().to_string(),
                });
            }
            op.check(owner)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Service {
    pub id: ServiceId,
    pub interface: Interface,
    pub metadata: BTreeMap<String, String>,
}

impl Service {
    pub fn new(id: impl Into<ServiceId>, interface: Interface) -> Self {
        Self {
            id: id.into(),
            interface,
            metadata: BTreeMap::new(),
        }
    }

    pub fn check_invariants(&self) -> Result<(), ModelError> {
        if self.interface.is_empty() {
            return Err(ModelError::EmptyInterface(self.id.0.clone()));
        }
        self.interface.check(&self.id.0)
    }

    pub fn from_json(json: &str) -> Result<Self, ModelError> {
        parse_service(json)
    }

    pub fn to_descriptor(&self) -> ServiceDescriptor {
        ServiceDescriptor {
            id: self.id.0.clone(),
            metadata: self.metadata.clone(),
            interface: InterfaceDescriptor::from(&self.interface),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_descriptor()).expect("descriptor serializes")
    }
}

impl From<String> for ServiceId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// One unresolved semantic reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub concept: ConceptRef,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub fn parse_service(json: &str) -> Result<Service, ModelError> {
    let descriptor: ServiceDescriptor = serde_json::from_str(json)?;
    descriptor.into_service()
}

/// Resolves every semantic reference of `service`; one diagnostic per miss.
pub fn validate_service<M: ConceptMatcher + ?Sized>(service: &Service, ontologies: &M) -> Vec<Diagnostic> {
    validate_interface(&service.interface, "interface", ontologies)
}

pub fn validate_interface<M: ConceptMatcher + ?Sized>(
    interface: &Interface,
    prefix: &str,
    ontologies: &M,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut check = |path: String, concept: &ConceptRef| {
        if let Err(e) = ontologies.resolve(concept) {
            out.push(Diagnostic {
                path,
                concept: concept.clone(),
                message: e.to_string(),
            });
        }
    };
    for (i, op) in interface.operations.iter().enumerate() {
        let base = format!("{prefix}.operations[{i}]");
        check(format!("{base}.concept.semantic"), &op.concept.semantic);
        for (k, input) in op.inputs.iter().enumerate() {
            check(format!("{base}.inputs[{k}].semantic"), &input.semantic);
        }
        if let Some(out) = &op.output {
            check(format!("{base}.output.semantic"), &out.semantic);
        }
        for (k, nfp) in op.nfps.iter().enumerate() {
            if let NonFunctionalProperty::Qualitative { semantic, .. } = nfp {
                check(format!("{base}.nfps[{k}].semantic"), semantic);
            }
        }
    }
    out
}

// ---- wire format ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceDescriptor {
    pub id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
    pub interface: InterfaceDescriptor,
}

impl ServiceDescriptor {
    pub fn into_service(self) -> Result<Service, ModelError> {
        let service = Service {
            id: ServiceId(self.id),
            interface: self.interface.into_interface(),
            metadata: self.metadata,
        };
        service.check_invariants()?;
        Ok(service)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceDescriptor {
    pub operations: Vec<OperationDescriptor>,
}

impl InterfaceDescriptor {
    pub fn into_interface(self) -> Interface {
        Interface {
            operations: self
                .operations
                .into_iter()
                .map(OperationDescriptor::into_operation)
                .collect(),
        }
    }
}

impl From<&Interface> for InterfaceDescriptor {
    fn from(ifc: &Interface) -> Self {
        Self {
            operations: ifc.operations.iter().map(OperationDescriptor::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationDescriptor {
    pub concept: ConceptDescriptor,
    #[serde(default)]
    pub inputs: Vec<InputDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputDescriptor>,
    #[serde(default)]
    pub nfps: Vec<NfpDescriptor>,
}

impl OperationDescriptor {
    fn into_operation(self) -> Operation {
        Operation {
            concept: NamedConcept {
                name: self.concept.name,
                semantic: ConceptRef::new(self.concept.ontology, self.concept.semantic),
            },
            inputs: self
                .inputs
                .into_iter()
                .map(|i| Parameter {
                    name: i.name,
                    ty: i.ty,
                    semantic: ConceptRef::new(i.ontology, i.semantic),
                })
                .collect(),
            output: self.output.map(|o| OutputSpec {
                ty: o.ty,
                semantic: ConceptRef::new(o.ontology, o.semantic),
            }),
            nfps: self.nfps.into_iter().map(NfpDescriptor::into_nfp).collect(),
        }
    }
}

impl From<&Operation> for OperationDescriptor {
    fn from(op: &Operation) -> Self {
        Self {
            concept: ConceptDescriptor {
                name: op.concept.name.clone(),
                ontology: op.concept.semantic.ontology.clone(),
                semantic: op.concept.semantic.name.clone(),
            },
            inputs: op
                .inputs
                .iter()
                .map(|p| InputDescriptor {
                    name: p.name.clone(),
                    ty: p.ty.clone(),
                    ontology: p.semantic.ontology.clone(),
                    semantic: p.semantic.name.clone(),
                })
                .collect(),
            output: op.output.as_ref().map(|o| OutputDescriptor {
                ty: o.ty.clone(),
                ontology: o.semantic.ontology.clone(),
                semantic: o.semantic.name.clone(),
            }),
            nfps: op.nfps.iter().map(NfpDescriptor::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptDescriptor {
    pub name: String,
    pub ontology: String,
    pub semantic: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDescriptor {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: TypeRef,
    pub ontology: String,
    pub semantic: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDescriptor {
    #[serde(rename = "type")]
    pub ty: TypeRef,
    pub ontology: String,
    pub semantic: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NfpDescriptor {
    Qualitative {
        name: String,
        ontology: String,
        semantic: String,
    },
    Quantitative {
        name: String,
        value: f64,
        operator: Operator,
    },
}

impl NfpDescriptor {
    fn into_nfp(self) -> NonFunctionalProperty {
        match self {
            NfpDescriptor::Qualitative {
                name,
                ontology,
                semantic,
            } => NonFunctionalProperty::Qualitative {
                name,
                semantic: ConceptRef::new(ontology, semantic),
            },
            NfpDescriptor::Quantitative { name, value, operator } => {
                NonFunctionalProperty::Quantitative { name, value, operator }
            }
        }
    }
}

impl From<&NonFunctionalProperty> for NfpDescriptor {
    fn from(p: &NonFunctionalProperty) -> Self {
        match p {
            NonFunctionalProperty::Qualitative { name, semantic } => NfpDescriptor::Qualitative {
                name: name.clone(),
                ontology: semantic.ontology.clone(),
                semantic: semantic.name.clone(),
            },
            NonFunctionalProperty::Quantitative { name, value, operator } => NfpDescriptor::Quantitative {
                name: name.clone(),
                value: *value,
                operator: *operator,
            },
        }
    }
}
