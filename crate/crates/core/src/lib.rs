//! Semantic service substitution for dynamic environments.
//!
//! Services publish interfaces whose operations are annotated with concepts
//! from an ontology. This crate decides which services can stand in for
//! which ([`matching`]), how close their non-functional offers are ([`qos`]),
//! and keeps applications bound to the best available service as services
//! come and go ([`registry`]). [`sim`] replays churn traces and generates
//! synthetic populations.

pub mod matching;
pub mod model;
pub mod ontology;
pub mod qos;
pub mod registry;
pub mod sim;

pub use matching::{
    match_coverage, match_interfaces, match_interfaces_over, match_operations, InterfaceMatch, OperationMatch,
    WeightVector,
};
pub use model::{Interface, NonFunctionalProperty, Operation, Operator, Service, ServiceId};
pub use ontology::{ConceptMatcher, ConceptRef, DistanceTable, MatchValue, Ontologies, Ontology};
pub use qos::{qos_degree, Population, Populations, QosWeights};
pub use registry::{ApplicationProfile, Binding, BindingMode, Registry, SubstitutionPlan, Tier};
