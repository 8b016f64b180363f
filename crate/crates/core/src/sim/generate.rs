//! Seeded synthetic worlds: an ontology, a service population over it, and
//! churn traces.
//!
//! The ontology is a forest of concept families. Each family gets a fixed
//! operation template (input and output families), so services drawn from
//! the same family are comparable and their concepts, picked at random
//! depths of the same trees, relate by subsumption or equivalence.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::trace::{ChurnTrace, EventKind, TraceEvent};
use super::SimError;
use crate::model::{
    Interface, NamedConcept, NonFunctionalProperty, Operation, Operator, OutputSpec, Parameter, Service, TypeRef,
};
use crate::ontology::{ConceptRef, Ontology, OntologyDocument};
use crate::qos::QosWeights;
use crate::registry::ApplicationProfile;

pub const ONTOLOGY_ID: &str = "synthetic";
const ACCESS_ROOT: &str = "net";

#[derive(Debug, Clone, PartialEq)]
pub struct NfpRange {
    pub name: String,
    pub operator: Operator,
    pub min: f64,
    pub max: f64,
}

impl NfpRange {
    pub fn new(name: impl Into<String>, operator: Operator, min: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            operator,
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// Independent concept trees, each with its own operation template.
    pub families: usize,
    /// Levels below each family root.
    pub depth: usize,
    pub branching: usize,
    /// Chance that a concept gets an equivalent alias.
    pub alias_probability: f64,
    pub max_operations: usize,
    pub max_inputs: usize,
    pub quantitative: Vec<NfpRange>,
    /// Add a qualitative `access` property drawn from the leaves of a
    /// connectivity tree.
    pub access: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            families: 6,
            depth: 3,
            branching: 2,
            alias_probability: 0.25,
            max_operations: 2,
            max_inputs: 3,
            quantitative: vec![
                NfpRange::new("price", Operator::Less, 1.0, 100.0),
                NfpRange::new("latency", Operator::Less, 5.0, 500.0),
                NfpRange::new("throughput", Operator::Greater, 10.0, 1000.0),
            ],
            access: true,
        }
    }
}

impl GeneratorConfig {
    fn check(&self) -> Result<(), SimError> {
        let fail = |m: &str| Err(SimError::Config(m.to_string()));
        if self.families == 0 || self.branching == 0 {
            return fail("families and branching must be positive");
        }
        if self.max_operations == 0 || self.max_operations > self.families {
            return fail("max_operations must be between 1 and the number of families");
        }
        if !(0.0..=1.0).contains(&self.alias_probability) {
            return fail("alias_probability must lie in [0, 1]");
        }
        for r in &self.quantitative {
            if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max) {
                return fail(&format!("range for `{}` is empty or not finite", r.name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub ontology: Ontology,
    pub services: Vec<Service>,
}

#[derive(Debug, Clone)]
struct Template {
    inputs: Vec<usize>,
    output: Option<usize>,
}

struct Blueprint {
    document: OntologyDocument,
    /// Every concept of each family tree, aliases included.
    families: Vec<Vec<String>>,
    access_leaves: Vec<String>,
    templates: Vec<Template>,
}

fn build_tree(
    root: String,
    depth: usize,
    branching: usize,
    alias_probability: f64,
    rng: &mut ChaCha8Rng,
    doc: &mut OntologyDocument,
) -> (Vec<String>, Vec<String>) {
    let mut all = Vec::new();
    let mut leaves = Vec::new();
    let mut frontier = vec![(root, 0usize)];
    while let Some((node, level)) = frontier.pop() {
        doc.concepts.push(node.clone());
        all.push(node.clone());
        if rng.gen_bool(alias_probability) {
            let alias = format!("{node}~eq");
            doc.concepts.push(alias.clone());
            doc.equivalences.push([node.clone(), alias.clone()]);
            all.push(alias);
        }
        if level == depth {
            leaves.push(node);
            continue;
        }
        for k in 0..branching {
            let child = format!("{node}.{k}");
            doc.subsumption.push([node.clone(), child.clone()]);
            frontier.push((child, level + 1));
        }
    }
    (all, leaves)
}

fn blueprint(config: &GeneratorConfig, seed: u64) -> Blueprint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut document = OntologyDocument {
        id: ONTOLOGY_ID.to_string(),
        ..OntologyDocument::default()
    };
    let families = (0..config.families)
        .map(|f| {
            build_tree(
                format!("c{f}"),
                config.depth,
                config.branching,
                config.alias_probability,
                &mut rng,
                &mut document,
            )
            .0
        })
        .collect();
    let access_leaves = if config.access {
        build_tree(ACCESS_ROOT.to_string(), 2, 2, 0.0, &mut rng, &mut document).1
    } else {
        Vec::new()
    };
    let n = config.families;
    let templates = (0..n)
        .map(|f| {
            let arity = rng.gen_range(0..=config.max_inputs);
            Template {
                inputs: (0..arity).map(|i| (f + 1 + i) % n).collect(),
                output: rng.gen_bool(0.8).then_some((f + n - 1) % n),
            }
        })
        .collect();
    Blueprint {
        document,
        families,
        access_leaves,
        templates,
    }
}

/// The synthetic ontology alone.
pub fn generate_ontology(config: &GeneratorConfig, seed: u64) -> Result<Ontology, SimError> {
    config.check()?;
    Ontology::from_document(blueprint(config, seed).document).map_err(|e| SimError::Config(e.to_string()))
}

fn concept(name: &str) -> ConceptRef {
    ConceptRef::new(ONTOLOGY_ID, name)
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [String]) -> &'a str {
    items.choose(rng).expect("families are never empty")
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn random_nfps(config: &GeneratorConfig, bp: &Blueprint, rng: &mut ChaCha8Rng) -> Vec<NonFunctionalProperty> {
    let mut nfps: Vec<NonFunctionalProperty> = config
        .quantitative
        .iter()
        .map(|r| NonFunctionalProperty::quantitative(r.name.clone(), round2(rng.gen_range(r.min..=r.max)), r.operator))
        .collect();
    if !bp.access_leaves.is_empty() {
        nfps.push(NonFunctionalProperty::qualitative(
            "access",
            concept(pick(rng, &bp.access_leaves)),
        ));
    }
    nfps
}

fn random_operation(family: usize, config: &GeneratorConfig, bp: &Blueprint, rng: &mut ChaCha8Rng) -> Operation {
    let template = &bp.templates[family];
    let ty = TypeRef::new("rust", "String");
    Operation {
        concept: NamedConcept {
            name: format!("op{family}"),
            semantic: concept(pick(rng, &bp.families[family])),
        },
        inputs: template
            .inputs
            .iter()
            .enumerate()
            .map(|(k, &f)| Parameter {
                name: format!("in{k}"),
                ty: ty.clone(),
                semantic: concept(pick(rng, &bp.families[f])),
            })
            .collect(),
        output: template.output.map(|f| OutputSpec {
            ty: ty.clone(),
            semantic: concept(pick(rng, &bp.families[f])),
        }),
        nfps: random_nfps(config, bp, rng),
    }
}

/// `n` services over a synthetic ontology. The ontology depends only on
/// `ontology_seed`, the services on both seeds.
pub fn generate_population(
    n: usize,
    config: &GeneratorConfig,
    ontology_seed: u64,
    rng_seed: u64,
) -> Result<World, SimError> {
    if n == 0 {
        return Err(SimError::EmptyPopulation);
    }
    config.check()?;
    let bp = blueprint(config, ontology_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let services = (0..n)
        .map(|i| {
            let family = rng.gen_range(0..config.families);
            let ops = rng.gen_range(1..=config.max_operations);
            let operations = (0..ops)
                .map(|k| random_operation((family + k) % config.families, config, &bp, &mut rng))
                .collect();
            Service::new(format!("svc-{i:04}"), Interface::new(operations))
        })
        .collect();
    let ontology = Ontology::from_document(bp.document).map_err(|e| SimError::Config(e.to_string()))?;
    Ok(World { ontology, services })
}

fn random_profile(app: String, base: &Service, rng: &mut ChaCha8Rng) -> ApplicationProfile {
    let mut required = base.interface.clone();
    for op in &mut required.operations {
        for nfp in &mut op.nfps {
            if let NonFunctionalProperty::Quantitative { value, .. } = nfp {
                *value = round2(*value * rng.gen_range(0.8..1.2));
            }
        }
    }
    let mut names: Vec<String> = required
        .operations
        .iter()
        .flat_map(|op| op.nfps.iter().map(|p| p.name().to_string()))
        .collect();
    names.sort();
    names.dedup();
    let raw: Vec<f64> = names.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = QosWeights::from_pairs(names.iter().cloned().zip(raw.iter().map(|w| w / total)))
        .unwrap_or_else(|_| QosWeights::uniform(names.iter().cloned()));
    let mut profile = ApplicationProfile::new(app, required).with_weights(weights);
    if base.interface.len() > 1 && rng.gen_bool(0.3) {
        let first = base.interface.operations[0].name().to_string();
        profile = profile.with_operations([first]);
    }
    profile
}

/// A churn trace of `events` events over `world`'s services, binding up to
/// `apps` applications along the way.
pub fn generate_trace(world: &World, apps: usize, events: usize, seed: u64) -> ChurnTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut registered: Vec<usize> = Vec::new();
    let mut pool: Vec<usize> = (0..world.services.len()).collect();
    let mut bound = 0;
    let mut at = 0u64;
    let mut out = Vec::with_capacity(events);
    for _ in 0..events {
        at += rng.gen_range(0..=2);
        let roll: f64 = rng.gen();
        let kind = if registered.is_empty() || (roll < 0.45 && !pool.is_empty()) {
            let k = pool.swap_remove(rng.gen_range(0..pool.len()));
            registered.push(k);
            EventKind::Register(world.services[k].to_descriptor())
        } else if roll < 0.8 || bound >= apps {
            let k = registered.swap_remove(rng.gen_range(0..registered.len()));
            pool.push(k);
            EventKind::Unregister(world.services[k].id.0.clone())
        } else {
            let base = &world.services[rng.gen_range(0..world.services.len())];
            let profile = random_profile(format!("app-{bound:03}"), base, &mut rng);
            bound += 1;
            EventKind::Bind(profile.to_descriptor())
        };
        out.push(TraceEvent { at, kind });
    }
    ChurnTrace { events: out }
}
