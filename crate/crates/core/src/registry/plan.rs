//! Application profiles, candidate tiering and substitution plans.
//!
//! Everything here is pure: the registry feeds in the live services and gets
//! back ordered candidate lists.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::matching::{match_coverage, match_interfaces, match_interfaces_over};
use crate::model::{Interface, InterfaceDescriptor, ModelError, Service, ServiceId};
use crate::ontology::{ConceptMatcher, MatchValue};
use crate::qos::{qos_degree, Populations, QosError, QosWeights};

/// What an application needs from the service it is bound to.
///
/// The NFP values declared on `required`'s operations are the application's
/// desired QoS (the synthetic reference offer). `operations`, when set,
/// narrows the requirement to the named operations of `required`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplicationProfile {
    pub app: String,
    pub required: Interface,
    pub operations: Option<Vec<String>>,
    /// Empty means uniform over each reference operation's properties.
    pub weights: QosWeights,
}

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("malformed profile: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Weights(#[from] QosError),
    #[error("profile `{app}` names unknown operation `{operation}`")]
    UnknownOperation { app: String, operation: String },
    #[error("profile `{app}` names operation `{operation}` twice")]
    DuplicateOperation { app: String, operation: String },
    #[error("profile `{0}` selects no operations")]
    EmptySubset(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDescriptor {
    pub app: String,
    pub interface: InterfaceDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub weights: BTreeMap<String, f64>,
}

impl ApplicationProfile {
    pub fn new(app: impl Into<String>, required: Interface) -> Self {
        Self {
            app: app.into(),
            required,
            operations: None,
            weights: QosWeights::default(),
        }
    }

    pub fn with_weights(mut self, weights: QosWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_operations<S: Into<String>>(mut self, operations: impl IntoIterator<Item = S>) -> Self {
        self.operations = Some(operations.into_iter().map(Into::into).collect());
        self
    }

    pub fn from_json(json: &str) -> Result<Self, ProfileError> {
        let d: ProfileDescriptor = serde_json::from_str(json)?;
        Self::from_descriptor(d)
    }

    pub fn from_descriptor(d: ProfileDescriptor) -> Result<Self, ProfileError> {
        let profile = Self {
            app: d.app,
            required: d.interface.into_interface(),
            operations: d.operations,
            weights: QosWeights::new(d.weights)?,
        };
        profile.check()?;
        Ok(profile)
    }

    pub fn to_descriptor(&self) -> ProfileDescriptor {
        ProfileDescriptor {
            app: self.app.clone(),
            interface: InterfaceDescriptor::from(&self.required),
            operations: self.operations.clone(),
            weights: self.weights.iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn check(&self) -> Result<(), ProfileError> {
        if self.required.is_empty() {
            return Err(ModelError::EmptyInterface(self.app.clone()).into());
        }
        self.required.check(&self.app)?;
        if let Some(names) = &self.operations {
            if names.is_empty() {
                return Err(ProfileError::EmptySubset(self.app.clone()));
            }
            for (k, name) in names.iter().enumerate() {
                if self.required.position(name).is_none() {
                    return Err(ProfileError::UnknownOperation {
                        app: self.app.clone(),
                        operation: name.clone(),
                    });
                }
                if names[..k].contains(name) {
                    return Err(ProfileError::DuplicateOperation {
                        app: self.app.clone(),
                        operation: name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Indices of the required operations that matter.
    pub fn rows(&self) -> Vec<usize> {
        rows_of(&self.required, self.operations.as_deref())
    }

    /// Whether any required operation carries desired NFP values.
    pub fn has_reference_values(&self) -> bool {
        self.rows()
            .iter()
            .any(|&k| !self.required.operations[k].nfps.is_empty())
    }

    fn subset(&self) -> Option<&[String]> {
        self.operations.as_deref()
    }
}

fn rows_of(ifc: &Interface, subset: Option<&[String]>) -> Vec<usize> {
    match subset {
        Some(names) => names.iter().filter_map(|n| ifc.position(n)).collect(),
        None => (0..ifc.len()).collect(),
    }
}

/// How an application is attached to its service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BindingMode {
    /// The service matches the whole requirement (`Exact` or `PlugIn`).
    Direct,
    /// The service covers the required operations among others.
    Subset,
    /// Only a `Subsume` match was available; the binding is degraded.
    SubsumeFallback,
    /// No service; calls are queued.
    Proxied,
}

impl BindingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::Subset => "subset",
            Self::SubsumeFallback => "subsume-fallback",
            Self::Proxied => "proxied",
        }
    }
}

/// Candidate tiers, best first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Equivalent,
    AlmostEquivalent,
    Subset,
    Subsume,
}

impl Tier {
    pub const ALL: [Tier; 4] = [Tier::Equivalent, Tier::AlmostEquivalent, Tier::Subset, Tier::Subsume];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Equivalent => "equivalent",
            Self::AlmostEquivalent => "almost_equivalent",
            Self::Subset => "subset",
            Self::Subsume => "subsume",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanEntry {
    pub service: ServiceId,
    pub degree: f64,
    /// Match class that placed the candidate in its tier.
    pub class: MatchValue,
    /// Mode the application would be bound with.
    pub mode: BindingMode,
    /// For subset candidates, the candidate operations covering the requirement.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub operations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubstitutionPlan {
    pub service: ServiceId,
    pub t_equiv: Vec<PlanEntry>,
    pub t_almost: Vec<PlanEntry>,
    pub t_subset: Vec<PlanEntry>,
    pub t_subsume: Vec<PlanEntry>,
    /// No candidate at all: calls go to the proxy.
    pub proxy: bool,
}

impl SubstitutionPlan {
    pub fn tier(&self, tier: Tier) -> &[PlanEntry] {
        match tier {
            Tier::Equivalent => &self.t_equiv,
            Tier::AlmostEquivalent => &self.t_almost,
            Tier::Subset => &self.t_subset,
            Tier::Subsume => &self.t_subsume,
        }
    }

    fn tier_mut(&mut self, tier: Tier) -> &mut Vec<PlanEntry> {
        match tier {
            Tier::Equivalent => &mut self.t_equiv,
            Tier::AlmostEquivalent => &mut self.t_almost,
            Tier::Subset => &mut self.t_subset,
            Tier::Subsume => &mut self.t_subsume,
        }
    }

    /// The substitute to use: head of the best non-empty tier.
    pub fn head(&self) -> Option<(Tier, &PlanEntry)> {
        Tier::ALL.into_iter().find_map(|t| self.tier(t).first().map(|e| (t, e)))
    }

    pub fn entries(&self) -> impl Iterator<Item = (Tier, &PlanEntry)> {
        Tier::ALL
            .into_iter()
            .flat_map(move |t| self.tier(t).iter().map(move |e| (t, e)))
    }

    pub fn ids(&self, tier: Tier) -> Vec<&str> {
        self.tier(tier).iter().map(|e| e.service.as_str()).collect()
    }
}

fn is_substitutable(v: MatchValue) -> bool {
    matches!(v, MatchValue::Exact | MatchValue::PlugIn)
}

/// Coverage of the requirement by `provider`.
pub(crate) fn coverage<M: ConceptMatcher + ?Sized>(
    sem: &M,
    provider: &Interface,
    required: &Interface,
    subset: Option<&[String]>,
) -> MatchValue {
    match_coverage(sem, provider, required, subset)
        .map(|m| m.value)
        .unwrap_or(MatchValue::Fail)
}

/// Whether `provider` can serve the profile at all.
pub(crate) fn satisfies<M: ConceptMatcher + ?Sized>(
    sem: &M,
    provider: &Interface,
    profile: &ApplicationProfile,
) -> bool {
    is_substitutable(coverage(sem, provider, &profile.required, profile.subset()))
}

/// The mode `provider` would be bound with under `profile`.
pub(crate) fn mode_for<M: ConceptMatcher + ?Sized>(
    sem: &M,
    provider: &Interface,
    required: &Interface,
    subset: Option<&[String]>,
) -> BindingMode {
    let whole = subset.is_none_or(|s| s.len() == required.len());
    if whole && is_substitutable(match_interfaces(sem, provider, required).value) {
        BindingMode::Direct
    } else if is_substitutable(coverage(sem, provider, required, subset)) {
        BindingMode::Subset
    } else {
        BindingMode::SubsumeFallback
    }
}

/// Pairs each reference row with a candidate operation, when one is left.
fn qos_pairing<M: ConceptMatcher + ?Sized>(
    sem: &M,
    reference: &Interface,
    rows: &[usize],
    candidate: &Interface,
) -> Vec<Option<usize>> {
    let mut out = vec![None; rows.len()];
    if rows.len() <= candidate.len() {
        let names: Vec<&str> = rows.iter().map(|&k| reference.operations[k].name()).collect();
        if let Ok(m) = match_coverage(sem, candidate, reference, Some(&names)) {
            for (ri, cj) in m.pairing.map(|p| p.pairs).unwrap_or_default() {
                if let Some(r) = rows.iter().position(|&k| k == ri) {
                    out[r] = Some(cj);
                }
            }
        }
    } else {
        let sub = Interface::new(rows.iter().map(|&k| reference.operations[k].clone()).collect());
        let names: Vec<&str> = candidate.operations.iter().map(|o| o.name()).collect();
        if let Ok(m) = match_interfaces_over(sem, candidate, &sub, &names) {
            for (cj, r) in m.pairing.map(|p| p.pairs).unwrap_or_default() {
                out[r] = Some(cj);
            }
        }
    }
    out
}

/// QoS degree of each candidate to the reference rows.
///
/// The population of every reference operation is the reference value plus
/// the values of the candidate operations paired with it. Reference rows left
/// unpaired, and pairs whose properties cannot be compared, count as 1.
pub fn degrees_to<M: ConceptMatcher + ?Sized>(
    sem: &M,
    reference: &Interface,
    subset: Option<&[String]>,
    weights: &QosWeights,
    candidates: &[&Interface],
) -> Vec<f64> {
    let rows = rows_of(reference, subset);
    if rows.is_empty() {
        return vec![0.0; candidates.len()];
    }
    let pairings: Vec<Vec<Option<usize>>> = candidates
        .iter()
        .map(|c| qos_pairing(sem, reference, &rows, c))
        .collect();
    let pops: Vec<Populations> = rows
        .iter()
        .enumerate()
        .map(|(r, &k)| {
            let others = candidates
                .iter()
                .zip(&pairings)
                .filter_map(|(c, p)| p[r].map(|j| ("candidate", &c.operations[j])));
            Populations::lenient(("reference", &reference.operations[k]), others)
        })
        .collect();
    let row_weights: Vec<QosWeights> = rows
        .iter()
        .map(|&k| weights.for_operation(&reference.operations[k]))
        .collect();
    candidates
        .iter()
        .zip(&pairings)
        .map(|(c, p)| {
            let sum: f64 = rows
                .iter()
                .enumerate()
                .map(|(r, &k)| match p[r] {
                    Some(j) => qos_degree(
                        sem,
                        &reference.operations[k],
                        &c.operations[j],
                        &row_weights[r],
                        &pops[r],
                    )
                    .unwrap_or(1.0),
                    None => 1.0,
                })
                .sum();
            sum / rows.len() as f64
        })
        .collect()
}

/// Tiers every candidate against the departed service and orders each tier
/// by QoS degree, ties kept in candidate (registration) order.
///
/// With a profile, the subset tier and binding modes are judged against the
/// profile's requirement, and degrees are taken to the profile's desired
/// values when it declares any. Otherwise everything is judged against the
/// departed service itself.
pub fn compute_plan<M: ConceptMatcher + ?Sized>(
    sem: &M,
    departed: &Service,
    profile: Option<&ApplicationProfile>,
    candidates: &[&Service],
) -> SubstitutionPlan {
    let (required, subset) = match profile {
        Some(p) => (&p.required, p.subset()),
        None => (&departed.interface, None),
    };
    let mut tiered: Vec<(Tier, PlanEntry, &Interface)> = Vec::new();
    for c in candidates {
        let full = match_interfaces(sem, &c.interface, &departed.interface).value;
        let cover = match_coverage(sem, &c.interface, required, subset).ok();
        let cover_value = cover.as_ref().map_or(MatchValue::Fail, |m| m.value);
        let (tier, class) = match full {
            MatchValue::Exact => (Tier::Equivalent, full),
            MatchValue::PlugIn => (Tier::AlmostEquivalent, full),
            _ if is_substitutable(cover_value) => (Tier::Subset, cover_value),
            _ if full == MatchValue::Subsume || cover_value == MatchValue::Subsume => {
                (Tier::Subsume, MatchValue::Subsume)
            }
            _ => continue,
        };
        let mode = if tier == Tier::Subsume {
            BindingMode::SubsumeFallback
        } else {
            mode_for(sem, &c.interface, required, subset)
        };
        let operations = if tier == Tier::Subset {
            cover
                .and_then(|m| m.pairing)
                .map(|p| {
                    p.pairs
                        .iter()
                        .map(|&(_, j)| c.interface.operations[j].name().to_string())
                        .collect()
                })
                .unwrap_or_default()
        } else {
            Vec::new()
        };
        tiered.push((
            tier,
            PlanEntry {
                service: c.id.clone(),
                degree: 0.0,
                class,
                mode,
                operations,
            },
            &c.interface,
        ));
    }

    let ifcs: Vec<&Interface> = tiered.iter().map(|(_, _, i)| *i).collect();
    let empty = QosWeights::default();
    let degrees = match profile {
        Some(p) if p.has_reference_values() => degrees_to(sem, &p.required, p.subset(), &p.weights, &ifcs),
        Some(p) => degrees_to(sem, &departed.interface, None, &p.weights, &ifcs),
        None => degrees_to(sem, &departed.interface, None, &empty, &ifcs),
    };

    let mut plan = SubstitutionPlan {
        service: departed.id.clone(),
        t_equiv: Vec::new(),
        t_almost: Vec::new(),
        t_subset: Vec::new(),
        t_subsume: Vec::new(),
        proxy: false,
    };
    for ((tier, mut entry, _), degree) in tiered.into_iter().zip(degrees) {
        entry.degree = degree;
        plan.tier_mut(tier).push(entry);
    }
    for tier in Tier::ALL {
        plan.tier_mut(tier)
            .sort_by(|a, b| a.degree.partial_cmp(&b.degree).unwrap_or(std::cmp::Ordering::Equal));
    }
    plan.proxy = plan.head().is_none();
    plan
}
