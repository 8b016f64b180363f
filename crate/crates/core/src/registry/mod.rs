//! The live service environment and its application bindings.
//!
//! A [`Registry`] is a single-writer state machine: every call to
//! [`Registry::register`], [`Registry::unregister`] or [`Registry::bind`] is
//! one atomic event. Appearances may move applications to a closer service;
//! departures move affected applications down the substitution plan, ending
//! at a proxy that queues calls until something suitable shows up.

pub mod plan;
pub mod proxy;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::matching::match_interfaces;
use crate::model::{validate_interface, validate_service, Diagnostic, Service, ServiceId};
use crate::ontology::{ConceptMatcher, MatchValue};

pub use plan::{
    compute_plan, degrees_to, ApplicationProfile, BindingMode, PlanEntry, ProfileDescriptor, ProfileError,
    SubstitutionPlan, Tier,
};
pub use proxy::{PendingCall, ProxyQueue, DEFAULT_CAPACITY};

/// Degrees closer than this are ties.
const DEGREE_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("service `{0}` is already registered")]
    Duplicate(ServiceId),
    #[error("service `{0}` is not known")]
    Unknown(ServiceId),
    #[error("{owner}: {} unresolved reference(s), first: {}", .diagnostics.len(), .diagnostics[0])]
    Invalid {
        owner: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("service `{service}`: {source}")]
    Model {
        service: ServiceId,
        source: crate::model::ModelError,
    },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("application `{0}` is already bound")]
    AppExists(String),
    #[error("application `{0}` is not bound")]
    UnknownApp(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegistryConfig {
    pub proxy_capacity: usize,
    /// Logical time a call may wait in a proxy queue; `None` waits forever.
    pub proxy_timeout: Option<u64>,
}

impl Default for RegistryConfig {
    fn default() -> Self {
        Self {
            proxy_capacity: DEFAULT_CAPACITY,
            proxy_timeout: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Binding {
    pub app: String,
    pub service: Option<ServiceId>,
    pub bound_at: u64,
    pub mode: BindingMode,
    /// QoS degree to the application's reference when the binding was made.
    pub degree: Option<f64>,
}

impl Binding {
    pub fn is_degraded(&self) -> bool {
        self.mode == BindingMode::SubsumeFallback
    }
}

/// One binding change caused by an event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rebind {
    pub app: String,
    pub from: Option<ServiceId>,
    pub to: Option<ServiceId>,
    pub mode: BindingMode,
    pub tier: Option<Tier>,
    pub degree: Option<f64>,
    /// Calls replayed from the proxy queue onto the new service.
    pub flushed: Vec<PendingCall>,
}

/// Result of a departure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Departure {
    /// Plan judged against the departed service alone.
    pub plan: SubstitutionPlan,
    /// Per affected application, the plan under its profile.
    pub app_plans: BTreeMap<String, SubstitutionPlan>,
    pub rebinds: Vec<Rebind>,
}

/// Where a call was sent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallRoute {
    Delivered(ServiceId),
    Queued(u64),
    /// Proxy queue full.
    Rejected,
}

/// One line of the decision log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionLine {
    pub event: String,
    pub service: Option<String>,
    pub app: Option<String>,
    pub chosen: Option<String>,
    pub tier: Option<String>,
    pub degree: Option<f64>,
    pub latency_us: f64,
}

impl DecisionLine {
    pub fn from_rebind(event: &str, service: Option<&ServiceId>, r: &Rebind, latency_us: f64) -> Self {
        Self {
            event: event.to_string(),
            service: service.map(|s| s.0.clone()),
            app: Some(r.app.clone()),
            chosen: r.to.as_ref().map(|s| s.0.clone()),
            tier: Some(r.tier.map_or(r.mode.as_str(), Tier::as_str).to_string()),
            degree: r.degree,
            latency_us,
        }
    }

    pub fn from_binding(b: &Binding, latency_us: f64) -> Self {
        Self {
            event: "bind".to_string(),
            service: None,
            app: Some(b.app.clone()),
            chosen: b.service.as_ref().map(|s| s.0.clone()),
            tier: Some(b.mode.as_str().to_string()),
            degree: b.degree,
            latency_us,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    service: Service,
    seq: u64,
}

#[derive(Debug, Clone)]
struct AppState {
    profile: ApplicationProfile,
    binding: Binding,
    queue: ProxyQueue,
}

pub struct Registry<M> {
    sem: M,
    config: RegistryConfig,
    clock: u64,
    next_seq: u64,
    services: BTreeMap<ServiceId, Entry>,
    departed: BTreeMap<ServiceId, Service>,
    apps: BTreeMap<String, AppState>,
}

impl<M: ConceptMatcher> Registry<M> {
    pub fn new(sem: M) -> Self {
        Self::with_config(sem, RegistryConfig::default())
    }

    pub fn with_config(sem: M, config: RegistryConfig) -> Self {
        Self {
            sem,
            config,
            clock: 0,
            next_seq: 0,
            services: BTreeMap::new(),
            departed: BTreeMap::new(),
            apps: BTreeMap::new(),
        }
    }

    pub fn semantics(&self) -> &M {
        &self.sem
    }

    pub fn now(&self) -> u64 {
        self.clock
    }

    /// Moves the logical clock forward and expires proxied calls that timed
    /// out. Earlier times are ignored.
    pub fn advance_to(&mut self, at: u64) -> Vec<(String, PendingCall)> {
        self.clock = self.clock.max(at);
        let now = self.clock;
        let mut out = Vec::new();
        for (app, state) in &mut self.apps {
            out.extend(state.queue.expire(now).into_iter().map(|c| (app.clone(), c)));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    pub fn contains(&self, id: &ServiceId) -> bool {
        self.services.contains_key(id)
    }

    pub fn service(&self, id: &ServiceId) -> Option<&Service> {
        self.services.get(id).map(|e| &e.service)
    }

    /// Registered services in registration order.
    pub fn services(&self) -> Vec<&Service> {
        let mut entries: Vec<&Entry> = self.services.values().collect();
        entries.sort_by_key(|e| e.seq);
        entries.into_iter().map(|e| &e.service).collect()
    }

    pub fn binding(&self, app: &str) -> Option<&Binding> {
        self.apps.get(app).map(|s| &s.binding)
    }

    pub fn bindings(&self) -> impl Iterator<Item = &Binding> {
        self.apps.values().map(|s| &s.binding)
    }

    pub fn profile(&self, app: &str) -> Option<&ApplicationProfile> {
        self.apps.get(app).map(|s| &s.profile)
    }

    pub fn queued(&self, app: &str) -> usize {
        self.apps.get(app).map_or(0, |s| s.queue.len())
    }

    /// Adds a service and lets bound applications move to it when it is
    /// closer to what they asked for.
    pub fn register(&mut self, service: Service) -> Result<Vec<Rebind>, RegistryError> {
        if self.services.contains_key(&service.id) {
            return Err(RegistryError::Duplicate(service.id));
        }
        service.check_invariants().map_err(|source| RegistryError::Model {
            service: service.id.clone(),
            source,
        })?;
        let diagnostics = validate_service(&service, &self.sem);
        if !diagnostics.is_empty() {
            return Err(RegistryError::Invalid {
                owner: format!("service `{}`", service.id),
                diagnostics,
            });
        }
        let id = service.id.clone();
        let seq = self.next_seq;
        self.next_seq += 1;
        self.departed.remove(&id);
        self.services.insert(id.clone(), Entry { service, seq });

        let apps: Vec<String> = self.apps.keys().cloned().collect();
        let mut rebinds = Vec::new();
        for app in apps {
            if let Some(r) = self.on_appearance(&app, &id) {
                rebinds.push(r);
            }
        }
        Ok(rebinds)
    }

    fn on_appearance(&mut self, app: &str, new_id: &ServiceId) -> Option<Rebind> {
        let state = &self.apps[app];
        let binding = state.binding.clone();
        match binding.mode {
            BindingMode::Direct | BindingMode::Subset => {
                let current = binding.service.as_ref()?;
                let new_ifc = &self.services[new_id].service.interface;
                let cur_ifc = &self.services.get(current)?.service.interface;
                let relation = match_interfaces(&self.sem, new_ifc, cur_ifc).value;
                let fits = plan::satisfies(&self.sem, new_ifc, &state.profile);
                let tier = match relation {
                    MatchValue::Exact => Tier::Equivalent,
                    MatchValue::PlugIn => Tier::AlmostEquivalent,
                    _ if binding.mode == BindingMode::Subset => Tier::Subset,
                    _ => return None,
                };
                if !fits {
                    return None;
                }
                let (ids, degrees) = self.population_degrees(&state.profile, &[current, new_id]);
                let of = |id: &ServiceId| ids.iter().position(|x| x == id).map(|k| degrees[k]);
                let (d_new, d_cur) = (of(new_id)?, of(current)?);
                if d_new < d_cur - DEGREE_EPS {
                    let mode = plan::mode_for(
                        &self.sem,
                        new_ifc,
                        &state.profile.required,
                        state.profile.operations.as_deref(),
                    );
                    Some(self.rebind(app, Some(new_id.clone()), mode, Some(tier), Some(d_new)))
                } else {
                    None
                }
            }
            BindingMode::SubsumeFallback | BindingMode::Proxied => {
                let (to, mode, degree) = self.select(&state.profile)?;
                Some(self.rebind(app, Some(to), mode, None, Some(degree)))
            }
        }
    }

    /// Degrees to the profile's reference for every registered service that
    /// satisfies it, plus the `extra` services even when they do not.
    fn population_degrees(&self, profile: &ApplicationProfile, extra: &[&ServiceId]) -> (Vec<ServiceId>, Vec<f64>) {
        let members: Vec<&Service> = self
            .services()
            .into_iter()
            .filter(|s| extra.contains(&&s.id) || plan::satisfies(&self.sem, &s.interface, profile))
            .collect();
        let ifcs: Vec<_> = members.iter().map(|s| &s.interface).collect();
        let degrees = degrees_to(
            &self.sem,
            &profile.required,
            profile.operations.as_deref(),
            &profile.weights,
            &ifcs,
        );
        (members.into_iter().map(|s| s.id.clone()).collect(), degrees)
    }

    /// Best registered service for the profile: lowest degree, earliest
    /// registration on ties.
    fn select(&self, profile: &ApplicationProfile) -> Option<(ServiceId, BindingMode, f64)> {
        let (ids, degrees) = self.population_degrees(profile, &[]);
        let mut best: Option<(usize, f64)> = None;
        for (k, &d) in degrees.iter().enumerate() {
            if best.is_none_or(|(_, b)| d < b - DEGREE_EPS) {
                best = Some((k, d));
            }
        }
        let (k, d) = best?;
        let id = ids[k].clone();
        let mode = plan::mode_for(
            &self.sem,
            &self.services[&id].service.interface,
            &profile.required,
            profile.operations.as_deref(),
        );
        Some((id, mode, d))
    }

    fn rebind(
        &mut self,
        app: &str,
        to: Option<ServiceId>,
        mode: BindingMode,
        tier: Option<Tier>,
        degree: Option<f64>,
    ) -> Rebind {
        let now = self.clock;
        let state = self.apps.get_mut(app).expect("app exists");
        let from = state.binding.service.take();
        let flushed = if to.is_some() { state.queue.drain() } else { Vec::new() };
        state.binding = Binding {
            app: app.to_string(),
            service: to.clone(),
            bound_at: now,
            mode,
            degree,
        };
        Rebind {
            app: app.to_string(),
            from,
            to,
            mode,
            tier,
            degree,
            flushed,
        }
    }

    /// Removes a service and moves every application bound to it to the head
    /// of its substitution plan, or to the proxy.
    pub fn unregister(&mut self, id: &ServiceId) -> Result<Departure, RegistryError> {
        let entry = self
            .services
            .remove(id)
            .ok_or_else(|| RegistryError::Unknown(id.clone()))?;
        let departed = entry.service;
        let candidates = self.services();
        let general = compute_plan(&self.sem, &departed, None, &candidates);
        let affected: Vec<String> = self
            .apps
            .iter()
            .filter(|(_, s)| s.binding.service.as_ref() == Some(id))
            .map(|(a, _)| a.clone())
            .collect();
        let mut app_plans = BTreeMap::new();
        for app in &affected {
            let plan = compute_plan(&self.sem, &departed, Some(&self.apps[app].profile), &candidates);
            app_plans.insert(app.clone(), plan);
        }
        let mut rebinds = Vec::new();
        for app in affected {
            let r = match app_plans[&app].head() {
                Some((tier, e)) => {
                    let (to, mode, degree) = (e.service.clone(), e.mode, e.degree);
                    self.rebind(&app, Some(to), mode, Some(tier), Some(degree))
                }
                None => self.rebind(&app, None, BindingMode::Proxied, None, None),
            };
            rebinds.push(r);
        }
        self.departed.insert(id.clone(), departed);
        Ok(Departure {
            plan: general,
            app_plans,
            rebinds,
        })
    }

    /// Binds a new application to the closest service satisfying its
    /// profile, or to the proxy when none does.
    pub fn bind(&mut self, profile: ApplicationProfile) -> Result<Binding, RegistryError> {
        profile.check()?;
        if self.apps.contains_key(&profile.app) {
            return Err(RegistryError::AppExists(profile.app));
        }
        let diagnostics = validate_interface(&profile.required, "interface", &self.sem);
        if !diagnostics.is_empty() {
            return Err(RegistryError::Invalid {
                owner: format!("profile `{}`", profile.app),
                diagnostics,
            });
        }
        let (service, mode, degree) = match self.select(&profile) {
            Some((id, mode, d)) => (Some(id), mode, Some(d)),
            None => (None, BindingMode::Proxied, None),
        };
        let binding = Binding {
            app: profile.app.clone(),
            service,
            bound_at: self.clock,
            mode,
            degree,
        };
        self.apps.insert(
            profile.app.clone(),
            AppState {
                profile,
                binding: binding.clone(),
                queue: ProxyQueue::new(self.config.proxy_capacity, self.config.proxy_timeout),
            },
        );
        Ok(binding)
    }

    /// The plan a departure of `id` would produce, without changing anything.
    ///
    /// `id` may be registered or already departed.
    pub fn plan_for(
        &self,
        id: &ServiceId,
        profile: Option<&ApplicationProfile>,
    ) -> Result<SubstitutionPlan, RegistryError> {
        let departed = self
            .services
            .get(id)
            .map(|e| &e.service)
            .or_else(|| self.departed.get(id))
            .ok_or_else(|| RegistryError::Unknown(id.clone()))?;
        let candidates: Vec<&Service> = self.services().into_iter().filter(|s| &s.id != id).collect();
        Ok(compute_plan(&self.sem, departed, profile, &candidates))
    }

    /// Sends a call from `app` to its service, or queues it at the proxy.
    pub fn route_call(&mut self, app: &str, operation: &str) -> Result<CallRoute, RegistryError> {
        let now = self.clock;
        let state = self
            .apps
            .get_mut(app)
            .ok_or_else(|| RegistryError::UnknownApp(app.to_string()))?;
        Ok(match &state.binding.service {
            Some(id) => CallRoute::Delivered(id.clone()),
            None => match state.queue.push(operation, now) {
                Some(id) => CallRoute::Queued(id),
                None => CallRoute::Rejected,
            },
        })
    }

    /// Every non-proxied binding points at a registered service, and every
    /// proxied one points nowhere.
    pub fn check_bindings(&self) -> Result<(), String> {
        for b in self.bindings() {
            match (&b.service, b.mode) {
                (None, BindingMode::Proxied) => {}
                (Some(id), mode) if mode != BindingMode::Proxied => {
                    if !self.services.contains_key(id) {
                        return Err(format!("`{}` bound to unregistered `{id}`", b.app));
                    }
                }
                _ => return Err(format!("`{}` has an inconsistent binding", b.app)),
            }
        }
        Ok(())
    }
}
