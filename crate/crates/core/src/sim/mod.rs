//! Trace-driven simulation of service churn, synthetic populations and
//! timing benchmarks.

pub mod bench;
pub mod generate;
pub mod report;
pub mod trace;

use std::time::Instant;

use thiserror::Error;

use crate::model::ServiceId;
use crate::ontology::ConceptMatcher;
use crate::registry::{ApplicationProfile, Registry, RegistryConfig};

pub use bench::{bench, BenchRow};
pub use generate::{generate_population, generate_trace, GeneratorConfig, NfpRange, World};
pub use report::{Decision, RunReport, TimingStats, Timings};
pub use trace::{ChurnTrace, EventKind, TraceEvent};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("malformed trace: {0}")]
    Trace(serde_json::Error),
    #[error("trace event {index}: {reason}")]
    InvalidTrace { index: usize, reason: String },
    #[error("population size must be at least 1")]
    EmptyPopulation,
    #[error("invalid generator configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimConfig {
    pub registry: RegistryConfig,
}

/// Replays `trace` through a fresh registry, one event at a time.
///
/// Events the registry refuses (unresolved concepts, duplicate ids, bad
/// profiles) are recorded as diagnostics on their decision; the run goes on.
pub fn run_scenario<M: ConceptMatcher>(trace: &ChurnTrace, sem: M, config: SimConfig) -> Result<RunReport, SimError> {
    trace.check()?;
    let mut registry = Registry::with_config(sem, config.registry);
    let mut decisions = Vec::with_capacity(trace.len());
    let (mut matching, mut planning, mut all) = (Vec::new(), Vec::new(), Vec::new());

    for (index, event) in trace.events.iter().enumerate() {
        registry.advance_to(event.at);
        let started = Instant::now();
        let mut decision = Decision {
            index,
            at: event.at,
            event: event.kind.name(),
            service: None,
            app: None,
            binding: None,
            plan: None,
            rebinds: Vec::new(),
            diagnostics: Vec::new(),
            latency_us: 0.0,
        };
        match &event.kind {
            EventKind::Register(descriptor) => {
                decision.service = Some(descriptor.id.clone());
                match descriptor.clone().into_service() {
                    Ok(service) => match registry.register(service) {
                        Ok(rebinds) => decision.rebinds = rebinds,
                        Err(e) => decision.diagnostics.push(e.to_string()),
                    },
                    Err(e) => decision.diagnostics.push(e.to_string()),
                }
            }
            EventKind::Unregister(id) => {
                decision.service = Some(id.clone());
                match registry.unregister(&ServiceId::new(id.clone())) {
                    Ok(departure) => {
                        decision.plan = Some(departure.plan);
                        decision.rebinds = departure.rebinds;
                    }
                    Err(e) => decision.diagnostics.push(e.to_string()),
                }
            }
            EventKind::Bind(descriptor) => {
                decision.app = Some(descriptor.app.clone());
                match ApplicationProfile::from_descriptor(descriptor.clone()) {
                    Ok(profile) => match registry.bind(profile) {
                        Ok(binding) => decision.binding = Some(binding),
                        Err(e) => decision.diagnostics.push(e.to_string()),
                    },
                    Err(e) => decision.diagnostics.push(e.to_string()),
                }
            }
        }
        let latency = started.elapsed().as_secs_f64() * 1e6;
        decision.latency_us = latency;
        all.push(latency);
        match event.kind {
            EventKind::Unregister(_) => planning.push(latency),
            _ => matching.push(latency),
        }
        decisions.push(decision);
    }

    Ok(RunReport {
        decisions,
        timings: Timings {
            matching: TimingStats::from_samples(&matching),
            plan: TimingStats::from_samples(&planning),
            event: TimingStats::from_samples(&all),
        },
        bindings: registry.bindings().map(|b| (b.app.clone(), b.clone())).collect(),
    })
}
