//! Run reports: per-event decisions, timing aggregates, final bindings.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::registry::{Binding, DecisionLine, Rebind, SubstitutionPlan};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub index: usize,
    pub at: u64,
    pub event: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub app: Option<String>,
    /// Set for bind events that succeeded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binding: Option<Binding>,
    /// Set for unregister events.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<SubstitutionPlan>,
    pub rebinds: Vec<Rebind>,
    /// Why the event was not applied, if it was not.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    /// Wall-clock time spent on the event.
    pub latency_us: f64,
}

impl Decision {
    /// The event-log lines for this decision: one per binding change, or a
    /// single line when nothing moved.
    pub fn lines(&self) -> Vec<DecisionLine> {
        let service = self.service.as_ref().map(|s| crate::model::ServiceId::new(s.clone()));
        if let Some(b) = &self.binding {
            return vec![DecisionLine::from_binding(b, self.latency_us)];
        }
        if self.rebinds.is_empty() {
            return vec![DecisionLine {
                event: self.event.to_string(),
                service: self.service.clone(),
                app: self.app.clone(),
                chosen: None,
                tier: None,
                degree: None,
                latency_us: self.latency_us,
            }];
        }
        self.rebinds
            .iter()
            .map(|r| DecisionLine::from_rebind(self.event, service.as_ref(), r, self.latency_us))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TimingStats {
    pub count: usize,
    pub mean_us: f64,
    pub p95_us: f64,
}

impl TimingStats {
    /// Nearest-rank 95th percentile.
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = ((0.95 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        Self {
            count: sorted.len(),
            mean_us: sorted.iter().sum::<f64>() / sorted.len() as f64,
            p95_us: sorted[rank - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Timings {
    /// Register and bind events, dominated by matching.
    #[serde(rename = "match")]
    pub matching: TimingStats,
    /// Unregister events, dominated by plan computation.
    pub plan: TimingStats,
    /// Every event.
    pub event: TimingStats,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunReport {
    pub decisions: Vec<Decision>,
    pub timings: Timings,
    pub bindings: BTreeMap<String, Binding>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn lines(&self) -> Vec<DecisionLine> {
        self.decisions.iter().flat_map(Decision::lines).collect()
    }

    /// Decisions with timing removed, for comparing runs.
    pub fn decisions_without_timing(&self) -> Vec<Decision> {
        self.decisions
            .iter()
            .cloned()
            .map(|mut d| {
                d.latency_us = 0.0;
                d
            })
            .collect()
    }
}
