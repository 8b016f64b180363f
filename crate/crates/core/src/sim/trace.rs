//! Churn traces: timestamped register / unregister / bind events.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::model::ServiceDescriptor;
use crate::registry::ProfileDescriptor;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum EventKind {
    Register(ServiceDescriptor),
    /// Id of a service registered earlier in the trace.
    Unregister(String),
    Bind(ProfileDescriptor),
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Register(_) => "register",
            Self::Unregister(_) => "unregister",
            Self::Bind(_) => "bind",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Logical timestamp.
    pub at: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChurnTrace {
    pub events: Vec<TraceEvent>,
}

impl ChurnTrace {
    pub fn new(events: Vec<TraceEvent>) -> Result<Self, SimError> {
        let trace = Self { events };
        trace.check()?;
        Ok(trace)
    }

    pub fn from_json(json: &str) -> Result<Self, SimError> {
        let trace: Self = serde_json::from_str(json).map_err(SimError::Trace)?;
        trace.check()?;
        Ok(trace)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Timestamps never go back, and every unregister names an id some
    /// earlier event registered.
    pub fn check(&self) -> Result<(), SimError> {
        let mut last = 0;
        let mut seen = BTreeSet::new();
        for (index, e) in self.events.iter().enumerate() {
            if e.at < last {
                return Err(SimError::InvalidTrace {
                    index,
                    reason: format!("timestamp {} is before {}", e.at, last),
                });
            }
            last = e.at;
            match &e.kind {
                EventKind::Register(d) => {
                    seen.insert(d.id.as_str());
                }
                EventKind::Unregister(id) if !seen.contains(id.as_str()) => {
                    return Err(SimError::InvalidTrace {
                        index,
                        reason: format!("unregister of `{id}`, which was never registered"),
                    });
                }
                _ => {}
            }
        }
        Ok(())
    }
}
