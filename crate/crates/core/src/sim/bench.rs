//! Timing of matching, QoS scoring and departure planning over growing
//! synthetic populations.

use std::time::Instant;

use serde::Serialize;

use super::generate::{generate_population, GeneratorConfig};
use super::SimError;
use crate::matching::match_interfaces;
use crate::model::Interface;
use crate::ontology::MatchValue;
use crate::qos::QosWeights;
use crate::registry::{degrees_to, Registry};

const SIZES: [usize; 6] = [8, 25, 50, 100, 200, 400];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub services: usize,
    /// Ordered pairs matched.
    pub pairs: usize,
    /// Pairs whose match class allows substitution.
    pub substitutable: usize,
    pub match_ms: f64,
    pub qos_ms: f64,
    pub plan_ms: f64,
}

/// Sizes measured for a population of `n`: the fixed ladder up to `n`, then
/// `n` itself.
pub fn sizes(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = SIZES.iter().copied().filter(|&s| s < n).collect();
    out.push(n);
    out
}

fn ms(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1e3
}

/// One row per size: all ordered pairs matched, QoS degrees of every service
/// to its substitutes, and the plan for the departure of the first service.
pub fn bench(n: usize, seed: u64, config: &GeneratorConfig) -> Result<Vec<BenchRow>, SimError> {
    let world = generate_population(n, config, seed, seed.wrapping_add(1))?;
    let sem = &world.ontology;
    let mut rows = Vec::new();
    for size in sizes(n) {
        let services = &world.services[..size];

        let started = Instant::now();
        let mut substitutes: Vec<Vec<&Interface>> = vec![Vec::new(); size];
        let mut pairs = 0;
        for (i, a) in services.iter().enumerate() {
            for (j, b) in services.iter().enumerate() {
                if i == j {
                    continue;
                }
                pairs += 1;
                if matches!(
                    match_interfaces(sem, &b.interface, &a.interface).value,
                    MatchValue::Exact | MatchValue::PlugIn
                ) {
                    substitutes[i].push(&b.interface);
                }
            }
        }
        let match_ms = ms(started);

        let started = Instant::now();
        let weights = QosWeights::default();
        for (a, subs) in services.iter().zip(&substitutes) {
            if !subs.is_empty() {
                degrees_to(sem, &a.interface, None, &weights, subs);
            }
        }
        let qos_ms = ms(started);

        let mut registry = Registry::new(sem);
        for s in services {
            registry.register(s.clone()).expect("generated services are valid");
        }
        let started = Instant::now();
        registry
            .plan_for(&services[0].id, None)
            .expect("first service is registered");
        let plan_ms = ms(started);

        rows.push(BenchRow {
            services: size,
            pairs,
            substitutable: substitutes.iter().map(Vec::len).sum(),
            match_ms,
            qos_ms,
            plan_ms,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_ladder() {
        assert_eq!(sizes(8), vec![8]);
        assert_eq!(sizes(30), vec![8, 25, 30]);
        assert_eq!(sizes(100), vec![8, 25, 50, 100]);
        assert_eq!(sizes(3), vec![3]);
    }

    #[test]
    fn rows_cover_every_size() {
        let rows = bench(25, 5, &GeneratorConfig::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].pairs, 25 * 24);
        assert!(rows.iter().all(|r| r.match_ms >= 0.0 && r.plan_ms >= 0.0));
    }
}
