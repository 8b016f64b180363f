#![allow(dead_code)]

use std::path::PathBuf;

use servsub::model::parse_service;
use servsub::{ApplicationProfile, Ontologies, Ontology, Service};

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn fixture(rel: &str) -> String {
    let path = fixture_path(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn ontology(name: &str) -> Ontology {
    Ontology::from_json(&fixture(&format!("ontologies/{name}.json"))).unwrap()
}

pub fn service(name: &str) -> Service {
    parse_service(&fixture(&format!("services/{name}.json"))).unwrap()
}

pub fn profile(name: &str) -> ApplicationProfile {
    ApplicationProfile::from_json(&fixture(&format!("profiles/{name}.json"))).unwrap()
}

/// The printing and network ontologies the three printing services use.
pub fn printing_world() -> Ontologies {
    Ontologies::try_from_iter([ontology("printing"), ontology("network")]).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
