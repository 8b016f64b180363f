mod common;

use common::{close, ontology, printing_world, profile, service};
use servsub::registry::{CallRoute, RegistryConfig, RegistryError};
use servsub::{ApplicationProfile, BindingMode, Ontologies, Registry, ServiceId, Tier};

fn id(s: &str) -> ServiceId {
    ServiceId::from(s)
}

fn printing_registry() -> Registry<Ontologies> {
    let mut reg = Registry::new(printing_world());
    for s in ["printing", "impression", "printer"] {
        reg.register(service(s)).unwrap();
    }
    reg
}

fn office_world() -> Ontologies {
    Ontologies::try_from_iter([ontology("printing"), ontology("network"), ontology("office")]).unwrap()
}

#[test]
fn bind_prefers_exact_requirement_match() {
    let mut reg = printing_registry();
    let b = reg.bind(profile("printing-user")).unwrap();
    assert_eq!(b.service, Some(id("printing")));
    assert_eq!(b.mode, BindingMode::Direct);
    assert!(!b.is_degraded());
}

#[test]
fn bind_without_candidates_is_proxied() {
    let mut reg = Registry::new(printing_world());
    let b = reg.bind(profile("printing-user")).unwrap();
    assert_eq!(b.service, None);
    assert_eq!(b.mode, BindingMode::Proxied);
    assert_eq!(b.degree, None);
    reg.check_bindings().unwrap();
}

#[test]
fn binding_an_app_twice_is_refused() {
    let mut reg = printing_registry();
    reg.bind(profile("printing-user")).unwrap();
    assert!(matches!(reg.bind(profile("sk")), Err(RegistryError::AppExists(a)) if a == "app1"));
}

#[test]
fn duplicate_and_unknown_services_are_refused() {
    let mut reg = printing_registry();
    assert!(matches!(
        reg.register(service("printing")),
        Err(RegistryError::Duplicate(_))
    ));
    assert!(matches!(reg.unregister(&id("nope")), Err(RegistryError::Unknown(_))));
    assert!(matches!(
        reg.plan_for(&id("nope"), None),
        Err(RegistryError::Unknown(_))
    ));
}

#[test]
fn service_with_unknown_ontology_is_refused() {
    let mut reg = Registry::new(ontology("printing"));
    assert!(matches!(
        reg.register(service("printing")),
        Err(RegistryError::Invalid { .. })
    ));
    assert!(reg.is_empty());
}

#[test]
fn registration_order_is_kept() {
    let reg = printing_registry();
    let ids: Vec<&str> = reg.services().iter().map(|s| s.id.as_str()).collect();
    assert_eq!(ids, ["printing", "impression", "printer"]);
}

#[test]
fn departure_moves_app_to_plan_head() {
    let mut reg = printing_registry();
    reg.bind(profile("printing-user")).unwrap();
    let dep = reg.unregister(&id("printing")).unwrap();
    assert_eq!(dep.rebinds.len(), 1);
    let r = &dep.rebinds[0];
    assert_eq!(r.from, Some(id("printing")));
    assert_eq!(r.to, Some(id("impression")));
    assert_eq!(r.tier, Some(Tier::Subsume));
    assert_eq!(r.mode, BindingMode::SubsumeFallback);
    let b = reg.binding("app1").unwrap();
    assert_eq!(b.service, Some(id("impression")));
    assert!(b.is_degraded());
    let plan = &dep.app_plans["app1"];
    assert_eq!(plan.ids(Tier::Subsume), ["impression", "printer"]);
    assert!(plan.t_equiv.is_empty() && plan.t_almost.is_empty() && plan.t_subset.is_empty());
    reg.check_bindings().unwrap();
}

#[test]
fn general_plan_ranks_plug_in_candidates() {
    let reg = printing_registry();
    let plan = reg.plan_for(&id("printing"), None).unwrap();
    assert!(!plan.proxy);
    let all: Vec<(Tier, &str)> = plan.entries().map(|(t, e)| (t, e.service.as_str())).collect();
    assert_eq!(all.len(), 2);
    for pair in plan.t_subsume.windows(2) {
        assert!(pair[0].degree <= pair[1].degree);
    }
    let plan = reg.plan_for(&id("printer"), None).unwrap();
    assert_eq!(plan.ids(Tier::AlmostEquivalent), ["printing"]);
    assert_eq!(plan.ids(Tier::Subsume), ["impression"]);
    assert_eq!(
        plan.head().map(|(t, e)| (t, e.mode)),
        Some((Tier::AlmostEquivalent, BindingMode::Direct))
    );
}

#[test]
fn plan_for_departed_service() {
    let mut reg = printing_registry();
    reg.unregister(&id("printing")).unwrap();
    let plan = reg.plan_for(&id("printing"), None).unwrap();
    assert_eq!(plan.service, id("printing"));
    assert_eq!(plan.entries().count(), 2);
}

#[test]
fn last_departure_proxies_and_queues_calls() {
    let mut reg = Registry::with_config(
        printing_world(),
        RegistryConfig {
            proxy_capacity: 2,
            proxy_timeout: None,
        },
    );
    reg.register(service("printing")).unwrap();
    reg.bind(profile("printing-user")).unwrap();
    assert_eq!(
        reg.route_call("app1", "Print").unwrap(),
        CallRoute::Delivered(id("printing"))
    );

    let dep = reg.unregister(&id("printing")).unwrap();
    assert!(dep.plan.proxy);
    assert_eq!(dep.rebinds[0].mode, BindingMode::Proxied);
    assert_eq!(dep.rebinds[0].to, None);
    assert!(matches!(reg.route_call("app1", "Print").unwrap(), CallRoute::Queued(_)));
    assert!(matches!(reg.route_call("app1", "Print").unwrap(), CallRoute::Queued(_)));
    assert_eq!(reg.route_call("app1", "Print").unwrap(), CallRoute::Rejected);
    assert_eq!(reg.queued("app1"), 2);

    let rebinds = reg.register(service("printing")).unwrap();
    assert_eq!(rebinds.len(), 1);
    assert_eq!(rebinds[0].to, Some(id("printing")));
    assert_eq!(rebinds[0].mode, BindingMode::Direct);
    assert_eq!(rebinds[0].flushed.len(), 2);
    assert_eq!(reg.queued("app1"), 0);
    reg.check_bindings().unwrap();
}

#[test]
fn proxied_calls_expire() {
    let mut reg = Registry::with_config(
        printing_world(),
        RegistryConfig {
            proxy_capacity: 8,
            proxy_timeout: Some(5),
        },
    );
    reg.bind(profile("printing-user")).unwrap();
    reg.route_call("app1", "Print").unwrap();
    reg.advance_to(3);
    reg.route_call("app1", "Print").unwrap();
    let expired = reg.advance_to(6);
    assert_eq!(expired.len(), 1);
    assert_eq!(expired[0].0, "app1");
    assert_eq!(reg.queued("app1"), 1);
    assert!(reg.advance_to(2).is_empty());
    assert_eq!(reg.now(), 6);
}

#[test]
fn unknown_app_call_is_an_error() {
    let mut reg = printing_registry();
    assert!(matches!(
        reg.route_call("ghost", "Print"),
        Err(RegistryError::UnknownApp(_))
    ));
}

#[test]
fn appearance_rebinds_only_on_improvement() {
    let mut reg = Registry::new(printing_world());
    reg.register(service("impression")).unwrap();
    reg.bind(profile("sk")).unwrap();
    // Printer is further from sk's offer than Impression.
    assert!(reg.register(service("printer")).unwrap().is_empty());
    assert_eq!(reg.binding("app1").unwrap().service, Some(id("impression")));
    let rebinds = reg.register(service("printing")).unwrap();
    assert_eq!(rebinds.len(), 1);
    assert_eq!(rebinds[0].to, Some(id("printing")));
    assert!(close(rebinds[0].degree.unwrap(), 0.2246, 1e-3));
}

#[test]
fn bind_ignores_subsume_only_candidates() {
    let mut reg = Registry::new(printing_world());
    reg.register(service("impression")).unwrap();
    let b = reg.bind(profile("printing-user")).unwrap();
    assert_eq!(b.mode, BindingMode::Proxied);
    let rebinds = reg.register(service("printing")).unwrap();
    assert_eq!(rebinds[0].to, Some(id("printing")));
    assert_eq!(rebinds[0].mode, BindingMode::Direct);
}

#[test]
fn appearance_lifts_degraded_binding() {
    let mut reg = printing_registry();
    reg.bind(profile("printing-user")).unwrap();
    reg.unregister(&id("printing")).unwrap();
    assert!(reg.binding("app1").unwrap().is_degraded());
    let rebinds = reg.register(service("printing")).unwrap();
    assert_eq!(rebinds.len(), 1);
    assert_eq!(rebinds[0].from, Some(id("impression")));
    assert_eq!(rebinds[0].to, Some(id("printing")));
    assert_eq!(rebinds[0].mode, BindingMode::Direct);
    assert!(!reg.binding("app1").unwrap().is_degraded());
}

#[test]
fn unrelated_churn_leaves_bindings_alone() {
    let mut reg = Registry::new(office_world());
    for s in ["printing", "impression", "printer"] {
        reg.register(service(s)).unwrap();
    }
    reg.bind(profile("printing-user")).unwrap();
    let before = reg.binding("app1").cloned();
    assert!(reg.register(service("ifc2")).unwrap().is_empty());
    let dep = reg.unregister(&id("ifc2")).unwrap();
    assert!(dep.rebinds.is_empty());
    assert!(dep.app_plans.is_empty());
    assert_eq!(reg.binding("app1").cloned(), before);
}

fn office_profile() -> ApplicationProfile {
    ApplicationProfile::new("office-app", service("ifc3").interface).with_operations(["laser-print", "flatbed-scan"])
}

#[test]
fn subset_profile_binds_to_larger_interface() {
    let mut reg = Registry::new(ontology("office"));
    reg.register(service("ifc2")).unwrap();
    let b = reg.bind(office_profile()).unwrap();
    assert_eq!(b.service, Some(id("ifc2")));
    assert_eq!(b.mode, BindingMode::Subset);
}

#[test]
fn more_specific_provider_does_not_satisfy() {
    let mut reg = Registry::new(ontology("office"));
    reg.register(service("ifc2")).unwrap();
    let p = ApplicationProfile::new("app", service("ifc1").interface).with_operations(["print", "scan"]);
    assert_eq!(reg.bind(p).unwrap().mode, BindingMode::Proxied);
}

#[test]
fn subset_tier_on_departure() {
    let mut reg = Registry::new(ontology("office"));
    reg.register(service("ifc3")).unwrap();
    reg.register(service("ifc2")).unwrap();
    let b = reg.bind(office_profile()).unwrap();
    assert_eq!(b.service, Some(id("ifc3")));
    assert_eq!(b.mode, BindingMode::Direct);
    let dep = reg.unregister(&id("ifc3")).unwrap();
    assert_eq!(dep.rebinds[0].to, Some(id("ifc2")));
    assert_eq!(dep.rebinds[0].tier, Some(Tier::Subset));
    assert_eq!(dep.rebinds[0].mode, BindingMode::Subset);
}

#[test]
fn almost_equivalent_interface_outranks_subset() {
    let mut reg = Registry::new(ontology("office"));
    for s in ["ifc3", "ifc2", "ifc1"] {
        reg.register(service(s)).unwrap();
    }
    reg.bind(office_profile()).unwrap();
    let dep = reg.unregister(&id("ifc3")).unwrap();
    let plan = &dep.app_plans["office-app"];
    assert_eq!(plan.ids(Tier::AlmostEquivalent), ["ifc1"]);
    assert_eq!(plan.ids(Tier::Subset), ["ifc2"]);
    assert_eq!(dep.rebinds[0].to, Some(id("ifc1")));
    assert_eq!(dep.rebinds[0].mode, BindingMode::Direct);
}
