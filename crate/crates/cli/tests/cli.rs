use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(rel: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures");
    root.join(rel).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_servsub")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn printing_args(rest: &[&str]) -> Vec<String> {
    let mut args = vec![
        "-o".to_string(),
        fixture("ontologies/printing.json"),
        "-o".to_string(),
        fixture("ontologies/network.json"),
    ];
    args.extend(rest.iter().map(|s| s.to_string()));
    args
}

fn with_cmd(cmd: &str, args: Vec<String>) -> Vec<String> {
    std::iter::once(cmd.to_string()).chain(args).collect()
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

#[test]
fn match_reports_class_and_pairing() {
    let args = with_cmd(
        "match",
        printing_args(&[&fixture("services/printing.json"), &fixture("services/printer.json")]),
    );
    let out = stdout(&refs(&args));
    assert!(out.starts_with("M(printing, printer) = PlugIn"), "{out}");
    assert!(out.contains("Printing -> Printer: PlugIn"));
}

#[test]
fn match_over_subset() {
    let out = stdout(&[
        "match",
        "-o",
        &fixture("ontologies/office.json"),
        &fixture("services/ifc1.json"),
        &fixture("services/ifc2.json"),
        "--over",
        "print,scan",
    ]);
    assert!(out.contains("M(ifc1, ifc2) = PlugIn"), "{out}");
    assert!(out.contains("scan -> flatbed-scan"));
}

#[test]
fn distance_with_weights() {
    let out = stdout(&[
        "distance",
        "-o",
        &fixture("ontologies/office.json"),
        &fixture("services/ifc1.json"),
        &fixture("services/ifc3.json"),
        "--weights",
        "0.3,0.7",
    ]);
    assert_eq!(out.trim(), "D(ifc1, ifc3) = 0.200000");
}

#[test]
fn qos_degree_against_profile() {
    let args = with_cmd(
        "qos-degree",
        printing_args(&[
            &fixture("profiles/sk.json"),
            &fixture("services/printing.json"),
            "--with",
            &fixture("services/impression.json"),
            "--with",
            &fixture("services/printer.json"),
            "--weights",
            "price=0.6,access=0.2,nbPage=0.2",
        ]),
    );
    let out = stdout(&refs(&args));
    assert!(out.contains("nbPage (>): mean 55.0000"), "{out}");
    assert!(out.contains("QoS(printing, app1) = 0.2246"), "{out}");
}

#[test]
fn bad_weights_are_reported() {
    let args = with_cmd(
        "qos-degree",
        printing_args(&[
            &fixture("services/printing.json"),
            &fixture("services/printer.json"),
            "--weights",
            "price",
        ]),
    );
    let out = run(&refs(&args));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("name=value"));
}

#[test]
fn explain_lists_tiers() {
    let args = with_cmd(
        "explain",
        printing_args(&[
            &fixture("services/printing.json"),
            &fixture("services/impression.json"),
            &fixture("services/printer.json"),
            "--profile",
            &fixture("profiles/printing-user.json"),
        ]),
    );
    let out = stdout(&refs(&args));
    assert!(out.contains("subsume            [impression"), "{out}");
    assert!(out.contains("chosen impression from subsume"));
}

#[test]
fn explain_json() {
    let args = with_cmd(
        "explain",
        printing_args(&[
            &fixture("services/printer.json"),
            &fixture("services/printing.json"),
            "--json",
        ]),
    );
    let plan: serde_json::Value = serde_json::from_str(&stdout(&refs(&args))).unwrap();
    assert_eq!(plan["t_almost"][0]["service"], "printing");
    assert_eq!(plan["proxy"], false);
}

#[test]
fn simulate_trace() {
    let args = with_cmd(
        "simulate",
        printing_args(&["--trace", &fixture("traces/printing-departure.json")]),
    );
    let out = stdout(&refs(&args));
    assert!(out.contains("final app1 -> impression (subsume-fallback)"), "{out}");
    let first: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(first["event"], "register");
}

#[test]
fn simulate_generated_json() {
    let out = stdout(&[
        "simulate",
        "--generate",
        "12",
        "--events",
        "30",
        "--seed",
        "4",
        "--json",
    ]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["decisions"].as_array().unwrap().len(), 30);
    assert!(report["timings"]["event"]["count"].as_u64().unwrap() == 30);
}

#[test]
fn simulate_needs_a_source() {
    assert!(!run(&["simulate"]).status.success());
}

#[test]
fn bench_prints_ladder() {
    let out = stdout(&["bench", "--n", "30"]);
    let sizes: Vec<&str> = out
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(sizes, ["8", "25", "30"]);
}
