use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use servsub::matching::interface_distance;
use servsub::model::parse_service;
use servsub::qos::{eta, z_score};
use servsub::registry::compute_plan;
use servsub::sim::{bench, generate_population, generate_trace, run_scenario, ChurnTrace, GeneratorConfig, SimConfig};
use servsub::{
    match_interfaces, match_interfaces_over, qos_degree, ApplicationProfile, Interface, Ontologies, Ontology,
    Populations, QosWeights, Service, Tier, WeightVector,
};

#[derive(Parser)]
#[command(name = "servsub", version, about = "Semantic service matching and substitution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct World {
    /// Ontology document; repeat for several.
    #[arg(short, long = "ontology", required = true)]
    ontologies: Vec<PathBuf>,
}

impl World {
    fn load(&self) -> Result<Ontologies> {
        let mut out = Ontologies::new();
        for path in &self.ontologies {
            let o = Ontology::from_json(&read(path)?).with_context(|| format!("loading {}", path.display()))?;
            out.insert(o)?;
        }
        Ok(out)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Match class of two interfaces, per operation.
    Match {
        #[command(flatten)]
        world: World,
        first: PathBuf,
        second: PathBuf,
        /// Only match these operations of the first interface.
        #[arg(long, value_delimiter = ',')]
        over: Option<Vec<String>>,
    },
    /// Semantic distance between two interfaces.
    Distance {
        #[command(flatten)]
        world: World,
        first: PathBuf,
        second: PathBuf,
        /// Operation weights, in the first interface's order.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
    /// QoS degree of a candidate operation to a reference, with the z / η table.
    QosDegree {
        #[command(flatten)]
        world: World,
        /// Service or application profile supplying the reference values.
        reference: PathBuf,
        candidate: PathBuf,
        /// Further population members.
        #[arg(long = "with")]
        others: Vec<PathBuf>,
        /// Property weights as name=value; uniform when omitted.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<String>>,
        /// Operation to compare; the first one when omitted.
        #[arg(long)]
        operation: Option<String>,
    },
    /// Substitution plan for the departure of a service.
    Explain {
        #[command(flatten)]
        world: World,
        departed: PathBuf,
        candidates: Vec<PathBuf>,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Replays a churn trace, or a generated one.
    Simulate {
        /// Trace file; needs --ontology.
        #[arg(long, conflicts_with = "generate")]
        trace: Option<PathBuf>,
        #[arg(short, long = "ontology")]
        ontologies: Vec<PathBuf>,
        /// Generate a population of this size and a trace over it.
        #[arg(long)]
        generate: Option<usize>,
        #[arg(long, default_value_t = 200)]
        events: usize,
        #[arg(long, default_value_t = 3)]
        apps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Print the whole report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Timing over a ladder of synthetic population sizes.
    Bench {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_service(path: &Path) -> Result<Service> {
    parse_service(&read(path)?).with_context(|| format!("loading {}", path.display()))
}

/// A service or an application profile, as a named interface.
fn load_interface(path: &Path) -> Result<(String, Interface)> {
    let text = read(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("app").is_some() {
        let p = ApplicationProfile::from_json(&text).with_context(|| format!("loading {}", path.display()))?;
        Ok((p.app, p.required))
    } else {
        let s = load_service(path)?;
        Ok((s.id.0, s.interface))
    }
}

fn parse_weights(raw: &[String]) -> Result<QosWeights> {
    let mut pairs = Vec::new();
    for item in raw {
        let Some((name, w)) = item.split_once('=') else {
            bail!("weight `{item}` is not name=value");
        };
        pairs.push((
            name.trim().to_string(),
            w.trim().parse::<f64>().with_context(|| format!("weight `{item}`"))?,
        ));
    }
    Ok(QosWeights::from_pairs(pairs)?)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Match {
            world,
            first,
            second,
            over,
        } => {
            let sem = world.load()?;
            let (pn, p) = load_interface(&first)?;
            let (rn, r) = load_interface(&second)?;
            let m = match &over {
                Some(names) => match_interfaces_over(&sem, &p, &r, names)?,
                None => match_interfaces(&sem, &p, &r),
            };
            println!("M({pn}, {rn}) = {}", m.value);
            if let Some(pairing) = &m.pairing {
                for (&(i, j), om) in pairing.pairs.iter().zip(&m.operations) {
                    println!(
                        "  {} -> {}: {} (distance {:.4})",
                        p.operations[i].name(),
                        r.operations[j].name(),
                        om.value,
                        om.distance
                    );
                }
                println!("distance {:.4}", m.distance);
            }
        }
        Command::Distance {
            world,
            first,
            second,
            weights,
        } => {
            let sem = world.load()?;
            let (an, a) = load_interface(&first)?;
            let (bn, b) = load_interface(&second)?;
            let w = match weights {
                Some(w) => WeightVector::new(w)?,
                None => WeightVector::uniform(a.len()),
            };
            let d = interface_distance(&sem, &a, &b, &w, None)?;
            println!("D({an}, {bn}) = {d:.6}");
        }
        Command::QosDegree {
            world,
            reference,
            candidate,
            others,
            weights,
            operation,
        } => {
            let sem = world.load()?;
            let mut members = vec![load_interface(&reference)?, load_interface(&candidate)?];
            for path in &others {
                members.push(load_interface(path)?);
            }
            let pick = |ifc: &Interface| -> Result<usize> {
                match &operation {
                    Some(name) => ifc.position(name).with_context(|| format!("no operation `{name}`")),
                    None if ifc.is_empty() => bail!("interface has no operations"),
                    None => Ok(0),
                }
            };
            let mut ops = Vec::new();
            for (name, ifc) in &members {
                ops.push((name.as_str(), &ifc.operations[pick(ifc)?]));
            }
            let pops = Populations::from_operations(ops.iter().copied())?;
            let (ref_op, cand_op) = (ops[0].1, ops[1].1);
            let w = match weights {
                Some(raw) => parse_weights(&raw)?,
                None => QosWeights::uniform(ref_op.nfps.iter().map(|n| n.name().to_string())),
            };
            for pop in pops.iter() {
                println!(
                    "{} ({}): mean {:.4}, std {:.4}",
                    pop.name(),
                    pop.operator(),
                    pop.mean(),
                    pop.std_dev()
                );
                for (owner, v) in pop.values() {
                    println!(
                        "  {owner:<16} {v:>10.3}  z {:>8.4}  eta {:.4}",
                        z_score(pop, *v),
                        eta(pop, *v)
                    );
                }
            }
            let d = qos_degree(&sem, ref_op, cand_op, &w, &pops)?;
            println!("QoS({}, {}) = {d:.4}", ops[1].0, ops[0].0);
        }
        Command::Explain {
            world,
            departed,
            candidates,
            profile,
            json,
        } => {
            let sem = world.load()?;
            let departed = load_service(&departed)?;
            let candidates = candidates.iter().map(|p| load_service(p)).collect::<Result<Vec<_>>>()?;
            let profile = match profile {
                Some(p) => Some(ApplicationProfile::from_json(&read(&p)?)?),
                None => None,
            };
            let refs: Vec<&Service> = candidates.iter().collect();
            let plan = compute_plan(&sem, &departed, profile.as_ref(), &refs);
            if json {
                println!("{}", serde_json::to_string_pretty(&plan)?);
            } else {
                println!("departure of {}", plan.service);
                for tier in Tier::ALL {
                    let entries = plan.tier(tier);
                    let shown: Vec<String> = entries
                        .iter()
                        .map(|e| format!("{} ({:.4}, {})", e.service, e.degree, e.mode.as_str()))
                        .collect();
                    println!("  {:<18} [{}]", tier.as_str(), shown.join(", "));
                }
                match plan.head() {
                    Some((tier, e)) => println!("chosen {} from {}", e.service, tier.as_str()),
                    None => println!("chosen proxy"),
                }
            }
        }
        Command::Simulate {
            trace,
            ontologies,
            generate,
            events,
            apps,
            seed,
            json,
        } => {
            let report = match (trace, generate) {
                (Some(path), None) => {
                    let sem = World { ontologies }.load()?;
                    let trace = ChurnTrace::from_json(&read(&path)?)?;
                    run_scenario(&trace, sem, SimConfig::default())?
                }
                (None, Some(n)) => {
                    let world = generate_population(n, &GeneratorConfig::default(), seed, seed.wrapping_add(1))?;
                    let trace = generate_trace(&world, apps, events, seed.wrapping_add(2));
                    run_scenario(&trace, &world.ontology, SimConfig::default())?
                }
                _ => bail!("give either --trace or --generate"),
            };
            if json {
                println!("{}", report.to_json());
            } else {
                for line in report.lines() {
                    println!("{}", serde_json::to_string(&line)?);
                }
                for (app, b) in &report.bindings {
                    let to = b.service.as_ref().map_or("proxy", |s| s.as_str());
                    println!("final {app} -> {to} ({})", b.mode.as_str());
                }
                let t = &report.timings;
                println!(
                    "timing: match mean {:.1} us p95 {:.1} us; plan mean {:.1} us p95 {:.1} us",
                    t.matching.mean_us, t.matching.p95_us, t.plan.mean_us, t.plan.p95_us
                );
            }
        }
        Command::Bench { n, seed } => {
            let rows = bench(n, seed, &GeneratorConfig::default())?;
            println!(
                "{:>8} {:>10} {:>8} {:>10} {:>10} {:>10}",
                "services", "pairs", "subst", "match_ms", "qos_ms", "plan_ms"
            );
            for r in rows {
                println!(
                    "{:>8} {:>10} {:>8} {:>10.3} {:>10.3} {:>10.3}",
                    r.services, r.pairs, r.substitutable, r.match_ms, r.qos_ms, r.plan_ms
                );
            }
        }
    }
    Ok(())
}
