//! Multi-run experiments and the parameter studies built on them.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use redalloc_core::montecarlo::{SimConfig, SimPlan, SimReport};
use redalloc_core::{
    DependencyProfile, FlowId, InstanceId, Model, Network, NfType, NfTypeId, NodeId, OrderPolicy, ReservationMode, Role,
};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::ScenarioConfig;
use crate::error::HarnessError;
use crate::generate::Stream;
use crate::par;
use crate::plan::{allocate_with_table, AllocationPlan};

/// Sample mean with a two-sided 95% Student-t half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanCi {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: 0.0, half_width: 0.0, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, half_width: 0.0, n };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        Self {
            mean,
            half_width: t * (var / n as f64).sqrt(),
            n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub requirement: f64,
    pub acceptance_ratio: MeanCi,
    pub backups_used: MeanCi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub primaries: MeanCi,
    pub backups_placed: MeanCi,
    pub backups_used: MeanCi,
    pub overbuild: MeanCi,
    pub nodes_used: MeanCi,
    pub classes: Vec<ClassSummary>,
}

impl Summary {
    pub fn of(plans: &[&AllocationPlan]) -> Self {
        let col = |f: &dyn Fn(&AllocationPlan) -> f64| MeanCi::of(&plans.iter().map(|p| f(p)).collect::<Vec<_>>());
        let classes = plans.first().map_or(0, |p| p.metrics.classes.len());
        Self {
            runs: plans.len(),
            primaries: col(&|p| p.metrics.primaries as f64),
            backups_placed: col(&|p| p.metrics.backups_placed as f64),
            backups_used: col(&|p| p.metrics.backups_used as f64),
            overbuild: col(&|p| p.metrics.overbuild),
            nodes_used: col(&|p| p.metrics.nodes_used as f64),
            classes: (0..classes)
                .map(|c| ClassSummary {
                    requirement: plans[0].metrics.classes[c].requirement,
                    acceptance_ratio: col(&|p| p.metrics.classes[c].acceptance_ratio),
                    backups_used: col(&|p| p.metrics.classes[c].backups_used as f64),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub plan: AllocationPlan,
    pub sim: Option<SimReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub runs: Vec<RunOutput>,
    pub summary: Summary,
}

fn run_once(config: &ScenarioConfig, base: &Path, run: u32) -> Result<RunOutput, HarnessError> {
    let scenario = config.scenario(base, run)?;
    let table = par::dependency_table(&scenario.net);
    let plan = allocate_with_table(config, &scenario, &table)?;
    let sim = config.simulate.map(|s| par::simulate(&plan.sim_plan(), &s));
    Ok(RunOutput { plan, sim })
}

/// Runs the full pipeline `config.runs` times (run `k` uses stream set `k`)
/// and summarizes.
pub fn run_experiment(config: &ScenarioConfig, base: &Path) -> Result<Experiment, HarnessError> {
    config.validate()?;
    let runs = (0..config.runs)
        .map(|k| run_once(config, base, k))
        .collect::<Result<Vec<_>, _>>()?;
    let plans: Vec<&AllocationPlan> = runs.iter().map(|r| &r.plan).collect();
    let summary = Summary::of(&plans);
    Ok(Experiment { runs, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub run: u32,
    pub threshold: f64,
    pub backups_estimated: u32,
    pub backups_placed: u32,
    pub backups_used: u32,
    pub overbuild: f64,
    /// Fraction of nodes inside some correlated set.
    pub coverage: f64,
    pub mean_correlated: f64,
}

/// Reruns every run of `config` at each threshold. The dependency table is
/// computed once per run.
pub fn threshold_sweep(config: &ScenarioConfig, base: &Path, thresholds: &[f64]) -> Result<Vec<SweepPoint>, HarnessError> {
    config.validate()?;
    let mut out = Vec::new();
    for run in 0..config.runs {
        let scenario = config.scenario(base, run)?;
        let table = par::dependency_table(&scenario.net);
        for &t in thresholds {
            let c = ScenarioConfig { threshold: t, ..config.clone() };
            c.validate()?;
            let profile = DependencyProfile::from_table(table.clone(), t, config.depth)?;
            let plan = allocate_with_table(&c, &scenario, &table)?;
            let n = scenario.net.len().max(1);
            let mean_correlated =
                scenario.net.node_ids().map(|v| profile.correlated(v).len()).sum::<usize>() as f64 / n as f64;
            out.push(SweepPoint {
                run,
                threshold: t,
                backups_estimated: plan.metrics.backups_estimated,
                backups_placed: plan.metrics.backups_placed,
                backups_used: plan.metrics.backups_used,
                overbuild: plan.metrics.overbuild,
                coverage: profile.coverage(),
                mean_correlated,
            });
        }
    }
    Ok(out)
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("run,threshold,backups_estimated,backups_placed,backups_used,overbuild,coverage,mean_correlated\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.run, p.threshold, p.backups_estimated, p.backups_placed, p.backups_used, p.overbuild, p.coverage, p.mean_correlated
        ));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderPoint {
    pub run: u32,
    pub order: OrderPolicy,
    pub backups_used: u32,
    /// Used backups per class.
    pub class_backups: Vec<u32>,
    pub class_acceptance: Vec<f64>,
}

/// Reruns every run of `config` under each assignment order.
pub fn order_study(config: &ScenarioConfig, base: &Path, orders: &[OrderPolicy]) -> Result<Vec<OrderPoint>, HarnessError> {
    config.validate()?;
    let mut out = Vec::new();
    for run in 0..config.runs {
        let scenario = config.scenario(base, run)?;
        let table = par::dependency_table(&scenario.net);
        for &order in orders {
            let mut c = config.clone();
            c.assign.order = order;
            let plan = allocate_with_table(&c, &scenario, &table)?;
            out.push(OrderPoint {
                run,
                order,
                backups_used: plan.metrics.backups_used,
                class_backups: plan.metrics.classes.iter().map(|m| m.backups_used).collect(),
                class_acceptance: plan.metrics.classes.iter().map(|m| m.acceptance_ratio).collect(),
            });
        }
    }
    Ok(out)
}

pub fn order_csv(points: &[OrderPoint]) -> String {
    let mut s = String::from("run,order,backups_used,class_backups,class_acceptance\n");
    for p in points {
        let join = |v: Vec<String>| v.join(";");
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            p.run,
            serde_json::to_value(p.order).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            p.backups_used,
            join(p.class_backups.iter().map(u32::to_string).collect()),
            join(p.class_acceptance.iter().map(f64::to_string).collect()),
        ));
    }
    s
}

/// Setup of the two-strategy structural-correlation experiment: every
/// flow gets a primary chain on random hosting nodes and one backup per
/// NF, placed either anywhere or outside the correlated set of the
/// primary hosts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationStudyConfig {
    pub flows: usize,
    pub chain_len: usize,
    pub node_avail: f64,
    pub instance_avail: f64,
    pub threshold: f64,
    pub depth: u32,
    pub seed: u64,
    pub sim: SimConfig,
}

impl Default for CorrelationStudyConfig {
    fn default() -> Self {
        Self {
            flows: 100,
            chain_len: 2,
            node_avail: 0.999,
            instance_avail: 1.0,
            threshold: 0.5,
            depth: 2,
            seed: 1,
            sim: SimConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationStudy {
    pub random: SimReport,
    pub aware: SimReport,
    /// Flows whose allowed set was empty, so their backups only avoid the
    /// primary hosts.
    pub fallback_flows: usize,
}

/// Both arms share the primaries and the per-replication node draws.
pub fn correlation_study(net: &Network, config: &CorrelationStudyConfig) -> Result<CorrelationStudy, HarnessError> {
    let mut net = net.clone();
    for n in net.node_ids().collect::<Vec<_>>() {
        net.set_avail(n, config.node_avail)?;
    }
    let profile = par::dependency_profile(&net, config.threshold, config.depth)?;
    let hosts: Vec<NodeId> = net.hosting_nodes().collect();
    if hosts.is_empty() {
        return Err(HarnessError::Config("no hosting nodes".into()));
    }
    let types = (0..config.chain_len)
        .map(|k| NfType {
            name: format!("nf{k}"),
            cores: 1,
            memory_gb: 0,
            capacity: 1.0,
            avail: config.instance_avail,
        })
        .collect();
    let mut model = Model::new(types, vec![0.99999], ReservationMode::Dedicated);
    let mut rng = Stream::Placement.rng(config.seed, 0);
    let mut random_flows = Vec::new();
    let mut aware_flows = Vec::new();
    let mut fallback_flows = 0;
    for f in 0..config.flows {
        let primary_hosts = draw_hosts(&hosts, config.chain_len, &mut rng);
        let random_hosts = draw_hosts(&hosts, config.chain_len, &mut rng);
        let avoid: BTreeSet<NodeId> = profile
            .correlated_union(primary_hosts.iter().copied())
            .into_iter()
            .chain(primary_hosts.iter().copied())
            .collect();
        let mut allowed: Vec<NodeId> = hosts.iter().copied().filter(|h| !avoid.contains(h)).collect();
        if allowed.is_empty() {
            fallback_flows += 1;
            allowed = hosts.iter().copied().filter(|h| !primary_hosts.contains(h)).collect();
        }
        let aware_hosts = draw_hosts(&allowed, config.chain_len, &mut rng);
        let primary = add_chain(&mut model, &net, &primary_hosts, Role::Primary, config.instance_avail)?;
        let rb = add_chain(&mut model, &net, &random_hosts, Role::Backup, config.instance_avail)?;
        let ab = add_chain(&mut model, &net, &aware_hosts, Role::Backup, config.instance_avail)?;
        random_flows.push((FlowId(f as u32), 1.0, primary.clone(), vec![rb]));
        aware_flows.push((FlowId(f as u32), 1.0, primary, vec![ab]));
    }
    let node_avail: Vec<f64> = net.nodes().iter().map(|n| n.avail).collect();
    let random = SimPlan::from_chains(node_avail.clone(), &model, &random_flows);
    let aware = SimPlan::from_chains(node_avail, &model, &aware_flows);
    let (random, aware) = par::compare_placements(&random, &aware, &config.sim);
    Ok(CorrelationStudy {
        random,
        aware,
        fallback_flows,
    })
}

fn draw_hosts(from: &[NodeId], len: usize, rng: &mut impl Rng) -> Vec<NodeId> {
    (0..len).map(|_| from[rng.random_range(0..from.len())]).collect()
}

/// One instance per chain position, NF type `k` on `hosts[k]`.
fn add_chain(
    model: &mut Model,
    net: &Network,
    hosts: &[NodeId],
    role: Role,
    avail: f64,
) -> Result<Vec<InstanceId>, HarnessError> {
    hosts
        .iter()
        .enumerate()
        .map(|(k, &h)| Ok(model.add_instance(net, NfTypeId(k as u32), h, role, avail)?))
        .collect()
}

pub fn cdf_csv(report: &SimReport) -> String {
    let mut s = String::from("unavailability,fraction\n");
    for p in &report.cdf {
        s.push_str(&format!("{},{}\n", p.unavailability, p.fraction));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FlowSource;
    use crate::generate::{geant_replica, FlowGen};

    #[test]
    fn mean_ci_values() {
        let ci = MeanCi::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ci.mean, 2.5);
        // t_{0.975,3} = 3.182446305284263, s = sqrt(5/3)
        let expect = 3.182446305284263 * (5.0f64 / 3.0).sqrt() / 2.0;
        assert!((ci.half_width - expect).abs() < 1e-9);
        assert_eq!(MeanCi::of(&[7.0]).half_width, 0.0);
        assert_eq!(MeanCi::of(&[]).n, 0);
    }

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            flows: FlowSource::Generated(FlowGen { count: 40, ..FlowGen::default() }),
            runs: 3,
            seed: 3,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn experiment_runs_differ_and_replay() {
        let c = small();
        let e = run_experiment(&c, Path::new(".")).unwrap();
        assert_eq!(e.runs.len(), 3);
        assert_eq!(e.summary.runs, 3);
        assert_ne!(e.runs[0].plan.model.flows, e.runs[1].plan.model.flows);
        let again = run_experiment(&c, Path::new(".")).unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn simulation_attached() {
        let mut c = small();
        c.runs = 1;
        c.simulate = Some(SimConfig {
            replications: 20_000,
            seed: 9,
            contention_aware: false,
        });
        let e = run_experiment(&c, Path::new(".")).unwrap();
        let sim = e.runs[0].sim.as_ref().unwrap();
        assert_eq!(sim.flows.len(), 40);
        let seq = redalloc_core::montecarlo::simulate(&e.runs[0].plan.sim_plan(), &c.simulate.unwrap());
        assert_eq!(sim, &seq);
    }

    #[test]
    fn sweep_and_orders_cover_grid() {
        let mut c = small();
        c.runs = 2;
        let pts = threshold_sweep(&c, Path::new("."), &[0.3, 0.7]).unwrap();
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|p| (0.0..=1.0).contains(&p.coverage)));
        assert_eq!(sweep_csv(&pts).lines().count(), 5);
        let orders = [OrderPolicy::ChainLengthDesc, OrderPolicy::ChainLengthAsc];
        let o = order_study(&c, Path::new("."), &orders).unwrap();
        assert_eq!(o.len(), 4);
        assert!(order_csv(&o).contains("chain_length_asc"));
    }

    #[test]
    fn correlation_study_small() {
        let cfg = CorrelationStudyConfig {
            flows: 20,
            sim: SimConfig {
                replications: 10_000,
                seed: 1,
                contention_aware: false,
            },
            ..CorrelationStudyConfig::default()
        };
        let s = correlation_study(&geant_replica(), &cfg).unwrap();
        assert_eq!(s.random.flows.len(), 20);
        assert_eq!(s.aware.flows.len(), 20);
        for (a, r) in s.aware.flows.iter().zip(&s.random.flows) {
            assert_eq!(a.flow, r.flow);
        }
        assert!(cdf_csv(&s.aware).lines().count() == 21);
    }
}
