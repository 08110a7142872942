//! One allocation run and its self-contained JSON record.

use std::collections::BTreeSet;

use rand::Rng;
use redalloc_core::estimate::estimate_demand;
use redalloc_core::montecarlo::SimPlan;
use redalloc_core::pipeline::{metrics, run_pipeline, MetricsReport};
use redalloc_core::placement::PlacedBackup;
use redalloc_core::provision::provision_primaries;
use redalloc_core::topology::hop_matrix;
use redalloc_core::assignment::run_assignment;
use redalloc_core::placement::Shortfall;
use redalloc_core::{
    AssignmentOutcome, BackupDemand, DependencyProfile, DependencyTable, IndependenceTable, InstanceId, Model,
    Network, NfTypeId, NodeBudget, NodeId, PlacementResult, Role,
};
use serde::{Deserialize, Serialize};

use crate::config::{PlacementStrategy, Scenario, ScenarioConfig};
use crate::error::HarnessError;
use crate::format::NetworkDoc;
use crate::generate::{SeedRecord, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub seeds: SeedRecord,
    pub strategy: PlacementStrategy,
    pub threshold: f64,
    pub network: NetworkDoc,
    /// Catalog, every instance with its reservation ledger, and the flows
    /// with their primary bindings.
    pub model: Model,
    pub demand: BackupDemand,
    pub placement: PlacementResult,
    pub outcomes: Vec<AssignmentOutcome>,
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostedBackup {
    pub instance: InstanceId,
    pub nf: String,
    pub flows: usize,
    pub utilization: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeBackups {
    pub node: String,
    pub backups: Vec<HostedBackup>,
}

impl AllocationPlan {
    pub fn sim_plan(&self) -> SimPlan {
        let node_avail = self.network.nodes.iter().map(|n| n.avail).collect();
        SimPlan::new(node_avail, &self.model, &self.outcomes)
    }

    /// Backup instances grouped by host, hosts in id order.
    pub fn backups_by_node(&self) -> Vec<NodeBackups> {
        let hosts: BTreeSet<NodeId> = self.model.backups().map(|i| i.host).collect();
        hosts
            .into_iter()
            .map(|h| NodeBackups {
                node: self.network.nodes[h.index()].name.clone(),
                backups: self
                    .model
                    .backups()
                    .filter(|i| i.host == h)
                    .map(|i| HostedBackup {
                        instance: i.id,
                        nf: self.model.nf(i.nf).name.clone(),
                        flows: i.ledger.flow_count(),
                        utilization: i.ledger.utilization(),
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn backups_csv(&self) -> String {
        let mut out = String::from("node,instance,nf,flows,utilization\n");
        for n in self.backups_by_node() {
            for b in n.backups {
                out.push_str(&format!("{},{},{},{},{}\n", n.node, b.instance.0, b.nf, b.flows, b.utilization));
            }
        }
        out
    }
}

/// Profile with no correlation at all: every correlated set is empty.
pub fn blind_profile(net: &Network, depth: u32) -> DependencyProfile {
    let n = net.len();
    let table = DependencyTable::from_columns(n, vec![vec![0.0; n]; n]);
    DependencyProfile::from_table(table, 0.5, depth).expect("fixed threshold is valid")
}

/// Backups of each demanded type on uniformly drawn hosting nodes with room.
pub fn random_placement(
    net: &Network,
    model: &Model,
    demand: &BackupDemand,
    budget: &mut NodeBudget,
    rng: &mut impl Rng,
) -> PlacementResult {
    let mut out = PlacementResult::default();
    for c in &demand.classes {
        for (v, &z) in c.z.iter().enumerate() {
            let nf = NfTypeId(v as u32);
            let ty = model.nf(nf);
            let mut missing = 0;
            for _ in 0..z {
                let room: Vec<NodeId> = net
                    .hosting_nodes()
                    .filter(|&n| budget.fits(n, ty.cores, ty.memory_gb))
                    .collect();
                if room.is_empty() {
                    missing += 1;
                    continue;
                }
                let host = room[rng.random_range(0..room.len())];
                budget.take(host, ty.cores, ty.memory_gb);
                out.nodes_used.insert(host);
                out.placed.push(PlacedBackup {
                    nf,
                    class: c.class,
                    host,
                    uncorrelated: false,
                });
            }
            if missing > 0 {
                out.unplaced.push(Shortfall {
                    nf,
                    class: c.class,
                    count: missing,
                });
            }
        }
    }
    out
}

/// Runs provisioning, estimation, placement and assignment on one
/// scenario, with the dependency table computed elsewhere.
pub fn allocate_with_table(
    config: &ScenarioConfig,
    scenario: &Scenario,
    table: &DependencyTable,
) -> Result<AllocationPlan, HarnessError> {
    let net = &scenario.net;
    let run = scenario.seeds.run;
    let mut primary_rng = Stream::PrimaryAvail.rng(config.seed, run);
    let mut backup_rng = Stream::BackupAvail.rng(config.seed, run);
    let dist = config.instance_avail;
    let mut primary_budget = scenario.primary_budget.clone();
    let mut backup_budget = scenario.backup_budget.clone();
    let pipeline = config.pipeline();
    let (model, demand, placement, outcomes, metrics) = match config.placement {
        PlacementStrategy::CorrelationAware => {
            let profile = DependencyProfile::from_table(table.clone(), config.threshold, config.depth)?;
            let out = run_pipeline(
                net,
                scenario.model.clone(),
                &profile,
                &mut primary_budget,
                &mut backup_budget,
                &pipeline,
                |_| dist.sample(&mut primary_rng),
                |_| dist.sample(&mut backup_rng),
            )?;
            (out.model, out.demand, out.placement, out.outcomes, out.metrics)
        }
        PlacementStrategy::Random => {
            let hops = hop_matrix(net);
            let mut model = scenario.model.clone();
            model.mode = config.mode;
            provision_primaries(&mut model, net, &hops, &mut primary_budget, |_| dist.sample(&mut primary_rng))?;
            let demand = if model.flows.is_empty() {
                BackupDemand {
                    classes: Vec::new(),
                    z_total: vec![0; model.nf_types.len()],
                }
            } else {
                estimate_demand(&model, net, &backup_budget.cores, config.estimate)?
            };
            let mut rng = Stream::Placement.rng(config.seed, run);
            let placement = random_placement(net, &model, &demand, &mut backup_budget, &mut rng);
            for p in &placement.placed {
                let a = dist.sample(&mut backup_rng);
                model.add_instance(net, p.nf, p.host, Role::Backup, a)?;
            }
            let profile = blind_profile(net, config.depth);
            let indep = IndependenceTable::build(&model, config.scope)?;
            let outcomes = run_assignment(&mut model, net, &hops, &profile, &indep, &config.assign);
            let m = metrics(&model, &demand, &outcomes);
            (model, demand, placement, outcomes, m)
        }
    };
    Ok(AllocationPlan {
        seeds: scenario.seeds.clone(),
        strategy: config.placement,
        threshold: config.threshold,
        network: NetworkDoc::from(net),
        model,
        demand,
        placement,
        outcomes,
        metrics,
    })
}

pub fn allocate(config: &ScenarioConfig, scenario: &Scenario) -> Result<AllocationPlan, HarnessError> {
    allocate_with_table(config, scenario, &crate::par::dependency_table(&scenario.net))
}

/// Primaries only, provisioned exactly as [`allocate`] does.
pub fn provisioned(config: &ScenarioConfig, scenario: &Scenario) -> Result<Model, HarnessError> {
    let mut model = scenario.model.clone();
    model.mode = config.mode;
    let mut rng = Stream::PrimaryAvail.rng(config.seed, scenario.seeds.run);
    let mut budget = scenario.primary_budget.clone();
    provision_primaries(&mut model, &scenario.net, &hop_matrix(&scenario.net), &mut budget, |_| {
        config.instance_avail.sample(&mut rng)
    })?;
    Ok(model)
}

/// Per-class count of used backup instances, indexed by class.
pub fn used_per_class(plan: &AllocationPlan) -> Vec<u32> {
    plan.metrics.classes.iter().map(|c| c.backups_used).collect()
}
