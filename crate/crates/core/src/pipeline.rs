//! End-to-end allocation: provision primaries, estimate, place, assign,
//! and summarize.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{run_assignment, AssignConfig, AssignmentOutcome};
use crate::error::{EstimateError, ModelError, ProvisionError};
use crate::estimate::{estimate_demand, BackupDemand, EstimateConfig};
use crate::ledger::ReservationMode;
use crate::model::{IndependenceScope, IndependenceTable, Model, NfTypeId, Role};
use crate::placement::{place_backups, primary_nodes_by_class, ClassOrder, NodeBudget, PlacementResult};
use crate::provision::provision_primaries;
use crate::structure::DependencyProfile;
use crate::topology::{hop_matrix, Network, NodeId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("provisioning: {0}")]
    Provision(#[from] ProvisionError),
    #[error("estimation: {0}")]
    Estimate(#[from] EstimateError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mode: ReservationMode,
    pub scope: IndependenceScope,
    pub estimate: EstimateConfig,
    pub class_order: ClassOrder,
    pub assign: AssignConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: ReservationMode::Dedicated,
            scope: IndependenceScope::default(),
            estimate: EstimateConfig::default(),
            class_order: ClassOrder::default(),
            assign: AssignConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub requirement: f64,
    pub flows: u32,
    pub accepted: u32,
    pub acceptance_ratio: f64,
    /// Backup instances serving at least one flow of the class.
    pub backups_used: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub primaries: u32,
    pub backups_estimated: u32,
    pub backups_placed: u32,
    pub backups_used: u32,
    /// Backups used divided by primaries.
    pub overbuild: f64,
    /// Distinct nodes hosting a used backup.
    pub nodes_used: u32,
    pub classes: Vec<ClassMetrics>,
}

pub fn metrics(model: &Model, demand: &BackupDemand, outcomes: &[AssignmentOutcome]) -> MetricsReport {
    let primaries = model.primaries().count() as u32;
    let used: Vec<_> = model.backups().filter(|i| !i.ledger.is_empty()).collect();
    let nodes: BTreeSet<NodeId> = used.iter().map(|i| i.host).collect();
    let classes = model
        .classes
        .iter()
        .enumerate()
        .map(|(c, &req)| {
            let member = |f: crate::model::FlowId| model.flow(f).class.index() == c;
            let flows = model.flows.iter().filter(|f| f.class.index() == c).count() as u32;
            let accepted = outcomes.iter().filter(|o| member(o.flow) && o.accepted()).count() as u32;
            let backups_used = used
                .iter()
                .filter(|i| i.ledger.flows().any(|m| member(m.flow)))
                .count() as u32;
            ClassMetrics {
                requirement: req,
                flows,
                accepted,
                acceptance_ratio: if flows == 0 { 1.0 } else { accepted as f64 / flows as f64 },
                backups_used,
            }
        })
        .collect();
    MetricsReport {
        primaries,
        backups_estimated: demand.total(),
        backups_placed: model.backups().count() as u32,
        backups_used: used.len() as u32,
        overbuild: if primaries == 0 { 0.0 } else { used.len() as f64 / primaries as f64 },
        nodes_used: nodes.len() as u32,
        classes,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub model: Model,
    pub demand: BackupDemand,
    pub placement: PlacementResult,
    pub outcomes: Vec<AssignmentOutcome>,
    pub metrics: MetricsReport,
}

/// Runs the allocation on `model` (flows may be bound already). Backup
/// instance availabilities come from `backup_avail`, new primaries from
/// `primary_avail`.
#[allow(clippy::too_many_arguments)]
pub fn run_pipeline(
    net: &Network,
    mut model: Model,
    profile: &DependencyProfile,
    primary_budget: &mut NodeBudget,
    backup_budget: &mut NodeBudget,
    config: &PipelineConfig,
    primary_avail: impl FnMut(NfTypeId) -> f64,
    mut backup_avail: impl FnMut(NfTypeId) -> f64,
) -> Result<PipelineOutput, PipelineError> {
    let hops = hop_matrix(net);
    model.mode = config.mode;
    provision_primaries(&mut model, net, &hops, primary_budget, primary_avail)?;
    let demand = if model.flows.is_empty() {
        BackupDemand {
            classes: Vec::new(),
            z_total: vec![0; model.nf_types.len()],
        }
    } else {
        estimate_demand(&model, net, &backup_budget.cores, config.estimate)?
    };
    let by_class = primary_nodes_by_class(&model);
    let placement = place_backups(net, &model, &demand, profile, &by_class, backup_budget, config.class_order);
    for p in &placement.placed {
        let a = backup_avail(p.nf);
        model.add_instance(net, p.nf, p.host, Role::Backup, a)?;
    }
    let indep = IndependenceTable::build(&model, config.scope)?;
    let outcomes = run_assignment(&mut model, net, &hops, profile, &indep, &config.assign);
    let metrics = metrics(&model, &demand, &outcomes);
    Ok(PipelineOutput {
        model,
        demand,
        placement,
        outcomes,
        metrics,
    })
}
