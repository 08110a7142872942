//! Scenario configuration and scenario construction.

use std::fs;
use std::path::{Path, PathBuf};

use redalloc_core::montecarlo::SimConfig;
use redalloc_core::pipeline::PipelineConfig;
use redalloc_core::placement::ClassOrder;
use redalloc_core::{
    AssignConfig, EstimateConfig, IndependenceScope, Model, Network, NodeBudget, ReservationMode,
};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::flows::{default_catalog, load_flows, FlowsDoc, NfTypeDoc};
use crate::format::{parse_edge_list, parse_weights, NetworkDoc, NodeDefaults};
use crate::generate::{
    draw_node_avail, generate_flows, geant_replica, mark_end_nodes, preferential_attachment, Dist, FlowGen, SeedRecord,
    Stream,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    #[default]
    EdgeList,
    /// `<a> <b> <weight>` lines.
    Weights,
    /// [`NetworkDoc`] JSON.
    Json,
}

impl FileFormat {
    /// Guess from the extension: `.json`, `.weights`, anything else is an
    /// edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::Json,
            Some("weights") => Self::Weights,
            _ => Self::EdgeList,
        }
    }

    pub fn parse(self, text: &str, defaults: &NodeDefaults) -> Result<Network, HarnessError> {
        Ok(match self {
            Self::EdgeList => parse_edge_list(text, defaults)?,
            Self::Weights => parse_weights(text, defaults)?,
            Self::Json => serde_json::from_str::<NetworkDoc>(text)?.to_network()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum TopologySource {
    /// Path relative to the config file.
    File {
        path: PathBuf,
        #[serde(default)]
        format: FileFormat,
    },
    /// Edge-list text embedded in the config.
    Inline { text: String },
    /// Preferential attachment; uses the `topology` stream of run 0.
    Generated { nodes: usize, links: usize },
    /// The shipped 44-node, 136-link replica.
    Geant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum FlowSource {
    Generated(FlowGen),
    File { path: PathBuf },
    Inline(FlowsDoc),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementStrategy {
    /// Backups avoid hosts correlated with the primaries they protect.
    #[default]
    CorrelationAware,
    /// Backups on random hosting nodes; assignment ignores correlation.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub max_chains: u32,
    pub max_backups: Option<u32>,
    /// Wall-clock limit in seconds; the search stops between placement
    /// sizes and reports the bound reached so far.
    pub time_budget_secs: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_chains: 2,
            max_backups: None,
            time_budget_secs: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub topology: TopologySource,
    pub node_defaults: NodeDefaults,
    /// Redraws every node availability. Unset keeps declared values for
    /// file topologies and draws U(0.99, 0.999) for generated ones.
    pub node_avail: Option<Dist>,
    /// Fraction of lowest-degree nodes flagged as end nodes when the
    /// topology flags none.
    pub end_fraction: f64,
    pub catalog: Vec<NfTypeDoc>,
    pub instance_avail: Dist,
    pub flows: FlowSource,
    /// Requirement per class, strictly increasing.
    pub classes: Vec<f64>,
    pub threshold: f64,
    pub depth: u32,
    pub mode: ReservationMode,
    pub scope: IndependenceScope,
    pub class_order: ClassOrder,
    pub placement: PlacementStrategy,
    /// Share of each node's cores and memory for primaries.
    pub primary_fraction: f64,
    /// Share of each node's cores and memory for backups.
    pub backup_fraction: f64,
    pub estimate: EstimateConfig,
    pub assign: AssignConfig,
    pub seed: u64,
    /// Independent repetitions averaged in the summary.
    pub runs: u32,
    pub simulate: Option<SimConfig>,
    pub oracle: OracleConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            topology: TopologySource::Geant,
            node_defaults: NodeDefaults::default(),
            node_avail: None,
            end_fraction: 0.25,
            catalog: default_catalog(),
            instance_avail: Dist::Uniform(0.999, 0.9999),
            flows: FlowSource::Generated(FlowGen::default()),
            classes: vec![0.999, 0.9999, 0.99999],
            threshold: 0.5,
            depth: 2,
            mode: ReservationMode::Dedicated,
            scope: IndependenceScope::default(),
            class_order: ClassOrder::default(),
            placement: PlacementStrategy::default(),
            primary_fraction: 0.5,
            backup_fraction: 0.5,
            estimate: EstimateConfig::default(),
            assign: AssignConfig::default(),
            seed: 0,
            runs: 1,
            simulate: None,
            oracle: OracleConfig::default(),
        }
    }
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

impl ScenarioConfig {
    /// Reads a JSON config; relative paths inside resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf), HarnessError> {
        let text = read(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(bad(format!("threshold {} is outside (0, 1)", self.threshold)));
        }
        if self.classes.is_empty() || self.classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("class requirements must be non-empty and strictly increasing"));
        }
        if self.classes.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
            return Err(bad("class requirements must lie in (0, 1)"));
        }
        for (what, f) in [
            ("primary_fraction", self.primary_fraction),
            ("backup_fraction", self.backup_fraction),
            ("end_fraction", self.end_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(bad(format!("{what} must lie in [0, 1]")));
            }
        }
        if self.primary_fraction + self.backup_fraction > 1.0 + 1e-12 {
            return Err(bad("primary and backup fractions exceed the node"));
        }
        if self.catalog.is_empty() {
            return Err(bad("empty NF catalog"));
        }
        if self.runs == 0 {
            return Err(bad("runs must be at least 1"));
        }
        if self.simulate.is_some_and(|s| s.replications == 0) {
            return Err(bad("replications must be at least 1"));
        }
        self.instance_avail.validate("instance_avail")?;
        if let Some(d) = &self.node_avail {
            d.validate("node_avail")?;
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            mode: self.mode,
            scope: self.scope,
            estimate: self.estimate,
            class_order: self.class_order,
            assign: self.assign.clone(),
        }
    }

    /// Topology with end flags, before availability draws.
    pub fn base_network(&self, base: &Path) -> Result<Network, HarnessError> {
        let mut net = match &self.topology {
            TopologySource::File { path, format } => {
                format.parse(&read(&base.join(path))?, &self.node_defaults)?
            }
            TopologySource::Inline { text } => parse_edge_list(text, &self.node_defaults)?,
            TopologySource::Generated { nodes, links } => {
                preferential_attachment(*nodes, *links, &self.node_defaults, &mut Stream::Topology.rng(self.seed, 0))?
            }
            TopologySource::Geant => {
                let mut net = geant_replica();
                let d = self.node_defaults;
                for n in net.node_ids().collect::<Vec<_>>() {
                    let end = net.is_end(n);
                    net.update_node(n, d.cores, d.memory_gb, d.avail, end)?;
                }
                net
            }
        };
        if net.end_nodes().next().is_none() {
            mark_end_nodes(&mut net, self.end_fraction);
        }
        Ok(net)
    }

    fn node_dist(&self) -> Option<Dist> {
        match (&self.node_avail, &self.topology) {
            (Some(d), _) => Some(*d),
            (None, TopologySource::Generated { .. } | TopologySource::Geant) => Some(Dist::Uniform(0.99, 0.999)),
            (None, _) => None,
        }
    }

    /// Network and unbound (or file-bound) flows for run `run`.
    pub fn scenario(&self, base: &Path, run: u32) -> Result<Scenario, HarnessError> {
        let mut net = self.base_network(base)?;
        if let Some(d) = self.node_dist() {
            draw_node_avail(&mut net, &d, &mut Stream::NodeAvail.rng(self.seed, run))?;
        }
        let worst = self.instance_avail.worst();
        let types: Vec<_> = self.catalog.iter().map(|t| t.to_type(worst)).collect();
        for t in &types {
            t.validate()?;
        }
        let mut model = Model::new(types, self.classes.clone(), self.mode);
        match &self.flows {
            FlowSource::Generated(gen) => generate_flows(gen, &net, &mut model, &mut Stream::Flows.rng(self.seed, run))?,
            FlowSource::File { path } => {
                let doc: FlowsDoc = serde_json::from_str(&read(&base.join(path))?)?;
                load_flows(&doc, &net, &mut model)?;
            }
            FlowSource::Inline(doc) => load_flows(doc, &net, &mut model)?,
        }
        let mut primary_budget = NodeBudget::fraction_of(&net, self.primary_fraction);
        // file-bound primaries occupy their hosts
        for i in model.primaries() {
            let t = model.nf(i.nf);
            let h = i.host.index();
            primary_budget.cores[h] = primary_budget.cores[h].saturating_sub(t.cores);
            primary_budget.memory_gb[h] = primary_budget.memory_gb[h].saturating_sub(t.memory_gb);
        }
        let backup_budget = NodeBudget::fraction_of(&net, self.backup_fraction);
        Ok(Scenario {
            net,
            model,
            primary_budget,
            backup_budget,
            seeds: SeedRecord::new(self.seed, run),
        })
    }
}

/// One run's inputs.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub net: Network,
    pub model: Model,
    pub primary_budget: NodeBudget,
    pub backup_budget: NodeBudget,
    pub seeds: SeedRecord,
}
