//! Seeded generators: ISP-like topologies, end-node selection, attribute
//! draws and random flows.
//!
//! Every random draw comes from a named ChaCha8 stream derived from the
//! scenario seed, the run index and the stream id, so runs replay exactly.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use redalloc_core::{ClassId, FlowId, FlowSpec, Model, Network, NfTypeId, NodeId, NodeSpec};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::format::NodeDefaults;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stream {
    Topology = 1,
    NodeAvail = 2,
    Flows = 3,
    PrimaryAvail = 4,
    BackupAvail = 5,
    Placement = 6,
}

impl Stream {
    pub const ALL: [Stream; 6] = [
        Stream::Topology,
        Stream::NodeAvail,
        Stream::Flows,
        Stream::PrimaryAvail,
        Stream::BackupAvail,
        Stream::Placement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stream::Topology => "topology",
            Stream::NodeAvail => "node_avail",
            Stream::Flows => "flows",
            Stream::PrimaryAvail => "primary_avail",
            Stream::BackupAvail => "backup_avail",
            Stream::Placement => "placement",
        }
    }

    /// ChaCha stream number: run index in the high bits, stream id low.
    pub fn id(self, run: u32) -> u64 {
        ((run as u64) << 8) | self as u64
    }

    pub fn rng(self, seed: u64, run: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.id(run));
        rng
    }
}

/// The seeds behind one run, written next to its outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub algorithm: String,
    pub seed: u64,
    pub run: u32,
    pub streams: BTreeMap<String, u64>,
}

impl SeedRecord {
    pub fn new(seed: u64, run: u32) -> Self {
        Self {
            algorithm: "chacha8, seed_from_u64(seed), set_stream(run << 8 | id)".into(),
            seed,
            run,
            streams: Stream::ALL.iter().map(|s| (s.name().to_string(), s.id(run))).collect(),
        }
    }
}

/// Probability distribution for availabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dist {
    Fixed(f64),
    /// Uniform on `[lo, hi)`.
    Uniform(f64, f64),
}

impl Dist {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Dist::Fixed(x) => x,
            Dist::Uniform(lo, hi) if hi > lo => rng.random_range(lo..hi),
            Dist::Uniform(lo, _) => lo,
        }
    }

    /// Smallest value the distribution can produce.
    pub fn worst(&self) -> f64 {
        match *self {
            Dist::Fixed(x) => x,
            Dist::Uniform(lo, _) => lo,
        }
    }

    pub fn validate(&self, what: &str) -> Result<(), HarnessError> {
        let ok = |x: f64| x > 0.0 && x <= 1.0;
        let fine = match *self {
            Dist::Fixed(x) => ok(x),
            Dist::Uniform(lo, hi) => ok(lo) && ok(hi) && lo <= hi,
        };
        if fine {
            Ok(())
        } else {
            Err(HarnessError::Config(format!("{what}: availabilities must lie in (0, 1]")))
        }
    }
}

fn weighted(rng: &mut impl Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if x < *w {
            return k;
        }
        x -= w;
    }
    weights.len() - 1
}

/// Preferential-attachment graph: each new node links to one existing node
/// chosen with probability proportional to `degree + 1`, then extra links
/// join pairs drawn the same way until `links` is reached. Connected by
/// construction. Nodes are named `n0`, `n1`, ...
pub fn preferential_attachment(
    nodes: usize,
    links: usize,
    defaults: &NodeDefaults,
    rng: &mut impl Rng,
) -> Result<Network, HarnessError> {
    let max = nodes * nodes.saturating_sub(1) / 2;
    if nodes == 0 || links + 1 < nodes || links > max {
        return Err(HarnessError::Config(format!(
            "cannot build a connected graph with {nodes} nodes and {links} links"
        )));
    }
    let mut net = Network::new();
    for k in 0..nodes {
        net.add_node(NodeSpec {
            name: format!("n{k}"),
            cores: defaults.cores,
            memory_gb: defaults.memory_gb,
            avail: defaults.avail,
            end: false,
        })?;
    }
    let mut weight = vec![1.0; nodes];
    for v in 1..nodes {
        let u = weighted(rng, &weight[..v]);
        net.add_link(NodeId(u as u32), NodeId(v as u32))?;
        weight[u] += 1.0;
        weight[v] += 1.0;
    }
    while net.link_count() < links {
        let a = weighted(rng, &weight);
        let b = weighted(rng, &weight);
        if a == b || net.has_link(NodeId(a as u32), NodeId(b as u32)) {
            continue;
        }
        net.add_link(NodeId(a as u32), NodeId(b as u32))?;
        weight[a] += 1.0;
        weight[b] += 1.0;
    }
    Ok(net)
}

/// Flags the `round(fraction * n)` lowest-degree nodes (ties by id) as end
/// nodes.
pub fn mark_end_nodes(net: &mut Network, fraction: f64) {
    let count = (fraction * net.len() as f64).round() as usize;
    let mut ids: Vec<NodeId> = net.node_ids().collect();
    ids.sort_by_key(|&n| (net.degree(n), n));
    for &n in ids.iter().take(count) {
        net.set_end(n, true);
    }
}

pub fn draw_node_avail(net: &mut Network, dist: &Dist, rng: &mut impl Rng) -> Result<(), HarnessError> {
    for n in net.node_ids().collect::<Vec<_>>() {
        net.set_avail(n, dist.sample(rng))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowGen {
    pub count: usize,
    /// Inclusive range of chain lengths.
    pub chain_len: (usize, usize),
    /// Relative weight of each class; empty means uniform.
    pub class_mix: Vec<f64>,
    pub rate_pps: f64,
}

impl Default for FlowGen {
    fn default() -> Self {
        Self {
            count: 100,
            chain_len: (2, 4),
            class_mix: Vec::new(),
            rate_pps: 0.5e6,
        }
    }
}

/// Appends `gen.count` unbound flows between uniformly drawn distinct end
/// nodes. Chain NF types are distinct when the catalog allows it.
pub fn generate_flows(gen: &FlowGen, net: &Network, model: &mut Model, rng: &mut impl Rng) -> Result<(), HarnessError> {
    let ends: Vec<NodeId> = net.end_nodes().collect();
    if gen.count > 0 && ends.len() < 2 {
        return Err(HarnessError::Config("flow generation needs at least two end nodes".into()));
    }
    let (lo, hi) = gen.chain_len;
    if lo == 0 || lo > hi {
        return Err(HarnessError::Config(format!("bad chain length range {lo}..={hi}")));
    }
    let classes = model.classes.len();
    let mix = if gen.class_mix.is_empty() {
        vec![1.0; classes]
    } else if gen.class_mix.len() == classes && gen.class_mix.iter().all(|w| *w >= 0.0) && gen.class_mix.iter().sum::<f64>() > 0.0 {
        gen.class_mix.clone()
    } else {
        return Err(HarnessError::Config("class_mix needs one non-negative weight per class".into()));
    };
    let types = model.nf_types.len();
    let base = model.flows.len() as u32;
    for k in 0..gen.count {
        let s = rng.random_range(0..ends.len());
        let mut d = rng.random_range(0..ends.len() - 1);
        if d >= s {
            d += 1;
        }
        let len = rng.random_range(lo..=hi);
        let chain: Vec<NfTypeId> = if len <= types {
            let mut idx: Vec<u32> = (0..types as u32).collect();
            let (picked, _) = idx.partial_shuffle(rng, len);
            picked.iter().map(|&t| NfTypeId(t)).collect()
        } else {
            (0..len).map(|_| NfTypeId(rng.random_range(0..types as u32))).collect()
        };
        let class = weighted(rng, &mix);
        model.flows.push(FlowSpec {
            id: FlowId(base + k as u32),
            src: ends[s],
            dst: ends[d],
            rate: gen.rate_pps,
            chain,
            class: ClassId(class as u32),
            avail_req: model.classes[class],
            primary: None,
            primary_avail: 0.0,
        });
    }
    Ok(())
}

/// Seed and size of the shipped GEANT-sized replica.
pub const GEANT_SEED: u64 = 2019;
pub const GEANT_NODES: usize = 44;
pub const GEANT_LINKS: usize = 136;
pub const GEANT_END_FRACTION: f64 = 0.25;

/// Regenerates the GEANT-sized replica shipped as `fixtures/geant.topo`.
pub fn geant_replica() -> Network {
    let mut rng = Stream::Topology.rng(GEANT_SEED, 0);
    let mut net = preferential_attachment(GEANT_NODES, GEANT_LINKS, &NodeDefaults::default(), &mut rng)
        .expect("fixed parameters are valid");
    mark_end_nodes(&mut net, GEANT_END_FRACTION);
    net
}
