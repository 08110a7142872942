//! NF types, instances, flows and the analytic availability model.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::ledger::{Independence, ReservationLedger, ReservationMode};
use crate::topology::{Network, NodeId};

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(NfTypeId);
id_type!(InstanceId);
id_type!(FlowId);
id_type!(
    /// Availability class; classes are indexed in increasing requirement order.
    ClassId
);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NfType {
    pub name: String,
    pub cores: u32,
    #[serde(default = "default_memory")]
    pub memory_gb: u32,
    /// Processing capacity in pps.
    pub capacity: f64,
    pub avail: f64,
}

fn default_memory() -> u32 {
    2
}

impl NfType {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason| {
            Err(ModelError::InvalidNfType {
                name: self.name.clone(),
                reason,
            })
        };
        if self.cores < 1 {
            return bad("cores must be >= 1");
        }
        if !(self.capacity > 0.0) {
            return bad("capacity must be positive");
        }
        if !(self.avail > 0.0 && self.avail <= 1.0) {
            return bad("availability outside (0, 1]");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Primary,
    Backup,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NfInstance {
    pub id: InstanceId,
    pub nf: NfTypeId,
    pub host: NodeId,
    pub role: Role,
    pub avail: f64,
    pub ledger: ReservationLedger,
}

impl NfInstance {
    pub fn capacity(&self) -> f64 {
        self.ledger.capacity
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimaryBinding {
    pub instances: Vec<InstanceId>,
    /// Route from source to destination, both inclusive.
    pub path: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Rate in pps.
    pub rate: f64,
    pub chain: Vec<NfTypeId>,
    pub class: ClassId,
    pub avail_req: f64,
    pub primary: Option<PrimaryBinding>,
    /// Primary chain availability, filled in when the primary is bound.
    pub primary_avail: f64,
}

impl FlowSpec {
    pub fn chain_len(&self) -> usize {
        self.chain.len()
    }

    pub fn binding(&self) -> Result<&PrimaryBinding, ModelError> {
        self.primary.as_ref().ok_or(ModelError::UnboundPrimary(self.id.0))
    }
}

/// One backup chain assigned to a flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackupChain {
    pub flow: FlowId,
    pub instances: Vec<InstanceId>,
    /// Distinct hosting nodes, sorted.
    pub hosts: Vec<NodeId>,
    pub avail: f64,
}

/// Which parts of a primary route count when deciding flow independence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IndependenceScope {
    /// Hosting nodes and instances of the primary chain.
    #[default]
    HostingNodes,
    /// Also every transit node of the primary route except the endpoints.
    FullPath,
}

/// Allocation state: catalog, instances and flows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub nf_types: Vec<NfType>,
    pub instances: Vec<NfInstance>,
    pub flows: Vec<FlowSpec>,
    /// Requirement per class, strictly increasing.
    pub classes: Vec<f64>,
    pub mode: ReservationMode,
}

impl Model {
    pub fn new(nf_types: Vec<NfType>, classes: Vec<f64>, mode: ReservationMode) -> Self {
        Self {
            nf_types,
            instances: Vec::new(),
            flows: Vec::new(),
            classes,
            mode,
        }
    }

    pub fn nf(&self, id: NfTypeId) -> &NfType {
        &self.nf_types[id.index()]
    }

    pub fn nf_id(&self, name: &str) -> Option<NfTypeId> {
        self.nf_types
            .iter()
            .position(|t| t.name == name)
            .map(|i| NfTypeId(i as u32))
    }

    pub fn instance(&self, id: InstanceId) -> &NfInstance {
        &self.instances[id.index()]
    }

    pub fn flow(&self, id: FlowId) -> &FlowSpec {
        &self.flows[id.index()]
    }

    pub fn add_instance(
        &mut self,
        net: &Network,
        nf: NfTypeId,
        host: NodeId,
        role: Role,
        avail: f64,
    ) -> Result<InstanceId, ModelError> {
        let id = InstanceId(self.instances.len() as u32);
        if net.is_end(host) {
            return Err(ModelError::EndNodeHost {
                instance: id.0,
                node: net.name(host).into(),
            });
        }
        let ty = self
            .nf_types
            .get(nf.index())
            .ok_or_else(|| ModelError::UnknownNfType(alloc::format!("#{}", nf.0)))?;
        // primaries always reserve dedicated capacity
        let mode = match role {
            Role::Primary => ReservationMode::Dedicated,
            Role::Backup => self.mode,
        };
        self.instances.push(NfInstance {
            id,
            nf,
            host,
            role,
            avail,
            ledger: ReservationLedger::new(mode, ty.capacity),
        });
        Ok(id)
    }

    pub fn backups(&self) -> impl Iterator<Item = &NfInstance> + '_ {
        self.instances.iter().filter(|i| i.role == Role::Backup)
    }

    pub fn primaries(&self) -> impl Iterator<Item = &NfInstance> + '_ {
        self.instances.iter().filter(|i| i.role == Role::Primary)
    }

    /// Primary hosting nodes of a flow.
    pub fn primary_hosts(&self, flow: &FlowSpec) -> Result<BTreeSet<NodeId>, ModelError> {
        let b = flow.binding()?;
        Ok(b.instances.iter().map(|&i| self.instance(i).host).collect())
    }

    /// Chain availability for a list of instances.
    pub fn chain_availability(&self, net: &Network, chain: &[InstanceId]) -> f64 {
        chain_availability(
            chain
                .iter()
                .map(|&i| (self.instance(i).avail, self.instance(i).host)),
            |n| net.avail(n),
        )
    }

    pub fn backup_chain(&self, net: &Network, flow: FlowId, instances: Vec<InstanceId>) -> BackupChain {
        let hosts: BTreeSet<NodeId> = instances.iter().map(|&i| self.instance(i).host).collect();
        let avail = self.chain_availability(net, &instances);
        BackupChain {
            flow,
            instances,
            hosts: hosts.into_iter().collect(),
            avail,
        }
    }

    /// Checks that a binding matches the chain and recomputes the flow's
    /// primary availability.
    pub fn bind_primary(&mut self, net: &Network, flow: FlowId, binding: PrimaryBinding) -> Result<(), ModelError> {
        let f = self
            .flows
            .get(flow.index())
            .ok_or(ModelError::UnknownFlow(flow.0))?;
        if binding.instances.len() != f.chain.len() {
            return Err(ModelError::InvalidFlow {
                id: flow.0,
                reason: "primary binding length differs from chain length".into(),
            });
        }
        for (&inst, &nf) in binding.instances.iter().zip(&f.chain) {
            let i = self
                .instances
                .get(inst.index())
                .ok_or(ModelError::UnknownInstance(inst.0))?;
            if i.nf != nf {
                return Err(ModelError::InvalidFlow {
                    id: flow.0,
                    reason: alloc::format!("primary instance {} has the wrong NF type", inst.0),
                });
            }
        }
        let avail = self.chain_availability(net, &binding.instances);
        let f = &mut self.flows[flow.index()];
        f.primary = Some(binding);
        f.primary_avail = avail;
        Ok(())
    }

    pub fn footprint(&self, flow: &FlowSpec, scope: IndependenceScope) -> Result<Footprint, ModelError> {
        let b = flow.binding()?;
        let mut nodes: BTreeSet<NodeId> = b.instances.iter().map(|&i| self.instance(i).host).collect();
        if scope == IndependenceScope::FullPath && b.path.len() > 2 {
            nodes.extend(b.path[1..b.path.len() - 1].iter().copied());
        }
        Ok(Footprint {
            nodes,
            instances: b.instances.iter().copied().collect(),
        })
    }
}

pub fn validate_flow(flow: &FlowSpec) -> Result<(), ModelError> {
    let bad = |reason: &str| {
        Err(ModelError::InvalidFlow {
            id: flow.id.0,
            reason: reason.into(),
        })
    };
    if flow.chain.is_empty() {
        return bad("empty service chain");
    }
    if !(flow.avail_req > 0.0 && flow.avail_req < 1.0) {
        return bad("availability requirement outside (0, 1)");
    }
    if !(flow.rate > 0.0) {
        return bad("rate must be positive");
    }
    Ok(())
}

/// `prod A_v * prod A_n` over instances and their distinct hosts.
pub fn chain_availability(
    instances: impl IntoIterator<Item = (f64, NodeId)>,
    node_avail: impl Fn(NodeId) -> f64,
) -> f64 {
    let mut hosts = BTreeSet::new();
    let mut a = 1.0;
    for (inst_avail, host) in instances {
        a *= inst_avail;
        hosts.insert(host);
    }
    for h in hosts {
        a *= node_avail(h);
    }
    a
}

/// Parallel combination of a primary chain and backup chains.
pub fn service_availability(primary: f64, backups: &[f64]) -> f64 {
    let mut down = 1.0 - primary;
    for b in backups {
        down *= 1.0 - b;
    }
    1.0 - down
}

/// Primary footprint used for the independence test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Footprint {
    pub nodes: BTreeSet<NodeId>,
    pub instances: BTreeSet<InstanceId>,
}

impl Footprint {
    pub fn disjoint(&self, other: &Footprint) -> bool {
        self.nodes.is_disjoint(&other.nodes) && self.instances.is_disjoint(&other.instances)
    }
}

pub fn flows_independent(
    model: &Model,
    a: &FlowSpec,
    b: &FlowSpec,
    scope: IndependenceScope,
) -> Result<bool, ModelError> {
    let fa = model.footprint(a, scope)?;
    let fb = model.footprint(b, scope)?;
    Ok(a.id != b.id && fa.disjoint(&fb))
}

/// Precomputed pairwise independence as a bit matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependenceTable {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl IndependenceTable {
    pub fn build(model: &Model, scope: IndependenceScope) -> Result<Self, ModelError> {
        let prints: Vec<Footprint> = model
            .flows
            .iter()
            .map(|f| model.footprint(f, scope))
            .collect::<Result<_, _>>()?;
        Ok(Self::from_fn(prints.len(), |a, b| prints[a].disjoint(&prints[b])))
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let words = n.div_ceil(64).max(1);
        let mut bits = vec![0u64; n * words];
        for a in 0..n {
            for b in a + 1..n {
                if f(a, b) {
                    bits[a * words + b / 64] |= 1 << (b % 64);
                    bits[b * words + a / 64] |= 1 << (a % 64);
                }
            }
        }
        Self { n, words, bits }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

impl Independence for IndependenceTable {
    #[inline]
    fn independent(&self, a: FlowId, b: FlowId) -> bool {
        let (a, b) = (a.index(), b.index());
        a < self.n && b < self.n && self.bits[a * self.words + b / 64] & (1 << (b % 64)) != 0
    }
}
