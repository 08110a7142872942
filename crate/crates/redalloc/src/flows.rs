//! NF catalog and flow documents (JSON).
//!
//! Flows name their endpoints and NF types; they may also carry externally
//! computed primary chains, which are loaded as given.

use std::collections::BTreeMap;

use redalloc_core::{
    ClassId, FlowId, FlowSpec, InstanceId, Model, Network, NfType, NfTypeId, NodeId, PrimaryBinding, Role,
};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NfTypeDoc {
    pub name: String,
    #[serde(default = "one")]
    pub cores: u32,
    #[serde(default = "two")]
    pub memory_gb: u32,
    pub capacity_pps: f64,
    /// Worst-case instance availability; defaults to the low end of the
    /// scenario's instance availability range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avail: Option<f64>,
}

fn one() -> u32 {
    1
}

fn two() -> u32 {
    2
}

impl NfTypeDoc {
    pub fn new(name: &str, capacity_pps: f64) -> Self {
        Self {
            name: name.to_string(),
            cores: 1,
            memory_gb: 2,
            capacity_pps,
            avail: None,
        }
    }

    pub fn to_type(&self, default_avail: f64) -> NfType {
        NfType {
            name: self.name.clone(),
            cores: self.cores,
            memory_gb: self.memory_gb,
            capacity: self.capacity_pps,
            avail: self.avail.unwrap_or(default_avail),
        }
    }
}

/// Five NF types with 10 Mpps capacity on one core and 2 GB.
pub fn default_catalog() -> Vec<NfTypeDoc> {
    ["FW", "DPI", "NAT", "IDS", "Proxy"]
        .iter()
        .map(|n| NfTypeDoc::new(n, 10e6))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub id: u32,
    pub nf: String,
    pub host: String,
    pub avail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BindingDoc {
    /// Ids from the document's instance list, in chain order.
    pub instances: Vec<u32>,
    pub path: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDoc {
    pub id: u32,
    pub src: String,
    pub dst: String,
    pub rate_pps: f64,
    pub chain: Vec<String>,
    pub avail_req: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary: Option<BindingDoc>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowsDoc {
    /// Primary instances referenced by bindings.
    pub instances: Vec<InstanceDoc>,
    pub flows: Vec<FlowDoc>,
}

fn config(msg: String) -> HarnessError {
    HarnessError::Config(msg)
}

fn node(net: &Network, name: &str, flow: u32) -> Result<NodeId, HarnessError> {
    net.id(name)
        .ok_or_else(|| config(format!("flow {flow}: unknown node `{name}`")))
}

/// Class index of a requirement; classes must contain it exactly.
pub fn class_of(classes: &[f64], req: f64) -> Option<ClassId> {
    classes.iter().position(|&c| c == req).map(|c| ClassId(c as u32))
}

/// Adds the document's flows (and any primary instances they bind) to
/// `model`. Flow ids must be `0..n` in order. Bound primaries reserve the
/// flow rate.
pub fn load_flows(doc: &FlowsDoc, net: &Network, model: &mut Model) -> Result<(), HarnessError> {
    let mut local: BTreeMap<u32, InstanceId> = BTreeMap::new();
    for inst in &doc.instances {
        let nf = model
            .nf_id(&inst.nf)
            .ok_or_else(|| config(format!("instance {}: unknown NF `{}`", inst.id, inst.nf)))?;
        let host = net
            .id(&inst.host)
            .ok_or_else(|| config(format!("instance {}: unknown node `{}`", inst.id, inst.host)))?;
        if !(inst.avail > 0.0 && inst.avail <= 1.0) {
            return Err(config(format!("instance {}: availability outside (0, 1]", inst.id)));
        }
        let id = model.add_instance(net, nf, host, Role::Primary, inst.avail)?;
        if local.insert(inst.id, id).is_some() {
            return Err(config(format!("instance id {} listed twice", inst.id)));
        }
    }
    let base = model.flows.len() as u32;
    for (k, f) in doc.flows.iter().enumerate() {
        if f.id != k as u32 {
            return Err(config(format!("flow ids must be 0..n in order; found {} at {k}", f.id)));
        }
        let chain = f
            .chain
            .iter()
            .map(|n| model.nf_id(n).ok_or_else(|| config(format!("flow {}: unknown NF `{n}`", f.id))))
            .collect::<Result<Vec<NfTypeId>, _>>()?;
        let class = class_of(&model.classes, f.avail_req)
            .ok_or_else(|| config(format!("flow {}: requirement {} matches no class", f.id, f.avail_req)))?;
        let spec = FlowSpec {
            id: FlowId(base + f.id),
            src: node(net, &f.src, f.id)?,
            dst: node(net, &f.dst, f.id)?,
            rate: f.rate_pps,
            chain,
            class,
            avail_req: f.avail_req,
            primary: None,
            primary_avail: 0.0,
        };
        redalloc_core::model::validate_flow(&spec)?;
        model.flows.push(spec);
        if let Some(b) = &f.primary {
            let instances = b
                .instances
                .iter()
                .map(|i| {
                    local
                        .get(i)
                        .copied()
                        .ok_or_else(|| config(format!("flow {}: unknown instance {i}", f.id)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let path = b
                .path
                .iter()
                .map(|n| node(net, n, f.id))
                .collect::<Result<Vec<_>, _>>()?;
            let id = FlowId(base + f.id);
            for &i in &instances {
                model.instances[i.index()]
                    .ledger
                    .reserve(id, f.rate_pps, &|_: FlowId, _: FlowId| false)
                    .map_err(|e| config(format!("flow {}: primary instance {}: {e}", f.id, i.0)))?;
            }
            model.bind_primary(net, id, PrimaryBinding { instances, path })?;
        }
    }
    Ok(())
}

/// Document form of the model's flows and primaries.
pub fn flows_doc(net: &Network, model: &Model) -> FlowsDoc {
    let instances = model
        .primaries()
        .map(|i| InstanceDoc {
            id: i.id.0,
            nf: model.nf(i.nf).name.clone(),
            host: net.name(i.host).to_string(),
            avail: i.avail,
        })
        .collect();
    let flows = model
        .flows
        .iter()
        .map(|f| FlowDoc {
            id: f.id.0,
            src: net.name(f.src).to_string(),
            dst: net.name(f.dst).to_string(),
            rate_pps: f.rate,
            chain: f.chain.iter().map(|&t| model.nf(t).name.clone()).collect(),
            avail_req: f.avail_req,
            primary: f.primary.as_ref().map(|b| BindingDoc {
                instances: b.instances.iter().map(|i| i.0).collect(),
                path: b.path.iter().map(|&n| net.name(n).to_string()).collect(),
            }),
        })
        .collect();
    FlowsDoc { instances, flows }
}
