//! Edge-list topology files and the JSON network document.
//!
//! ```text
//! # comment
//! node fra cores=8 avail=0.999 mem=16
//! node lon cores=8 avail=0.995 end
//! fra lon
//! ```
//!
//! Nodes that only appear in links get [`NodeDefaults`].

use std::collections::BTreeSet;
use std::fmt::Write as _;

use redalloc_core::{Network, NodeId, NodeSpec, TopologyError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeDefaults {
    pub cores: u32,
    pub memory_gb: u32,
    pub avail: f64,
}

impl Default for NodeDefaults {
    fn default() -> Self {
        Self {
            cores: 8,
            memory_gb: 16,
            avail: 0.999,
        }
    }
}

impl NodeDefaults {
    fn spec(&self, name: &str) -> NodeSpec {
        NodeSpec {
            name: name.to_string(),
            cores: self.cores,
            memory_gb: self.memory_gb,
            avail: self.avail,
            end: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct FormatError {
    pub line: usize,
    pub kind: FormatErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatErrorKind {
    #[error("{0}")]
    Malformed(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

fn malformed(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError {
        line,
        kind: FormatErrorKind::Malformed(msg.into()),
    }
}

fn invalid(line: usize, e: TopologyError) -> FormatError {
    FormatError {
        line,
        kind: FormatErrorKind::Topology(e),
    }
}

struct Builder<'d> {
    net: Network,
    declared: BTreeSet<NodeId>,
    defaults: &'d NodeDefaults,
}

impl Builder<'_> {
    fn node(&mut self, name: &str) -> NodeId {
        match self.net.id(name) {
            Some(id) => id,
            None => self
                .net
                .add_node(self.defaults.spec(name))
                .expect("default availability is validated up front"),
        }
    }

    fn declare(&mut self, line: usize, tokens: &[&str]) -> Result<(), FormatError> {
        let Some((&name, attrs)) = tokens.split_first() else {
            return Err(malformed(line, "`node` needs an identifier"));
        };
        let mut spec = self.defaults.spec(name);
        for attr in attrs {
            if *attr == "end" {
                spec.end = true;
                continue;
            }
            let (key, value) = attr
                .split_once('=')
                .ok_or_else(|| malformed(line, format!("expected key=value, got `{attr}`")))?;
            let bad = || malformed(line, format!("bad value for `{key}`: `{value}`"));
            match key {
                "cores" => spec.cores = value.parse().map_err(|_| bad())?,
                "mem" | "memory" => spec.memory_gb = value.parse().map_err(|_| bad())?,
                "avail" => spec.avail = value.parse().map_err(|_| bad())?,
                _ => return Err(malformed(line, format!("unknown attribute `{key}`"))),
            }
        }
        let id = self.node(name);
        if !self.declared.insert(id) {
            return Err(invalid(line, TopologyError::DuplicateNode(name.to_string())));
        }
        self.net
            .update_node(id, spec.cores, spec.memory_gb, spec.avail, spec.end)
            .map_err(|e| invalid(line, e))
    }

    fn link(&mut self, line: usize, a: &str, b: &str) -> Result<(), FormatError> {
        let a = self.node(a);
        let b = self.node(b);
        self.net.add_link(a, b).map_err(|e| invalid(line, e))
    }
}

fn builder(defaults: &NodeDefaults) -> Result<Builder<'_>, FormatError> {
    if !(defaults.avail > 0.0 && defaults.avail <= 1.0) {
        return Err(invalid(
            0,
            TopologyError::InvalidAvailability {
                node: "<defaults>".into(),
                value: defaults.avail,
            },
        ));
    }
    Ok(Builder {
        net: Network::new(),
        declared: BTreeSet::new(),
        defaults,
    })
}

/// Parses an edge-list document. Node ids are assigned in first-seen order.
pub fn parse_edge_list(text: &str, defaults: &NodeDefaults) -> Result<Network, FormatError> {
    let mut b = builder(defaults)?;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["node", rest @ ..] => b.declare(line, rest)?,
            [a, c] => b.link(line, a, c)?,
            _ => return Err(malformed(line, format!("cannot parse `{}`", body.trim()))),
        }
    }
    Ok(b.net)
}

/// Reads a Rocketfuel-style weights file (`<a> <b> <weight>` per line).
/// Both directions of a link usually appear; the reverse copy is dropped.
pub fn parse_weights(text: &str, defaults: &NodeDefaults) -> Result<Network, FormatError> {
    let mut b = builder(defaults)?;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let tokens: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            [x, y] | [x, y, _] => {
                if x == y {
                    continue;
                }
                let (ix, iy) = (b.node(x), b.node(y));
                if !b.net.has_link(ix, iy) {
                    b.net.add_link(ix, iy).map_err(|e| invalid(line, e))?;
                }
            }
            _ => return Err(malformed(line, format!("cannot parse `{}`", raw.trim()))),
        }
    }
    Ok(b.net)
}

/// Writes every node declaration followed by the links.
pub fn write_edge_list(net: &Network) -> String {
    let mut out = String::new();
    for n in net.nodes() {
        let _ = write!(out, "node {} cores={} mem={} avail={}", n.name, n.cores, n.memory_gb, n.avail);
        if n.end {
            out.push_str(" end");
        }
        out.push('\n');
    }
    for &(a, b) in net.links() {
        let _ = writeln!(out, "{} {}", net.name(a), net.name(b));
    }
    out
}

/// JSON form of a network, embedded in plans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<(String, String)>,
}

impl From<&Network> for NetworkDoc {
    fn from(net: &Network) -> Self {
        Self {
            nodes: net.nodes().to_vec(),
            links: net
                .links()
                .iter()
                .map(|&(a, b)| (net.name(a).to_string(), net.name(b).to_string()))
                .collect(),
        }
    }
}

impl NetworkDoc {
    pub fn to_network(&self) -> Result<Network, TopologyError> {
        let mut net = Network::new();
        for n in &self.nodes {
            net.add_node(n.clone())?;
        }
        for (a, b) in &self.links {
            let ia = net.id(a).ok_or_else(|| TopologyError::UnknownNode(a.clone()))?;
            let ib = net.id(b).ok_or_else(|| TopologyError::UnknownNode(b.clone()))?;
            net.add_link(ia, ib)?;
        }
        Ok(net)
    }
}
