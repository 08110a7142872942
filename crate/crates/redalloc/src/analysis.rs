//! Dependency-index dumps for `analyze-topology`.

use redalloc_core::{DependencyProfile, Network};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeAnalysis {
    pub node: String,
    pub end: bool,
    pub critical: Vec<String>,
    pub correlated: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyAnalysis {
    pub threshold: f64,
    pub depth: u32,
    /// Share of nodes that fall in at least one correlated set.
    pub coverage: f64,
    pub nodes: Vec<NodeAnalysis>,
}

pub fn analyze(net: &Network, profile: &DependencyProfile) -> TopologyAnalysis {
    let names = |set: &std::collections::BTreeSet<_>| set.iter().map(|&i| net.name(i).to_owned()).collect();
    TopologyAnalysis {
        threshold: profile.threshold,
        depth: profile.depth,
        coverage: profile.coverage(),
        nodes: net
            .node_ids()
            .map(|n| NodeAnalysis {
                node: net.name(n).to_owned(),
                end: net.is_end(n),
                critical: names(profile.critical(n)),
                correlated: names(profile.correlated(n)),
            })
            .collect(),
    }
}

/// `i,n,di` rows over every ordered pair of distinct nodes.
pub fn di_csv(net: &Network, profile: &DependencyProfile) -> String {
    let mut out = String::from("i,n,di\n");
    for i in net.node_ids() {
        for n in net.node_ids().filter(|&n| n != i) {
            out.push_str(&format!("{},{},{}\n", net.name(i), net.name(n), profile.table.get(i, n)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{parse_edge_list, NodeDefaults};

    #[test]
    fn path_graph_dump() {
        let net = parse_edge_list("a b\nb c\nc d\n", &NodeDefaults::default()).unwrap();
        let p = DependencyProfile::build(&net, 0.5, 2).unwrap();
        let a = analyze(&net, &p);
        assert_eq!(a.nodes[0].critical, ["b"]);
        let csv = di_csv(&net, &p);
        assert_eq!(csv.lines().count(), 1 + 12);
        assert!(csv.contains("\na,b,1\n"));
        assert!(csv.contains("\nd,b,0.5\n"));
    }
}
