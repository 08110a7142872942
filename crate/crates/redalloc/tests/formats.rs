use redalloc::config::FileFormat;
use redalloc::flows::{flows_doc, load_flows, FlowsDoc};
use redalloc::format::{parse_edge_list, parse_weights, write_edge_list, FormatErrorKind, NetworkDoc, NodeDefaults};
use redalloc::generate::{generate_flows, preferential_attachment, FlowGen, Stream};
use redalloc_core::{Model, ReservationMode};
use proptest::prelude::*;

#[test]
fn weights_and_edge_list_agree() {
    let d = NodeDefaults::default();
    let w = parse_weights("a b 3\nb a 3\nb c 1\n", &d).unwrap();
    let e = parse_edge_list("a b\nb c\n", &d).unwrap();
    assert_eq!(write_edge_list(&w), write_edge_list(&e));
}

#[test]
fn errors_carry_line_numbers() {
    let d = NodeDefaults::default();
    let err = parse_edge_list("a b\n# fine\nnode c cores=x\n", &d).unwrap_err();
    assert_eq!(err.line, 3);
    assert!(matches!(err.kind, FormatErrorKind::Malformed(_)));
    let err = parse_edge_list("a b\nb a\n", &d).unwrap_err();
    assert_eq!(err.line, 2);
    assert!(matches!(err.kind, FormatErrorKind::Topology(_)));
    assert!(parse_edge_list("node a avail=1.5\n", &d).is_err());
    assert_eq!(parse_edge_list("", &d).unwrap().len(), 0);
}

#[test]
fn format_guess_by_extension() {
    assert_eq!(FileFormat::from_path("x/net.json".as_ref()), FileFormat::Json);
    assert_eq!(FileFormat::from_path("net.weights".as_ref()), FileFormat::Weights);
    assert_eq!(FileFormat::from_path("net.topo".as_ref()), FileFormat::EdgeList);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn edge_list_round_trip(seed in any::<u64>(), nodes in 2usize..30, extra in 0usize..20) {
        let links = (nodes - 1 + extra).min(nodes * (nodes - 1) / 2);
        let net = preferential_attachment(nodes, links, &NodeDefaults::default(), &mut Stream::Topology.rng(seed, 0)).unwrap();
        let text = write_edge_list(&net);
        let back = parse_edge_list(&text, &NodeDefaults::default()).unwrap();
        prop_assert_eq!(write_edge_list(&back), text);
        let doc = NetworkDoc::from(&net);
        let json = serde_json::to_string(&doc).unwrap();
        let again = serde_json::from_str::<NetworkDoc>(&json).unwrap().to_network().unwrap();
        prop_assert_eq!(write_edge_list(&again), write_edge_list(&net));
    }

    #[test]
    fn flows_document_round_trip(seed in any::<u64>()) {
        let mut net = preferential_attachment(12, 20, &NodeDefaults::default(), &mut Stream::Topology.rng(seed, 0)).unwrap();
        redalloc::generate::mark_end_nodes(&mut net, 0.3);
        let catalog: Vec<_> = redalloc::flows::default_catalog().iter().map(|t| t.to_type(0.999)).collect();
        let mut model = Model::new(catalog.clone(), vec![0.999, 0.9999], ReservationMode::Shared);
        let gen = FlowGen { count: 8, ..FlowGen::default() };
        generate_flows(&gen, &net, &mut model, &mut Stream::Flows.rng(seed, 0)).unwrap();
        let doc = flows_doc(&net, &model);
        let text = serde_json::to_string(&doc).unwrap();
        let parsed: FlowsDoc = serde_json::from_str(&text).unwrap();
        let mut reloaded = Model::new(catalog, vec![0.999, 0.9999], ReservationMode::Shared);
        load_flows(&parsed, &net, &mut reloaded).unwrap();
        prop_assert_eq!(reloaded.flows, model.flows);
    }
}
