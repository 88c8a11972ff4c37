mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use repograph::code_index::DepKind;
use repograph::extractor::{build, ExtractorConfig};
use repograph::graph::{deserialize, serialize, DecodeError, DepLink, FindingKind, Level, RpgGraph};
use repograph::provider::DeterministicProvider;

fn fixture() -> RpgGraph {
    build(&common::mini_sklearn(), &ExtractorConfig::default(), &DeterministicProvider::default()).unwrap().graph
}

fn forest_shape_holds(g: &RpgGraph) {
    let roots = g.roots().count();
    assert_eq!(g.feature_edges().count(), g.len() - roots);
    for n in g.nodes() {
        let parents = g.parents_of(&n.id).count();
        if n.level == Level::Area {
            assert_eq!(parents, 0, "{}", n.id);
        } else {
            assert_eq!(parents, 1, "{}", n.id);
        }
    }
}

#[test]
fn fixture_round_trip_is_byte_identical() {
    let g = fixture();
    let bytes = serialize(&g);
    let back = deserialize(&bytes).unwrap();
    assert_eq!(back, g);
    assert_eq!(serialize(&back), bytes);
    forest_shape_holds(&g);
}

#[test]
fn validate_reports_each_defect() {
    let base = fixture();
    assert!(base.validate().is_empty());
    let file = base.file_nodes().next().unwrap().id.clone();
    let area = base.areas().next().unwrap().id.clone();
    let other_area = base.areas().nth(1).unwrap().id.clone();

    let mut g = base.clone();
    g.add_dep_edge(DepLink { src: file.clone(), dst: "l-0000000000000000".into(), kind: DepKind::Invokes });
    assert!(g.validate().count(FindingKind::DanglingEdge) > 0);

    let mut g = base.clone();
    g.add_dep_edge(DepLink { src: file.clone(), dst: file.clone(), kind: DepKind::Imports });
    assert!(g.validate().count(FindingKind::SelfEdge) > 0);

    // Recursion is a legitimate self edge.
    let mut g = base.clone();
    g.add_dep_edge(DepLink { src: file.clone(), dst: file.clone(), kind: DepKind::Invokes });
    assert!(g.validate().is_empty());

    let mut g = base.clone();
    g.add_dep_edge(DepLink { src: area.clone(), dst: file.clone(), kind: DepKind::Imports });
    assert!(g.validate().count(FindingKind::DepEdgeOnHighNode) > 0);

    let mut g = base.clone();
    let child = g.children(&file).next().map(str::to_string);
    if let Some(c) = child {
        g.add_dep_edge(DepLink { src: file.clone(), dst: c, kind: DepKind::Contains });
        assert!(g.validate().count(FindingKind::ContainsInDependencies) > 0);
    }

    let mut g = base.clone();
    g.link_unchecked(&other_area, &file);
    assert!(g.validate().count(FindingKind::ForestViolated) > 0);

    let mut g = base.clone();
    g.link_unchecked(&file, &area);
    assert!(!g.validate().is_empty());
}

#[test]
fn add_node_enforces_levels() {
    let g = fixture();
    let mut h = g.clone();
    let file = g.file_nodes().next().unwrap().clone();
    let area = g.areas().next().unwrap().id.clone();
    // Re-adding is a duplicate; a file straight under an area is illegal.
    assert!(h.add_node(file.clone(), Some(&area)).is_err());
    let mut fresh = file.clone();
    fresh.id = "l-ffffffffffffffff".into();
    assert!(h.add_node(fresh, Some(&area)).is_err());
}

#[test]
fn decode_errors_point_at_the_problem() {
    match deserialize(b"{\n  \"nodes\": [,]\n}") {
        Err(DecodeError::Syntax { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a syntax error, got {other:?}"),
    }
    let g = fixture();
    let text = String::from_utf8(serialize(&g)).unwrap().replacen("\"level\": \"file\"", "\"level\": \"folder\"", 1);
    assert!(matches!(deserialize(text.as_bytes()), Err(DecodeError::Schema { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_graphs_round_trip(seed in any::<u64>(), files in 1usize..12) {
        let g = common::random_graph(&mut ChaCha8Rng::seed_from_u64(seed), files);
        let bytes = serialize(&g);
        let back = deserialize(&bytes).unwrap();
        prop_assert_eq!(serialize(&back), bytes);
        prop_assert_eq!(back.feature_edges().count(), back.len() - back.roots().count());
    }
}
