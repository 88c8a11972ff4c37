mod common;

use repograph::code_index::scan_sources;
use repograph::evolution::{apply_commit, parse_diff, ChangeKind, EvolutionConfig};
use repograph::extractor::{build_from_entities, ExtractorConfig};
use repograph::provider::DeterministicProvider;

fn fresh(tree: &std::collections::BTreeMap<String, String>) -> repograph::graph::RpgGraph {
    let p = DeterministicProvider::default();
    build_from_entities(scan_sources(tree), &ExtractorConfig::default(), &p).unwrap().graph
}

#[test]
fn replay_matches_full_rebuild_after_every_commit() {
    let steps = common::stream();
    assert_eq!(steps.len(), 6);
    let p = DeterministicProvider::default();
    let mut g = fresh(&steps[0].before);
    for s in &steps {
        let (before, after) = (scan_sources(&s.before), scan_sources(&s.after));
        let (next, report) = apply_commit(&g, &s.diff, &before, &after, &p, &EvolutionConfig::default())
            .unwrap_or_else(|e| panic!("{}: {e}", s.name));
        assert!(next.validate().is_empty(), "{}: {:?}", s.name, next.validate());
        assert!(report.applied() > 0, "{}", s.name);
        assert!(next.version() > g.version());
        let full = fresh(&s.after);
        let (a, b) = (common::fidelity(&next), common::fidelity(&full));
        assert_eq!(a.leaves.keys().collect::<Vec<_>>(), b.leaves.keys().collect::<Vec<_>>(), "{}", s.name);
        for (id, n) in &a.leaves {
            assert_eq!(n, &b.leaves[id], "{}: leaf {id}", s.name);
        }
        assert_eq!(a.file_children, b.file_children, "{}", s.name);
        assert_eq!(a.low_parents, b.low_parents, "{}", s.name);
        assert_eq!(a.dep_edges, b.dep_edges, "{}", s.name);
        g = next;
    }
}

#[test]
fn stream_events_match_hand_walk() {
    let steps = common::stream();
    let kinds = |i: usize| {
        let s = &steps[i];
        parse_diff(&s.diff, &scan_sources(&s.before), &scan_sources(&s.after))
            .unwrap()
            .into_iter()
            .map(|e| (e.kind, e.entity.display_name()))
            .collect::<Vec<_>>()
    };
    use ChangeKind::*;
    let s = |x: &str| x.to_string();
    assert_eq!(
        kinds(0),
        // Touched lines all sit inside the function body.
        [(Modify, s("sklearn/preprocessing/_data.py:normalize"))]
    );
    assert_eq!(
        kinds(1),
        [
            (Modify, s("sklearn/preprocessing/__init__.py")),
            (Modify, s("sklearn/preprocessing/_data.py")),
            (Insert, s("sklearn/preprocessing/_data.py:robust_scale")),
        ]
    );
    assert_eq!(
        kinds(2),
        [
            (Modify, s("sklearn/metrics/__init__.py")),
            (Insert, s("sklearn/metrics/_classification.py")),
            (Insert, s("sklearn/metrics/_classification.py:_check_targets")),
            (Insert, s("sklearn/metrics/_classification.py:accuracy_score")),
        ]
    );
    assert_eq!(
        kinds(3),
        [
            (Delete, s("sklearn/metrics/_regression.py:mean_absolute_error")),
            (Modify, s("sklearn/metrics/__init__.py")),
            (Modify, s("sklearn/metrics/_regression.py")),
        ]
    );
    assert_eq!(
        kinds(4),
        [
            (Modify, s("sklearn/linear_model/_base.py")),
            // The blank line after the new method lies in the class body.
            (Modify, s("sklearn/linear_model/_base.py:LinearModel")),
            (Modify, s("sklearn/linear_model/_ridge.py:_CholeskySolver.solve")),
            (Insert, s("sklearn/linear_model/_base.py:LinearModel.score")),
        ]
    );
    assert_eq!(
        kinds(5),
        [
            (Delete, s("sklearn/exceptions.py")),
            (Delete, s("sklearn/exceptions.py:DataConversionWarning")),
            (Delete, s("sklearn/exceptions.py:NotFittedError")),
            (Modify, s("sklearn/utils/validation.py")),
            (Insert, s("sklearn/utils/validation.py:DataConversionWarning")),
            (Insert, s("sklearn/utils/validation.py:NotFittedError")),
        ]
    );
}


#[test]
fn drift_gate_is_strict() {
    // (kept, new words) out of ten: drift 0, 0.3, 0.5, 0.7 and 1.0.
    let cases = [(10, 0, 0.0, false), (7, 0, 0.3, false), (5, 0, 0.5, false), (3, 0, 0.7, true), (0, 10, 1.0, true)];
    for (keep, add, want_drift, want_reroute) in cases {
        let (drift, rerouted) = common::drift_trial(keep, add, 0.5);
        assert!((drift - want_drift).abs() < 1e-9, "{keep}/{add}: {drift}");
        assert_eq!(rerouted, want_reroute, "drift {drift}");
    }
}

#[test]
fn empty_diff_is_identity() {
    let tree = common::read_tree(&common::mini_sklearn());
    let (g, report) = common::update_once(&tree, &tree, "", 0.5);
    let base = common::fresh_build(&tree).graph;
    assert_eq!(repograph::graph::serialize(&g), repograph::graph::serialize(&base));
    assert_eq!(report.applied(), 0);
    assert_eq!(report.tokens.request_count, 0);
}

#[test]
fn unknown_delete_is_identity() {
    let mut g = common::fresh_build(&common::read_tree(&common::mini_sklearn())).graph;
    let before = repograph::graph::serialize(&g);
    assert!(repograph::evolution::delete_node(&mut g, "l-doesnotexist0000").is_empty());
    assert_eq!(repograph::graph::serialize(&g), before);
}

mod deletes {
    use proptest::prelude::*;
    use repograph::evolution::delete_node;
    use repograph::graph::FindingKind;

    use super::common;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn deletes_leave_no_empty_abstract_nodes(picks in prop::collection::vec(any::<prop::sample::Index>(), 1..12)) {
            let mut g = common::fresh_build(&common::read_tree(&common::mini_sklearn())).graph;
            for ix in picks {
                let ids: Vec<String> = g.ids().map(str::to_string).collect();
                if ids.is_empty() {
                    break;
                }
                delete_node(&mut g, &ids[ix.index(ids.len())]);
                let r = g.validate();
                prop_assert_eq!(r.count(FindingKind::EmptyAbstractNode), 0, "{:?}", r);
                prop_assert_eq!(r.count(FindingKind::ForestViolated), 0);
                prop_assert_eq!(r.count(FindingKind::DanglingEdge), 0);
            }
        }
    }
}

#[test]
fn same_diff_costs_the_same_on_a_larger_repository() {
    for s in common::stream() {
        let small = common::update_once(&s.before, &s.after, &s.diff, 0.5).1.tokens;
        let big_before = common::inflate(&s.before, 10);
        let big_after = common::inflate(&s.after, 10);
        let big = common::update_once(&big_before, &big_after, &s.diff, 0.5).1.tokens;
        assert_eq!(small, big, "{}", s.name);
    }
}
