//! Replay the fixture commit stream on a graph and compare with a rebuild.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use repograph::code_index::scan_sources;
use repograph::evolution::{apply_commit, apply_patch, parse_diff, parse_unified_diff, EvolutionConfig};
use repograph::extractor::{build_from_entities, ExtractorConfig};
use repograph::graph::serialize;
use repograph::provider::DeterministicProvider;

fn read_tree(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for e in walkdir::WalkDir::new(root).sort_by_file_name() {
        let e = e.unwrap();
        if e.file_type().is_file() {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            out.insert(rel, std::fs::read_to_string(e.path()).unwrap());
        }
    }
    out
}

fn main() {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let provider = DeterministicProvider::default();
    let config = ExtractorConfig::default();
    let mut tree = read_tree(&fixtures.join("mini_sklearn"));
    let mut graph = build_from_entities(scan_sources(&tree), &config, &provider).unwrap().graph;

    let mut diffs: Vec<PathBuf> = std::fs::read_dir(fixtures.join("stream")).unwrap().map(|e| e.unwrap().path()).collect();
    diffs.sort();
    for path in diffs {
        let text = std::fs::read_to_string(&path).unwrap();
        let after = apply_patch(&tree, &parse_unified_diff(&text).unwrap()).unwrap();
        let (b, a) = (scan_sources(&tree), scan_sources(&after));
        println!("{}", path.file_name().unwrap().to_string_lossy());
        for ev in parse_diff(&text, &b, &a).unwrap() {
            println!("  {:?} {}", ev.kind, ev.entity.display_name());
        }
        let (next, report) = apply_commit(&graph, &text, &b, &a, &provider, &EvolutionConfig::default()).unwrap();
        println!(
            "  applied {}; rerouted {}; deps +{} -{}; ~{} prompt tokens",
            report.applied(),
            report.rerouted.len(),
            report.deps_added,
            report.deps_removed,
            report.tokens.prompt_tokens_est
        );
        graph = next;
        tree = after;
    }

    let rebuilt = build_from_entities(scan_sources(&tree), &config, &provider).unwrap();
    let same_leaves = graph.nodes().filter(|n| !n.is_high()).all(|n| rebuilt.graph.node(&n.id) == Some(n));
    println!("leaves match a rebuild: {same_leaves}");
    println!("dependency edges match: {}", graph.dep_edges() == rebuilt.graph.dep_edges());
    println!("updated graph is {} bytes, valid: {}", serialize(&graph).len(), graph.validate().is_empty());
}
