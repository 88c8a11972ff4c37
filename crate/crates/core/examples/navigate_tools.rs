//! Search, fetch and explore a built graph the way an agent would.

use std::path::PathBuf;

use repograph::extractor::{build, ExtractorConfig};
use repograph::provider::DeterministicProvider;
use repograph::toolkit::{
    explore_rpg, fetch_node, search_node, ExploreParams, FetchParams, SearchParams, Snapshot, StringList,
};

fn list(items: &[&str]) -> Option<StringList> {
    Some(StringList(items.iter().map(|s| s.to_string()).collect()))
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_sklearn");
    let out = build(&root, &ExtractorConfig::default(), &DeterministicProvider::default()).unwrap();
    let snap = Snapshot::from_entities(out.graph, &out.entities);

    println!("== search: scale features");
    let found = search_node(&snap, &SearchParams::features(&["scale input vectors", "unit norm"])).unwrap();
    for h in found.value.features.iter().take(5) {
        println!("{:.2}  {:<10} {}", h.score, h.entity_type, h.code_entity.as_deref().unwrap_or(&h.feature_path));
    }

    println!("\n== search: snippet `check_array`");
    let found = search_node(&snap, &SearchParams::snippets(&["check_array"])).unwrap();
    for h in found.value.snippets.iter().take(5) {
        println!("{}:{}-{}  {}", h.file_path, h.line_range[0], h.line_range[1], h.text.lines().next().unwrap_or(""));
    }

    println!("\n== fetch");
    let p = FetchParams {
        code_entities: list(&["sklearn/metrics/_regression.py:r2_score", "sklearn/nowhere.py:ghost"]),
        feature_entities: None,
    };
    let fetched = fetch_node(&snap, &p).unwrap();
    for c in &fetched.value.code {
        println!("{} [{}-{}] under {}", c.code_entity, c.start_line, c.end_line, c.feature_path);
        println!("  features: {:?}", c.features);
        for line in c.preview.lines().take(4) {
            println!("  | {line}");
        }
    }
    for w in &fetched.warnings {
        println!("warning: {w}");
    }

    println!("\n== explore: what r2_score reaches");
    let p = ExploreParams {
        start_code_entities: list(&["sklearn/metrics/_regression.py:r2_score"]),
        direction: Some("downstream".into()),
        traversal_depth: Some(2),
        dependency_type_filter: list(&["invokes", "imports"]),
        ..Default::default()
    };
    let reach = explore_rpg(&snap, &p).unwrap();
    for n in &reach.value.nodes {
        println!("{}{} ({})", "  ".repeat(n.depth), n.name, n.entity_type);
    }
    println!("{} edges traversed", reach.value.edges.len());
}
