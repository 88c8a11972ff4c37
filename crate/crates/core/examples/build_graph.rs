//! Build a graph for a repository and print its feature hierarchy.
//!
//! ```text
//! cargo run --example build_graph -- [REPO_DIR]
//! ```

use std::path::PathBuf;

use repograph::extractor::{build, ExtractorConfig};
use repograph::graph::{serialize, RpgGraph};
use repograph::provider::DeterministicProvider;

fn print_tree(g: &RpgGraph, id: &str, depth: usize) {
    let n = g.node(id).unwrap();
    if n.is_high() {
        let scopes = n.metadata.grounded_scopes.clone().unwrap_or_default();
        println!("{}{} {:?}", "  ".repeat(depth), n.name(), scopes);
        for c in g.children(id) {
            print_tree(g, c, depth + 1);
        }
    } else {
        let features: Vec<&str> = n.feature.iter().take(2).map(|f| f.as_str()).collect();
        println!("{}{} ({} symbols) {:?}", "  ".repeat(depth), n.name(), g.descendant_lows(id).len(), features);
    }
}

fn main() {
    let root = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_sklearn"));
    let provider = DeterministicProvider::default();
    let out = build(&root, &ExtractorConfig::default(), &provider).expect("build failed");
    let g = &out.graph;

    for area in g.areas() {
        print_tree(g, &area.id, 0);
    }
    println!();
    println!("{} nodes, {} dependency edges, {} diagnostics", g.len(), g.dep_edges().len(), out.diagnostics.len());
    for (stage, acct) in &out.accounts {
        println!("{stage:>10}: {} requests, ~{} prompt tokens", acct.request_count, acct.prompt_tokens_est);
    }
    println!("serialized size: {} bytes", serialize(g).len());
}
