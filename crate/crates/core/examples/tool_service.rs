//! Answer newline-delimited JSON tool requests, as the `serve` command does.

use std::io::Cursor;
use std::path::PathBuf;

use repograph::extractor::{build, ExtractorConfig};
use repograph::provider::DeterministicProvider;
use repograph::toolkit::service::{serve_lines, SnapshotStore};
use repograph::toolkit::Snapshot;

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_sklearn");
    let out = build(&root, &ExtractorConfig::default(), &DeterministicProvider::default()).unwrap();
    let store = SnapshotStore::new(Snapshot::from_entities(out.graph, &out.entities));

    let requests = [
        r#"{"id":1,"tool_name":"SearchNode","parameters":{"mode":"features","feature_terms":"validate input data","search_scopes":["Utils"]}}"#,
        r#"{"id":2,"tool_name":"FetchNode","parameters":{"code_entities":"sklearn/utils/validation.py:check_array"}}"#,
        r#"{"id":3,"tool_name":"ExploreRPG","parameters":{"start_code_entities":"sklearn/utils/validation.py:check_array","direction":"upstream","traversal_depth":1}}"#,
        r#"{"id":4,"tool_name":"ExploreRPG","parameters":{"start":"oops"}}"#,
        "not json",
    ]
    .join("\n");

    let mut output = Vec::new();
    let n = serve_lines(&store, Cursor::new(requests), &mut output).unwrap();
    println!("answered {n} requests");
    for line in String::from_utf8(output).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let summary = match (&v["result"], &v["error"]) {
            (r, _) if !r.is_null() => {
                let s = r.to_string();
                format!("{}...", s.chars().take(100).collect::<String>())
            }
            (_, e) => format!("error: {}", e.as_str().unwrap_or("")),
        };
        println!("#{} {} ok={} {}", v["id"], v["tool_name"], v["ok"], summary);
    }
}
