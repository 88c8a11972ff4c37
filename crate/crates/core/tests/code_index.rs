mod common;

use std::collections::BTreeSet;

use repograph::code_index::{edge_triples, extract_dependencies, scan_repository, scan_sources, EntityKind, ScanOptions};

#[test]
fn fixture_entities_match_oracle() {
    let es = scan_repository(&common::mini_sklearn(), &ScanOptions::default()).unwrap();
    let got: BTreeSet<(String, String)> =
        es.entities().iter().map(|e| (e.kind.to_string(), e.display_name())).collect();
    let oracle = common::code_oracle();
    assert_eq!(got, oracle.entity_names());
    assert_eq!(es.entities().len(), 64);
    assert!(es.diagnostics().iter().all(|d| !d.issue.contains("parse error")));
}

#[test]
fn fixture_dependency_edges_match_oracle() {
    let es = scan_repository(&common::mini_sklearn(), &ScanOptions::default()).unwrap();
    assert_eq!(es.dep_edges().len(), 52, "one contains edge per non-file entity");
    let (edges, _) = extract_dependencies(&es);
    let mut got = edge_triples(&edges);
    got.sort();
    let want = common::code_oracle().edge_triples();
    let extra: Vec<_> = got.iter().filter(|e| !want.contains(e)).collect();
    let missing: Vec<_> = want.iter().filter(|e| !got.contains(e)).collect();
    assert!(extra.is_empty() && missing.is_empty(), "extra {extra:#?}\nmissing {missing:#?}");
    assert_eq!(got.len(), want.len());
}

#[test]
fn entity_at_picks_innermost() {
    let es = scan_repository(&common::mini_sklearn(), &ScanOptions::default()).unwrap();
    let data = "sklearn/preprocessing/_data.py";
    let table = [
        (109, "StandardScaler.transform.scale_row"),
        (101, "StandardScaler.transform.scale_row"),
        (112, "StandardScaler.transform"),
        (95, "StandardScaler.transform"),
        (82, "StandardScaler.transform"),
        (176, "MinMaxScaler.transform"),
        (121, "MinMaxScaler"),
    ];
    for (line, q) in table {
        assert_eq!(es.entity_at(data, line).unwrap().qualified_name.as_deref(), Some(q), "line {line}");
    }
    // Module docstring and blank lines fall back to the file.
    assert_eq!(es.entity_at(data, 1).unwrap().kind, EntityKind::File);
    let base = "sklearn/linear_model/_base.py";
    assert_eq!(es.entity_at(base, 33).unwrap().qualified_name.as_deref(), Some("_solve_normal_equations.pivot"));
    // A decorated definition starts at its decorator.
    let center = es.entity_at(base, 63).unwrap();
    assert_eq!(center.qualified_name.as_deref(), Some("LinearModel._center"));
    assert_eq!((center.span.start, center.span.end), (63, 75));
    assert!(es.entity_at("sklearn/nope.py", 1).is_err());
}

#[test]
fn in_memory_scan_matches_disk_scan() {
    let disk = scan_repository(&common::mini_sklearn(), &ScanOptions::default()).unwrap();
    let mem = scan_sources(common::read_tree(&common::mini_sklearn()));
    assert_eq!(disk.entities(), mem.entities());
    assert_eq!(extract_dependencies(&disk).0, extract_dependencies(&mem).0);
}

#[test]
fn exclude_globs_drop_files() {
    let opts = ScanOptions { exclude_globs: vec!["**/__init__.py".into()], ..ScanOptions::default() };
    let es = scan_repository(&common::mini_sklearn(), &opts).unwrap();
    let files: BTreeSet<&str> = es.paths().collect();
    assert_eq!(files.len(), 8);
    assert!(!files.iter().any(|f| f.ends_with("__init__.py")));
}

#[test]
fn syntax_error_keeps_bare_file() {
    let es = scan_sources([("ok.py", "def f():\n    return 1\n"), ("bad.py", "def broken(:\n")]);
    assert!(es.entities().iter().any(|e| e.path == "bad.py" && e.kind == EntityKind::File));
    assert!(!es.entities().iter().any(|e| e.path == "bad.py" && e.kind != EntityKind::File));
    assert_eq!(es.diagnostics().len(), 1);
}
