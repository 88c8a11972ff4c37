//! Structural checks over a whole graph.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{low_node_id, Level, NodeKind, RpgGraph};
use crate::code_index::DepKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    DanglingEdge,
    ForestViolated,
    IllegalLevelPair,
    AbstractDepth,
    DepEdgeOnHighNode,
    ContainsInDependencies,
    SelfEdge,
    EmptyAbstractNode,
    DuplicateFeature,
    MetadataMismatch,
    IdMismatch,
    ScopesNotAntichain,
    ScopesNotCovering,
    ScopesMissing,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::DanglingEdge => "dangling edge",
            FindingKind::ForestViolated => "forest violated",
            FindingKind::IllegalLevelPair => "illegal level pair",
            FindingKind::AbstractDepth => "abstract depth",
            FindingKind::DepEdgeOnHighNode => "dependency edge on high node",
            FindingKind::ContainsInDependencies => "contains edge in dependency view",
            FindingKind::SelfEdge => "self edge",
            FindingKind::EmptyAbstractNode => "empty abstract node",
            FindingKind::DuplicateFeature => "duplicate feature",
            FindingKind::MetadataMismatch => "metadata mismatch",
            FindingKind::IdMismatch => "id mismatch",
            FindingKind::ScopesNotAntichain => "scopes not an antichain",
            FindingKind::ScopesNotCovering => "scopes do not cover leaves",
            FindingKind::ScopesMissing => "scopes missing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub node_ids: Vec<String>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} [{}]", self.kind.as_str(), self.message, self.node_ids.join(", "))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn count(&self, kind: FindingKind) -> usize {
        self.findings.iter().filter(|f| f.kind == kind).count()
    }

    fn push(&mut self, kind: FindingKind, ids: &[&str], message: impl Into<String>) {
        self.findings.push(Finding {
            kind,
            node_ids: ids.iter().map(|s| s.to_string()).collect(),
            message: message.into(),
        });
    }
}

/// Directory of a repo path; `""` for files at the root.
pub fn dir_of(path: &str) -> &str {
    path.rfind('/').map_or("", |i| &path[..i])
}

/// Whether `scope` is a segment-wise prefix of `dir` (the empty scope covers
/// everything).
pub fn scope_covers(scope: &str, dir: &str) -> bool {
    scope.is_empty() || dir == scope || dir.strip_prefix(scope).is_some_and(|r| r.starts_with('/'))
}

pub(super) fn validate(g: &RpgGraph) -> ValidationReport {
    let mut r = ValidationReport::default();

    for (p, c) in g.feature_edges() {
        if !g.contains(p) || !g.contains(c) {
            r.push(FindingKind::DanglingEdge, &[p, c], "feature edge endpoint missing");
        }
    }
    for e in g.dep_edges() {
        if !g.contains(&e.src) || !g.contains(&e.dst) {
            r.push(FindingKind::DanglingEdge, &[&e.src, &e.dst], format!("{} edge endpoint missing", e.kind));
        }
    }

    let any_scopes = g.nodes().any(|n| n.metadata.grounded_scopes.is_some());

    for n in g.nodes() {
        let id = n.id.as_str();
        let parents: Vec<&str> = g.parents_of(id).collect();
        if n.kind != n.level.node_kind() {
            r.push(FindingKind::MetadataMismatch, &[id], format!("kind {} at level {}", n.kind.as_str(), n.level));
        }
        match (n.level, parents.len()) {
            (Level::Area, 0) => {}
            (Level::Area, _) => r.push(FindingKind::ForestViolated, &[id], "area node has a parent"),
            (_, 0) => r.push(FindingKind::ForestViolated, &[id], "node has no parent"),
            (_, 1) => {}
            (_, k) => r.push(FindingKind::ForestViolated, &[id], format!("node has {k} parents")),
        }
        for p in &parents {
            if let Some(pn) = g.node(p) {
                if !pn.level.admits(n.level) {
                    r.push(
                        FindingKind::IllegalLevelPair,
                        &[p, id],
                        format!("{} above {}", pn.level, n.level),
                    );
                }
            }
        }
        let mut seen = BTreeSet::new();
        if n.feature.iter().any(|p| !seen.insert(p)) {
            r.push(FindingKind::DuplicateFeature, &[id], "feature list has duplicates");
        }

        if n.is_high() {
            let lows = g.descendant_lows(id);
            // A bare area is a retained root, not a dangling abstraction.
            let bare_area = n.level == Level::Area && g.child_count(id) == 0;
            if lows.is_empty() && !bare_area {
                r.push(FindingKind::EmptyAbstractNode, &[id], format!("{} has no low-level descendants", n.level));
            }
            if n.metadata.path.is_some() || n.metadata.entity_kind.is_some() || n.metadata.span.is_some() {
                r.push(FindingKind::MetadataMismatch, &[id], "high node carries code metadata");
            }
            match &n.metadata.grounded_scopes {
                Some(scopes) => {
                    let list: Vec<&String> = scopes.iter().collect();
                    for (i, a) in list.iter().enumerate() {
                        for b in list.iter().skip(i + 1) {
                            if scope_covers(a, b) || scope_covers(b, a) {
                                r.push(
                                    FindingKind::ScopesNotAntichain,
                                    &[id],
                                    format!("`{a}` and `{b}` are nested"),
                                );
                            }
                        }
                    }
                    for l in &lows {
                        let Some(path) = &l.metadata.path else { continue };
                        let d = dir_of(path);
                        if !scopes.iter().any(|s| scope_covers(s, d)) {
                            r.push(
                                FindingKind::ScopesNotCovering,
                                &[id, &l.id],
                                format!("directory `{d}` not covered"),
                            );
                        }
                    }
                }
                None if any_scopes => r.push(FindingKind::ScopesMissing, &[id], "high node lacks scopes"),
                None => {}
            }
        } else {
            let m = &n.metadata;
            if m.grounded_scopes.is_some() || m.name.is_some() {
                r.push(FindingKind::MetadataMismatch, &[id], "low node carries high-node metadata");
            }
            match (&m.path, m.entity_kind, m.span) {
                (Some(path), Some(kind), Some(span)) => {
                    if Some(kind) != n.level.entity_kind() {
                        r.push(FindingKind::MetadataMismatch, &[id], format!("entity kind {kind} at level {}", n.level));
                    }
                    if (kind == crate::code_index::EntityKind::File) != m.qualified_name.is_none() {
                        r.push(FindingKind::MetadataMismatch, &[id], "qualified name presence does not match kind");
                    }
                    if span.start > span.end || span.start == 0 {
                        r.push(FindingKind::MetadataMismatch, &[id], "bad span");
                    }
                    if low_node_id(path, m.qualified_name.as_deref(), kind) != n.id {
                        r.push(FindingKind::IdMismatch, &[id], "id does not match content hash");
                    }
                }
                _ => r.push(FindingKind::MetadataMismatch, &[id], "low node lacks path, kind or span"),
            }
            if n.level == Level::File && parents.len() == 1 {
                let chain: Vec<Level> = g.ancestors(id).iter().filter_map(|a| g.node(a)).map(|a| a.level).collect();
                if chain != [Level::Subcategory, Level::Category, Level::Area] {
                    r.push(
                        FindingKind::AbstractDepth,
                        &[id],
                        format!(
                            "ancestor chain is [{}]",
                            chain.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(", ")
                        ),
                    );
                }
            }
        }
    }

    // Cycles leave nodes unreachable from any root.
    let mut reachable = BTreeSet::new();
    for root in g.roots() {
        for d in g.subtree(&root.id) {
            reachable.insert(d);
        }
    }
    for n in g.nodes() {
        if !reachable.contains(&n.id) {
            r.push(FindingKind::ForestViolated, &[&n.id], "node not reachable from a root");
        }
    }

    for e in g.dep_edges() {
        let (Some(s), Some(d)) = (g.node(&e.src), g.node(&e.dst)) else { continue };
        if s.kind == NodeKind::High || d.kind == NodeKind::High {
            r.push(FindingKind::DepEdgeOnHighNode, &[&e.src, &e.dst], format!("{} edge", e.kind));
        }
        if e.kind == DepKind::Contains {
            r.push(FindingKind::ContainsInDependencies, &[&e.src, &e.dst], "containment belongs to feature edges");
        }
        if e.src == e.dst && e.kind != DepKind::Invokes {
            r.push(FindingKind::SelfEdge, &[&e.src], format!("{} self edge", e.kind));
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::super::{RpgNode, DepLink};
    use super::*;
    use crate::code_index::{EntityRef, Span};

    fn graph() -> (RpgGraph, Vec<String>) {
        let mut g = RpgGraph::new();
        let a = RpgNode::high(Level::Area, "Io", &["Io"]);
        let c = RpgNode::high(Level::Category, "read data", &["Io", "read data"]);
        let s = RpgNode::high(Level::Subcategory, "parse csv", &["Io", "read data", "parse csv"]);
        let f = RpgNode::low(&EntityRef::file("io/csv.py", Span::new(1, 3)), vec![]);
        let ids = vec![a.id.clone(), c.id.clone(), s.id.clone(), f.id.clone()];
        g.add_node(a, None).unwrap();
        g.add_node(c, Some(&ids[0])).unwrap();
        g.add_node(s, Some(&ids[1])).unwrap();
        g.add_node(f, Some(&ids[2])).unwrap();
        (g, ids)
    }

    #[test]
    fn clean_graph_has_no_findings() {
        let (g, _) = graph();
        assert!(g.validate().is_empty(), "{:?}", g.validate());
    }

    #[test]
    fn orphaned_category_is_one_empty_node_finding() {
        let (mut g, ids) = graph();
        let c2 = RpgNode::high(Level::Category, "write data", &["Io", "write data"]);
        let cid = c2.id.clone();
        g.add_node(c2, Some(&ids[0])).unwrap();
        let r = g.validate();
        assert_eq!(r.findings.len(), 1);
        assert_eq!(r.findings[0].kind, FindingKind::EmptyAbstractNode);
        assert_eq!(r.findings[0].node_ids, vec![cid]);
    }

    #[test]
    fn two_parents_violate_forest() {
        let (mut g, ids) = graph();
        let s2 = RpgNode::high(Level::Subcategory, "parse tsv", &["Io", "read data", "parse tsv"]);
        let sid = s2.id.clone();
        g.add_node(s2, Some(&ids[1])).unwrap();
        g.link_unchecked(&sid, &ids[3]);
        let r = g.validate();
        assert_eq!(r.count(FindingKind::ForestViolated), 1);
    }

    #[test]
    fn dep_edges_checked() {
        let (mut g, ids) = graph();
        g.add_dep_edge(DepLink { src: ids[3].clone(), dst: ids[3].clone(), kind: DepKind::Imports });
        g.add_dep_edge(DepLink { src: ids[0].clone(), dst: ids[3].clone(), kind: DepKind::Invokes });
        let r = g.validate();
        assert_eq!(r.count(FindingKind::SelfEdge), 1);
        assert_eq!(r.count(FindingKind::DepEdgeOnHighNode), 1);
    }

    #[test]
    fn scopes_checked() {
        let (mut g, ids) = graph();
        for id in &ids[..3] {
            g.node_mut(id).unwrap().metadata.grounded_scopes = Some(["io".to_string()].into());
        }
        assert!(g.validate().is_empty());
        g.node_mut(&ids[1]).unwrap().metadata.grounded_scopes =
            Some(["io".to_string(), "io/x".to_string()].into());
        g.node_mut(&ids[2]).unwrap().metadata.grounded_scopes = Some(["lib".to_string()].into());
        let r = g.validate();
        assert_eq!(r.count(FindingKind::ScopesNotAntichain), 1);
        assert_eq!(r.count(FindingKind::ScopesNotCovering), 1);
    }

    #[test]
    fn scope_prefix_is_segment_wise() {
        assert!(scope_covers("a/b", "a/b/c"));
        assert!(scope_covers("a/b", "a/b"));
        assert!(!scope_covers("a/b", "a/bc"));
        assert!(scope_covers("", "x"));
        assert_eq!(dir_of("a/b/c.py"), "a/b");
        assert_eq!(dir_of("c.py"), "");
    }
}
