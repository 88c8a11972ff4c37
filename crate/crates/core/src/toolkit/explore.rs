use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{code_entity_name, entity_type, Snapshot, StringList, ToolError, ToolOutput};
use crate::code_index::DepKind;
use crate::graph::RpgGraph;

/// Values accepted by `entity_type_filter`.
pub const ENTITY_TYPES: [&str; 5] = ["directory", "file", "class", "function", "method"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upstream,
    Downstream,
    Both,
}

impl Direction {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "upstream" => Some(Self::Upstream),
            "downstream" => Some(Self::Downstream),
            "both" => Some(Self::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExploreParams {
    #[serde(default)]
    pub start_code_entities: Option<StringList>,
    #[serde(default)]
    pub start_feature_entities: Option<StringList>,
    #[serde(default)]
    pub direction: Option<String>,
    #[serde(default)]
    pub traversal_depth: Option<i64>,
    #[serde(default)]
    pub entity_type_filter: Option<StringList>,
    #[serde(default)]
    pub dependency_type_filter: Option<StringList>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraversalNode {
    pub id: String,
    pub name: String,
    pub entity_type: String,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TraversalEdge {
    pub src: String,
    pub dst: String,
    pub kind: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreResult {
    pub nodes: Vec<TraversalNode>,
    pub edges: Vec<TraversalEdge>,
}

/// All edges of both views as `(src, dst, kind)`; hierarchy edges have kind
/// `contains`.
pub fn traversal_edges(g: &RpgGraph) -> Vec<TraversalEdge> {
    let mut out: Vec<TraversalEdge> = g
        .feature_edges()
        .map(|(p, c)| TraversalEdge { src: p.into(), dst: c.into(), kind: DepKind::Contains.as_str().into() })
        .chain(g.dep_edges().iter().map(|e| TraversalEdge { src: e.src.clone(), dst: e.dst.clone(), kind: e.kind.as_str().into() }))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Breadth-first traversal from `starts`. `depth` of `None` is unlimited.
/// Nodes whose type is filtered out are neither reported nor expanded
/// (start nodes always are); filtered edge kinds are never followed. Nodes
/// come back ordered by (depth, id), edges sorted.
pub fn traverse(
    g: &RpgGraph,
    starts: &BTreeSet<String>,
    direction: Direction,
    depth: Option<usize>,
    node_types: Option<&BTreeSet<String>>,
    edge_kinds: Option<&BTreeSet<String>>,
) -> ExploreResult {
    let admit_node = |id: &str| {
        starts.contains(id) || node_types.is_none_or(|t| g.node(id).is_some_and(|n| t.contains(entity_type(n))))
    };
    let edges: Vec<TraversalEdge> = traversal_edges(g)
        .into_iter()
        .filter(|e| edge_kinds.is_none_or(|k| k.contains(&e.kind)) && admit_node(&e.src) && admit_node(&e.dst))
        .collect();
    let mut adj: BTreeMap<&str, Vec<(&str, usize)>> = BTreeMap::new();
    for (i, e) in edges.iter().enumerate() {
        if matches!(direction, Direction::Downstream | Direction::Both) {
            adj.entry(&e.src).or_default().push((&e.dst, i));
        }
        if matches!(direction, Direction::Upstream | Direction::Both) {
            adj.entry(&e.dst).or_default().push((&e.src, i));
        }
    }
    let mut dist: BTreeMap<&str, usize> = BTreeMap::new();
    let mut queue: VecDeque<&str> = VecDeque::new();
    for s in starts {
        if g.contains(s) {
            dist.insert(s, 0);
            queue.push_back(s);
        }
    }
    let mut used: BTreeSet<usize> = BTreeSet::new();
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        if depth.is_some_and(|d| du >= d) {
            continue;
        }
        for &(v, ei) in adj.get(u).map(Vec::as_slice).unwrap_or(&[]) {
            used.insert(ei);
            if !dist.contains_key(v) {
                dist.insert(v, du + 1);
                queue.push_back(v);
            }
        }
    }
    let mut nodes: Vec<TraversalNode> = dist
        .iter()
        .filter_map(|(id, d)| {
            let n = g.node(id)?;
            let name = if n.is_high() { g.feature_path(id) } else { code_entity_name(n) };
            Some(TraversalNode { id: id.to_string(), name, entity_type: entity_type(n).into(), depth: *d })
        })
        .collect();
    nodes.sort_by(|a, b| (a.depth, &a.id).cmp(&(b.depth, &b.id)));
    let edges = used.into_iter().map(|i| edges[i].clone()).collect();
    ExploreResult { nodes, edges }
}

fn parse_filter(
    raw: &Option<StringList>,
    valid: &[&str],
    name: &str,
    warnings: &mut Vec<String>,
) -> Result<Option<BTreeSet<String>>, String> {
    let Some(list) = raw else { return Ok(None) };
    let mut out = BTreeSet::new();
    for v in &list.0 {
        let t = v.trim().to_lowercase();
        if valid.contains(&t.as_str()) {
            out.insert(t);
        } else {
            warnings.push(format!("{name}: invalid value `{v}`"));
            return Err(format!("{name}: invalid value `{v}`; expected one of {}", valid.join(", ")));
        }
    }
    Ok(Some(out))
}

pub fn explore_rpg(snap: &Snapshot, p: &ExploreParams) -> Result<ToolOutput<ExploreResult>, ToolError> {
    let mut warnings = Vec::new();
    let mut starts = BTreeSet::new();
    for c in p.start_code_entities.iter().flat_map(|l| &l.0) {
        match snap.resolve_code_entity(c) {
            Ok(n) => {
                starts.insert(n.id.clone());
            }
            Err(e) => warnings.push(format!("start entity ignored: {e}")),
        }
    }
    for f in p.start_feature_entities.iter().flat_map(|l| &l.0) {
        match snap.resolve_feature_entity(f) {
            Ok(n) => {
                starts.insert(n.id.clone());
            }
            Err(e) => warnings.push(format!("start entity ignored: {e}")),
        }
    }
    let direction = match p.direction.as_deref() {
        None => Direction::Downstream,
        Some(d) => match Direction::parse(d.trim().to_lowercase().as_str()) {
            Some(d) => d,
            None => {
                warnings.push(format!("direction: invalid value `{d}`"));
                return Err(ToolError::with(
                    format!("direction: invalid value `{d}`; expected upstream, downstream or both"),
                    warnings,
                ));
            }
        },
    };
    let depth = match p.traversal_depth.unwrap_or(2) {
        -1 => None,
        d if d >= 1 => Some(d as usize),
        d => {
            warnings.push(format!("traversal_depth: invalid value `{d}`"));
            return Err(ToolError::with(format!("traversal_depth must be >= 1 or -1, got {d}"), warnings));
        }
    };
    let types = parse_filter(&p.entity_type_filter, &ENTITY_TYPES, "entity_type_filter", &mut warnings)
        .map_err(|m| ToolError::with(m, warnings.clone()))?;
    let kinds: Vec<&str> = DepKind::ALL.iter().map(|k| k.as_str()).collect();
    let edge_kinds = parse_filter(&p.dependency_type_filter, &kinds, "dependency_type_filter", &mut warnings)
        .map_err(|m| ToolError::with(m, warnings.clone()))?;
    if starts.is_empty() {
        return Err(ToolError::with("no valid start entity", warnings));
    }
    let value = traverse(&snap.graph, &starts, direction, depth, types.as_ref(), edge_kinds.as_ref());
    Ok(ToolOutput { value, warnings })
}
