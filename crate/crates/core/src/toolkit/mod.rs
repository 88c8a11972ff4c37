//! Agent-facing navigation tools over a loaded graph: `SearchNode`,
//! `FetchNode` and `ExploreRPG`.
//!
//! Requests name a tool and carry a parameter object. Unknown parameter names
//! are rejected; entries that do not resolve (unknown paths, fabricated
//! entities, bad scopes) are skipped and reported in `warnings`.

mod explore;
mod fetch;
mod search;
pub mod service;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::code_index::EntitySet;
use crate::graph::{RpgGraph, RpgNode};
use crate::provider::DEFAULT_MIN_SIMILARITY;

pub use explore::{
    explore_rpg, traversal_edges, traverse, Direction, ExploreParams, ExploreResult, TraversalEdge, TraversalNode,
    ENTITY_TYPES,
};
pub use fetch::{fetch_node, FetchParams, FetchResult, FetchedCode, FetchedFeature};
pub use search::{search_node, FeatureHit, SearchMode, SearchParams, SearchResult, SnippetHit};

/// Lines shown in a code preview.
pub const PREVIEW_LINES: usize = 40;
/// Feature hits returned by a search.
pub const FEATURE_HITS: usize = 10;
/// Snippet hits returned by a search.
pub const SNIPPET_HITS: usize = 50;

/// A graph plus the source text its low nodes point into.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    pub graph: RpgGraph,
    sources: BTreeMap<String, Arc<str>>,
    pub min_similarity: f64,
}

impl Snapshot {
    pub fn new(graph: RpgGraph, sources: BTreeMap<String, Arc<str>>) -> Self {
        Self { graph, sources, min_similarity: DEFAULT_MIN_SIMILARITY }
    }

    pub fn from_entities(graph: RpgGraph, es: &EntitySet) -> Self {
        let sources = es.paths().filter_map(|p| Some((p.to_string(), Arc::from(es.source(p)?)))).collect();
        Self::new(graph, sources)
    }

    /// Read the source of every file node from `root`. Files that cannot be
    /// read are left out; tools then answer without previews for them.
    pub fn load(graph: RpgGraph, root: &Path) -> Self {
        let sources = graph
            .file_nodes()
            .filter_map(|n| n.metadata.path.clone())
            .filter_map(|p| std::fs::read_to_string(root.join(&p)).ok().map(|t| (p, Arc::from(t))))
            .collect();
        Self::new(graph, sources)
    }

    pub fn with_min_similarity(mut self, v: f64) -> Self {
        self.min_similarity = v;
        self
    }

    pub fn source(&self, path: &str) -> Option<&str> {
        self.sources.get(path).map(|s| &**s)
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.sources.keys().map(String::as_str)
    }

    /// Lines `start..=end` (1-based) of a file.
    pub fn lines(&self, path: &str, start: u32, end: u32) -> Option<String> {
        let text = self.source(path)?;
        let start = start.max(1);
        if end < start {
            return Some(String::new());
        }
        let out: Vec<&str> = text.lines().skip(start as usize - 1).take((end - start + 1) as usize).collect();
        Some(out.join("\n"))
    }

    /// Resolve `path`, `path:Qualified.name`, or a bare qualified name that
    /// matches exactly one entity.
    pub fn resolve_code_entity(&self, s: &str) -> Result<&RpgNode, String> {
        let s = s.trim();
        let g = &self.graph;
        if let Some((path, q)) = s.split_once(':') {
            return g.find_low(path, Some(q)).ok_or_else(|| self.hint(s));
        }
        if let Some(n) = g.find_low(s, None) {
            return Ok(n);
        }
        let matches: Vec<&RpgNode> =
            g.nodes().filter(|n| !n.is_high() && n.metadata.qualified_name.as_deref() == Some(s)).collect();
        match matches.as_slice() {
            [one] => Ok(one),
            [] => Err(self.hint(s)),
            many => Err(format!(
                "`{s}` is ambiguous: {}",
                many.iter().map(|n| code_entity_name(n)).collect::<Vec<_>>().join(", ")
            )),
        }
    }

    fn hint(&self, s: &str) -> String {
        let needle = s.rsplit([':', '.', '/']).next().unwrap_or(s).to_lowercase();
        let mut close: Vec<String> = self
            .graph
            .nodes()
            .filter(|n| !n.is_high() && !needle.is_empty())
            .map(code_entity_name)
            .filter(|name| name.to_lowercase().contains(&needle))
            .collect();
        close.sort();
        close.truncate(3);
        if close.is_empty() {
            format!("`{s}` does not name a code entity")
        } else {
            format!("`{s}` does not name a code entity; close matches: {}", close.join(", "))
        }
    }

    pub fn resolve_feature_entity(&self, s: &str) -> Result<&RpgNode, String> {
        self.graph.find_feature_path(s).ok_or_else(|| format!("`{s}` is not a feature path"))
    }
}

/// `path` for files, `path:Qualified.name` for classes and functions.
pub fn code_entity_name(n: &RpgNode) -> String {
    match (&n.metadata.path, &n.metadata.qualified_name) {
        (Some(p), Some(q)) => format!("{p}:{q}"),
        (Some(p), None) => p.clone(),
        _ => n.id.clone(),
    }
}

/// Entity type label used by the tools; abstract nodes count as
/// directories of the functional hierarchy.
pub fn entity_type(n: &RpgNode) -> &'static str {
    match n.metadata.entity_kind {
        Some(k) => k.as_str(),
        None => "directory",
    }
}

/// A list parameter given either as an array or as one string.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StringList(pub Vec<String>);

impl<'de> Deserialize<'de> for StringList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(String),
            Many(Vec<String>),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::One(s) => StringList(vec![s]),
            Raw::Many(v) => StringList(v),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct ToolRequest {
    #[serde(default)]
    pub id: Value,
    pub tool_name: String,
    #[serde(default)]
    pub parameters: serde_json::Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResponse {
    pub id: Value,
    pub tool_name: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub warnings: Vec<String>,
}

/// A tool failure together with the warnings gathered before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolError {
    pub message: String,
    pub warnings: Vec<String>,
}

impl ToolError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { message: message.into(), warnings: Vec::new() }
    }

    fn with(message: impl Into<String>, warnings: Vec<String>) -> Self {
        Self { message: message.into(), warnings }
    }
}

/// Result payload plus warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolOutput<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

fn parse_params<T: for<'de> Deserialize<'de>>(params: &serde_json::Map<String, Value>) -> Result<T, ToolError> {
    serde_json::from_value(Value::Object(params.clone())).map_err(|e| ToolError::new(format!("parameters: {e}")))
}

fn into_response<T: Serialize>(req: &ToolRequest, r: Result<ToolOutput<T>, ToolError>) -> ToolResponse {
    match r {
        Ok(out) => ToolResponse {
            id: req.id.clone(),
            tool_name: req.tool_name.clone(),
            ok: true,
            result: Some(serde_json::to_value(out.value).expect("tool results serialize")),
            error: None,
            warnings: out.warnings,
        },
        Err(e) => ToolResponse {
            id: req.id.clone(),
            tool_name: req.tool_name.clone(),
            ok: false,
            result: None,
            error: Some(e.message),
            warnings: e.warnings,
        },
    }
}

/// Run one request against a snapshot. Never panics on malformed input.
pub fn dispatch(snap: &Snapshot, req: &ToolRequest) -> ToolResponse {
    match req.tool_name.as_str() {
        "SearchNode" => into_response(req, parse_params(&req.parameters).and_then(|p| search_node(snap, &p))),
        "FetchNode" => into_response(req, parse_params(&req.parameters).and_then(|p| fetch_node(snap, &p))),
        "ExploreRPG" => into_response(req, parse_params(&req.parameters).and_then(|p| explore_rpg(snap, &p))),
        other => into_response::<()>(
            req,
            Err(ToolError::new(format!("unknown tool `{other}`; expected SearchNode, FetchNode or ExploreRPG"))),
        ),
    }
}

/// Parse one request line and answer it.
pub fn handle_line(snap: &Snapshot, line: &str) -> ToolResponse {
    match serde_json::from_str::<ToolRequest>(line) {
        Ok(req) => dispatch(snap, &req),
        Err(e) => ToolResponse {
            id: serde_json::from_str::<Value>(line).ok().and_then(|v| v.get("id").cloned()).unwrap_or(Value::Null),
            tool_name: String::new(),
            ok: false,
            result: None,
            error: Some(format!("request: {e}")),
            warnings: Vec::new(),
        },
    }
}
