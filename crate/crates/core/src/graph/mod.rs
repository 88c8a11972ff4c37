//! The repository graph: one node set, two edge sets.
//!
//! Feature edges form a forest from functional areas down through categories,
//! subcategories, files and the code entities inside them. Dependency edges
//! (imports, invokes, inherits, composes) connect low-level nodes only.

mod codec;
mod validate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::code_index::{DepKind, EntityKind, EntityRef, Span};
use crate::provider::{phrase::split_identifier, top_phrases, FeaturePhrase};

pub use codec::{deserialize, serialize, DecodeError};
pub use validate::{dir_of, scope_covers, Finding, FindingKind, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    High,
    Low,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::High => "high",
            NodeKind::Low => "low",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Area,
    Category,
    Subcategory,
    File,
    Class,
    Function,
    Method,
}

impl Level {
    pub const ALL: [Level; 7] = [
        Level::Area,
        Level::Category,
        Level::Subcategory,
        Level::File,
        Level::Class,
        Level::Function,
        Level::Method,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Area => "area",
            Level::Category => "category",
            Level::Subcategory => "subcategory",
            Level::File => "file",
            Level::Class => "class",
            Level::Function => "function",
            Level::Method => "method",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }

    pub fn is_high(self) -> bool {
        matches!(self, Level::Area | Level::Category | Level::Subcategory)
    }

    pub fn node_kind(self) -> NodeKind {
        if self.is_high() {
            NodeKind::High
        } else {
            NodeKind::Low
        }
    }

    /// Abstract depth: area 1, category 2, subcategory 3.
    pub fn depth(self) -> Option<usize> {
        match self {
            Level::Area => Some(1),
            Level::Category => Some(2),
            Level::Subcategory => Some(3),
            _ => None,
        }
    }

    pub fn from_entity(kind: EntityKind) -> Option<Self> {
        match kind {
            EntityKind::File => Some(Level::File),
            EntityKind::Class => Some(Level::Class),
            EntityKind::Function => Some(Level::Function),
            EntityKind::Method => Some(Level::Method),
            EntityKind::Directory => None,
        }
    }

    pub fn entity_kind(self) -> Option<EntityKind> {
        match self {
            Level::File => Some(EntityKind::File),
            Level::Class => Some(EntityKind::Class),
            Level::Function => Some(EntityKind::Function),
            Level::Method => Some(EntityKind::Method),
            _ => None,
        }
    }

    /// Whether a node of this level may have a child of level `child`.
    pub fn admits(self, child: Level) -> bool {
        use Level::*;
        matches!(
            (self, child),
            (Area, Category)
                | (Category, Subcategory)
                | (Subcategory, File)
                | (File, Class)
                | (File, Function)
                | (Class, Method)
                | (Class, Class)
                | (Function, Function)
                | (Function, Class)
                | (Method, Function)
                | (Method, Class)
        )
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Structural metadata. Low nodes carry code location; high nodes carry a
/// display name and, once grounded, their directory scopes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub path: Option<String>,
    pub qualified_name: Option<String>,
    pub span: Option<Span>,
    pub entity_kind: Option<EntityKind>,
    pub grounded_scopes: Option<BTreeSet<String>>,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RpgNode {
    pub id: String,
    pub kind: NodeKind,
    pub level: Level,
    pub feature: Vec<FeaturePhrase>,
    pub metadata: NodeMeta,
}

impl RpgNode {
    pub fn high(level: Level, name: &str, path_segments: &[&str]) -> Self {
        debug_assert!(level.is_high());
        Self {
            id: high_node_id(level, path_segments),
            kind: NodeKind::High,
            level,
            feature: label_phrase(name).into_iter().collect(),
            metadata: NodeMeta { name: Some(name.to_string()), ..Default::default() },
        }
    }

    pub fn low(entity: &EntityRef, feature: Vec<FeaturePhrase>) -> Self {
        let level = Level::from_entity(entity.kind).expect("directories are not graph nodes");
        Self {
            id: low_node_id(&entity.path, entity.qualified_name.as_deref(), entity.kind),
            kind: NodeKind::Low,
            level,
            feature,
            metadata: NodeMeta {
                path: Some(entity.path.clone()),
                qualified_name: entity.qualified_name.clone(),
                span: Some(entity.span),
                entity_kind: Some(entity.kind),
                ..Default::default()
            },
        }
    }

    pub fn is_high(&self) -> bool {
        self.kind == NodeKind::High
    }

    pub fn name(&self) -> String {
        match (&self.metadata.name, &self.metadata.path) {
            (Some(n), _) => n.clone(),
            (None, Some(p)) => match &self.metadata.qualified_name {
                Some(q) => format!("{p}:{q}"),
                None => p.clone(),
            },
            _ => self.id.clone(),
        }
    }

    /// Code entity for a low node.
    pub fn entity(&self) -> Option<EntityRef> {
        Some(EntityRef {
            path: self.metadata.path.clone()?,
            qualified_name: self.metadata.qualified_name.clone(),
            kind: self.metadata.entity_kind?,
            span: self.metadata.span?,
        })
    }
}

/// A high node's display name as a feature phrase: `DataProcessing` becomes
/// `data processing`.
pub fn label_phrase(name: &str) -> Option<FeaturePhrase> {
    FeaturePhrase::new(&split_identifier(name).join(" ")).ok()
}

fn short_hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..8])
}

/// Content-derived id of a low node.
pub fn low_node_id(path: &str, qualified_name: Option<&str>, kind: EntityKind) -> String {
    format!("l-{}", short_hash(&[path, qualified_name.unwrap_or(""), kind.as_str()]))
}

/// Id of a high node, derived from its level and feature path.
pub fn high_node_id(level: Level, path_segments: &[&str]) -> String {
    let mut parts = vec![level.as_str()];
    parts.extend_from_slice(path_segments);
    format!("h-{}", short_hash(&parts))
}

/// A dependency edge between two low node ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DepLink {
    pub src: String,
    pub dst: String,
    pub kind: DepKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("a {parent} node cannot hold a {child} node (`{id}`)")]
    IllegalLevelPair { id: String, parent: Level, child: Level },
    #[error("non-area node `{0}` needs a parent")]
    MissingParent(String),
    #[error("moving `{0}` under its own descendant")]
    Cycle(String),
}

/// Which edge set to iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Feature,
    Dependency,
}

/// An edge as yielded by [`RpgGraph::view_edges`]; feature edges use
/// `kind = None`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ViewEdge {
    pub src: String,
    pub dst: String,
    pub kind: Option<DepKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RpgGraph {
    nodes: BTreeMap<String, RpgNode>,
    children: BTreeMap<String, BTreeSet<String>>,
    parents: BTreeMap<String, BTreeSet<String>>,
    dep_edges: BTreeSet<DepLink>,
    version: u64,
}

impl RpgGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn bump_version(&mut self) {
        self.version += 1;
    }

    pub(crate) fn set_version(&mut self, v: u64) {
        self.version = v;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&RpgNode> {
        self.nodes.get(id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut RpgNode> {
        self.nodes.get_mut(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &RpgNode> {
        self.nodes.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    /// Feature-edge parent (first, if the forest is broken).
    pub fn parent(&self, id: &str) -> Option<&str> {
        self.parents.get(id).and_then(|p| p.iter().next()).map(String::as_str)
    }

    pub fn parents_of(&self, id: &str) -> impl Iterator<Item = &str> {
        self.parents.get(id).into_iter().flatten().map(String::as_str)
    }

    pub fn children(&self, id: &str) -> impl Iterator<Item = &str> {
        self.children.get(id).into_iter().flatten().map(String::as_str)
    }

    pub fn child_count(&self, id: &str) -> usize {
        self.children.get(id).map_or(0, BTreeSet::len)
    }

    pub fn roots(&self) -> impl Iterator<Item = &RpgNode> {
        self.nodes.values().filter(|n| !self.parents.contains_key(&n.id))
    }

    pub fn areas(&self) -> impl Iterator<Item = &RpgNode> {
        self.nodes.values().filter(|n| n.level == Level::Area)
    }

    pub fn feature_edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.children.iter().flat_map(|(p, cs)| cs.iter().map(move |c| (p.as_str(), c.as_str())))
    }

    pub fn dep_edges(&self) -> &BTreeSet<DepLink> {
        &self.dep_edges
    }

    pub fn view_edges(&self, view: View) -> Vec<ViewEdge> {
        match view {
            View::Feature => self
                .feature_edges()
                .map(|(p, c)| ViewEdge { src: p.into(), dst: c.into(), kind: None })
                .collect(),
            View::Dependency => self
                .dep_edges
                .iter()
                .map(|e| ViewEdge { src: e.src.clone(), dst: e.dst.clone(), kind: Some(e.kind) })
                .collect(),
        }
    }

    /// Node ids seen by a view: always the full node set.
    pub fn view_nodes(&self, _view: View) -> BTreeSet<&str> {
        self.ids().collect()
    }

    /// Insert a node under `parent` (areas take no parent).
    pub fn add_node(&mut self, node: RpgNode, parent: Option<&str>) -> Result<(), GraphError> {
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateId(node.id));
        }
        match parent {
            None if node.level != Level::Area => return Err(GraphError::MissingParent(node.id)),
            None => {}
            Some(p) => {
                let pn = self.nodes.get(p).ok_or_else(|| GraphError::UnknownNode(p.to_string()))?;
                if !pn.level.admits(node.level) {
                    return Err(GraphError::IllegalLevelPair {
                        id: node.id.clone(),
                        parent: pn.level,
                        child: node.level,
                    });
                }
            }
        }
        let id = node.id.clone();
        self.nodes.insert(id.clone(), node);
        if let Some(p) = parent {
            self.link(p, &id);
        }
        self.version += 1;
        Ok(())
    }

    /// Insert without any checks; used by the decoder and by tests that need
    /// broken graphs.
    pub fn insert_unchecked(&mut self, node: RpgNode) {
        self.nodes.insert(node.id.clone(), node);
    }

    pub fn link_unchecked(&mut self, parent: &str, child: &str) {
        self.link(parent, child);
    }

    fn link(&mut self, parent: &str, child: &str) {
        self.children.entry(parent.to_string()).or_default().insert(child.to_string());
        self.parents.entry(child.to_string()).or_default().insert(parent.to_string());
    }

    fn unlink(&mut self, parent: &str, child: &str) {
        if let Some(cs) = self.children.get_mut(parent) {
            cs.remove(child);
            if cs.is_empty() {
                self.children.remove(parent);
            }
        }
        if let Some(ps) = self.parents.get_mut(child) {
            ps.remove(parent);
            if ps.is_empty() {
                self.parents.remove(child);
            }
        }
    }

    /// Re-parent `id` (with its subtree) under `new_parent`.
    pub fn move_node(&mut self, id: &str, new_parent: &str) -> Result<(), GraphError> {
        let node = self.nodes.get(id).ok_or_else(|| GraphError::UnknownNode(id.to_string()))?;
        let pn = self.nodes.get(new_parent).ok_or_else(|| GraphError::UnknownNode(new_parent.to_string()))?;
        if !pn.level.admits(node.level) {
            return Err(GraphError::IllegalLevelPair { id: id.into(), parent: pn.level, child: node.level });
        }
        if id == new_parent || self.ancestors(new_parent).iter().any(|a| a == id) {
            return Err(GraphError::Cycle(id.into()));
        }
        let old: Vec<String> = self.parents_of(id).map(str::to_string).collect();
        for p in old {
            self.unlink(&p, id);
        }
        self.link(new_parent, id);
        self.version += 1;
        Ok(())
    }

    /// Remove a node and everything below it in the feature forest, together
    /// with every incident dependency edge. Returns the removed ids.
    pub fn remove_subtree(&mut self, id: &str) -> Vec<String> {
        if !self.nodes.contains_key(id) {
            return Vec::new();
        }
        let doomed = self.subtree(id);
        let set: BTreeSet<&str> = doomed.iter().map(String::as_str).collect();
        for d in &doomed {
            let ps: Vec<String> = self.parents_of(d).map(str::to_string).collect();
            for p in ps {
                self.unlink(&p, d);
            }
            let cs: Vec<String> = self.children(d).map(str::to_string).collect();
            for c in cs {
                self.unlink(d, &c);
            }
        }
        self.dep_edges.retain(|e| !set.contains(e.src.as_str()) && !set.contains(e.dst.as_str()));
        for d in &doomed {
            self.nodes.remove(d);
        }
        self.version += 1;
        doomed
    }

    /// `id` followed by all its feature descendants, breadth first.
    pub fn subtree(&self, id: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([id.to_string()]);
        while let Some(n) = queue.pop_front() {
            if !seen.insert(n.clone()) {
                continue;
            }
            for c in self.children(&n) {
                queue.push_back(c.to_string());
            }
            out.push(n);
        }
        out
    }

    /// Feature ancestors from the parent up to the root.
    pub fn ancestors(&self, id: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = self.parent(id).map(str::to_string);
        while let Some(p) = cur {
            if out.contains(&p) {
                break;
            }
            cur = self.parent(&p).map(str::to_string);
            out.push(p);
        }
        out
    }

    /// Low nodes below `id` (excluding `id`).
    pub fn descendant_lows(&self, id: &str) -> Vec<&RpgNode> {
        self.subtree(id)
            .iter()
            .skip(1)
            .filter_map(|d| self.nodes.get(d))
            .filter(|n| !n.is_high())
            .collect()
    }

    /// Names of high ancestors (area first) plus the node itself when high,
    /// joined with `/`.
    pub fn feature_path(&self, id: &str) -> String {
        let mut chain: Vec<String> = self
            .ancestors(id)
            .into_iter()
            .rev()
            .filter_map(|a| self.nodes.get(&a))
            .filter(|n| n.is_high())
            .map(RpgNode::name)
            .collect();
        if let Some(n) = self.nodes.get(id) {
            if n.is_high() {
                chain.push(n.name());
            }
        }
        chain.join("/")
    }

    /// High node addressed by a feature path such as `Area/category`.
    pub fn find_feature_path(&self, path: &str) -> Option<&RpgNode> {
        let segs: Vec<&str> = path.split('/').map(str::trim).filter(|s| !s.is_empty()).collect();
        let (first, rest) = segs.split_first()?;
        let mut cur = self.areas().find(|a| a.name() == *first)?;
        for seg in rest {
            let want = label_phrase(seg).map(|p| p.as_str().to_string()).unwrap_or_default();
            cur = self
                .children(&cur.id)
                .filter_map(|c| self.nodes.get(c))
                .find(|c| c.is_high() && (c.name() == *seg || c.name() == want))?;
        }
        Some(cur)
    }

    pub fn low_id_of(&self, entity: &EntityRef) -> Option<&str> {
        let id = low_node_id(&entity.path, entity.qualified_name.as_deref(), entity.kind);
        self.nodes.get_key_value(&id).map(|(k, _)| k.as_str())
    }

    /// Low node for `path` / `path:Qualified.name`, any entity kind.
    pub fn find_low(&self, path: &str, qualified_name: Option<&str>) -> Option<&RpgNode> {
        let kinds: &[EntityKind] = match qualified_name {
            None => &[EntityKind::File],
            Some(_) => &[EntityKind::Class, EntityKind::Function, EntityKind::Method],
        };
        kinds
            .iter()
            .map(|k| low_node_id(path, qualified_name, *k))
            .find_map(|id| self.nodes.get(&id))
    }

    pub fn file_nodes(&self) -> impl Iterator<Item = &RpgNode> {
        self.nodes.values().filter(|n| n.level == Level::File)
    }

    pub fn add_dep_edge(&mut self, e: DepLink) {
        self.dep_edges.insert(e);
    }

    pub fn remove_dep_edge(&mut self, e: &DepLink) -> bool {
        self.dep_edges.remove(e)
    }

    pub fn retain_dep_edges(&mut self, keep: impl FnMut(&DepLink) -> bool) {
        self.dep_edges.retain(keep);
    }

    /// Recompute every high node's features: its own label followed by the
    /// most frequent phrases of the file summaries below it.
    pub fn refresh_high_features(&mut self, k: usize) {
        let high: Vec<String> = self.nodes.values().filter(|n| n.is_high()).map(|n| n.id.clone()).collect();
        for id in high {
            let files: Vec<Vec<FeaturePhrase>> = self
                .descendant_lows(&id)
                .into_iter()
                .filter(|n| n.level == Level::File)
                .map(|n| n.feature.clone())
                .collect();
            let top = top_phrases(files.iter().map(Vec::as_slice), k);
            let node = self.nodes.get_mut(&id).expect("listed above");
            let mut feature: Vec<FeaturePhrase> =
                node.metadata.name.as_deref().and_then(label_phrase).into_iter().collect();
            for p in top {
                if !feature.contains(&p) {
                    feature.push(p);
                }
            }
            node.feature = feature;
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }
}
