//! Graph construction: lift code entities into low-level nodes, recover the
//! three-level functional hierarchy, ground it to directory scopes and attach
//! dependency edges.

pub mod grouping;
mod lca;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;

use crate::code_index::{
    extract_dependencies, scan_repository, DependencyReport, Diagnostic, EntitySet, ScanError,
    ScanOptions,
};
use crate::graph::{dir_of, DepLink, GraphError, Level, RpgGraph, RpgNode, ValidationReport};
use crate::provider::{
    parse_all, top_phrases, FeaturePhrase, FeatureRequest, GroupSummary, ParseContext, ProviderError,
    SemanticProvider, TokenAccount,
};

pub use lca::{compute_lca, GroundedScopes, LcaError};

/// Phrases kept when summarizing groups and high nodes.
pub const SUMMARY_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractorConfig {
    pub min_scope_depth: usize,
    pub scan: ScanOptions,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self { min_scope_depth: 1, scan: ScanOptions::default() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("scan: {0}")]
    Scan(#[from] ScanError),
    #[error("{stage}: provider failed: {source}")]
    Provider {
        stage: &'static str,
        #[source]
        source: ProviderError,
    },
    #[error("{stage}: graph construction failed: {source}")]
    Graph {
        stage: &'static str,
        #[source]
        source: GraphError,
    },
    #[error("phase3: {0}")]
    Lca(#[from] LcaError),
    #[error("validate: built graph has {} findings", .0.findings.len())]
    Invalid(ValidationReport),
}

/// Low-level nodes and their file-internal feature edges, before the
/// abstract hierarchy exists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LiftedForest {
    pub nodes: BTreeMap<String, RpgNode>,
    /// (parent, child) in insertion order: parents always come first.
    pub edges: Vec<(String, String)>,
    /// File node ids, sorted by path.
    pub files: Vec<String>,
    pub flagged: Vec<String>,
}

/// Repository description used in parsing prompts. Depends only on the shared
/// directory prefix so it is stable as files come and go.
pub fn parse_context<S: AsRef<str>>(paths: &[S]) -> ParseContext {
    let prefix = grouping::common_dir_prefix(paths);
    let name = prefix.rsplit('/').next().filter(|s| !s.is_empty()).unwrap_or("repository");
    ParseContext { repo_name: name.to_string(), repo_info: format!("Python code base `{name}`.") }
}

/// Feature requests for every class, function and method of `es` restricted
/// to `filter` when given.
pub fn feature_requests(es: &EntitySet, filter: impl Fn(&crate::code_index::EntityRef) -> bool) -> Vec<FeatureRequest> {
    es.entities()
        .iter()
        .filter(|e| e.qualified_name.is_some() && filter(e))
        .map(|e| {
            FeatureRequest::new(e.clone(), es.snippet(e).unwrap_or_default(), es.docstring(&e.key()).map(str::to_string))
        })
        .collect()
}

/// Phase 1: one low-level node per entity, features from the provider, file
/// summaries synthesized from each file's entities.
pub fn phase1_lift(es: &EntitySet, provider: &dyn SemanticProvider) -> Result<LiftedForest, ProviderError> {
    let paths: Vec<&str> = es.paths().collect();
    let ctx = parse_context(&paths);
    let requests = feature_requests(es, |_| true);
    let parsed = parse_all(provider, &ctx, &requests)?;

    let mut forest = LiftedForest::default();
    for key in &parsed.flagged {
        forest.flagged.push(key.display_name());
    }
    let summaries: Vec<Result<(String, Vec<FeaturePhrase>), ProviderError>> = es
        .files()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|rec| {
            let lists: Vec<Vec<FeaturePhrase>> = (0..rec.entities.len())
                .map(|i| parsed.features.get(&rec.entity_ref(i).key()).cloned().unwrap_or_default())
                .collect();
            provider.summarize_file(&rec.path, &lists).map(|s| (rec.path.clone(), s))
        })
        .collect();
    let summaries: BTreeMap<String, Vec<FeaturePhrase>> = summaries.into_iter().collect::<Result<_, _>>()?;

    for e in es.entities() {
        let feature = match &e.qualified_name {
            None => summaries.get(&e.path).cloned().unwrap_or_default(),
            Some(_) => parsed.features.get(&e.key()).cloned().unwrap_or_default(),
        };
        let node = RpgNode::low(e, feature);
        if e.qualified_name.is_none() {
            forest.files.push(node.id.clone());
        } else if let Some(parent) = es.parent_of(&e.key()) {
            let pid = crate::graph::low_node_id(&parent.path, parent.qualified_name.as_deref(), parent.kind);
            forest.edges.push((pid, node.id.clone()));
        }
        forest.nodes.insert(node.id.clone(), node);
    }
    Ok(forest)
}

/// Per-group aggregate phrases: the most frequent phrases across member file
/// summaries.
pub fn group_summaries(forest_files: &[(String, Vec<FeaturePhrase>)]) -> Vec<GroupSummary> {
    let paths: Vec<&str> = forest_files.iter().map(|(p, _)| p.as_str()).collect();
    let grouping = grouping::group_files(&paths);
    let by_path: BTreeMap<&str, &Vec<FeaturePhrase>> = forest_files.iter().map(|(p, f)| (p.as_str(), f)).collect();
    grouping
        .groups
        .iter()
        .map(|(id, members)| GroupSummary {
            id: id.clone(),
            members: members.clone(),
            phrases: top_phrases(members.iter().filter_map(|m| by_path.get(m.as_str())).map(|v| v.as_slice()), SUMMARY_SIZE),
        })
        .collect()
}

/// Add the area/category/subcategory chain for a path, reusing nodes that
/// already exist. Returns the subcategory id.
pub fn ensure_path(g: &mut RpgGraph, area: &str, category: &str, subcategory: &str) -> Result<String, GraphError> {
    let a = RpgNode::high(Level::Area, area, &[area]);
    let c = RpgNode::high(Level::Category, category, &[area, category]);
    let s = RpgNode::high(Level::Subcategory, subcategory, &[area, category, subcategory]);
    let (aid, cid, sid) = (a.id.clone(), c.id.clone(), s.id.clone());
    if !g.contains(&aid) {
        g.add_node(a, None)?;
    }
    if !g.contains(&cid) {
        g.add_node(c, Some(&aid))?;
    }
    if !g.contains(&sid) {
        g.add_node(s, Some(&cid))?;
    }
    Ok(sid)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Phase2Outcome {
    pub areas: Vec<String>,
    pub fallback_groups: Vec<String>,
}

/// Phase 2: discover areas from file summaries, assign each group a
/// three-level path and hang files (with their entities) below it.
pub fn phase2_reorganize(
    forest: &LiftedForest,
    provider: &dyn SemanticProvider,
) -> Result<(RpgGraph, Phase2Outcome), BuildError> {
    let mut g = RpgGraph::new();
    let mut outcome = Phase2Outcome::default();
    if forest.files.is_empty() {
        return Ok((g, outcome));
    }
    let mut files: Vec<(String, Vec<FeaturePhrase>)> = forest
        .files
        .iter()
        .map(|id| {
            let n = &forest.nodes[id];
            (n.metadata.path.clone().unwrap_or_default(), n.feature.clone())
        })
        .collect();
    files.sort();
    let stage = "phase2";
    let areas = provider.discover_domains(&files).map_err(|source| BuildError::Provider { stage, source })?;
    let groups = group_summaries(&files);
    let assignment = provider.assign_paths(&groups, &areas).map_err(|source| BuildError::Provider { stage, source })?;
    outcome.areas = areas;
    outcome.fallback_groups = assignment.fallbacks.clone();

    let file_by_path: BTreeMap<&str, &str> = forest
        .files
        .iter()
        .map(|id| (forest.nodes[id].metadata.path.as_deref().unwrap_or(""), id.as_str()))
        .collect();
    let mut placed = BTreeSet::new();
    for (path, group_ids) in &assignment.paths {
        let [a, c, s] = path.segments();
        let sid = ensure_path(&mut g, a, c, s).map_err(|source| BuildError::Graph { stage, source })?;
        for gid in group_ids {
            let Some(group) = groups.iter().find(|gr| &gr.id == gid) else { continue };
            for m in &group.members {
                if let Some(fid) = file_by_path.get(m.as_str()) {
                    if placed.insert(fid.to_string()) {
                        g.add_node(forest.nodes[*fid].clone(), Some(&sid))
                            .map_err(|source| BuildError::Graph { stage, source })?;
                    }
                }
            }
        }
    }
    for (p, c) in &forest.edges {
        if g.contains(p) {
            g.add_node(forest.nodes[c].clone(), Some(p)).map_err(|source| BuildError::Graph { stage, source })?;
        }
    }
    g.refresh_high_features(SUMMARY_SIZE);
    Ok((g, outcome))
}

/// Directory coverage of every high node: the directories of all low nodes
/// below it.
pub fn coverage_sets(g: &RpgGraph) -> BTreeMap<String, BTreeSet<String>> {
    fn visit(g: &RpgGraph, id: &str, out: &mut BTreeMap<String, BTreeSet<String>>) -> BTreeSet<String> {
        let node = g.node(id).expect("walking existing ids");
        let mut cov = BTreeSet::new();
        if let Some(p) = &node.metadata.path {
            cov.insert(dir_of(p).to_string());
        }
        for c in g.children(id).map(str::to_string).collect::<Vec<_>>() {
            cov.extend(visit(g, &c, out));
        }
        if node.is_high() {
            out.insert(id.to_string(), cov.clone());
        }
        cov
    }
    let mut out = BTreeMap::new();
    let roots: Vec<String> = g.roots().map(|r| r.id.clone()).collect();
    for r in roots {
        visit(g, &r, &mut out);
    }
    out
}

/// Recompute grounded scopes of every high node.
pub fn ground_scopes(g: &mut RpgGraph, min_scope_depth: usize) -> Result<(), LcaError> {
    for (id, cov) in coverage_sets(g) {
        let scopes = compute_lca(&cov, min_scope_depth)?;
        if let Some(n) = g.node_mut(&id) {
            n.metadata.grounded_scopes = Some(scopes.scopes);
        }
    }
    Ok(())
}

/// Map code-level dependency edges onto graph node ids. Edges touching
/// entities without a node are skipped.
pub fn dep_links(g: &RpgGraph, edges: &[crate::code_index::DepEdge]) -> Vec<DepLink> {
    edges
        .iter()
        .filter_map(|e| {
            let src = g.low_id_of(&e.src)?.to_string();
            let dst = g.low_id_of(&e.dst)?.to_string();
            Some(DepLink { src, dst, kind: e.kind })
        })
        .collect()
}

/// Phase 3: ground scopes and inject dependency edges.
pub fn phase3_ground(g: &mut RpgGraph, es: &EntitySet, min_scope_depth: usize) -> Result<DependencyReport, LcaError> {
    ground_scopes(g, min_scope_depth)?;
    let (edges, report) = extract_dependencies(es);
    for l in dep_links(g, &edges) {
        g.add_dep_edge(l);
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub graph: RpgGraph,
    pub entities: EntitySet,
    pub diagnostics: Vec<Diagnostic>,
    pub accounts: BTreeMap<String, TokenAccount>,
}

/// Scan `root` and build its graph.
pub fn build(root: &Path, config: &ExtractorConfig, provider: &dyn SemanticProvider) -> Result<BuildOutput, BuildError> {
    let es = scan_repository(root, &config.scan)?;
    build_from_entities(es, config, provider)
}

/// Build from an already scanned entity set.
pub fn build_from_entities(
    es: EntitySet,
    config: &ExtractorConfig,
    provider: &dyn SemanticProvider,
) -> Result<BuildOutput, BuildError> {
    let meter = provider.meter();
    let mut diagnostics: Vec<Diagnostic> = es.diagnostics().to_vec();
    for stage in ["phase1", "phase2", "phase3"] {
        meter.reset_stage(stage);
    }

    meter.enter_stage("phase1");
    let forest = phase1_lift(&es, provider).map_err(|source| BuildError::Provider { stage: "phase1", source })?;
    for f in &forest.flagged {
        diagnostics.push(Diagnostic { path: f.clone(), issue: "features unavailable after retries".into() });
    }

    meter.enter_stage("phase2");
    let (mut graph, p2) = phase2_reorganize(&forest, provider)?;
    for gid in &p2.fallback_groups {
        diagnostics.push(Diagnostic { path: gid.clone(), issue: "path assignment used the fallback rule".into() });
    }

    meter.enter_stage("phase3");
    let report = phase3_ground(&mut graph, &es, config.min_scope_depth)?;
    diagnostics.extend(report.diagnostics());

    let findings = graph.validate();
    if !findings.is_empty() {
        return Err(BuildError::Invalid(findings));
    }
    let accounts = ["phase1", "phase2", "phase3"]
        .into_iter()
        .map(|s| (s.to_string(), meter.account(s)))
        .collect();
    meter.enter_stage("default");
    Ok(BuildOutput { graph, entities: es, diagnostics, accounts })
}
