//! Incremental maintenance: turn commit diffs into entity-level change events
//! and apply them to an existing graph without rebuilding it.
//!
//! A commit is applied as deletes, then modifications, then inserts, followed
//! by a dependency refresh limited to the changed files and the files that
//! depend on them. Every commit works on a copy of the graph; if the result
//! fails validation the original is kept.

mod diff;
pub mod git;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::code_index::{
    extract_dependencies_for, module_name_of, referenced_modules, EntityKey, EntityKind, EntitySet,
};
use crate::extractor::{dep_links, ensure_path, ground_scopes, parse_context, LcaError, SUMMARY_SIZE};
use crate::graph::{low_node_id, DepLink, GraphError, Level, RpgGraph, RpgNode, ValidationReport};
use crate::provider::{
    parse_all, FeaturePhrase, FeatureRequest, ParseOutcome, ProviderError, SemanticProvider, TokenAccount,
};

pub use diff::{
    apply_patch, events_for, parse_diff, parse_unified_diff, ChangeEvent, ChangeKind, DiffError, FileDiff, Hunk,
    HunkLine, PatchError,
};

/// Where files land when routing finds no fitting area.
pub const FALLBACK_PATH: [&str; 3] = ["Unclassified", "general", "general"];

/// Meter stage charged by updates.
pub const UPDATE_STAGE: &str = "update";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    /// Drift strictly above this re-routes a modified node.
    pub tau_drift: f64,
    pub min_scope_depth: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self { tau_drift: 0.5, min_scope_depth: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedEvent {
    pub entity: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub inserted: usize,
    pub deleted: usize,
    pub modified: usize,
    /// Abstract nodes removed because they lost their last child.
    pub pruned: Vec<String>,
    /// Nodes whose placement was recomputed after drifting.
    pub rerouted: Vec<String>,
    /// Files placed under the fallback path.
    pub fallback: Vec<String>,
    pub skipped: Vec<SkippedEvent>,
    pub tokens: TokenAccount,
    pub deps_added: usize,
    pub deps_removed: usize,
    pub version_before: u64,
    pub version_after: u64,
}

impl UpdateReport {
    pub fn applied(&self) -> usize {
        self.inserted + self.deleted + self.modified
    }
}

#[derive(Debug, thiserror::Error)]
pub enum UpdateError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("provider: {0}")]
    Provider(#[from] ProviderError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("grounding: {0}")]
    Lca(#[from] LcaError),
    #[error("updated graph has {} findings; update rolled back", .0.findings.len())]
    Invalid(ValidationReport),
    #[error("git: {0}")]
    Git(String),
    #[error("scan: {0}")]
    Scan(#[from] crate::code_index::ScanError),
}

/// Remove a node with its subtree, then every high ancestor left without
/// children. Areas are roots and stay. Returns the pruned ancestor ids; an
/// unknown id leaves the graph untouched.
pub fn delete_node(g: &mut RpgGraph, id: &str) -> Vec<String> {
    if !g.contains(id) {
        return Vec::new();
    }
    let parent = g.parent(id).map(str::to_string);
    g.remove_subtree(id);
    prune_upward(g, parent)
}

fn prune_upward(g: &mut RpgGraph, mut cur: Option<String>) -> Vec<String> {
    let mut pruned = Vec::new();
    while let Some(id) = cur {
        let Some(node) = g.node(&id) else { break };
        if !node.is_high() || node.level == Level::Area || g.child_count(&id) > 0 {
            break;
        }
        cur = g.parent(&id).map(str::to_string);
        g.remove_subtree(&id);
        pruned.push(id);
    }
    pruned
}

/// Pick the subcategory a file with features `target` belongs under,
/// drilling down from the areas. Missing lower levels are created from the
/// target's own phrases. Returns the subcategory id and whether the
/// fallback path was used.
pub fn find_best_parent(
    g: &mut RpgGraph,
    provider: &dyn SemanticProvider,
    target: &[FeaturePhrase],
) -> Result<(String, bool), UpdateError> {
    let high_children = |g: &RpgGraph, id: Option<&str>| -> Vec<(String, Vec<FeaturePhrase>)> {
        match id {
            None => g.areas().map(|a| (a.id.clone(), a.feature.clone())).collect(),
            Some(id) => g
                .children(id)
                .filter_map(|c| g.node(c))
                .filter(|n| n.is_high())
                .map(|n| (n.id.clone(), n.feature.clone()))
                .collect(),
        }
    };
    let areas = high_children(g, None);
    let pick = if areas.is_empty() { None } else { provider.route(&areas, target)? };
    let Some(mut cur) = pick else {
        let [a, c, s] = FALLBACK_PATH;
        return Ok((ensure_path(g, a, c, s)?, true));
    };
    loop {
        let kids = high_children(g, Some(&cur));
        if kids.is_empty() {
            break;
        }
        match provider.route(&kids, target)? {
            Some(k) => cur = k,
            None => break,
        }
    }
    let node = g.node(&cur).expect("routed to an existing node");
    let first = target.first().map(|p| p.as_str().to_string()).unwrap_or_else(|| "general".into());
    let second = target.get(1).map(|p| p.as_str().to_string()).unwrap_or_else(|| first.clone());
    let sid = match node.level {
        Level::Subcategory => cur,
        Level::Category => {
            let area = g.parent(&cur).and_then(|a| g.node(a)).map(RpgNode::name).unwrap_or_default();
            ensure_path(g, &area, &node.name(), &first)?
        }
        _ => ensure_path(g, &node.name(), &first, &second)?,
    };
    Ok((sid, false))
}

fn entity_id(e: &crate::code_index::EntityRef) -> String {
    low_node_id(&e.path, e.qualified_name.as_deref(), e.kind)
}

fn key_name(k: &EntityKey) -> String {
    k.display_name()
}

/// Child feature lists of a file in scan order, taken from `lookup`.
fn child_lists(after: &EntitySet, path: &str, lookup: impl Fn(&EntityKey) -> Vec<FeaturePhrase>) -> Vec<Vec<FeaturePhrase>> {
    let Some(rec) = after.file(path) else { return Vec::new() };
    (0..rec.entities.len()).map(|i| lookup(&rec.entity_ref(i).key())).collect()
}

/// Apply one commit given as unified diff text.
pub fn apply_commit(
    g: &RpgGraph,
    diff_text: &str,
    before: &EntitySet,
    after: &EntitySet,
    provider: &dyn SemanticProvider,
    config: &EvolutionConfig,
) -> Result<(RpgGraph, UpdateReport), UpdateError> {
    let events = parse_diff(diff_text, before, after)?;
    apply_events(g, &events, after, provider, config)
}

/// Apply already computed change events. `g` is never modified; the
/// updated graph is returned only if it validates.
pub fn apply_events(
    g: &RpgGraph,
    events: &[ChangeEvent],
    after: &EntitySet,
    provider: &dyn SemanticProvider,
    config: &EvolutionConfig,
) -> Result<(RpgGraph, UpdateReport), UpdateError> {
    let mut report = UpdateReport { version_before: g.version(), version_after: g.version(), ..Default::default() };
    if events.is_empty() {
        return Ok((g.clone(), report));
    }
    let meter = provider.meter();
    let prev_stage = meter.stage();
    meter.enter_stage(UPDATE_STAGE);
    let start = meter.account(UPDATE_STAGE);
    let mut work = g.clone();
    let result = Commit { g: &mut work, original: g, after, provider, config, report: &mut report, refeatured: BTreeSet::new() }.run(events);
    report.tokens = meter.account(UPDATE_STAGE).since(&start);
    meter.enter_stage(&prev_stage);
    result?;
    let findings = work.validate();
    if !findings.is_empty() {
        return Err(UpdateError::Invalid(findings));
    }
    report.version_after = work.version();
    Ok((work, report))
}

struct Commit<'a> {
    g: &'a mut RpgGraph,
    original: &'a RpgGraph,
    after: &'a EntitySet,
    provider: &'a dyn SemanticProvider,
    config: &'a EvolutionConfig,
    report: &'a mut UpdateReport,
    /// Files with at least one child whose features changed.
    refeatured: BTreeSet<String>,
}

impl Commit<'_> {
    /// True when `path` has the same child entities, in the same order, as
    /// in the original graph; with unchanged features its summary stands.
    fn same_children(&self, path: &str) -> bool {
        let mut old: Vec<(u32, std::cmp::Reverse<u32>, &str)> = self
            .original
            .nodes()
            .filter(|n| n.level != Level::File && n.metadata.path.as_deref() == Some(path))
            .filter_map(|n| n.metadata.span.map(|s| (s.start, std::cmp::Reverse(s.end), n.id.as_str())))
            .collect();
        old.sort();
        let Some(rec) = self.after.file(path) else { return false };
        let new: Vec<String> = (0..rec.entities.len()).map(|i| entity_id(&rec.entity_ref(i))).collect();
        old.len() == new.len() && old.iter().zip(&new).all(|(o, n)| o.2 == n)
    }

    fn run(&mut self, events: &[ChangeEvent]) -> Result<(), UpdateError> {
        let changed: BTreeSet<String> = events.iter().map(|e| e.entity.path.clone()).collect();

        for ev in events.iter().filter(|e| e.kind == ChangeKind::Delete) {
            let pruned = delete_node(self.g, &entity_id(&ev.entity));
            self.report.pruned.extend(pruned);
            self.report.deleted += 1;
        }

        let parsed = self.parse_changed(events)?;
        let mut inserts: Vec<&ChangeEvent> = Vec::new();
        for ev in events.iter().filter(|e| e.kind == ChangeKind::Modify) {
            if ev.entity.kind == EntityKind::File {
                self.report.modified += 1;
            } else if self.g.contains(&entity_id(&ev.entity)) {
                self.modify(ev, &parsed)?;
            } else {
                inserts.push(ev);
            }
        }
        inserts.extend(events.iter().filter(|e| e.kind == ChangeKind::Insert));
        inserts.sort_by_key(|e| (e.entity.path.clone(), e.entity.depth()));

        let new_files: BTreeSet<String> = inserts
            .iter()
            .filter(|e| e.entity.kind == EntityKind::File && !self.g.contains(&entity_id(&e.entity)))
            .map(|e| e.entity.path.clone())
            .collect();
        if !new_files.is_empty() {
            self.g.refresh_high_features(SUMMARY_SIZE);
        }
        for ev in inserts {
            self.insert(ev, &parsed)?;
        }

        for path in changed.iter().filter(|p| !new_files.contains(*p) && self.after.file(p).is_some()) {
            if self.refeatured.contains(path) || !self.same_children(path) {
                self.resummarize(path)?;
            }
        }
        self.refresh_spans(&changed);
        self.refresh_deps(&changed);
        self.g.refresh_high_features(SUMMARY_SIZE);
        ground_scopes(self.g, self.config.min_scope_depth)?;
        self.g.bump_version();
        Ok(())
    }

    fn parse_changed(&mut self, events: &[ChangeEvent]) -> Result<ParseOutcome, UpdateError> {
        let requests: Vec<FeatureRequest> = events
            .iter()
            .filter(|e| e.kind != ChangeKind::Delete && e.entity.kind != EntityKind::File)
            .map(|e| {
                let src = e.new_source.clone().or_else(|| self.after.snippet(&e.entity)).unwrap_or_default();
                FeatureRequest::new(e.entity.clone(), src, self.after.docstring(&e.entity.key()).map(str::to_string))
            })
            .collect();
        if requests.is_empty() {
            return Ok(ParseOutcome::default());
        }
        let paths: Vec<&str> = self.after.paths().collect();
        let ctx = parse_context(&paths);
        let parsed = parse_all(self.provider, &ctx, &requests)?;
        for k in &parsed.flagged {
            self.report.skipped.push(SkippedEvent { entity: key_name(k), reason: "features unavailable".into() });
        }
        Ok(parsed)
    }

    fn modify(&mut self, ev: &ChangeEvent, parsed: &ParseOutcome) -> Result<(), UpdateError> {
        let key = ev.entity.key();
        let id = entity_id(&ev.entity);
        if parsed.flagged.contains(&key) {
            return Ok(());
        }
        let new = parsed.features.get(&key).cloned().unwrap_or_default();
        let old = self.g.node(&id).map(|n| n.feature.clone()).unwrap_or_default();
        if old != new {
            self.refeatured.insert(ev.entity.path.clone());
        }
        let judged = if old == new { Ok(0.0) } else { self.provider.judge_drift(&old, &new) };
        let drift = match judged {
            Ok(d) => d,
            Err(e) => {
                self.report.skipped.push(SkippedEvent { entity: key_name(&key), reason: e.to_string() });
                return Ok(());
            }
        };
        if let Some(n) = self.g.node_mut(&id) {
            n.feature = new;
            n.metadata.span = Some(ev.entity.span);
        }
        if drift > self.config.tau_drift {
            let parent = self
                .after
                .parent_of(&key)
                .map(|p| entity_id(&p))
                .filter(|p| self.g.contains(p))
                .unwrap_or_else(|| low_node_id(&ev.entity.path, None, EntityKind::File));
            self.g.move_node(&id, &parent)?;
            self.report.rerouted.push(id);
        }
        self.report.modified += 1;
        Ok(())
    }

    fn insert(&mut self, ev: &ChangeEvent, parsed: &ParseOutcome) -> Result<(), UpdateError> {
        let id = entity_id(&ev.entity);
        if self.g.contains(&id) {
            return Ok(());
        }
        let key = ev.entity.key();
        if ev.entity.kind == EntityKind::File {
            let lists = child_lists(self.after, &ev.entity.path, |k| parsed.features.get(k).cloned().unwrap_or_default());
            let summary = self.provider.summarize_file(&ev.entity.path, &lists)?;
            let (sid, fallback) = find_best_parent(self.g, self.provider, &summary)?;
            if fallback {
                self.report.fallback.push(id.clone());
            }
            self.g.add_node(RpgNode::low(&ev.entity, summary), Some(&sid))?;
        } else {
            let parent = self
                .after
                .parent_of(&key)
                .map(|p| entity_id(&p))
                .filter(|p| self.g.contains(p))
                .ok_or_else(|| GraphError::MissingParent(id.clone()))?;
            let feature = parsed.features.get(&key).cloned().unwrap_or_default();
            self.g.add_node(RpgNode::low(&ev.entity, feature), Some(&parent))?;
        }
        self.report.inserted += 1;
        Ok(())
    }

    /// Re-synthesize a touched file's summary; a summary that drifts past
    /// the threshold re-routes the file with its subtree.
    fn resummarize(&mut self, path: &str) -> Result<(), UpdateError> {
        let fid = low_node_id(path, None, EntityKind::File);
        let Some(old) = self.g.node(&fid).map(|n| n.feature.clone()) else { return Ok(()) };
        let g = &*self.g;
        let lists = child_lists(self.after, path, |k| {
            g.node(&low_node_id(&k.path, k.qualified_name.as_deref(), k.kind)).map(|n| n.feature.clone()).unwrap_or_default()
        });
        let summary = self.provider.summarize_file(path, &lists)?;
        if summary == old {
            return Ok(());
        }
        let drift = self.provider.judge_drift(&old, &summary)?;
        if let Some(n) = self.g.node_mut(&fid) {
            n.feature = summary.clone();
        }
        if drift > self.config.tau_drift {
            let old_parent = self.g.parent(&fid).map(str::to_string);
            self.g.refresh_high_features(SUMMARY_SIZE);
            let (sid, fallback) = find_best_parent(self.g, self.provider, &summary)?;
            if fallback {
                self.report.fallback.push(fid.clone());
            }
            if old_parent.as_deref() != Some(sid.as_str()) {
                self.g.move_node(&fid, &sid)?;
                let pruned = prune_upward(self.g, old_parent);
                self.report.pruned.extend(pruned);
            }
            self.report.rerouted.push(fid);
        }
        Ok(())
    }

    fn refresh_spans(&mut self, changed: &BTreeSet<String>) {
        for path in changed {
            for e in self.after.entities_in(path) {
                if let Some(n) = self.g.node_mut(&entity_id(e)) {
                    n.metadata.span = Some(e.span);
                }
            }
        }
    }

    /// Files whose outgoing dependency edges may change: the changed files,
    /// files with an edge to or from them, and files whose imports name a
    /// changed module.
    fn affected_files(&self, changed: &BTreeSet<String>) -> BTreeSet<String> {
        let path_of = |id: &str| self.original.node(id).and_then(|n| n.metadata.path.clone());
        let mut affected = changed.clone();
        for e in self.original.dep_edges() {
            let (Some(s), Some(d)) = (path_of(&e.src), path_of(&e.dst)) else { continue };
            if changed.contains(&s) {
                affected.insert(d);
            } else if changed.contains(&d) {
                affected.insert(s);
            }
        }
        let modules: Vec<String> = changed.iter().map(|p| module_name_of(p)).filter(|m| !m.is_empty()).collect();
        let related = |r: &str, m: &str| {
            r == m || r.strip_prefix(m).is_some_and(|t| t.starts_with('.')) || m.strip_prefix(r).is_some_and(|t| t.starts_with('.'))
        };
        for rec in self.after.files() {
            if affected.contains(&rec.path) {
                continue;
            }
            if referenced_modules(rec).iter().any(|r| modules.iter().any(|m| related(r, m))) {
                affected.insert(rec.path.clone());
            }
        }
        affected
    }

    fn refresh_deps(&mut self, changed: &BTreeSet<String>) {
        let affected = self.affected_files(changed);
        let old: BTreeSet<DepLink> = self.original.dep_edges().clone();
        let g = &mut *self.g;
        let src_path: BTreeMap<String, String> = g
            .dep_edges()
            .iter()
            .filter_map(|e| g.node(&e.src).and_then(|n| n.metadata.path.clone()).map(|p| (e.src.clone(), p)))
            .collect();
        g.retain_dep_edges(|e| src_path.get(&e.src).is_some_and(|p| !affected.contains(p)));
        let (edges, _) = extract_dependencies_for(self.after, Some(&affected));
        for l in dep_links(g, &edges) {
            g.add_dep_edge(l);
        }
        let new = g.dep_edges();
        self.report.deps_added = new.difference(&old).count();
        self.report.deps_removed = old.difference(new).count();
    }
}
