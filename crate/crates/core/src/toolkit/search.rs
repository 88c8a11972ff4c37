use std::collections::BTreeSet;

use globset::Glob;
use serde::{Deserialize, Serialize};

use super::{code_entity_name, entity_type, Snapshot, StringList, ToolError, ToolOutput, FEATURE_HITS, SNIPPET_HITS};
use crate::graph::RpgNode;
use crate::provider::{normalize_feature, token_jaccard, FeaturePhrase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Features,
    Snippets,
    Auto,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchParams {
    pub mode: SearchMode,
    #[serde(default)]
    pub feature_terms: Option<StringList>,
    #[serde(default)]
    pub search_scopes: Option<StringList>,
    #[serde(default)]
    pub search_terms: Option<StringList>,
    #[serde(default)]
    pub line_nums: Option<Vec<i64>>,
    #[serde(default)]
    pub file_path_or_pattern: Option<String>,
}

impl SearchParams {
    pub fn features(terms: &[&str]) -> Self {
        Self {
            mode: SearchMode::Features,
            feature_terms: Some(StringList(terms.iter().map(|s| s.to_string()).collect())),
            search_scopes: None,
            search_terms: None,
            line_nums: None,
            file_path_or_pattern: None,
        }
    }

    pub fn snippets(terms: &[&str]) -> Self {
        Self {
            mode: SearchMode::Snippets,
            feature_terms: None,
            search_terms: Some(StringList(terms.iter().map(|s| s.to_string()).collect())),
            ..Self::features(&[])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHit {
    pub node_id: String,
    pub feature_path: String,
    pub entity_type: String,
    pub code_entity: Option<String>,
    pub file_path: Option<String>,
    pub line_range: Option<[u32; 2]>,
    pub score: f64,
    pub matched_features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetHit {
    pub term: String,
    pub file_path: String,
    pub code_entity: Option<String>,
    pub line_range: [u32; 2],
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Which searches ran, in order.
    pub ran: Vec<SearchMode>,
    pub features: Vec<FeatureHit>,
    pub snippets: Vec<SnippetHit>,
}

fn list(v: &Option<StringList>) -> &[String] {
    v.as_ref().map(|l| l.0.as_slice()).unwrap_or(&[])
}

/// Feature path of a node: its high ancestors, then the node itself when
/// abstract, or the code entity for low nodes.
fn display_path(snap: &Snapshot, n: &RpgNode) -> String {
    let base = snap.graph.feature_path(&n.id);
    if n.is_high() {
        base
    } else if base.is_empty() {
        code_entity_name(n)
    } else {
        format!("{base}/{}", code_entity_name(n))
    }
}

fn feature_search(
    snap: &Snapshot,
    p: &SearchParams,
    warnings: &mut Vec<String>,
) -> Result<Vec<FeatureHit>, ToolError> {
    let mut terms: Vec<FeaturePhrase> = Vec::new();
    for t in list(&p.feature_terms) {
        match normalize_feature(t) {
            Ok(f) => terms.push(f),
            Err(e) => warnings.push(format!("feature term `{t}` ignored: {e}")),
        }
    }
    let g = &snap.graph;
    let mut allowed: Option<BTreeSet<String>> = None;
    for s in list(&p.search_scopes) {
        match snap.resolve_feature_entity(s) {
            Ok(n) => allowed.get_or_insert_with(BTreeSet::new).extend(g.subtree(&n.id)),
            Err(e) => warnings.push(format!("search scope ignored: {e}")),
        }
    }
    if allowed.is_none() && !list(&p.search_scopes).is_empty() {
        warnings.push("no valid search scope; searching the whole graph".into());
    }
    if terms.is_empty() {
        return Err(ToolError::with("feature_terms: no usable terms", std::mem::take(warnings)));
    }
    let mut hits: Vec<FeatureHit> = Vec::new();
    for n in g.nodes() {
        if allowed.as_ref().is_some_and(|a| !a.contains(&n.id)) {
            continue;
        }
        let mut best = 0.0f64;
        let mut matched = Vec::new();
        for f in &n.feature {
            let s = terms.iter().map(|t| token_jaccard(std::slice::from_ref(t), std::slice::from_ref(f))).fold(0.0, f64::max);
            if s > 0.0 {
                matched.push(f.as_str().to_string());
            }
            best = best.max(s);
        }
        if best <= 0.0 {
            continue;
        }
        let span = n.metadata.span;
        hits.push(FeatureHit {
            node_id: n.id.clone(),
            feature_path: display_path(snap, n),
            entity_type: entity_type(n).to_string(),
            code_entity: (!n.is_high()).then(|| code_entity_name(n)),
            file_path: n.metadata.path.clone(),
            line_range: span.map(|s| [s.start, s.end]),
            score: best,
            matched_features: matched,
        });
    }
    // Equal scores favour the most specific node: symbols, then files, then
    // abstract nodes whose summaries repeat their members' phrases.
    let rank = |h: &FeatureHit| match h.entity_type.as_str() {
        "directory" => 2,
        "file" => 1,
        _ => 0,
    };
    hits.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| rank(a).cmp(&rank(b)))
            .then_with(|| a.feature_path.cmp(&b.feature_path))
            .then_with(|| a.node_id.cmp(&b.node_id))
    });
    hits.truncate(FEATURE_HITS);
    Ok(hits)
}

fn is_exact_path(s: &str) -> bool {
    !s.contains(['*', '?', '[', '{'])
}

/// Innermost low node of `path` whose span contains `line`.
fn entity_at(snap: &Snapshot, path: &str, line: u32) -> Option<String> {
    snap.graph
        .nodes()
        .filter(|n| !n.is_high() && n.metadata.path.as_deref() == Some(path) && n.metadata.qualified_name.is_some())
        .filter(|n| n.metadata.span.is_some_and(|s| s.contains_line(line)))
        .min_by_key(|n| n.metadata.span.map(|s| s.len()))
        .map(code_entity_name)
}

fn snippet_search(
    snap: &Snapshot,
    p: &SearchParams,
    terms: &[String],
    warnings: &mut Vec<String>,
) -> Result<Vec<SnippetHit>, ToolError> {
    let pattern = p.file_path_or_pattern.clone().unwrap_or_else(|| "**/*.py".into());
    let mut hits = Vec::new();

    if let Some(ln) = &p.line_nums {
        let [start, end] = ln.as_slice() else {
            return Err(ToolError::with("line_nums: expected two integers [start, end]", std::mem::take(warnings)));
        };
        if !is_exact_path(&pattern) || snap.source(&pattern).is_none() {
            return Err(ToolError::with(
                format!("line_nums requires an exact, existing file path; got `{pattern}`"),
                std::mem::take(warnings),
            ));
        }
        if *start < 1 || end < start {
            return Err(ToolError::with(format!("line_nums: bad range [{start}, {end}]"), std::mem::take(warnings)));
        }
        let total = snap.source(&pattern).map(|t| t.lines().count()).unwrap_or(0) as i64;
        let end = if *end > total {
            warnings.push(format!("line_nums: end {end} clamped to {total}"));
            total
        } else {
            *end
        };
        let (s, e) = (*start as u32, end as u32);
        hits.push(SnippetHit {
            term: format!("{s}-{e}"),
            file_path: pattern.clone(),
            code_entity: entity_at(snap, &pattern, s),
            line_range: [s, e],
            text: snap.lines(&pattern, s, e).unwrap_or_default(),
        });
    }

    let glob = match Glob::new(&pattern) {
        Ok(g) => g.compile_matcher(),
        Err(e) => return Err(ToolError::with(format!("file_path_or_pattern: {e}"), std::mem::take(warnings))),
    };
    let files: Vec<&str> = snap.paths().filter(|f| glob.is_match(f) || *f == pattern).collect();
    let mut truncated = false;
    for term in terms {
        let before = hits.len();
        let t = term.trim();
        if t.is_empty() {
            warnings.push("empty search term ignored".into());
            continue;
        }
        if let Some(text) = snap.source(t) {
            let n = text.lines().count() as u32;
            hits.push(SnippetHit {
                term: term.clone(),
                file_path: t.to_string(),
                code_entity: Some(t.to_string()),
                line_range: [1, n.max(1)],
                text: text.to_string(),
            });
            continue;
        }
        if t.contains(':') {
            if let Ok(n) = snap.resolve_code_entity(t) {
                let path = n.metadata.path.clone().unwrap_or_default();
                let span = n.metadata.span.unwrap_or_default();
                hits.push(SnippetHit {
                    term: term.clone(),
                    file_path: path.clone(),
                    code_entity: Some(code_entity_name(n)),
                    line_range: [span.start, span.end],
                    text: snap.lines(&path, span.start, span.end).unwrap_or_default(),
                });
                continue;
            }
        }
        for f in &files {
            let Some(text) = snap.source(f) else { continue };
            for (i, line) in text.lines().enumerate() {
                if line.contains(t) {
                    if hits.len() >= SNIPPET_HITS {
                        truncated = true;
                        break;
                    }
                    let ln = i as u32 + 1;
                    hits.push(SnippetHit {
                        term: term.clone(),
                        file_path: f.to_string(),
                        code_entity: entity_at(snap, f, ln),
                        line_range: [ln, ln],
                        text: line.to_string(),
                    });
                }
            }
        }
        if hits.len() == before && !truncated {
            warnings.push(format!("search term `{term}` matched nothing"));
        }
    }
    if truncated {
        warnings.push(format!("snippet results truncated to {SNIPPET_HITS}"));
    }
    Ok(hits)
}

pub fn search_node(snap: &Snapshot, p: &SearchParams) -> Result<ToolOutput<SearchResult>, ToolError> {
    let mut warnings = Vec::new();
    let mut out = SearchResult::default();
    match p.mode {
        SearchMode::Features => {
            if p.feature_terms.is_none() {
                return Err(ToolError::new("feature_terms is required in features mode"));
            }
            out.ran.push(SearchMode::Features);
            out.features = feature_search(snap, p, &mut warnings)?;
        }
        SearchMode::Snippets => {
            if p.search_terms.is_none() && p.line_nums.is_none() {
                return Err(ToolError::new("search_terms is required in snippets mode"));
            }
            out.ran.push(SearchMode::Snippets);
            out.snippets = snippet_search(snap, p, list(&p.search_terms), &mut warnings)?;
        }
        SearchMode::Auto => {
            if p.feature_terms.is_none() {
                return Err(ToolError::new("feature_terms is required in auto mode"));
            }
            out.ran.push(SearchMode::Features);
            out.features = feature_search(snap, p, &mut warnings)?;
            let top = out.features.first().map(|h| h.score).unwrap_or(0.0);
            if out.features.is_empty() || top < snap.min_similarity {
                let terms: Vec<String> = match &p.search_terms {
                    Some(t) => t.0.clone(),
                    None => list(&p.feature_terms).to_vec(),
                };
                warnings.push(format!("feature search too weak (top score {top:.2}); fell back to snippet search"));
                out.ran.push(SearchMode::Snippets);
                out.snippets = snippet_search(snap, p, &terms, &mut warnings)?;
            }
        }
    }
    Ok(ToolOutput { value: out, warnings })
}
