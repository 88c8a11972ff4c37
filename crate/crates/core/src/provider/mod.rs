//! Semantic judgments behind one interface: feature parsing, file
//! summaries, domain discovery, path assignment, routing and drift scoring.
//!
//! Two backends implement [`SemanticProvider`]: [`DeterministicProvider`]
//! (rule based, offline, reproducible) and [`RemoteProvider`] (chat-style
//! HTTP endpoint). Both render the same prompts and charge them to the shared
//! [`Meter`], so token accounting does not depend on the backend.

mod account;
mod batch;
mod deterministic;
pub mod phrase;
pub mod prompts;
mod remote;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::code_index::{EntityKey, EntityRef};

pub use account::{Meter, RecordedPayload, TokenAccount};
pub use batch::{estimate_tokens, make_batches, OversizeItem, ProviderBudget};
pub use deterministic::{name_phrase, DeterministicProvider};
pub use phrase::{normalize_feature, token_jaccard, FeaturePhrase, PhraseRejection};
pub use remote::{HttpTransport, RemoteConfig, RemoteProvider, Transport};

/// Default minimum similarity for a routing decision.
pub const DEFAULT_MIN_SIMILARITY: f64 = 0.2;

/// One entity submitted for feature parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureRequest {
    /// Wire key: `path:Qualified.name`.
    pub key: String,
    pub entity: EntityRef,
    pub source: String,
    pub docstring: Option<String>,
}

impl FeatureRequest {
    pub fn new(entity: EntityRef, source: String, docstring: Option<String>) -> Self {
        Self { key: entity.display_name(), entity, source, docstring }
    }
}

/// Repository description embedded in parsing prompts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseContext {
    pub repo_name: String,
    pub repo_info: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOutcome {
    pub features: BTreeMap<EntityKey, Vec<FeaturePhrase>>,
    /// Entities whose answer stayed malformed after all retries.
    pub flagged: Vec<EntityKey>,
}

/// A top-level feature group handed to path assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub id: String,
    pub members: Vec<String>,
    pub phrases: Vec<FeaturePhrase>,
}

/// `<area>/<category>/<subcategory>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeaturePath {
    pub area: String,
    pub category: FeaturePhrase,
    pub subcategory: FeaturePhrase,
}

impl FeaturePath {
    pub fn parse(s: &str) -> Option<Self> {
        let mut it = s.split('/');
        let (a, c, sc) = (it.next()?, it.next()?, it.next()?);
        if it.next().is_some() || a.trim().is_empty() {
            return None;
        }
        Some(Self {
            area: a.trim().to_string(),
            category: normalize_feature(c).ok()?,
            subcategory: normalize_feature(sc).ok()?,
        })
    }

    pub fn segments(&self) -> [&str; 3] {
        [&self.area, self.category.as_str(), self.subcategory.as_str()]
    }
}

impl fmt::Display for FeaturePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.area, self.category, self.subcategory)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathAssignment {
    pub paths: BTreeMap<FeaturePath, Vec<String>>,
    /// Groups that went through the fallback rule.
    pub fallbacks: Vec<String>,
}

impl PathAssignment {
    pub fn path_of(&self, group: &str) -> Option<&FeaturePath> {
        self.paths.iter().find(|(_, gs)| gs.iter().any(|g| g == group)).map(|(p, _)| p)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("nothing to organize")]
    NothingToOrganize,
    #[error("no candidates to route between")]
    NoCandidates,
    #[error(transparent)]
    Oversize(#[from] OversizeItem),
    #[error("{operation}: transport failed after {attempts} attempts: {message}")]
    Transport { operation: String, attempts: u32, message: String },
    #[error("{operation}: malformed answer after {attempts} attempts")]
    Malformed { operation: String, attempts: u32 },
}

/// Every semantic judgment the pipelines need.
pub trait SemanticProvider: Send + Sync {
    fn meter(&self) -> &Meter;

    fn budget(&self) -> ProviderBudget;

    /// Features for each requested entity. Every input appears in the result.
    fn parse_features(
        &self,
        ctx: &ParseContext,
        batch: &[FeatureRequest],
    ) -> Result<ParseOutcome, ProviderError>;

    /// Summary phrases for a file given the feature lists of its entities.
    fn summarize_file(
        &self,
        path: &str,
        child_phrases: &[Vec<FeaturePhrase>],
    ) -> Result<Vec<FeaturePhrase>, ProviderError>;

    /// PascalCase functional area names.
    fn discover_domains(
        &self,
        file_summaries: &[(String, Vec<FeaturePhrase>)],
    ) -> Result<Vec<String>, ProviderError>;

    fn assign_paths(
        &self,
        groups: &[GroupSummary],
        areas: &[String],
    ) -> Result<PathAssignment, ProviderError>;

    /// Best candidate id, or `None` when nothing fits.
    fn route(
        &self,
        candidates: &[(String, Vec<FeaturePhrase>)],
        target: &[FeaturePhrase],
    ) -> Result<Option<String>, ProviderError>;

    /// Semantic drift in `[0, 1]`.
    fn judge_drift(&self, old: &[FeaturePhrase], new: &[FeaturePhrase]) -> Result<f64, ProviderError>;
}

/// Split requests into budget-respecting batches, in input order.
pub fn batch_requests(
    ctx: &ParseContext,
    requests: &[FeatureRequest],
    budget: ProviderBudget,
) -> Result<Vec<Vec<usize>>, OversizeItem> {
    let overhead = estimate_tokens(&prompts::parse_overhead(&ctx.repo_name, &ctx.repo_info));
    let room = budget.max_payload_tokens.saturating_sub(overhead);
    let items: Vec<(&str, usize)> = requests
        .iter()
        .map(|r| (r.key.as_str(), estimate_tokens(&prompts::render_parse_item(r))))
        .collect();
    make_batches(&items, room)
}

/// Parse features for all requests, batched under the provider budget.
/// Batches run concurrently; results are merged by key, so the outcome does
/// not depend on completion order.
pub fn parse_all(
    provider: &dyn SemanticProvider,
    ctx: &ParseContext,
    requests: &[FeatureRequest],
) -> Result<ParseOutcome, ProviderError> {
    use rayon::prelude::*;
    let batches = batch_requests(ctx, requests, provider.budget())?;
    let results: Vec<Result<ParseOutcome, ProviderError>> = batches
        .par_iter()
        .map(|b| {
            let batch: Vec<FeatureRequest> = b.iter().map(|&i| requests[i].clone()).collect();
            provider.parse_features(ctx, &batch)
        })
        .collect();
    let mut out = ParseOutcome::default();
    for r in results {
        let r = r?;
        out.features.extend(r.features);
        out.flagged.extend(r.flagged);
    }
    out.flagged.sort();
    out.flagged.dedup();
    Ok(out)
}

/// Top-`k` phrases by frequency across lists, ties in lexicographic order.
pub fn top_phrases<'a, I>(lists: I, k: usize) -> Vec<FeaturePhrase>
where
    I: IntoIterator<Item = &'a [FeaturePhrase]>,
{
    let mut counts: BTreeMap<&FeaturePhrase, usize> = BTreeMap::new();
    for list in lists {
        for p in list {
            *counts.entry(p).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&FeaturePhrase, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(k).map(|(p, _)| p.clone()).collect()
}

/// `snake_case` or `camelCase` to PascalCase.
pub fn pascal_case(name: &str) -> String {
    phrase::split_identifier(name)
        .iter()
        .map(|t| {
            let mut c = t.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect::<String>(),
                None => String::new(),
            }
        })
        .collect()
}

pub fn is_pascal_case(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_uppercase()) && s.chars().all(|c| c.is_alphanumeric())
}
