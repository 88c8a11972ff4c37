//! Rule-based offline backend.

use std::collections::{BTreeMap, BTreeSet};

use super::phrase::{normalize_all, normalize_feature, split_identifier, token_jaccard, FeaturePhrase};
use super::prompts::{self, wrap_solution};
use super::{
    top_phrases, FeaturePath, FeatureRequest, GroupSummary, Meter, ParseContext,
    ParseOutcome, PathAssignment, ProviderBudget, ProviderError, SemanticProvider, DEFAULT_MIN_SIMILARITY,
};
use crate::code_index::{EntityKind, EntityRef};
use crate::extractor::grouping;

/// Largest number of functional areas proposed.
pub const MAX_AREAS: usize = 12;
/// Phrases kept in a synthesized file summary.
pub const SUMMARY_SIZE: usize = 8;

#[derive(Debug)]
pub struct DeterministicProvider {
    meter: Meter,
    budget: ProviderBudget,
    min_similarity: f64,
    use_docstrings: bool,
}

impl Default for DeterministicProvider {
    fn default() -> Self {
        Self::new(ProviderBudget::default(), DEFAULT_MIN_SIMILARITY, true)
    }
}

impl DeterministicProvider {
    pub fn new(budget: ProviderBudget, min_similarity: f64, use_docstrings: bool) -> Self {
        Self { meter: Meter::new(), budget, min_similarity, use_docstrings }
    }

    /// Same rules, but features come from names only.
    pub fn names_only() -> Self {
        Self::new(ProviderBudget::default(), DEFAULT_MIN_SIMILARITY, false)
    }

    pub fn features_for(&self, req: &FeatureRequest) -> Vec<FeaturePhrase> {
        if self.use_docstrings {
            if let Some(doc) = &req.docstring {
                let p = docstring_phrases(doc);
                if !p.is_empty() {
                    return p;
                }
            }
        }
        name_phrase(&req.entity)
    }
}

const VERB_TABLE: &[(&str, &str)] = &[
    ("get", "retrieve"),
    ("is", "check"),
    ("has", "check"),
    ("calc", "compute"),
    ("init", "initialize"),
];

/// Phrase derived from an entity's own name: identifier tokens with the first
/// token mapped through the verb table. `__init__` becomes
/// `initialize <class>`; other dunder names lose their underscores.
pub fn name_phrase(entity: &EntityRef) -> Vec<FeaturePhrase> {
    let name = entity.short_name();
    let mut tokens = if name == "__init__" {
        let owner = entity
            .qualified_name
            .as_deref()
            .and_then(|q| q.rsplit('.').nth(1))
            .unwrap_or("object");
        let mut t = vec!["initialize".to_string()];
        t.extend(split_identifier(owner));
        t
    } else {
        split_identifier(name.trim_matches('_'))
    };
    if entity.kind == EntityKind::File {
        tokens = split_identifier(name.trim_end_matches(".py"));
    }
    if let Some(first) = tokens.first_mut() {
        if let Some((_, verb)) = VERB_TABLE.iter().find(|(k, _)| k == first) {
            *first = verb.to_string();
        }
    }
    normalize_feature(&tokens.join(" ")).map(|p| vec![p]).unwrap_or_default()
}

/// Sentences of a docstring's first paragraph, each normalized; rejected or
/// duplicate sentences are dropped.
pub fn docstring_phrases(doc: &str) -> Vec<FeaturePhrase> {
    let para: Vec<&str> = doc.lines().map(str::trim).take_while(|l| !l.is_empty()).collect();
    let text = para.join(" ");
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if matches!(c, '.' | '!' | '?' | ';') && chars.get(i + 1).is_none_or(|n| n.is_whitespace()) {
            sentences.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    sentences.push(cur);
    normalize_all(sentences.iter().map(|s| s.trim()).filter(|s| !s.is_empty()))
}

fn area_tokens(area: &str) -> BTreeSet<String> {
    split_identifier(area).into_iter().collect()
}

impl SemanticProvider for DeterministicProvider {
    fn meter(&self) -> &Meter {
        &self.meter
    }

    fn budget(&self) -> ProviderBudget {
        self.budget
    }

    fn parse_features(
        &self,
        ctx: &ParseContext,
        batch: &[FeatureRequest],
    ) -> Result<ParseOutcome, ProviderError> {
        let mut out = ParseOutcome::default();
        let mut answer = serde_json::Map::new();
        for req in batch {
            let phrases = self.features_for(req);
            answer.insert(req.key.clone(), serde_json::json!(phrases));
            let slot = out.features.entry(req.entity.key()).or_default();
            for p in phrases {
                if !slot.contains(&p) {
                    slot.push(p);
                }
            }
        }
        let prompt = prompts::render_parse(&ctx.repo_name, &ctx.repo_info, batch);
        let completion = wrap_solution(&serde_json::Value::Object(answer).to_string());
        self.meter.charge("parse_features", &prompt, &completion);
        Ok(out)
    }

    fn summarize_file(
        &self,
        path: &str,
        child_phrases: &[Vec<FeaturePhrase>],
    ) -> Result<Vec<FeaturePhrase>, ProviderError> {
        if child_phrases.iter().all(Vec::is_empty) {
            return Ok(Vec::new());
        }
        let summary = top_phrases(child_phrases.iter().map(Vec::as_slice), SUMMARY_SIZE);
        let completion = wrap_solution(&serde_json::to_string(&summary).unwrap_or_default());
        self.meter.charge("summarize_file", &prompts::render_summarize(path, child_phrases), &completion);
        Ok(summary)
    }

    fn discover_domains(
        &self,
        file_summaries: &[(String, Vec<FeaturePhrase>)],
    ) -> Result<Vec<String>, ProviderError> {
        if file_summaries.is_empty() {
            return Err(ProviderError::NothingToOrganize);
        }
        let paths: Vec<&str> = file_summaries.iter().map(|(p, _)| p.as_str()).collect();
        let groups = grouping::group_files(&paths);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for (id, members) in &groups.groups {
            *counts.entry(groups.label(id)).or_default() += members.len();
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut areas: Vec<String> = ranked.into_iter().take(MAX_AREAS).map(|(l, _)| l).collect();
        areas.sort();
        let completion = wrap_solution(&serde_json::to_string(&areas).unwrap_or_default());
        self.meter.charge("discover_domains", &prompts::render_discover(file_summaries), &completion);
        Ok(areas)
    }

    fn assign_paths(
        &self,
        groups: &[GroupSummary],
        areas: &[String],
    ) -> Result<PathAssignment, ProviderError> {
        if areas.is_empty() {
            return Err(ProviderError::NothingToOrganize);
        }
        let mut sorted_areas: Vec<&String> = areas.iter().collect();
        sorted_areas.sort();
        let mut out = PathAssignment::default();
        for g in groups {
            let label = grouping::label_for_members(&g.id, &g.members);
            let area = match sorted_areas.iter().find(|a| ***a == label) {
                Some(a) => (*a).clone(),
                None => {
                    let mut bag: BTreeSet<String> = split_identifier(&g.id).into_iter().collect();
                    bag.extend(g.phrases.iter().flat_map(|p| p.words().map(str::to_string)));
                    let mut best = sorted_areas[0];
                    let mut best_score = 0;
                    for a in &sorted_areas {
                        let score = area_tokens(a).intersection(&bag).count();
                        if score > best_score {
                            best = a;
                            best_score = score;
                        }
                    }
                    best.clone()
                }
            };
            let fallback = group_phrase(g);
            let category = g.phrases.first().cloned().unwrap_or_else(|| fallback.clone());
            let subcategory = g.phrases.get(1).cloned().unwrap_or_else(|| category.clone());
            out.paths.entry(FeaturePath { area, category, subcategory }).or_default().push(g.id.clone());
        }
        let answer: serde_json::Map<String, serde_json::Value> =
            out.paths.iter().map(|(p, gs)| (p.to_string(), serde_json::json!(gs))).collect();
        let completion = wrap_solution(&serde_json::Value::Object(answer).to_string());
        self.meter.charge("assign_paths", &prompts::render_assign(groups, areas), &completion);
        Ok(out)
    }

    fn route(
        &self,
        candidates: &[(String, Vec<FeaturePhrase>)],
        target: &[FeaturePhrase],
    ) -> Result<Option<String>, ProviderError> {
        if candidates.is_empty() {
            return Err(ProviderError::NoCandidates);
        }
        let mut best: Option<(&str, f64)> = None;
        for (id, phrases) in candidates {
            let s = token_jaccard(phrases, target);
            best = match best {
                Some((bid, bs)) if bs > s || (bs == s && bid <= id.as_str()) => Some((bid, bs)),
                _ => Some((id.as_str(), s)),
            };
        }
        let pick = best.filter(|(_, s)| *s >= self.min_similarity).map(|(id, _)| id.to_string());
        let completion = wrap_solution(&serde_json::to_string(&pick).unwrap_or_default());
        self.meter.charge("route", &prompts::render_route(candidates, target), &completion);
        Ok(pick)
    }

    fn judge_drift(&self, old: &[FeaturePhrase], new: &[FeaturePhrase]) -> Result<f64, ProviderError> {
        let d = 1.0 - token_jaccard(old, new);
        self.meter.charge("judge_drift", &prompts::render_drift(old, new), &wrap_solution(&d.to_string()));
        Ok(d)
    }
}

/// The group's own name as a phrase, for groups without features.
fn group_phrase(g: &GroupSummary) -> FeaturePhrase {
    let base = if g.id == grouping::ROOT_GROUP { "module" } else { g.id.as_str() };
    normalize_feature(&split_identifier(base).join(" "))
        .or_else(|_| normalize_feature("organize code"))
        .expect("literal phrase is valid")
}
