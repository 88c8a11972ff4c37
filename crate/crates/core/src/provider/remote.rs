//! Chat-completion backend: `{model, messages}` requests, answers read from
//! the `<solution>` block.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde_json::{json, Value};

use super::deterministic::SUMMARY_SIZE;
use super::phrase::{normalize_all, split_identifier, FeaturePhrase};
use super::prompts::{self, extract_solution, FORMAT_RETRY};
use super::{
    pascal_case, FeaturePath, FeatureRequest, GroupSummary, Meter, ParseContext, ParseOutcome,
    PathAssignment, ProviderBudget, ProviderError, SemanticProvider, DEFAULT_MIN_SIMILARITY,
};

/// Sends one chat request body and returns the assistant's text.
pub trait Transport: Send + Sync {
    fn send(&self, body: &Value) -> Result<String, String>;
}

impl<F> Transport for F
where
    F: Fn(&Value) -> Result<String, String> + Send + Sync,
{
    fn send(&self, body: &Value) -> Result<String, String> {
        self(body)
    }
}

/// Blocking HTTP transport. Accepts OpenAI-style (`choices[0].message.content`)
/// and Anthropic-style (`content[0].text`) response bodies. A bearer token is
/// read from `RPG_API_KEY` when set.
pub struct HttpTransport {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { endpoint: endpoint.to_string(), agent }
    }
}

fn response_text(v: &Value) -> Option<String> {
    if let Some(s) = v.pointer("/choices/0/message/content").and_then(Value::as_str) {
        return Some(s.to_string());
    }
    if let Some(parts) = v.get("content").and_then(Value::as_array) {
        let text: String = parts.iter().filter_map(|p| p.get("text").and_then(Value::as_str)).collect();
        return Some(text);
    }
    None
}

impl Transport for HttpTransport {
    fn send(&self, body: &Value) -> Result<String, String> {
        let mut req = self.agent.post(&self.endpoint).header("content-type", "application/json");
        if let Ok(key) = std::env::var("RPG_API_KEY") {
            req = req.header("authorization", &format!("Bearer {key}")).header("x-api-key", &key);
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let v: Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        response_text(&v).ok_or_else(|| format!("unrecognized response shape: {v}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub model: String,
    pub retries: u32,
    pub budget: ProviderBudget,
    pub min_similarity: f64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            model: String::new(),
            retries: 3,
            budget: ProviderBudget::default(),
            min_similarity: DEFAULT_MIN_SIMILARITY,
        }
    }
}

pub struct RemoteProvider {
    transport: Box<dyn Transport>,
    config: RemoteConfig,
    meter: Meter,
}

enum Attempt<T> {
    Done(T),
    Retry,
}

impl RemoteProvider {
    pub fn new(transport: Box<dyn Transport>, config: RemoteConfig) -> Self {
        Self { transport, config, meter: Meter::new() }
    }

    pub fn http(endpoint: &str, config: RemoteConfig) -> Self {
        Self::new(Box::new(HttpTransport::new(endpoint, Duration::from_secs(120))), config)
    }

    fn body(&self, prompt: &str) -> Value {
        json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        })
    }

    /// Send `prompt` until `accept` takes the answer or attempts run out.
    fn exchange<T>(
        &self,
        operation: &str,
        prompt: &str,
        mut accept: impl FnMut(&str) -> Attempt<T>,
    ) -> Result<T, ProviderError> {
        let attempts = self.config.retries.max(1);
        let mut last_transport = None;
        for attempt in 0..attempts {
            let text = if attempt == 0 { prompt.to_string() } else { format!("{prompt}{FORMAT_RETRY}") };
            match self.transport.send(&self.body(&text)) {
                Ok(answer) => {
                    self.meter.charge(operation, &text, &answer);
                    last_transport = None;
                    if let Some(sol) = extract_solution(&answer) {
                        if let Attempt::Done(v) = accept(sol) {
                            return Ok(v);
                        }
                    }
                    log::warn!("{operation}: malformed answer on attempt {}", attempt + 1);
                }
                Err(e) => {
                    self.meter.charge(operation, &text, "");
                    log::warn!("{operation}: transport error on attempt {}: {e}", attempt + 1);
                    last_transport = Some(e);
                }
            }
        }
        Err(match last_transport {
            Some(message) => ProviderError::Transport { operation: operation.into(), attempts, message },
            None => ProviderError::Malformed { operation: operation.into(), attempts },
        })
    }

    fn fallback_path(g: &GroupSummary, areas: &[String]) -> FeaturePath {
        let mut bag: BTreeSet<String> = split_identifier(&g.id).into_iter().collect();
        bag.extend(g.phrases.iter().flat_map(|p| p.words().map(str::to_string)));
        let mut sorted: Vec<&String> = areas.iter().collect();
        sorted.sort();
        let mut best = sorted[0];
        let mut best_score = 0;
        for a in &sorted {
            let tokens: BTreeSet<String> = split_identifier(a).into_iter().collect();
            let score = tokens.intersection(&bag).count();
            if score > best_score {
                best = a;
                best_score = score;
            }
        }
        let own = normalize_all([split_identifier(&g.id).join(" ")]);
        let category = g
            .phrases
            .first()
            .or(own.first())
            .cloned()
            .unwrap_or_else(|| FeaturePhrase::new("organize code").expect("valid literal"));
        let subcategory = g.phrases.get(1).cloned().unwrap_or_else(|| category.clone());
        FeaturePath { area: best.clone(), category, subcategory }
    }
}

impl SemanticProvider for RemoteProvider {
    fn meter(&self) -> &Meter {
        &self.meter
    }

    fn budget(&self) -> ProviderBudget {
        self.config.budget
    }

    fn parse_features(
        &self,
        ctx: &ParseContext,
        batch: &[FeatureRequest],
    ) -> Result<ParseOutcome, ProviderError> {
        let mut found: BTreeMap<String, Vec<FeaturePhrase>> = BTreeMap::new();
        let mut pending: Vec<FeatureRequest> = batch.to_vec();
        let attempts = self.config.retries.max(1);
        let mut transport_error = None;
        for _ in 0..attempts {
            if pending.is_empty() {
                break;
            }
            let prompt = prompts::render_parse(&ctx.repo_name, &ctx.repo_info, &pending);
            let result = self.exchange("parse_features", &prompt, |sol| {
                match serde_json::from_str::<BTreeMap<String, Vec<String>>>(sol) {
                    Ok(map) => Attempt::Done(map),
                    Err(_) => Attempt::Retry,
                }
            });
            match result {
                Ok(map) => {
                    transport_error = None;
                    for req in &pending {
                        let qname = req.entity.qualified_name.clone().unwrap_or_default();
                        let hit = map.get(&req.key).or_else(|| map.get(&qname));
                        if let Some(raw) = hit {
                            found.insert(req.key.clone(), normalize_all(raw));
                        }
                    }
                    pending.retain(|r| !found.contains_key(&r.key));
                }
                Err(e @ ProviderError::Transport { .. }) => transport_error = Some(e),
                Err(_) => break,
            }
        }
        if let Some(e) = transport_error {
            if found.is_empty() {
                return Err(e);
            }
        }
        let mut out = ParseOutcome::default();
        for req in batch {
            let phrases = match found.get(&req.key) {
                Some(p) => p.clone(),
                None => {
                    out.flagged.push(req.entity.key());
                    Vec::new()
                }
            };
            out.features.entry(req.entity.key()).or_default().extend(phrases);
        }
        for v in out.features.values_mut() {
            *v = super::phrase::dedup_phrases(std::mem::take(v));
        }
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
        let prompt = prompts::render_summarize(path, child_phrases);
        self.exchange("summarize_file", &prompt, |sol| match serde_json::from_str::<Vec<String>>(sol) {
            Ok(v) => {
                let mut p = normalize_all(v);
                p.truncate(SUMMARY_SIZE);
                Attempt::Done(p)
            }
            Err(_) => Attempt::Retry,
        })
    }

    fn discover_domains(
        &self,
        file_summaries: &[(String, Vec<FeaturePhrase>)],
    ) -> Result<Vec<String>, ProviderError> {
        if file_summaries.is_empty() {
            return Err(ProviderError::NothingToOrganize);
        }
        let prompt = prompts::render_discover(file_summaries);
        self.exchange("discover_domains", &prompt, |sol| match serde_json::from_str::<Vec<String>>(sol) {
            Ok(v) => {
                let mut seen = BTreeSet::new();
                let areas: Vec<String> = v
                    .iter()
                    .map(|a| {
                        if a.contains(|c: char| !c.is_alphanumeric()) {
                            pascal_case(a)
                        } else {
                            pascal_case_keep(a)
                        }
                    })
                    .filter(|a| !a.is_empty() && seen.insert(a.clone()))
                    .take(super::deterministic::MAX_AREAS)
                    .collect();
                if areas.is_empty() {
                    Attempt::Retry
                } else {
                    Attempt::Done(areas)
                }
            }
            Err(_) => Attempt::Retry,
        })
    }

    fn assign_paths(
        &self,
        groups: &[GroupSummary],
        areas: &[String],
    ) -> Result<PathAssignment, ProviderError> {
        if areas.is_empty() {
            return Err(ProviderError::NothingToOrganize);
        }
        let prompt = prompts::render_assign(groups, areas);
        let known: BTreeSet<&str> = groups.iter().map(|g| g.id.as_str()).collect();
        let parsed = self.exchange("assign_paths", &prompt, |sol| {
            let Ok(map) = serde_json::from_str::<BTreeMap<String, Vec<String>>>(sol) else {
                return Attempt::Retry;
            };
            let mut out: BTreeMap<String, FeaturePath> = BTreeMap::new();
            for (path, gs) in map {
                let Some(p) = FeaturePath::parse(&path) else { return Attempt::Retry };
                if !areas.contains(&p.area) {
                    return Attempt::Retry;
                }
                for g in gs {
                    if known.contains(g.as_str()) {
                        out.entry(g).or_insert_with(|| p.clone());
                    }
                }
            }
            Attempt::Done(out)
        });
        let by_group = match parsed {
            Ok(m) => m,
            Err(ProviderError::Malformed { .. }) => BTreeMap::new(),
            Err(e) => return Err(e),
        };
        let mut out = PathAssignment::default();
        for g in groups {
            let path = match by_group.get(&g.id) {
                Some(p) => p.clone(),
                None => {
                    out.fallbacks.push(g.id.clone());
                    Self::fallback_path(g, areas)
                }
            };
            out.paths.entry(path).or_default().push(g.id.clone());
        }
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
        let prompt = prompts::render_route(candidates, target);
        let r = self.exchange("route", &prompt, |sol| match serde_json::from_str::<Option<String>>(sol) {
            Ok(None) => Attempt::Done(None),
            Ok(Some(id)) if candidates.iter().any(|(c, _)| *c == id) => Attempt::Done(Some(id)),
            _ => Attempt::Retry,
        });
        match r {
            Err(ProviderError::Malformed { .. }) => Ok(None),
            other => other,
        }
    }

    fn judge_drift(&self, old: &[FeaturePhrase], new: &[FeaturePhrase]) -> Result<f64, ProviderError> {
        let prompt = prompts::render_drift(old, new);
        self.exchange("judge_drift", &prompt, |sol| match sol.parse::<f64>() {
            Ok(v) if v.is_finite() => Attempt::Done(v.clamp(0.0, 1.0)),
            _ => Attempt::Retry,
        })
    }
}

/// Uppercase the first letter, keep the rest.
fn pascal_case_keep(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
