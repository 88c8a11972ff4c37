//! Prompt rendering. Every backend renders the same text so that payload
//! accounting is identical whether or not a request actually goes out.

use super::phrase::FeaturePhrase;
use super::{FeatureRequest, GroupSummary};

pub const SEMANTIC_PARSING: &str = include_str!("prompts/semantic_parsing.txt");
pub const DOMAIN_DISCOVERY: &str = include_str!("prompts/domain_discovery.txt");
pub const HIERARCHY_CONSTRUCTION: &str = include_str!("prompts/hierarchy_construction.txt");

const SUMMARIZE: &str = "Summarize the file below as at most 8 short lowercase verb + object features, \
most characteristic first, drawn from its entities' features.\n\
Return a JSON list inside <solution></solution>.\n";

const ROUTE: &str = "Pick the candidate whose features are the best functional fit for the target. \
Answer with its id, or null if no candidate fits better than the current node.\n\
Return the JSON value inside <solution></solution>.\n";

const DRIFT: &str = "Rate how far the new features drift in meaning from the old ones, \
from 0 (same purpose) to 1 (unrelated).\n\
Return the number inside <solution></solution>.\n";

pub const FORMAT_RETRY: &str =
    "\nYour previous answer could not be parsed. Reply again with only the <solution> block in the required format.\n";

fn phrases_json(p: &[FeaturePhrase]) -> String {
    serde_json::to_string(p).unwrap_or_default()
}

/// One entity as it appears in a semantic parsing payload.
pub fn render_parse_item(req: &FeatureRequest) -> String {
    format!("### {} ({})\n```python\n{}\n```\n", req.key, req.entity.kind, req.source)
}

pub fn parse_overhead(repo_name: &str, repo_info: &str) -> String {
    render_parse(repo_name, repo_info, &[])
}

pub fn render_parse(repo_name: &str, repo_info: &str, batch: &[FeatureRequest]) -> String {
    let mut out = SEMANTIC_PARSING.replace("{repo_name}", repo_name).replace("{repo_info}", repo_info);
    out.push_str("\n## Functions\n");
    for r in batch {
        out.push_str(&render_parse_item(r));
    }
    out
}

pub fn render_discover(summaries: &[(String, Vec<FeaturePhrase>)]) -> String {
    let mut out = DOMAIN_DISCOVERY.to_string();
    out.push_str("\n## Repository Files\n");
    for (path, phrases) in summaries {
        out.push_str(&format!("- {path}: {}\n", phrases_json(phrases)));
    }
    out
}

pub fn render_assign(groups: &[GroupSummary], areas: &[String]) -> String {
    let mut out = HIERARCHY_CONSTRUCTION.to_string();
    out.push_str("\n<functional_areas>\n");
    out.push_str(&serde_json::to_string(areas).unwrap_or_default());
    out.push_str("\n</functional_areas>\n<parsed_folder_tree>\n");
    let tree: serde_json::Map<String, serde_json::Value> = groups
        .iter()
        .map(|g| (g.id.clone(), serde_json::json!(g.phrases)))
        .collect();
    out.push_str(&serde_json::to_string_pretty(&tree).unwrap_or_default());
    out.push_str("\n</parsed_folder_tree>\n");
    out
}

pub fn render_summarize(path: &str, child_phrases: &[Vec<FeaturePhrase>]) -> String {
    let mut out = SUMMARIZE.to_string();
    out.push_str(&format!("File: {path}\n"));
    for p in child_phrases {
        out.push_str(&format!("- {}\n", phrases_json(p)));
    }
    out
}

pub fn render_route(candidates: &[(String, Vec<FeaturePhrase>)], target: &[FeaturePhrase]) -> String {
    let mut out = ROUTE.to_string();
    out.push_str(&format!("Target: {}\nCandidates:\n", phrases_json(target)));
    for (id, p) in candidates {
        out.push_str(&format!("- {id}: {}\n", phrases_json(p)));
    }
    out
}

pub fn render_drift(old: &[FeaturePhrase], new: &[FeaturePhrase]) -> String {
    format!("{DRIFT}Old: {}\nNew: {}\n", phrases_json(old), phrases_json(new))
}

/// Body of the first `<solution>...</solution>` block, trimmed.
pub fn extract_solution(text: &str) -> Option<&str> {
    let start = text.find("<solution>")? + "<solution>".len();
    let end = text[start..].find("</solution>")? + start;
    Some(text[start..end].trim())
}

pub fn wrap_solution(body: &str) -> String {
    format!("<solution>\n{body}\n</solution>")
}
