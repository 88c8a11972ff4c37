use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{code_entity_name, entity_type, Snapshot, StringList, ToolError, ToolOutput, PREVIEW_LINES};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchParams {
    #[serde(default)]
    pub code_entities: Option<StringList>,
    #[serde(default)]
    pub feature_entities: Option<StringList>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchedCode {
    pub code_entity: String,
    pub entity_type: String,
    pub file_path: String,
    pub start_line: u32,
    pub end_line: u32,
    pub features: Vec<String>,
    pub feature_path: String,
    pub preview: String,
    pub preview_truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchedFeature {
    pub feature_path: String,
    pub entity_type: String,
    pub level: String,
    pub features: Vec<String>,
    pub grounded_scopes: Vec<String>,
    pub children: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchResult {
    pub code: Vec<FetchedCode>,
    pub features: Vec<FetchedFeature>,
}

pub fn fetch_node(snap: &Snapshot, p: &FetchParams) -> Result<ToolOutput<FetchResult>, ToolError> {
    let code = p.code_entities.as_ref().map(|l| l.0.as_slice()).unwrap_or(&[]);
    let feats = p.feature_entities.as_ref().map(|l| l.0.as_slice()).unwrap_or(&[]);
    if code.is_empty() && feats.is_empty() {
        return Err(ToolError::new("one of code_entities or feature_entities must be non-empty"));
    }
    let g = &snap.graph;
    let mut warnings = Vec::new();
    let mut out = FetchResult::default();
    let mut seen = BTreeSet::new();
    for c in code {
        let n = match snap.resolve_code_entity(c) {
            Ok(n) => n,
            Err(e) => {
                warnings.push(format!("code entity ignored: {e}"));
                continue;
            }
        };
        if !seen.insert(n.id.clone()) {
            continue;
        }
        let path = n.metadata.path.clone().unwrap_or_default();
        let span = n.metadata.span.unwrap_or_default();
        let shown = span.start + (span.len().min(PREVIEW_LINES as u32)).saturating_sub(1);
        let preview = snap.lines(&path, span.start, shown);
        if preview.is_none() {
            warnings.push(format!("source of `{path}` is unavailable; preview omitted"));
        }
        out.code.push(FetchedCode {
            code_entity: code_entity_name(n),
            entity_type: entity_type(n).to_string(),
            file_path: path,
            start_line: span.start,
            end_line: span.end,
            features: n.feature.iter().map(|f| f.as_str().to_string()).collect(),
            feature_path: g.feature_path(&n.id),
            preview: preview.unwrap_or_default(),
            preview_truncated: span.len() as usize > PREVIEW_LINES,
        });
    }
    for f in feats {
        let n = match snap.resolve_feature_entity(f) {
            Ok(n) => n,
            Err(e) => {
                warnings.push(format!("feature entity ignored: {e}"));
                continue;
            }
        };
        if !seen.insert(n.id.clone()) {
            continue;
        }
        let children = g
            .children(&n.id)
            .filter_map(|c| g.node(c))
            .map(|c| if c.is_high() { g.feature_path(&c.id) } else { code_entity_name(c) })
            .collect();
        out.features.push(FetchedFeature {
            feature_path: g.feature_path(&n.id),
            entity_type: "feature".into(),
            level: n.level.as_str().to_string(),
            features: n.feature.iter().map(|f| f.as_str().to_string()).collect(),
            grounded_scopes: n.metadata.grounded_scopes.iter().flatten().cloned().collect(),
            children,
        });
    }
    Ok(ToolOutput { value: out, warnings })
}
