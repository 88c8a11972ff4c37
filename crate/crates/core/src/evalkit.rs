//! Localization scoring: key canonicalization, Acc@k, precision and recall,
//! and a harness that scores a prediction file against a gold file.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    File,
    Function,
}

impl Granularity {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "file" => Some(Self::File),
            "function" => Some(Self::Function),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("empty path")]
    EmptyPath,
    #[error("`{0}`: function granularity needs an entity name")]
    MissingEntity(String),
    #[error("no instances to score")]
    NoInstances,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

/// Canonical key of a location. Function keys drop one trailing
/// `.__init__`, so a constructor counts as its class.
pub fn canonicalize(path: &str, entity: Option<&str>, granularity: Granularity) -> Result<String, EvalError> {
    if path.is_empty() {
        return Err(EvalError::EmptyPath);
    }
    match granularity {
        Granularity::File => Ok(path.to_string()),
        Granularity::Function => {
            let e = entity.filter(|e| !e.is_empty()).ok_or_else(|| EvalError::MissingEntity(path.to_string()))?;
            let e = e.strip_suffix(".__init__").filter(|s| !s.is_empty()).unwrap_or(e);
            Ok(format!("{path}:{e}"))
        }
    }
}

/// Canonicalize a `path` or `path:Entity` string.
pub fn canonicalize_key(raw: &str, granularity: Granularity) -> Result<String, EvalError> {
    let (path, entity) = match raw.split_once(':') {
        Some((p, e)) => (p, Some(e)),
        None => (raw, None),
    };
    match granularity {
        Granularity::File => canonicalize(path, None, granularity),
        Granularity::Function => canonicalize(path, entity, granularity),
    }
}

/// Drop repeated entries, keeping first occurrences in order.
pub fn dedup_ordered(items: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    items.iter().filter(|s| seen.insert(s.as_str())).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalizationInstance {
    pub gold: BTreeSet<String>,
    pub predictions: Vec<String>,
}

impl LocalizationInstance {
    pub fn new<G, P>(gold: G, predictions: P) -> Self
    where
        G: IntoIterator,
        G::Item: Into<String>,
        P: IntoIterator,
        P::Item: Into<String>,
    {
        let preds: Vec<String> = predictions.into_iter().map(Into::into).collect();
        Self { gold: gold.into_iter().map(Into::into).collect(), predictions: dedup_ordered(&preds) }
    }

    pub fn hits(&self) -> Vec<bool> {
        self.predictions.iter().map(|p| self.gold.contains(p)).collect()
    }
}

pub fn acc_at_k(instances: &[LocalizationInstance], k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    if instances.is_empty() {
        return Err(EvalError::NoInstances);
    }
    let hit = instances.iter().filter(|i| i.hits().iter().take(k).any(|h| *h)).count();
    Ok(hit as f64 / instances.len() as f64)
}

/// Mean of hits / |predictions|; an empty prediction list scores 0.
pub fn precision(instances: &[LocalizationInstance]) -> f64 {
    mean(instances, |i| {
        let n = i.predictions.len();
        if n == 0 {
            0.0
        } else {
            i.hits().iter().filter(|h| **h).count() as f64 / n as f64
        }
    })
}

/// Mean of hits / |gold|; an empty gold set scores 0.
pub fn recall(instances: &[LocalizationInstance]) -> f64 {
    mean(instances, |i| {
        let m = i.gold.len();
        if m == 0 {
            0.0
        } else {
            i.hits().iter().filter(|h| **h).count() as f64 / m as f64
        }
    })
}

fn mean(instances: &[LocalizationInstance], f: impl Fn(&LocalizationInstance) -> f64) -> f64 {
    if instances.is_empty() {
        return 0.0;
    }
    instances.iter().map(f).sum::<f64>() / instances.len() as f64
}

/// One record of a gold or prediction file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub instance_id: String,
    #[serde(default)]
    pub gold: Vec<String>,
    #[serde(default)]
    pub predictions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    #[serde(rename = "acc@1")]
    pub acc_at_1: f64,
    #[serde(rename = "acc@5")]
    pub acc_at_5: f64,
    pub precision: f64,
    pub recall: f64,
    pub n: usize,
    /// Instance ids present only in the prediction file; not scored.
    pub unmatched: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScoreOptions {
    /// Truncate prediction lists to this many entries before scoring.
    pub top_n: Option<usize>,
}

/// Score aligned records. Gold instances without predictions score as empty
/// prediction lists; prediction-only instances are excluded and listed.
pub fn score_records(
    gold: &[Record],
    pred: &[Record],
    granularity: Granularity,
    options: ScoreOptions,
) -> Result<ScoreReport, EvalError> {
    let mut warnings = Vec::new();
    let canon = |raw: &[String], what: &str, id: &str, warnings: &mut Vec<String>| -> Vec<String> {
        raw.iter()
            .filter_map(|r| match canonicalize_key(r, granularity) {
                Ok(k) => Some(k),
                Err(e) => {
                    warnings.push(format!("{id}: {what} entry `{r}` skipped: {e}"));
                    None
                }
            })
            .collect()
    };
    let mut preds: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for p in pred {
        if preds.contains_key(p.instance_id.as_str()) {
            warnings.push(format!("{}: duplicate prediction record; first one kept", p.instance_id));
            continue;
        }
        let list = canon(&p.predictions, "prediction", &p.instance_id, &mut warnings);
        preds.insert(&p.instance_id, list);
    }
    let mut instances = Vec::new();
    let mut seen = BTreeSet::new();
    for g in gold {
        if !seen.insert(g.instance_id.as_str()) {
            warnings.push(format!("{}: duplicate gold record; first one kept", g.instance_id));
            continue;
        }
        let gold_keys = canon(&g.gold, "gold", &g.instance_id, &mut warnings);
        let mut p = match preds.get(g.instance_id.as_str()) {
            Some(p) => dedup_ordered(p),
            None => {
                warnings.push(format!("{}: no predictions", g.instance_id));
                Vec::new()
            }
        };
        if let Some(n) = options.top_n {
            p.truncate(n);
        }
        instances.push(LocalizationInstance::new(gold_keys, p));
    }
    let unmatched: Vec<String> = preds.keys().filter(|k| !seen.contains(*k)).map(|k| k.to_string()).collect();
    if !unmatched.is_empty() {
        warnings.push(format!("{} prediction instance(s) have no gold record and were excluded", unmatched.len()));
    }
    if instances.is_empty() {
        return Err(EvalError::NoInstances);
    }
    Ok(ScoreReport {
        acc_at_1: acc_at_k(&instances, 1)?,
        acc_at_5: acc_at_k(&instances, 5)?,
        precision: precision(&instances),
        recall: recall(&instances),
        n: instances.len(),
        unmatched,
        warnings,
    })
}

fn read_records(path: &Path) -> Result<Vec<Record>, EvalError> {
    let file_err = |message: String| EvalError::File { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))
}

pub fn score_run(
    gold_file: &Path,
    pred_file: &Path,
    granularity: Granularity,
    options: ScoreOptions,
) -> Result<ScoreReport, EvalError> {
    let gold = read_records(gold_file)?;
    let pred = read_records(pred_file)?;
    score_records(&gold, &pred, granularity, options)
}
