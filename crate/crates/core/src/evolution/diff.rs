//! Unified diffs: parsing, application, and mapping hunks to entity events.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::code_index::{EntityKey, EntityKind, EntityRef, EntitySet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HunkLine {
    Context(String),
    Removed(String),
    Added(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: u32,
    pub old_len: u32,
    pub new_start: u32,
    pub new_len: u32,
    pub lines: Vec<HunkLine>,
}

impl Hunk {
    /// Old-side line numbers of removed lines.
    pub fn removed_lines(&self) -> Vec<u32> {
        self.walk().0
    }

    /// New-side line numbers of added lines.
    pub fn added_lines(&self) -> Vec<u32> {
        self.walk().1
    }

    fn walk(&self) -> (Vec<u32>, Vec<u32>) {
        let (mut old, mut new) = (self.old_start, self.new_start);
        let (mut removed, mut added) = (Vec::new(), Vec::new());
        for l in &self.lines {
            match l {
                HunkLine::Context(_) => {
                    old += 1;
                    new += 1;
                }
                HunkLine::Removed(_) => {
                    removed.push(old);
                    old += 1;
                }
                HunkLine::Added(_) => {
                    added.push(new);
                    new += 1;
                }
            }
        }
        (removed, added)
    }
}

/// One file section of a diff. `None` stands for `/dev/null`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileDiff {
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub hunks: Vec<Hunk>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("diff line {line}: {message}")]
pub struct DiffError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> DiffError {
    DiffError { line, message: message.into() }
}

fn header_path(raw: &str) -> Option<String> {
    let raw = raw.split('\t').next().unwrap_or(raw).trim_end();
    let raw = raw.trim_matches('"');
    if raw == "/dev/null" {
        return None;
    }
    let stripped = raw.strip_prefix("a/").or_else(|| raw.strip_prefix("b/")).unwrap_or(raw);
    Some(stripped.to_string())
}

fn parse_range(s: &str) -> Option<(u32, u32)> {
    match s.split_once(',') {
        Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
        None => Some((s.parse().ok()?, 1)),
    }
}

fn parse_hunk_header(line: &str) -> Option<(u32, u32, u32, u32)> {
    let rest = line.strip_prefix("@@ -")?;
    let (ranges, _) = rest.split_once(" @@")?;
    let (old, new) = ranges.split_once(" +")?;
    let (os, ol) = parse_range(old)?;
    let (ns, nl) = parse_range(new)?;
    Some((os, ol, ns, nl))
}

/// Parse a unified diff, with or without git extended headers.
pub fn parse_unified_diff(text: &str) -> Result<Vec<FileDiff>, DiffError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut out: Vec<FileDiff> = Vec::new();
    let mut i = 0;
    // Paths announced by `diff --git` for sections without ---/+++ headers
    // (pure mode changes, binary files, empty new files).
    let mut pending: Option<FileDiff> = None;
    while i < lines.len() {
        let line = lines[i];
        if let Some(rest) = line.strip_prefix("diff --git ") {
            if let Some(p) = pending.take() {
                out.push(p);
            }
            let (a, b) = match rest.split_once(" b/") {
                Some((a, b)) => (header_path(a), Some(b.to_string())),
                None => (None, None),
            };
            pending = Some(FileDiff { old_path: a, new_path: b, hunks: Vec::new() });
            i += 1;
            continue;
        }
        if line.starts_with("new file mode") {
            if let Some(p) = pending.as_mut() {
                p.old_path = None;
            }
            i += 1;
            continue;
        }
        if line.starts_with("deleted file mode") {
            if let Some(p) = pending.as_mut() {
                p.new_path = None;
            }
            i += 1;
            continue;
        }
        if let Some(old) = line.strip_prefix("--- ") {
            let new = lines
                .get(i + 1)
                .and_then(|l| l.strip_prefix("+++ "))
                .ok_or_else(|| err(i + 2, "expected `+++` header"))?;
            pending = None;
            let mut fd = FileDiff { old_path: header_path(old), new_path: header_path(new), hunks: Vec::new() };
            i += 2;
            while i < lines.len() && lines[i].starts_with("@@") {
                let (os, ol, ns, nl) =
                    parse_hunk_header(lines[i]).ok_or_else(|| err(i + 1, format!("bad hunk header `{}`", lines[i])))?;
                let header_line = i + 1;
                i += 1;
                let mut hunk = Hunk { old_start: os, old_len: ol, new_start: ns, new_len: nl, lines: Vec::new() };
                let (mut seen_old, mut seen_new) = (0u32, 0u32);
                while (seen_old < ol || seen_new < nl) && i < lines.len() {
                    let l = lines[i];
                    if l.starts_with('\\') {
                        i += 1;
                        continue;
                    }
                    let entry = match l.chars().next() {
                        Some('+') => {
                            seen_new += 1;
                            HunkLine::Added(l[1..].to_string())
                        }
                        Some('-') => {
                            seen_old += 1;
                            HunkLine::Removed(l[1..].to_string())
                        }
                        Some(' ') => {
                            seen_old += 1;
                            seen_new += 1;
                            HunkLine::Context(l[1..].to_string())
                        }
                        None => {
                            seen_old += 1;
                            seen_new += 1;
                            HunkLine::Context(String::new())
                        }
                        Some(_) => return Err(err(i + 1, format!("unexpected line in hunk starting at line {header_line}"))),
                    };
                    hunk.lines.push(entry);
                    i += 1;
                }
                if seen_old != ol || seen_new != nl {
                    return Err(err(header_line, "hunk is shorter than its header says"));
                }
                while i < lines.len() && lines[i].starts_with('\\') {
                    i += 1;
                }
                fd.hunks.push(hunk);
            }
            out.push(fd);
            continue;
        }
        if line.starts_with("@@") {
            return Err(err(i + 1, "hunk without file header"));
        }
        i += 1;
    }
    if let Some(p) = pending.take() {
        out.push(p);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatchError {
    #[error("{path}: hunk at old line {line} does not match")]
    Mismatch { path: String, line: u32 },
    #[error("{0}: patched file is missing")]
    Missing(String),
}

/// Apply parsed diffs to an in-memory tree of files. Context and removed
/// lines must match exactly.
pub fn apply_patch(
    files: &BTreeMap<String, String>,
    diffs: &[FileDiff],
) -> Result<BTreeMap<String, String>, PatchError> {
    let mut out = files.clone();
    for fd in diffs {
        let old_text = match &fd.old_path {
            Some(p) => Some(out.remove(p).ok_or_else(|| PatchError::Missing(p.clone()))?),
            None => None,
        };
        let Some(new_path) = &fd.new_path else { continue };
        let old_lines: Vec<&str> = old_text.as_deref().map(|t| t.lines().collect()).unwrap_or_default();
        let mut result: Vec<String> = Vec::new();
        let mut cursor = 0usize;
        for h in &fd.hunks {
            let start = if h.old_len == 0 { h.old_start as usize } else { h.old_start as usize - 1 };
            if start < cursor || start > old_lines.len() {
                return Err(PatchError::Mismatch { path: new_path.clone(), line: h.old_start });
            }
            result.extend(old_lines[cursor..start].iter().map(|s| s.to_string()));
            cursor = start;
            for l in &h.lines {
                match l {
                    HunkLine::Context(s) | HunkLine::Removed(s) => {
                        if old_lines.get(cursor) != Some(&s.as_str()) {
                            return Err(PatchError::Mismatch { path: new_path.clone(), line: h.old_start });
                        }
                        if matches!(l, HunkLine::Context(_)) {
                            result.push(s.clone());
                        }
                        cursor += 1;
                    }
                    HunkLine::Added(s) => result.push(s.clone()),
                }
            }
        }
        result.extend(old_lines[cursor.min(old_lines.len())..].iter().map(|s| s.to_string()));
        let mut text = result.join("\n");
        if !result.is_empty() {
            text.push('\n');
        }
        out.insert(new_path.clone(), text);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Delete,
    Modify,
    Insert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeEvent {
    pub kind: ChangeKind,
    /// Pre-state for deletes, post-state otherwise.
    pub entity: EntityRef,
    pub new_source: Option<String>,
}

impl ChangeEvent {
    fn sort_key(&self) -> (ChangeKind, &str, usize, Option<&str>, EntityKind) {
        (self.kind, &self.entity.path, self.entity.depth(), self.entity.qualified_name.as_deref(), self.entity.kind)
    }
}

/// Entity-level change events for a diff between two scanned revisions.
pub fn parse_diff(diff_text: &str, before: &EntitySet, after: &EntitySet) -> Result<Vec<ChangeEvent>, DiffError> {
    let diffs = parse_unified_diff(diff_text)?;
    Ok(events_for(&diffs, before, after))
}

pub fn events_for(diffs: &[FileDiff], before: &EntitySet, after: &EntitySet) -> Vec<ChangeEvent> {
    let mut deleted: BTreeSet<EntityKey> = BTreeSet::new();
    let mut inserted: BTreeSet<EntityKey> = BTreeSet::new();
    let mut modified: BTreeSet<EntityKey> = BTreeSet::new();

    let keys_of = |es: &EntitySet, path: &str| -> BTreeSet<EntityKey> { es.entities_in(path).map(|e| e.key()).collect() };

    for fd in diffs {
        let old = fd.old_path.as_deref().filter(|p| before.file(p).is_some());
        let new = fd.new_path.as_deref().filter(|p| after.file(p).is_some());
        match (old, new) {
            (None, None) => {}
            (Some(o), None) => deleted.extend(keys_of(before, o)),
            (None, Some(n)) => inserted.extend(keys_of(after, n)),
            (Some(o), Some(n)) if o != n => {
                deleted.extend(keys_of(before, o));
                inserted.extend(keys_of(after, n));
            }
            (Some(p), Some(_)) => {
                let kb = keys_of(before, p);
                let ka = keys_of(after, p);
                deleted.extend(kb.difference(&ka).cloned());
                inserted.extend(ka.difference(&kb).cloned());
                let mut touched = BTreeSet::new();
                for h in &fd.hunks {
                    for l in h.removed_lines() {
                        if let Ok(e) = before.entity_at(p, l) {
                            touched.insert(e.key());
                        }
                    }
                    for l in h.added_lines() {
                        if let Ok(e) = after.entity_at(p, l) {
                            touched.insert(e.key());
                        }
                    }
                }
                modified.extend(touched.into_iter().filter(|k| kb.contains(k) && ka.contains(k)));
            }
        }
    }

    let mut events: Vec<ChangeEvent> = Vec::new();
    for k in deleted {
        if let Some(e) = before.get(&k) {
            events.push(ChangeEvent { kind: ChangeKind::Delete, entity: e, new_source: None });
        }
    }
    for (kind, keys) in [(ChangeKind::Modify, modified), (ChangeKind::Insert, inserted)] {
        for k in keys {
            if let Some(e) = after.get(&k) {
                let src = after.snippet(&e);
                events.push(ChangeEvent { kind, entity: e, new_source: src });
            }
        }
    }
    events.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    events
}
