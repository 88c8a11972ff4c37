//! Replaying a commit range by shelling out to `git`.

use std::path::Path;
use std::process::Command;

use crate::code_index::{scan_repository, EntitySet, ScanOptions};
use crate::graph::RpgGraph;
use crate::provider::SemanticProvider;

use super::{apply_commit, EvolutionConfig, UpdateError, UpdateReport};

fn git(repo: &Path, args: &[&str], index: Option<&Path>) -> Result<String, UpdateError> {
    let mut cmd = Command::new("git");
    cmd.arg("-C").arg(repo).args(args);
    if let Some(i) = index {
        cmd.env("GIT_INDEX_FILE", i);
    }
    let out = cmd.output().map_err(|e| UpdateError::Git(format!("cannot run git: {e}")))?;
    if !out.status.success() {
        return Err(UpdateError::Git(format!(
            "git {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    String::from_utf8(out.stdout).map_err(|e| UpdateError::Git(e.to_string()))
}

/// `(parent, commit)` pairs along the first-parent chain of `range`
/// (`A..B`), oldest first.
pub fn first_parent_pairs(repo: &Path, range: &str) -> Result<Vec<(String, String)>, UpdateError> {
    let list = git(repo, &["rev-list", "--first-parent", "--reverse", range], None)?;
    let mut pairs = Vec::new();
    for c in list.lines().filter(|l| !l.is_empty()) {
        let parent = git(repo, &["rev-parse", &format!("{c}^")], None)?;
        pairs.push((parent.trim().to_string(), c.to_string()));
    }
    Ok(pairs)
}

pub fn diff(repo: &Path, from: &str, to: &str) -> Result<String, UpdateError> {
    git(repo, &["diff", "--no-color", "--no-ext-diff", "--no-renames", from, to], None)
}

/// Materialize `rev` into `dest` without touching the repository's index or
/// working tree.
pub fn export_tree(repo: &Path, rev: &str, dest: &Path) -> Result<(), UpdateError> {
    let tmp = tempfile::tempdir().map_err(|e| UpdateError::Git(e.to_string()))?;
    let index = tmp.path().join("index");
    git(repo, &["read-tree", rev], Some(&index))?;
    let mut prefix = dest.to_string_lossy().into_owned();
    if !prefix.ends_with('/') {
        prefix.push('/');
    }
    git(repo, &["checkout-index", "-a", "-f", &format!("--prefix={prefix}")], Some(&index))?;
    Ok(())
}

/// Scan the Python sources of one revision.
pub fn scan_revision(repo: &Path, rev: &str, options: &ScanOptions) -> Result<EntitySet, UpdateError> {
    let dir = tempfile::tempdir().map_err(|e| UpdateError::Git(e.to_string()))?;
    export_tree(repo, rev, dir.path())?;
    Ok(scan_repository(dir.path(), options)?)
}

/// Apply every first-parent commit of `range` in order, stopping at the
/// first commit that fails.
pub fn replay_range(
    g: &RpgGraph,
    repo: &Path,
    range: &str,
    provider: &dyn SemanticProvider,
    config: &EvolutionConfig,
    options: &ScanOptions,
) -> Result<(RpgGraph, Vec<UpdateReport>), UpdateError> {
    let pairs = first_parent_pairs(repo, range)?;
    let mut graph = g.clone();
    let mut reports = Vec::new();
    let mut cached: Option<(String, EntitySet)> = None;
    for (parent, commit) in pairs {
        let before = match cached.take() {
            Some((rev, es)) if rev == parent => es,
            _ => scan_revision(repo, &parent, options)?,
        };
        let after = scan_revision(repo, &commit, options)?;
        let text = diff(repo, &parent, &commit)?;
        let (next, report) = apply_commit(&graph, &text, &before, &after, provider, config)?;
        graph = next;
        reports.push(report);
        cached = Some((commit, after));
    }
    Ok((graph, reports))
}
