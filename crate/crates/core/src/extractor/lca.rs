//! Directory scopes from a prefix trie.
//!
//! Starting at the virtual root, the walk follows chains of single-child,
//! non-terminal trie nodes. The first node that is terminal or branches is
//! emitted as one scope when it sits at least `min_depth` segments deep.
//! Otherwise the walk descends one level at a time below it, emitting each
//! node that reaches `min_depth` or is itself an input. A terminal root
//! (files at the repository root) can only be covered by the empty scope.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedScopes {
    pub scopes: BTreeSet<String>,
}

impl GroundedScopes {
    pub fn is_antichain(&self) -> bool {
        let list: Vec<&String> = self.scopes.iter().collect();
        list.iter().enumerate().all(|(i, a)| {
            list.iter().skip(i + 1).all(|b| {
                !crate::graph::scope_covers(a, b) && !crate::graph::scope_covers(b, a)
            })
        })
    }

    pub fn covers(&self, dir: &str) -> bool {
        self.scopes.iter().any(|s| crate::graph::scope_covers(s, dir))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LcaError {
    #[error("`{0}` is absolute")]
    Absolute(String),
    #[error("`{0}` is not a normalized relative path")]
    NotNormalized(String),
}

#[derive(Default)]
struct TrieNode {
    children: BTreeMap<String, TrieNode>,
    terminal: bool,
}

fn check(path: &str) -> Result<(), LcaError> {
    if path.starts_with('/') || path.contains('\\') {
        return Err(LcaError::Absolute(path.to_string()));
    }
    if path.is_empty() {
        return Ok(());
    }
    if path.split('/').any(|s| s.is_empty() || s == "." || s == "..") {
        return Err(LcaError::NotNormalized(path.to_string()));
    }
    Ok(())
}

/// Minimal covering antichain of directory scopes for `paths`.
pub fn compute_lca<I, S>(paths: I, min_depth: usize) -> Result<GroundedScopes, LcaError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut root = TrieNode::default();
    let mut any = false;
    for p in paths {
        let p = p.as_ref();
        check(p)?;
        any = true;
        let mut node = &mut root;
        if !p.is_empty() {
            for seg in p.split('/') {
                node = node.children.entry(seg.to_string()).or_default();
            }
        }
        node.terminal = true;
    }
    let mut out = GroundedScopes::default();
    if any {
        let mut prefix = Vec::new();
        resolve(&root, &mut prefix, false, min_depth, &mut out.scopes);
    }
    Ok(out)
}

fn resolve<'a>(
    node: &'a TrieNode,
    prefix: &mut Vec<&'a str>,
    forced: bool,
    min_depth: usize,
    out: &mut BTreeSet<String>,
) {
    if forced {
        if prefix.len() >= min_depth || node.terminal {
            out.insert(prefix.join("/"));
        } else {
            for (seg, child) in &node.children {
                prefix.push(seg);
                resolve(child, prefix, true, min_depth, out);
                prefix.pop();
            }
        }
        return;
    }
    let base = prefix.len();
    let mut cur = node;
    while !cur.terminal && cur.children.len() == 1 {
        let (seg, child) = cur.children.iter().next().expect("one child");
        prefix.push(seg);
        cur = child;
    }
    if prefix.len() >= min_depth || cur.terminal {
        out.insert(prefix.join("/"));
    } else {
        for (seg, child) in &cur.children {
            prefix.push(seg);
            resolve(child, prefix, true, min_depth, out);
            prefix.pop();
        }
    }
    prefix.truncate(base);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lca(paths: &[&str]) -> Vec<String> {
        compute_lca(paths, 1).unwrap().scopes.into_iter().collect()
    }

    #[test]
    fn examples() {
        assert_eq!(lca(&["a/b/c", "a/b/d"]), ["a/b"]);
        assert_eq!(lca(&["a/b"]), ["a/b"]);
        assert_eq!(lca(&["x/1", "y/2"]), ["x", "y"]);
        assert!(lca(&[]).is_empty());
    }

    #[test]
    fn terminal_stops_the_chain() {
        assert_eq!(lca(&["a", "a/b/c"]), ["a"]);
        assert_eq!(lca(&["", "a/b"]), [""]);
        assert_eq!(lca(&["a/b", "a/b"]), ["a/b"]);
    }

    #[test]
    fn deeper_minimum() {
        let s: Vec<String> = compute_lca(["a/b/c", "a/d/e"], 2).unwrap().scopes.into_iter().collect();
        assert_eq!(s, ["a/b", "a/d"]);
        let s: Vec<String> = compute_lca(["x/1", "y/2/z"], 2).unwrap().scopes.into_iter().collect();
        assert_eq!(s, ["x/1", "y/2"]);
        let s: Vec<String> = compute_lca(["a", "x/y/z"], 2).unwrap().scopes.into_iter().collect();
        assert_eq!(s, ["a", "x/y"]);
    }

    #[test]
    fn rejects_bad_paths() {
        assert!(matches!(compute_lca(["/abs"], 1), Err(LcaError::Absolute(_))));
        assert!(matches!(compute_lca(["a/../b"], 1), Err(LcaError::NotNormalized(_))));
        assert!(matches!(compute_lca(["a//b"], 1), Err(LcaError::NotNormalized(_))));
    }
}
