//! Top-level feature groups.
//!
//! Files are grouped by their first directory below the longest directory
//! prefix shared by all files, so a repository whose code lives under one
//! package directory (`pkg/...`) still splits into meaningful groups. Files
//! directly inside that shared prefix form the group [`ROOT_GROUP`].

use std::collections::BTreeMap;

use crate::provider::pascal_case;

pub const ROOT_GROUP: &str = "_root";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Grouping {
    /// Shared directory prefix (no trailing slash; empty when none).
    pub prefix: String,
    pub groups: BTreeMap<String, Vec<String>>,
}

impl Grouping {
    /// PascalCase display label of a group.
    pub fn label(&self, id: &str) -> String {
        label_with_prefix(id, &self.prefix)
    }
}

fn label_with_prefix(id: &str, prefix: &str) -> String {
    let base = if id == ROOT_GROUP { prefix.rsplit('/').next().unwrap_or("") } else { id };
    let label = pascal_case(base);
    if label.is_empty() {
        "Root".to_string()
    } else {
        label
    }
}

/// Label of a group given only its members.
pub fn label_for_members(id: &str, members: &[String]) -> String {
    let prefix = if id == ROOT_GROUP {
        members.first().map(|m| crate::graph::dir_of(m).to_string()).unwrap_or_default()
    } else {
        String::new()
    };
    label_with_prefix(id, &prefix)
}

/// Longest directory prefix shared by all paths, segment-wise.
pub fn common_dir_prefix<S: AsRef<str>>(paths: &[S]) -> String {
    let mut common: Option<Vec<&str>> = None;
    for p in paths {
        let mut segs: Vec<&str> = p.as_ref().split('/').collect();
        segs.pop();
        common = Some(match common {
            None => segs,
            Some(c) => c.iter().zip(&segs).take_while(|(a, b)| a == b).map(|(a, _)| *a).collect(),
        });
    }
    common.unwrap_or_default().join("/")
}

pub fn group_of(path: &str, prefix: &str) -> String {
    let rest = if prefix.is_empty() {
        path
    } else {
        path.strip_prefix(prefix).and_then(|r| r.strip_prefix('/')).unwrap_or(path)
    };
    match rest.split_once('/') {
        Some((first, _)) => first.to_string(),
        None => ROOT_GROUP.to_string(),
    }
}

pub fn group_files<S: AsRef<str>>(paths: &[S]) -> Grouping {
    let prefix = common_dir_prefix(paths);
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for p in paths {
        groups.entry(group_of(p.as_ref(), &prefix)).or_default().push(p.as_ref().to_string());
    }
    for members in groups.values_mut() {
        members.sort();
    }
    Grouping { prefix, groups }
}
