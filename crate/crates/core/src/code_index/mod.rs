//! Source scanning: code entities with positions and static dependency edges.
//!
//! [`scan_repository`] walks a directory tree, parses every matching Python
//! file and records files, classes, functions and methods together with the
//! `contains` edges that mirror syntactic nesting. [`extract_dependencies`]
//! then resolves imports, calls, base classes and attribute compositions to
//! in-repo entities using single-hop lexical lookup.

mod python;
mod resolve;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Component, Path};
use std::sync::Arc;

use globset::{Glob, GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use python::{ImportStmt, RefKind, Reference};
pub use resolve::{edge_triples, extract_dependencies, extract_dependencies_for, module_name_of, DependencyReport};
pub(crate) use resolve::referenced_modules;

/// What kind of code entity a reference points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Directory,
    File,
    Class,
    Function,
    Method,
}

impl EntityKind {
    pub const ALL: [EntityKind; 5] = [
        EntityKind::Directory,
        EntityKind::File,
        EntityKind::Class,
        EntityKind::Function,
        EntityKind::Method,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Directory => "directory",
            EntityKind::File => "file",
            EntityKind::Class => "class",
            EntityKind::Function => "function",
            EntityKind::Method => "method",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// 1-based inclusive line range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: u32,
    pub end: u32,
}

impl Span {
    pub fn new(start: u32, end: u32) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn contains_line(&self, line: u32) -> bool {
        self.start <= line && line <= self.end
    }

    pub fn len(&self) -> u32 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn union(&self, other: &Span) -> Span {
        Span { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

/// Identity of an entity independent of its position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityKey {
    pub path: String,
    pub qualified_name: Option<String>,
    pub kind: EntityKind,
}

impl EntityKey {
    /// `path` for files, `path:Qualified.name` otherwise.
    pub fn display_name(&self) -> String {
        match &self.qualified_name {
            Some(q) => format!("{}:{}", self.path, q),
            None => self.path.clone(),
        }
    }
}

/// A located code entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityRef {
    pub path: String,
    pub qualified_name: Option<String>,
    pub kind: EntityKind,
    pub span: Span,
}

impl EntityRef {
    pub fn file(path: impl Into<String>, span: Span) -> Self {
        Self { path: path.into(), qualified_name: None, kind: EntityKind::File, span }
    }

    pub fn key(&self) -> EntityKey {
        EntityKey {
            path: self.path.clone(),
            qualified_name: self.qualified_name.clone(),
            kind: self.kind,
        }
    }

    pub fn display_name(&self) -> String {
        match &self.qualified_name {
            Some(q) => format!("{}:{}", self.path, q),
            None => self.path.clone(),
        }
    }

    /// Last dotted segment of the qualified name, or the file name.
    pub fn short_name(&self) -> &str {
        match &self.qualified_name {
            Some(q) => q.rsplit('.').next().unwrap_or(q),
            None => self.path.rsplit('/').next().unwrap_or(&self.path),
        }
    }

    /// Nesting depth inside the file: 0 for the file itself.
    pub fn depth(&self) -> usize {
        self.qualified_name.as_ref().map_or(0, |q| q.split('.').count())
    }
}

/// Relationship between two entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepKind {
    Composes,
    Contains,
    Inherits,
    Invokes,
    Imports,
}

impl DepKind {
    pub const ALL: [DepKind; 5] =
        [DepKind::Composes, DepKind::Contains, DepKind::Inherits, DepKind::Invokes, DepKind::Imports];

    pub fn as_str(self) -> &'static str {
        match self {
            DepKind::Composes => "composes",
            DepKind::Contains => "contains",
            DepKind::Inherits => "inherits",
            DepKind::Invokes => "invokes",
            DepKind::Imports => "imports",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for DepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DepEdge {
    pub src: EntityRef,
    pub dst: EntityRef,
    pub kind: DepKind,
}

impl DepEdge {
    /// Position-free identity, used for sorting and set comparisons.
    pub fn key(&self) -> (EntityKey, EntityKey, DepKind) {
        (self.src.key(), self.dst.key(), self.kind)
    }
}

/// A per-file problem found while scanning or resolving.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub issue: String,
}

/// Write diagnostics as JSON lines.
pub fn write_diagnostics<W: std::io::Write>(
    mut out: W,
    diagnostics: &[Diagnostic],
) -> std::io::Result<()> {
    for d in diagnostics {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Entity as stored per file, with its syntactic parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalEntity {
    pub qualified_name: String,
    pub kind: EntityKind,
    pub span: Span,
    /// Index into the same file's entity list; `None` means the file.
    pub parent: Option<usize>,
    pub docstring: Option<String>,
}

/// Everything known about one scanned file.
#[derive(Debug, Clone)]
pub struct FileRecord {
    pub path: String,
    pub text: Arc<str>,
    pub parse_error: bool,
    pub line_count: u32,
    pub entities: Vec<LocalEntity>,
    pub imports: Vec<ImportStmt>,
    pub references: Vec<Reference>,
}

impl FileRecord {
    pub fn file_ref(&self) -> EntityRef {
        EntityRef::file(self.path.clone(), Span::new(1, self.line_count.max(1)))
    }

    pub fn entity_ref(&self, idx: usize) -> EntityRef {
        let e = &self.entities[idx];
        EntityRef {
            path: self.path.clone(),
            qualified_name: Some(e.qualified_name.clone()),
            kind: e.kind,
            span: e.span,
        }
    }

    /// Owner reference for a local index (`None` is the file).
    pub fn owner_ref(&self, idx: Option<usize>) -> EntityRef {
        match idx {
            Some(i) => self.entity_ref(i),
            None => self.file_ref(),
        }
    }

    pub fn line_range(&self, span: Span) -> String {
        self.text
            .lines()
            .skip(span.start.saturating_sub(1) as usize)
            .take(span.len() as usize)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScanError {
    #[error("repository root `{0}` does not exist or is not a directory")]
    MissingRoot(String),
    #[error("invalid glob `{glob}`: {source}")]
    BadGlob {
        glob: String,
        #[source]
        source: globset::Error,
    },
    #[error("walking `{path}`: {message}")]
    Walk { path: String, message: String },
}

/// Which files a scan picks up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub include_globs: Vec<String>,
    pub exclude_globs: Vec<String>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { include_globs: vec!["**/*.py".into()], exclude_globs: Vec::new() }
    }
}

/// The immutable result of a scan.
#[derive(Debug, Clone, Default)]
pub struct EntitySet {
    entities: Vec<EntityRef>,
    dep_edges: Vec<DepEdge>,
    files: BTreeMap<String, Arc<FileRecord>>,
    diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown path `{0}`")]
pub struct UnknownPath(pub String);

impl EntitySet {
    /// Assemble from per-file records. Entities are ordered by path, then by
    /// span start, with enclosing entities before the ones they contain.
    pub fn from_records(records: Vec<FileRecord>, diagnostics: Vec<Diagnostic>) -> Self {
        let mut files = BTreeMap::new();
        for r in records {
            files.insert(r.path.clone(), Arc::new(r));
        }
        let mut entities = Vec::new();
        let mut dep_edges = Vec::new();
        for rec in files.values() {
            let file_ref = rec.file_ref();
            entities.push(file_ref.clone());
            let mut order: Vec<usize> = (0..rec.entities.len()).collect();
            order.sort_by(|&a, &b| {
                let (ea, eb) = (&rec.entities[a], &rec.entities[b]);
                (ea.span.start, std::cmp::Reverse(ea.span.end), &ea.qualified_name, ea.kind).cmp(&(
                    eb.span.start,
                    std::cmp::Reverse(eb.span.end),
                    &eb.qualified_name,
                    eb.kind,
                ))
            });
            for i in order {
                let child = rec.entity_ref(i);
                let parent = rec.owner_ref(rec.entities[i].parent);
                dep_edges.push(DepEdge { src: parent, dst: child.clone(), kind: DepKind::Contains });
                entities.push(child);
            }
        }
        let mut diagnostics = diagnostics;
        diagnostics.sort_by(|a, b| (&a.path, &a.issue).cmp(&(&b.path, &b.issue)));
        Self { entities, dep_edges, files, diagnostics }
    }

    pub fn entities(&self) -> &[EntityRef] {
        &self.entities
    }

    /// The `contains` edges recorded by the scan.
    pub fn dep_edges(&self) -> &[DepEdge] {
        &self.dep_edges
    }

    pub fn files(&self) -> impl Iterator<Item = &FileRecord> {
        self.files.values().map(|f| f.as_ref())
    }

    pub fn file(&self, path: &str) -> Option<&FileRecord> {
        self.files.get(path).map(|f| f.as_ref())
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn source(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(|f| &*f.text)
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Entities of one file, file entity first.
    pub fn entities_in<'a>(&'a self, path: &'a str) -> impl Iterator<Item = &'a EntityRef> + 'a {
        self.entities.iter().filter(move |e| e.path == path)
    }

    pub fn get(&self, key: &EntityKey) -> Option<EntityRef> {
        let rec = self.file(&key.path)?;
        match (&key.qualified_name, key.kind) {
            (None, EntityKind::File) => Some(rec.file_ref()),
            (Some(q), kind) => rec
                .entities
                .iter()
                .position(|e| &e.qualified_name == q && e.kind == kind)
                .map(|i| rec.entity_ref(i)),
            _ => None,
        }
    }

    /// Syntactic parent (`contains` source) of an entity; `None` for files.
    pub fn parent_of(&self, key: &EntityKey) -> Option<EntityRef> {
        let rec = self.file(&key.path)?;
        let q = key.qualified_name.as_ref()?;
        let idx = rec.entities.iter().position(|e| &e.qualified_name == q && e.kind == key.kind)?;
        Some(rec.owner_ref(rec.entities[idx].parent))
    }

    pub fn docstring(&self, key: &EntityKey) -> Option<&str> {
        let rec = self.file(&key.path)?;
        let q = key.qualified_name.as_ref()?;
        rec.entities
            .iter()
            .find(|e| &e.qualified_name == q && e.kind == key.kind)
            .and_then(|e| e.docstring.as_deref())
    }

    /// Source lines covered by an entity's span.
    pub fn snippet(&self, entity: &EntityRef) -> Option<String> {
        self.file(&entity.path).map(|f| f.line_range(entity.span))
    }

    /// Innermost entity whose span contains `line`, falling back to the file
    /// entity.
    pub fn entity_at(&self, path: &str, line: u32) -> Result<EntityRef, UnknownPath> {
        let rec = self.file(path).ok_or_else(|| UnknownPath(path.to_string()))?;
        let best = rec
            .entities
            .iter()
            .enumerate()
            .filter(|(_, e)| e.span.contains_line(line))
            .min_by_key(|(_, e)| (e.span.len(), std::cmp::Reverse(e.span.start)));
        Ok(match best {
            Some((i, _)) => rec.entity_ref(i),
            None => rec.file_ref(),
        })
    }
}

fn build_globset(globs: &[String]) -> Result<GlobSet, ScanError> {
    let mut b = GlobSetBuilder::new();
    for g in globs {
        let glob = Glob::new(g).map_err(|source| ScanError::BadGlob { glob: g.clone(), source })?;
        b.add(glob);
    }
    b.build().map_err(|source| ScanError::BadGlob { glob: globs.join(","), source })
}

/// Repo-relative path with `/` separators, or `None` if `path` escapes `root`.
pub fn relative_path(root: &Path, path: &Path) -> Option<String> {
    let rel = path.strip_prefix(root).ok()?;
    let mut parts = Vec::new();
    for c in rel.components() {
        match c {
            Component::Normal(s) => parts.push(s.to_string_lossy().into_owned()),
            Component::CurDir => {}
            _ => return None,
        }
    }
    Some(parts.join("/"))
}

/// List files under `root` matching the options, sorted. Hidden directories
/// (`.git` and friends) are skipped.
pub fn list_source_files(root: &Path, options: &ScanOptions) -> Result<Vec<String>, ScanError> {
    if !root.is_dir() {
        return Err(ScanError::MissingRoot(root.display().to_string()));
    }
    let include = build_globset(&options.include_globs)?;
    let exclude = build_globset(&options.exclude_globs)?;
    let mut out = Vec::new();
    let walker = walkdir::WalkDir::new(root).follow_links(false).into_iter().filter_entry(|e| {
        e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.')
    });
    for entry in walker {
        let entry = entry.map_err(|e| ScanError::Walk {
            path: e.path().map(|p| p.display().to_string()).unwrap_or_default(),
            message: e.to_string(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let Some(rel) = relative_path(root, entry.path()) else { continue };
        if include.is_match(&rel) && !exclude.is_match(&rel) {
            out.push(rel);
        }
    }
    out.sort();
    Ok(out)
}

/// Scan `root` and parse every matching file. Unreadable files become
/// diagnostics; files with syntax errors are kept as bare file entities.
pub fn scan_repository(root: &Path, options: &ScanOptions) -> Result<EntitySet, ScanError> {
    let paths = list_source_files(root, options)?;
    let results: Vec<Result<FileRecord, Diagnostic>> = paths
        .par_iter()
        .map(|rel| match std::fs::read(root.join(rel)) {
            Ok(bytes) => Ok(python::analyze_file(rel, &String::from_utf8_lossy(&bytes))),
            Err(e) => Err(Diagnostic { path: rel.clone(), issue: format!("unreadable file: {e}") }),
        })
        .collect();
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for r in results {
        match r {
            Ok(rec) => {
                if rec.parse_error {
                    diagnostics.push(Diagnostic {
                        path: rec.path.clone(),
                        issue: "parse error; file kept without child entities".into(),
                    });
                }
                records.push(rec);
            }
            Err(d) => diagnostics.push(d),
        }
    }
    Ok(EntitySet::from_records(records, diagnostics))
}

/// Build an entity set from in-memory sources (path → text).
pub fn scan_sources<I, P, T>(sources: I) -> EntitySet
where
    I: IntoIterator<Item = (P, T)>,
    P: AsRef<str>,
    T: AsRef<str>,
{
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for (p, t) in sources {
        let rec = python::analyze_file(p.as_ref(), t.as_ref());
        if rec.parse_error {
            diagnostics.push(Diagnostic {
                path: rec.path.clone(),
                issue: "parse error; file kept without child entities".into(),
            });
        }
        records.push(rec);
    }
    EntitySet::from_records(records, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(es: &EntitySet) -> Vec<String> {
        es.entities().iter().map(|e| format!("{}:{}", e.kind, e.display_name())).collect()
    }

    #[test]
    fn single_function_file() {
        let es = scan_sources([("a.py", "def f(): pass\n")]);
        assert_eq!(names(&es), vec!["file:a.py", "function:a.py:f"]);
        assert_eq!(es.dep_edges().len(), 1);
        let e = &es.dep_edges()[0];
        assert_eq!((e.src.kind, e.dst.kind, e.kind), (EntityKind::File, EntityKind::Function, DepKind::Contains));
    }

    #[test]
    fn class_with_method() {
        let es = scan_sources([("pkg/m.py", "class C:\n    def g(self):\n        return 1\n")]);
        assert_eq!(names(&es), vec!["file:pkg/m.py", "class:pkg/m.py:C", "method:pkg/m.py:C.g"]);
        let edges: Vec<_> = es
            .dep_edges()
            .iter()
            .map(|e| (e.src.display_name(), e.dst.display_name()))
            .collect();
        assert_eq!(
            edges,
            vec![
                ("pkg/m.py".to_string(), "pkg/m.py:C".to_string()),
                ("pkg/m.py:C".to_string(), "pkg/m.py:C.g".to_string())
            ]
        );
    }

    #[test]
    fn parse_error_keeps_bare_file() {
        let es = scan_sources([("bad.py", "def f(:\n    pass\n")]);
        assert_eq!(names(&es), vec!["file:bad.py"]);
        assert!(es.file("bad.py").unwrap().parse_error);
        assert_eq!(es.diagnostics().len(), 1);
    }

    #[test]
    fn entity_at_innermost() {
        let src = "import os\n\ndef a():\n    x = 1\n    return x\n\n\nclass K:\n    def m(self):\n        def inner():\n            return 2\n        return inner()\n";
        let es = scan_sources([("k.py", src)]);
        assert_eq!(es.entity_at("k.py", 4).unwrap().display_name(), "k.py:a");
        assert_eq!(es.entity_at("k.py", 6).unwrap().kind, EntityKind::File);
        assert_eq!(es.entity_at("k.py", 11).unwrap().display_name(), "k.py:K.m.inner");
        assert_eq!(es.entity_at("k.py", 12).unwrap().display_name(), "k.py:K.m");
        assert_eq!(es.entity_at("nope.py", 1), Err(UnknownPath("nope.py".into())));
    }

    #[test]
    fn decorated_duplicates_merge() {
        let src = "class P:\n    @property\n    def v(self):\n        return self._v\n\n    @v.setter\n    def v(self, x):\n        self._v = x\n";
        let es = scan_sources([("p.py", src)]);
        let methods: Vec<_> = es.entities().iter().filter(|e| e.kind == EntityKind::Method).collect();
        assert_eq!(methods.len(), 1);
        assert_eq!(methods[0].span, Span::new(2, 8));
    }

    #[test]
    fn spans_nest_or_are_disjoint() {
        let src = "def a():\n    def b():\n        pass\n    return b\n\nclass C:\n    x = 1\n    def m(self):\n        pass\n";
        let es = scan_sources([("n.py", src)]);
        let ents: Vec<_> = es.entities().iter().filter(|e| e.kind != EntityKind::File).collect();
        for (i, a) in ents.iter().enumerate() {
            for b in ents.iter().skip(i + 1) {
                let disjoint = a.span.end < b.span.start || b.span.end < a.span.start;
                let nested = (a.span.start <= b.span.start && b.span.end <= a.span.end)
                    || (b.span.start <= a.span.start && a.span.end <= b.span.end);
                assert!(disjoint || nested, "{a:?} vs {b:?}");
            }
        }
    }
}
