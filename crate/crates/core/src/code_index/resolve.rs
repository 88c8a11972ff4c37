//! Single-hop lexical name resolution over an [`EntitySet`].
//!
//! Lookup order for a bare name: definitions nested in enclosing function
//! scopes, the class body (only for references made directly in it),
//! module-level definitions, import bindings, then star imports. Attribute
//! chains continue through modules (top-level definitions, then submodules)
//! and classes (direct members). Nothing is inferred from types or values.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    DepEdge, DepKind, Diagnostic, EntityKind, EntityRef, EntitySet, FileRecord, ImportStmt, RefKind,
};

/// Tally of references that did not resolve to an in-repo entity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyReport {
    pub unresolved: usize,
    pub unresolved_by_file: BTreeMap<String, usize>,
}

impl DependencyReport {
    fn miss(&mut self, path: &str) {
        self.unresolved += 1;
        *self.unresolved_by_file.entry(path.to_string()).or_default() += 1;
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        self.unresolved_by_file
            .iter()
            .map(|(p, n)| Diagnostic { path: p.clone(), issue: format!("{n} unresolved references") })
            .collect()
    }
}

/// Dotted module name of a repo path: `a/b.py` → `a.b`, `a/__init__.py` → `a`.
pub fn module_name_of(path: &str) -> String {
    let stem = path.strip_suffix(".py").unwrap_or(path);
    let stem = stem.strip_suffix("/__init__").unwrap_or(stem);
    if stem == "__init__" {
        return String::new();
    }
    stem.replace('/', ".")
}

fn package_of(path: &str) -> String {
    let is_init = path.ends_with("/__init__.py") || path == "__init__.py";
    let module = module_name_of(path);
    if is_init {
        module
    } else {
        match module.rfind('.') {
            Some(i) => module[..i].to_string(),
            None => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Symbol {
    Module(String),
    Entity { path: String, idx: usize },
}

struct Index<'a> {
    es: &'a EntitySet,
    modules: BTreeMap<String, &'a str>,
    /// Every dotted prefix of a known module, for namespace packages.
    packages: BTreeSet<String>,
}

impl<'a> Index<'a> {
    fn new(es: &'a EntitySet) -> Self {
        let mut modules = BTreeMap::new();
        let mut packages = BTreeSet::new();
        for rec in es.files() {
            let m = module_name_of(&rec.path);
            if m.is_empty() {
                continue;
            }
            let is_init = rec.path.ends_with("__init__.py");
            match modules.get(&m) {
                Some(_) if !is_init => {}
                _ => {
                    modules.insert(m.clone(), rec.path.as_str());
                }
            }
            let parts: Vec<&str> = m.split('.').collect();
            for i in 1..parts.len() {
                packages.insert(parts[..i].join("."));
            }
        }
        Self { es, modules, packages }
    }

    fn module_exists(&self, m: &str) -> bool {
        self.modules.contains_key(m) || self.packages.contains(m)
    }

    fn module_file(&self, m: &str) -> Option<&'a FileRecord> {
        self.modules.get(m).and_then(|p| self.es.file(p))
    }

    fn absolute(&self, from_path: &str, level: usize, module: Option<&str>) -> Option<String> {
        if level == 0 {
            return module.map(str::to_string);
        }
        let mut base: Vec<String> = {
            let p = package_of(from_path);
            if p.is_empty() {
                Vec::new()
            } else {
                p.split('.').map(str::to_string).collect()
            }
        };
        for _ in 1..level {
            base.pop()?;
        }
        if let Some(m) = module {
            base.extend(m.split('.').map(str::to_string));
        }
        Some(base.join("."))
    }

    /// Last top-level definition named `name` in `rec`.
    fn top_level(rec: &FileRecord, name: &str) -> Option<usize> {
        rec.entities
            .iter()
            .enumerate()
            .filter(|(_, e)| e.parent.is_none() && e.qualified_name == name)
            .max_by_key(|(_, e)| e.span.start)
            .map(|(i, _)| i)
    }

    fn member(rec: &FileRecord, owner: usize, name: &str) -> Option<usize> {
        rec.entities
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                e.parent == Some(owner) && e.qualified_name.rsplit('.').next() == Some(name)
            })
            .max_by_key(|(_, e)| e.span.start)
            .map(|(i, _)| i)
    }

    fn attribute(&self, sym: &Symbol, name: &str) -> Option<Symbol> {
        match sym {
            Symbol::Module(m) => {
                if let Some(rec) = self.module_file(m) {
                    if let Some(i) = Self::top_level(rec, name) {
                        return Some(Symbol::Entity { path: rec.path.clone(), idx: i });
                    }
                }
                let sub = format!("{m}.{name}");
                self.module_exists(&sub).then_some(Symbol::Module(sub))
            }
            Symbol::Entity { path, idx } => {
                let rec = self.es.file(path)?;
                if rec.entities[*idx].kind != EntityKind::Class {
                    return None;
                }
                Self::member(rec, *idx, name).map(|i| Symbol::Entity { path: path.clone(), idx: i })
            }
        }
    }
}

/// Name bindings introduced by a file's imports.
struct Bindings {
    names: BTreeMap<String, Symbol>,
    star_modules: Vec<String>,
    imported_files: BTreeSet<String>,
}

fn bindings_for(index: &Index<'_>, rec: &FileRecord, report: &mut DependencyReport) -> Bindings {
    let mut names = BTreeMap::new();
    let mut star_modules = Vec::new();
    let mut imported_files = BTreeSet::new();
    let note_module = |m: &str, imported: &mut BTreeSet<String>| {
        if let Some(f) = index.module_file(m) {
            imported.insert(f.path.clone());
        }
    };
    for stmt in &rec.imports {
        match stmt {
            ImportStmt::Module { module, alias } => {
                if !index.module_exists(module) {
                    report.miss(&rec.path);
                    continue;
                }
                note_module(module, &mut imported_files);
                match alias {
                    Some(a) => {
                        names.insert(a.clone(), Symbol::Module(module.clone()));
                    }
                    None => {
                        let head = module.split('.').next().unwrap_or(module).to_string();
                        names.insert(head.clone(), Symbol::Module(head));
                    }
                }
            }
            ImportStmt::From { level, module, names: imported } => {
                let Some(abs) = index.absolute(&rec.path, *level, module.as_deref()) else {
                    report.miss(&rec.path);
                    continue;
                };
                let base_known = !abs.is_empty() && index.module_exists(&abs);
                if !abs.is_empty() {
                    note_module(&abs, &mut imported_files);
                }
                for (name, alias) in imported {
                    let bound = alias.clone().unwrap_or_else(|| name.clone());
                    let target = if abs.is_empty() {
                        index.module_exists(name).then(|| Symbol::Module(name.clone()))
                    } else if base_known {
                        index.attribute(&Symbol::Module(abs.clone()), name)
                    } else {
                        None
                    };
                    match target {
                        Some(sym) => {
                            if let Symbol::Module(m) = &sym {
                                note_module(m, &mut imported_files);
                            }
                            names.insert(bound, sym);
                        }
                        None => {
                            names.remove(&bound);
                            report.miss(&rec.path);
                        }
                    }
                }
            }
            ImportStmt::Star { level, module } => match index.absolute(&rec.path, *level, module.as_deref()) {
                Some(abs) if !abs.is_empty() && index.module_exists(&abs) => {
                    note_module(&abs, &mut imported_files);
                    star_modules.push(abs);
                }
                _ => report.miss(&rec.path),
            },
        }
    }
    imported_files.remove(&rec.path);
    Bindings { names, star_modules, imported_files }
}

fn lookup(
    index: &Index<'_>,
    rec: &FileRecord,
    bindings: &Bindings,
    owner: Option<usize>,
    name: &str,
) -> Option<Symbol> {
    let here = |idx: usize| Symbol::Entity { path: rec.path.clone(), idx };
    let mut scope = owner;
    let mut first = true;
    while let Some(s) = scope {
        let e = &rec.entities[s];
        let visible = match e.kind {
            EntityKind::Function | EntityKind::Method => true,
            EntityKind::Class => first,
            _ => false,
        };
        if visible {
            if let Some(i) = Index::member(rec, s, name) {
                return Some(here(i));
            }
        }
        first = false;
        scope = e.parent;
    }
    if let Some(i) = Index::top_level(rec, name) {
        return Some(here(i));
    }
    if let Some(sym) = bindings.names.get(name) {
        return Some(sym.clone());
    }
    for m in &bindings.star_modules {
        if let Some(f) = index.module_file(m) {
            if let Some(i) = Index::top_level(f, name) {
                return Some(Symbol::Entity { path: f.path.clone(), idx: i });
            }
        }
    }
    None
}

fn enclosing_class(rec: &FileRecord, owner: Option<usize>) -> Option<usize> {
    let mut scope = owner;
    while let Some(s) = scope {
        if rec.entities[s].kind == EntityKind::Class {
            return Some(s);
        }
        scope = rec.entities[s].parent;
    }
    None
}

fn resolve_chain(
    index: &Index<'_>,
    rec: &FileRecord,
    bindings: &Bindings,
    owner: Option<usize>,
    chain: &[String],
) -> Option<Symbol> {
    let (head, rest) = chain.split_first()?;
    let mut sym = if head == "self" || head == "cls" {
        let c = enclosing_class(rec, owner)?;
        Symbol::Entity { path: rec.path.clone(), idx: c }
    } else {
        lookup(index, rec, bindings, owner, head)?
    };
    for attr in rest {
        sym = index.attribute(&sym, attr)?;
    }
    Some(sym)
}

/// All non-`contains` dependency edges of the entity set.
pub fn extract_dependencies(es: &EntitySet) -> (Vec<DepEdge>, DependencyReport) {
    extract_dependencies_for(es, None)
}

/// Dependency edges whose source lies in one of `only` (all files when
/// `None`). Output is sorted and free of duplicates.
pub fn extract_dependencies_for(
    es: &EntitySet,
    only: Option<&BTreeSet<String>>,
) -> (Vec<DepEdge>, DependencyReport) {
    let index = Index::new(es);
    let mut report = DependencyReport::default();
    let mut edges: BTreeMap<_, DepEdge> = BTreeMap::new();
    let mut push = |e: DepEdge| {
        edges.entry(e.key()).or_insert(e);
    };
    for rec in es.files() {
        if only.is_some_and(|set| !set.contains(&rec.path)) || rec.parse_error {
            continue;
        }
        let bindings = bindings_for(&index, rec, &mut report);
        let file_ref = rec.file_ref();
        for f in &bindings.imported_files {
            if let Some(dst) = es.file(f) {
                push(DepEdge { src: file_ref.clone(), dst: dst.file_ref(), kind: DepKind::Imports });
            }
        }
        for r in &rec.references {
            let resolved = resolve_chain(&index, rec, &bindings, r.owner, &r.chain);
            let target = match resolved {
                Some(Symbol::Entity { path, idx }) => es.file(&path).map(|f| f.entity_ref(idx)),
                _ => None,
            };
            let Some(dst) = target else {
                report.miss(&rec.path);
                continue;
            };
            let src = rec.owner_ref(r.owner);
            let kind = match r.kind {
                RefKind::Call => DepKind::Invokes,
                RefKind::Base => DepKind::Inherits,
                RefKind::Compose => DepKind::Composes,
            };
            if kind != DepKind::Invokes && (dst.kind != EntityKind::Class || src.key() == dst.key()) {
                report.miss(&rec.path);
                continue;
            }
            push(DepEdge { src, dst, kind });
        }
    }
    let mut out: Vec<DepEdge> = edges.into_values().collect();
    out.sort_by_key(|a| a.key());
    (out, report)
}

/// Modules a file refers to through its imports (absolute dotted names,
/// including `from m import n` expanded to `m.n`).
pub(crate) fn referenced_modules(rec: &FileRecord) -> BTreeSet<String> {
    let index_free_absolute = |level: usize, module: Option<&str>| -> Option<String> {
        if level == 0 {
            return module.map(str::to_string);
        }
        let pkg = package_of(&rec.path);
        let mut base: Vec<&str> = if pkg.is_empty() { Vec::new() } else { pkg.split('.').collect() };
        for _ in 1..level {
            base.pop()?;
        }
        let mut s = base.join(".");
        if let Some(m) = module {
            if !s.is_empty() {
                s.push('.');
            }
            s.push_str(m);
        }
        Some(s)
    };
    let mut out = BTreeSet::new();
    for stmt in &rec.imports {
        match stmt {
            ImportStmt::Module { module, .. } => {
                out.insert(module.clone());
            }
            ImportStmt::From { level, module, names } => {
                if let Some(abs) = index_free_absolute(*level, module.as_deref()) {
                    for (n, _) in names {
                        out.insert(if abs.is_empty() { n.clone() } else { format!("{abs}.{n}") });
                    }
                    if !abs.is_empty() {
                        out.insert(abs);
                    }
                }
            }
            ImportStmt::Star { level, module } => {
                if let Some(abs) = index_free_absolute(*level, module.as_deref()) {
                    out.insert(abs);
                }
            }
        }
    }
    out
}

/// Convenience for tests and tools: edges rendered as
/// `(src, kind, dst)` display triples.
pub fn edge_triples(edges: &[DepEdge]) -> Vec<(String, String, String)> {
    edges
        .iter()
        .map(|e| (e.src.display_name(), e.kind.to_string(), e.dst.display_name()))
        .collect()
}

impl EntitySet {
    /// Entity reference for a file path, if scanned.
    pub fn file_entity(&self, path: &str) -> Option<EntityRef> {
        self.file(path).map(|f| f.file_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_index::scan_sources;

    fn triples(es: &EntitySet) -> Vec<(String, String, String)> {
        edge_triples(&extract_dependencies(es).0)
    }

    fn t(a: &str, k: &str, b: &str) -> (String, String, String) {
        (a.into(), k.into(), b.into())
    }

    #[test]
    fn from_import_call() {
        let es = scan_sources([
            ("a.py", "def f():\n    pass\n"),
            ("b.py", "from a import f\n\ndef g():\n    f()\n"),
        ]);
        assert_eq!(triples(&es), vec![t("b.py", "imports", "a.py"), t("b.py:g", "invokes", "a.py:f")]);
    }

    #[test]
    fn same_file_inheritance() {
        let es = scan_sources([("c.py", "class C:\n    pass\n\nclass D(C):\n    pass\n")]);
        assert_eq!(triples(&es), vec![t("c.py:D", "inherits", "c.py:C")]);
    }

    #[test]
    fn module_names() {
        assert_eq!(module_name_of("a/b.py"), "a.b");
        assert_eq!(module_name_of("a/__init__.py"), "a");
        assert_eq!(module_name_of("x.py"), "x");
        assert_eq!(package_of("a/b.py"), "a");
        assert_eq!(package_of("a/__init__.py"), "a");
        assert_eq!(package_of("x.py"), "");
    }

    #[test]
    fn relative_and_module_alias_imports() {
        let es = scan_sources([
            ("pkg/__init__.py", ""),
            ("pkg/util.py", "def helper():\n    return 1\n\nclass Box:\n    def open(self):\n        return helper()\n"),
            (
                "pkg/main.py",
                "from . import util\nimport pkg.util as u\n\nclass Main(util.Box):\n    def run(self):\n        self.open()\n        return u.helper()\n",
            ),
        ]);
        let got = triples(&es);
        assert!(got.contains(&t("pkg/main.py", "imports", "pkg/util.py")));
        assert!(got.contains(&t("pkg/main.py", "imports", "pkg/__init__.py")));
        assert!(got.contains(&t("pkg/main.py:Main", "inherits", "pkg/util.py:Box")));
        assert!(got.contains(&t("pkg/main.py:Main.run", "invokes", "pkg/util.py:helper")));
        assert!(got.contains(&t("pkg/util.py:Box.open", "invokes", "pkg/util.py:helper")));
        // `self.open` resolves against Main's own members only.
        assert!(!got.iter().any(|(s, _, d)| s == "pkg/main.py:Main.run" && d.ends_with("Box.open")));
    }

    #[test]
    fn composes_and_recursion() {
        let es = scan_sources([(
            "m.py",
            "class Part:\n    pass\n\nclass Whole:\n    spare: Part\n    def __init__(self):\n        self.p = Part()\n\ndef fact(n):\n    return fact(n - 1)\n",
        )]);
        let got = triples(&es);
        assert!(got.contains(&t("m.py:Whole", "composes", "m.py:Part")));
        assert!(got.contains(&t("m.py:Whole.__init__", "invokes", "m.py:Part")));
        assert!(got.contains(&t("m.py:fact", "invokes", "m.py:fact")));
    }

    #[test]
    fn unresolved_are_counted() {
        let es = scan_sources([("u.py", "import numpy\n\ndef f():\n    print(len([]))\n")]);
        let (edges, report) = extract_dependencies(&es);
        assert!(edges.is_empty());
        assert_eq!(report.unresolved, 3);
        assert_eq!(report.diagnostics()[0].path, "u.py");
    }

    #[test]
    fn nested_scope_shadows_module_level() {
        let es = scan_sources([(
            "s.py",
            "def helper():\n    pass\n\ndef outer():\n    def helper():\n        pass\n    helper()\n",
        )]);
        assert_eq!(triples(&es), vec![t("s.py:outer", "invokes", "s.py:outer.helper")]);
    }
}
