//! Python syntax analysis on top of tree-sitter.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use tree_sitter::{Node, Parser};

use super::{EntityKind, FileRecord, LocalEntity, Span};

/// One import statement, with relative levels kept as written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImportStmt {
    /// `import a.b` or `import a.b as c`.
    Module { module: String, alias: Option<String> },
    /// `from ..a import x as y, z` (`level` counts the leading dots).
    From { level: usize, module: Option<String>, names: Vec<(String, Option<String>)> },
    /// `from a import *`.
    Star { level: usize, module: Option<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RefKind {
    Call,
    Base,
    Compose,
}

/// A name reference that may resolve to an in-repo entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub kind: RefKind,
    /// Dotted access chain, e.g. `["self", "fit"]`. Empty when the target is
    /// not a plain name/attribute chain.
    pub chain: Vec<String>,
    /// Local entity index of the enclosing entity; `None` for module level.
    pub owner: Option<usize>,
    pub line: u32,
}

thread_local! {
    static PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
}

fn with_parser<R>(f: impl FnOnce(&mut Parser) -> R) -> R {
    PARSER.with(|cell| {
        let mut slot = cell.borrow_mut();
        let parser = slot.get_or_insert_with(|| {
            let mut p = Parser::new();
            p.set_language(&tree_sitter_python::LANGUAGE.into())
                .expect("python grammar is compatible with the linked tree-sitter");
            p
        });
        f(parser)
    })
}

pub(crate) fn analyze_file(path: &str, text: &str) -> FileRecord {
    let line_count = text.lines().count().max(1) as u32;
    let mut rec = FileRecord {
        path: path.to_string(),
        text: text.into(),
        parse_error: false,
        line_count,
        entities: Vec::new(),
        imports: Vec::new(),
        references: Vec::new(),
    };
    let tree = with_parser(|p| p.parse(text, None));
    let Some(tree) = tree else {
        rec.parse_error = true;
        return rec;
    };
    let root = tree.root_node();
    if root.has_error() {
        rec.parse_error = true;
        return rec;
    }
    let mut walker = Walker { src: text.as_bytes(), rec: &mut rec, index: HashMap::new() };
    walker.visit_children(root, &Ctx::module());
    rec
}

#[derive(Clone)]
struct Ctx {
    owner: Option<usize>,
    owner_kind: Option<EntityKind>,
    prefix: String,
    /// Nearest enclosing class reachable through a method, for `self.x = ...`.
    self_class: Option<usize>,
}

impl Ctx {
    fn module() -> Self {
        Self { owner: None, owner_kind: None, prefix: String::new(), self_class: None }
    }
}

struct Walker<'a> {
    src: &'a [u8],
    rec: &'a mut FileRecord,
    index: HashMap<(String, EntityKind), usize>,
}

fn line_span(node: Node<'_>, start_from: Option<Node<'_>>) -> Span {
    let start = start_from.unwrap_or(node).start_position().row as u32 + 1;
    let end_pos = node.end_position();
    let mut end = end_pos.row as u32 + 1;
    if end_pos.column == 0 && end > start {
        end -= 1;
    }
    Span::new(start, end.max(start))
}

impl<'a> Walker<'a> {
    fn text(&self, node: Node<'_>) -> &'a str {
        node.utf8_text(self.src).unwrap_or("")
    }

    fn visit_children(&mut self, node: Node<'_>, ctx: &Ctx) {
        let mut cursor = node.walk();
        let children: Vec<Node<'_>> = node.named_children(&mut cursor).collect();
        for child in children {
            self.visit(child, ctx);
        }
    }

    fn visit(&mut self, node: Node<'_>, ctx: &Ctx) {
        match node.kind() {
            "decorated_definition" => {
                let mut cursor = node.walk();
                let decorators: Vec<Node<'_>> =
                    node.named_children(&mut cursor).filter(|c| c.kind() == "decorator").collect();
                for d in decorators {
                    self.visit_children(d, ctx);
                }
                if let Some(def) = node.child_by_field_name("definition") {
                    self.definition(def, Some(node), ctx);
                }
            }
            "function_definition" | "class_definition" => self.definition(node, None, ctx),
            "import_statement" => self.import(node),
            "import_from_statement" => self.import_from(node),
            "future_import_statement" => {}
            "call" => {
                let func = node.child_by_field_name("function");
                let chain = func.map(|f| self.chain(f)).unwrap_or_default();
                self.push_ref(RefKind::Call, chain, ctx, node);
                if let Some(f) = func {
                    if f.kind() != "identifier" {
                        self.visit(f, ctx);
                    }
                }
                if let Some(args) = node.child_by_field_name("arguments") {
                    self.visit_children(args, ctx);
                }
            }
            "assignment" => {
                self.composition(node, ctx);
                self.visit_children(node, ctx);
            }
            _ => self.visit_children(node, ctx),
        }
    }

    fn push_ref(&mut self, kind: RefKind, chain: Vec<String>, ctx: &Ctx, at: Node<'_>) {
        self.rec.references.push(Reference {
            kind,
            chain,
            owner: ctx.owner,
            line: at.start_position().row as u32 + 1,
        });
    }

    /// `a.b.c` → `["a", "b", "c"]`; anything else → empty.
    fn chain(&self, node: Node<'_>) -> Vec<String> {
        match node.kind() {
            "identifier" => vec![self.text(node).to_string()],
            "attribute" => {
                let (Some(obj), Some(attr)) =
                    (node.child_by_field_name("object"), node.child_by_field_name("attribute"))
                else {
                    return Vec::new();
                };
                let mut head = self.chain(obj);
                if head.is_empty() {
                    return head;
                }
                head.push(self.text(attr).to_string());
                head
            }
            _ => Vec::new(),
        }
    }

    fn definition(&mut self, def: Node<'_>, decorated: Option<Node<'_>>, ctx: &Ctx) {
        let is_class = def.kind() == "class_definition";
        let Some(name_node) = def.child_by_field_name("name") else { return };
        let name = self.text(name_node).to_string();
        let kind = if is_class {
            EntityKind::Class
        } else if ctx.owner_kind == Some(EntityKind::Class) {
            EntityKind::Method
        } else {
            EntityKind::Function
        };
        let qualified =
            if ctx.prefix.is_empty() { name.clone() } else { format!("{}.{}", ctx.prefix, name) };
        let span = line_span(def, decorated);
        let body = def.child_by_field_name("body");
        let docstring = body.and_then(|b| self.docstring(b));

        let idx = match self.index.get(&(qualified.clone(), kind)) {
            Some(&i) => {
                let e = &mut self.rec.entities[i];
                e.span = e.span.union(&span);
                if e.docstring.is_none() {
                    e.docstring = docstring;
                }
                i
            }
            None => {
                self.rec.entities.push(LocalEntity {
                    qualified_name: qualified.clone(),
                    kind,
                    span,
                    parent: ctx.owner,
                    docstring,
                });
                let i = self.rec.entities.len() - 1;
                self.index.insert((qualified.clone(), kind), i);
                i
            }
        };

        if is_class {
            if let Some(supers) = def.child_by_field_name("superclasses") {
                let mut cursor = supers.walk();
                let args: Vec<Node<'_>> = supers.named_children(&mut cursor).collect();
                let class_ctx = Ctx { owner: Some(idx), ..ctx.clone() };
                for arg in args {
                    match arg.kind() {
                        "identifier" | "attribute" => {
                            let chain = self.chain(arg);
                            self.push_ref(RefKind::Base, chain, &class_ctx, arg);
                        }
                        _ => self.visit(arg, ctx),
                    }
                }
            }
        } else {
            for field in ["parameters", "return_type"] {
                if let Some(n) = def.child_by_field_name(field) {
                    self.visit(n, ctx);
                }
            }
        }

        if let Some(body) = body {
            let self_class = match kind {
                EntityKind::Method => ctx.owner,
                EntityKind::Class => None,
                _ => ctx.self_class,
            };
            let inner = Ctx { owner: Some(idx), owner_kind: Some(kind), prefix: qualified, self_class };
            self.visit_children(body, &inner);
        }
    }

    fn docstring(&self, body: Node<'_>) -> Option<String> {
        let first = body.named_child(0)?;
        if first.kind() != "expression_statement" {
            return None;
        }
        let s = first.named_child(0)?;
        if s.kind() != "string" {
            return None;
        }
        let raw = self.text(s);
        let trimmed = raw.trim_start_matches(|c: char| c.is_ascii_alphabetic());
        let body = ["\"\"\"", "'''", "\"", "'"]
            .iter()
            .find_map(|q| trimmed.strip_prefix(q).and_then(|t| t.strip_suffix(q)))
            .unwrap_or(trimmed);
        let cleaned: Vec<&str> = body.lines().map(str::trim).collect();
        let text = cleaned.join("\n").trim().to_string();
        (!text.is_empty()).then_some(text)
    }

    /// Class attribute or `self.x` assignment whose value is a constructor
    /// call or whose annotation names a class.
    fn composition(&mut self, node: Node<'_>, ctx: &Ctx) {
        let Some(left) = node.child_by_field_name("left") else { return };
        let target_class = match left.kind() {
            "identifier" if ctx.owner_kind == Some(EntityKind::Class) => ctx.owner,
            "attribute" => {
                let chain = self.chain(left);
                if chain.len() == 2 && chain[0] == "self" {
                    ctx.self_class
                } else {
                    None
                }
            }
            _ => None,
        };
        let Some(class_idx) = target_class else { return };
        let class_ctx = Ctx { owner: Some(class_idx), ..ctx.clone() };
        if let Some(ty) = node.child_by_field_name("type") {
            let inner = ty.named_child(0).unwrap_or(ty);
            let chain = self.chain(inner);
            if !chain.is_empty() {
                self.push_ref(RefKind::Compose, chain, &class_ctx, ty);
            }
        }
        if let Some(right) = node.child_by_field_name("right") {
            if right.kind() == "call" {
                if let Some(f) = right.child_by_field_name("function") {
                    let chain = self.chain(f);
                    if !chain.is_empty() {
                        self.push_ref(RefKind::Compose, chain, &class_ctx, right);
                    }
                }
            }
        }
    }

    fn import(&mut self, node: Node<'_>) {
        let mut cursor = node.walk();
        let names: Vec<Node<'_>> = node.children_by_field_name("name", &mut cursor).collect();
        for n in names {
            let stmt = match n.kind() {
                "dotted_name" => ImportStmt::Module { module: self.text(n).to_string(), alias: None },
                "aliased_import" => {
                    let module = n.child_by_field_name("name").map(|m| self.text(m).to_string());
                    let alias = n.child_by_field_name("alias").map(|a| self.text(a).to_string());
                    match module {
                        Some(module) => ImportStmt::Module { module, alias },
                        None => continue,
                    }
                }
                _ => continue,
            };
            self.rec.imports.push(stmt);
        }
    }

    fn import_from(&mut self, node: Node<'_>) {
        let (level, module) = match node.child_by_field_name("module_name") {
            Some(m) if m.kind() == "relative_import" => {
                let mut level = 0;
                let mut module = None;
                let mut cursor = m.walk();
                for c in m.named_children(&mut cursor) {
                    match c.kind() {
                        "import_prefix" => level = self.text(c).chars().filter(|&ch| ch == '.').count(),
                        "dotted_name" => module = Some(self.text(c).to_string()),
                        _ => {}
                    }
                }
                (level, module)
            }
            Some(m) => (0, Some(self.text(m).to_string())),
            None => return,
        };
        let mut cursor = node.walk();
        let is_star = node.named_children(&mut cursor).any(|c| c.kind() == "wildcard_import");
        if is_star {
            self.rec.imports.push(ImportStmt::Star { level, module });
            return;
        }
        let mut cursor = node.walk();
        let name_nodes: Vec<Node<'_>> = node.children_by_field_name("name", &mut cursor).collect();
        let mut names = Vec::new();
        for n in name_nodes {
            match n.kind() {
                "dotted_name" => names.push((self.text(n).to_string(), None)),
                "aliased_import" => {
                    if let Some(name) = n.child_by_field_name("name") {
                        let alias = n.child_by_field_name("alias").map(|a| self.text(a).to_string());
                        names.push((self.text(name).to_string(), alias));
                    }
                }
                _ => {}
            }
        }
        self.rec.imports.push(ImportStmt::From { level, module, names });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collects_imports() {
        let rec = analyze_file(
            "p/m.py",
            "import a.b as c\nimport os, sys\nfrom .x import (y, z as w)\nfrom .. import q\nfrom k import *\n",
        );
        assert_eq!(
            rec.imports,
            vec![
                ImportStmt::Module { module: "a.b".into(), alias: Some("c".into()) },
                ImportStmt::Module { module: "os".into(), alias: None },
                ImportStmt::Module { module: "sys".into(), alias: None },
                ImportStmt::From {
                    level: 1,
                    module: Some("x".into()),
                    names: vec![("y".into(), None), ("z".into(), Some("w".into()))]
                },
                ImportStmt::From { level: 2, module: None, names: vec![("q".into(), None)] },
                ImportStmt::Star { level: 0, module: Some("k".into()) },
            ]
        );
    }

    #[test]
    fn collects_references_with_owners() {
        let src = "class A(B, m.C):\n    x: D = E()\n    def f(self):\n        self.y = F()\n        self.g()\n\nh()\n";
        let rec = analyze_file("r.py", src);
        let refs: Vec<_> = rec
            .references
            .iter()
            .map(|r| (r.kind, r.chain.join("."), r.owner.map(|i| rec.entities[i].qualified_name.clone())))
            .collect();
        let a = Some("A".to_string());
        let f = Some("A.f".to_string());
        assert_eq!(
            refs,
            vec![
                (RefKind::Base, "B".into(), a.clone()),
                (RefKind::Base, "m.C".into(), a.clone()),
                (RefKind::Compose, "D".into(), a.clone()),
                (RefKind::Compose, "E".into(), a.clone()),
                (RefKind::Call, "E".into(), a.clone()),
                (RefKind::Compose, "F".into(), a.clone()),
                (RefKind::Call, "F".into(), f.clone()),
                (RefKind::Call, "self.g".into(), f),
                (RefKind::Call, "h".into(), None),
            ]
        );
    }

    #[test]
    fn docstrings_are_extracted() {
        let src = "def f():\n    \"\"\"Load the config.\n\n    More text.\n    \"\"\"\n    return 1\n\ndef g():\n    return 2\n";
        let rec = analyze_file("d.py", src);
        assert_eq!(rec.entities[0].docstring.as_deref(), Some("Load the config.\n\nMore text."));
        assert_eq!(rec.entities[1].docstring, None);
    }
}
