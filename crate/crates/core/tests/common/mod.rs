//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::Deserialize;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn mini_sklearn() -> PathBuf {
    fixtures_dir().join("mini_sklearn")
}

/// Every file under `root` as repo-relative path → text.
pub fn read_tree(root: &std::path::Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for e in walkdir::WalkDir::new(root).sort_by_file_name() {
        let e = e.unwrap();
        if e.file_type().is_file() {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            out.insert(rel, std::fs::read_to_string(e.path()).unwrap());
        }
    }
    out
}

#[derive(Debug, Deserialize)]
pub struct CodeOracle {
    pub entities: BTreeMap<String, Vec<String>>,
    pub edges: Vec<String>,
}

pub fn code_oracle() -> CodeOracle {
    let text = std::fs::read_to_string(fixtures_dir().join("mini_sklearn_oracle.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

impl CodeOracle {
    /// Edges as sorted `(src, kind, dst)` triples.
    pub fn edge_triples(&self) -> Vec<(String, String, String)> {
        let mut v: Vec<_> = self
            .edges
            .iter()
            .map(|e| {
                let parts: Vec<&str> = e.split(' ').collect();
                assert_eq!(parts.len(), 3, "bad oracle edge {e}");
                (parts[0].to_string(), parts[1].to_string(), parts[2].to_string())
            })
            .collect();
        v.sort();
        v
    }

    pub fn entity_names(&self) -> BTreeSet<(String, String)> {
        self.entities
            .iter()
            .flat_map(|(kind, names)| names.iter().map(move |n| (kind.clone(), n.clone())))
            .collect()
    }
}

/// One commit of the fixture stream: diff text and the trees around it.
pub struct Step {
    pub name: String,
    pub diff: String,
    pub before: BTreeMap<String, String>,
    pub after: BTreeMap<String, String>,
}

/// The six-commit stream replayed over `mini_sklearn`, in order.
pub fn stream() -> Vec<Step> {
    use repograph::evolution::{apply_patch, parse_unified_diff};
    let dir = fixtures_dir().join("stream");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".diff"))
        .collect();
    names.sort();
    let mut tree = read_tree(&mini_sklearn());
    let mut out = Vec::new();
    for n in names {
        let diff = std::fs::read_to_string(dir.join(&n)).unwrap();
        let after = apply_patch(&tree, &parse_unified_diff(&diff).unwrap()).unwrap();
        out.push(Step { name: n, diff, before: tree, after: after.clone() });
        tree = after;
    }
    out
}

/// What incremental maintenance must preserve relative to a fresh build:
/// low nodes with their features and locations, file→child links and
/// dependency edges.
#[derive(Debug, PartialEq, Eq)]
pub struct Fidelity {
    pub leaves: BTreeMap<String, repograph::graph::RpgNode>,
    pub file_children: BTreeSet<(String, String)>,
    /// Parent of every non-file low node.
    pub low_parents: BTreeMap<String, String>,
    pub dep_edges: BTreeSet<repograph::graph::DepLink>,
}

pub fn fidelity(g: &repograph::graph::RpgGraph) -> Fidelity {
    let leaves = g.nodes().filter(|n| !n.is_high()).map(|n| (n.id.clone(), n.clone())).collect();
    let file_children = g
        .file_nodes()
        .flat_map(|f| g.children(&f.id).map(move |c| (f.id.clone(), c.to_string())))
        .collect();
    let low_parents = g
        .nodes()
        .filter(|n| !n.is_high() && n.level != repograph::graph::Level::File)
        .map(|n| (n.id.clone(), g.parent(&n.id).unwrap_or("").to_string()))
        .collect();
    Fidelity { leaves, file_children, low_parents, dep_edges: g.dep_edges().clone() }
}

/// Depth of a directory path in segments; the root is 0.
pub fn dir_depth(p: &str) -> usize {
    if p.is_empty() {
        0
    } else {
        p.split('/').count()
    }
}

/// Whether directory `a` is `b` or one of its ancestors.
pub fn dir_is_prefix(a: &str, b: &str) -> bool {
    a.is_empty() || a == b || (b.starts_with(a) && b.as_bytes()[a.len()] == b'/')
}

fn prefixes(p: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    if !p.is_empty() {
        let segs: Vec<&str> = p.split('/').collect();
        for i in 1..=segs.len() {
            out.push(segs[..i].join("/"));
        }
    }
    out
}

/// Scope selection by exhaustive search over every covering antichain.
///
/// Candidates are the prefixes of the inputs that sit at least `k` deep or
/// are inputs themselves. Among antichains covering every input, take the
/// smallest; a single scope is the deepest common one, otherwise the set
/// with the least total depth. Panics if that choice is not unique.
pub fn lca_oracle(paths: &[String], k: usize) -> BTreeSet<String> {
    let inputs: BTreeSet<String> = paths.iter().cloned().collect();
    if inputs.is_empty() {
        return BTreeSet::new();
    }
    let inputs: Vec<String> = inputs.into_iter().collect();
    let admissible = |c: &str| dir_depth(c) >= k || inputs.iter().any(|i| i == c);
    let mut all: Vec<Vec<String>> = Vec::new();
    let mut best = usize::MAX;
    fn walk(
        inputs: &[String],
        admissible: &dyn Fn(&str) -> bool,
        chosen: &mut Vec<String>,
        best: &mut usize,
        all: &mut Vec<Vec<String>>,
    ) {
        if chosen.len() > *best {
            return;
        }
        let Some(open) = inputs.iter().find(|i| !chosen.iter().any(|c| dir_is_prefix(c, i))) else {
            *best = (*best).min(chosen.len());
            all.push(chosen.clone());
            return;
        };
        for cand in prefixes(open) {
            if !admissible(&cand) || chosen.iter().any(|c| dir_is_prefix(c, &cand) || dir_is_prefix(&cand, c)) {
                continue;
            }
            chosen.push(cand);
            walk(inputs, admissible, chosen, best, all);
            chosen.pop();
        }
    }
    walk(&inputs, &admissible, &mut Vec::new(), &mut best, &mut all);
    let mut pool: Vec<Vec<String>> = all.into_iter().filter(|a| a.len() == best).collect();
    let total = |a: &Vec<String>| a.iter().map(|s| dir_depth(s)).sum::<usize>();
    let target = if best == 1 {
        pool.iter().map(total).max().unwrap()
    } else {
        pool.iter().map(total).min().unwrap()
    };
    pool.retain(|a| total(a) == target);
    let sets: BTreeSet<BTreeSet<String>> = pool.into_iter().map(|a| a.into_iter().collect()).collect();
    assert_eq!(sets.len(), 1, "ambiguous optimum for {inputs:?} at k={k}: {sets:?}");
    sets.into_iter().next().unwrap()
}

/// Random directory sets: up to `max_paths` paths, at most `max_depth`
/// segments drawn from an alphabet of `alphabet` letters.
pub fn random_dir_set(rng: &mut impl rand::Rng, max_paths: usize, max_depth: usize, alphabet: u8) -> Vec<String> {
    let n = rng.gen_range(1..=max_paths);
    (0..n)
        .map(|_| {
            let d = rng.gen_range(0..=max_depth);
            (0..d).map(|_| ((b'a' + rng.gen_range(0..alphabet)) as char).to_string()).collect::<Vec<_>>().join("/")
        })
        .collect()
}

use repograph::graph::{DepLink, Level, RpgGraph, RpgNode};

fn type_name(n: &RpgNode) -> &'static str {
    match n.level {
        Level::Area | Level::Category | Level::Subcategory => "directory",
        Level::File => "file",
        Level::Class => "class",
        Level::Function => "function",
        Level::Method => "method",
    }
}

/// Traversal answer as plain sets: reached node → hop count, and traversed
/// `(src, dst, kind)` edges.
pub type Reach = (BTreeMap<String, usize>, BTreeSet<(String, String, String)>);

/// Level-synchronous reachability over hierarchy and dependency edges,
/// recomputed by scanning the full edge list at every hop.
pub fn bfs_oracle(
    g: &RpgGraph,
    starts: &BTreeSet<String>,
    direction: &str,
    depth: Option<usize>,
    types: Option<&BTreeSet<String>>,
    kinds: Option<&BTreeSet<String>>,
) -> Reach {
    let mut all: BTreeSet<(String, String, String)> = BTreeSet::new();
    for n in g.nodes() {
        for c in g.children(&n.id) {
            all.insert((n.id.clone(), c.to_string(), "contains".into()));
        }
    }
    for e in g.dep_edges() {
        all.insert((e.src.clone(), e.dst.clone(), e.kind.as_str().into()));
    }
    let admit = |id: &str| starts.contains(id) || types.is_none_or(|t| g.node(id).is_some_and(|n| t.contains(type_name(n))));
    let usable: Vec<&(String, String, String)> =
        all.iter().filter(|(s, d, k)| kinds.is_none_or(|ks| ks.contains(k)) && admit(s) && admit(d)).collect();
    let steps = |e: &(String, String, String)| -> Vec<(String, String)> {
        let mut v = Vec::new();
        if direction != "upstream" {
            v.push((e.0.clone(), e.1.clone()));
        }
        if direction != "downstream" {
            v.push((e.1.clone(), e.0.clone()));
        }
        v
    };
    let mut dist: BTreeMap<String, usize> = starts.iter().filter(|s| g.contains(s)).map(|s| (s.clone(), 0)).collect();
    let mut hop = 0;
    loop {
        if depth.is_some_and(|d| hop >= d) {
            break;
        }
        let mut next = Vec::new();
        for e in &usable {
            for (u, v) in steps(e) {
                if dist.get(&u) == Some(&hop) && !dist.contains_key(&v) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        hop += 1;
        for v in next {
            dist.entry(v).or_insert(hop);
        }
    }
    let mut edges = BTreeSet::new();
    for e in &usable {
        for (u, _) in steps(e) {
            if dist.get(&u).is_some_and(|d| depth.is_none_or(|lim| *d < lim)) {
                edges.insert((*e).clone());
            }
        }
    }
    (dist, edges)
}

/// A random well-formed graph: up to three areas of categories and
/// subcategories, `files` files with classes, methods and functions, and
/// random dependency edges between low nodes.
pub fn random_graph(rng: &mut impl rand::Rng, files: usize) -> RpgGraph {
    use repograph::code_index::{DepKind, EntityKind, EntityRef, Span};
    let mut g = RpgGraph::new();
    let mut subs = Vec::new();
    for a in 0..rng.gen_range(1..=3) {
        let an = format!("Area{a}");
        g.add_node(RpgNode::high(Level::Area, &an, &[&an]), None).unwrap();
        let aid = g.nodes().find(|n| n.metadata.name.as_deref() == Some(an.as_str())).unwrap().id.clone();
        for c in 0..rng.gen_range(1..=2) {
            let cn = format!("cat {c}");
            let cat = RpgNode::high(Level::Category, &cn, &[&an, &cn]);
            let cid = cat.id.clone();
            g.add_node(cat, Some(&aid)).unwrap();
            for s in 0..rng.gen_range(1..=2) {
                let sn = format!("sub {s}");
                let sub = RpgNode::high(Level::Subcategory, &sn, &[&an, &cn, &sn]);
                subs.push(sub.id.clone());
                g.add_node(sub, Some(&cid)).unwrap();
            }
        }
    }
    let mut lows = Vec::new();
    let low = |path: &str, q: Option<String>, kind| {
        RpgNode::low(&EntityRef { path: path.into(), qualified_name: q, kind, span: Span::new(1, 1) }, Vec::new())
    };
    for f in 0..files {
        let path = format!("pkg{}/m{f}.py", f % 3);
        let file = low(&path, None, EntityKind::File);
        let fid = file.id.clone();
        g.add_node(file, Some(&subs[rng.gen_range(0..subs.len())])).unwrap();
        lows.push(fid.clone());
        for c in 0..rng.gen_range(0..=2) {
            let cname = format!("C{c}");
            let class = low(&path, Some(cname.clone()), EntityKind::Class);
            let cid = class.id.clone();
            g.add_node(class, Some(&fid)).unwrap();
            lows.push(cid.clone());
            for m in 0..rng.gen_range(0..=2) {
                let meth = low(&path, Some(format!("{cname}.m{m}")), EntityKind::Method);
                lows.push(meth.id.clone());
                g.add_node(meth, Some(&cid)).unwrap();
            }
        }
        for u in 0..rng.gen_range(0..=2) {
            let func = low(&path, Some(format!("f{u}")), EntityKind::Function);
            lows.push(func.id.clone());
            g.add_node(func, Some(&fid)).unwrap();
        }
    }
    let kinds = [DepKind::Imports, DepKind::Invokes, DepKind::Inherits, DepKind::Composes, DepKind::Contains];
    for _ in 0..rng.gen_range(0..=lows.len() * 2) {
        let src = lows[rng.gen_range(0..lows.len())].clone();
        let dst = lows[rng.gen_range(0..lows.len())].clone();
        if src != dst {
            g.add_dep_edge(DepLink { src, dst, kind: kinds[rng.gen_range(0..kinds.len())] });
        }
    }
    g
}

/// Localization metrics computed from raw lists with nested loops:
/// `(acc@1, acc@5, precision, recall)`.
pub fn naive_scores(instances: &[(Vec<String>, Vec<String>)]) -> (f64, f64, f64, f64) {
    let mut acc1 = 0.0;
    let mut acc5 = 0.0;
    let mut prec = 0.0;
    let mut rec = 0.0;
    for (gold, preds) in instances {
        let mut g: Vec<&String> = Vec::new();
        for x in gold {
            if !g.contains(&x) {
                g.push(x);
            }
        }
        let mut p: Vec<&String> = Vec::new();
        for x in preds {
            if !p.contains(&x) {
                p.push(x);
            }
        }
        let hit_at = |k: usize| p.iter().take(k).any(|x| g.contains(x));
        if hit_at(1) {
            acc1 += 1.0;
        }
        if hit_at(5) {
            acc5 += 1.0;
        }
        let hits = p.iter().filter(|x| g.contains(x)).count() as f64;
        if !p.is_empty() {
            prec += hits / p.len() as f64;
        }
        if !g.is_empty() {
            rec += hits / g.len() as f64;
        }
    }
    let n = instances.len() as f64;
    (acc1 / n, acc5 / n, prec / n, rec / n)
}

/// Unified diff replacing line `line` (1-based) of `path`.
pub fn one_line_diff(path: &str, line: usize, old: &str, new: &str) -> String {
    format!("diff --git a/{path} b/{path}\n--- a/{path}\n+++ b/{path}\n@@ -{line},1 +{line},1 @@\n-{old}\n+{new}\n")
}

pub const DRIFT_WORDS: [&str; 20] = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet", "kilo", "lima",
    "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango",
];

/// Docstring line made of one-word sentences.
pub fn docstring_line(words: &[&str]) -> String {
    let sentences: Vec<String> = words
        .iter()
        .map(|w| {
            let mut c = w.chars();
            let first = c.next().unwrap().to_uppercase().collect::<String>();
            format!("{first}{}.", c.as_str())
        })
        .collect();
    format!("    \"\"\"{}\"\"\"", sentences.join(" "))
}

/// A two-package repository whose `pkg/core.py:target` docstring (line 2)
/// is `words`.
pub fn drift_repo(words: &[&str], ret: u32) -> BTreeMap<String, String> {
    let core = format!(
        "def target():\n{}\n    return {ret}\n\n\ndef helper():\n    \"\"\"Load the settings file.\"\"\"\n    return target()\n",
        docstring_line(words)
    );
    let other = "def render():\n    \"\"\"Render a plot of the data.\"\"\"\n    return None\n".to_string();
    [("pkg/core.py".to_string(), core), ("viz/plot.py".to_string(), other)].into()
}

/// The tree plus nine copies of every file next to the original, named
/// `_copyN_<name>`.
pub fn inflate(tree: &BTreeMap<String, String>, factor: usize) -> BTreeMap<String, String> {
    let mut out = tree.clone();
    for (path, text) in tree {
        let (dir, name) = match path.rsplit_once('/') {
            Some((d, n)) => (format!("{d}/"), n),
            None => (String::new(), path.as_str()),
        };
        for i in 1..factor {
            out.insert(format!("{dir}_copy{i}_{name}"), text.clone());
        }
    }
    out
}

pub fn fresh_build(tree: &BTreeMap<String, String>) -> repograph::extractor::BuildOutput {
    use repograph::extractor::{build_from_entities, ExtractorConfig};
    let p = repograph::provider::DeterministicProvider::default();
    build_from_entities(repograph::code_index::scan_sources(tree), &ExtractorConfig::default(), &p).unwrap()
}

/// Prompt tokens a full build of `tree` sends to the provider.
pub fn full_build_prompt_tokens(tree: &BTreeMap<String, String>) -> u64 {
    fresh_build(tree).accounts.values().map(|a| a.prompt_tokens_est).sum()
}

/// Apply one commit to a fresh build of `before`; returns the updated graph
/// and its report.
pub fn update_once(
    before: &BTreeMap<String, String>,
    after: &BTreeMap<String, String>,
    diff: &str,
    tau: f64,
) -> (RpgGraph, repograph::evolution::UpdateReport) {
    use repograph::evolution::{apply_commit, EvolutionConfig};
    let g = fresh_build(before).graph;
    let p = repograph::provider::DeterministicProvider::default();
    let cfg = EvolutionConfig { tau_drift: tau, ..Default::default() };
    let (b, a) = (repograph::code_index::scan_sources(before), repograph::code_index::scan_sources(after));
    apply_commit(&g, diff, &b, &a, &p, &cfg).unwrap()
}

/// Rewrite `target`'s docstring from the first ten drift words to the
/// words given by `keep` of them plus `fresh` new ones; `bump` also edits
/// the body so the entity counts as modified. Returns the Jaccard
/// complement of the two word sets and whether the update re-routed
/// `target`.
pub fn drift_trial(keep: usize, fresh: usize, tau: f64) -> (f64, bool) {
    let old: Vec<&str> = DRIFT_WORDS[..10].to_vec();
    let mut new: Vec<&str> = DRIFT_WORDS[..keep].to_vec();
    new.extend_from_slice(&DRIFT_WORDS[10..10 + fresh]);
    let before = drift_repo(&old, 1);
    let (after, diff) = if old == new {
        (drift_repo(&new, 2), one_line_diff("pkg/core.py", 3, "    return 1", "    return 2"))
    } else {
        (drift_repo(&new, 1), one_line_diff("pkg/core.py", 2, &docstring_line(&old), &docstring_line(&new)))
    };
    let union: BTreeSet<&str> = old.iter().chain(new.iter()).copied().collect();
    let drift = 1.0 - keep as f64 / union.len() as f64;
    let (_, report) = update_once(&before, &after, &diff, tau);
    assert_eq!(report.modified, 1, "keep={keep} fresh={fresh}: {report:?}");
    let id = repograph::graph::low_node_id("pkg/core.py", Some("target"), repograph::code_index::EntityKind::Function);
    (drift, report.rerouted.contains(&id))
}
