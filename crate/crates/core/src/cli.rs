//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation findings, 3 pipeline
//! or provider failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::code_index::{scan_repository, write_diagnostics};
use crate::config::Config;
use crate::evalkit::{score_run, Granularity, ScoreOptions};
use crate::evolution::{apply_commit, git::replay_range, UpdateReport};
use crate::extractor::build;
use crate::graph::{deserialize, serialize, RpgGraph};
use crate::toolkit::service::{serve_lines, serve_tcp, SnapshotStore};
use crate::toolkit::{dispatch, Snapshot, ToolRequest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FINDINGS: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "repograph", version, about = "Build, update and query repository graphs")]
struct Cli {
    /// Config file (TOML); defaults to $RPG_CONFIG when set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set evolution.tau_drift=0.4`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan a repository and write its graph.
    Build {
        root: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Apply a diff or a commit range to an existing graph.
    Update(UpdateArgs),
    /// Check a graph document for structural problems.
    Validate { graph: PathBuf },
    /// Run one navigation tool.
    Query(QueryArgs),
    /// Answer line-delimited JSON tool requests.
    Serve {
        graph: PathBuf,
        /// Repository checkout the graph was built from.
        #[arg(long, default_value = ".")]
        repo: PathBuf,
        /// Listen on a TCP address instead of standard streams.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Score localization predictions against gold locations.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "function")]
        granularity: String,
        #[arg(long = "top-n")]
        top_n: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct UpdateArgs {
    /// Graph to update.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Where to write the result; defaults to overwriting `--graph`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, requires_all = ["before", "after"], conflicts_with = "git")]
    diff: Option<PathBuf>,
    #[arg(long)]
    before: Option<PathBuf>,
    #[arg(long)]
    after: Option<PathBuf>,
    /// Commit range `A..B`, replayed commit by commit along first parents.
    #[arg(long)]
    git: Option<String>,
    /// Repository for `--git`.
    #[arg(long, default_value = ".")]
    repo: PathBuf,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    repo: PathBuf,
    #[command(subcommand)]
    tool: QueryTool,
}

#[derive(Debug, Subcommand)]
enum QueryTool {
    /// SearchNode.
    Search {
        #[arg(long)]
        mode: String,
        #[arg(long = "feature_terms", alias = "feature-terms", num_args = 1..)]
        feature_terms: Option<Vec<String>>,
        #[arg(long = "search_scopes", alias = "search-scopes", num_args = 1..)]
        search_scopes: Option<Vec<String>>,
        #[arg(long = "search_terms", alias = "search-terms", num_args = 1..)]
        search_terms: Option<Vec<String>>,
        #[arg(long = "line_nums", alias = "line-nums", num_args = 2, allow_negative_numbers = true)]
        line_nums: Option<Vec<i64>>,
        #[arg(long = "file_path_or_pattern", alias = "file-path-or-pattern")]
        file_path_or_pattern: Option<String>,
    },
    /// FetchNode.
    Fetch {
        #[arg(long = "code_entities", alias = "code-entities", num_args = 1..)]
        code_entities: Option<Vec<String>>,
        #[arg(long = "feature_entities", alias = "feature-entities", num_args = 1..)]
        feature_entities: Option<Vec<String>>,
    },
    /// ExploreRPG.
    Explore {
        #[arg(long = "start_code_entities", alias = "start-code-entities", num_args = 1..)]
        start_code_entities: Option<Vec<String>>,
        #[arg(long = "start_feature_entities", alias = "start-feature-entities", num_args = 1..)]
        start_feature_entities: Option<Vec<String>>,
        #[arg(long)]
        direction: Option<String>,
        #[arg(long = "traversal_depth", alias = "traversal-depth", allow_negative_numbers = true)]
        traversal_depth: Option<i64>,
        #[arg(long = "entity_type_filter", alias = "entity-type-filter", num_args = 1..)]
        entity_type_filter: Option<Vec<String>>,
        #[arg(long = "dependency_type_filter", alias = "dependency-type-filter", num_args = 1..)]
        dependency_type_filter: Option<Vec<String>>,
    },
}

/// A failure carrying its exit code; the message names the failing stage.
struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

struct Ctx<'a> {
    config: Config,
    json: bool,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn emit<T: Serialize>(&mut self, value: &T, human: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) {
        let r = if self.json {
            serde_json::to_writer(&mut *self.out, value).map_err(std::io::Error::from).and_then(|_| writeln!(self.out))
        } else {
            human(self.out)
        };
        if let Err(e) = r {
            let _ = writeln!(self.err, "output: {e}");
        }
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let config = match Config::load(cli.config.as_deref()).and_then(|c| c.with_overrides(&cli.overrides)) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "config: {e}");
            return EXIT_USAGE;
        }
    };
    let mut ctx = Ctx { config, json: cli.json, out, err };
    let result = match cli.command {
        Command::Build { root, out, diagnostics } => cmd_build(&mut ctx, &root, out, diagnostics),
        Command::Update(a) => cmd_update(&mut ctx, a),
        Command::Validate { graph } => cmd_validate(&mut ctx, &graph),
        Command::Query(q) => cmd_query(&mut ctx, q),
        Command::Serve { graph, repo, listen } => cmd_serve(&mut ctx, &graph, &repo, listen),
        Command::Eval { gold, pred, granularity, top_n } => cmd_eval(&mut ctx, &gold, &pred, &granularity, top_n),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(ctx.err, "{}", f.message);
            f.code
        }
    }
}

fn load_graph(path: &Path) -> Result<RpgGraph, Failure> {
    let bytes = std::fs::read(path).map_err(|e| fail(EXIT_FAILURE, format!("load: {}: {e}", path.display())))?;
    deserialize(&bytes).map_err(|e| fail(EXIT_FAILURE, format!("load: {}: {e}", path.display())))
}

/// Write through a temporary file so readers never see a partial graph.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let io = |e: std::io::Error| fail(EXIT_FAILURE, format!("write: {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn cmd_build(ctx: &mut Ctx, root: &Path, out: Option<PathBuf>, diag: Option<PathBuf>) -> Result<i32, Failure> {
    let provider = ctx.config.provider().map_err(|e| fail(EXIT_USAGE, format!("config: {e}")))?;
    let built = build(root, &ctx.config.extractor_config(), provider.as_ref())
        .map_err(|e| fail(EXIT_FAILURE, format!("build: {e}")))?;
    let out = out.unwrap_or_else(|| ctx.config.paths.graph.clone());
    let diag = diag.unwrap_or_else(|| ctx.config.paths.diagnostics.clone());
    write_atomic(&out, &serialize(&built.graph))?;
    let mut buf = Vec::new();
    write_diagnostics(&mut buf, &built.diagnostics).map_err(|e| fail(EXIT_FAILURE, format!("diagnostics: {e}")))?;
    write_atomic(&diag, &buf)?;
    let g = &built.graph;
    let summary = json!({
        "graph": out,
        "diagnostics": diag,
        "nodes": g.len(),
        "high_nodes": g.nodes().filter(|n| n.is_high()).count(),
        "feature_edges": g.feature_edges().count(),
        "dep_edges": g.dep_edges().len(),
        "diagnostic_count": built.diagnostics.len(),
        "tokens": built.accounts,
    });
    ctx.emit(&summary, |w| {
        writeln!(w, "wrote {} ({} nodes, {} dependency edges)", out.display(), g.len(), g.dep_edges().len())?;
        for (stage, a) in &built.accounts {
            writeln!(w, "  {stage}: {} requests, ~{} tokens", a.request_count, a.total_tokens())?;
        }
        writeln!(w, "{} diagnostics in {}", built.diagnostics.len(), diag.display())
    });
    Ok(EXIT_OK)
}

fn print_report(w: &mut dyn Write, r: &UpdateReport) -> std::io::Result<()> {
    writeln!(
        w,
        "inserted {}, deleted {}, modified {}; pruned {}, rerouted {}; deps +{} -{}; ~{} tokens",
        r.inserted,
        r.deleted,
        r.modified,
        r.pruned.len(),
        r.rerouted.len(),
        r.deps_added,
        r.deps_removed,
        r.tokens.total_tokens()
    )?;
    for s in &r.skipped {
        writeln!(w, "  skipped {}: {}", s.entity, s.reason)?;
    }
    Ok(())
}

fn cmd_update(ctx: &mut Ctx, a: UpdateArgs) -> Result<i32, Failure> {
    let graph_path = a.graph.clone().unwrap_or_else(|| ctx.config.paths.graph.clone());
    let g = load_graph(&graph_path)?;
    let provider = ctx.config.provider().map_err(|e| fail(EXIT_USAGE, format!("config: {e}")))?;
    let evo = ctx.config.evolution_config();
    let (next, reports) = match (&a.diff, &a.git) {
        (Some(diff), None) => {
            let (Some(before), Some(after)) = (&a.before, &a.after) else {
                return Err(fail(EXIT_USAGE, "update: --diff needs --before and --after"));
            };
            let text = std::fs::read_to_string(diff).map_err(|e| fail(EXIT_FAILURE, format!("update: {}: {e}", diff.display())))?;
            let opts = ctx.config.scan_options();
            let scan = |p: &Path| scan_repository(p, &opts).map_err(|e| fail(EXIT_FAILURE, format!("update: scan: {e}")));
            let (b, af) = (scan(before)?, scan(after)?);
            let (next, r) = apply_commit(&g, &text, &b, &af, provider.as_ref(), &evo)
                .map_err(|e| fail(EXIT_FAILURE, format!("update: {e}")))?;
            (next, vec![r])
        }
        (None, Some(range)) => replay_range(&g, &a.repo, range, provider.as_ref(), &evo, &ctx.config.scan_options())
            .map_err(|e| fail(EXIT_FAILURE, format!("update: {e}")))?,
        _ => return Err(fail(EXIT_USAGE, "update: give either --diff/--before/--after or --git")),
    };
    let out = a.out.unwrap_or(graph_path);
    write_atomic(&out, &serialize(&next))?;
    ctx.emit(&reports, |w| {
        for (i, r) in reports.iter().enumerate() {
            write!(w, "commit {}: ", i + 1)?;
            print_report(w, r)?;
        }
        writeln!(w, "wrote {}", out.display())
    });
    Ok(EXIT_OK)
}

fn cmd_validate(ctx: &mut Ctx, path: &Path) -> Result<i32, Failure> {
    let g = load_graph(path)?;
    let report = g.validate();
    ctx.emit(&report, |w| {
        if report.is_empty() {
            writeln!(w, "{}: ok ({} nodes)", path.display(), g.len())
        } else {
            for f in &report.findings {
                writeln!(w, "{f}")?;
            }
            writeln!(w, "{} findings", report.findings.len())
        }
    });
    Ok(if report.is_empty() { EXIT_OK } else { EXIT_FINDINGS })
}

fn tool_request(tool: QueryTool) -> ToolRequest {
    fn put<T: Serialize>(m: &mut serde_json::Map<String, Value>, k: &str, v: Option<T>) {
        if let Some(v) = v {
            m.insert(k.into(), serde_json::to_value(v).expect("plain values serialize"));
        }
    }
    let mut p = serde_json::Map::new();
    let name = match tool {
        QueryTool::Search { mode, feature_terms, search_scopes, search_terms, line_nums, file_path_or_pattern } => {
            put(&mut p, "mode", Some(mode));
            put(&mut p, "feature_terms", feature_terms);
            put(&mut p, "search_scopes", search_scopes);
            put(&mut p, "search_terms", search_terms);
            put(&mut p, "line_nums", line_nums);
            put(&mut p, "file_path_or_pattern", file_path_or_pattern);
            "SearchNode"
        }
        QueryTool::Fetch { code_entities, feature_entities } => {
            put(&mut p, "code_entities", code_entities);
            put(&mut p, "feature_entities", feature_entities);
            "FetchNode"
        }
        QueryTool::Explore {
            start_code_entities,
            start_feature_entities,
            direction,
            traversal_depth,
            entity_type_filter,
            dependency_type_filter,
        } => {
            put(&mut p, "start_code_entities", start_code_entities);
            put(&mut p, "start_feature_entities", start_feature_entities);
            put(&mut p, "direction", direction);
            put(&mut p, "traversal_depth", traversal_depth);
            put(&mut p, "entity_type_filter", entity_type_filter);
            put(&mut p, "dependency_type_filter", dependency_type_filter);
            "ExploreRPG"
        }
    };
    ToolRequest { id: Value::Null, tool_name: name.into(), parameters: p }
}

fn cmd_query(ctx: &mut Ctx, q: QueryArgs) -> Result<i32, Failure> {
    let path = q.graph.clone().unwrap_or_else(|| ctx.config.paths.graph.clone());
    let g = load_graph(&path)?;
    let snap = Snapshot::load(g, &q.repo).with_min_similarity(ctx.config.routing.min_similarity);
    let resp = dispatch(&snap, &tool_request(q.tool));
    ctx.emit(&resp, |w| {
        for warning in &resp.warnings {
            writeln!(w, "warning: {warning}")?;
        }
        match (&resp.result, &resp.error) {
            (Some(r), _) => writeln!(w, "{}", serde_json::to_string_pretty(r).unwrap_or_default()),
            (None, Some(e)) => writeln!(w, "error: {e}"),
            _ => Ok(()),
        }
    });
    Ok(if resp.ok { EXIT_OK } else { EXIT_USAGE })
}

fn cmd_serve(ctx: &mut Ctx, graph: &Path, repo: &Path, listen: Option<String>) -> Result<i32, Failure> {
    let store = SnapshotStore::watching(graph, repo, ctx.config.routing.min_similarity)
        .map_err(|e| fail(EXIT_FAILURE, format!("serve: {e}")))?;
    let r = match listen {
        Some(addr) => serve_tcp(Arc::new(store), addr.as_str()),
        None => serve_lines(&store, std::io::stdin().lock(), std::io::stdout().lock()).map(|_| ()),
    };
    r.map_err(|e| fail(EXIT_FAILURE, format!("serve: {e}")))?;
    Ok(EXIT_OK)
}

fn cmd_eval(ctx: &mut Ctx, gold: &Path, pred: &Path, granularity: &str, top_n: Option<usize>) -> Result<i32, Failure> {
    let gran = Granularity::parse(granularity)
        .ok_or_else(|| fail(EXIT_USAGE, format!("eval: granularity must be file or function, got `{granularity}`")))?;
    let report =
        score_run(gold, pred, gran, ScoreOptions { top_n }).map_err(|e| fail(EXIT_FAILURE, format!("eval: {e}")))?;
    ctx.emit(&report, |w| {
        writeln!(w, "{:<10} {:>8}", "metric", "value")?;
        for (k, v) in [
            ("acc@1", report.acc_at_1),
            ("acc@5", report.acc_at_5),
            ("precision", report.precision),
            ("recall", report.recall),
        ] {
            writeln!(w, "{k:<10} {v:>8.4}")?;
        }
        writeln!(w, "{:<10} {:>8}", "n", report.n)?;
        for warning in &report.warnings {
            writeln!(w, "warning: {warning}")?;
        }
        Ok(())
    });
    Ok(EXIT_OK)
}
