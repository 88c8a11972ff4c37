//! Canonical JSON encoding.
//!
//! Object keys come out sorted (serde_json's map is ordered), nodes are
//! sorted by id, feature edges by (parent, child) and dependency edges by
//! (src, dst, kind), so equal graphs always produce identical bytes.

use serde_json::{json, Map, Value};

use super::{DepLink, Level, NodeKind, NodeMeta, RpgGraph, RpgNode};
use crate::code_index::{DepKind, EntityKind, Span};
use crate::provider::FeaturePhrase;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{location}{}: {message}", node_id.as_ref().map(|n| format!(" (node `{n}`)")).unwrap_or_default())]
    Schema { location: String, node_id: Option<String>, message: String },
}

fn node_json(n: &RpgNode) -> Value {
    let mut meta = Map::new();
    let m = &n.metadata;
    if let Some(p) = &m.path {
        meta.insert("path".into(), json!(p));
    }
    if let Some(q) = &m.qualified_name {
        meta.insert("qualified_name".into(), json!(q));
    }
    if let Some(s) = m.span {
        meta.insert("span".into(), json!([s.start, s.end]));
    }
    if let Some(k) = m.entity_kind {
        meta.insert("entity_kind".into(), json!(k.as_str()));
    }
    if let Some(sc) = &m.grounded_scopes {
        meta.insert("grounded_scopes".into(), json!(sc.iter().collect::<Vec<_>>()));
    }
    if let Some(name) = &m.name {
        meta.insert("name".into(), json!(name));
    }
    json!({
        "id": n.id,
        "kind": n.kind.as_str(),
        "level": n.level.as_str(),
        "feature": n.feature.iter().map(FeaturePhrase::as_str).collect::<Vec<_>>(),
        "metadata": Value::Object(meta),
    })
}

pub fn to_value(g: &RpgGraph) -> Value {
    let nodes: Vec<Value> = g.nodes().map(node_json).collect();
    let feature_edges: Vec<Value> = g.feature_edges().map(|(p, c)| json!([p, c])).collect();
    let dep_edges: Vec<Value> = g
        .dep_edges()
        .iter()
        .map(|e| json!({"src": e.src, "dst": e.dst, "kind": e.kind.as_str()}))
        .collect();
    json!({
        "version": g.version(),
        "nodes": nodes,
        "feature_edges": feature_edges,
        "dep_edges": dep_edges,
    })
}

/// Canonical bytes of a graph (pretty JSON, trailing newline).
pub fn serialize(g: &RpgGraph) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&to_value(g)).expect("JSON values always encode");
    out.push(b'\n');
    out
}

struct Ctx<'a> {
    location: String,
    node_id: Option<&'a str>,
}

impl Ctx<'_> {
    fn err(&self, field: &str, message: impl Into<String>) -> DecodeError {
        DecodeError::Schema {
            location: format!("{}/{}", self.location, field),
            node_id: self.node_id.map(str::to_string),
            message: message.into(),
        }
    }
}

fn get_str<'v>(obj: &'v Map<String, Value>, field: &str, ctx: &Ctx<'_>) -> Result<&'v str, DecodeError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(ctx.err(field, "expected a string")),
        None => Err(ctx.err(field, format!("missing `{field}`"))),
    }
}

fn opt_str(obj: &Map<String, Value>, field: &str, ctx: &Ctx<'_>) -> Result<Option<String>, DecodeError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(ctx.err(field, "expected a string")),
    }
}

fn decode_node(v: &Value, idx: usize) -> Result<RpgNode, DecodeError> {
    let base = Ctx { location: format!("/nodes/{idx}"), node_id: None };
    let obj = v.as_object().ok_or_else(|| base.err("", "expected an object"))?;
    let id = get_str(obj, "id", &base)?;
    let ctx = Ctx { location: base.location.clone(), node_id: Some(id) };
    let kind = match get_str(obj, "kind", &ctx)? {
        "high" => NodeKind::High,
        "low" => NodeKind::Low,
        other => return Err(ctx.err("kind", format!("unknown kind `{other}`"))),
    };
    let level_s = get_str(obj, "level", &ctx)?;
    let level = Level::parse(level_s).ok_or_else(|| ctx.err("level", format!("unknown level `{level_s}`")))?;
    let feature = match obj.get("feature") {
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let s = p.as_str().ok_or_else(|| ctx.err(&format!("feature/{i}"), "expected a string"))?;
                let phrase = FeaturePhrase::new(s)
                    .map_err(|e| ctx.err(&format!("feature/{i}"), e.to_string()))?;
                if phrase.as_str() != s {
                    return Err(ctx.err(&format!("feature/{i}"), format!("`{s}` is not normalized")));
                }
                Ok(phrase)
            })
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err(ctx.err("feature", "expected an array")),
        None => return Err(ctx.err("feature", "missing `feature`")),
    };
    let meta_obj = match obj.get("metadata") {
        Some(Value::Object(m)) => m,
        Some(_) => return Err(ctx.err("metadata", "expected an object")),
        None => return Err(ctx.err("metadata", "missing `metadata`")),
    };
    let mctx = Ctx { location: format!("{}/metadata", ctx.location), node_id: Some(id) };
    for key in meta_obj.keys() {
        if !matches!(key.as_str(), "path" | "qualified_name" | "span" | "entity_kind" | "grounded_scopes" | "name") {
            return Err(mctx.err(key, format!("unknown metadata key `{key}`")));
        }
    }
    let span = match meta_obj.get("span") {
        None | Some(Value::Null) => None,
        Some(Value::Array(a)) if a.len() == 2 => {
            let s = a[0].as_u64().ok_or_else(|| mctx.err("span/0", "expected an integer"))?;
            let e = a[1].as_u64().ok_or_else(|| mctx.err("span/1", "expected an integer"))?;
            if s > e {
                return Err(mctx.err("span", "start after end"));
            }
            Some(Span::new(s as u32, e as u32))
        }
        Some(_) => return Err(mctx.err("span", "expected [start, end]")),
    };
    let entity_kind = match opt_str(meta_obj, "entity_kind", &mctx)? {
        None => None,
        Some(k) => Some(EntityKind::parse(&k).ok_or_else(|| mctx.err("entity_kind", format!("unknown entity kind `{k}`")))?),
    };
    let grounded_scopes = match meta_obj.get("grounded_scopes") {
        None | Some(Value::Null) => None,
        Some(Value::Array(a)) => Some(
            a.iter()
                .enumerate()
                .map(|(i, s)| {
                    s.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| mctx.err(&format!("grounded_scopes/{i}"), "expected a string"))
                })
                .collect::<Result<_, _>>()?,
        ),
        Some(_) => return Err(mctx.err("grounded_scopes", "expected an array")),
    };
    let metadata = NodeMeta {
        path: opt_str(meta_obj, "path", &mctx)?,
        qualified_name: opt_str(meta_obj, "qualified_name", &mctx)?,
        span,
        entity_kind,
        grounded_scopes,
        name: opt_str(meta_obj, "name", &mctx)?,
    };
    Ok(RpgNode { id: id.to_string(), kind, level, feature, metadata })
}

/// Parse a graph document. Structural problems that a graph can represent
/// (dangling edges, broken forests) are left for validation; only malformed
/// documents are rejected here.
pub fn deserialize(bytes: &[u8]) -> Result<RpgGraph, DecodeError> {
    let v: Value = serde_json::from_slice(bytes).map_err(|e| DecodeError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let root = Ctx { location: String::new(), node_id: None };
    let obj = v.as_object().ok_or_else(|| root.err("", "expected an object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "version" | "nodes" | "feature_edges" | "dep_edges") {
            return Err(root.err(key, format!("unknown top-level key `{key}`")));
        }
    }
    let version = obj
        .get("version")
        .ok_or_else(|| root.err("version", "missing `version`"))?
        .as_u64()
        .ok_or_else(|| root.err("version", "expected a non-negative integer"))?;
    let array = |field: &str| -> Result<&Vec<Value>, DecodeError> {
        obj.get(field)
            .ok_or_else(|| root.err(field, format!("missing `{field}`")))?
            .as_array()
            .ok_or_else(|| root.err(field, "expected an array"))
    };
    let mut g = RpgGraph::new();
    for (i, n) in array("nodes")?.iter().enumerate() {
        let node = decode_node(n, i)?;
        if g.contains(&node.id) {
            return Err(DecodeError::Schema {
                location: format!("/nodes/{i}/id"),
                node_id: Some(node.id.clone()),
                message: "duplicate node id".into(),
            });
        }
        g.insert_unchecked(node);
    }
    for (i, e) in array("feature_edges")?.iter().enumerate() {
        let ctx = Ctx { location: format!("/feature_edges/{i}"), node_id: None };
        match e.as_array().map(Vec::as_slice) {
            Some([Value::String(p), Value::String(c)]) => g.link_unchecked(p, c),
            _ => return Err(ctx.err("", "expected [parent_id, child_id]")),
        }
    }
    for (i, e) in array("dep_edges")?.iter().enumerate() {
        let ctx = Ctx { location: format!("/dep_edges/{i}"), node_id: None };
        let o = e.as_object().ok_or_else(|| ctx.err("", "expected an object"))?;
        let kind_s = get_str(o, "kind", &ctx)?;
        let kind = DepKind::parse(kind_s).ok_or_else(|| ctx.err("kind", format!("unknown edge kind `{kind_s}`")))?;
        g.add_dep_edge(DepLink { src: get_str(o, "src", &ctx)?.into(), dst: get_str(o, "dst", &ctx)?.into(), kind });
    }
    g.set_version(version);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_index::EntityRef;

    #[test]
    fn empty_graph_document() {
        let bytes = serialize(&RpgGraph::new());
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "{\n  \"dep_edges\": [],\n  \"feature_edges\": [],\n  \"nodes\": [],\n  \"version\": 0\n}\n"
        );
    }

    #[test]
    fn round_trip() {
        let mut g = RpgGraph::new();
        let a = RpgNode::high(Level::Area, "Io", &["Io"]);
        let aid = a.id.clone();
        g.add_node(a, None).unwrap();
        g.node_mut(&aid).unwrap().metadata.grounded_scopes = Some(["io".to_string()].into());
        let f = RpgNode::low(&EntityRef::file("io/x.py", Span::new(1, 9)), vec![FeaturePhrase::new("read x").unwrap()]);
        let fid = f.id.clone();
        g.insert_unchecked(f);
        g.link_unchecked(&aid, &fid);
        g.add_dep_edge(DepLink { src: fid.clone(), dst: fid, kind: DepKind::Invokes });
        let bytes = serialize(&g);
        let back = deserialize(&bytes).unwrap();
        assert_eq!(back, g);
        assert_eq!(serialize(&back), bytes);
    }

    #[test]
    fn missing_kind_names_node() {
        let doc = r#"{"version":0,"nodes":[{"id":"h-1","level":"area","feature":[],"metadata":{}}],"feature_edges":[],"dep_edges":[]}"#;
        let err = deserialize(doc.as_bytes()).unwrap_err();
        match &err {
            DecodeError::Schema { node_id, location, .. } => {
                assert_eq!(node_id.as_deref(), Some("h-1"));
                assert_eq!(location, "/nodes/0/kind");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("h-1"));
    }

    #[test]
    fn syntax_errors_have_location() {
        let err = deserialize(b"{\n  \"version\": ,\n}").unwrap_err();
        assert!(matches!(err, DecodeError::Syntax { line: 2, .. }));
    }
}
