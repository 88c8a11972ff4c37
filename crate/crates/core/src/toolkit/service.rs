//! Line-delimited JSON service: one request per input line, one response
//! per output line.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::SystemTime;

use super::{handle_line, Snapshot};
use crate::graph::deserialize;

/// Holds the current snapshot. Readers clone an `Arc` and keep answering
/// from it even while a newer version is published.
#[derive(Debug, Default)]
pub struct SnapshotStore {
    current: RwLock<Arc<Snapshot>>,
    watch: Option<Watch>,
}

#[derive(Debug)]
struct Watch {
    graph_path: PathBuf,
    repo_root: PathBuf,
    min_similarity: f64,
    seen: Mutex<Option<SystemTime>>,
}

fn mtime(p: &Path) -> Option<SystemTime> {
    std::fs::metadata(p).and_then(|m| m.modified()).ok()
}

impl SnapshotStore {
    pub fn new(snap: Snapshot) -> Self {
        Self { current: RwLock::new(Arc::new(snap)), watch: None }
    }

    /// Serve `graph_path`, reloading it whenever the file changes on disk.
    pub fn watching(graph_path: &Path, repo_root: &Path, min_similarity: f64) -> Result<Self, String> {
        let text = std::fs::read(graph_path).map_err(|e| format!("{}: {e}", graph_path.display()))?;
        let graph = deserialize(&text).map_err(|e| format!("{}: {e}", graph_path.display()))?;
        let snap = Snapshot::load(graph, repo_root).with_min_similarity(min_similarity);
        Ok(Self {
            current: RwLock::new(Arc::new(snap)),
            watch: Some(Watch {
                graph_path: graph_path.to_path_buf(),
                repo_root: repo_root.to_path_buf(),
                min_similarity,
                seen: Mutex::new(mtime(graph_path)),
            }),
        })
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock").clone()
    }

    /// Swap in a new snapshot; requests already running keep the old one.
    pub fn publish(&self, snap: Snapshot) {
        *self.current.write().expect("snapshot lock") = Arc::new(snap);
    }

    /// Reload the watched graph file if it changed. A file that fails to
    /// parse (for example mid-write) keeps the previous snapshot.
    pub fn refresh(&self) {
        let Some(w) = &self.watch else { return };
        let now = mtime(&w.graph_path);
        let mut seen = w.seen.lock().expect("watch lock");
        if now == *seen {
            return;
        }
        let Ok(text) = std::fs::read(&w.graph_path) else { return };
        match deserialize(&text) {
            Ok(graph) => {
                self.publish(Snapshot::load(graph, &w.repo_root).with_min_similarity(w.min_similarity));
                *seen = now;
                log::info!("reloaded {}", w.graph_path.display());
            }
            Err(e) => log::warn!("keeping previous graph: {e}"),
        }
    }
}

/// Answer every request line from `input` until end of stream.
pub fn serve_lines<R: BufRead, W: Write>(store: &SnapshotStore, input: R, mut output: W) -> std::io::Result<usize> {
    let mut count = 0;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        store.refresh();
        let snap = store.snapshot();
        let resp = handle_line(&snap, &line);
        serde_json::to_writer(&mut output, &resp)?;
        output.write_all(b"\n")?;
        output.flush()?;
        count += 1;
    }
    Ok(count)
}

/// Accept connections on `addr`, one thread per connection.
pub fn serve_tcp<A: ToSocketAddrs>(store: Arc<SnapshotStore>, addr: A) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    log::info!("listening on {}", listener.local_addr()?);
    for conn in listener.incoming() {
        let conn = conn?;
        let store = store.clone();
        std::thread::spawn(move || {
            let reader = match conn.try_clone() {
                Ok(c) => BufReader::new(c),
                Err(e) => return log::warn!("connection: {e}"),
            };
            if let Err(e) = serve_lines(&store, reader, conn) {
                log::warn!("connection: {e}");
            }
        });
    }
    Ok(())
}
