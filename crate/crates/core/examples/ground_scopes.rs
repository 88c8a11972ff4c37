//! Directory scopes for sets of leaf directories.

use repograph::extractor::compute_lca;

fn main() {
    let cases: [(&[&str], usize); 6] = [
        (&["src/auth/login", "src/auth/token", "src/auth"], 1),
        (&["x/1", "y/2"], 1),
        (&["pkg/io/csv", "pkg/io/json", "pkg/model"], 1),
        (&["pkg/io/csv", "pkg/io/json", "pkg/model"], 2),
        (&["", "lib/util"], 1),
        (&["a/b/c/d", "a/b/c/e"], 1),
    ];
    for (dirs, k) in cases {
        let scopes = compute_lca(dirs, k).unwrap();
        println!("{dirs:?} (min depth {k}) -> {:?}", scopes.scopes);
    }
    match compute_lca(["../outside"], 1) {
        Ok(s) => println!("unexpected: {:?}", s.scopes),
        Err(e) => println!("rejected: {e}"),
    }
}
