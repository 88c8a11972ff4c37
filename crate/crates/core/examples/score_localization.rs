//! Score predicted edit locations against gold locations.

use repograph::evalkit::{score_records, Granularity, Record, ScoreOptions};

fn rec(id: &str, gold: &[&str], predictions: &[&str]) -> Record {
    Record {
        instance_id: id.into(),
        gold: gold.iter().map(|s| s.to_string()).collect(),
        predictions: predictions.iter().map(|s| s.to_string()).collect(),
    }
}

fn main() {
    let gold = vec![
        rec("issue-1", &["pkg/io.py:Reader.__init__"], &[]),
        rec("issue-2", &["pkg/core.py:solve", "pkg/core.py:Solver.step"], &[]),
        rec("issue-3", &["pkg/util.py:clamp"], &[]),
    ];
    let pred = vec![
        // The constructor and its class are the same location.
        rec("issue-1", &[], &["pkg/io.py:Reader", "pkg/io.py:Writer"]),
        rec("issue-2", &[], &["pkg/core.py:helper", "pkg/core.py:solve", "pkg/core.py:solve"]),
        rec("issue-3", &[], &["pkg/other.py:clamp", "pkg/util.py"]),
        rec("issue-9", &[], &["pkg/none.py:x"]),
    ];

    for g in [Granularity::Function, Granularity::File] {
        for top_n in [None, Some(1)] {
            let r = score_records(&gold, &pred, g, ScoreOptions { top_n }).unwrap();
            println!(
                "{g:?} top_n={top_n:?}: acc@1 {:.3}  acc@5 {:.3}  precision {:.3}  recall {:.3}  (n={})",
                r.acc_at_1, r.acc_at_5, r.precision, r.recall, r.n
            );
        }
    }
    let r = score_records(&gold, &pred, Granularity::Function, ScoreOptions::default()).unwrap();
    println!("\nunmatched: {:?}", r.unmatched);
    for w in &r.warnings {
        println!("warning: {w}");
    }
}
