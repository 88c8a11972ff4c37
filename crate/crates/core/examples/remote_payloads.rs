//! Drive the chat-completion provider with a scripted transport to see the
//! request bodies, answer parsing and retry on a malformed reply.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde_json::Value;

use repograph::code_index::{scan_repository, ScanOptions};
use repograph::extractor::{feature_requests, parse_context};
use repograph::provider::prompts::{render_parse, wrap_solution};
use repograph::provider::{
    batch_requests, estimate_tokens, normalize_feature, FeaturePhrase, ProviderBudget, RemoteConfig, RemoteProvider,
    SemanticProvider,
};

fn phrases(raw: &[&str]) -> Vec<FeaturePhrase> {
    raw.iter().map(|s| normalize_feature(s).unwrap()).collect()
}

fn main() {
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = calls.clone();
    let transport = move |body: &Value| -> Result<String, String> {
        let n = seen.fetch_add(1, Ordering::SeqCst);
        let prompt = body["messages"][0]["content"].as_str().unwrap_or("");
        println!("request {n}: model={} ~{} tokens", body["model"], estimate_tokens(prompt));
        let answer = match n {
            0 => wrap_solution("\"h-metrics\""),
            1 => "I think the drift is moderate.".to_string(),
            _ => wrap_solution("0.35"),
        };
        println!("  answer: {}", answer.replace('\n', " "));
        Ok(answer)
    };
    let provider = RemoteProvider::new(
        Box::new(transport),
        RemoteConfig { model: "local-model".into(), ..RemoteConfig::default() },
    );

    let candidates = vec![
        ("h-metrics".to_string(), phrases(&["compute regression metrics", "score predictions"])),
        ("h-utils".to_string(), phrases(&["validate input data"])),
    ];
    let routed = provider.route(&candidates, &phrases(&["compute mean absolute error"])).unwrap();
    println!("routed to {routed:?}");
    let drift = provider
        .judge_drift(&phrases(&["compute mean absolute error"]), &phrases(&["compute median absolute error"]))
        .unwrap();
    println!("drift {drift}");
    for (stage, acct) in provider.meter().accounts() {
        println!("{stage}: {} requests, ~{} prompt tokens", acct.request_count, acct.prompt_tokens_est);
    }

    // How the fixture's parsing requests split under a small budget.
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_sklearn");
    let es = scan_repository(&root, &ScanOptions::default()).unwrap();
    let paths: Vec<&str> = es.paths().collect();
    let ctx = parse_context(&paths);
    let reqs = feature_requests(&es, |_| true);
    let budget = ProviderBudget { max_payload_tokens: 2_000 };
    let batches = batch_requests(&ctx, &reqs, budget).unwrap();
    println!("\n{} parsing requests in {} batches (budget {})", reqs.len(), batches.len(), budget.max_payload_tokens);
    for b in &batches {
        let batch: Vec<_> = b.iter().map(|&i| reqs[i].clone()).collect();
        let prompt = render_parse(&ctx.repo_name, &ctx.repo_info, &batch);
        println!("  {:>2} items, ~{} tokens", batch.len(), estimate_tokens(&prompt));
    }
}
