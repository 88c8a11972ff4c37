//! Per-stage request and token accounting, plus optional payload recording.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::batch::estimate_tokens;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAccount {
    pub request_count: u64,
    pub prompt_tokens_est: u64,
    pub completion_tokens_est: u64,
}

impl TokenAccount {
    pub fn total_tokens(&self) -> u64 {
        self.prompt_tokens_est + self.completion_tokens_est
    }

    pub fn add(&mut self, other: &TokenAccount) {
        self.request_count += other.request_count;
        self.prompt_tokens_est += other.prompt_tokens_est;
        self.completion_tokens_est += other.completion_tokens_est;
    }

    /// Field-wise `self - earlier`; accounts only grow, so this never underflows
    /// for snapshots taken from the same meter.
    pub fn since(&self, earlier: &TokenAccount) -> TokenAccount {
        TokenAccount {
            request_count: self.request_count - earlier.request_count,
            prompt_tokens_est: self.prompt_tokens_est - earlier.prompt_tokens_est,
            completion_tokens_est: self.completion_tokens_est - earlier.completion_tokens_est,
        }
    }
}

/// One prompt as it was (or would have been) sent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedPayload {
    pub stage: String,
    pub operation: String,
    pub prompt: String,
}

#[derive(Debug, Default)]
struct MeterState {
    stage: String,
    accounts: BTreeMap<String, TokenAccount>,
    recording: Option<Vec<RecordedPayload>>,
}

/// Thread-safe accounting shared by every provider backend.
#[derive(Debug)]
pub struct Meter {
    state: Mutex<MeterState>,
}

impl Default for Meter {
    fn default() -> Self {
        Self::new()
    }
}

impl Meter {
    pub fn new() -> Self {
        Self {
            state: Mutex::new(MeterState { stage: "default".into(), ..Default::default() }),
        }
    }

    /// Subsequent requests are charged to `stage`.
    pub fn enter_stage(&self, stage: &str) {
        self.lock().stage = stage.to_string();
    }

    pub fn stage(&self) -> String {
        self.lock().stage.clone()
    }

    /// Start keeping a copy of every prompt.
    pub fn start_recording(&self) {
        let mut st = self.lock();
        if st.recording.is_none() {
            st.recording = Some(Vec::new());
        }
    }

    pub fn take_recorded(&self) -> Vec<RecordedPayload> {
        self.lock().recording.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn charge(&self, operation: &str, prompt: &str, completion: &str) {
        let mut st = self.lock();
        let stage = st.stage.clone();
        let acct = st.accounts.entry(stage.clone()).or_default();
        acct.request_count += 1;
        acct.prompt_tokens_est += estimate_tokens(prompt) as u64;
        acct.completion_tokens_est += estimate_tokens(completion) as u64;
        if let Some(rec) = st.recording.as_mut() {
            rec.push(RecordedPayload {
                stage,
                operation: operation.to_string(),
                prompt: prompt.to_string(),
            });
        }
    }

    pub fn account(&self, stage: &str) -> TokenAccount {
        self.lock().accounts.get(stage).copied().unwrap_or_default()
    }

    pub fn accounts(&self) -> BTreeMap<String, TokenAccount> {
        self.lock().accounts.clone()
    }

    pub fn total(&self) -> TokenAccount {
        let mut t = TokenAccount::default();
        for a in self.lock().accounts.values() {
            t.add(a);
        }
        t
    }

    /// Zero one stage's counters. Called only when a stage starts over.
    pub fn reset_stage(&self, stage: &str) {
        self.lock().accounts.remove(stage);
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, MeterState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}
