//! Token estimation and budget-bounded batching.

use serde::{Deserialize, Serialize};

/// Per-request payload limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderBudget {
    pub max_payload_tokens: usize,
}

impl Default for ProviderBudget {
    fn default() -> Self {
        Self { max_payload_tokens: 12_000 }
    }
}

/// Characters divided by four, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("item `{name}` needs {size} tokens but the batch budget is {budget}")]
pub struct OversizeItem {
    pub name: String,
    pub size: usize,
    pub budget: usize,
}

/// Partition items into batches with greedy first-fit in the given order.
///
/// `items` holds `(name, estimated_tokens)`; the result lists item indices per
/// batch. Each item lands in the first open batch with room for it.
pub fn make_batches<S: AsRef<str>>(
    items: &[(S, usize)],
    budget: usize,
) -> Result<Vec<Vec<usize>>, OversizeItem> {
    let mut batches: Vec<(usize, Vec<usize>)> = Vec::new();
    for (idx, (name, size)) in items.iter().enumerate() {
        if *size > budget {
            return Err(OversizeItem { name: name.as_ref().to_string(), size: *size, budget });
        }
        match batches.iter_mut().find(|(used, _)| used + size <= budget) {
            Some((used, members)) => {
                *used += size;
                members.push(idx);
            }
            None => batches.push((*size, vec![idx])),
        }
    }
    Ok(batches.into_iter().map(|(_, m)| m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn estimator_rounds_up() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abc"), 1);
        assert_eq!(estimate_tokens("abcd"), 1);
        assert_eq!(estimate_tokens("abcde"), 2);
    }

    #[test]
    fn sixty_each_do_not_share() {
        let items = [("a", 60), ("b", 60), ("c", 60)];
        assert_eq!(make_batches(&items, 100).unwrap(), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn thirty_each_share_one_batch() {
        let items = [("a", 30), ("b", 30), ("c", 30)];
        assert_eq!(make_batches(&items, 100).unwrap(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn first_fit_backfills_earlier_batches() {
        let items = [("a", 70), ("b", 50), ("c", 30)];
        assert_eq!(make_batches(&items, 100).unwrap(), vec![vec![0, 2], vec![1]]);
    }

    #[test]
    fn oversize_item_is_named() {
        let err = make_batches(&[("small", 5), ("huge", 500)], 100).unwrap_err();
        assert_eq!(err.name, "huge");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn partition_and_budget_hold(sizes in prop::collection::vec(1usize..=100, 0..40), budget in 100usize..400) {
            let items: Vec<(String, usize)> =
                sizes.iter().enumerate().map(|(i, s)| (format!("i{i}"), *s)).collect();
            let batches = make_batches(&items, budget).unwrap();
            let mut seen: Vec<usize> = batches.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..items.len()).collect::<Vec<_>>());
            for b in &batches {
                prop_assert!(!b.is_empty());
                prop_assert!(b.iter().map(|&i| items[i].1).sum::<usize>() <= budget);
                prop_assert!(b.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}
