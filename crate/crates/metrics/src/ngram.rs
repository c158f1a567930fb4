use std::collections::HashMap;
use std::hash::Hash;

/// Multiset of the order-`n` windows of `items`.
pub fn ngram_counts<T: Eq + Hash>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || items.len() < n {
        return counts;
    }
    for window in items.windows(n) {
        *counts.entry(window).or_insert(0) += 1;
    }
    counts
}

/// Size of the multiset intersection (clipped counts).
pub fn clipped_overlap<K: Eq + Hash>(hyp: &HashMap<K, usize>, reference: &HashMap<K, usize>) -> usize {
    hyp.iter()
        .map(|(gram, &count)| count.min(reference.get(gram).copied().unwrap_or(0)))
        .sum()
}

pub fn ngram_total(len: usize, n: usize) -> usize {
    (len + 1).saturating_sub(n)
}
