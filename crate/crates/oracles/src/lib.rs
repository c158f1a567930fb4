//! Deliberately naive re-implementations used as test oracles.
//!
//! Nothing here shares code with the production crates. Each function follows
//! the textbook definition as directly as possible, trading speed for
//! obviousness.

/// All contiguous n-grams as owned vectors, in order.
pub fn ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    if n == 0 || tokens.len() < n {
        return out;
    }
    for i in 0..=tokens.len() - n {
        out.push(tokens[i..i + n].to_vec());
    }
    out
}

fn count_in(list: &[Vec<String>], item: &[String]) -> usize {
    list.iter().filter(|g| g.as_slice() == item).count()
}

/// Clipped n-gram matches by pairwise scanning.
pub fn clipped_matches(hyp: &[String], reference: &[String], n: usize) -> usize {
    let h = ngrams(hyp, n);
    let r = ngrams(reference, n);
    let mut seen: Vec<Vec<String>> = Vec::new();
    let mut total = 0;
    for g in &h {
        if seen.contains(g) {
            continue;
        }
        seen.push(g.clone());
        total += count_in(&h, g).min(count_in(&r, g));
    }
    total
}

pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    let mut sa = a.to_vec();
    sa.sort();
    sa.dedup();
    let mut sb = b.to_vec();
    sb.sort();
    sb.dedup();
    let inter = sa.iter().filter(|x| sb.contains(x)).count();
    let mut all = sa.clone();
    all.extend(sb.iter().cloned());
    all.sort();
    all.dedup();
    if all.is_empty() {
        1.0
    } else {
        inter as f64 / all.len() as f64
    }
}

pub fn distinct_n(texts: &[Vec<String>], n: usize) -> f64 {
    let mut all: Vec<Vec<String>> = Vec::new();
    for t in texts {
        all.extend(ngrams(t, n));
    }
    let total = all.len();
    if total == 0 {
        return 0.0;
    }
    all.sort();
    all.dedup();
    all.len() as f64 / total as f64
}

/// Dense tf-idf cosine over a sorted vocabulary.
pub fn tfidf_cosine(hyp: &[String], reference: &[String], corpus: &[Vec<String>]) -> f64 {
    let mut vocab: Vec<String> = hyp.iter().chain(reference.iter()).cloned().collect();
    vocab.sort();
    vocab.dedup();
    let n_docs = corpus.len() as f64;
    let idf: Vec<f64> = vocab
        .iter()
        .map(|term| {
            let df = corpus.iter().filter(|d| d.contains(term)).count() as f64;
            ((1.0 + n_docs) / (1.0 + df)).ln() + 1.0
        })
        .collect();
    let vec_of = |doc: &[String]| -> Vec<f64> {
        vocab
            .iter()
            .zip(&idf)
            .map(|(term, w)| doc.iter().filter(|t| *t == term).count() as f64 * w)
            .collect()
    };
    let a = vec_of(hyp);
    let b = vec_of(reference);
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
}

/// Corpus BLEU-4 (x100) from pooled counts, no smoothing. Returns 0 when any
/// pooled precision is zero.
pub fn pooled_corpus_bleu(pairs: &[(Vec<String>, Vec<String>)]) -> f64 {
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let mut matches = 0usize;
        let mut total = 0usize;
        for (h, r) in pairs {
            matches += clipped_matches(h, r, n);
            total += ngrams(h, n).len();
        }
        if matches == 0 {
            return 0.0;
        }
        log_sum += (matches as f64 / total as f64).ln();
    }
    let c: usize = pairs.iter().map(|(h, _)| h.len()).sum();
    let r: usize = pairs.iter().map(|(_, r)| r.len()).sum();
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    100.0 * bp * (log_sum / 4.0).exp()
}

/// Word-level Levenshtein distance, plain full-table recursion.
pub fn levenshtein(a: &[String], b: &[String]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 0..=a.len() {
        for j in 0..=b.len() {
            d[i][j] = if i == 0 {
                j
            } else if j == 0 {
                i
            } else {
                let cost = usize::from(a[i - 1] != b[j - 1]);
                (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost)
            };
        }
    }
    d[a.len()][b.len()]
}

/// Minimum over all sequences of up to `max_shifts` arbitrary block moves of
/// (number of moves + Levenshtein distance). Exponential; tiny inputs only.
pub fn optimal_shift_edits(hyp: &[String], reference: &[String], max_shifts: usize) -> usize {
    let mut best = levenshtein(hyp, reference);
    let mut frontier = vec![hyp.to_vec()];
    for depth in 1..=max_shifts {
        let mut next = Vec::new();
        for seq in &frontier {
            for start in 0..seq.len() {
                for len in 1..=seq.len() - start {
                    let mut rest = seq.clone();
                    let block: Vec<String> = rest.drain(start..start + len).collect();
                    for at in 0..=rest.len() {
                        if at == start {
                            continue;
                        }
                        let mut moved = rest.clone();
                        for (k, tok) in block.iter().enumerate() {
                            moved.insert(at + k, tok.clone());
                        }
                        best = best.min(depth + levenshtein(&moved, reference));
                        next.push(moved);
                    }
                }
            }
        }
        next.sort();
        next.dedup();
        frontier = next;
    }
    best
}

/// Classification metrics straight from the confusion-matrix definitions.
/// Undefined ratios are 0.
pub fn classification(tp: f64, fp: f64, tn: f64, fn_: f64) -> [f64; 6] {
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let accuracy = div(tp + tn, tp + fp + tn + fn_);
    let precision = div(tp, tp + fp);
    let recall = div(tp, tp + fn_);
    let f1 = div(2.0 * precision * recall, precision + recall);
    let specificity = div(tn, tn + fp);
    let mcc = div(
        tp * tn - fp * fn_,
        ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt(),
    );
    [accuracy, precision, recall, f1, specificity, mcc]
}

/// Cohen's kappa from an explicit k x k contingency table.
pub fn cohens_kappa(a: &[usize], b: &[usize], categories: usize) -> f64 {
    let n = a.len() as f64;
    let mut table = vec![vec![0f64; categories]; categories];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1.0;
    }
    let po: f64 = (0..categories).map(|i| table[i][i]).sum::<f64>() / n;
    let pe: f64 = (0..categories)
        .map(|i| {
            let row: f64 = table[i].iter().sum();
            let col: f64 = (0..categories).map(|r| table[r][i]).sum();
            row * col
        })
        .sum::<f64>()
        / (n * n);
    if pe == 1.0 {
        0.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

/// Mann-Whitney U of `a` by pairwise comparison (ties count one half).
pub fn mann_whitney_u_pairwise(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for x in a {
        for y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Exact two-sided permutation p-value by enumerating every way of choosing
/// which pooled observations belong to the first group:
/// `min(1, 2 * min(P(U <= u_obs), P(U >= u_obs)))`.
pub fn mann_whitney_exact_by_enumeration(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let u_obs = mann_whitney_u_pairwise(a, b);
    let mut le = 0usize;
    let mut ge = 0usize;
    let mut total = 0usize;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let mut ga = Vec::new();
        let mut gb = Vec::new();
        for (i, v) in pooled.iter().enumerate() {
            if mask & (1 << i) != 0 {
                ga.push(*v);
            } else {
                gb.push(*v);
            }
        }
        let u = mann_whitney_u_pairwise(&ga, &gb);
        total += 1;
        if u <= u_obs + 1e-9 {
            le += 1;
        }
        if u >= u_obs - 1e-9 {
            ge += 1;
        }
    }
    let p = (2.0 * (le.min(ge) as f64) / total as f64).min(1.0);
    (u_obs, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn enumeration_small_case() {
        let (u, p) = mann_whitney_exact_by_enumeration(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        assert_eq!(u, 0.0);
        assert!((p - 0.1).abs() < 1e-12);
    }

    #[test]
    fn optimal_shift_examples() {
        assert_eq!(optimal_shift_edits(&w("c d a b"), &w("a b c d"), 2), 1);
        assert_eq!(optimal_shift_edits(&w("a b c d"), &w("a x c d"), 2), 1);
    }

    #[test]
    fn classification_perfect() {
        assert_eq!(classification(5.0, 0.0, 5.0, 0.0), [1.0; 6]);
    }
}
