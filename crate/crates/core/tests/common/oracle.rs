//! Brute-force reference computations, written independently of the
//! library: plain strings, nested loops, no shared helpers.

use std::collections::{BTreeMap, BTreeSet};

pub type Rows = Vec<(Vec<String>, bool)>;

/// â(w) by counting sentences.
pub fn word_scores(rows: &Rows) -> BTreeMap<String, f64> {
    let vocab: BTreeSet<&String> = rows.iter().flat_map(|(t, _)| t).collect();
    let mut out = BTreeMap::new();
    for w in vocab {
        let mut with = 0usize;
        let mut attr = 0usize;
        for (t, label) in rows {
            if t.contains(w) {
                with += 1;
                if *label {
                    attr += 1;
                }
            }
        }
        out.insert(w.clone(), attr as f64 / with as f64);
    }
    out
}

/// Max-word sentence estimate, 0 for the empty sentence and unseen words.
pub fn max_word(scores: &BTreeMap<String, f64>, tokens: &[String]) -> f64 {
    let mut best = 0.0f64;
    let mut first = true;
    for t in tokens {
        let s = scores.get(t).copied().unwrap_or(0.0);
        if first || s > best {
            best = s;
            first = false;
        }
    }
    best
}

pub fn vocabulary(rows: &Rows) -> Vec<String> {
    let set: BTreeSet<String> = rows.iter().flat_map(|(t, _)| t.iter().cloned()).collect();
    set.into_iter().collect()
}

/// ATE of `word` by a triple loop over sentences, positions and
/// replacement words, uniform over `vocab` minus the masked word. With
/// `filter`, replacements must score strictly below the rest of the
/// sentence (0 if nothing is left); if none do, the lowest-scoring
/// candidate (then alphabetical) is used alone.
pub fn ate(
    f: &dyn Fn(&[String]) -> f64,
    rows: &Rows,
    vocab: &[String],
    word: &str,
    filter: Option<&BTreeMap<String, f64>>,
) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (tokens, _) in rows {
        for i in 0..tokens.len() {
            if tokens[i] != word {
                continue;
            }
            let mut candidates: Vec<&String> = vocab.iter().filter(|v| v.as_str() != word).collect();
            if let Some(scores) = filter {
                let mut context = 0.0f64;
                let mut any = false;
                for (j, t) in tokens.iter().enumerate() {
                    if j != i {
                        let s = scores.get(t).copied().unwrap_or(0.0);
                        context = if any { context.max(s) } else { s };
                        any = true;
                    }
                }
                let kept: Vec<&String> = candidates
                    .iter()
                    .copied()
                    .filter(|c| scores.get(*c).copied().unwrap_or(0.0) < context)
                    .collect();
                candidates = if kept.is_empty() {
                    let mut best = candidates[0];
                    for c in &candidates {
                        let (a, b) = (scores.get(*c).copied().unwrap_or(0.0), scores.get(best).copied().unwrap_or(0.0));
                        if a < b || (a == b && c.as_str() < best.as_str()) {
                            best = c;
                        }
                    }
                    vec![best]
                } else {
                    kept
                };
            }
            let original = f(tokens);
            let mut inner = 0.0;
            for c in &candidates {
                let mut swapped = tokens.clone();
                swapped[i] = (*c).clone();
                inner += f(&swapped);
            }
            sum += original - inner / candidates.len() as f64;
            count += 1;
        }
    }
    sum / count as f64
}
