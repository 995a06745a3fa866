use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, Dataset, Result};

/// Stratified train/test split.
///
/// The train set receives `round(train_fraction * n)` examples, apportioned
/// across the two classes by largest remainder, so each class is within one
/// example of its exact share. Both sides must contain both classes.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::InvalidParameter(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = dataset.len();
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, ex) in dataset.examples.iter().enumerate() {
        by_class[usize::from(ex.label)].push(i);
    }

    let total_train = (train_fraction * n as f64).round() as usize;
    let ideal: Vec<f64> = by_class.iter().map(|c| train_fraction * c.len() as f64).collect();
    let mut take: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let mut leftover = total_train.saturating_sub(take.iter().sum());
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &c in order.iter().cycle().take(2) {
        if leftover == 0 {
            break;
        }
        if take[c] < by_class[c].len() {
            take[c] += 1;
            leftover -= 1;
        }
    }

    for (c, members) in by_class.iter().enumerate() {
        if take[c] == 0 || take[c] >= members.len() {
            return Err(CorpusError::ClassTooSmall(format!(
                "class {c} has {} examples; a {:.2} split leaves one side without it",
                members.len(),
                train_fraction
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::with_capacity(total_train);
    let mut test_idx = Vec::with_capacity(n - total_train);
    for (c, members) in by_class.iter().enumerate() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        train_idx.extend_from_slice(&shuffled[..take[c]]);
        test_idx.extend_from_slice(&shuffled[take[c]..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let part = |idx: &[usize], suffix: &str| -> Result<Dataset> {
        let mut provenance = dataset.provenance.clone();
        provenance.seed = Some(seed);
        Dataset::new(
            format!("{}-{suffix}", dataset.name),
            idx.iter().map(|&i| dataset.examples[i].clone()).collect(),
            provenance,
        )
    };
    Ok((part(&train_idx, "train")?, part(&test_idx, "test")?))
}
