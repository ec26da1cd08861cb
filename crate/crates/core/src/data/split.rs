use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AlignedDataset;
use crate::error::{Error, Result};

pub const MIN_SPLIT_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
            stratified: true,
        }
    }
}

/// Train/test row indices, each sorted ascending.
///
/// The train side gets `floor(n * train_fraction)` rows. Under stratification
/// each class first gets the floor of its own share, and the rows left over
/// go to the classes with the largest fractional remainders.
pub fn split_indices(labels: &[u8], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Split(format!(
            "train fraction {} outside (0, 1)",
            spec.train_fraction
        )));
    }
    if n < MIN_SPLIT_ROWS {
        return Err(Error::Split(format!(
            "{n} rows; need at least {MIN_SPLIT_ROWS}"
        )));
    }
    let n_train = (n as f64 * spec.train_fraction).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Split(format!(
            "fraction {} leaves one side empty",
            spec.train_fraction
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);

    if spec.stratified {
        let mut classes: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
        for (i, &l) in labels.iter().enumerate() {
            classes[usize::from(l.min(1))].push(i);
        }
        let exact: Vec<f64> = classes
            .iter()
            .map(|c| c.len() as f64 * spec.train_fraction)
            .collect();
        let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut order: Vec<usize> = (0..classes.len())
            .filter(|&c| !classes[c].is_empty())
            .collect();
        order.sort_by(|&a, &b| {
            let fa = exact[a] - exact[a].floor();
            let fb = exact[b] - exact[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        let mut remaining = n_train - quota.iter().sum::<usize>();
        for &c in order.iter().cycle() {
            if remaining == 0 {
                break;
            }
            if quota[c] < classes[c].len() {
                quota[c] += 1;
                remaining -= 1;
            }
        }
        for (c, members) in classes.iter_mut().enumerate() {
            if members.is_empty() {
                continue;
            }
            if quota[c] == 0 || quota[c] == members.len() {
                return Err(Error::Split(format!(
                    "class {c} ({} rows) would be absent from the {} side",
                    members.len(),
                    if quota[c] == 0 { "train" } else { "test" }
                )));
            }
            members.shuffle(&mut rng);
            train.extend_from_slice(&members[..quota[c]]);
            test.extend_from_slice(&members[quota[c]..]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        train.extend_from_slice(&all[..n_train]);
        test.extend_from_slice(&all[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(
    dataset: &AlignedDataset,
    spec: &SplitSpec,
) -> Result<(AlignedDataset, AlignedDataset)> {
    let (train, test) = split_indices(dataset.labels(), spec)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Partitions `0..rows` into `k` validation folds whose sizes differ by at most one.
pub fn kfold(rows: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Split(format!("k = {k}; need at least 2 folds")));
    }
    if k > rows {
        return Err(Error::Split(format!("k = {k} exceeds {rows} rows")));
    }
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = rows / k;
    let extra = rows % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut validation = order[start..start + size].to_vec();
        let mut train: Vec<usize> = order[..start]
            .iter()
            .chain(&order[start + size..])
            .copied()
            .collect();
        validation.sort_unstable();
        train.sort_unstable();
        folds.push(Fold { train, validation });
        start += size;
    }
    Ok(folds)
}
