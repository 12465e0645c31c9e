use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, GroupLabels};
use crate::error::{Error, Result};

/// A dataset together with its out-of-band group labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub data: Dataset,
    pub groups: GroupLabels,
}

impl LabeledData {
    pub fn new(data: Dataset, groups: GroupLabels) -> Result<Self> {
        groups.check_linked(&data)?;
        Ok(LabeledData { data, groups })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<LabeledData> {
        let data = self.data.select_rows(rows)?;
        let groups = self.groups.select_for(rows, &data)?;
        Ok(LabeledData { data, groups })
    }
}

/// Seeded train/test partition. Rows keep their original relative order
/// within each side.
pub fn split(
    dataset: &Dataset,
    groups: &GroupLabels,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledData, LabeledData)> {
    groups.check_linked(dataset)?;
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let n = dataset.n_rows();
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidConfig(format!(
            "train_fraction {train_fraction} on {n} rows leaves an empty partition"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, test) = order.split_at_mut(n_train);
    train.sort_unstable();
    test.sort_unstable();

    let whole = LabeledData {
        data: dataset.clone(),
        groups: groups.clone(),
    };
    Ok((whole.select_rows(train)?, whole.select_rows(test)?))
}
