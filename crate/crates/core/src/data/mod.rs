//! Tabular datasets, out-of-band group labels, CSV I/O and the synthetic
//! scenario generator.
//!
//! A [`Dataset`] never carries group membership. Labels live in a separate
//! [`GroupLabels`] value that is linked to the dataset it was built for, so
//! nothing that consumes a `Dataset` (in particular every learner) can read
//! them.

mod csv_io;
mod scenario;
mod split;

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, read_csv, write_csv, LoadOptions};
pub use scenario::{generate_scenario, ScenarioConfig, PROXY_FEATURE};
pub use split::{split, LabeledData};

/// Protected-class membership. Two groups only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Protected,
    Control,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Protected => "protected",
            Group::Control => "control",
        }
    }

    pub fn other(self) -> Group {
        match self {
            Group::Protected => Group::Control,
            Group::Control => Group::Protected,
        }
    }

    pub fn parse(s: &str) -> Option<Group> {
        match s {
            "protected" => Some(Group::Protected),
            "control" => Some(Group::Control),
            _ => None,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Feature matrix (column-major) plus binary default outcome.
///
/// Outcome polarity: `1` means "does default".
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    outcome: Vec<u8>,
    row_ids: Vec<String>,
    token: u64,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        outcome: Vec<u8>,
        row_ids: Vec<String>,
    ) -> Result<Self> {
        let n = outcome.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if feature_names.len() != columns.len() {
            return Err(Error::LengthMismatch {
                expected: feature_names.len(),
                found: columns.len(),
            });
        }
        if row_ids.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: row_ids.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate feature name `{name}`")));
            }
        }
        for (name, col) in feature_names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: col.len(),
                });
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Cell {
                    row: row + 1,
                    column: name.clone(),
                    message: "feature value is not finite".into(),
                });
            }
        }
        if let Some(row) = outcome.iter().position(|&y| y > 1) {
            return Err(Error::Cell {
                row: row + 1,
                column: "outcome".into(),
                message: format!("outcome must be 0 or 1, found {}", outcome[row]),
            });
        }
        let token = identity_token(&row_ids);
        Ok(Dataset {
            feature_names,
            columns,
            outcome,
            row_ids,
            token,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.feature_index(name).map(|i| self.columns[i].as_slice())
    }

    pub fn column_at(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn outcome(&self) -> &[u8] {
        &self.outcome
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    /// Identity token that [`GroupLabels`] use to check they belong to this dataset.
    pub fn token(&self) -> u64 {
        self.token
    }

    pub fn base_rate(&self) -> f64 {
        self.outcome.iter().map(|&y| y as usize).sum::<usize>() as f64 / self.n_rows() as f64
    }

    pub fn has_both_classes(&self) -> bool {
        let defaults = self.outcome.iter().filter(|&&y| y == 1).count();
        defaults > 0 && defaults < self.n_rows()
    }

    /// Rows in the given order. Indices must be in range.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let columns = self
            .columns
            .iter()
            .map(|col| rows.iter().map(|&r| col[r]).collect())
            .collect();
        Dataset::new(
            self.feature_names.clone(),
            columns,
            rows.iter().map(|&r| self.outcome[r]).collect(),
            rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
        )
    }

    /// Keep only the named features, in the given order.
    pub fn select_features<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let mut cols = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let col = self
                .column(name)
                .ok_or_else(|| Error::MissingFeature(name.to_string()))?;
            cols.push(col.to_vec());
        }
        let mut out = self.clone();
        out.feature_names = names.iter().map(|n| n.as_ref().to_string()).collect();
        out.columns = cols;
        Ok(out)
    }

    /// Copy of the dataset with one column's values replaced.
    pub fn with_column_values(&self, index: usize, values: Vec<f64>) -> Result<Dataset> {
        if values.len() != self.n_rows() {
            return Err(Error::LengthMismatch {
                expected: self.n_rows(),
                found: values.len(),
            });
        }
        let mut out = self.clone();
        out.columns[index] = values;
        Ok(out)
    }

    /// Same rows and features with a different outcome vector.
    pub fn with_outcome(&self, outcome: Vec<u8>) -> Result<Dataset> {
        Dataset::new(
            self.feature_names.clone(),
            self.columns.clone(),
            outcome,
            self.row_ids.clone(),
        )
    }
}

fn identity_token(row_ids: &[String]) -> u64 {
    let mut h = DefaultHasher::new();
    row_ids.len().hash(&mut h);
    for id in row_ids {
        id.hash(&mut h);
    }
    h.finish()
}

/// Group membership per row, held apart from the feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLabels {
    labels: Vec<Group>,
    dataset_token: Option<u64>,
}

impl GroupLabels {
    /// Labels not tied to any dataset (metric functions only check lengths).
    pub fn new(labels: Vec<Group>) -> Self {
        GroupLabels {
            labels,
            dataset_token: None,
        }
    }

    pub fn for_dataset(dataset: &Dataset, labels: Vec<Group>) -> Result<Self> {
        if labels.len() != dataset.n_rows() {
            return Err(Error::LengthMismatch {
                expected: dataset.n_rows(),
                found: labels.len(),
            });
        }
        Ok(GroupLabels {
            labels,
            dataset_token: Some(dataset.token()),
        })
    }

    /// Errors when the labels were built for a different dataset or have the wrong length.
    pub fn check_linked(&self, dataset: &Dataset) -> Result<()> {
        if self.labels.len() != dataset.n_rows() {
            return Err(Error::LengthMismatch {
                expected: dataset.n_rows(),
                found: self.labels.len(),
            });
        }
        match self.dataset_token {
            Some(t) if t != dataset.token() => Err(Error::DatasetMismatch),
            _ => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_slice(&self) -> &[Group] {
        &self.labels
    }

    pub fn count(&self, group: Group) -> usize {
        self.labels.iter().filter(|&&g| g == group).count()
    }

    pub fn require_both(&self) -> Result<()> {
        for g in [Group::Protected, Group::Control] {
            if self.count(g) == 0 {
                return Err(Error::EmptyGroup(g));
            }
        }
        Ok(())
    }

    /// 1.0 for protected, 0.0 for control.
    pub fn indicator(&self) -> Vec<f64> {
        self.labels
            .iter()
            .map(|&g| if g == Group::Protected { 1.0 } else { 0.0 })
            .collect()
    }

    /// Labels with protected and control exchanged.
    pub fn swapped(&self) -> GroupLabels {
        GroupLabels {
            labels: self.labels.iter().map(|g| g.other()).collect(),
            dataset_token: self.dataset_token,
        }
    }

    pub(crate) fn select_for(&self, rows: &[usize], dataset: &Dataset) -> Result<GroupLabels> {
        GroupLabels::for_dataset(dataset, rows.iter().map(|&r| self.labels[r]).collect())
    }
}
