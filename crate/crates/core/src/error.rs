use thiserror::Error;

use crate::data::Group;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    /// Malformed CSV cell. `row` is the 1-based data row (header excluded).
    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("dataset has no data rows")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("group labels are linked to a different dataset")]
    DatasetMismatch,

    #[error("{0} group has no rows")]
    EmptyGroup(Group),

    #[error("both groups must be present")]
    SingleGroup,

    #[error("{group} group has no rows with outcome {outcome}")]
    MissingOutcomeClass { group: Group, outcome: u8 },

    #[error("adverse impact ratio undefined: control group receives no favorable decisions")]
    UndefinedAir,

    #[error("training data contains a single outcome class")]
    SingleClass,

    #[error("{component} loss became non-finite at epoch {epoch}")]
    Divergence { component: String, epoch: usize },

    #[error("feature `{0}` is not present in the dataset")]
    MissingFeature(String),

    #[error("score {value} at row {row} is outside [0, 1]")]
    InvalidScore { row: usize, value: f64 },

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
