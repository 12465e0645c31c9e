//! Fairness auditing and mitigation for binary credit-risk models.
//!
//! Outcome `1` means the applicant defaults. A decision is favorable
//! (an approval) when the risk score falls strictly below the threshold.

pub mod data;
pub mod error;
pub mod lda;
pub mod learners;
pub mod metrics;
pub mod mitigate;
pub mod stats;

pub use error::{Error, Result};
