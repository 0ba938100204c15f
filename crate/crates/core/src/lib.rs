//! Manifold embeddings of data with missing entries.
//!
//! Distances are estimated from jointly observed coordinates, repaired into a
//! metric by raising entries only, and embedded with Isomap.

pub mod cli;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod masked;
pub mod matrix;
pub mod pipeline;
pub mod repair;
pub mod synthetic;
pub mod theory;

pub use error::{Error, Result};
pub use masked::{masked_euclidean, overlap_counts, Dissimilarity, MaskedDataset};
pub use matrix::SquareMatrix;
pub use repair::{check_metric, iomr_fixed_pass, repair_to_fixpoint, RepairConfig, RepairDelta, ViolationReport};
