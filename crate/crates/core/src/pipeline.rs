//! End-to-end runs: masked distances, metric repair, Isomap.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embedding::{extend_geodesics, isomap_model, out_of_sample, Embedding, GeodesicMatrix, Neighborhood};
use crate::error::{Error, Result};
use crate::masked::{masked_cross_distances, masked_euclidean, overlap_counts, zero_overlap_pairs, Dissimilarity, MaskedDataset};
use crate::repair::{RepairConfig, RepairDelta};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub neighborhood: Neighborhood,
    pub dim: usize,
    pub repair: RepairConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            neighborhood: Neighborhood::default(),
            dim: 2,
            repair: RepairConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: usize,
    pub missing_entries: usize,
    pub degenerate_rows: Vec<usize>,
    pub zero_overlap_pairs: usize,
    pub repair_iterations: usize,
    pub repair_tol: f64,
    /// Strictly positive entries in the upper triangle of the repair.
    pub repair_l0: usize,
    pub repair_max_increase: f64,
    pub components: usize,
    pub dropped_points: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub embedding: Embedding,
    /// Distances before repair.
    pub dissimilarity: Dissimilarity,
    pub repair: RepairDelta,
    /// Geodesics of the embedded component, in `embedding.kept_indices` order.
    pub geodesics: GeodesicMatrix,
    pub diagnostics: Diagnostics,
}

impl PipelineResult {
    /// The matrix the embedding was computed from.
    pub fn repaired(&self) -> Dissimilarity {
        self.repair.apply(&self.dissimilarity)
    }
}

fn repair_and_embed(d: Dissimilarity, config: &PipelineConfig, mut diagnostics: Diagnostics) -> Result<PipelineResult> {
    let tol = config.repair.resolve_tol(&d);
    let outcome = config.repair.run(&d)?;
    let target = outcome.delta.apply(&d);
    let model = isomap_model(&target, config.neighborhood, config.dim)?;
    diagnostics.n = d.n();
    diagnostics.repair_iterations = outcome.iterations;
    diagnostics.repair_tol = tol;
    diagnostics.repair_l0 = outcome.delta.l0();
    diagnostics.repair_max_increase = outcome.delta.matrix().max_finite();
    diagnostics.components = model.components;
    diagnostics.dropped_points = model.dropped(d.n());
    Ok(PipelineResult {
        embedding: model.embedding,
        dissimilarity: d,
        repair: outcome.delta,
        geodesics: model.geodesics,
        diagnostics,
    })
}

/// Masked distances, repaired to a metric, embedded with Isomap.
pub fn mr_missing(data: &MaskedDataset, config: &PipelineConfig) -> Result<PipelineResult> {
    let d = masked_euclidean(data)?;
    let diagnostics = Diagnostics {
        missing_entries: data.missing_count(),
        degenerate_rows: data.degenerate_rows(),
        zero_overlap_pairs: zero_overlap_pairs(&overlap_counts(data)),
        ..Diagnostics::default()
    };
    repair_and_embed(d, config, diagnostics)
}

/// Repair a given distance matrix, then embed it.
pub fn repair_corrupted(d: &Dissimilarity, config: &PipelineConfig) -> Result<PipelineResult> {
    repair_and_embed(d.clone(), config, Diagnostics::default())
}

/// Places new points into an existing embedding from their masked distances
/// to the training rows. Each new point is attached to the graph through its
/// neighborhood among the embedded training points.
pub fn project_new_points(
    result: &PipelineResult,
    train: &MaskedDataset,
    new: &MaskedDataset,
    neighborhood: Neighborhood,
) -> Result<DMatrix<f64>> {
    if train.n() != result.dissimilarity.n() {
        return Err(Error::shape(format!(
            "pipeline ran on {} points, training data has {}",
            result.dissimilarity.n(),
            train.n()
        )));
    }
    let kept = train.select_rows(&result.embedding.kept_indices);
    let direct = masked_cross_distances(new, &kept)?;
    let geodesic_rows = direct
        .iter()
        .map(|row| {
            let k = match neighborhood {
                Neighborhood::Knn(k) => k.min(row.len()),
                Neighborhood::Epsilon(eps) => row.iter().filter(|&&v| v <= eps).count().max(1),
            };
            extend_geodesics(&result.geodesics, row, k)
        })
        .collect::<Result<Vec<_>>>()?;
    out_of_sample(&result.geodesics, &result.embedding, &geodesic_rows)
}
