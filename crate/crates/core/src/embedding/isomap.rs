use nalgebra::DMatrix;

use super::geodesic::{geodesic_distances, largest_component, GeodesicMatrix};
use super::graph::Neighborhood;
use super::mds::{classical_mds, Embedding};
use crate::error::{Error, Result};
use crate::masked::Dissimilarity;

/// Isomap embedding together with the geodesics it was computed from,
/// restricted to the embedded component. Out-of-sample projection needs both.
#[derive(Clone, Debug)]
pub struct IsomapModel {
    pub embedding: Embedding,
    pub geodesics: GeodesicMatrix,
    /// Connected components of the full neighborhood graph.
    pub components: usize,
}

impl IsomapModel {
    /// Input indices that were left out because they fell outside the
    /// largest component.
    pub fn dropped(&self, n: usize) -> Vec<usize> {
        let mut keep = vec![false; n];
        for &i in &self.embedding.kept_indices {
            keep[i] = true;
        }
        (0..n).filter(|&i| !keep[i]).collect()
    }
}

/// Graph, geodesics, largest component, classical MDS.
pub fn isomap_model(d: &Dissimilarity, neighborhood: Neighborhood, dim: usize) -> Result<IsomapModel> {
    let n = d.n();
    if dim < 1 {
        return Err(Error::param("embedding dimension must be at least 1"));
    }
    if n == 1 {
        if dim > 1 {
            return Err(Error::param(format!("embedding dimension must be in 1..=1, got {dim}")));
        }
        return Ok(IsomapModel {
            embedding: Embedding {
                coords: DMatrix::zeros(1, 1),
                eigenvalues: vec![0.0],
                kept_indices: vec![0],
            },
            geodesics: GeodesicMatrix {
                g: d.matrix().clone(),
                component_ids: vec![0],
            },
            components: 1,
        });
    }
    if dim > n {
        return Err(Error::param(format!("embedding dimension must be in 1..={n}, got {dim}")));
    }
    let graph = neighborhood.build(d)?;
    let all = geodesic_distances(&graph);
    let (geodesics, kept) = largest_component(&all);
    if kept.len() < dim + 1 {
        return Err(Error::EmptyComponent {
            size: kept.len(),
            required: dim + 1,
            dim,
        });
    }
    let mut embedding = classical_mds(&geodesics.g, dim)?;
    embedding.kept_indices = kept;
    Ok(IsomapModel {
        embedding,
        geodesics,
        components: all.component_count(),
    })
}

pub fn isomap(d: &Dissimilarity, neighborhood: Neighborhood, dim: usize) -> Result<Embedding> {
    isomap_model(d, neighborhood, dim).map(|m| m.embedding)
}
