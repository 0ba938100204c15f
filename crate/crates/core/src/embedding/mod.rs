//! Neighborhood graphs, geodesic distances, classical MDS and their
//! composition into Isomap.

mod eigen;
mod extension;
mod geodesic;
mod graph;
mod isomap;
mod mds;

pub use eigen::{top_eigenpairs, EigenPairs, RESIDUAL_TOL};
pub use extension::{extend_geodesics, out_of_sample};
pub use geodesic::{floyd_warshall, geodesic_distances, largest_component, GeodesicMatrix};
pub use graph::{epsilon_graph, knn_graph, Edge, NeighborGraph, Neighborhood};
pub use isomap::{isomap, isomap_model, IsomapModel};
pub use mds::{classical_mds, double_center, Embedding};

pub(crate) use graph::nearest;
