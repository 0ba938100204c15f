//! Projecting new points into an existing embedding from their distances to
//! the training points alone.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::geodesic::GeodesicMatrix;
use super::graph::nearest;
use super::mds::Embedding;
use crate::error::{Error, Result};

/// Geodesic distances from a new point to every training point, given its
/// direct distances: the point is attached to its `k` nearest training points
/// and paths continue through the training geodesics.
pub fn extend_geodesics(geodesics: &GeodesicMatrix, direct: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = geodesics.n();
    if direct.len() != n {
        return Err(Error::shape(format!("{} distances for {n} training points", direct.len())));
    }
    if k < 1 || k > n {
        return Err(Error::param(format!("k must satisfy 1 <= k <= {n}, got {k}")));
    }
    check_distances(direct)?;
    let anchors = nearest(direct, usize::MAX, k);
    Ok((0..n)
        .map(|i| {
            anchors
                .iter()
                .map(|&j| direct[j] + geodesics.get(j, i))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

fn check_distances(row: &[f64]) -> Result<()> {
    match row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        Some(bad) => Err(Error::param(format!("distance {bad} is not finite and nonnegative"))),
        None => Ok(()),
    }
}

/// Coordinates of new points from their geodesic distances to the training
/// points (one row per new point, columns in training order).
///
/// Each new point's squared distances are centered the same way the training
/// matrix was and projected onto the training eigenvectors; a training row
/// maps back to its own coordinates.
pub fn out_of_sample(geodesics: &GeodesicMatrix, train: &Embedding, new_to_train: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = geodesics.n();
    if train.n() != n {
        return Err(Error::shape(format!(
            "embedding has {} rows but geodesics cover {n} points",
            train.n()
        )));
    }
    let g = &geodesics.g;
    let row_means: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| g.row(i).iter().map(|v| v * v).sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let dim = train.dim();
    // Unit eigenvectors recovered from the coordinates; zero for clamped columns.
    let scales: Vec<f64> = train.eigenvalues.iter().map(|&l| if l > 0.0 { l.sqrt() } else { 0.0 }).collect();

    let rows: Vec<Vec<f64>> = new_to_train
        .par_iter()
        .map(|delta| {
            if delta.len() != n {
                return Err(Error::shape(format!("{} distances for {n} training points", delta.len())));
            }
            check_distances(delta)?;
            let mean_sq = delta.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let centered: Vec<f64> = (0..n)
                .map(|i| -0.5 * (delta[i] * delta[i] - mean_sq - row_means[i] + grand))
                .collect();
            Ok((0..dim)
                .map(|c| {
                    if scales[c] == 0.0 {
                        return 0.0;
                    }
                    let proj: f64 = (0..n).map(|i| train.coords[(i, c)] * centered[i]).sum();
                    // coords = u * sqrt(lambda), so u . e / sqrt(lambda) = coords . e / lambda
                    proj / (scales[c] * scales[c])
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(rows.len(), dim, |r, c| rows[r][c]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{classical_mds, isomap_model, Neighborhood};
    use crate::masked::Dissimilarity;
    use crate::matrix::SquareMatrix;

    fn grid() -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for a in 0..6 {
            for b in 0..5 {
                pts.push(vec![a as f64 * 0.7 + 0.1 * b as f64, b as f64 * 1.1 - 0.05 * a as f64]);
            }
        }
        pts
    }

    fn euclid(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn training_rows_map_to_themselves() {
        let d = Dissimilarity::euclidean(&grid()).unwrap();
        let model = isomap_model(&d, Neighborhood::Knn(6), 2).unwrap();
        let rows = model.geodesics.g.to_rows();
        let projected = out_of_sample(&model.geodesics, &model.embedding, &rows).unwrap();
        let scale = model.embedding.coords.norm();
        assert!((projected - &model.embedding.coords).norm() <= 1e-9 * scale);
    }

    #[test]
    fn held_out_planar_point_matches_joint_embedding() {
        let pts = grid();
        let train = &pts[..pts.len() - 1];
        let test = &pts[pts.len() - 1];
        let d = Dissimilarity::euclidean(train).unwrap();
        let geo = GeodesicMatrix {
            g: d.matrix().clone(),
            component_ids: vec![0; train.len()],
        };
        let emb = classical_mds(&geo.g, 2).unwrap();
        let delta: Vec<f64> = train.iter().map(|p| euclid(p, test)).collect();
        let y = out_of_sample(&geo, &emb, &[delta]).unwrap();
        // In an exact Euclidean setting the projected point keeps its true
        // distances to every training point.
        for (i, p) in train.iter().enumerate() {
            let got = (y.row(0) - emb.coords.row(i)).norm();
            assert!((got - euclid(p, test)).abs() < 1e-6, "{got} vs {}", euclid(p, test));
        }
    }

    #[test]
    fn equidistant_point_lands_at_origin() {
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        let d = Dissimilarity::euclidean(&pts).unwrap();
        let geo = GeodesicMatrix {
            g: d.matrix().clone(),
            component_ids: vec![0; 4],
        };
        let emb = classical_mds(&geo.g, 2).unwrap();
        let y = out_of_sample(&geo, &emb, &[vec![2.0; 4]]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn extension_through_anchors() {
        // Path 0 - 1 - 2 with unit edges; new point at distance 0.5 from 0.
        let g = SquareMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let geo = GeodesicMatrix { g, component_ids: vec![0; 3] };
        let ext = extend_geodesics(&geo, &[0.5, 1.5, 2.4], 1).unwrap();
        assert_eq!(ext, vec![0.5, 1.5, 2.5]);
        let ext = extend_geodesics(&geo, &[0.5, 1.5, 2.4], 3).unwrap();
        assert_eq!(ext, vec![0.5, 1.5, 2.4]);
    }

    #[test]
    fn shape_errors() {
        let geo = GeodesicMatrix {
            g: SquareMatrix::zeros(2),
            component_ids: vec![0; 2],
        };
        let emb = classical_mds(&geo.g, 1).unwrap();
        assert!(matches!(out_of_sample(&geo, &emb, &[vec![1.0]]), Err(Error::ShapeMismatch(_))));
        assert!(extend_geodesics(&geo, &[1.0], 1).is_err());
        assert!(extend_geodesics(&geo, &[1.0, -1.0], 1).is_err());
    }
}
