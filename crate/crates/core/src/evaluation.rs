//! Comparing embeddings: Procrustes alignment, relative error, neighborhood
//! preservation, and a k-nearest-neighbor classifier.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, RowDVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::nearest;
use crate::error::{Error, Result};

/// Similarity transform mapping a candidate onto a reference:
/// `aligned = scale * candidate * rotation + translation`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentResult {
    pub rotation: DMatrix<f64>,
    pub scale: f64,
    pub translation: RowDVector<f64>,
    pub aligned: DMatrix<f64>,
    pub relative_error: f64,
}

/// Summary written by the `evaluate` command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub n: usize,
    pub dim: usize,
    pub relative_error: f64,
    pub neighborhood_preservation_k10: Option<f64>,
    pub neighborhood_k: usize,
    pub neighborhood_preservation: f64,
    pub scale: f64,
}

fn same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!(
            "{}x{} vs {}x{} configurations",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

fn centered(x: &DMatrix<f64>) -> (DMatrix<f64>, RowDVector<f64>) {
    let mean = x.row_mean();
    let mut c = x.clone();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }
    (c, mean)
}

/// `||reference - aligned||_F / ||reference||_F`.
pub fn relative_error(reference: &DMatrix<f64>, aligned: &DMatrix<f64>) -> Result<f64> {
    same_shape(reference, aligned)?;
    let norm = reference.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok((reference - aligned).norm() / norm)
}

/// Optimal rotation (reflections allowed), scale and translation taking
/// `candidate` onto `reference` in the least-squares sense.
///
/// With both centered and `candidate^T reference = U S V^T`, the rotation is
/// `U V^T` and the scale is `trace(S) / ||candidate||^2`. A candidate that
/// collapses to a single point gets scale 0 and aligns to the reference mean.
pub fn procrustes_align(reference: &DMatrix<f64>, candidate: &DMatrix<f64>) -> Result<AlignmentResult> {
    same_shape(reference, candidate)?;
    let (x0, x_mean) = centered(reference);
    let (y0, y_mean) = centered(candidate);
    if x0.norm() == 0.0 {
        return Err(Error::DegenerateReference);
    }
    let d = reference.ncols();
    let cross = y0.transpose() * &x0;
    let svd = cross.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let rotation = u * v_t;
    let y_norm2 = y0.norm_squared();
    let scale = if y_norm2 > 0.0 { svd.singular_values.sum() / y_norm2 } else { 0.0 };
    let translation = x_mean - (&y_mean * &rotation) * scale;
    let mut aligned = (candidate * &rotation) * scale;
    for mut row in aligned.row_iter_mut() {
        row += &translation;
    }
    debug_assert_eq!(rotation.shape(), (d, d));
    let relative_error = relative_error(reference, &aligned)?;
    Ok(AlignmentResult {
        rotation,
        scale,
        translation,
        aligned,
        relative_error,
    })
}

fn knn_sets(coords: &DMatrix<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = coords.nrows();
    let rows: Vec<DVector<f64>> = (0..n).map(|i| coords.row(i).transpose()).collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let dist: Vec<f64> = rows.iter().map(|r| (r - &rows[i]).norm_squared()).collect();
            let mut set = nearest(&dist, i, k);
            set.sort_unstable();
            set
        })
        .collect()
}

/// Mean fraction of each point's `k` nearest neighbors shared between the two
/// configurations (Euclidean, ties by index).
pub fn neighborhood_preservation(reference: &DMatrix<f64>, candidate: &DMatrix<f64>, k: usize) -> Result<f64> {
    let n = reference.nrows();
    if candidate.nrows() != n {
        return Err(Error::shape(format!("{n} vs {} points", candidate.nrows())));
    }
    if k < 1 || k >= n {
        return Err(Error::param(format!("k must satisfy 1 <= k < n = {n}, got {k}")));
    }
    let (a, b) = (knn_sets(reference, k), knn_sets(candidate, k));
    let shared: usize = a
        .iter()
        .zip(&b)
        .map(|(x, y)| x.iter().filter(|v| y.binary_search(v).is_ok()).count())
        .sum();
    Ok(shared as f64 / (n * k) as f64)
}

/// Alignment error plus neighborhood preservation at `k` (and at 10 when the
/// point count allows it).
pub fn compare(reference: &DMatrix<f64>, candidate: &DMatrix<f64>, k: usize) -> Result<Comparison> {
    let alignment = procrustes_align(reference, candidate)?;
    let n = reference.nrows();
    Ok(Comparison {
        n,
        dim: reference.ncols(),
        relative_error: alignment.relative_error,
        neighborhood_preservation_k10: if n > 10 {
            Some(neighborhood_preservation(reference, candidate, 10)?)
        } else {
            None
        },
        neighborhood_k: k,
        neighborhood_preservation: neighborhood_preservation(reference, candidate, k)?,
        scale: alignment.scale,
    })
}

/// Majority vote among the `k` nearest training points; ties go to the
/// smallest label. `k` larger than the training set uses all of it.
pub fn knn_classify(
    train: &DMatrix<f64>,
    labels: &[usize],
    test: &DMatrix<f64>,
    k: usize,
) -> Result<Vec<usize>> {
    let n = train.nrows();
    if n == 0 {
        return Err(Error::param("empty training set"));
    }
    if labels.len() != n {
        return Err(Error::shape(format!("{} labels for {n} training points", labels.len())));
    }
    if train.ncols() != test.ncols() {
        return Err(Error::shape(format!(
            "training has {} columns, test has {}",
            train.ncols(),
            test.ncols()
        )));
    }
    if k < 1 {
        return Err(Error::param("k must be at least 1"));
    }
    let k = k.min(n);
    let train_rows: Vec<DVector<f64>> = (0..n).map(|i| train.row(i).transpose()).collect();
    Ok((0..test.nrows())
        .into_par_iter()
        .map(|t| {
            let x = test.row(t).transpose();
            let dist: Vec<f64> = train_rows.iter().map(|r| (r - &x).norm_squared()).collect();
            let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
            for j in nearest(&dist, usize::MAX, k) {
                *votes.entry(labels[j]).or_default() += 1;
            }
            // Ascending label order, so the first maximum is the smallest label.
            let best = votes.values().copied().max().unwrap_or(0);
            votes.into_iter().find(|&(_, c)| c == best).map_or(0, |(l, _)| l)
        })
        .collect())
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::shape(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}
