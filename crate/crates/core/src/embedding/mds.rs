use nalgebra::DMatrix;
use rayon::prelude::*;

use super::eigen::top_eigenpairs;
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Low-dimensional coordinates plus the spectrum they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    /// `n x d`, one row per embedded point.
    pub coords: DMatrix<f64>,
    /// Top `d` eigenvalues of the double-centered matrix, nonincreasing and
    /// before clamping; columns whose eigenvalue is not positive are zero.
    pub eigenvalues: Vec<f64>,
    /// Row `r` of `coords` is input point `kept_indices[r]`.
    pub kept_indices: Vec<usize>,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    /// First `d` columns; the leading eigenpairs do not depend on how many
    /// were requested.
    pub fn truncate(&self, d: usize) -> Embedding {
        let d = d.min(self.dim());
        Embedding {
            coords: self.coords.columns(0, d).into_owned(),
            eigenvalues: self.eigenvalues[..d].to_vec(),
            kept_indices: self.kept_indices.clone(),
        }
    }
}

/// `-1/2 J (D o D) J` with `J = I - 11^T/n`.
pub fn double_center(dt: &SquareMatrix) -> SquareMatrix {
    let n = dt.n();
    let row_means: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| dt.row(i).iter().map(|v| v * v).sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (row, ri) = (dt.row(i), row_means[i]);
            let means = &row_means;
            (0..n).map(move |j| -0.5 * (row[j] * row[j] - ri - means[j] + grand))
        })
        .collect();
    SquareMatrix::from_vec(n, rows).expect("square by construction")
}

/// Flip each column so its largest-magnitude entry (first on ties) is positive.
pub(crate) fn fix_signs(coords: &mut DMatrix<f64>) {
    for mut col in coords.column_iter_mut() {
        let mut pivot = 0.0f64;
        for &v in col.iter() {
            if v.abs() > pivot.abs() {
                pivot = v;
            }
        }
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Classical multidimensional scaling of a finite distance matrix.
pub fn classical_mds(dt: &SquareMatrix, dim: usize) -> Result<Embedding> {
    let n = dt.n();
    if dim < 1 || dim > n {
        return Err(Error::param(format!("embedding dimension must be in 1..={n}, got {dim}")));
    }
    if let Some(bad) = dt.as_slice().iter().find(|v| !v.is_finite()) {
        return Err(Error::param(format!("distance matrix holds non-finite entry {bad}")));
    }
    let s = double_center(dt);
    let pairs = top_eigenpairs(&s, dim)?;
    let mut coords = DMatrix::zeros(n, dim);
    for (c, (&lambda, v)) in pairs.values.iter().zip(&pairs.vectors).enumerate() {
        if lambda > 0.0 {
            let scale = lambda.sqrt();
            for (r, &x) in v.iter().enumerate() {
                coords[(r, c)] = x * scale;
            }
        }
    }
    fix_signs(&mut coords);
    Ok(Embedding {
        coords,
        eigenvalues: pairs.values,
        kept_indices: (0..n).collect(),
    })
}
