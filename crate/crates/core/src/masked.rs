//! Datasets with missing coordinates and the distances estimated from them.
//!
//! A pair of points is compared only on the coordinates observed in both:
//! `D_ij = sqrt(sum_k Q_ik Q_jk (X_ik - X_jk)^2)`. Pairs that share no observed
//! coordinate get distance 0 (the empty sum). No rescaling is applied, so the
//! estimate never exceeds the distance on complete data.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// `n` points in `m` ambient dimensions with a presence mask.
///
/// Values at absent positions are never read by any computation, so they may
/// hold any placeholder (NaN included).
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedDataset {
    n: usize,
    m: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl MaskedDataset {
    pub fn new(n: usize, m: usize, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != n * m {
            return Err(Error::shape(format!(
                "values hold {} entries, expected {n}x{m}",
                values.len()
            )));
        }
        if mask.len() != values.len() {
            return Err(Error::shape(format!(
                "mask holds {} entries, values hold {}",
                mask.len(),
                values.len()
            )));
        }
        Ok(Self { n, m, values, mask })
    }

    /// Fully observed dataset.
    pub fn complete(n: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        let mask = vec![true; values.len()];
        Self::new(n, m, values, mask)
    }

    /// Rows of optional values; `None` marks a missing entry.
    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * m);
        let mut mask = Vec::with_capacity(n * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::shape(format!(
                    "row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            for v in row {
                values.push(v.unwrap_or(f64::NAN));
                mask.push(v.is_some());
            }
        }
        Self::new(n, m, values, mask)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn value_row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn mask_row(&self, i: usize) -> &[bool] {
        &self.mask[i * self.m..(i + 1) * self.m]
    }

    pub fn is_present(&self, i: usize, k: usize) -> bool {
        self.mask[i * self.m + k]
    }

    /// Same values under a different mask.
    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self> {
        Self::new(self.n, self.m, self.values.clone(), mask)
    }

    /// Same values, every entry present.
    pub fn completed(&self) -> Self {
        Self {
            mask: vec![true; self.mask.len()],
            ..self.clone()
        }
    }

    pub fn missing_count(&self) -> usize {
        self.mask.iter().filter(|&&p| !p).count()
    }

    /// Rows with no observed entry at all.
    pub fn degenerate_rows(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.mask_row(i).iter().all(|&p| !p))
            .collect()
    }

    /// Row subset, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.m);
        let mut mask = Vec::with_capacity(rows.len() * self.m);
        for &i in rows {
            values.extend_from_slice(self.value_row(i));
            mask.extend_from_slice(self.mask_row(i));
        }
        Self {
            n: rows.len(),
            m: self.m,
            values,
            mask,
        }
    }

    /// Values with absent entries zeroed, plus the mask as 0/1 weights.
    fn zeroed(&self) -> (Vec<f64>, Vec<f64>) {
        let weights: Vec<f64> = self.mask.iter().map(|&p| if p { 1.0 } else { 0.0 }).collect();
        let values = self
            .values
            .iter()
            .zip(&self.mask)
            .map(|(&v, &p)| if p { v } else { 0.0 })
            .collect();
        (values, weights)
    }
}

/// Symmetric, nonnegative, zero-diagonal matrix of finite pairwise
/// dissimilarities.
#[derive(Clone, Debug, PartialEq)]
pub struct Dissimilarity(SquareMatrix);

impl Dissimilarity {
    pub fn new(matrix: SquareMatrix) -> Result<Self> {
        let n = matrix.n();
        for i in 0..n {
            let row = matrix.row(i);
            if row[i] != 0.0 {
                return Err(Error::InvalidDissimilarity(format!(
                    "diagonal entry ({i},{i}) is {}",
                    row[i]
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDissimilarity(format!(
                        "entry ({i},{j}) is {v}"
                    )));
                }
                if v != matrix.get(j, i) {
                    return Err(Error::InvalidDissimilarity(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(Self(matrix))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    pub(crate) fn from_matrix_unchecked(matrix: SquareMatrix) -> Self {
        debug_assert!(matrix.is_symmetric());
        Self(matrix)
    }

    /// Pairwise Euclidean distances between the rows of a dense `n x m` matrix.
    pub fn euclidean(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len();
        let m = points.first().map_or(0, Vec::len);
        let values: Vec<f64> = points.iter().flatten().copied().collect();
        masked_euclidean(&MaskedDataset::complete(n, m, values)?)
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0.max_finite()
    }

    /// Restriction to a subset of points.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        Self(self.0.submatrix(indices))
    }
}

#[inline]
fn masked_sq_distance(xi: &[f64], qi: &[f64], xj: &[f64], qj: &[f64]) -> f64 {
    // Four independent partial sums; the accumulation order depends only on the
    // coordinate index, so a masked sum never exceeds the unmasked one.
    let mut acc = [0.0f64; 4];
    let chunks = xi.len() / 4 * 4;
    for k in (0..chunks).step_by(4) {
        for l in 0..4 {
            let d = xi[k + l] - xj[k + l];
            acc[l] += qi[k + l] * qj[k + l] * (d * d);
        }
    }
    for k in chunks..xi.len() {
        let d = xi[k] - xj[k];
        acc[k - chunks] += qi[k] * qj[k] * (d * d);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Pairwise distances over jointly observed coordinates.
pub fn masked_euclidean(data: &MaskedDataset) -> Result<Dissimilarity> {
    let (n, m) = (data.n, data.m);
    let (values, weights) = data.zeroed();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (xi, qi) = (&values[i * m..(i + 1) * m], &weights[i * m..(i + 1) * m]);
            (i + 1..n)
                .map(|j| {
                    let (xj, qj) = (&values[j * m..(j + 1) * m], &weights[j * m..(j + 1) * m]);
                    masked_sq_distance(xi, qi, xj, qj).sqrt()
                })
                .collect()
        })
        .collect();
    let mut out = SquareMatrix::zeros(n);
    for (i, row) in upper.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let j = i + 1 + offset;
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(Dissimilarity(out))
}

/// Masked distances from every row of `new` to every row of `reference`
/// (one inner vector per row of `new`).
pub fn masked_cross_distances(new: &MaskedDataset, reference: &MaskedDataset) -> Result<Vec<Vec<f64>>> {
    let m = reference.m;
    if new.m != m {
        return Err(Error::shape(format!("{} columns vs {m} columns", new.m)));
    }
    let (rv, rw) = reference.zeroed();
    let (nv, nw) = new.zeroed();
    Ok((0..new.n)
        .into_par_iter()
        .map(|i| {
            let (xi, qi) = (&nv[i * m..(i + 1) * m], &nw[i * m..(i + 1) * m]);
            (0..reference.n)
                .map(|j| masked_sq_distance(xi, qi, &rv[j * m..(j + 1) * m], &rw[j * m..(j + 1) * m]).sqrt())
                .collect()
        })
        .collect())
}

/// Number of coordinates observed in both points, for every pair.
pub fn overlap_counts(data: &MaskedDataset) -> SquareMatrix<u32> {
    let (n, m) = (data.n, data.m);
    let words = m.div_ceil(64);
    let bits: Vec<u64> = (0..n)
        .flat_map(|i| {
            let row = data.mask_row(i);
            (0..words).map(move |w| {
                row[w * 64..((w + 1) * 64).min(m)]
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (b, &p)| acc | (u64::from(p) << b))
            })
        })
        .collect();
    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let bi = &bits[i * words..(i + 1) * words];
            (0..n)
                .map(|j| {
                    let bj = &bits[j * words..(j + 1) * words];
                    bi.iter().zip(bj).map(|(a, b)| (a & b).count_ones()).sum()
                })
                .collect()
        })
        .collect();
    SquareMatrix::from_rows(&rows).expect("square by construction")
}

/// Unordered pairs `i < j` with no jointly observed coordinate.
pub fn zero_overlap_pairs(counts: &SquareMatrix<u32>) -> usize {
    let n = counts.n();
    (0..n)
        .map(|i| counts.row(i)[i + 1..].iter().filter(|&&c| c == 0).count())
        .sum()
}
