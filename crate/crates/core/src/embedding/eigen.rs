//! Leading eigenpairs of a dense symmetric matrix.
//!
//! Small problems go straight to a full decomposition. Larger ones use Lanczos
//! with full reorthogonalization, which needs only matrix-vector products and
//! keeps the `n = 5000` spectral step to seconds. Every returned pair is
//! checked against `||S v - lambda v|| <= 1e-8 ||S||_F`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Up to this size the full decomposition is cheap enough.
const DENSE_LIMIT: usize = 300;
/// Residual bound, relative to the Frobenius norm of the input.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Lanczos stopping threshold on the Ritz residual estimate.
const RITZ_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct EigenPairs {
    /// Nonincreasing.
    pub values: Vec<f64>,
    /// Unit-norm eigenvectors, one per value.
    pub vectors: Vec<Vec<f64>>,
}

/// The `k` algebraically largest eigenpairs of symmetric `s`.
pub fn top_eigenpairs(s: &SquareMatrix, k: usize) -> Result<EigenPairs> {
    let n = s.n();
    if k > n {
        return Err(Error::param(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    let norm = s.frobenius_norm();
    if k == 0 || norm == 0.0 {
        return Ok(EigenPairs {
            values: vec![0.0; k],
            vectors: (0..k).map(|c| unit(n, c)).collect(),
        });
    }
    let pairs = if n <= DENSE_LIMIT || 3 * k >= n {
        dense(s, k)
    } else {
        match lanczos(s, k, norm) {
            Some(p) if max_residual(s, &p) <= RESIDUAL_TOL * norm => p,
            _ => dense(s, k),
        }
    };
    let worst = max_residual(s, &pairs);
    if worst > RESIDUAL_TOL * norm {
        return Err(Error::Eigen(format!(
            "residual {worst:.3e} exceeds {:.3e}",
            RESIDUAL_TOL * norm
        )));
    }
    Ok(pairs)
}

fn unit(n: usize, c: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    if c < n {
        v[c] = 1.0;
    }
    v
}

fn matvec(s: &SquareMatrix, x: &[f64]) -> Vec<f64> {
    (0..s.n()).into_par_iter().map(|i| dot(s.row(i), x)).collect()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4 * 4;
    for k in (0..chunks).step_by(4) {
        for l in 0..4 {
            acc[l] += a[k + l] * b[k + l];
        }
    }
    for k in chunks..a.len() {
        acc[k - chunks] += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (a, &b) in y.iter_mut().zip(x) {
        *a += alpha * b;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn max_residual(s: &SquareMatrix, pairs: &EigenPairs) -> f64 {
    pairs
        .values
        .iter()
        .zip(&pairs.vectors)
        .map(|(&lambda, v)| {
            let sv = matvec(s, v);
            sv.iter()
                .zip(v)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

fn sorted_desc(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

fn dense(s: &SquareMatrix, k: usize) -> EigenPairs {
    let eig = SymmetricEigen::new(s.to_dmatrix());
    let order = sorted_desc(eig.eigenvalues.as_slice());
    let values = order[..k].iter().map(|&c| eig.eigenvalues[c]).collect();
    let vectors = order[..k]
        .iter()
        .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
        .collect();
    EigenPairs { values, vectors }
}

/// Orthogonalize `w` against the basis, twice for stability.
fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.par_iter().map(|q| dot(q, w)).collect();
        for (q, c) in basis.iter().zip(coeffs) {
            axpy(w, -c, q);
        }
    }
}

fn lanczos(s: &SquareMatrix, k: usize, norm: f64) -> Option<EigenPairs> {
    let n = s.n();
    // Fixed seed: the embedding must not depend on anything but its input.
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a9c_205e);
    let mut random_unit = |basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..5 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            reorthogonalize(&mut v, basis);
            if normalize(&mut v) > 1e-8 {
                return Some(v);
            }
        }
        None
    };

    let mut basis: Vec<Vec<f64>> = vec![random_unit(&[])?];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut next_check = (2 * k + 20).min(n);

    loop {
        let j = basis.len() - 1;
        let mut w = matvec(s, &basis[j]);
        let alpha = dot(&basis[j], &w);
        axpy(&mut w, -alpha, &basis[j]);
        if j > 0 {
            axpy(&mut w, -betas[j - 1], &basis[j - 1]);
        }
        reorthogonalize(&mut w, &basis);
        alphas.push(alpha);
        let beta = dot(&w, &w).sqrt();
        let m = alphas.len();

        if m >= next_check || m == n {
            let t = DMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    alphas[r]
                } else if r + 1 == c || c + 1 == r {
                    betas[r.min(c)]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let order = sorted_desc(eig.eigenvalues.as_slice());
            let converged = m == n
                || order[..k]
                    .iter()
                    .all(|&c| (beta * eig.eigenvectors[(m - 1, c)]).abs() <= RITZ_TOL * norm);
            if converged {
                let values = order[..k].iter().map(|&c| eig.eigenvalues[c]).collect();
                let vectors = order[..k]
                    .iter()
                    .map(|&c| {
                        let mut v = vec![0.0; n];
                        for (l, q) in basis.iter().enumerate() {
                            axpy(&mut v, eig.eigenvectors[(l, c)], q);
                        }
                        normalize(&mut v);
                        v
                    })
                    .collect();
                return Some(EigenPairs { values, vectors });
            }
            next_check = (m + (m / 4).max(10)).min(n);
        }

        if beta <= 1e-12 * norm {
            // Invariant subspace: restart in the orthogonal complement.
            betas.push(0.0);
            basis.push(random_unit(&basis)?);
        } else {
            betas.push(beta);
            w.iter_mut().for_each(|x| *x /= beta);
            basis.push(w);
        }
    }
}
