//! Increase-only metric repair.
//!
//! [`iomr_fixed_pass`] is the single sweep: for `k` then `i` (both ascending),
//! `D[i][k] = max(D[i][k], max_{j<i} (D[i][j] - D[j][k]))`, with every update
//! mirrored to `D[k][i]` so the working matrix stays symmetric. One sweep has
//! no guarantee of producing a metric, so [`repair_to_fixpoint`] repeats it
//! until nothing moves and then verifies the result with [`check_metric`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masked::Dissimilarity;
use crate::matrix::{row_pair_mut, SquareMatrix};

/// Nonnegative symmetric increase matrix `P` with `D + P` the repaired matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RepairDelta(SquareMatrix);

impl RepairDelta {
    pub fn zeros(n: usize) -> Self {
        Self(SquareMatrix::zeros(n))
    }

    /// `repaired - original`, entrywise.
    pub fn between(original: &Dissimilarity, repaired: &Dissimilarity) -> Self {
        let a = original.matrix().as_slice();
        let b = repaired.matrix().as_slice();
        let data = b.iter().zip(a).map(|(r, o)| r - o).collect();
        Self(SquareMatrix::from_vec(original.n(), data).expect("same shape"))
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    /// Number of strictly positive entries above the diagonal.
    pub fn l0(&self) -> usize {
        let n = self.0.n();
        (0..n)
            .map(|i| self.0.row(i)[i + 1..].iter().filter(|&&v| v > 0.0).count())
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.as_slice().iter().all(|&v| v == 0.0)
    }

    /// `D + P`.
    pub fn apply(&self, d: &Dissimilarity) -> Dissimilarity {
        let data = d
            .matrix()
            .as_slice()
            .iter()
            .zip(self.0.as_slice())
            .map(|(a, b)| a + b)
            .collect();
        Dissimilarity::from_matrix_unchecked(SquareMatrix::from_vec(d.n(), data).expect("same shape"))
    }
}

/// One violated triangle: `d[i][j] - d[i][k] - d[k][j] = slack > tol`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub i: usize,
    pub k: usize,
    pub j: usize,
    pub slack: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// Violations in lexicographic `(i, k, j)` order; may be a prefix of the
    /// full list when `truncated` is set.
    pub triples: Vec<Violation>,
    pub max_slack: f64,
    pub count: u64,
    pub truncated: bool,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Every violated triangle `(i, k, j)` with `i < j`.
pub fn check_metric(d: &Dissimilarity, tol: f64) -> ViolationReport {
    check_metric_capped(d, tol, usize::MAX)
}

/// Like [`check_metric`] but keeps at most `cap` triples. `count` and
/// `max_slack` always cover every violation.
pub fn check_metric_capped(d: &Dissimilarity, tol: f64, cap: usize) -> ViolationReport {
    const BLOCK: usize = 16;
    let m = d.matrix();
    let n = m.n();
    let blocks: Vec<(u64, f64, Vec<Violation>)> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let rows = b * BLOCK..((b + 1) * BLOCK).min(n);
            // Indexed [i - rows.start][k]; flattened to (i, k, j) order afterwards.
            let mut found: Vec<Vec<Vec<Violation>>> = vec![vec![Vec::new(); n]; rows.len()];
            let mut count = 0u64;
            let mut max_slack = f64::NEG_INFINITY;
            for k in 0..n {
                let rk = m.row(k);
                for i in rows.clone() {
                    let ri = m.row(i);
                    let dik = ri[k];
                    if slack_max(&ri[i + 1..], dik, &rk[i + 1..]) <= tol {
                        continue;
                    }
                    let (c, mx) = slack_stats(&ri[i + 1..], dik, &rk[i + 1..], tol);
                    if c == 0 {
                        continue;
                    }
                    count += c;
                    max_slack = max_slack.max(mx);
                    found[i - rows.start][k] = (i + 1..n)
                        .filter_map(|j| {
                            let slack = ri[j] - dik - rk[j];
                            (slack > tol).then_some(Violation { i, k, j, slack })
                        })
                        .collect();
                }
            }
            let triples = found.into_iter().flatten().flatten().take(cap).collect();
            (count, max_slack, triples)
        })
        .collect();

    let mut report = ViolationReport {
        max_slack: 0.0,
        ..Default::default()
    };
    for (count, max_slack, triples) in blocks {
        report.count += count;
        if count > 0 {
            report.max_slack = report.max_slack.max(max_slack);
        }
        let room = cap.saturating_sub(report.triples.len());
        report.triples.extend(triples.into_iter().take(room));
    }
    report.truncated = (report.triples.len() as u64) < report.count;
    report
}

/// Largest `dij - dik - dkj`; four lanes so the loop vectorizes.
#[inline]
fn slack_max(dij: &[f64], dik: f64, dkj: &[f64]) -> f64 {
    let mut acc = [f64::NEG_INFINITY; 4];
    let mut a = dij.chunks_exact(4);
    let mut b = dkj.chunks_exact(4);
    for (x, y) in a.by_ref().zip(b.by_ref()) {
        for l in 0..4 {
            let s = x[l] - dik - y[l];
            acc[l] = if s > acc[l] { s } else { acc[l] };
        }
    }
    for (&x, &y) in a.remainder().iter().zip(b.remainder()) {
        let s = x - dik - y;
        acc[0] = if s > acc[0] { s } else { acc[0] };
    }
    acc[0].max(acc[1]).max(acc[2].max(acc[3]))
}

#[inline]
fn slack_stats(dij: &[f64], dik: f64, dkj: &[f64], tol: f64) -> (u64, f64) {
    let mut count = 0u64;
    let mut mx = f64::NEG_INFINITY;
    for (&a, &b) in dij.iter().zip(dkj) {
        let s = a - dik - b;
        count += u64::from(s > tol);
        mx = if s > mx { s } else { mx };
    }
    (count, mx)
}

#[inline]
fn max_difference(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [f64::NEG_INFINITY; 4];
    let chunks = a.len() / 4 * 4;
    for k in (0..chunks).step_by(4) {
        for l in 0..4 {
            let v = a[k + l] - b[k + l];
            acc[l] = if v > acc[l] { v } else { acc[l] };
        }
    }
    for k in chunks..a.len() {
        let v = a[k] - b[k];
        acc[0] = if v > acc[0] { v } else { acc[0] };
    }
    acc[0].max(acc[1]).max(acc[2].max(acc[3]))
}

/// One in-place sweep; returns the largest single increase.
fn sweep(work: &mut SquareMatrix) -> f64 {
    let n = work.n();
    let data = work.as_mut_slice();
    let mut largest = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            if i == k {
                continue;
            }
            // D[j][k] is read from row k, which symmetry makes equal.
            let (row_i, row_k) = row_pair_mut(data, n, i, k);
            let best = max_difference(&row_i[..i], &row_k[..i]);
            let current = row_i[k];
            if best > current {
                largest = largest.max(best - current);
                row_i[k] = best;
                data[k * n + i] = best;
            }
        }
    }
    largest
}

/// A single IOMR-Fixed sweep. Returns the swept matrix and its increase over `d`.
pub fn iomr_fixed_pass(d: &Dissimilarity) -> (Dissimilarity, RepairDelta) {
    let mut work = d.matrix().clone();
    if work.n() > 2 {
        sweep(&mut work);
    }
    let repaired = Dissimilarity::from_matrix_unchecked(work);
    let delta = RepairDelta::between(d, &repaired);
    (repaired, delta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairConfig {
    pub max_iters: usize,
    /// Absolute tolerance; `None` resolves to `1e-9 * max(D)`.
    pub tol: Option<f64>,
}

impl Default for RepairConfig {
    fn default() -> Self {
        Self {
            max_iters: 20,
            tol: None,
        }
    }
}

impl RepairConfig {
    pub const RELATIVE_TOL: f64 = 1e-9;

    pub fn resolve_tol(&self, d: &Dissimilarity) -> f64 {
        self.tol.unwrap_or(Self::RELATIVE_TOL * d.max())
    }

    pub fn run(&self, d: &Dissimilarity) -> Result<RepairOutcome> {
        repair_to_fixpoint(d, self.max_iters, self.resolve_tol(d))
    }
}

#[derive(Clone, Debug)]
pub struct RepairOutcome {
    pub repaired: Dissimilarity,
    pub delta: RepairDelta,
    pub iterations: usize,
}

/// Stored triples in a failure report.
const REPORT_CAP: usize = 1000;

/// Repeat [`iomr_fixed_pass`] until no entry rises by more than `tol`, then
/// verify the result is a metric within `tol`.
pub fn repair_to_fixpoint(d: &Dissimilarity, max_iters: usize, tol: f64) -> Result<RepairOutcome> {
    if max_iters < 1 {
        return Err(Error::param("max_iters must be at least 1"));
    }
    if !(tol >= 0.0) {
        return Err(Error::param(format!("tolerance must be nonnegative, got {tol}")));
    }
    let finish = |work: SquareMatrix, iterations| {
        let repaired = Dissimilarity::from_matrix_unchecked(work);
        let delta = RepairDelta::between(d, &repaired);
        RepairOutcome {
            repaired,
            delta,
            iterations,
        }
    };
    let mut work = d.matrix().clone();
    if work.n() <= 2 {
        return Ok(finish(work, 1));
    }
    for iteration in 1..=max_iters {
        let change = sweep(&mut work);
        if change <= tol || iteration == max_iters {
            let view = Dissimilarity::from_matrix_unchecked(work);
            let report = check_metric_capped(&view, tol, REPORT_CAP);
            work = view.into_matrix();
            if report.is_empty() {
                return Ok(finish(work, iteration));
            }
            if iteration == max_iters {
                return Err(Error::FixpointNotReached {
                    iterations: max_iters,
                    report,
                });
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}
