//! Probability that two well-separated Gaussian points end up close under
//! masking, its closed-form bound, and a Monte Carlo check of that bound.
//!
//! Model: `X ~ N(mu1 1, 0.5 I)` and `Y ~ N(mu2 1, 0.5 I)` in `R^n`, each
//! coordinate of each point present independently with probability `p`. The
//! quantity bounded is the *squared* masked distance `sum (X_k - Y_k)^2` over
//! jointly present coordinates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthetic::{rng_for, Stream};

/// Per-cluster coordinate variance.
pub const CLUSTER_VARIANCE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    /// Ambient dimension.
    pub n: usize,
    pub mu1: f64,
    pub mu2: f64,
    /// Probability that a coordinate is present.
    pub p_present: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl TheoryParams {
    pub fn mu(&self) -> f64 {
        self.mu1 - self.mu2
    }

    /// Probability that a coordinate is present in both points.
    pub fn q(&self) -> f64 {
        self.p_present * self.p_present
    }

    /// Open interval of admissible `epsilon`.
    pub fn epsilon_range(&self) -> (f64, f64) {
        (0.0, self.q() * (1.0 + self.mu().powi(2)))
    }

    /// Open interval of admissible `gamma` for the current `epsilon`.
    pub fn gamma_range(&self) -> (f64, f64) {
        let s = 1.0 + self.mu().powi(2);
        (0.0, (self.q() * s - self.epsilon) / s)
    }

    fn check_model(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Infeasible("n must be at least 1".into()));
        }
        if !(self.p_present > 0.0 && self.p_present <= 1.0) {
            return Err(Error::Infeasible(format!("p_present = {} is outside (0, 1]", self.p_present)));
        }
        if !self.mu1.is_finite() || !self.mu2.is_finite() {
            return Err(Error::Infeasible("cluster means must be finite".into()));
        }
        let (lo, hi) = self.epsilon_range();
        if !(self.epsilon > lo && self.epsilon < hi) {
            return Err(Error::Infeasible(format!(
                "epsilon = {} violates 0 < epsilon < q(1 + mu^2) = {hi}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Every constraint the bound needs; the error names the one violated.
    pub fn validate(&self) -> Result<()> {
        self.check_model()?;
        let (lo, hi) = self.gamma_range();
        if !(self.gamma > lo && self.gamma < hi) {
            return Err(Error::Infeasible(format!(
                "gamma = {} violates 0 < gamma < (q(1 + mu^2) - epsilon) / (1 + mu^2) = {hi}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// `Pr[X <= c] <= exp(-(D + lambda - c)^2 / (4 (D + 2 lambda)))` for `X`
/// noncentral chi-squared with `D` degrees of freedom and noncentrality `lambda`.
pub fn chi_squared_tail_bound(dof: f64, lambda: f64, c: f64) -> Result<f64> {
    if !(dof >= 1.0) || !(lambda >= 0.0) || !(c > 0.0 && c < dof + lambda) {
        return Err(Error::param(format!(
            "need dof >= 1, lambda >= 0, 0 < c < dof + lambda; got dof = {dof}, lambda = {lambda}, c = {c}"
        )));
    }
    let gap = dof + lambda - c;
    Ok((-gap * gap / (4.0 * (dof + 2.0 * lambda))).exp())
}

/// One-sided deviation bound `exp(-2 gamma^2 n)` for a mean of `n` Bernoulli trials.
pub fn hoeffding_tail(n_trials: usize, gamma: f64) -> Result<f64> {
    if n_trials < 1 || !(gamma > 0.0) {
        return Err(Error::param(format!("need n >= 1 and gamma > 0; got n = {n_trials}, gamma = {gamma}")));
    }
    Ok((-2.0 * gamma * gamma * n_trials as f64).exp())
}

/// `exp(-2 gamma^2 n) + exp(-((q-gamma)(1+mu^2) - eps)^2 / (4 (q-gamma)(1+2mu^2)))^n`.
pub fn theorem_bound(params: &TheoryParams) -> Result<f64> {
    params.validate()?;
    let mu2 = params.mu().powi(2);
    let s = params.q() - params.gamma;
    let gap = s * (1.0 + mu2) - params.epsilon;
    let per_coordinate = gap * gap / (4.0 * s * (1.0 + 2.0 * mu2));
    let hoeffding = hoeffding_tail(params.n, params.gamma)?;
    Ok(hoeffding + (-per_coordinate * params.n as f64).exp())
}

/// Smallest bound over a uniform grid of `steps` interior points of the
/// admissible `gamma` interval. Returns `(gamma, bound)`.
pub fn optimize_gamma(params: &TheoryParams, steps: usize) -> Result<(f64, f64)> {
    params.check_model()?;
    let (_, hi) = params.gamma_range();
    let steps = steps.max(1);
    (1..=steps)
        .map(|s| hi * s as f64 / (steps + 1) as f64)
        .map(|gamma| {
            let bound = theorem_bound(&TheoryParams { gamma, ..*params })?;
            Ok((gamma, bound))
        })
        .try_fold((f64::NAN, f64::INFINITY), |best: (f64, f64), item: Result<(f64, f64)>| {
            let (g, b) = item?;
            Ok(if b < best.1 { (g, b) } else { best })
        })
}

fn draw_sq_distance(params: &TheoryParams, rng: &mut ChaCha8Rng) -> f64 {
    let sd = CLUSTER_VARIANCE.sqrt();
    let x = Normal::new(params.mu1, sd).expect("finite");
    let y = Normal::new(params.mu2, sd).expect("finite");
    let mut total = 0.0;
    for _ in 0..params.n {
        let xk = x.sample(rng);
        let yk = y.sample(rng);
        let x_present = rng.random::<f64>() < params.p_present;
        let y_present = rng.random::<f64>() < params.p_present;
        if x_present && y_present {
            total += (xk - yk) * (xk - yk);
        }
    }
    total
}

/// One draw of the squared masked distance between the two cluster points.
pub fn sample_masked_sq_distance(params: &TheoryParams, seed: u64) -> f64 {
    draw_sq_distance(params, &mut rng_for(seed, Stream::Theory))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub params: TheoryParams,
    pub trials: usize,
    /// Fraction of draws with squared masked distance below `epsilon n`.
    pub empirical: f64,
    pub bound: f64,
    pub gamma_used: f64,
    /// Wilson score half-width at one standard error.
    pub wilson_half_width: f64,
    pub ok: bool,
}

/// Half-width of the Wilson score interval.
pub fn wilson_half_width(successes: usize, trials: usize, z: f64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt()
}

const CHUNK: usize = 1024;

/// Estimates `Pr[squared masked distance < epsilon n]` from `trials` draws and
/// compares it with the bound; `ok` allows three Wilson half-widths of slack.
///
/// Draws are split into fixed chunks, each with its own stream, so the result
/// does not depend on how the chunks are scheduled across threads.
pub fn monte_carlo_bound_check(params: &TheoryParams, trials: usize, seed: u64) -> Result<MonteCarloReport> {
    if trials < 1 {
        return Err(Error::param("trials must be at least 1"));
    }
    let bound = theorem_bound(params)?;
    let threshold = params.epsilon * params.n as f64;
    let chunks = trials.div_ceil(CHUNK);
    let below: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for(seed, Stream::Theory);
            rng.set_stream(Stream::Theory as u64 | ((c as u64 + 1) << 8));
            let count = CHUNK.min(trials - c * CHUNK);
            (0..count).filter(|_| draw_sq_distance(params, &mut rng) < threshold).count()
        })
        .sum();
    let empirical = below as f64 / trials as f64;
    let half = wilson_half_width(below, trials, 1.0);
    Ok(MonteCarloReport {
        params: *params,
        trials,
        empirical,
        bound,
        gamma_used: params.gamma,
        wilson_half_width: half,
        ok: empirical <= bound + 3.0 * half,
    })
}
