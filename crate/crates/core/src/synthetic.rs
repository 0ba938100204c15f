//! Synthetic manifolds, masking operators and distance corruption.
//!
//! Every operation draws from its own ChaCha8 stream keyed by the caller's
//! seed, so masking a dataset never shifts the numbers used to generate it.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masked::{Dissimilarity, MaskedDataset};
use crate::matrix::SquareMatrix;

/// Recorded in every resolved configuration.
pub const GENERATOR: &str = "ChaCha8 (rand_chacha 0.9), stream per operation";

/// Stream identifiers, one per operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Generate = 1,
    Mask = 2,
    Corrupt = 3,
    Theory = 4,
    Split = 5,
}

pub fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ManifoldKind {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    #[serde(rename = "swissroll")]
    SwissRoll,
}

impl ManifoldKind {
    pub const ALL: [ManifoldKind; 7] = [
        ManifoldKind::M1,
        ManifoldKind::M2,
        ManifoldKind::M3,
        ManifoldKind::M4,
        ManifoldKind::M5,
        ManifoldKind::M6,
        ManifoldKind::SwissRoll,
    ];

    pub fn ambient_dim(self) -> usize {
        match self {
            ManifoldKind::M1 => 30,
            ManifoldKind::M2 => 300,
            _ => 3,
        }
    }

    /// Number of generator coordinates per point.
    pub fn intrinsic_dim(self) -> usize {
        match self {
            ManifoldKind::M6 => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ManifoldKind::M1 => "M1",
            ManifoldKind::M2 => "M2",
            ManifoldKind::M3 => "M3",
            ManifoldKind::M4 => "M4",
            ManifoldKind::M5 => "M5",
            ManifoldKind::M6 => "M6",
            ManifoldKind::SwissRoll => "swissroll",
        };
        f.write_str(name)
    }
}

impl FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| !matches!(c, '-' | '_')).collect::<String>().to_lowercase();
        ManifoldKind::ALL
            .into_iter()
            .find(|k| k.to_string().to_lowercase() == key)
            .ok_or_else(|| Error::param(format!("unknown manifold '{s}' (expected M1..M6 or swissroll)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub n: usize,
    pub seed: u64,
}

/// Points plus the generator coordinates each one came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub data: MaskedDataset,
    /// One row per point, `kind.intrinsic_dim()` columns.
    pub intrinsic: Vec<Vec<f64>>,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    Uniform::new_inclusive(lo, hi).expect("finite bounds").sample(rng)
}

fn normals(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect()
}

/// Row-major `a (r x k) * b (k x c)`.
fn matmul(a: &[f64], b: &[f64], r: usize, k: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        for l in 0..k {
            let x = a[i * k + l];
            for j in 0..c {
                out[i * c + j] += x * b[l * c + j];
            }
        }
    }
    out
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn swiss_roll_point(t: f64, h: f64) -> [f64; 3] {
    [t * t.cos(), h, t * t.sin()]
}

fn draw_swiss_params(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let t = uniform(rng, 1.5 * PI, 4.5 * PI);
            let h = uniform(rng, 0.0, 21.0);
            vec![t, h]
        })
        .collect()
}

/// Draws `spec.n` points of the requested manifold, fully observed.
pub fn generate(spec: &ManifoldSpec) -> Result<Sample> {
    let n = spec.n;
    if n < 1 {
        return Err(Error::param("point count must be at least 1"));
    }
    let mut rng = rng_for(spec.seed, Stream::Generate);
    let m = spec.kind.ambient_dim();
    let (values, intrinsic): (Vec<f64>, Vec<Vec<f64>>) = match spec.kind {
        ManifoldKind::M1 | ManifoldKind::M2 => {
            let u: Vec<f64> = (0..n * 2).map(|_| rng.random::<f64>()).collect();
            let w1 = normals(&mut rng, 2, 30);
            let mut hidden = matmul(&u, &w1, n, 2, 30);
            let values = if spec.kind == ManifoldKind::M1 {
                hidden.iter_mut().for_each(|v| *v = v.cos());
                hidden
            } else {
                hidden.iter_mut().for_each(|v| *v = sigmoid(*v));
                let w2 = normals(&mut rng, 30, 300);
                let mut out = matmul(&hidden, &w2, n, 30, 300);
                out.iter_mut().for_each(|v| *v = v.cos());
                out
            };
            (values, u.chunks(2).map(<[f64]>::to_vec).collect())
        }
        ManifoldKind::M3 => {
            let mut values = Vec::with_capacity(3 * n);
            let mut params = Vec::with_capacity(n);
            for _ in 0..n {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                values.extend([x, y, (-(x * x + y * y).sqrt()).exp()]);
                params.push(vec![x, y]);
            }
            (values, params)
        }
        ManifoldKind::M4 => {
            let mut values = Vec::with_capacity(3 * n);
            let mut params = Vec::with_capacity(n);
            for _ in 0..n {
                let x: f64 = rng.random();
                let y: f64 = rng.random();
                values.extend([x, y, 20.0 * (-(x * x + y * y)).exp()]);
                params.push(vec![x, y]);
            }
            (values, params)
        }
        ManifoldKind::M5 | ManifoldKind::SwissRoll => {
            let params = draw_swiss_params(&mut rng, n);
            let cosine = spec.kind == ManifoldKind::M5;
            let values = params
                .iter()
                .flat_map(|p| swiss_roll_point(p[0], p[1]))
                .map(|v| if cosine { v.cos() } else { v })
                .collect();
            (values, params)
        }
        ManifoldKind::M6 => {
            let mut values = Vec::with_capacity(3 * n);
            let mut params = Vec::with_capacity(n);
            for _ in 0..n {
                let u = uniform(&mut rng, 0.0, 4.0 * PI);
                let v = u / 2.0;
                let r = 3.0 + u.cos();
                values.extend([r * v.cos(), r * v.sin(), u.sin()]);
                params.push(vec![u]);
            }
            (values, params)
        }
    };
    Ok(Sample {
        data: MaskedDataset::complete(n, m, values)?,
        intrinsic,
    })
}

/// Swiss roll with `t` uniform on `[1.5 pi, 4.5 pi]` and height uniform on `[0, 21]`.
pub fn swiss_roll(n: usize, seed: u64) -> Result<Sample> {
    generate(&ManifoldSpec {
        kind: ManifoldKind::SwissRoll,
        n,
        seed,
    })
}

/// Hides exactly `floor(fraction * n * m)` entries chosen uniformly without
/// replacement. Entries that were already missing stay missing.
pub fn mask_uniform_fraction(data: &MaskedDataset, fraction: f64, seed: u64) -> Result<MaskedDataset> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::param(format!("mask fraction must be in [0, 1), got {fraction}")));
    }
    let total = data.n() * data.m();
    // The nudge keeps products like 0.29 * 100 from flooring to 28.
    let count = ((fraction * total as f64) + 1e-9).floor() as usize;
    let mut mask = data.mask().to_vec();
    let mut rng = rng_for(seed, Stream::Mask);
    for idx in sample(&mut rng, total, count.min(total)) {
        mask[idx] = false;
    }
    data.with_mask(mask)
}

/// Keeps each entry independently with probability `p_present`.
pub fn mask_bernoulli(data: &MaskedDataset, p_present: f64, seed: u64) -> Result<MaskedDataset> {
    if !(p_present > 0.0 && p_present <= 1.0) {
        return Err(Error::param(format!("presence probability must be in (0, 1], got {p_present}")));
    }
    let mut rng = rng_for(seed, Stream::Mask);
    let mask = data
        .mask()
        .iter()
        .map(|&present| rng.random::<f64>() < p_present && present)
        .collect();
    data.with_mask(mask)
}

/// Adds independent `N(0, sigma^2)` noise to every off-diagonal entry, clamps
/// negatives to zero, then symmetrizes by averaging with the transpose.
pub fn corrupt_distances_gaussian(d: &Dissimilarity, sigma: f64, seed: u64) -> Result<Dissimilarity> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("sigma must be finite and nonnegative, got {sigma}")));
    }
    let n = d.n();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = rng_for(seed, Stream::Corrupt);
    let mut noisy = d.matrix().clone();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v: f64 = d.get(i, j) + noise.sample(&mut rng);
                noisy.set(i, j, v.max(0.0));
            }
        }
    }
    let out = SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            (noisy.get(i, j) + noisy.get(j, i)) / 2.0
        }
    });
    Dissimilarity::new(out)
}
