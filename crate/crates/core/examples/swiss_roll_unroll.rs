//! Isomap on a complete swiss roll, scored against the flat sheet the roll
//! was wound from (arc length along the spiral, height).
//!
//! cargo run --example swiss_roll_unroll -- [n] [k] [seed]

use manifold_repair::embedding::{isomap, Neighborhood};
use manifold_repair::evaluation::compare;
use manifold_repair::synthetic::swiss_roll;
use manifold_repair::Dissimilarity;
use nalgebra::DMatrix;

/// Length of the spiral `(t cos t, t sin t)` from 0 to `t`.
fn arc_length(t: f64) -> f64 {
    0.5 * (t * (1.0 + t * t).sqrt() + t.asinh())
}

fn main() -> manifold_repair::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(2000, |s| s.parse().expect("n"));
    let k: usize = args.next().map_or(10, |s| s.parse().expect("k"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    let roll = swiss_roll(n, seed)?;
    let points: Vec<Vec<f64>> = (0..n).map(|i| roll.data.value_row(i).to_vec()).collect();
    let embedding = isomap(&Dissimilarity::euclidean(&points)?, Neighborhood::Knn(k), 2)?;
    let kept = &embedding.kept_indices;
    let sheet = DMatrix::from_fn(kept.len(), 2, |r, c| {
        let [t, h] = [roll.intrinsic[kept[r]][0], roll.intrinsic[kept[r]][1]];
        if c == 0 { arc_length(t) } else { h }
    });

    let c = compare(&sheet, &embedding.coords, 10)?;
    println!("embedded {} of {n} points", kept.len());
    println!("eigenvalues: {:.1} {:.1}", embedding.eigenvalues[0], embedding.eigenvalues[1]);
    println!("relative error vs unrolled sheet: {:.4}", c.relative_error);
    println!("10-NN preservation vs unrolled sheet: {:.3}", c.neighborhood_preservation);
    Ok(())
}
