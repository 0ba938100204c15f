//! Embeds part of a masked synthetic manifold with MR-Missing and places the
//! held-out points with the out-of-sample formula, then checks them against an
//! Isomap embedding of the complete, unmasked sample.
//!
//! cargo run --example out_of_sample -- [manifold] [n] [held out] [fraction] [k]

use manifold_repair::embedding::{isomap, Neighborhood};
use manifold_repair::evaluation::procrustes_align;
use manifold_repair::pipeline::{mr_missing, project_new_points, PipelineConfig};
use manifold_repair::synthetic::{generate, mask_uniform_fraction, ManifoldKind, ManifoldSpec};
use manifold_repair::{Dissimilarity, RepairConfig};
use nalgebra::DMatrix;

fn main() -> manifold_repair::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: ManifoldKind = args.next().map_or(Ok(ManifoldKind::M1), |s| s.parse())?;
    let n: usize = args.next().map_or(1000, |s| s.parse().expect("n"));
    let held: usize = args.next().map_or(200, |s| s.parse().expect("held out"));
    let fraction: f64 = args.next().map_or(0.2, |s| s.parse().expect("fraction"));
    let k: usize = args.next().map_or(10, |s| s.parse().expect("k"));
    assert!(held < n, "held out must be fewer than n");

    let roll = generate(&ManifoldSpec { kind, n, seed: 0 })?.data;
    let masked = mask_uniform_fraction(&roll, fraction, 0)?;
    let train_rows: Vec<usize> = (0..n - held).collect();
    let test_rows: Vec<usize> = (n - held..n).collect();
    let neighborhood = Neighborhood::Knn(k);
    let config = PipelineConfig { neighborhood, dim: 2, repair: RepairConfig::default() };

    let train = masked.select_rows(&train_rows);
    let result = mr_missing(&train, &config)?;
    let projected = project_new_points(&result, &train, &masked.select_rows(&test_rows), neighborhood)?;

    let points: Vec<Vec<f64>> = (0..n).map(|i| roll.value_row(i).to_vec()).collect();
    let reference = isomap(&Dissimilarity::euclidean(&points)?, neighborhood, 2)?;
    let row_of = |i: usize| reference.kept_indices.iter().position(|&r| r == i);
    let kept = &result.embedding.kept_indices;
    let rows: Vec<usize> = kept.iter().copied().chain(test_rows.iter().copied()).collect();
    if rows.iter().any(|&i| row_of(i).is_none()) {
        println!("reference embedding dropped some points; nothing to compare");
        return Ok(());
    }
    let candidate = DMatrix::from_fn(rows.len(), 2, |r, c| {
        if r < kept.len() { result.embedding.coords[(r, c)] } else { projected[(r - kept.len(), c)] }
    });
    let truth = DMatrix::from_fn(rows.len(), 2, |r, c| reference.coords[(row_of(rows[r]).unwrap(), c)]);
    let train_only = procrustes_align(&truth.rows(0, kept.len()).into_owned(), &candidate.rows(0, kept.len()).into_owned())?;
    let joint = procrustes_align(&truth, &candidate)?;
    println!("training points: relative error {:.4}", train_only.relative_error);
    println!("training + {held} projected: relative error {:.4}", joint.relative_error);
    Ok(())
}
