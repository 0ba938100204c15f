//! Swiss roll with Gaussian noise on its distance matrix: Isomap on the
//! corrupted distances against Isomap after increase-only metric repair.
//!
//! cargo run --example corrupted_distance_repair -- [n] [sigma] [k] [seed]

use std::time::Instant;

use manifold_repair::embedding::{isomap, Neighborhood};
use manifold_repair::evaluation::compare;
use manifold_repair::pipeline::{repair_corrupted, PipelineConfig};
use manifold_repair::synthetic::{corrupt_distances_gaussian, swiss_roll};
use manifold_repair::repair::check_metric_capped;
use manifold_repair::{Dissimilarity, RepairConfig};

fn main() -> manifold_repair::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(1000, |s| s.parse().expect("n"));
    let sigma: f64 = args.next().map_or(0.1, |s| s.parse().expect("sigma"));
    let k: usize = args.next().map_or(10, |s| s.parse().expect("k"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    let roll = swiss_roll(n, seed)?;
    let points: Vec<Vec<f64>> = (0..n).map(|i| roll.data.value_row(i).to_vec()).collect();
    let clean = Dissimilarity::euclidean(&points)?;
    let neighborhood = Neighborhood::Knn(k);
    let reference = isomap(&clean, neighborhood, 2)?;

    let corrupted = corrupt_distances_gaussian(&clean, sigma, seed)?;
    let violations = check_metric_capped(&corrupted, 1e-9 * corrupted.max(), 0);
    println!("corrupted matrix: {} triangle violations", violations.count);

    let raw = isomap(&corrupted, neighborhood, 2)?;
    let t = Instant::now();
    let config = PipelineConfig { neighborhood, dim: 2, repair: RepairConfig::default() };
    let repaired = repair_corrupted(&corrupted, &config)?;
    println!(
        "repair: {} entries raised in {} iterations ({:.1?})",
        repaired.diagnostics.repair_l0,
        repaired.diagnostics.repair_iterations,
        t.elapsed()
    );

    for (name, emb) in [("corrupted", &raw), ("repaired", &repaired.embedding)] {
        if emb.kept_indices != reference.kept_indices {
            println!("{name}: embedded {} of {} points", emb.n(), n);
            continue;
        }
        let c = compare(&reference.coords, &emb.coords, 10)?;
        println!(
            "{name:>9}: relative error {:.4}, neighborhood preservation {:.3}",
            c.relative_error, c.neighborhood_preservation
        );
    }
    Ok(())
}
