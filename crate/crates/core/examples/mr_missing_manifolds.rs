//! MR-Missing on the synthetic manifolds: each is embedded from complete data
//! and again with a share of its coordinates removed, and the two embeddings
//! are compared after Procrustes alignment.
//!
//! cargo run --example mr_missing_manifolds -- [n] [fraction] [k] [seed]

use manifold_repair::embedding::Neighborhood;
use manifold_repair::evaluation::compare;
use manifold_repair::pipeline::{mr_missing, PipelineConfig};
use manifold_repair::synthetic::{generate, mask_uniform_fraction, ManifoldKind, ManifoldSpec};
use manifold_repair::RepairConfig;

fn main() -> manifold_repair::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(500, |s| s.parse().expect("n"));
    let fraction: f64 = args.next().map_or(0.4, |s| s.parse().expect("fraction"));
    let k: usize = args.next().map_or(10, |s| s.parse().expect("k"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    println!("{:>10} {:>6} {:>8} {:>8} {:>7} {:>7}", "manifold", "dims", "missing", "raised", "error", "10-NN");
    for kind in ManifoldKind::ALL {
        let sample = generate(&ManifoldSpec { kind, n, seed })?;
        let config = PipelineConfig {
            neighborhood: Neighborhood::Knn(k),
            dim: kind.intrinsic_dim(),
            repair: RepairConfig::default(),
        };
        let full = mr_missing(&sample.data, &config)?;
        let masked = mask_uniform_fraction(&sample.data, fraction, seed)?;
        let result = mr_missing(&masked, &config)?;
        let (error, preserved) = if result.embedding.kept_indices == full.embedding.kept_indices {
            let c = compare(&full.embedding.coords, &result.embedding.coords, 10)?;
            (format!("{:.3}", c.relative_error), format!("{:.3}", c.neighborhood_preservation))
        } else {
            ("n/a".to_string(), "n/a".to_string())
        };
        println!(
            "{:>10} {:>6} {:>8} {:>8} {:>7} {:>7}",
            kind.to_string(),
            kind.ambient_dim(),
            result.diagnostics.missing_entries,
            result.diagnostics.repair_l0,
            error,
            preserved
        );
    }
    Ok(())
}
