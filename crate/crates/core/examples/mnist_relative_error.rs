//! Relative error of MR-Missing embeddings of MNIST digits 0-4 against the
//! full-data Isomap embedding, for several missing fractions and dimensions.
//!
//! cargo run --release --example mnist_relative_error -- [k] [seed]

use std::path::PathBuf;
use std::time::Instant;

use manifold_repair::cli::select_mnist;
use manifold_repair::embedding::Neighborhood;
use manifold_repair::evaluation::procrustes_align;
use manifold_repair::io::{read_idx_images, read_idx_labels};
use manifold_repair::pipeline::{mr_missing, PipelineConfig};
use manifold_repair::synthetic::mask_uniform_fraction;
use manifold_repair::RepairConfig;

fn main() -> manifold_repair::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().map_or(20, |s| s.parse().expect("k"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let images = read_idx_images(&dir.join("images.idx3-ubyte.gz"))?;
    let labels = read_idx_labels(&dir.join("labels.idx1-ubyte.gz"))?;
    let select = select_mnist(&labels, &[0, 1, 2, 3, 4], None, Some(1000));
    let full = images.dataset(&select)?;

    let dims = [2, 3, 4, 12];
    let max_dim = *dims.iter().max().unwrap();
    let config = PipelineConfig {
        neighborhood: Neighborhood::Knn(k),
        dim: max_dim,
        repair: RepairConfig::default(),
    };
    let t = Instant::now();
    let reference = mr_missing(&full, &config)?.embedding;
    println!("full data: {} points embedded in {:.1?}", reference.n(), t.elapsed());

    for fraction in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let t = Instant::now();
        let masked = mask_uniform_fraction(&full, fraction, seed)?;
        let result = mr_missing(&masked, &config)?;
        assert_eq!(result.embedding.kept_indices, reference.kept_indices, "components differ");
        let errors: Vec<String> = dims
            .iter()
            .map(|&d| {
                let a = procrustes_align(&reference.truncate(d).coords, &result.embedding.truncate(d).coords).unwrap();
                format!("{d}D {:.3}", a.relative_error)
            })
            .collect();
        println!(
            "{:>3.0}% missing: {}  (repair l0 {}, {} iterations, {:.1?})",
            fraction * 100.0,
            errors.join("  "),
            result.diagnostics.repair_l0,
            result.diagnostics.repair_iterations,
            t.elapsed()
        );
    }
    Ok(())
}
