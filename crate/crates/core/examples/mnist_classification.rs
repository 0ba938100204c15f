//! k-NN accuracy on 100-dimensional MR-Missing embeddings of MNIST. Training
//! images are embedded directly, test images are placed with the out-of-sample
//! formula, and both sets have the same fraction of pixels removed.
//!
//! cargo run --example mnist_classification -- [graph k] [classifier k] [fractions...]

use std::path::PathBuf;
use std::time::Instant;

use manifold_repair::cli::select_mnist;
use manifold_repair::embedding::Neighborhood;
use manifold_repair::evaluation::{accuracy, knn_classify};
use manifold_repair::io::{read_idx_images, read_idx_labels};
use manifold_repair::pipeline::{mr_missing, project_new_points, PipelineConfig};
use manifold_repair::synthetic::mask_uniform_fraction;
use manifold_repair::RepairConfig;

const TRAIN_PER_DIGIT: usize = 500;
const TEST_PER_DIGIT: usize = 100;

fn main() -> manifold_repair::Result<()> {
    let mut args = std::env::args().skip(1);
    let graph_k: usize = args.next().map_or(10, |s| s.parse().expect("graph k"));
    let clf_k: usize = args.next().map_or(5, |s| s.parse().expect("classifier k"));
    let mut fractions: Vec<f64> = args.map(|s| s.parse().expect("fraction")).collect();
    if fractions.is_empty() {
        fractions = vec![0.0, 0.4, 0.5, 0.8];
    }

    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let images = read_idx_images(&dir.join("images.idx3-ubyte.gz"))?;
    let labels = read_idx_labels(&dir.join("labels.idx1-ubyte.gz"))?;
    let digits: Vec<u8> = (0..10).collect();
    let select = select_mnist(&labels, &digits, Some(TRAIN_PER_DIGIT + TEST_PER_DIGIT), None);

    // Within each digit the first images train and the rest test.
    let mut seen = [0usize; 10];
    let (mut train_rows, mut test_rows) = (Vec::new(), Vec::new());
    for (row, &i) in select.iter().enumerate() {
        let d = labels[i] as usize;
        if seen[d] < TRAIN_PER_DIGIT { train_rows.push(row) } else { test_rows.push(row) }
        seen[d] += 1;
    }
    let all = images.dataset(&select)?;
    let label_of = |rows: &[usize]| rows.iter().map(|&r| labels[select[r]] as usize).collect::<Vec<_>>();
    let test_labels = label_of(&test_rows);

    let config = PipelineConfig {
        neighborhood: Neighborhood::Knn(graph_k),
        dim: 100,
        repair: RepairConfig::default(),
    };
    for fraction in fractions {
        let t = Instant::now();
        let masked = mask_uniform_fraction(&all, fraction, 0)?;
        let train = masked.select_rows(&train_rows);
        let test = masked.select_rows(&test_rows);
        let result = mr_missing(&train, &config)?;
        let projected = project_new_points(&result, &train, &test, config.neighborhood)?;
        let kept = &result.embedding.kept_indices;
        let train_labels = label_of(&train_rows);
        let kept_labels: Vec<usize> = kept.iter().map(|&i| train_labels[i]).collect();
        let predicted = knn_classify(&result.embedding.coords, &kept_labels, &projected, clf_k)?;
        println!(
            "{:>3.0}% missing: accuracy {:.3}  (train embedded {}/{}, repair l0 {}, {:.1?})",
            fraction * 100.0,
            accuracy(&predicted, &test_labels)?,
            kept.len(),
            train.n(),
            result.diagnostics.repair_l0,
            t.elapsed()
        );
    }
    Ok(())
}
