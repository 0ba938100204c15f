//! Increase-only metric repair on small hand-made matrices.

use manifold_repair::{check_metric, iomr_fixed_pass, repair_to_fixpoint, Dissimilarity};

fn show(label: &str, d: &Dissimilarity) {
    println!("{label}:");
    for i in 0..d.n() {
        let row: Vec<String> = (0..d.n()).map(|j| format!("{:5.2}", d.get(i, j))).collect();
        println!("  {}", row.join(" "));
    }
}

fn main() -> manifold_repair::Result<()> {
    // The long side of this triangle exceeds the other two combined.
    let d = Dissimilarity::from_rows(&[vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]])?;
    show("input", &d);
    let report = check_metric(&d, 0.0);
    println!("violations: {} (largest slack {})", report.count, report.max_slack);

    let (once, delta) = iomr_fixed_pass(&d);
    show("after one pass", &once);
    println!("entries raised: {}", delta.l0());

    // Points on a line at 0, 1, 2, 3, 4 with two distances recorded far too short.
    let mut rows: Vec<Vec<f64>> = (0..5).map(|i| (0..5).map(|j| (i as f64 - j as f64).abs()).collect()).collect();
    for (i, j, v) in [(0, 4, 0.5), (1, 3, 0.2)] {
        rows[i][j] = v;
        rows[j][i] = v;
    }
    let line = Dissimilarity::from_rows(&rows)?;
    show("line with two short entries", &line);
    let outcome = repair_to_fixpoint(&line, 20, 1e-12)?;
    show("repaired", &outcome.repaired);
    println!(
        "iterations: {}, entries raised: {}, metric: {}",
        outcome.iterations,
        outcome.delta.l0(),
        check_metric(&outcome.repaired, 1e-12).is_empty()
    );

    // Already a metric: nothing changes.
    let again = repair_to_fixpoint(&outcome.repaired, 20, 1e-12)?;
    println!("second repair is zero: {}", again.delta.is_zero());
    Ok(())
}
