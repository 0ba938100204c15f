//! The lower-tail bound on masked squared distances, its best split parameter,
//! and a Monte Carlo check of the bound.
//!
//! cargo run --example theory_bound -- [n] [mu] [p_present] [epsilon] [trials]

use manifold_repair::theory::{monte_carlo_bound_check, optimize_gamma, TheoryParams};

fn main() -> manifold_repair::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(100, |s| s.parse().expect("n"));
    let mu: f64 = args.next().map_or(1.0, |s| s.parse().expect("mu"));
    let p_present: f64 = args.next().map_or(0.7, |s| s.parse().expect("p_present"));
    let epsilon: f64 = args.next().map_or(0.5, |s| s.parse().expect("epsilon"));
    let trials: usize = args.next().map_or(100_000, |s| s.parse().expect("trials"));

    let mut params = TheoryParams { n, mu1: mu, mu2: 0.0, p_present, epsilon, gamma: 0.0 };
    let (lo, hi) = params.epsilon_range();
    println!("feasible epsilon: ({lo:.4}, {hi:.4})");
    let (gamma, bound) = optimize_gamma(&params, 999)?;
    println!("best gamma {gamma:.4} gives bound {bound:.6}");

    params.gamma = gamma;
    let report = monte_carlo_bound_check(&params, trials, 0)?;
    println!(
        "empirical {:.6} +- {:.6} over {} draws; bound holds: {}",
        report.empirical, report.wilson_half_width, report.trials, report.ok
    );
    Ok(())
}
