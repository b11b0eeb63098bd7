//! Sum-to-zero constrained sampling on the eastern US adjacency graph.
//!
//! Draws spatial effects from a conditional Gaussian restricted to the
//! hyperplane sum(u) = 0 and verifies the constraint and the ICAR
//! quadratic form numerically.
//!
//! ```bash
//! cargo run -p sffh --example constrained_gmrf
//! ```

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use sffh::graph::{icar_quadform, load_adjacency_csv, sample_constrained_gmrf};

fn main() -> Result<(), sffh::Error> {
    let data_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let area_ids: Vec<String> = [
        "AL", "CT", "DC", "FL", "GA", "IL", "IN", "KY", "MD", "MA", "MI", "MN", "MO", "NJ", "NY",
        "NC", "OH", "PA", "SC", "TN", "WI",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let graph = load_adjacency_csv(data_dir.join("eastern_us/adjacency.csv"), &area_ids)?;
    println!(
        "graph: {} areas, {} edges; neighbor counts {:?}",
        graph.n(),
        graph.edges().len(),
        graph.w_plus()
    );

    // conditional precision: data precision plus the ICAR skeleton
    let n = graph.n();
    let sigma_u2 = 0.05f64;
    let precision = graph.precision_skeleton() / sigma_u2 + DMatrix::identity(n, n) * 40.0;
    let mean_term = DVector::from_fn(n, |i, _| if i % 4 == 0 { 2.0 } else { -0.5 });

    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let mut max_abs_sum = 0.0f64;
    let mut mean = DVector::zeros(n);
    let draws = 5_000;
    let mut last = DVector::zeros(n);
    for _ in 0..draws {
        let u = sample_constrained_gmrf(&precision, &mean_term, &mut rng)?;
        max_abs_sum = max_abs_sum.max(u.sum().abs());
        mean += &u;
        last = u;
    }
    mean /= draws as f64;

    println!("max |sum u| over {draws} draws: {max_abs_sum:.2e}");
    println!(
        "quadratic form u'(D_w - W)u of the last draw: {:.4}",
        icar_quadform(&graph, &last)
    );
    println!("posterior-mean field (first 6 areas):");
    for i in 0..6 {
        println!("  {}  {:+.4}", area_ids[i], mean[i]);
    }
    println!("sum of the mean field: {:+.2e}", mean.sum());
    Ok(())
}
