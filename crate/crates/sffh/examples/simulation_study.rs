//! Reduced version of the calibrated simulation study: fit the generator
//! on the example data, draw synthetic datasets, refit all three model
//! variants to each, and compare mean squared errors against the
//! generator truth.
//!
//! The shipped configuration runs 250 datasets; this example uses 25 so
//! it finishes in about half a minute.
//!
//! ```bash
//! cargo run -p sffh --example simulation_study
//! ```

use sffh::cli::load_inputs;
use sffh::config::RunConfig;
use sffh::experiments::{calibrate_generator, run_comparison, simulate_datasets, SimulationConfig};
use sffh::gibbs::Variant;
use sffh::stats::derive_seed;

fn main() -> Result<(), sffh::Error> {
    let config =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/config.toml");
    let mut cfg = RunConfig::load(config)?;
    cfg.mcmc.iterations = 10_000;
    cfg.mcmc.burn_in = 1_000;
    cfg.paths.output_dir = std::env::temp_dir().join("sffh_sim_example");
    let inputs = load_inputs(&cfg)?;
    let spec = cfg.model_spec()?;

    let covariates = inputs
        .covariates
        .as_ref()
        .expect("example data has covariates");
    let covariate = cfg.simulation_covariate(covariates.names())?;
    println!(
        "calibrating the generator on covariate '{covariate}' (K = {})",
        cfg.simulation.k
    );
    let (params, scores) = calibrate_generator(
        &inputs.data,
        covariates,
        &covariate,
        cfg.simulation.k,
        &inputs.graph,
        &spec,
    )?;
    println!(
        "  beta0_hat = {:+.4}, sigma_u2_hat = {:.5}, |b_hat| range [{:.4}, {:.4}]",
        params.beta0_hat,
        params.sigma_u2_hat,
        params
            .b_hat
            .iter()
            .map(|b| b.abs())
            .fold(f64::INFINITY, f64::min),
        params.b_hat.iter().map(|b| b.abs()).fold(0.0, f64::max),
    );

    let truth = params.mean(&scores)?;
    let sim = SimulationConfig {
        n_datasets: 25,
        generator: params,
        seed: derive_seed(cfg.seed()?, 0xD5),
    };
    let datasets = simulate_datasets(&sim, &scores, inputs.data.area_ids())?;
    println!("simulated {} datasets", datasets.len());

    let variants = [Variant::Sffh, Variant::Ffh, Variant::SpatialOnly];
    let report = run_comparison(
        &datasets,
        &truth,
        &scores,
        &inputs.graph,
        &spec,
        &variants,
        2,
    )?;

    println!("\narea   mse_sffh    mse_ffh     mse_spatial  winner");
    for (i, area) in report.area_ids.iter().enumerate() {
        println!(
            "{:4}   {:.3e}   {:.3e}   {:.3e}    {}",
            area,
            report.per_area_mse[0][i],
            report.per_area_mse[1][i],
            report.per_area_mse[2][i],
            report.variants[report.winner[i]]
        );
    }
    println!("\noverall MSE:");
    for (v, &mse) in report.variants.iter().zip(&report.overall_mse) {
        println!("  {v:12}  {mse:.4e}  (wins {} areas)", report.wins_for(*v));
    }
    Ok(())
}
