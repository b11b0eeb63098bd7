//! Spike-and-slab sensitivity grid: fit the model at every (c, tau)
//! combination and report the in-sample MSE, flagging the minimizer.
//!
//! ```bash
//! cargo run -p sffh --example sensitivity_grid
//! ```

use sffh::cli::load_inputs;
use sffh::config::RunConfig;
use sffh::experiments::sensitivity_grid;

fn main() -> Result<(), sffh::Error> {
    let config =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/config.toml");
    let mut cfg = RunConfig::load(config)?;
    cfg.mcmc.iterations = 5_000;
    cfg.mcmc.burn_in = 500;
    cfg.paths.output_dir = std::env::temp_dir().join("sffh_sens_example");
    let inputs = load_inputs(&cfg)?;
    let spec = cfg.model_spec()?;
    let scores = inputs.scores();

    let cells = sensitivity_grid(
        &inputs.data,
        &scores,
        &inputs.graph,
        &spec,
        &cfg.sensitivity.tau_grid,
        &cfg.sensitivity.c_grid,
        2,
    )?;

    println!("c      tau      in_sample_mse");
    for cell in &cells {
        println!(
            "{:<6} {:<8.0e} {:.5e}{}",
            cell.c,
            cell.tau,
            cell.in_sample_mse,
            if cell.is_minimizer {
                "   <- minimizer"
            } else {
                ""
            }
        );
    }
    Ok(())
}
