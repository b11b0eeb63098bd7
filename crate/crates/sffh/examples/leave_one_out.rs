//! Leave-one-out evaluation on the example data, comparing the full
//! spatial-functional model against the spatial-only ablation. Each
//! fold removes one area's likelihood term and predicts its outcome
//! from the covariates and spatial smoothing alone.
//!
//! ```bash
//! cargo run -p sffh --example leave_one_out
//! ```

use sffh::cli::load_inputs;
use sffh::config::RunConfig;
use sffh::experiments::{deviation_ratios, leave_one_out};
use sffh::gibbs::Variant;

fn main() -> Result<(), sffh::Error> {
    let config =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/config.toml");
    let mut cfg = RunConfig::load(config)?;
    cfg.mcmc.iterations = 5_000;
    cfg.mcmc.burn_in = 500;
    cfg.paths.output_dir = std::env::temp_dir().join("sffh_loo_example");
    let inputs = load_inputs(&cfg)?;
    let scores = inputs.scores();

    let mut reports = Vec::new();
    for variant in [Variant::Sffh, Variant::SpatialOnly] {
        let mut spec = cfg.model_spec()?;
        spec.variant = variant;
        println!(
            "running {} leave-one-out ({} folds)...",
            variant,
            inputs.data.n()
        );
        reports.push(leave_one_out(
            &inputs.data,
            &scores,
            &inputs.graph,
            &spec,
            2,
        )?);
    }

    let ratios = deviation_ratios(&reports[0], &reports[1])?;
    println!("\narea      y        yhat_sffh  sq_dev_sffh  sq_dev_sp    ratio  winner");
    for (i, (ratio, winner)) in ratios.iter().enumerate() {
        println!(
            "{:4}   {:+.4}   {:+.4}    {:.3e}    {:.3e}   {:6.2}  {}",
            reports[0].area_ids[i],
            reports[0].y[i],
            reports[0].yhat[i],
            reports[0].sq_dev[i],
            reports[1].sq_dev[i],
            ratio,
            winner
        );
    }
    println!("\nMSPE  sffh         = {:.5e}", reports[0].mspe);
    println!("MSPE  spatial_only = {:.5e}", reports[1].mspe);
    Ok(())
}
