//! `sae`: config-driven small area estimation runs.

use clap::{Args, Parser, Subcommand};

use sffh::cli;
use sffh::config::RunConfig;
use sffh::error::Result;
use sffh::gibbs::Variant;

#[derive(Parser)]
#[command(
    name = "sae",
    version,
    about = "Small area estimation with spatial Fay-Herriot models and functional covariates",
    after_help = "Exit codes: 2 input validation, 3 numerical failure, 4 I/O. \
                  The SAE_SEED environment variable overrides the configured seed."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the run configuration TOML file
    #[arg(long)]
    config: std::path::PathBuf,

    /// Override the configured seed
    #[arg(long)]
    seed: Option<u64>,

    /// Override the configured output directory
    #[arg(long)]
    output_dir: Option<std::path::PathBuf>,

    /// Override the MCMC iteration count
    #[arg(long)]
    iterations: Option<usize>,

    /// Override the MCMC burn-in
    #[arg(long)]
    burn_in: Option<usize>,

    /// Validate inputs and exit without writing anything
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model and write summary.csv and inclusion.csv
    Fit {
        #[command(flatten)]
        common: Common,
        /// Override the model variant (sffh, ffh, spatial_only)
        #[arg(long)]
        variant: Option<Variant>,
        /// Override the thinning interval
        #[arg(long)]
        thin: Option<usize>,
        /// Also write the retained draws to draws.csv
        #[arg(long)]
        draws: bool,
    },
    /// Decompose the functional covariates; write basis.csv and scores.csv
    Kl {
        #[command(flatten)]
        common: Common,
    },
    /// Calibrate a generator and write synthetic dataset files
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Override the number of synthetic datasets
        #[arg(long)]
        n_datasets: Option<usize>,
        /// Override the calibration covariate
        #[arg(long)]
        covariate: Option<String>,
    },
    /// Simulate datasets and score all three variants against the truth
    Compare {
        #[command(flatten)]
        common: Common,
        /// Override the number of synthetic datasets
        #[arg(long)]
        n_datasets: Option<usize>,
        /// Override the calibration covariate
        #[arg(long)]
        covariate: Option<String>,
        /// Parallel fits (0 = rayon default)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Leave-one-out evaluation; repeat --variant to compare two models
    Loo {
        #[command(flatten)]
        common: Common,
        /// Variant(s) to evaluate; exactly two adds ratio columns
        #[arg(long)]
        variant: Vec<Variant>,
        /// Parallel folds (0 = rayon default)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// In-sample MSE over the (c, tau) grid
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Parallel fits (0 = rayon default)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.mcmc.seed = Some(seed);
    }
    if let Some(dir) = &common.output_dir {
        cfg.paths.output_dir = dir.clone();
    }
    if let Some(it) = common.iterations {
        cfg.mcmc.iterations = it;
    }
    if let Some(b) = common.burn_in {
        cfg.mcmc.burn_in = b;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            common,
            variant,
            thin,
            draws,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(v) = variant {
                cfg.model.variant = v;
            }
            if let Some(t) = thin {
                cfg.mcmc.thin = t;
            }
            cli::cmd_fit(&cfg, common.dry_run, draws)
        }
        Command::Kl { common } => {
            let cfg = load_config(&common)?;
            cli::cmd_kl(&cfg, common.dry_run)
        }
        Command::Simulate {
            common,
            n_datasets,
            covariate,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(n) = n_datasets {
                cfg.simulation.n_datasets = n;
            }
            if let Some(c) = covariate {
                cfg.simulation.covariate = c;
            }
            cli::cmd_simulate(&cfg, common.dry_run)
        }
        Command::Compare {
            common,
            n_datasets,
            covariate,
            jobs,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(n) = n_datasets {
                cfg.simulation.n_datasets = n;
            }
            if let Some(c) = covariate {
                cfg.simulation.covariate = c;
            }
            cli::cmd_compare(&cfg, common.dry_run, jobs)
        }
        Command::Loo {
            common,
            variant,
            jobs,
        } => {
            let cfg = load_config(&common)?;
            cli::cmd_loo(&cfg, common.dry_run, jobs, &variant)
        }
        Command::Sensitivity { common, jobs } => {
            let cfg = load_config(&common)?;
            cli::cmd_sensitivity(&cfg, common.dry_run, jobs)
        }
    }
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
