//! Calibrated simulation study, leave-one-out evaluation, and the
//! spike-and-slab sensitivity grid.
//!
//! The simulation study generates synthetic survey responses from a fitted
//! model: detrend one functional covariate, decompose its empirical
//! covariance, fit the SFFH model to the real responses on the leading
//! score columns, then repeatedly draw
//! `Y* = beta0_hat + Xi b_hat + u_hat + eps` with fresh noise
//! eps ~ N(0, diag(sigma_i^2)). Competing variants are refit to every
//! replicate and scored against the generator mean.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::{FunctionalCovariateSet, SurveyDataset};
use crate::error::{Error, Result};
use crate::gibbs::{run_chain, run_chain_masked, ModelSpec, Variant};
use crate::graph::AreaGraph;
use crate::kl::{self, Centering, KLScores, TruncationRule};
use crate::stats::derive_seed;

/// Point estimates driving the synthetic-data generator.
#[derive(Debug, Clone)]
pub struct GeneratorParams {
    pub beta0_hat: f64,
    pub b_hat: DVector<f64>,
    pub u_hat: DVector<f64>,
    /// Known sampling variances reused for the noise draws.
    pub sigma2: DVector<f64>,
    /// Posterior mean of sigma_u^2 from the calibration fit, kept for
    /// reference; generation plugs in `u_hat` directly.
    pub sigma_u2_hat: f64,
}

impl GeneratorParams {
    /// The noise-free generator mean beta0 + Xi b + u.
    pub fn mean(&self, scores: &KLScores) -> Result<DVector<f64>> {
        let (n, k) = scores.standardized.shape();
        if k != self.b_hat.len() {
            return Err(Error::validation(format!(
                "generator has {} coefficients for {k} score columns",
                self.b_hat.len()
            )));
        }
        if n != self.u_hat.len() || n != self.sigma2.len() {
            return Err(Error::validation(format!(
                "generator dimensions disagree: {} scores rows, {} spatial effects, {} variances",
                n,
                self.u_hat.len(),
                self.sigma2.len()
            )));
        }
        Ok(DVector::from_fn(n, |i, _| {
            self.beta0_hat + scores.standardized.row(i).transpose().dot(&self.b_hat) + self.u_hat[i]
        }))
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub n_datasets: usize,
    pub generator: GeneratorParams,
    pub seed: u64,
}

/// Fit the full model once to obtain generator parameters.
///
/// Uses a single functional covariate (detrended with the across-area mean
/// curve), the leading `k` components, and an SFFH fit without scalar
/// covariates. Returns the fitted parameters and the score matrix they
/// refer to.
pub fn calibrate_generator(
    data: &SurveyDataset,
    covariates: &FunctionalCovariateSet,
    covariate_name: &str,
    k: usize,
    graph: &AreaGraph,
    spec: &ModelSpec,
) -> Result<(GeneratorParams, KLScores)> {
    let z = covariates.series_by_name(covariate_name).ok_or_else(|| {
        Error::validation(format!(
            "covariate '{covariate_name}' not found (available: {})",
            covariates.names().join(", ")
        ))
    })?;
    let (_, scores) = kl::decompose_covariate(
        z,
        covariate_name,
        Centering::PerTimeMean,
        TruncationRule::Fixed(k),
    )?;

    // generator model has no scalar covariates
    let plain = SurveyDataset::new(
        data.area_ids().to_vec(),
        data.y().clone(),
        data.sigma2().clone(),
        None,
    )?;
    let mut fit_spec = spec.clone();
    fit_spec.variant = Variant::Sffh;
    let draws = run_chain(&plain, std::slice::from_ref(&scores), graph, &fit_spec)?;

    let params = GeneratorParams {
        beta0_hat: crate::stats::mean(&draws.beta0),
        b_hat: draws.coef_mean(),
        u_hat: draws.u_mean(),
        sigma2: data.sigma2().clone(),
        sigma_u2_hat: crate::stats::mean(&draws.sigma_u2),
    };
    Ok((params, scores))
}

/// Draw `n_datasets` synthetic survey datasets with fresh noise around the
/// fixed generator mean. Bit-reproducible given the seed.
pub fn simulate_datasets(
    cfg: &SimulationConfig,
    scores: &KLScores,
    area_ids: &[String],
) -> Result<Vec<SurveyDataset>> {
    if cfg.n_datasets == 0 {
        return Err(Error::validation(
            "n_datasets must be at least 1".to_string(),
        ));
    }
    let mean = cfg.generator.mean(scores)?;
    let n = mean.len();
    if area_ids.len() != n {
        return Err(Error::validation(format!(
            "{} area ids for {n} generator rows",
            area_ids.len()
        )));
    }
    let sd = DVector::from_fn(n, |i, _| cfg.generator.sigma2[i].sqrt());
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_datasets);
    for _ in 0..cfg.n_datasets {
        let y = DVector::from_fn(n, |i, _| {
            mean[i] + sd[i] * rng.sample::<f64, _>(StandardNormal)
        });
        out.push(SurveyDataset::new(
            area_ids.to_vec(),
            y,
            cfg.generator.sigma2.clone(),
            None,
        )?);
    }
    Ok(out)
}

/// Per-area and overall mean squared error of each variant across the
/// simulated datasets.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub area_ids: Vec<String>,
    pub variants: Vec<Variant>,
    /// `per_area_mse[v][i]` for variant v, area i.
    pub per_area_mse: Vec<Vec<f64>>,
    /// Mean of the per-area values, one per variant.
    pub overall_mse: Vec<f64>,
    /// Index into `variants` of the winner per area.
    pub winner: Vec<usize>,
    pub n_datasets_used: usize,
    pub n_datasets_failed: usize,
}

impl ComparisonReport {
    pub fn wins_for(&self, variant: Variant) -> usize {
        let Some(v) = self.variants.iter().position(|&x| x == variant) else {
            return 0;
        };
        self.winner.iter().filter(|&&w| w == v).count()
    }

    pub fn overall_for(&self, variant: Variant) -> Option<f64> {
        self.variants
            .iter()
            .position(|&x| x == variant)
            .map(|v| self.overall_mse[v])
    }
}

/// Refit every variant to every dataset and score posterior means of theta
/// against the generator mean.
///
/// Chain seeds derive deterministically from the base seed, the dataset
/// index, and the variant, so results do not depend on scheduling. A
/// dataset whose fit fails is dropped from all variants; more than 1%
/// failures aborts.
pub fn run_comparison(
    datasets: &[SurveyDataset],
    truth: &DVector<f64>,
    scores: &KLScores,
    graph: &AreaGraph,
    base_spec: &ModelSpec,
    variants: &[Variant],
    jobs: usize,
) -> Result<ComparisonReport> {
    if datasets.is_empty() || variants.is_empty() {
        return Err(Error::validation(
            "need at least one dataset and one variant".to_string(),
        ));
    }
    let n = datasets[0].n();
    if truth.len() != n {
        return Err(Error::validation(format!(
            "truth vector has length {}, expected {n}",
            truth.len()
        )));
    }

    let fit_one = |(d, dataset): (usize, &SurveyDataset)| -> Result<Vec<DVector<f64>>> {
        variants
            .iter()
            .enumerate()
            .map(|(v, &variant)| {
                let mut spec = base_spec.clone();
                spec.variant = variant;
                spec.mcmc.seed = derive_seed(base_spec.mcmc.seed, (d as u64) * 8 + v as u64);
                let draws = run_chain(dataset, std::slice::from_ref(scores), graph, &spec)?;
                Ok(draws.theta_mean())
            })
            .collect()
    };

    let results: Vec<Result<Vec<DVector<f64>>>> = in_pool(jobs, || {
        datasets.par_iter().enumerate().map(fit_one).collect()
    })?;

    let mut sums = vec![vec![0.0; n]; variants.len()];
    let mut used = 0usize;
    let mut failed = 0usize;
    for (d, res) in results.into_iter().enumerate() {
        match res {
            Ok(theta_by_variant) => {
                for (v, theta) in theta_by_variant.iter().enumerate() {
                    for i in 0..n {
                        let e = theta[i] - truth[i];
                        sums[v][i] += e * e;
                    }
                }
                used += 1;
            }
            Err(e) => {
                log::warn!("dataset {d} excluded from the comparison: {e}");
                failed += 1;
            }
        }
    }
    let total = used + failed;
    if failed > 0 && (failed as f64) / (total as f64) >= 0.01 {
        return Err(Error::numerical(format!(
            "{failed} of {total} datasets failed to fit; aborting the comparison"
        )));
    }
    if used == 0 {
        return Err(Error::numerical(
            "no dataset fitted successfully".to_string(),
        ));
    }

    let per_area_mse: Vec<Vec<f64>> = sums
        .iter()
        .map(|s| s.iter().map(|&x| x / used as f64).collect())
        .collect();
    let overall_mse: Vec<f64> = per_area_mse
        .iter()
        .map(|per_area| per_area.iter().sum::<f64>() / n as f64)
        .collect();
    let winner: Vec<usize> = (0..n)
        .map(|i| {
            (0..variants.len())
                .min_by(|&a, &b| per_area_mse[a][i].partial_cmp(&per_area_mse[b][i]).unwrap())
                .unwrap()
        })
        .collect();

    Ok(ComparisonReport {
        area_ids: datasets[0].area_ids().to_vec(),
        variants: variants.to_vec(),
        per_area_mse,
        overall_mse,
        winner,
        n_datasets_used: used,
        n_datasets_failed: failed,
    })
}

/// Leave-one-out predictions for one variant.
#[derive(Debug, Clone)]
pub struct LooReport {
    pub variant: Variant,
    pub area_ids: Vec<String>,
    pub y: Vec<f64>,
    /// Posterior mean of theta_i with area i's likelihood term removed.
    pub yhat: Vec<f64>,
    pub sq_dev: Vec<f64>,
    pub mspe: f64,
}

/// Refit with each area's likelihood term dropped in turn.
///
/// The held-out area keeps its place in the graph and its covariates, so
/// its theta stays predictable through spatial smoothing and the scores.
/// Fold seeds derive from (seed, fold), making the report independent of
/// the order folds run in.
pub fn leave_one_out(
    data: &SurveyDataset,
    scores: &[KLScores],
    graph: &AreaGraph,
    spec: &ModelSpec,
    jobs: usize,
) -> Result<LooReport> {
    let n = data.n();
    if n < 3 {
        return Err(Error::validation(format!(
            "leave-one-out needs at least 3 areas, got {n}"
        )));
    }
    let folds: Vec<Result<f64>> = in_pool(jobs, || {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut fold_spec = spec.clone();
                fold_spec.mcmc.seed = derive_seed(spec.mcmc.seed, 0x100 + i as u64);
                let mut included = vec![true; n];
                included[i] = false;
                let draws = run_chain_masked(data, scores, graph, &fold_spec, &included)?;
                Ok(draws.theta_mean()[i])
            })
            .collect()
    })?;

    let mut yhat = Vec::with_capacity(n);
    for (i, f) in folds.into_iter().enumerate() {
        yhat.push(f.map_err(|e| {
            Error::numerical(format!("fold for area '{}': {e}", data.area_ids()[i]))
        })?);
    }
    let y: Vec<f64> = data.y().iter().copied().collect();
    let sq_dev: Vec<f64> = y
        .iter()
        .zip(&yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    let mspe = sq_dev.iter().sum::<f64>() / n as f64;
    Ok(LooReport {
        variant: spec.variant,
        area_ids: data.area_ids().to_vec(),
        y,
        yhat,
        sq_dev,
        mspe,
    })
}

/// Per-area ratio of the larger to the smaller squared deviation between
/// two leave-one-out reports, plus which report won.
///
/// Equal deviations give ratio 1; a zero on one side only gives infinity.
pub fn deviation_ratios(a: &LooReport, b: &LooReport) -> Result<Vec<(f64, Variant)>> {
    if a.area_ids != b.area_ids {
        return Err(Error::validation(
            "leave-one-out reports cover different areas".to_string(),
        ));
    }
    Ok(a.sq_dev
        .iter()
        .zip(&b.sq_dev)
        .map(|(&da, &db)| {
            let (lo, hi) = if da <= db { (da, db) } else { (db, da) };
            let ratio = if hi == 0.0 {
                1.0
            } else if lo == 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            };
            let winner = if da <= db { a.variant } else { b.variant };
            (ratio, winner)
        })
        .collect())
}

/// One cell of the (c, tau) sensitivity grid.
#[derive(Debug, Clone, Copy)]
pub struct SensitivityCell {
    pub c: f64,
    pub tau: f64,
    pub in_sample_mse: f64,
    pub is_minimizer: bool,
}

pub const DEFAULT_TAU_GRID: [f64; 3] = [1e-3, 1e-4, 1e-5];
pub const DEFAULT_C_GRID: [f64; 2] = [10.0, 100.0];

/// Fit the model at every (c, tau) combination and report the in-sample
/// MSE n^-1 sum (Y_i - theta_hat_i)^2, flagging the minimizer.
pub fn sensitivity_grid(
    data: &SurveyDataset,
    scores: &[KLScores],
    graph: &AreaGraph,
    base_spec: &ModelSpec,
    tau_grid: &[f64],
    c_grid: &[f64],
    jobs: usize,
) -> Result<Vec<SensitivityCell>> {
    if tau_grid.is_empty() || c_grid.is_empty() {
        return Err(Error::validation(
            "sensitivity grids must be nonempty".to_string(),
        ));
    }
    let cells: Vec<(f64, f64)> = c_grid
        .iter()
        .flat_map(|&c| tau_grid.iter().map(move |&tau| (c, tau)))
        .collect();
    let results: Vec<Result<f64>> = in_pool(jobs, || {
        cells
            .par_iter()
            .enumerate()
            .map(|(idx, &(c, tau))| {
                let mut spec = base_spec.clone();
                spec.ssvs.c = c;
                spec.ssvs.tau = tau;
                spec.mcmc.seed = derive_seed(base_spec.mcmc.seed, 0x2000 + idx as u64);
                let draws = run_chain(data, scores, graph, &spec)?;
                let theta = draws.theta_mean();
                let mse = (0..data.n())
                    .map(|i| {
                        let e = data.y()[i] - theta[i];
                        e * e
                    })
                    .sum::<f64>()
                    / data.n() as f64;
                Ok(mse)
            })
            .collect()
    })?;

    let mut out = Vec::with_capacity(cells.len());
    for ((c, tau), res) in cells.into_iter().zip(results) {
        out.push(SensitivityCell {
            c,
            tau,
            in_sample_mse: res?,
            is_minimizer: false,
        });
    }
    let best = (0..out.len())
        .min_by(|&a, &b| {
            out[a]
                .in_sample_mse
                .partial_cmp(&out[b].in_sample_mse)
                .unwrap()
        })
        .unwrap();
    out[best].is_minimizer = true;
    Ok(out)
}

/// Run a closure inside a rayon pool with `jobs` threads (0 = rayon's
/// default).
fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
