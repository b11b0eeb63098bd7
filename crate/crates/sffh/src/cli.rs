//! Command implementations behind the `sae` binary.
//!
//! Every command reads a [`RunConfig`](crate::config::RunConfig), validates
//! its inputs, and writes plot-ready CSV files into the configured output
//! directory. Output files are written atomically (temp file + rename) and
//! the effective configuration is echoed alongside them. Column contracts
//! are documented in FORMATS.md at the repository root.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;

use crate::config::RunConfig;
use crate::data::{self, FunctionalCovariateSet, SurveyDataset};
use crate::error::{Error, Result};
use crate::experiments::{self, deviation_ratios, leave_one_out, run_comparison, SimulationConfig};
use crate::gibbs::{run_chain, PosteriorDraws, Variant};
use crate::graph::{load_adjacency_csv, AreaGraph};
use crate::kl::{KLBasis, KLScores};
use crate::stats::derive_seed;

/// Write a file atomically: temp file in the target directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::validation(format!("csv flush: {e}")))?;
    atomic_write(path, &bytes)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Inputs shared by all commands after validation and preprocessing:
/// outcomes transformed, curves standardized, scores extracted.
pub struct Inputs {
    pub data: SurveyDataset,
    /// Standardized curves; absent when the run has no functional
    /// covariates (spatial-only analyses).
    pub covariates: Option<FunctionalCovariateSet>,
    pub graph: AreaGraph,
    pub decomposed: Vec<(KLBasis, KLScores)>,
}

impl Inputs {
    pub fn scores(&self) -> Vec<KLScores> {
        self.decomposed.iter().map(|(_, s)| s.clone()).collect()
    }
}

/// Load and preprocess everything the configuration references.
pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    cfg.validate()?;
    let mut data = data::load_survey_csv(&cfg.paths.survey)?;
    if let Some(raw_path) = &cfg.paths.raw_outcome {
        let raw = data::load_raw_outcome_csv(raw_path)?;
        data = data::apply_outcome_transform(&data, &raw)?;
    }
    let covariates = if cfg.paths.covariates.is_empty() {
        None
    } else {
        let raw = data::load_functional_csv(&cfg.paths.covariates, data.area_ids())?;
        Some(data::standardize_curves(&raw, data.area_ids())?)
    };
    let graph = load_adjacency_csv(&cfg.paths.adjacency, data.area_ids())?;
    let decomposed = match &covariates {
        Some(c) => crate::kl::decompose_set(c, cfg.kl.centering, cfg.kl_rule()?)?,
        None => Vec::new(),
    };
    Ok(Inputs {
        data,
        covariates,
        graph,
        decomposed,
    })
}

fn dry_run_report(cfg: &RunConfig, inputs: &Inputs) -> String {
    let k_total: usize = inputs.decomposed.iter().map(|(_, s)| s.k_selected).sum();
    format!(
        "dry run ok: n={} areas, {} edges, J={} covariates, K={} components, output {}",
        inputs.data.n(),
        inputs.graph.edges().len(),
        inputs.decomposed.len(),
        k_total,
        cfg.paths.output_dir.display()
    )
}

fn write_summary(path: &Path, draws: &PosteriorDraws) -> Result<()> {
    let rows: Vec<Vec<String>> = draws
        .area_summaries()
        .iter()
        .map(|s| {
            vec![
                s.area_id.clone(),
                fmt(s.theta_mean),
                fmt(s.theta_var),
                fmt(s.q025),
                fmt(s.q500),
                fmt(s.q975),
                fmt(s.u_mean),
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            "area_id",
            "theta_mean",
            "theta_var",
            "q2.5",
            "q50",
            "q97.5",
            "u_mean",
        ],
        &rows,
    )
}

fn write_inclusion(path: &Path, draws: &PosteriorDraws) -> Result<()> {
    let probs = draws.inclusion_probabilities();
    let rows: Vec<Vec<String>> = draws
        .labels
        .iter()
        .zip(&probs)
        .map(|(label, &p)| vec![label.covariate.clone(), label.component.to_string(), fmt(p)])
        .collect();
    write_csv(path, &["covariate", "component_k", "inclusion_prob"], &rows)
}

fn coef_column_name(label: &crate::gibbs::CoefLabel) -> String {
    if label.component == 0 {
        format!("bx_{}", label.covariate)
    } else {
        format!("b_{}_{}", label.covariate, label.component)
    }
}

fn write_draws(path: &Path, draws: &PosteriorDraws) -> Result<()> {
    let mut header: Vec<String> = vec![
        "draw".into(),
        "beta0".into(),
        "sigma_u2".into(),
        "sigma_beta0_2".into(),
    ];
    for l in &draws.labels {
        header.push(coef_column_name(l));
    }
    for l in &draws.labels {
        header.push(format!("gamma_{}_{}", l.covariate, l.component));
    }
    for a in &draws.area_ids {
        header.push(format!("u_{a}"));
    }
    for a in &draws.area_ids {
        header.push(format!("theta_{a}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();

    let p = draws.labels.len();
    let n = draws.n_areas();
    let mut rows = Vec::with_capacity(draws.n_draws());
    for r in 0..draws.n_draws() {
        let mut row = Vec::with_capacity(4 + 2 * p + 2 * n);
        row.push(r.to_string());
        row.push(fmt(draws.beta0[r]));
        row.push(fmt(draws.sigma_u2[r]));
        row.push(fmt(draws.sigma_beta0_2[r]));
        for j in 0..p {
            row.push(fmt(draws.coef[(r, j)]));
        }
        for j in 0..p {
            row.push(draws.gamma[r][j].to_string());
        }
        for i in 0..n {
            row.push(fmt(draws.u[(r, i)]));
        }
        for i in 0..n {
            row.push(fmt(draws.theta[(r, i)]));
        }
        rows.push(row);
    }
    write_csv(path, &header_refs, &rows)
}

/// `fit`: run one chain and write summary.csv + inclusion.csv
/// (+ draws.csv when requested).
pub fn cmd_fit(cfg: &RunConfig, dry_run: bool, write_draws_file: bool) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    if dry_run {
        println!("{}", dry_run_report(cfg, &inputs));
        return Ok(());
    }
    let spec = cfg.model_spec()?;
    let scores = inputs.scores();
    let draws = run_chain(&inputs.data, &scores, &inputs.graph, &spec)?;

    let out = &cfg.paths.output_dir;
    write_summary(&out.join("summary.csv"), &draws)?;
    write_inclusion(&out.join("inclusion.csv"), &draws)?;
    if write_draws_file {
        write_draws(&out.join("draws.csv"), &draws)?;
    }
    cfg.echo_effective()?;

    let ess = draws.theta_ess();
    let min_ess = ess.iter().cloned().fold(f64::INFINITY, f64::min);
    log::info!(
        "fit: {} retained draws, min theta ESS {:.0}",
        draws.n_draws(),
        min_ess
    );
    println!(
        "fit complete: {} areas, {} retained draws -> {}",
        draws.n_areas(),
        draws.n_draws(),
        out.display()
    );
    Ok(())
}

/// `kl`: write basis.csv (eigenvalues + cumulative fractions) and
/// scores.csv (raw and standardized scores, long format).
pub fn cmd_kl(cfg: &RunConfig, dry_run: bool) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    if dry_run {
        println!("{}", dry_run_report(cfg, &inputs));
        return Ok(());
    }
    let out = &cfg.paths.output_dir;

    let mut basis_rows = Vec::new();
    for (basis, _) in &inputs.decomposed {
        let fractions = basis.cumulative_fractions();
        for (k, (&l, &f)) in basis.eigenvalues.iter().zip(&fractions).enumerate() {
            basis_rows.push(vec![
                basis.covariate_name.clone(),
                (k + 1).to_string(),
                fmt(l),
                fmt(f),
            ]);
        }
    }
    write_csv(
        &out.join("basis.csv"),
        &[
            "covariate",
            "component_k",
            "eigenvalue",
            "cumulative_fraction",
        ],
        &basis_rows,
    )?;

    let mut score_rows = Vec::new();
    for (_, scores) in &inputs.decomposed {
        for k in 0..scores.k_selected {
            for (i, area) in inputs.data.area_ids().iter().enumerate() {
                score_rows.push(vec![
                    area.clone(),
                    scores.covariate_name.clone(),
                    (k + 1).to_string(),
                    fmt(scores.raw[(i, k)]),
                    fmt(scores.standardized[(i, k)]),
                ]);
            }
        }
    }
    write_csv(
        &out.join("scores.csv"),
        &[
            "area_id",
            "covariate",
            "component_k",
            "score_raw",
            "score_std",
        ],
        &score_rows,
    )?;
    cfg.echo_effective()?;
    println!(
        "kl complete: {} covariates -> {}",
        inputs.decomposed.len(),
        out.display()
    );
    Ok(())
}

fn calibrate(cfg: &RunConfig, inputs: &Inputs) -> Result<(experiments::GeneratorParams, KLScores)> {
    let covariates = inputs.covariates.as_ref().ok_or_else(|| {
        Error::validation("simulation requires at least one functional covariate".to_string())
    })?;
    let spec = cfg.model_spec()?;
    let name = cfg.simulation_covariate(covariates.names())?;
    experiments::calibrate_generator(
        &inputs.data,
        covariates,
        &name,
        cfg.simulation.k,
        &inputs.graph,
        &spec,
    )
}

fn write_generator(
    path: &Path,
    params: &experiments::GeneratorParams,
    area_ids: &[String],
) -> Result<()> {
    let mut rows = vec![
        vec![
            "beta0_hat".to_string(),
            String::new(),
            fmt(params.beta0_hat),
        ],
        vec![
            "sigma_u2_hat".to_string(),
            String::new(),
            fmt(params.sigma_u2_hat),
        ],
    ];
    for (k, &b) in params.b_hat.iter().enumerate() {
        rows.push(vec!["b_hat".to_string(), (k + 1).to_string(), fmt(b)]);
    }
    for (i, a) in area_ids.iter().enumerate() {
        rows.push(vec!["u_hat".to_string(), a.clone(), fmt(params.u_hat[i])]);
    }
    for (i, a) in area_ids.iter().enumerate() {
        rows.push(vec!["sigma2".to_string(), a.clone(), fmt(params.sigma2[i])]);
    }
    write_csv(path, &["param", "index", "value"], &rows)
}

/// `simulate`: calibrate the generator on the configured data and write
/// n_datasets synthetic survey files plus generator.csv.
pub fn cmd_simulate(cfg: &RunConfig, dry_run: bool) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    if dry_run {
        println!("{}", dry_run_report(cfg, &inputs));
        return Ok(());
    }
    let (params, scores) = calibrate(cfg, &inputs)?;
    let sim = SimulationConfig {
        n_datasets: cfg.simulation.n_datasets,
        generator: params,
        seed: derive_seed(cfg.seed()?, 0xD5),
    };
    let datasets = experiments::simulate_datasets(&sim, &scores, inputs.data.area_ids())?;

    let out = &cfg.paths.output_dir;
    for (d, dataset) in datasets.iter().enumerate() {
        data::save_survey_csv(out.join(format!("dataset_{:04}.csv", d + 1)), dataset)?;
    }
    write_generator(
        &out.join("generator.csv"),
        &sim.generator,
        inputs.data.area_ids(),
    )?;
    cfg.echo_effective()?;
    println!(
        "simulate complete: {} datasets -> {}",
        datasets.len(),
        out.display()
    );
    Ok(())
}

/// `compare`: simulate datasets, refit all three variants to each, and
/// write comparison.csv with per-area MSEs and an OVERALL row.
pub fn cmd_compare(cfg: &RunConfig, dry_run: bool, jobs: usize) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    if dry_run {
        println!("{}", dry_run_report(cfg, &inputs));
        return Ok(());
    }
    let (params, scores) = calibrate(cfg, &inputs)?;
    let truth = params.mean(&scores)?;
    let sim = SimulationConfig {
        n_datasets: cfg.simulation.n_datasets,
        generator: params,
        seed: derive_seed(cfg.seed()?, 0xD5),
    };
    let datasets = experiments::simulate_datasets(&sim, &scores, inputs.data.area_ids())?;
    let spec = cfg.model_spec()?;
    let variants = [Variant::Sffh, Variant::Ffh, Variant::SpatialOnly];
    let report = run_comparison(
        &datasets,
        &truth,
        &scores,
        &inputs.graph,
        &spec,
        &variants,
        jobs,
    )?;

    let out = &cfg.paths.output_dir;
    let mut rows = Vec::new();
    for (i, area) in report.area_ids.iter().enumerate() {
        rows.push(vec![
            area.clone(),
            fmt(report.per_area_mse[0][i]),
            fmt(report.per_area_mse[1][i]),
            fmt(report.per_area_mse[2][i]),
            report.variants[report.winner[i]].to_string(),
        ]);
    }
    let overall_winner = (0..3)
        .min_by(|&a, &b| {
            report.overall_mse[a]
                .partial_cmp(&report.overall_mse[b])
                .unwrap()
        })
        .unwrap();
    rows.push(vec![
        "OVERALL".to_string(),
        fmt(report.overall_mse[0]),
        fmt(report.overall_mse[1]),
        fmt(report.overall_mse[2]),
        report.variants[overall_winner].to_string(),
    ]);
    write_csv(
        &out.join("comparison.csv"),
        &[
            "area_id",
            "mse_sffh",
            "mse_ffh",
            "mse_spatial_only",
            "winner",
        ],
        &rows,
    )?;
    cfg.echo_effective()?;
    println!(
        "compare complete: {} datasets ({} failed) -> {}",
        report.n_datasets_used,
        report.n_datasets_failed,
        out.display()
    );
    Ok(())
}

/// `loo`: leave-one-out evaluation for one or more variants; writes
/// loo.csv and mspe.csv, with ratio columns when exactly two variants run.
pub fn cmd_loo(cfg: &RunConfig, dry_run: bool, jobs: usize, variants: &[Variant]) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    if dry_run {
        println!("{}", dry_run_report(cfg, &inputs));
        return Ok(());
    }
    let variants: Vec<Variant> = if variants.is_empty() {
        vec![cfg.model.variant]
    } else {
        variants.to_vec()
    };
    let scores = inputs.scores();
    let mut reports = Vec::new();
    for &v in &variants {
        let mut spec = cfg.model_spec()?;
        spec.variant = v;
        reports.push(leave_one_out(
            &inputs.data,
            &scores,
            &inputs.graph,
            &spec,
            jobs,
        )?);
    }

    let mut header: Vec<String> = vec!["area_id".into(), "y".into()];
    for r in &reports {
        header.push(format!("yhat_{}", r.variant));
    }
    for r in &reports {
        header.push(format!("sq_dev_{}", r.variant));
    }
    let ratios = if reports.len() == 2 {
        header.push("ratio".into());
        header.push("winner".into());
        Some(deviation_ratios(&reports[0], &reports[1])?)
    } else {
        None
    };
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();

    let n = inputs.data.n();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = vec![inputs.data.area_ids()[i].clone(), fmt(inputs.data.y()[i])];
        for r in &reports {
            row.push(fmt(r.yhat[i]));
        }
        for r in &reports {
            row.push(fmt(r.sq_dev[i]));
        }
        if let Some(rs) = &ratios {
            row.push(fmt(rs[i].0));
            row.push(rs[i].1.to_string());
        }
        rows.push(row);
    }
    let out = &cfg.paths.output_dir;
    write_csv(&out.join("loo.csv"), &header_refs, &rows)?;

    let mspe_rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| vec![r.variant.to_string(), fmt(r.mspe)])
        .collect();
    write_csv(&out.join("mspe.csv"), &["variant", "mspe"], &mspe_rows)?;
    cfg.echo_effective()?;
    for r in &reports {
        println!("loo {}: MSPE {}", r.variant, r.mspe);
    }
    Ok(())
}

/// `sensitivity`: fit the (c, tau) grid and write sensitivity.csv.
pub fn cmd_sensitivity(cfg: &RunConfig, dry_run: bool, jobs: usize) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    if dry_run {
        println!("{}", dry_run_report(cfg, &inputs));
        return Ok(());
    }
    let spec = cfg.model_spec()?;
    let scores = inputs.scores();
    let cells = experiments::sensitivity_grid(
        &inputs.data,
        &scores,
        &inputs.graph,
        &spec,
        &cfg.sensitivity.tau_grid,
        &cfg.sensitivity.c_grid,
        jobs,
    )?;
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                fmt(c.c),
                fmt(c.tau),
                fmt(c.in_sample_mse),
                (c.is_minimizer as u8).to_string(),
            ]
        })
        .collect();
    let out = &cfg.paths.output_dir;
    write_csv(
        &out.join("sensitivity.csv"),
        &["c", "tau", "in_sample_mse", "is_minimizer"],
        &rows,
    )?;
    cfg.echo_effective()?;
    let best = cells.iter().find(|c| c.is_minimizer).unwrap();
    println!(
        "sensitivity complete: minimizer c={} tau={} (mse {})",
        best.c, best.tau, best.in_sample_mse
    );
    Ok(())
}

/// Expose the generator mean for tests and examples that need the truth
/// vector used by `compare`.
pub fn generator_truth(
    params: &experiments::GeneratorParams,
    scores: &KLScores,
) -> Result<DVector<f64>> {
    params.mean(scores)
}
