//! Regenerates the synthetic example data in `data/synthetic/`.
//!
//! The fixture mimics a small-area survey over the 21 eastern US areas:
//! two functional covariates observed weekly over two years, survey
//! outcomes generated from the model itself (intercept, functional
//! signal on the leading score components, an ICAR spatial field, and
//! heteroskedastic survey noise), and a two-period raw outcome file
//! consistent with the generated responses.
//!
//! Everything is drawn from one seeded RNG, so the output is
//! byte-reproducible:
//!
//! ```bash
//! cargo run -p sffh --example generate_fixture
//! ```

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use sffh::data::{save_functional_csv, save_survey_csv, FunctionalCovariateSet, SurveyDataset};
use sffh::graph::{load_adjacency_csv, AreaGraph};
use sffh::kl::{decompose_covariate, Centering, TruncationRule};

const SEED: u64 = 7;
const T: usize = 104;
const K: usize = 13;

const BETA0: f64 = 0.03;
/// ICAR scale of the true spatial field.
const SIGMA_U: f64 = 0.06;
/// Median survey noise sd and its lognormal spread.
const NOISE_MEDIAN_SD: f64 = 0.02;
const NOISE_LOG_SD: f64 = 0.45;
/// True coefficients on the standardized score columns.
const B_TRUE_A: [f64; 13] = [
    0.018, -0.012, 0.009, 0.0, 0.006, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
];
const B_TRUE_B: [f64; 13] = [
    0.008, 0.0, -0.006, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
];

const AREA_IDS: [&str; 21] = [
    "AL", "CT", "DC", "FL", "GA", "IL", "IN", "KY", "MD", "MA", "MI", "MN", "MO", "NJ", "NY", "NC",
    "OH", "PA", "SC", "TN", "WI",
];

/// Eigenvectors of D_w - W sorted by eigenvalue ascending; column 0 is the
/// constant null vector, low columns are spatially smooth, high columns
/// rough.
fn graph_modes(graph: &AreaGraph) -> (DMatrix<f64>, DVector<f64>) {
    let eig = SymmetricEigen::new(graph.precision_skeleton());
    let n = graph.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let vals = DVector::from_fn(n, |k, _| eig.eigenvalues[order[k]]);
    (vecs, vals)
}

/// Exact draw from the sum-to-zero ICAR prior with scale sigma_u.
fn draw_icar_field(
    modes: &DMatrix<f64>,
    eigenvalues: &DVector<f64>,
    sigma_u: f64,
    rng: &mut ChaCha20Rng,
) -> DVector<f64> {
    let n = modes.nrows();
    let mut u = DVector::zeros(n);
    for k in 1..n {
        let z: f64 = rng.sample(StandardNormal);
        u += modes.column(k) * (sigma_u * z / eigenvalues[k].sqrt());
    }
    u
}

/// Curves built from a few temporal patterns with area loadings that mix
/// smooth and rough spatial modes, plus observation noise.
fn build_curves(
    patterns: &[Vec<f64>],
    loadings: &[DVector<f64>],
    noise_sd: f64,
    n: usize,
    rng: &mut ChaCha20Rng,
) -> DMatrix<f64> {
    DMatrix::from_fn(T, n, |t, i| {
        let mut v = 0.0;
        for (p, l) in patterns.iter().zip(loadings) {
            v += l[i] * p[t];
        }
        v + noise_sd * rng.sample::<f64, _>(StandardNormal)
    })
}

fn mode_mix(
    modes: &DMatrix<f64>,
    idx: usize,
    scale: f64,
    jitter: f64,
    rng: &mut ChaCha20Rng,
) -> DVector<f64> {
    let n = modes.nrows();
    DVector::from_fn(n, |i, _| {
        scale * modes[(i, idx)] * (n as f64).sqrt() + jitter * rng.sample::<f64, _>(StandardNormal)
    })
}

fn main() {
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let out_dir = manifest.join("data/synthetic");
    let adjacency = manifest.join("data/eastern_us/adjacency.csv");

    let area_ids: Vec<String> = AREA_IDS.iter().map(|s| s.to_string()).collect();
    let graph = load_adjacency_csv(&adjacency, &area_ids).expect("adjacency loads");
    let (modes, eigenvalues) = graph_modes(&graph);
    let n = graph.n();

    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let tau = |cycles: f64| -> Vec<f64> {
        (0..T)
            .map(|t| (std::f64::consts::TAU * cycles * t as f64 / T as f64).sin())
            .collect()
    };
    let cos_tau = |cycles: f64| -> Vec<f64> {
        (0..T)
            .map(|t| (std::f64::consts::TAU * cycles * t as f64 / T as f64).cos())
            .collect()
    };
    let trend: Vec<f64> = (0..T)
        .map(|t| (t as f64 - T as f64 / 2.0) / T as f64)
        .collect();

    // covariate A: annual + semiannual cycles, loadings on smooth and
    // rough graph modes so the functional signal is only partly spatial
    let patterns_a = vec![tau(1.0), cos_tau(1.0), tau(2.0), trend.clone()];
    let loadings_a = vec![
        mode_mix(&modes, 1, 1.2, 0.25, &mut rng),
        mode_mix(&modes, n - 2, 0.9, 0.25, &mut rng),
        mode_mix(&modes, 4, 0.7, 0.25, &mut rng),
        mode_mix(&modes, n - 5, 0.5, 0.35, &mut rng),
    ];
    let z_a = build_curves(&patterns_a, &loadings_a, 0.35, n, &mut rng);

    // covariate B: different periods, different spatial mix
    let patterns_b = vec![cos_tau(2.0), tau(3.0), trend.clone()];
    let loadings_b = vec![
        mode_mix(&modes, 2, 1.0, 0.25, &mut rng),
        mode_mix(&modes, n - 3, 0.8, 0.3, &mut rng),
        mode_mix(&modes, 6, 0.6, 0.3, &mut rng),
    ];
    let z_b = build_curves(&patterns_b, &loadings_b, 0.35, n, &mut rng);

    let time_points: Vec<f64> = (1..=T).map(|t| t as f64).collect();
    let raw_set = FunctionalCovariateSet::new(
        vec!["search_a".to_string(), "search_b".to_string()],
        vec![z_a, z_b],
        time_points,
    )
    .expect("covariate set");
    let std_set = sffh::data::standardize_curves(&raw_set, &area_ids).expect("standardize");

    // score the areas exactly as the fitting pipeline will
    let (_, scores_a) = decompose_covariate(
        std_set.series(0),
        "search_a",
        Centering::PerTimeMean,
        TruncationRule::Fixed(K),
    )
    .expect("decompose A");
    let (_, scores_b) = decompose_covariate(
        std_set.series(1),
        "search_b",
        Centering::PerTimeMean,
        TruncationRule::Fixed(K),
    )
    .expect("decompose B");

    let u_true = draw_icar_field(&modes, &eigenvalues, SIGMA_U, &mut rng);
    let sigma: Vec<f64> = (0..n)
        .map(|_| NOISE_MEDIAN_SD * (NOISE_LOG_SD * rng.sample::<f64, _>(StandardNormal)).exp())
        .collect();

    let y = DVector::from_fn(n, |i, _| {
        let mut v = BETA0 + u_true[i];
        for k in 0..K {
            v += B_TRUE_A[k] * scores_a.standardized[(i, k)];
            v += B_TRUE_B[k] * scores_b.standardized[(i, k)];
        }
        v + sigma[i] * rng.sample::<f64, _>(StandardNormal)
    });
    let sigma2 = DVector::from_fn(n, |i, _| sigma[i] * sigma[i]);

    let data = SurveyDataset::new(area_ids.clone(), y, sigma2, None).expect("survey data");
    save_survey_csv(out_dir.join("areas.csv"), &data).expect("write areas.csv");
    save_functional_csv(
        out_dir.join("covariate_search_a.csv"),
        &raw_set,
        0,
        &area_ids,
    )
    .expect("write covariate A");
    save_functional_csv(
        out_dir.join("covariate_search_b.csv"),
        &raw_set,
        1,
        &area_ids,
    )
    .expect("write covariate B");

    // two-period raw outcomes consistent with y: start at 4%, end at
    // 4(1+y)% so the relative-change transform reproduces y
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["area_id", "value_start", "value_end"])
        .unwrap();
    for (i, id) in area_ids.iter().enumerate() {
        let start = 4.0;
        let end = start * (1.0 + data.y()[i]);
        wtr.write_record([id.as_str(), &format!("{start}"), &format!("{end}")])
            .unwrap();
    }
    let bytes = wtr.into_inner().unwrap();
    sffh::cli::atomic_write(&out_dir.join("raw_outcome.csv"), &bytes).expect("write raw outcome");

    println!("fixture written to {}", out_dir.display());
    println!("  n = {n}, T = {T}, J = 2, K = {K} per covariate");
    println!("  beta0 = {BETA0}, sigma_u = {SIGMA_U}");
}
