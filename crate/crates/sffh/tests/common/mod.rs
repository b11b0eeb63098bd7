//! Helpers shared by the integration test targets.
//!
//! The prior samplers here are written independently of the library's
//! update functions (eigendecomposition route for the constrained field,
//! direct gamma draws for the variances) so they can serve as oracles.
#![allow(dead_code)] // each test target uses a different subset

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use sffh::gibbs::{ModelSpec, SamplerState};
use sffh::graph::{build_graph, AreaGraph};
use sffh::kl::KLScores;

pub fn path_graph(n: usize) -> AreaGraph {
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    build_graph(n, &edges).unwrap()
}

/// Standardized score columns from seeded uniform noise.
pub fn toy_scores(n: usize, k: usize, rng: &mut ChaCha20Rng) -> KLScores {
    let raw = DMatrix::from_fn(n, k, |_, _| rng.random::<f64>() - 0.5);
    let mut standardized = raw.clone();
    for c in 0..k {
        let col: Vec<f64> = raw.column(c).iter().copied().collect();
        let m = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0);
        let sd = var.sqrt();
        for i in 0..n {
            standardized[(i, c)] = (raw[(i, c)] - m) / sd;
        }
    }
    KLScores {
        covariate_name: "toy".to_string(),
        raw,
        standardized,
        k_selected: k,
        variance_fraction_achieved: 1.0,
    }
}

/// Spectral data of the ICAR skeleton, eigenvalues ascending.
pub struct IcarSpectrum {
    pub modes: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
}

pub fn icar_spectrum(graph: &AreaGraph) -> IcarSpectrum {
    let eig = SymmetricEigen::new(graph.precision_skeleton());
    let n = graph.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    IcarSpectrum {
        modes: DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]),
        eigenvalues: DVector::from_fn(n, |k, _| eig.eigenvalues[order[k]]),
    }
}

/// Exact draw from the sum-to-zero ICAR prior, via the nonzero eigenmodes.
pub fn draw_icar_prior(
    spectrum: &IcarSpectrum,
    sigma_u2: f64,
    rng: &mut ChaCha20Rng,
) -> DVector<f64> {
    let n = spectrum.modes.nrows();
    let mut u = DVector::zeros(n);
    for k in 1..n {
        let z: f64 = rng.sample(StandardNormal);
        u += spectrum.modes.column(k) * ((sigma_u2 / spectrum.eigenvalues[k]).sqrt() * z);
    }
    u
}

/// Inverse-gamma prior draw (shape-scale, mean scale/(shape-1)).
pub fn draw_ig(shape: f64, scale: f64, rng: &mut ChaCha20Rng) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0 / scale).unwrap().sample(rng);
    1.0 / g
}

/// Draw a full sampler state from the model's priors.
pub fn draw_state_from_prior(
    spec: &ModelSpec,
    spectrum: &IcarSpectrum,
    p: usize,
    rng: &mut ChaCha20Rng,
) -> SamplerState {
    let ig = &spec.ig_prior;
    let sigma_u2 = draw_ig(ig.a1, ig.a2, rng);
    let sigma_beta0_2 = draw_ig(ig.a1, ig.a2, rng);
    let beta0 = sigma_beta0_2.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let gamma: Vec<u8> = (0..p)
        .map(|_| u8::from(rng.random::<f64>() < spec.ssvs.pi))
        .collect();
    let coef = DVector::from_fn(p, |j, _| {
        let v = if gamma[j] == 1 {
            spec.ssvs.c * spec.ssvs.tau
        } else {
            spec.ssvs.tau
        };
        v.sqrt() * rng.sample::<f64, _>(StandardNormal)
    });
    let u = draw_icar_prior(spectrum, sigma_u2, rng);
    SamplerState {
        coef,
        k_functional: p,
        beta0,
        u,
        gamma,
        sigma_u2,
        sigma_beta0_2,
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and its batch-means standard error.
pub fn mean_with_batch_se(xs: &[f64], n_batches: usize) -> (f64, f64) {
    let len = xs.len() / n_batches * n_batches;
    let batch = len / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|b| mean(&xs[b * batch..(b + 1) * batch]))
        .collect();
    let overall = mean(&means);
    let var = means
        .iter()
        .map(|&m| (m - overall) * (m - overall))
        .sum::<f64>()
        / (n_batches as f64 - 1.0);
    (overall, (var / n_batches as f64).sqrt())
}

/// Manifest-relative path into the shipped data directory.
pub fn data_path(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(rel)
}
