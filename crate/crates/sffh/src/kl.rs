//! Empirical Karhunen-Loeve decomposition of functional covariates.
//!
//! For each covariate the T x T empirical temporal covariance
//!
//! ```text
//! C = (n-1)^-1 sum_i (z_i - mu)(z_i - mu)'
//! ```
//!
//! is decomposed as C = Psi Lambda Psi'. The leading K eigenvectors give
//! expansion coefficients xi_i(k) = psi_k'(z_i - mu) per area, which are
//! then standardized column-wise to mean zero and unit variance so that
//! spike-and-slab selection sees every component on the same scale.
//!
//! The decomposition is deterministic: eigenpairs are sorted by eigenvalue
//! (ties broken by original index) and each eigenvector is flipped so its
//! largest-magnitude entry is positive.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::stats;

/// How curves are centered before the covariance is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Subtract the across-area mean curve (a different mean at every time).
    PerTimeMean,
    /// Subtract the single grand mean over all areas and times.
    GrandMean,
}

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationRule {
    Fixed(usize),
    VarianceFraction(f64),
}

/// Eigenpairs and mean curve of one covariate's empirical covariance.
#[derive(Debug, Clone)]
pub struct KLBasis {
    pub covariate_name: String,
    /// Nonincreasing; tiny negative values are clamped to zero.
    pub eigenvalues: DVector<f64>,
    /// T x T orthonormal; column k is the k-th eigenvector.
    pub eigenvectors: DMatrix<f64>,
    pub mean_curve: DVector<f64>,
}

impl KLBasis {
    pub fn n_times(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.sum()
    }

    /// Cumulative variance fractions, one entry per component.
    pub fn cumulative_fractions(&self) -> Vec<f64> {
        let total = self.total_variance();
        let mut acc = 0.0;
        self.eigenvalues
            .iter()
            .map(|&l| {
                acc += l;
                if total > 0.0 {
                    acc / total
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Expansion coefficients of each area's curve in a truncated basis.
#[derive(Debug, Clone)]
pub struct KLScores {
    pub covariate_name: String,
    /// n x K, column k = raw coefficients psi_k'(z_i - mu).
    pub raw: DMatrix<f64>,
    /// n x K, each column rescaled to sample mean 0 and variance 1.
    pub standardized: DMatrix<f64>,
    pub k_selected: usize,
    pub variance_fraction_achieved: f64,
}

/// Empirical temporal covariance of a T x n curve matrix.
///
/// Returns the covariance and the mean curve that was subtracted.
pub fn empirical_covariance(
    z: &DMatrix<f64>,
    centering: Centering,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (t, n) = z.shape();
    if n < 2 {
        return Err(Error::validation(format!(
            "empirical covariance needs at least 2 areas, got {n}"
        )));
    }
    let mean_curve = match centering {
        Centering::PerTimeMean => {
            DVector::from_fn(t, |r, _| z.row(r).iter().sum::<f64>() / n as f64)
        }
        Centering::GrandMean => {
            let grand = z.iter().sum::<f64>() / (t * n) as f64;
            DVector::from_element(t, grand)
        }
    };
    let centered = DMatrix::from_fn(t, n, |r, c| z[(r, c)] - mean_curve[r]);
    // fill the upper triangle and mirror so the result is symmetric by construction
    let denom = (n - 1) as f64;
    let mut cov = DMatrix::zeros(t, t);
    for r in 0..t {
        for s in r..t {
            let v = centered.row(r).dot(&centered.row(s)) / denom;
            cov[(r, s)] = v;
            cov[(s, r)] = v;
        }
    }
    Ok((cov, mean_curve))
}

const EIGEN_CLAMP: f64 = 1e-10;

/// Spectral decomposition of a symmetric covariance matrix.
///
/// Input asymmetry beyond 1e-10 is rejected, as are eigenvalues below
/// -1e-10 (either indicates a corrupted covariance). Eigenvalues in
/// [-1e-10, 0) are clamped to zero.
pub fn spectral_decompose(
    c: &DMatrix<f64>,
    mean_curve: DVector<f64>,
    covariate_name: &str,
) -> Result<KLBasis> {
    let t = c.nrows();
    if c.ncols() != t {
        return Err(Error::validation(format!(
            "covariance must be square, got {}x{}",
            t,
            c.ncols()
        )));
    }
    if mean_curve.len() != t {
        return Err(Error::validation(
            "mean curve length does not match covariance size".to_string(),
        ));
    }
    let mut max_asym: f64 = 0.0;
    for r in 0..t {
        for s in (r + 1)..t {
            max_asym = max_asym.max((c[(r, s)] - c[(s, r)]).abs());
        }
    }
    if max_asym > 1e-10 {
        return Err(Error::numerical(format!(
            "covariance for '{covariate_name}' is asymmetric (max deviation {max_asym:.3e})"
        )));
    }

    let eig = SymmetricEigen::new(c.clone());
    let mut order: Vec<usize> = (0..t).collect();
    // stable sort: ties keep their original index order
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let mut eigenvalues = DVector::zeros(t);
    let mut eigenvectors = DMatrix::zeros(t, t);
    for (k, &src) in order.iter().enumerate() {
        let mut lambda = eig.eigenvalues[src];
        if lambda < 0.0 {
            if lambda < -EIGEN_CLAMP {
                return Err(Error::numerical(format!(
                    "covariance for '{covariate_name}' has eigenvalue {lambda:.3e} below -1e-10"
                )));
            }
            lambda = 0.0;
        }
        eigenvalues[k] = lambda;
        let col = eig.eigenvectors.column(src);
        // sign convention: largest-magnitude entry positive (first on ties)
        let mut pivot = 0;
        for r in 1..t {
            if col[r].abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..t {
            eigenvectors[(r, k)] = sign * col[r];
        }
    }

    Ok(KLBasis {
        covariate_name: covariate_name.to_string(),
        eigenvalues,
        eigenvectors,
        mean_curve,
    })
}

/// Number of components retained under a truncation rule.
///
/// The variance-fraction rule returns the smallest K whose cumulative
/// eigenvalue share reaches the target.
pub fn truncate(basis: &KLBasis, rule: TruncationRule) -> Result<usize> {
    let t = basis.n_times();
    match rule {
        TruncationRule::Fixed(k) => {
            if k == 0 || k > t {
                return Err(Error::validation(format!(
                    "fixed truncation K={k} outside 1..={t}"
                )));
            }
            Ok(k)
        }
        TruncationRule::VarianceFraction(p) => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::validation(format!(
                    "variance fraction must be in (0, 1], got {p}"
                )));
            }
            let total = basis.total_variance();
            if !crate::stats::is_positive(total) {
                return Err(Error::validation(format!(
                    "all eigenvalues of '{}' are zero; variance-fraction truncation undefined",
                    basis.covariate_name
                )));
            }
            let mut acc = 0.0;
            for (k, &l) in basis.eigenvalues.iter().enumerate() {
                acc += l;
                if acc / total >= p {
                    return Ok(k + 1);
                }
            }
            Ok(t)
        }
    }
}

/// Project curves onto the leading `k` eigenvectors and standardize the
/// resulting score columns.
///
/// `k` is capped by both the basis size and the covariance rank bound
/// min(T, n-1); anything larger is rejected.
pub fn project_scores(z: &DMatrix<f64>, basis: &KLBasis, k: usize) -> Result<KLScores> {
    let (t, n) = z.shape();
    if t != basis.n_times() {
        return Err(Error::validation(format!(
            "curve length {t} does not match basis size {}",
            basis.n_times()
        )));
    }
    if k == 0 || k > basis.n_times() {
        return Err(Error::validation(format!(
            "requested K={k} components from a basis of size {}",
            basis.n_times()
        )));
    }
    let rank_bound = t.min(n - 1);
    if k > rank_bound {
        return Err(Error::validation(format!(
            "K={k} exceeds the empirical covariance rank bound min(T, n-1)={rank_bound}"
        )));
    }

    let mut raw = DMatrix::zeros(n, k);
    for i in 0..n {
        let centered = DVector::from_fn(t, |r, _| z[(r, i)] - basis.mean_curve[r]);
        for c in 0..k {
            raw[(i, c)] = basis.eigenvectors.column(c).dot(&centered);
        }
    }

    let mut standardized = raw.clone();
    for c in 0..k {
        let col: Vec<f64> = raw.column(c).iter().copied().collect();
        let m = stats::mean(&col);
        let var = stats::sample_variance(&col);
        if !crate::stats::is_positive(var) {
            return Err(Error::validation(format!(
                "score column {} of '{}' has zero variance; cannot standardize",
                c + 1,
                basis.covariate_name
            )));
        }
        let sd = var.sqrt();
        for i in 0..n {
            standardized[(i, c)] = (raw[(i, c)] - m) / sd;
        }
    }

    let total = basis.total_variance();
    let kept: f64 = basis.eigenvalues.iter().take(k).sum();
    Ok(KLScores {
        covariate_name: basis.covariate_name.clone(),
        raw,
        standardized,
        k_selected: k,
        variance_fraction_achieved: if total > 0.0 { kept / total } else { 0.0 },
    })
}

/// Full pipeline for one covariate: covariance, decomposition, truncation,
/// score projection.
pub fn decompose_covariate(
    z: &DMatrix<f64>,
    name: &str,
    centering: Centering,
    rule: TruncationRule,
) -> Result<(KLBasis, KLScores)> {
    let (cov, mean_curve) = empirical_covariance(z, centering)?;
    let basis = spectral_decompose(&cov, mean_curve, name)?;
    let k = truncate(&basis, rule)?;
    let scores = project_scores(z, &basis, k)?;
    Ok((basis, scores))
}

/// Decompose every covariate in a set with a common centering and rule.
pub fn decompose_set(
    set: &crate::data::FunctionalCovariateSet,
    centering: Centering,
    rule: TruncationRule,
) -> Result<Vec<(KLBasis, KLScores)>> {
    (0..set.n_covariates())
        .map(|j| decompose_covariate(set.series(j), &set.names()[j], centering, rule))
        .collect()
}
