//! Gibbs sampler for the spatial Fay-Herriot model with functional
//! covariates (SFFH) and its two ablations.
//!
//! The data model is Y_i = theta_i + eps_i with eps_i ~ N(0, sigma_i^2),
//! sigma_i^2 known, and
//!
//! ```text
//! theta_i = beta0 + sum_j sum_k b_j(k) xi_ij(k) + x_i' beta_x + u_i
//! ```
//!
//! where xi_ij(k) are standardized Karhunen-Loeve scores. Coefficients get
//! a spike-and-slab prior b ~ gamma N(0, c tau) + (1 - gamma) N(0, tau)
//! with gamma ~ Bernoulli(pi); scalar covariates share the same machinery
//! with their own indicators. The spatial effects u follow an intrinsic
//! CAR prior with precision sigma_u^-2 (D_w - W) under sum(u) = 0; the FFH
//! variant swaps in independent N(0, sigma_u^2) effects, and SpatialOnly
//! drops the coefficient block entirely.
//!
//! One sweep updates, in order:
//!
//! 1. b | rest          MVN, precision Xi' Sigma_eps^-1 Xi + Upsilon^-1
//! 2. u | rest          constrained MVN via conditioning by kriging
//! 3. gamma | rest      independent Bernoulli from the prior density ratio
//! 4. sigma_u^2 | rest  IG(a1 + n/2, a2 + u'(D_w - W)u / 2)
//! 5. beta0 | rest      Gaussian
//! 6. sigma_beta0^2     IG(a1 + 1/2, a2 + beta0^2 / 2)
//!
//! Inverse gamma is parameterized shape-scale: IG(a, s) has density
//! proportional to x^(-a-1) exp(-s/x) and mean s / (a - 1).
//!
//! Chains are deterministic given the seed. Holding an area out of the
//! likelihood (for leave-one-out prediction) zeroes its entry of
//! Sigma_eps^-1; the area keeps its place in the graph and in theta.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::data::SurveyDataset;
use crate::error::{Error, Result};
use crate::graph::{icar_quadform, sample_constrained_gmrf, AreaGraph};
use crate::kl::KLScores;
use crate::stats;

pub const DEFAULT_ITERATIONS: usize = 50_000;
pub const DEFAULT_BURN_IN: usize = 2_000;

/// Model variant: full spatial + functional, functional with independent
/// effects, or spatial effects only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Sffh,
    Ffh,
    SpatialOnly,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Variant::Sffh => "sffh",
            Variant::Ffh => "ffh",
            Variant::SpatialOnly => "spatial_only",
        };
        f.pad(s)
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sffh" => Ok(Variant::Sffh),
            "ffh" => Ok(Variant::Ffh),
            "spatial_only" => Ok(Variant::SpatialOnly),
            other => Err(Error::validation(format!(
                "unknown variant '{other}' (expected sffh, ffh, or spatial_only)"
            ))),
        }
    }
}

/// Spike-and-slab hyperparameters, shared by all components.
#[derive(Debug, Clone, Copy)]
pub struct SsvsParams {
    /// Prior inclusion probability.
    pub pi: f64,
    /// Slab-to-spike variance ratio (> 1).
    pub c: f64,
    /// Spike variance (> 0).
    pub tau: f64,
}

impl Default for SsvsParams {
    fn default() -> Self {
        SsvsParams {
            pi: 0.5,
            c: 10.0,
            tau: 1e-5,
        }
    }
}

/// Inverse-gamma prior applied to both sigma_u^2 and sigma_beta0^2.
#[derive(Debug, Clone, Copy)]
pub struct IgPrior {
    pub a1: f64,
    pub a2: f64,
}

impl Default for IgPrior {
    fn default() -> Self {
        IgPrior {
            a1: 0.001,
            a2: 0.001,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct McmcParams {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl McmcParams {
    pub fn with_seed(seed: u64) -> Self {
        McmcParams {
            iterations: DEFAULT_ITERATIONS,
            burn_in: DEFAULT_BURN_IN,
            thin: 1,
            seed,
        }
    }
}

/// Everything needed to run one chain.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub variant: Variant,
    pub ssvs: SsvsParams,
    pub ig_prior: IgPrior,
    pub mcmc: McmcParams,
    /// Use shape a1 + (n-1)/2 for the sigma_u^2 update, matching the ICAR
    /// rank n-1, instead of the conventional a1 + n/2. Off by default.
    pub icar_rank_adjusted: bool,
}

impl ModelSpec {
    pub fn new(variant: Variant, seed: u64) -> Self {
        ModelSpec {
            variant,
            ssvs: SsvsParams::default(),
            ig_prior: IgPrior::default(),
            mcmc: McmcParams::with_seed(seed),
            icar_rank_adjusted: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.ssvs;
        if !(crate::stats::is_positive(s.pi) && s.pi < 1.0) {
            return Err(Error::validation(format!(
                "prior inclusion probability must be in (0, 1), got {}",
                s.pi
            )));
        }
        if !(s.c.is_finite() && s.c > 1.0) {
            return Err(Error::validation(format!("c must exceed 1, got {}", s.c)));
        }
        if !crate::stats::is_positive(s.tau) {
            return Err(Error::validation(format!(
                "tau must be positive, got {}",
                s.tau
            )));
        }
        if !(crate::stats::is_positive(self.ig_prior.a1)
            && crate::stats::is_positive(self.ig_prior.a2))
        {
            return Err(Error::validation(
                "inverse-gamma prior parameters must be positive".to_string(),
            ));
        }
        let m = &self.mcmc;
        if m.thin == 0 {
            return Err(Error::validation("thin must be at least 1".to_string()));
        }
        if m.burn_in >= m.iterations {
            return Err(Error::validation(format!(
                "burn-in {} must be smaller than iterations {}",
                m.burn_in, m.iterations
            )));
        }
        if (m.iterations - m.burn_in) / m.thin == 0 {
            return Err(Error::validation(
                "no draws would be retained; lower thin or raise iterations".to_string(),
            ));
        }
        Ok(())
    }

    /// Retained draw count: (iterations - burn_in) / thin.
    pub fn retained(&self) -> usize {
        (self.mcmc.iterations - self.mcmc.burn_in) / self.mcmc.thin
    }
}

/// Current values of all sampled quantities.
#[derive(Debug, Clone)]
pub struct SamplerState {
    /// Functional coefficients b followed by scalar coefficients beta_x.
    pub coef: DVector<f64>,
    /// Number of leading entries of `coef` that are functional.
    pub k_functional: usize,
    pub beta0: f64,
    pub u: DVector<f64>,
    /// One inclusion indicator per coefficient.
    pub gamma: Vec<u8>,
    pub sigma_u2: f64,
    pub sigma_beta0_2: f64,
}

impl SamplerState {
    pub fn b(&self) -> &[f64] {
        &self.coef.as_slice()[..self.k_functional]
    }

    pub fn beta_x(&self) -> &[f64] {
        &self.coef.as_slice()[self.k_functional..]
    }
}

/// Identifies one column of the coefficient block: a functional component
/// (component >= 1) or a scalar covariate (component == 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefLabel {
    pub covariate: String,
    pub component: usize,
}

/// Draw x ~ N(P^-1 h, P^-1) given the canonical pair (P, h).
pub fn draw_mvn_canonical(
    precision: &DMatrix<f64>,
    h: &DVector<f64>,
    rng: &mut (impl Rng + ?Sized),
) -> Result<DVector<f64>> {
    let chol = Cholesky::new(precision.clone()).ok_or_else(|| {
        Error::numerical("conditional precision is not positive definite".to_string())
    })?;
    let mu = chol.solve(h);
    let n = h.len();
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let w = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::numerical("triangular solve failed".to_string()))?;
    Ok(mu + w)
}

/// Inverse-gamma draw, shape-scale parameterization (mean s / (a-1)).
pub fn draw_inverse_gamma(shape: f64, scale: f64, rng: &mut (impl Rng + ?Sized)) -> Result<f64> {
    if !(crate::stats::is_positive(shape) && crate::stats::is_positive(scale)) {
        return Err(Error::numerical(format!(
            "inverse-gamma parameters must be positive, got shape {shape}, scale {scale}"
        )));
    }
    let gamma = Gamma::new(shape, 1.0 / scale)
        .map_err(|e| Error::numerical(format!("gamma sampler: {e}")))?;
    for _ in 0..64 {
        let g: f64 = gamma.sample(rng);
        if g.is_finite() && g > 0.0 {
            return Ok(1.0 / g);
        }
    }
    Err(Error::numerical(
        "gamma sampler kept returning non-positive values".to_string(),
    ))
}

/// Conditional mean and covariance of the coefficient block given the rest.
///
/// Precision Xi' Sigma_eps^-1 Xi + Upsilon^-1, mean from the residual
/// Y - beta0 - u.
pub fn conditional_b_moments(
    xi: &DMatrix<f64>,
    prec_eps: &DVector<f64>,
    y: &DVector<f64>,
    beta0: f64,
    u: &DVector<f64>,
    upsilon: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (precision, h) = b_canonical(xi, prec_eps, y, beta0, u, upsilon)?;
    let chol = Cholesky::new(precision).ok_or_else(|| {
        Error::numerical("coefficient conditional precision is not positive definite".to_string())
    })?;
    let mu = chol.solve(&h);
    Ok((mu, chol.inverse()))
}

fn b_canonical(
    xi: &DMatrix<f64>,
    prec_eps: &DVector<f64>,
    y: &DVector<f64>,
    beta0: f64,
    u: &DVector<f64>,
    upsilon: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (n, p) = xi.shape();
    assert_eq!(y.len(), n);
    assert_eq!(u.len(), n);
    assert_eq!(prec_eps.len(), n);
    assert_eq!(upsilon.len(), p);
    for &v in upsilon.iter() {
        if !crate::stats::is_positive(v) {
            return Err(Error::numerical(format!(
                "coefficient prior variance must be positive, got {v} (is tau <= 0?)"
            )));
        }
    }
    let resid = DVector::from_fn(n, |i, _| y[i] - beta0 - u[i]);
    // Xi' D with D = diag(prec_eps)
    let xtd = DMatrix::from_fn(p, n, |r, c| xi[(c, r)] * prec_eps[c]);
    let mut precision = &xtd * xi;
    for j in 0..p {
        precision[(j, j)] += 1.0 / upsilon[j];
    }
    let h = &xtd * resid;
    Ok((precision, h))
}

/// Draw the coefficient block from its Gaussian full conditional.
///
/// `upsilon` holds the current prior variances c*tau or tau per component.
/// A zero-column design contributes no likelihood, so the draw reduces to
/// the prior N(0, Upsilon). Empty designs return an empty vector without
/// consuming randomness.
pub fn update_b(
    xi: &DMatrix<f64>,
    prec_eps: &DVector<f64>,
    y: &DVector<f64>,
    beta0: f64,
    u: &DVector<f64>,
    upsilon: &DVector<f64>,
    rng: &mut (impl Rng + ?Sized),
) -> Result<DVector<f64>> {
    if xi.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let (precision, h) = b_canonical(xi, prec_eps, y, beta0, u, upsilon)?;
    draw_mvn_canonical(&precision, &h, rng)
}

/// Draw the ICAR spatial effects from their constrained Gaussian full
/// conditional. `fitted` is the covariate part Xi b (+ X beta_x).
pub fn update_u(
    graph: &AreaGraph,
    prec_eps: &DVector<f64>,
    y: &DVector<f64>,
    beta0: f64,
    fitted: &DVector<f64>,
    sigma_u2: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Result<DVector<f64>> {
    if !crate::stats::is_positive(sigma_u2) {
        return Err(Error::numerical(format!(
            "sigma_u^2 must be positive, got {sigma_u2}"
        )));
    }
    let n = graph.n();
    let mut precision = graph.precision_skeleton() * (1.0 / sigma_u2);
    for i in 0..n {
        precision[(i, i)] += prec_eps[i];
    }
    let h = DVector::from_fn(n, |i, _| prec_eps[i] * (y[i] - beta0 - fitted[i]));
    sample_constrained_gmrf(&precision, &h, rng)
}

/// FFH variant: independent Gaussian effects, no constraint. Each u_i has
/// variance (1/sigma_i^2 + 1/sigma_u^2)^-1 around the shrunken residual.
pub fn update_u_independent(
    prec_eps: &DVector<f64>,
    y: &DVector<f64>,
    beta0: f64,
    fitted: &DVector<f64>,
    sigma_u2: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Result<DVector<f64>> {
    if !crate::stats::is_positive(sigma_u2) {
        return Err(Error::numerical(format!(
            "sigma_u^2 must be positive, got {sigma_u2}"
        )));
    }
    let n = y.len();
    Ok(DVector::from_fn(n, |i, _| {
        let v = 1.0 / (prec_eps[i] + 1.0 / sigma_u2);
        let m = v * prec_eps[i] * (y[i] - beta0 - fitted[i]);
        m + v.sqrt() * rng.sample::<f64, _>(StandardNormal)
    }))
}

/// Posterior inclusion probability for one coefficient value.
///
/// Bernoulli probability pi f1 / (pi f1 + (1-pi) f0) with f1 = N(b; 0, c tau)
/// and f0 = N(b; 0, tau). At pi = 0.5 this is the plain density ratio.
pub fn inclusion_probability(b: f64, ssvs: &SsvsParams) -> f64 {
    if ssvs.pi >= 1.0 {
        return 1.0;
    }
    if ssvs.pi <= 0.0 {
        return 0.0;
    }
    let log_prior_odds = (ssvs.pi / (1.0 - ssvs.pi)).ln();
    let log_bf = -0.5 * ssvs.c.ln() + 0.5 * b * b / ssvs.tau * (1.0 - 1.0 / ssvs.c);
    let lo = log_prior_odds + log_bf;
    1.0 / (1.0 + (-lo).exp())
}

/// Draw all inclusion indicators independently given the coefficients.
pub fn update_gamma(
    coef: &DVector<f64>,
    ssvs: &SsvsParams,
    rng: &mut (impl Rng + ?Sized),
) -> Vec<u8> {
    coef.iter()
        .map(|&b| u8::from(rng.random::<f64>() < inclusion_probability(b, ssvs)))
        .collect()
}

/// Conjugate update for the ICAR scale: IG(a1 + n/2, a2 + quadform/2),
/// or shape a1 + (n-1)/2 when `rank_adjusted` is set.
pub fn update_sigma_u2(
    graph: &AreaGraph,
    u: &DVector<f64>,
    prior: &IgPrior,
    rank_adjusted: bool,
    rng: &mut (impl Rng + ?Sized),
) -> Result<f64> {
    let q = icar_quadform(graph, u);
    if q < 0.0 {
        return Err(Error::numerical(format!(
            "ICAR quadratic form is negative ({q}); graph is corrupt"
        )));
    }
    let dof = if rank_adjusted {
        graph.n() - 1
    } else {
        graph.n()
    } as f64;
    draw_inverse_gamma(prior.a1 + dof / 2.0, prior.a2 + q / 2.0, rng)
}

/// FFH variant: IG(a1 + n/2, a2 + sum(u_i^2)/2).
pub fn update_sigma_u2_independent(
    u: &DVector<f64>,
    prior: &IgPrior,
    rng: &mut (impl Rng + ?Sized),
) -> Result<f64> {
    let ss = u.dot(u);
    draw_inverse_gamma(prior.a1 + u.len() as f64 / 2.0, prior.a2 + ss / 2.0, rng)
}

/// Gaussian update for the intercept given everything else.
pub fn update_beta0(
    prec_eps: &DVector<f64>,
    y: &DVector<f64>,
    fitted: &DVector<f64>,
    u: &DVector<f64>,
    sigma_beta0_2: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Result<f64> {
    if !crate::stats::is_positive(sigma_beta0_2) {
        return Err(Error::numerical(format!(
            "sigma_beta0^2 must be positive, got {sigma_beta0_2}"
        )));
    }
    let total_prec = prec_eps.sum() + 1.0 / sigma_beta0_2;
    let var = 1.0 / total_prec;
    let weighted: f64 = (0..y.len())
        .map(|i| prec_eps[i] * (y[i] - fitted[i] - u[i]))
        .sum();
    let mu = var * weighted;
    Ok(mu + var.sqrt() * rng.sample::<f64, _>(StandardNormal))
}

/// Conjugate update for the intercept variance: IG(a1 + 1/2, a2 + beta0^2/2).
pub fn update_sigma_beta0_2(
    beta0: f64,
    prior: &IgPrior,
    rng: &mut (impl Rng + ?Sized),
) -> Result<f64> {
    draw_inverse_gamma(prior.a1 + 0.5, prior.a2 + beta0 * beta0 / 2.0, rng)
}

struct Design {
    xi: DMatrix<f64>,
    labels: Vec<CoefLabel>,
    k_functional: usize,
}

fn build_design(data: &SurveyDataset, scores: &[KLScores], variant: Variant) -> Result<Design> {
    let n = data.n();
    if variant == Variant::SpatialOnly {
        return Ok(Design {
            xi: DMatrix::zeros(n, 0),
            labels: Vec::new(),
            k_functional: 0,
        });
    }
    let mut labels = Vec::new();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for s in scores {
        if s.standardized.nrows() != n {
            return Err(Error::validation(format!(
                "scores for '{}' have {} rows, expected {n}",
                s.covariate_name,
                s.standardized.nrows()
            )));
        }
        for k in 0..s.k_selected {
            cols.push(s.standardized.column(k).into_owned());
            labels.push(CoefLabel {
                covariate: s.covariate_name.clone(),
                component: k + 1,
            });
        }
    }
    let k_functional = cols.len();
    if let Some(x) = data.scalar_covariates() {
        for c in 0..x.ncols() {
            cols.push(x.column(c).into_owned());
            labels.push(CoefLabel {
                covariate: data.scalar_names()[c].clone(),
                component: 0,
            });
        }
    }
    let p = cols.len();
    let xi = DMatrix::from_fn(n, p, |i, j| cols[j][i]);
    Ok(Design {
        xi,
        labels,
        k_functional,
    })
}

/// A running chain with owned state and RNG. `run_chain` drives this; it
/// is public so validation harnesses can interleave sweeps with data
/// regeneration.
pub struct GibbsSampler {
    spec: ModelSpec,
    graph: AreaGraph,
    design: Design,
    y: DVector<f64>,
    prec_eps: DVector<f64>,
    state: SamplerState,
    fitted: DVector<f64>,
    rng: ChaCha20Rng,
}

impl GibbsSampler {
    pub fn new(
        data: &SurveyDataset,
        scores: &[KLScores],
        graph: &AreaGraph,
        spec: &ModelSpec,
        included: &[bool],
    ) -> Result<Self> {
        spec.validate()?;
        let n = data.n();
        if graph.n() != n {
            return Err(Error::validation(format!(
                "graph has {} areas, survey has {n}",
                graph.n()
            )));
        }
        if included.len() != n {
            return Err(Error::validation(format!(
                "inclusion mask has length {}, expected {n}",
                included.len()
            )));
        }
        if !included.iter().any(|&b| b) {
            return Err(Error::validation(
                "at least one area must contribute to the likelihood".to_string(),
            ));
        }
        let design = build_design(data, scores, spec.variant)?;
        let p = design.xi.ncols();
        let prec_eps = DVector::from_fn(n, |i, _| {
            if included[i] {
                1.0 / data.sigma2()[i]
            } else {
                0.0
            }
        });
        let state = SamplerState {
            coef: DVector::zeros(p),
            k_functional: design.k_functional,
            beta0: 0.0,
            u: DVector::zeros(n),
            gamma: vec![1u8; p],
            sigma_u2: 1.0,
            sigma_beta0_2: 1.0,
        };
        Ok(GibbsSampler {
            spec: spec.clone(),
            graph: graph.clone(),
            design,
            y: data.y().clone(),
            prec_eps,
            state,
            fitted: DVector::zeros(n),
            rng: ChaCha20Rng::seed_from_u64(spec.mcmc.seed),
        })
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    pub fn labels(&self) -> &[CoefLabel] {
        &self.design.labels
    }

    /// Replace the observations (used by prior-reproduction harnesses that
    /// alternate parameter sweeps with data regeneration).
    pub fn set_y(&mut self, y: DVector<f64>) -> Result<()> {
        if y.len() != self.y.len() {
            return Err(Error::validation(format!(
                "replacement y has length {}, expected {}",
                y.len(),
                self.y.len()
            )));
        }
        self.y = y;
        Ok(())
    }

    /// Overwrite the sampler state (harness use).
    pub fn set_state(&mut self, state: SamplerState) -> Result<()> {
        let p = self.design.xi.ncols();
        if state.coef.len() != p || state.gamma.len() != p || state.u.len() != self.y.len() {
            return Err(Error::validation(
                "state dimensions do not match".to_string(),
            ));
        }
        self.state = state;
        self.fitted = &self.design.xi * &self.state.coef;
        Ok(())
    }

    /// Current theta = beta0 + Xi coef + u.
    pub fn theta(&self) -> DVector<f64> {
        DVector::from_fn(self.y.len(), |i, _| {
            self.state.beta0 + self.fitted[i] + self.state.u[i]
        })
    }

    /// One full sweep over all conditionals in the fixed update order.
    ///
    /// An empty coefficient block is skipped without consuming randomness,
    /// so an SFFH chain with no covariates is draw-for-draw identical to a
    /// SpatialOnly chain with the same seed.
    pub fn sweep(&mut self) -> Result<()> {
        let p = self.design.xi.ncols();
        let s = &self.spec.ssvs;

        if p > 0 {
            let upsilon = DVector::from_fn(p, |j, _| {
                if self.state.gamma[j] == 1 {
                    s.c * s.tau
                } else {
                    s.tau
                }
            });
            self.state.coef = update_b(
                &self.design.xi,
                &self.prec_eps,
                &self.y,
                self.state.beta0,
                &self.state.u,
                &upsilon,
                &mut self.rng,
            )?;
        }
        self.fitted = &self.design.xi * &self.state.coef;

        self.state.u = match self.spec.variant {
            Variant::Ffh => update_u_independent(
                &self.prec_eps,
                &self.y,
                self.state.beta0,
                &self.fitted,
                self.state.sigma_u2,
                &mut self.rng,
            )?,
            _ => update_u(
                &self.graph,
                &self.prec_eps,
                &self.y,
                self.state.beta0,
                &self.fitted,
                self.state.sigma_u2,
                &mut self.rng,
            )?,
        };

        if p > 0 {
            self.state.gamma = update_gamma(&self.state.coef, s, &mut self.rng);
        }

        self.state.sigma_u2 = match self.spec.variant {
            Variant::Ffh => {
                update_sigma_u2_independent(&self.state.u, &self.spec.ig_prior, &mut self.rng)?
            }
            _ => update_sigma_u2(
                &self.graph,
                &self.state.u,
                &self.spec.ig_prior,
                self.spec.icar_rank_adjusted,
                &mut self.rng,
            )?,
        };

        self.state.beta0 = update_beta0(
            &self.prec_eps,
            &self.y,
            &self.fitted,
            &self.state.u,
            self.state.sigma_beta0_2,
            &mut self.rng,
        )?;

        self.state.sigma_beta0_2 =
            update_sigma_beta0_2(self.state.beta0, &self.spec.ig_prior, &mut self.rng)?;

        Ok(())
    }
}

/// Retained draws from one chain, plus derived per-area theta draws.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub variant: Variant,
    pub area_ids: Vec<String>,
    pub labels: Vec<CoefLabel>,
    pub k_functional: usize,
    pub beta0: Vec<f64>,
    pub sigma_u2: Vec<f64>,
    pub sigma_beta0_2: Vec<f64>,
    /// draws x p coefficient matrix (functional block first).
    pub coef: DMatrix<f64>,
    /// draws x p inclusion indicators.
    pub gamma: Vec<Vec<u8>>,
    /// draws x n spatial effects.
    pub u: DMatrix<f64>,
    /// draws x n derived theta draws.
    pub theta: DMatrix<f64>,
}

/// Posterior summary for one area. The posterior variance of theta is the
/// model-based MSE of the point estimate.
#[derive(Debug, Clone)]
pub struct AreaSummary {
    pub area_id: String,
    pub theta_mean: f64,
    pub theta_var: f64,
    pub q025: f64,
    pub q500: f64,
    pub q975: f64,
    pub u_mean: f64,
}

impl PosteriorDraws {
    pub fn n_draws(&self) -> usize {
        self.beta0.len()
    }

    pub fn n_areas(&self) -> usize {
        self.area_ids.len()
    }

    pub fn theta_mean(&self) -> DVector<f64> {
        column_means(&self.theta)
    }

    pub fn u_mean(&self) -> DVector<f64> {
        column_means(&self.u)
    }

    pub fn coef_mean(&self) -> DVector<f64> {
        column_means(&self.coef)
    }

    /// Posterior inclusion frequency per coefficient.
    pub fn inclusion_probabilities(&self) -> Vec<f64> {
        let m = self.n_draws() as f64;
        let p = self.labels.len();
        let mut out = vec![0.0; p];
        for row in &self.gamma {
            for (j, &g) in row.iter().enumerate() {
                out[j] += f64::from(g);
            }
        }
        out.iter_mut().for_each(|v| *v /= m);
        out
    }

    pub fn area_summaries(&self) -> Vec<AreaSummary> {
        let m = self.n_draws();
        let u_means = self.u_mean();
        (0..self.n_areas())
            .map(|i| {
                let mut col: Vec<f64> = (0..m).map(|r| self.theta[(r, i)]).collect();
                let mean = stats::mean(&col);
                let var = stats::sample_variance(&col);
                col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                AreaSummary {
                    area_id: self.area_ids[i].clone(),
                    theta_mean: mean,
                    theta_var: var,
                    q025: stats::quantile_sorted(&col, 0.025),
                    q500: stats::quantile_sorted(&col, 0.5),
                    q975: stats::quantile_sorted(&col, 0.975),
                    u_mean: u_means[i],
                }
            })
            .collect()
    }

    /// Effective sample size of each area's theta chain.
    pub fn theta_ess(&self) -> Vec<f64> {
        (0..self.n_areas())
            .map(|i| {
                let col: Vec<f64> = (0..self.n_draws()).map(|r| self.theta[(r, i)]).collect();
                stats::effective_sample_size(&col)
            })
            .collect()
    }
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let rows = m.nrows() as f64;
    DVector::from_fn(m.ncols(), |c, _| m.column(c).sum() / rows)
}

/// Run one chain with every area contributing to the likelihood.
pub fn run_chain(
    data: &SurveyDataset,
    scores: &[KLScores],
    graph: &AreaGraph,
    spec: &ModelSpec,
) -> Result<PosteriorDraws> {
    run_chain_masked(data, scores, graph, spec, &vec![true; data.n()])
}

/// Run one chain with the given likelihood inclusion mask.
///
/// Chains start from coef = 0, beta0 = 0, u = 0, gamma all one, and unit
/// variances, and are deterministic given the seed.
pub fn run_chain_masked(
    data: &SurveyDataset,
    scores: &[KLScores],
    graph: &AreaGraph,
    spec: &ModelSpec,
    included: &[bool],
) -> Result<PosteriorDraws> {
    let mut sampler = GibbsSampler::new(data, scores, graph, spec, included)?;
    let n = data.n();
    let p = sampler.design.xi.ncols();
    let retained = spec.retained();

    let mut draws = PosteriorDraws {
        variant: spec.variant,
        area_ids: data.area_ids().to_vec(),
        labels: sampler.design.labels.clone(),
        k_functional: sampler.design.k_functional,
        beta0: Vec::with_capacity(retained),
        sigma_u2: Vec::with_capacity(retained),
        sigma_beta0_2: Vec::with_capacity(retained),
        coef: DMatrix::zeros(retained, p),
        gamma: Vec::with_capacity(retained),
        u: DMatrix::zeros(retained, n),
        theta: DMatrix::zeros(retained, n),
    };

    let mcmc = spec.mcmc;
    let mut row = 0usize;
    for t in 0..mcmc.iterations {
        sampler.sweep().map_err(|e| match e {
            Error::Numerical(m) => Error::numerical(format!("iteration {t}: {m}")),
            other => other,
        })?;
        if t >= mcmc.burn_in && (t - mcmc.burn_in).is_multiple_of(mcmc.thin) && row < retained {
            draws.beta0.push(sampler.state.beta0);
            draws.sigma_u2.push(sampler.state.sigma_u2);
            draws.sigma_beta0_2.push(sampler.state.sigma_beta0_2);
            for j in 0..p {
                draws.coef[(row, j)] = sampler.state.coef[j];
            }
            draws.gamma.push(sampler.state.gamma.clone());
            let theta = sampler.theta();
            for i in 0..n {
                draws.u[(row, i)] = sampler.state.u[i];
                draws.theta[(row, i)] = theta[i];
            }
            row += 1;
        }
    }
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use approx::assert_abs_diff_eq;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn inclusion_probability_at_zero_coefficient() {
        let s = SsvsParams {
            pi: 0.5,
            c: 10.0,
            tau: 1e-5,
        };
        let p = inclusion_probability(0.0, &s);
        assert_abs_diff_eq!(p, 1.0 / (1.0 + 10.0_f64.sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn inclusion_probability_saturates_for_large_coefficient() {
        let s = SsvsParams {
            pi: 0.5,
            c: 10.0,
            tau: 1e-5,
        };
        assert!(inclusion_probability(1.0, &s) > 1.0 - 1e-12);
    }

    #[test]
    fn inclusion_probability_degenerate_prior() {
        let s = SsvsParams {
            pi: 1.0,
            c: 10.0,
            tau: 1e-5,
        };
        assert_eq!(inclusion_probability(0.0, &s), 1.0);
        let mut r = rng(3);
        let coef = DVector::from_vec(vec![0.0, 0.0, 0.0]);
        assert_eq!(update_gamma(&coef, &s, &mut r), vec![1, 1, 1]);
    }

    #[test]
    fn b_posterior_mean_shrinks_as_tau_decreases() {
        // all gamma = 0: spike prior dominates as tau -> 0
        let xi = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let prec = DVector::from_element(2, 1.0);
        let y = DVector::from_vec(vec![2.0, 4.0]);
        let u = DVector::zeros(2);
        let mut last = f64::INFINITY;
        for tau in [1e-2, 1e-4, 1e-6] {
            let upsilon = DVector::from_element(1, tau);
            let (mu, _) = conditional_b_moments(&xi, &prec, &y, 0.0, &u, &upsilon).unwrap();
            assert!(mu[0].abs() < last, "tau {tau}: {}", mu[0]);
            last = mu[0].abs();
        }
    }

    #[test]
    fn b_conditional_hand_value() {
        // n=2, K=1, Xi=(1,1)', sigma_i^2=1, beta0=0, u=0, Upsilon=1:
        // mu = (Y1+Y2)/3, var = 1/3
        let xi = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let prec = DVector::from_element(2, 1.0);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let u = DVector::zeros(2);
        let upsilon = DVector::from_element(1, 1.0);
        let (mu, cov) = conditional_b_moments(&xi, &prec, &y, 0.0, &u, &upsilon).unwrap();
        assert_abs_diff_eq!(mu[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cov[(0, 0)], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn b_zero_design_reduces_to_prior() {
        let xi = DMatrix::zeros(3, 2);
        let prec = DVector::from_element(3, 4.0);
        let y = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let u = DVector::zeros(3);
        let upsilon = DVector::from_vec(vec![0.7, 0.2]);
        let (mu, cov) = conditional_b_moments(&xi, &prec, &y, 0.3, &u, &upsilon).unwrap();
        assert_abs_diff_eq!(mu[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mu[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cov[(0, 0)], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(cov[(1, 1)], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(cov[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn b_rejects_nonpositive_prior_variance() {
        let xi = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let prec = DVector::from_element(2, 1.0);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let u = DVector::zeros(2);
        let upsilon = DVector::from_element(1, 0.0);
        let mut r = rng(0);
        assert!(update_b(&xi, &prec, &y, 0.0, &u, &upsilon, &mut r).is_err());
    }

    #[test]
    fn empty_design_draws_nothing() {
        let xi = DMatrix::zeros(2, 0);
        let prec = DVector::from_element(2, 1.0);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let u = DVector::zeros(2);
        let upsilon = DVector::zeros(0);
        let mut r1 = rng(1);
        let b = update_b(&xi, &prec, &y, 0.0, &u, &upsilon, &mut r1).unwrap();
        assert_eq!(b.len(), 0);
        // no randomness consumed
        let mut r2 = rng(1);
        assert_eq!(r1.random::<u64>(), r2.random::<u64>());
    }

    #[test]
    fn u_draws_satisfy_constraint_every_time() {
        let g = build_graph(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let prec = DVector::from_element(4, 2.0);
        let y = DVector::from_vec(vec![1.0, -0.5, 0.3, 0.9]);
        let fitted = DVector::zeros(4);
        let mut r = rng(8);
        for _ in 0..500 {
            let u = update_u(&g, &prec, &y, 0.1, &fitted, 0.5, &mut r).unwrap();
            assert!(u.sum().abs() < 1e-10);
        }
    }

    #[test]
    fn u_shrinks_as_sigma_u2_decreases() {
        let g = build_graph(3, &[(0, 1), (1, 2)]).unwrap();
        let prec = DVector::from_element(3, 1.0);
        let y = DVector::from_vec(vec![2.0, -1.0, 3.0]);
        let fitted = DVector::zeros(3);
        let mut last = f64::INFINITY;
        for sigma_u2 in [1.0, 1e-2, 1e-4] {
            let mut r = rng(21);
            let mut norm = 0.0;
            for _ in 0..2000 {
                let u = update_u(&g, &prec, &y, 0.0, &fitted, sigma_u2, &mut r).unwrap();
                norm += u.norm();
            }
            norm /= 2000.0;
            assert!(norm < last, "sigma_u2 {sigma_u2}: {norm}");
            last = norm;
        }
    }

    #[test]
    fn u_independent_matches_scalar_conjugate_mean() {
        // single-area conditional mean = (sigma_u^2 / (sigma_u^2 + sigma_i^2)) * residual
        let prec = DVector::from_vec(vec![1.0 / 0.5, 1.0 / 2.0]);
        let y = DVector::from_vec(vec![1.2, -0.8]);
        let fitted = DVector::zeros(2);
        let sigma_u2 = 0.7;
        let m = 200_000;
        let mut r = rng(4);
        let mut sums = [0.0; 2];
        for _ in 0..m {
            let u = update_u_independent(&prec, &y, 0.0, &fitted, sigma_u2, &mut r).unwrap();
            sums[0] += u[0];
            sums[1] += u[1];
        }
        for i in 0..2 {
            let sigma_i2 = 1.0 / prec[i];
            let want = sigma_u2 / (sigma_u2 + sigma_i2) * y[i];
            let got = sums[i] / m as f64;
            let se = (sigma_u2.min(sigma_i2) / m as f64).sqrt();
            assert!((got - want).abs() < 4.0 * se, "area {i}: {got} vs {want}");
        }
    }

    #[test]
    fn u_independent_shrinks_to_zero() {
        let prec = DVector::from_element(2, 1.0);
        let y = DVector::from_vec(vec![5.0, -3.0]);
        let fitted = DVector::zeros(2);
        let mut r = rng(14);
        let mut last = f64::INFINITY;
        for sigma_u2 in [1.0, 1e-2, 1e-4] {
            let mut norm = 0.0;
            for _ in 0..2000 {
                norm += update_u_independent(&prec, &y, 0.0, &fitted, sigma_u2, &mut r)
                    .unwrap()
                    .norm();
            }
            norm /= 2000.0;
            assert!(norm < last);
            last = norm;
        }
    }

    #[test]
    fn sigma_u2_zero_field_reduces_to_prior_scale() {
        // u = 0: IG(a1 + n/2, a2); check the Monte Carlo mean against
        // the closed-form a2 / (shape - 1) within 1%
        let g = build_graph(3, &[(0, 1), (1, 2)]).unwrap();
        let u = DVector::zeros(3);
        let prior = IgPrior { a1: 3.0, a2: 2.0 };
        let shape = 3.0 + 1.5;
        let want = 2.0 / (shape - 1.0);
        let mut r = rng(31);
        let m = 100_000;
        let mut sum = 0.0;
        for _ in 0..m {
            sum += update_sigma_u2(&g, &u, &prior, false, &mut r).unwrap();
        }
        let got = sum / m as f64;
        assert!((got - want).abs() / want < 0.01, "{got} vs {want}");
    }

    #[test]
    fn sigma_u2_ignores_constant_shift() {
        let g = build_graph(3, &[(0, 1), (1, 2)]).unwrap();
        let prior = IgPrior::default();
        let u1 = DVector::from_vec(vec![0.4, -0.1, -0.3]);
        let u2 = &u1 + DVector::from_element(3, 100.0);
        let d1 = update_sigma_u2(&g, &u1, &prior, false, &mut rng(77)).unwrap();
        let d2 = update_sigma_u2(&g, &u2, &prior, false, &mut rng(77)).unwrap();
        // same quadform within float error of the shifted sum, same rng
        assert_abs_diff_eq!(d1, d2, epsilon = 1e-6 * d1.abs());
    }

    #[test]
    fn rank_adjusted_shape_changes_the_draw() {
        let g = build_graph(3, &[(0, 1), (1, 2)]).unwrap();
        let prior = IgPrior { a1: 3.0, a2: 2.0 };
        let u = DVector::from_vec(vec![0.5, 0.0, -0.5]);
        let m = 100_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        let mut r1 = rng(5);
        let mut r2 = rng(5);
        for _ in 0..m {
            s1 += update_sigma_u2(&g, &u, &prior, false, &mut r1).unwrap();
            s2 += update_sigma_u2(&g, &u, &prior, true, &mut r2).unwrap();
        }
        let q = icar_quadform(&g, &u);
        let want1 = (prior.a2 + q / 2.0) / (prior.a1 + 1.5 - 1.0);
        let want2 = (prior.a2 + q / 2.0) / (prior.a1 + 1.0 - 1.0);
        assert!((s1 / m as f64 - want1).abs() / want1 < 0.01);
        assert!((s2 / m as f64 - want2).abs() / want2 < 0.01);
    }

    #[test]
    fn beta0_hand_value_and_flat_prior_limit() {
        // n=2, sigma^2=(1,1), sigma_beta0^2=1, residuals (2,4):
        // mean 2, variance 1/3
        let prec = DVector::from_element(2, 1.0);
        let y = DVector::from_vec(vec![2.0, 4.0]);
        let fitted = DVector::zeros(2);
        let u = DVector::zeros(2);
        let m = 200_000;
        let mut r = rng(6);
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..m {
            let d = update_beta0(&prec, &y, &fitted, &u, 1.0, &mut r).unwrap();
            sum += d;
            sumsq += d * d;
        }
        let mean = sum / m as f64;
        let var = sumsq / m as f64 - mean * mean;
        assert!((mean - 2.0).abs() < 4.0 * (1.0 / 3.0f64 / m as f64).sqrt());
        assert!((var - 1.0 / 3.0).abs() / (1.0 / 3.0) < 0.02);

        // flat-prior limit: mean of residuals
        let mut r = rng(7);
        let mut sum = 0.0;
        for _ in 0..m {
            sum += update_beta0(&prec, &y, &fitted, &u, 1e12, &mut r).unwrap();
        }
        assert!((sum / m as f64 - 3.0).abs() < 0.02);
    }

    #[test]
    fn sigma_beta0_2_at_zero_intercept() {
        let prior = IgPrior { a1: 3.0, a2: 2.0 };
        let want = prior.a2 / (prior.a1 + 0.5 - 1.0);
        let m = 200_000;
        let mut r = rng(9);
        let mut sum = 0.0;
        for _ in 0..m {
            sum += update_sigma_beta0_2(0.0, &prior, &mut r).unwrap();
        }
        assert!((sum / m as f64 - want).abs() / want < 0.02);
    }

    fn toy_data(n: usize, y: &[f64]) -> SurveyDataset {
        SurveyDataset::new(
            (0..n).map(|i| format!("a{i}")).collect(),
            DVector::from_row_slice(y),
            DVector::from_element(n, 1e-4),
            None,
        )
        .unwrap()
    }

    #[test]
    fn spatial_only_constant_data_recovers_the_constant() {
        let n = 4;
        let data = toy_data(n, &[5.0, 5.0, 5.0, 5.0]);
        let g = build_graph(n, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut spec = ModelSpec::new(Variant::SpatialOnly, 99);
        spec.mcmc.iterations = 4000;
        spec.mcmc.burn_in = 500;
        let draws = run_chain(&data, &[], &g, &spec).unwrap();
        let theta = draws.theta_mean();
        let u = draws.u_mean();
        for i in 0..n {
            assert!((theta[i] - 5.0).abs() < 0.05, "theta[{i}] = {}", theta[i]);
            assert!(u[i].abs() < 0.05, "u[{i}] = {}", u[i]);
        }
    }

    #[test]
    fn same_seed_gives_identical_draws() {
        let data = toy_data(3, &[1.0, 2.0, 3.0]);
        let g = build_graph(3, &[(0, 1), (1, 2)]).unwrap();
        let mut spec = ModelSpec::new(Variant::SpatialOnly, 1234);
        spec.mcmc.iterations = 200;
        spec.mcmc.burn_in = 50;
        let d1 = run_chain(&data, &[], &g, &spec).unwrap();
        let d2 = run_chain(&data, &[], &g, &spec).unwrap();
        assert_eq!(d1.beta0, d2.beta0);
        assert_eq!(d1.sigma_u2, d2.sigma_u2);
        assert_eq!(d1.theta, d2.theta);
    }

    #[test]
    fn sffh_without_covariates_equals_spatial_only() {
        let data = toy_data(3, &[0.4, -0.2, 0.6]);
        let g = build_graph(3, &[(0, 1), (1, 2)]).unwrap();
        let mut a = ModelSpec::new(Variant::Sffh, 2024);
        a.mcmc.iterations = 300;
        a.mcmc.burn_in = 100;
        let mut b = a.clone();
        b.variant = Variant::SpatialOnly;
        let da = run_chain(&data, &[], &g, &a).unwrap();
        let db = run_chain(&data, &[], &g, &b).unwrap();
        assert_eq!(da.beta0, db.beta0);
        assert_eq!(da.sigma_u2, db.sigma_u2);
        assert_eq!(da.u, db.u);
        assert_eq!(da.theta, db.theta);
    }

    #[test]
    fn constraint_holds_after_every_sweep() {
        let data = toy_data(5, &[0.1, -0.4, 0.8, 0.0, 0.3]);
        let g = build_graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let spec = ModelSpec::new(Variant::Sffh, 3);
        let mut sampler = GibbsSampler::new(&data, &[], &g, &spec, &[true; 5]).unwrap();
        for _ in 0..200 {
            sampler.sweep().unwrap();
            assert!(sampler.state().u.sum().abs() < 1e-10);
            assert!(sampler.state().sigma_u2 > 0.0);
            assert!(sampler.state().sigma_beta0_2 > 0.0);
        }
    }

    #[test]
    fn retained_draw_count_matches_contract() {
        let data = toy_data(3, &[1.0, 2.0, 3.0]);
        let g = build_graph(3, &[(0, 1), (1, 2)]).unwrap();
        let mut spec = ModelSpec::new(Variant::SpatialOnly, 5);
        spec.mcmc.iterations = 107;
        spec.mcmc.burn_in = 10;
        spec.mcmc.thin = 3;
        let draws = run_chain(&data, &[], &g, &spec).unwrap();
        assert_eq!(draws.n_draws(), (107 - 10) / 3);
    }

    #[test]
    fn spec_validation_rejects_bad_hyperparameters() {
        let mut spec = ModelSpec::new(Variant::Sffh, 1);
        spec.ssvs.c = 0.5;
        assert!(spec.validate().is_err());
        let mut spec = ModelSpec::new(Variant::Sffh, 1);
        spec.ssvs.tau = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = ModelSpec::new(Variant::Sffh, 1);
        spec.ssvs.pi = 1.0;
        assert!(spec.validate().is_err());
        let mut spec = ModelSpec::new(Variant::Sffh, 1);
        spec.mcmc.burn_in = spec.mcmc.iterations;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn scalar_covariates_join_the_selection_block() {
        let n = 6;
        let x = DMatrix::from_fn(n, 1, |i, _| (i as f64) - 2.5);
        let data = SurveyDataset::new(
            (0..n).map(|i| format!("a{i}")).collect(),
            DVector::from_fn(n, |i, _| 0.02 * ((i as f64) - 2.5)),
            DVector::from_element(n, 1e-4),
            Some((vec!["x1".to_string()], x)),
        )
        .unwrap();
        let g = build_graph(n, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        let mut spec = ModelSpec::new(Variant::Sffh, 55);
        spec.mcmc.iterations = 2000;
        spec.mcmc.burn_in = 400;
        let draws = run_chain(&data, &[], &g, &spec).unwrap();
        assert_eq!(draws.labels.len(), 1);
        assert_eq!(draws.labels[0].covariate, "x1");
        assert_eq!(draws.labels[0].component, 0);
        assert_eq!(draws.k_functional, 0);
        assert_eq!(draws.inclusion_probabilities().len(), 1);
        // the coefficient tracks the generating slope direction
        let b = draws.coef_mean()[0];
        assert!(b > 0.0, "coefficient mean {b}");
        // spatial-only drops the scalar block entirely
        let mut sp = spec.clone();
        sp.variant = Variant::SpatialOnly;
        let draws_sp = run_chain(&data, &[], &g, &sp).unwrap();
        assert!(draws_sp.labels.is_empty());
    }

    #[test]
    fn masked_area_keeps_its_theta_prediction() {
        let data = toy_data(4, &[0.0, 1.0, 2.0, 3.0]);
        let g = build_graph(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut spec = ModelSpec::new(Variant::SpatialOnly, 10);
        spec.mcmc.iterations = 2000;
        spec.mcmc.burn_in = 200;
        let mask = [true, true, true, false];
        let draws = run_chain_masked(&data, &[], &g, &spec, &mask).unwrap();
        let theta = draws.theta_mean();
        assert!(theta[3].is_finite());
        // masked run differs from the full run
        let full = run_chain(&data, &[], &g, &spec).unwrap();
        assert_ne!(draws.theta, full.theta);
    }
}
