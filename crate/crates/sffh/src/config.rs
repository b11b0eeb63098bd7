//! Run configuration: a TOML file with flat key-value sections, mirrored
//! by these structs. CLI flags override file values, and the effective
//! configuration is echoed into the output directory so a run can be
//! reproduced from its artifacts alone.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{IgPrior, McmcParams, ModelSpec, SsvsParams, Variant};
use crate::kl::{Centering, TruncationRule};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsSection,
    pub model: ModelSection,
    pub mcmc: McmcSection,
    pub kl: KlSection,
    pub simulation: SimulationSection,
    pub sensitivity: SensitivitySection,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub survey: PathBuf,
    pub adjacency: PathBuf,
    pub covariates: Vec<PathBuf>,
    /// Optional two-period file; when set, the outcomes are replaced by
    /// the relative-change transform before modeling.
    pub raw_outcome: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub variant: Variant,
    pub pi: f64,
    pub c: f64,
    pub tau: f64,
    pub a1: f64,
    pub a2: f64,
    pub icar_rank_adjusted: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let ssvs = SsvsParams::default();
        let ig = IgPrior::default();
        ModelSection {
            variant: Variant::Sffh,
            pi: ssvs.pi,
            c: ssvs.c,
            tau: ssvs.tau,
            a1: ig.a1,
            a2: ig.a2,
            icar_rank_adjusted: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSection {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Mandatory; there is no wall-clock fallback.
    pub seed: Option<u64>,
}

impl Default for McmcSection {
    fn default() -> Self {
        McmcSection {
            iterations: crate::gibbs::DEFAULT_ITERATIONS,
            burn_in: crate::gibbs::DEFAULT_BURN_IN,
            thin: 1,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KlSection {
    /// "variance_fraction" or "fixed".
    pub rule: String,
    pub variance_fraction: f64,
    pub fixed_k: usize,
    pub centering: Centering,
}

impl Default for KlSection {
    fn default() -> Self {
        KlSection {
            rule: "variance_fraction".to_string(),
            variance_fraction: 0.95,
            fixed_k: 13,
            centering: Centering::PerTimeMean,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub n_datasets: usize,
    /// Which functional covariate calibrates the generator; empty means
    /// the first configured covariate.
    pub covariate: String,
    /// Components used by the generator fit.
    pub k: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            n_datasets: 250,
            covariate: String::new(),
            k: 13,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivitySection {
    pub tau_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
}

impl Default for SensitivitySection {
    fn default() -> Self {
        SensitivitySection {
            tau_grid: crate::experiments::DEFAULT_TAU_GRID.to_vec(),
            c_grid: crate::experiments::DEFAULT_C_GRID.to_vec(),
        }
    }
}

/// Environment variable that overrides the configured seed (useful in CI).
pub const SEED_ENV_VAR: &str = "SAE_SEED";

impl RunConfig {
    /// Parse a config file. Relative paths inside the file are resolved
    /// against the file's directory. `SAE_SEED` overrides the seed.
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        cfg.apply_env()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.as_os_str().is_empty() || p.is_absolute() {
                return;
            }
            *p = base.join(&p);
        };
        resolve(&mut self.paths.survey);
        resolve(&mut self.paths.adjacency);
        for c in &mut self.paths.covariates {
            resolve(c);
        }
        if let Some(r) = &mut self.paths.raw_outcome {
            resolve(r);
        }
        resolve(&mut self.paths.output_dir);
    }

    fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV_VAR) {
            let seed = v.parse::<u64>().map_err(|_| {
                Error::validation(format!("{SEED_ENV_VAR}='{v}' is not a valid u64 seed"))
            })?;
            self.mcmc.seed = Some(seed);
        }
        Ok(())
    }

    /// Check that the configuration is complete and the referenced input
    /// files exist.
    pub fn validate(&self) -> Result<()> {
        if self.mcmc.seed.is_none() {
            return Err(Error::validation(format!(
                "a seed is required (set [mcmc] seed, --seed, or {SEED_ENV_VAR})"
            )));
        }
        if self.paths.survey.as_os_str().is_empty() {
            return Err(Error::validation("[paths] survey is required".to_string()));
        }
        if self.paths.adjacency.as_os_str().is_empty() {
            return Err(Error::validation(
                "[paths] adjacency is required".to_string(),
            ));
        }
        if self.paths.output_dir.as_os_str().is_empty() {
            return Err(Error::validation(
                "[paths] output_dir is required".to_string(),
            ));
        }
        let mut required: Vec<&PathBuf> = vec![&self.paths.survey, &self.paths.adjacency];
        required.extend(self.paths.covariates.iter());
        if let Some(r) = &self.paths.raw_outcome {
            required.push(r);
        }
        for p in required {
            if !p.is_file() {
                return Err(Error::validation(format!(
                    "input file not found: {}",
                    p.display()
                )));
            }
        }
        self.kl_rule()?;
        self.model_spec()?;
        Ok(())
    }

    pub fn seed(&self) -> Result<u64> {
        self.mcmc.seed.ok_or_else(|| {
            Error::validation(format!(
                "a seed is required (set [mcmc] seed, --seed, or {SEED_ENV_VAR})"
            ))
        })
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let spec = ModelSpec {
            variant: self.model.variant,
            ssvs: SsvsParams {
                pi: self.model.pi,
                c: self.model.c,
                tau: self.model.tau,
            },
            ig_prior: IgPrior {
                a1: self.model.a1,
                a2: self.model.a2,
            },
            mcmc: McmcParams {
                iterations: self.mcmc.iterations,
                burn_in: self.mcmc.burn_in,
                thin: self.mcmc.thin,
                seed: self.seed()?,
            },
            icar_rank_adjusted: self.model.icar_rank_adjusted,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kl_rule(&self) -> Result<TruncationRule> {
        match self.kl.rule.as_str() {
            "variance_fraction" => Ok(TruncationRule::VarianceFraction(self.kl.variance_fraction)),
            "fixed" => Ok(TruncationRule::Fixed(self.kl.fixed_k)),
            other => Err(Error::validation(format!(
                "unknown kl rule '{other}' (expected variance_fraction or fixed)"
            ))),
        }
    }

    /// Covariate name used to calibrate the simulation generator.
    pub fn simulation_covariate(&self, available: &[String]) -> Result<String> {
        if self.simulation.covariate.is_empty() {
            available.first().cloned().ok_or_else(|| {
                Error::validation("no covariates configured for simulation".to_string())
            })
        } else {
            Ok(self.simulation.covariate.clone())
        }
    }

    /// Serialize the effective configuration into the output directory.
    pub fn echo_effective(&self) -> Result<PathBuf> {
        let out = self.paths.output_dir.join("config_effective.toml");
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::validation(format!("serialize config: {e}")))?;
        crate::cli::atomic_write(&out, text.as_bytes())?;
        Ok(out)
    }
}
