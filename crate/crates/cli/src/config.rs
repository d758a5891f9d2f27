//! Experiment configuration: a flat JSON document with strict keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ingarch_core::inference::PointForecast;
use ingarch_core::mh::{MhConfig, PriorSpec, UpdateMode};
use ingarch_core::proposal::{GaussianPrior, LogLinearDesign};
use ingarch_core::psais::{GpdMethod, PsaisConfig};
use ingarch_core::{ModelSpec, Params, Theta};

use crate::error::{CliError, CliResult};
use crate::scenario::{lookup, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Loglinear,
    Softplus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mle,
    Mh,
    Psais,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GpdFitKind {
    Profile,
    Ml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointForecastKind {
    DrawAverage,
    Plugin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Joint,
    Blocked,
}

/// Every key is optional; unset keys take scenario or built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Option<String>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n: Option<usize>,

    pub link: Option<Link>,
    pub softplus_scale: Option<f64>,
    pub alpha0: Option<f64>,
    pub alpha1: Option<f64>,
    pub beta1: Option<f64>,
    pub lambda0: Option<f64>,

    pub prior_mean: Option<[f64; 3]>,
    pub prior_cov_diag: Option<[f64; 3]>,
    pub lambda0_prior_shape: Option<f64>,
    pub lambda0_prior_rate: Option<f64>,

    pub nb_tolerance: Option<f64>,
    pub loglinear_full_jacobian: Option<bool>,

    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub warmup: Option<usize>,
    pub init: Option<[f64; 3]>,
    pub init_lambda0: Option<f64>,
    pub include_prior_in_ratio: Option<bool>,
    pub update_mode: Option<Mode>,
    pub freeze_r_after: Option<usize>,
    pub lambda0_proposal: Option<[f64; 2]>,
    pub update_lambda0: Option<bool>,

    pub psais_draws: Option<usize>,
    pub psais_lambda0: Option<f64>,
    pub psais_center: Option<[f64; 3]>,
    pub overwrite_draws: Option<bool>,
    pub gpd_fit: Option<GpdFitKind>,

    pub replications: Option<usize>,
    pub methods: Option<Vec<Method>>,
    pub workers: Option<usize>,

    pub fit_dir: Option<PathBuf>,
    pub max_lag: Option<usize>,
    pub hist_bins: Option<usize>,
    pub point_forecast: Option<PointForecastKind>,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_N: usize = 800;
pub const DEFAULT_INIT: [f64; 3] = [0.1, 0.1, 0.1];
pub const DEFAULT_LAMBDA0_PRIOR: (f64, f64) = (1.0, 0.1);
pub const DEFAULT_REPLICATIONS: usize = 20;
pub const DEFAULT_MAX_LAG: usize = 20;
pub const DEFAULT_HIST_BINS: usize = 20;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn scenario(&self) -> CliResult<Option<Scenario>> {
        self.scenario.as_deref().map(lookup).transpose()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn spec(&self) -> CliResult<ModelSpec> {
        let scenario = self.scenario()?;
        let link = match (self.link, scenario) {
            (Some(l), _) => l,
            (None, Some(s)) => match s.spec {
                ModelSpec::LogLinear => Link::Loglinear,
                ModelSpec::Softplus { .. } => Link::Softplus,
            },
            (None, None) => Link::Loglinear,
        };
        match link {
            Link::Loglinear => {
                if self.softplus_scale.is_some() {
                    return Err(CliError::Config("softplus_scale given for the log-linear link".into()));
                }
                Ok(ModelSpec::LogLinear)
            }
            Link::Softplus => {
                let scale = match (self.softplus_scale, scenario.map(|s| s.spec)) {
                    (Some(c), _) => c,
                    (None, Some(ModelSpec::Softplus { scale })) => scale,
                    _ => 1.0,
                };
                ModelSpec::softplus(scale).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }

    /// Generating parameters: scenario truth with per-key overrides.
    pub fn true_params(&self) -> CliResult<Params> {
        let base = self.scenario()?.map(|s| s.truth);
        let pick = |v: Option<f64>, d: Option<f64>, name: &str| {
            v.or(d)
                .ok_or_else(|| CliError::Config(format!("`{name}` is required without a scenario")))
        };
        let p = Params::new(
            pick(self.alpha0, base.map(|b| b.alpha0), "alpha0")?,
            pick(self.alpha1, base.map(|b| b.alpha1), "alpha1")?,
            pick(self.beta1, base.map(|b| b.beta1), "beta1")?,
            pick(self.lambda0, base.map(|b| b.lambda0), "lambda0")?,
        );
        let spec = self.spec()?;
        if !ingarch_core::model::check_stationarity(&spec, &p) {
            return Err(CliError::Config(format!(
                "parameters ({}, {}, {}) are not stationary under the {} link",
                p.alpha0,
                p.alpha1,
                p.beta1,
                spec.name()
            )));
        }
        Ok(p)
    }

    pub fn prior(&self) -> CliResult<PriorSpec> {
        let scenario = self.scenario()?;
        let mean = self.prior_mean.unwrap_or([0.0; 3]);
        let var = self
            .prior_cov_diag
            .or(scenario.map(|s| s.prior_cov_diag))
            .unwrap_or([1.0; 3]);
        let theta = GaussianPrior::diagonal(mean, var).map_err(|e| CliError::Config(e.to_string()))?;
        PriorSpec::new(
            theta,
            self.lambda0_prior_shape.unwrap_or(DEFAULT_LAMBDA0_PRIOR.0),
            self.lambda0_prior_rate.unwrap_or(DEFAULT_LAMBDA0_PRIOR.1),
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    fn design(&self) -> LogLinearDesign {
        if self.loglinear_full_jacobian.unwrap_or(false) {
            LogLinearDesign::FullJacobian
        } else {
            LogLinearDesign::PlugIn
        }
    }

    fn tolerance(&self) -> f64 {
        self.nb_tolerance.unwrap_or(ingarch_core::nb::DEFAULT_TOLERANCE)
    }

    pub fn mh_config(&self, seed: u64) -> CliResult<MhConfig> {
        let d = MhConfig::default();
        let cfg = MhConfig {
            iterations: self.iterations.unwrap_or(d.iterations),
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            seed,
            chain_index: 0,
            nb_tolerance: self.tolerance(),
            lambda0_proposal: self.lambda0_proposal.map(|[a, b]| (a, b)),
            include_prior_in_ratio: self.include_prior_in_ratio.unwrap_or(true),
            mode: match self.update_mode {
                Some(Mode::Blocked) => UpdateMode::Blocked,
                _ => UpdateMode::Joint,
            },
            freeze_r_after: self.freeze_r_after,
            design: self.design(),
            update_lambda0: self.update_lambda0.unwrap_or(true),
            warmup: self.warmup,
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn init(&self) -> Params {
        let t = self.init.unwrap_or(DEFAULT_INIT);
        Params::new(t[0], t[1], t[2], self.init_lambda0.unwrap_or(1.0))
    }

    pub fn psais_config(&self, seed: u64) -> PsaisConfig {
        PsaisConfig {
            draws: self.psais_draws.unwrap_or(5_000),
            seed,
            chain_index: 0,
            nb_tolerance: self.tolerance(),
            lambda0: self.psais_lambda0,
            center: self.psais_center.map(Theta::from),
            overwrite_draws: self.overwrite_draws.unwrap_or(false),
            gpd_method: match self.gpd_fit {
                Some(GpdFitKind::Ml) => GpdMethod::MaxLikelihood,
                _ => GpdMethod::ProfilePosterior,
            },
            design: self.design(),
        }
    }

    pub fn point_forecast(&self) -> PointForecast {
        match self.point_forecast {
            Some(PointForecastKind::Plugin) => PointForecast::PlugIn,
            _ => PointForecast::DrawAverage,
        }
    }

    pub fn methods(&self) -> Vec<Method> {
        self.methods.clone().unwrap_or_else(|| vec![Method::Mle, Method::Mh, Method::Psais])
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(DEFAULT_N)
    }

    /// Checks every derived object that does not need data.
    pub fn validate(&self) -> CliResult<()> {
        self.spec()?;
        self.prior()?;
        self.mh_config(self.seed())?;
        if let Some(t) = self.nb_tolerance {
            if !(t > 0.0 && t < 1.0) {
                return Err(CliError::Config(format!("nb_tolerance must lie in (0, 1), got {t}")));
            }
        }
        if self.replications == Some(0) {
            return Err(CliError::Config("replications must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.psais_draws.is_some_and(|s| s < 25) {
            return Err(CliError::Config("psais_draws must be at least 25".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"scenario": "A1", "bogus": 1}"#),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn scenario_defaults() {
        let c = ExperimentConfig::from_json(r#"{"scenario": "B1"}"#).unwrap();
        assert_eq!(c.spec().unwrap(), ModelSpec::Softplus { scale: 1.0 });
        assert_eq!(c.true_params().unwrap(), Params::new(0.3, 0.4, 0.25, 1.0));
        assert_eq!(c.prior().unwrap().theta.cov()[(0, 0)], 0.0225);
        c.validate().unwrap();
    }

    #[test]
    fn overrides_and_errors() {
        let c = ExperimentConfig::from_json(r#"{"scenario": "A1", "alpha1": 0.3}"#).unwrap();
        assert_eq!(c.true_params().unwrap().alpha1, 0.3);
        let c = ExperimentConfig::from_json(r#"{"scenario": "A1", "alpha1": 0.5, "beta1": 0.6}"#).unwrap();
        assert!(c.true_params().is_err());
        let c = ExperimentConfig::from_json(r#"{"iterations": 10, "burn_in": 20}"#).unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig::from_json(r#"{"link": "loglinear"}"#).unwrap();
        assert!(c.true_params().is_err());
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::from_json(r#"{"scenario": "A2", "methods": ["mh", "mle"], "gpd_fit": "ml"}"#).unwrap();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
