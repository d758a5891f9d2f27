//! Built-in simulation scenarios.

use ingarch_core::{ModelSpec, Params};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub id: &'static str,
    pub spec: ModelSpec,
    pub truth: Params,
    pub prior_cov_diag: [f64; 3],
}

const LOGLINEAR_PRIOR: [f64; 3] = [1.0, 1.0, 1.0];
const SOFTPLUS_PRIOR: [f64; 3] = [0.0225, 0.0225, 0.0225];

pub const SCENARIOS: [Scenario; 4] = [
    Scenario {
        id: "A1",
        spec: ModelSpec::LogLinear,
        truth: Params {
            alpha0: 0.3,
            alpha1: 0.2,
            beta1: 0.6,
            lambda0: 3.0,
        },
        prior_cov_diag: LOGLINEAR_PRIOR,
    },
    Scenario {
        id: "A2",
        spec: ModelSpec::LogLinear,
        truth: Params {
            alpha0: 0.2,
            alpha1: 0.3,
            beta1: 0.4,
            lambda0: 3.0,
        },
        prior_cov_diag: LOGLINEAR_PRIOR,
    },
    Scenario {
        id: "B1",
        spec: ModelSpec::Softplus { scale: 1.0 },
        truth: Params {
            alpha0: 0.3,
            alpha1: 0.4,
            beta1: 0.25,
            lambda0: 1.0,
        },
        prior_cov_diag: SOFTPLUS_PRIOR,
    },
    Scenario {
        id: "B3",
        spec: ModelSpec::Softplus { scale: 1.0 },
        truth: Params {
            alpha0: 0.25,
            alpha1: 0.35,
            beta1: 0.4,
            lambda0: 1.0,
        },
        prior_cov_diag: SOFTPLUS_PRIOR,
    },
];

pub fn scenario_ids() -> Vec<&'static str> {
    SCENARIOS.iter().map(|s| s.id).collect()
}

pub fn lookup(id: &str) -> CliResult<Scenario> {
    SCENARIOS
        .iter()
        .find(|s| s.id.eq_ignore_ascii_case(id))
        .copied()
        .ok_or_else(|| {
            CliError::Config(format!(
                "unknown scenario `{id}`; valid ids are {}",
                scenario_ids().join(", ")
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_id_lists_valid_ones() {
        let err = lookup("B9").unwrap_err().to_string();
        for id in ["A1", "A2", "B1", "B3"] {
            assert!(err.contains(id), "{err}");
        }
        assert!(lookup("B2").is_err());
    }

    #[test]
    fn truths_are_stationary() {
        for s in SCENARIOS {
            assert!(ingarch_core::model::check_stationarity(&s.spec, &s.truth), "{}", s.id);
        }
        assert_eq!(lookup("a1").unwrap().id, "A1");
    }
}
