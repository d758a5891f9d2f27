//! Exact-likelihood MLE over `(alpha0, alpha1, beta1, lambda0)`.
//!
//! The stationarity region is mapped onto `R^4`:
//! - log-linear: `alpha1 = tanh(u1)`, `beta1 = (1 - alpha1) logistic(u2)`,
//!   which covers the `beta1 > 0` branch;
//! - softplus: `alpha0 = exp(u0)`, `(alpha1, beta1, 1 - alpha1 - beta1)` is
//!   the softmax of `(u1, u2, 0)`;
//! - `lambda0 = exp(u3)` for both.
//!
//! BFGS on central-difference gradients is followed by a Nelder-Mead polish.

use argmin::core::{CostFunction, Executor, Gradient, State, TerminationReason, TerminationStatus};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::neldermead::NelderMead;
use argmin::solver::quasinewton::BFGS;

use crate::error::{Error, Result};
use crate::model::{is_stationary, log_likelihood, CountSeries, ModelSpec, Params};
use crate::special::logistic;

/// Objective value substituted where the intensity recursion overflows.
const OVERFLOW_PENALTY: f64 = 1e12;
const BFGS_MAX_ITERS: u64 = 200;
const SIMPLEX_MAX_ITERS: u64 = 4_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub params: Params,
    pub log_lik: f64,
    /// Cost and gradient calls made by both optimizer phases.
    pub evaluations: u64,
}

/// Maps unconstrained coordinates to parameters.
pub fn from_unconstrained(spec: &ModelSpec, u: &[f64]) -> Params {
    let lambda0 = u[3].exp();
    match spec {
        ModelSpec::LogLinear => {
            let a1 = u[1].tanh();
            Params::new(u[0], a1, (1.0 - a1) * logistic(u[2]), lambda0)
        }
        ModelSpec::Softplus { .. } => {
            let m = u[1].max(u[2]).max(0.0);
            let (e1, e2, e3) = ((u[1] - m).exp(), (u[2] - m).exp(), (-m).exp());
            let z = e1 + e2 + e3;
            Params::new(u[0].exp(), e1 / z, e2 / z, lambda0)
        }
    }
}

/// Inverse of [`from_unconstrained`] for interior points.
pub fn to_unconstrained(spec: &ModelSpec, p: &Params) -> Result<Vec<f64>> {
    if !is_stationary(spec, &p.theta()) || !(p.lambda0 > 0.0) {
        return Err(Error::NonStationary(format!(
            "initial value ({}, {}, {}, {})",
            p.alpha0, p.alpha1, p.beta1, p.lambda0
        )));
    }
    let logit = |q: f64| (q / (1.0 - q)).ln();
    let u = match spec {
        ModelSpec::LogLinear => {
            if p.beta1 <= 0.0 {
                return Err(Error::InvalidParameter(
                    "MLE covers the beta1 > 0 branch of the log-linear region".into(),
                ));
            }
            let share = p.beta1 / (1.0 - p.alpha1);
            if share >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "initial alpha1 + beta1 = {} is not below 1",
                    p.alpha1 + p.beta1
                )));
            }
            vec![p.alpha0, p.alpha1.atanh(), logit(share), p.lambda0.ln()]
        }
        ModelSpec::Softplus { .. } => {
            // keep boundary starts strictly inside the simplex
            let a1 = p.alpha1.max(1e-6);
            let b1 = p.beta1.max(1e-6);
            let slack = (1.0 - a1 - b1).max(1e-6);
            vec![p.alpha0.ln(), (a1 / slack).ln(), (b1 / slack).ln(), p.lambda0.ln()]
        }
    };
    Ok(u)
}

struct NegLogLik<'a> {
    spec: ModelSpec,
    x: &'a CountSeries,
}

impl NegLogLik<'_> {
    fn eval(&self, u: &[f64]) -> f64 {
        if u.iter().any(|v| !v.is_finite()) {
            return OVERFLOW_PENALTY;
        }
        let p = from_unconstrained(&self.spec, u);
        match log_likelihood(&self.spec, &p, self.x) {
            Ok(ll) if ll.is_finite() => -ll,
            _ => OVERFLOW_PENALTY,
        }
    }
}

impl CostFunction for NegLogLik<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, u: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(u))
    }
}

impl Gradient for NegLogLik<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, u: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let mut g = vec![0.0; u.len()];
        let mut v = u.clone();
        for i in 0..u.len() {
            let h = 1e-6 * u[i].abs().max(1.0);
            v[i] = u[i] + h;
            let fp = self.eval(&v);
            v[i] = u[i] - h;
            let fm = self.eval(&v);
            v[i] = u[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        Ok(g)
    }
}

/// Maximizes the exact Poisson log-likelihood from `init`.
///
/// Returns [`Error::NoConvergence`] with the best point found when the
/// simplex phase exhausts its iteration budget.
pub fn mle_fit(spec: &ModelSpec, x: &CountSeries, init: &Params) -> Result<MleFit> {
    let u0 = to_unconstrained(spec, init)?;
    let dim = u0.len();
    let problem = NegLogLik { spec: *spec, x };
    let mut evaluations = 0;

    // Quasi-Newton phase; a line-search failure just hands over to the simplex.
    let identity: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let bfgs = BFGS::new(MoreThuenteLineSearch::new()).with_tolerance_cost(1e-12).map_err(opt_err)?;
    let mut start = u0.clone();
    match Executor::new(NegLogLik { spec: *spec, x }, bfgs)
        .configure(|s| s.param(u0.clone()).inv_hessian(identity).max_iters(BFGS_MAX_ITERS).counting(true))
        .run()
    {
        Ok(res) => {
            let state = res.state();
            evaluations += state.get_func_counts().values().sum::<u64>();
            if let Some(best) = state.get_best_param() {
                if problem.eval(best) <= problem.eval(&u0) {
                    start = best.clone();
                }
            }
        }
        Err(e) => log::debug!("quasi-Newton phase stopped early: {e}"),
    }

    let mut simplex = vec![start.clone()];
    for i in 0..dim {
        let mut v = start.clone();
        v[i] += 0.05 * start[i].abs().max(1.0);
        simplex.push(v);
    }
    let nm = NelderMead::new(simplex).with_sd_tolerance(1e-12).map_err(opt_err)?;
    let res = Executor::new(NegLogLik { spec: *spec, x }, nm)
        .configure(|s| s.max_iters(SIMPLEX_MAX_ITERS).counting(true))
        .run()
        .map_err(opt_err)?;
    let state = res.state();
    evaluations += state.get_func_counts().values().sum::<u64>();
    let best = state.get_best_param().cloned().unwrap_or(start);
    let best_cost = problem.eval(&best);
    let params = from_unconstrained(spec, &best);

    let converged = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::SolverConverged)
    );
    if !converged || best_cost >= OVERFLOW_PENALTY {
        return Err(Error::NoConvergence {
            evaluations: evaluations as usize,
            best_value: -best_cost,
            best_point: vec![params.alpha0, params.alpha1, params.beta1, params.lambda0],
        });
    }
    Ok(MleFit {
        params,
        log_lik: -best_cost,
        evaluations,
    })
}

fn opt_err(e: argmin::core::Error) -> Error {
    Error::InvalidParameter(format!("optimizer setup: {e}"))
}
