//! Subcommand implementations.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ingarch_core::inference::forecast::{forecast_metrics, pearson_residuals};
use ingarch_core::inference::summary::{density_grid, posterior_summary, running_mean, PARAM_NAMES};
use ingarch_core::inference::{acf, mle_fit, ForecastReport};
use ingarch_core::io::{read_counts_file, write_counts};
use ingarch_core::mh::{run_chain, ChainResult};
use ingarch_core::model::simulate;
use ingarch_core::psais::{identity, psais_run, PsaisResult};
use ingarch_core::{CountSeries, ModelSpec, Params};

use crate::config::{ExperimentConfig, Method, DEFAULT_HIST_BINS, DEFAULT_MAX_LAG, DEFAULT_REPLICATIONS};
use crate::error::{CliError, CliResult};
use crate::output::{num, RunDir};

const DENSITY_POINTS: usize = 128;
const CHAIN_ACF_LAGS: usize = 50;

fn out_dir(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    cfg.out
        .clone()
        .ok_or_else(|| CliError::Config("an output directory is required (--out)".into()))
}

fn load_data(cfg: &ExperimentConfig) -> CliResult<(PathBuf, CountSeries)> {
    let path = cfg
        .data
        .clone()
        .ok_or_else(|| CliError::Config("a data file is required (--data)".into()))?;
    if !path.exists() {
        return Err(CliError::Data(format!("data file {} does not exist", path.display())));
    }
    let x = read_counts_file(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok((path, x))
}

#[derive(Debug, Serialize)]
struct SimulationMeta {
    scenario: Option<String>,
    link: &'static str,
    softplus_scale: Option<f64>,
    seed: u64,
    n: usize,
    alpha0: f64,
    alpha1: f64,
    beta1: f64,
    lambda0: f64,
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let truth = cfg.true_params()?;
    let seed = cfg.seed();
    let n = cfg.n();
    let x = simulate(&spec, &truth, n, seed)?;

    let mut run = RunDir::create(&out_dir(cfg)?)?;
    let mut buf = Vec::new();
    write_counts(&x, &mut buf)?;
    run.write_bytes("series.csv", &buf)?;
    run.write_json(
        "metadata.json",
        &SimulationMeta {
            scenario: cfg.scenario()?.map(|s| s.id.to_string()),
            link: spec.name(),
            softplus_scale: match spec {
                ModelSpec::Softplus { scale } => Some(scale),
                ModelSpec::LogLinear => None,
            },
            seed,
            n,
            alpha0: truth.alpha0,
            alpha1: truth.alpha1,
            beta1: truth.beta1,
            lambda0: truth.lambda0,
        },
    )?;
    run.finish("simulate", cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamRow {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub ess: Option<f64>,
    pub ess_degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MhSummary {
    pub method: String,
    pub link: String,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub nb_tolerance: f64,
    pub params: Vec<ParamRow>,
    pub acceptance_rate: f64,
    pub lambda0_acceptance_rate: f64,
    pub fallback_iterations: usize,
}

/// Fits the MH sampler and summarizes it.
pub fn fit_mh(cfg: &ExperimentConfig, x: &CountSeries, seed: u64) -> CliResult<(ChainResult, MhSummary)> {
    let spec = cfg.spec()?;
    let prior = cfg.prior()?;
    let mh = cfg.mh_config(seed)?;
    let chain = run_chain(&spec, &prior, &mh, x, &cfg.init())?;
    let s = posterior_summary(&chain, mh.burn_in)?;
    let summary = MhSummary {
        method: "mh".into(),
        link: spec.name().into(),
        seed,
        iterations: mh.iterations,
        burn_in: mh.burn_in,
        nb_tolerance: mh.nb_tolerance,
        params: s
            .params
            .iter()
            .map(|p| ParamRow {
                name: p.name.into(),
                mean: p.mean,
                sd: p.sd,
                q025: p.q025,
                q50: p.q50,
                q975: p.q975,
                ess: p.ess.is_finite().then_some(p.ess),
                ess_degenerate: p.ess_degenerate,
            })
            .collect(),
        acceptance_rate: s.acceptance_rate,
        lambda0_acceptance_rate: s.lambda0_acceptance_rate,
        fallback_iterations: chain.fallback_iterations.len(),
    };
    Ok((chain, summary))
}

pub fn cmd_fit_mh(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    cfg.validate()?;
    let (path, x) = load_data(cfg)?;
    let (chain, summary) = fit_mh(cfg, &x, cfg.seed())?;

    let mut run = RunDir::create(&out_dir(cfg)?)?;
    run.record_input(&path)?;
    run.write_csv(
        "chain.csv",
        &["iter", "alpha0", "alpha1", "beta1", "lambda0", "acc_theta", "acc_l0"],
        chain.draws.iter().enumerate().map(|(i, d)| {
            vec![
                i.to_string(),
                num(d[0]),
                num(d[1]),
                num(d[2]),
                num(d[3]),
                (chain.accepted_theta[i] as u8).to_string(),
                (chain.accepted_lambda0[i] as u8).to_string(),
            ]
        }),
    )?;
    run.write_csv(
        "r_schedule.csv",
        &["iter", "mean_r"],
        chain.mean_r.iter().enumerate().map(|(i, r)| vec![i.to_string(), num(*r)]),
    )?;
    let running: Vec<Vec<f64>> = (0..4).map(|j| running_mean(&chain.column(j))).collect();
    run.write_csv(
        "running_mean.csv",
        &["iter", "alpha0", "alpha1", "beta1", "lambda0"],
        (0..chain.len()).map(|i| {
            let mut row = vec![i.to_string()];
            row.extend(running.iter().map(|c| num(c[i])));
            row
        }),
    )?;
    let mut density = Vec::new();
    let mut acf_rows = Vec::new();
    for (j, name) in PARAM_NAMES.iter().enumerate() {
        let kept = chain.kept_column(j);
        for (v, d) in density_grid(&kept, DENSITY_POINTS) {
            density.push(vec![name.to_string(), num(v), num(d)]);
        }
        if let Ok(rho) = acf(&kept, CHAIN_ACF_LAGS.min(kept.len() - 1)) {
            for (lag, r) in rho.iter().enumerate() {
                acf_rows.push(vec![name.to_string(), lag.to_string(), num(*r)]);
            }
        }
    }
    run.write_csv("density.csv", &["param", "value", "density"], density)?;
    run.write_csv("chain_acf.csv", &["param", "lag", "rho"], acf_rows)?;
    run.write_json("summary.json", &summary)?;
    run.finish("fit-mh", cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PsaisSummary {
    pub method: String,
    pub link: String,
    pub seed: u64,
    pub draws: usize,
    pub nb_tolerance: f64,
    pub estimate: Vec<f64>,
    pub std_error: Vec<f64>,
    pub khat: Option<f64>,
    pub khat_threshold: f64,
    pub khat_flag: bool,
    pub tail_degenerate: bool,
    pub importance_ess: f64,
    pub lambda0: f64,
    pub fallback_draws: usize,
}

pub fn fit_psais(cfg: &ExperimentConfig, x: &CountSeries, seed: u64) -> CliResult<(PsaisResult, PsaisSummary)> {
    let spec = cfg.spec()?;
    let prior = cfg.prior()?;
    let pc = cfg.psais_config(seed);
    let res = psais_run(&spec, &prior, &pc, x, identity)?;
    let summary = PsaisSummary {
        method: "psais".into(),
        link: spec.name().into(),
        seed,
        draws: pc.draws,
        nb_tolerance: pc.nb_tolerance,
        estimate: res.estimate.clone(),
        std_error: res.std_error.clone(),
        khat: res.khat(),
        khat_threshold: res.khat_threshold,
        khat_flag: res.khat_flag,
        tail_degenerate: res.gpd.is_none(),
        importance_ess: res.ess,
        lambda0: res.lambda0,
        fallback_draws: res.fallback_draws,
    };
    Ok((res, summary))
}

pub fn cmd_fit_psais(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    cfg.validate()?;
    let (path, x) = load_data(cfg)?;
    let (res, summary) = fit_psais(cfg, &x, cfg.seed())?;
    let mut run = RunDir::create(&out_dir(cfg)?)?;
    run.record_input(&path)?;
    run.write_csv(
        "weights.csv",
        &["draw", "alpha0", "alpha1", "beta1", "raw_ratio", "weight"],
        res.draws.iter().enumerate().map(|(s, t)| {
            vec![
                s.to_string(),
                num(t[0]),
                num(t[1]),
                num(t[2]),
                num(res.raw_ratios[s]),
                num(res.smoothed_weights[s]),
            ]
        }),
    )?;
    run.write_json("summary.json", &summary)?;
    run.finish("fit-psais", cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MleSummary {
    pub method: String,
    pub link: String,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub lambda0: f64,
    pub log_lik: f64,
    pub evaluations: u64,
}

pub fn fit_mle(cfg: &ExperimentConfig, x: &CountSeries) -> CliResult<MleSummary> {
    let spec = cfg.spec()?;
    let fit = mle_fit(&spec, x, &cfg.init())?;
    Ok(MleSummary {
        method: "mle".into(),
        link: spec.name().into(),
        alpha0: fit.params.alpha0,
        alpha1: fit.params.alpha1,
        beta1: fit.params.beta1,
        lambda0: fit.params.lambda0,
        log_lik: fit.log_lik,
        evaluations: fit.evaluations,
    })
}

pub fn cmd_fit_mle(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    cfg.validate()?;
    let (path, x) = load_data(cfg)?;
    let summary = fit_mle(cfg, &x)?;
    let mut run = RunDir::create(&out_dir(cfg)?)?;
    run.record_input(&path)?;
    run.write_json("mle.json", &summary)?;
    run.finish("fit-mle", cfg)
}

/// One method's point estimate on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub rep: usize,
    pub seed: u64,
    pub method: Method,
    pub estimate: Result<[f64; 4], String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TableRow {
    pub method: Method,
    pub parameter: String,
    pub truth: f64,
    pub estimate: f64,
    pub rmse: f64,
    pub mad: f64,
    pub successes: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Failure {
    pub rep: usize,
    pub method: Method,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub truth: Params,
    pub outcomes: Vec<RepOutcome>,
    pub table: Vec<TableRow>,
}

fn estimate_one(cfg: &ExperimentConfig, method: Method, x: &CountSeries, seed: u64) -> CliResult<[f64; 4]> {
    Ok(match method {
        Method::Mle => {
            let m = fit_mle(cfg, x)?;
            [m.alpha0, m.alpha1, m.beta1, m.lambda0]
        }
        Method::Mh => {
            let (chain, _) = fit_mh(cfg, x, seed)?;
            chain.posterior_mean()
        }
        Method::Psais => {
            let (res, _) = fit_psais(cfg, x, seed)?;
            [res.estimate[0], res.estimate[1], res.estimate[2], res.lambda0]
        }
    })
}

/// RMSE `sqrt(mean((est - truth)^2))` and MAD `mean(|est - truth|)`.
pub fn rmse_mad(estimates: &[f64], truth: f64) -> (f64, f64) {
    let k = estimates.len() as f64;
    let rmse = (estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / k).sqrt();
    let mad = estimates.iter().map(|e| (e - truth).abs()).sum::<f64>() / k;
    (rmse, mad)
}

/// Aggregates per-method, per-parameter statistics over successful reps.
pub fn aggregate(truth: &Params, methods: &[Method], outcomes: &[RepOutcome]) -> Vec<TableRow> {
    let t = [truth.alpha0, truth.alpha1, truth.beta1];
    let mut rows = Vec::new();
    for &m in methods {
        let ok: Vec<[f64; 4]> = outcomes
            .iter()
            .filter(|o| o.method == m)
            .filter_map(|o| o.estimate.as_ref().ok().copied())
            .collect();
        if ok.is_empty() {
            continue;
        }
        for j in 0..3 {
            let est: Vec<f64> = ok.iter().map(|e| e[j]).collect();
            let (rmse, mad) = rmse_mad(&est, t[j]);
            rows.push(TableRow {
                method: m,
                parameter: PARAM_NAMES[j].into(),
                truth: t[j],
                estimate: est.iter().sum::<f64>() / est.len() as f64,
                rmse,
                mad,
                successes: ok.len(),
            });
        }
    }
    rows
}

/// Simulates and fits `replications` datasets in parallel. Replication `i`
/// uses seed `seed + i` for both simulation and fitting.
pub fn replicate(cfg: &ExperimentConfig) -> CliResult<Replication> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let truth = cfg.true_params()?;
    let reps = cfg.replications.unwrap_or(DEFAULT_REPLICATIONS);
    let methods = cfg.methods();
    let base = cfg.seed();
    let n = cfg.n();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let jobs: Vec<(usize, Method)> = (0..reps).flat_map(|r| methods.iter().map(move |&m| (r, m))).collect();
    let outcomes: Vec<RepOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(rep, method)| {
                let seed = base + rep as u64;
                let estimate = simulate(&spec, &truth, n, seed)
                    .map_err(CliError::from)
                    .and_then(|x| estimate_one(cfg, method, &x, seed))
                    .map_err(|e| e.to_string());
                if let Err(e) = &estimate {
                    log::warn!("replication {rep} ({method:?}) failed: {e}");
                }
                RepOutcome {
                    rep,
                    seed,
                    method,
                    estimate,
                }
            })
            .collect()
    });
    let table = aggregate(&truth, &methods, &outcomes);
    Ok(Replication {
        truth,
        outcomes,
        table,
    })
}

#[derive(Debug, Serialize)]
struct ReplicationSummary<'a> {
    replications: usize,
    truth: [f64; 3],
    table: &'a [TableRow],
    failures: Vec<Failure>,
}

pub fn cmd_replicate(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let result = replicate(cfg)?;
    let mut run = RunDir::create(&out_dir(cfg)?)?;
    let method_name = |m: Method| serde_json::to_value(m).ok().and_then(|v| v.as_str().map(String::from));
    run.write_csv(
        "replicates.csv",
        &["rep", "seed", "method", "status", "alpha0", "alpha1", "beta1", "lambda0", "message"],
        result.outcomes.iter().map(|o| {
            let mut row = vec![o.rep.to_string(), o.seed.to_string(), method_name(o.method).unwrap_or_default()];
            match &o.estimate {
                Ok(e) => {
                    row.push("ok".into());
                    row.extend(e.iter().map(|v| num(*v)));
                    row.push(String::new());
                }
                Err(msg) => {
                    row.push("failed".into());
                    row.extend(std::iter::repeat_n(String::new(), 4));
                    row.push(msg.clone());
                }
            }
            row
        }),
    )?;
    run.write_csv(
        "table.csv",
        &["method", "parameter", "truth", "estimate", "rmse", "mad", "successes"],
        result.table.iter().map(|r| {
            vec![
                method_name(r.method).unwrap_or_default(),
                r.parameter.clone(),
                num(r.truth),
                num(r.estimate),
                num(r.rmse),
                num(r.mad),
                r.successes.to_string(),
            ]
        }),
    )?;
    let failures = result
        .outcomes
        .iter()
        .filter_map(|o| {
            o.estimate.as_ref().err().map(|e| Failure {
                rep: o.rep,
                method: o.method,
                error: e.clone(),
            })
        })
        .collect();
    run.write_json(
        "summary.json",
        &ReplicationSummary {
            replications: cfg.replications.unwrap_or(DEFAULT_REPLICATIONS),
            truth: [result.truth.alpha0, result.truth.alpha1, result.truth.beta1],
            table: &result.table,
            failures,
        },
    )?;
    run.finish("replicate", cfg)
}

#[derive(Debug, Deserialize)]
struct StoredManifest {
    config: ExperimentConfig,
}

fn read_chain(path: &Path) -> CliResult<Vec<Params>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read chain {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("{} line {}: {e}", path.display(), i + 2)))?;
        let field = |k: usize| -> CliResult<f64> {
            rec.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Data(format!("{} line {}: bad column {k}", path.display(), i + 2)))
        };
        out.push(Params::new(field(1)?, field(2)?, field(3)?, field(4)?));
    }
    Ok(out)
}

/// Residuals, residual ACF and histogram, and forecast metrics for a fitted
/// MH run directory.
pub fn cmd_diagnose(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let fit_dir = cfg
        .fit_dir
        .clone()
        .ok_or_else(|| CliError::Config("diagnose needs the fitted run directory (--fit)".into()))?;
    let manifest_path = fit_dir.join("manifest.json");
    let chain_path = fit_dir.join("chain.csv");
    for p in [&manifest_path, &chain_path] {
        if !p.exists() {
            return Err(CliError::Data(format!("missing input {}", p.display())));
        }
    }
    let text = std::fs::read_to_string(&manifest_path)?;
    let stored: StoredManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", manifest_path.display())))?;
    let mut fit_cfg = stored.config;
    if cfg.data.is_some() {
        fit_cfg.data = cfg.data.clone();
    }
    let (data_path, x) = load_data(&fit_cfg)?;
    let spec = fit_cfg.spec()?;
    let burn_in = fit_cfg.mh_config(fit_cfg.seed())?.burn_in;

    let draws = read_chain(&chain_path)?;
    if burn_in >= draws.len() {
        return Err(CliError::Data(format!(
            "{} has {} rows but burn-in is {burn_in}",
            chain_path.display(),
            draws.len()
        )));
    }
    let kept = &draws[burn_in..];
    let k = kept.len() as f64;
    let mean = kept.iter().fold([0.0; 4], |mut m, p| {
        m[0] += p.alpha0 / k;
        m[1] += p.alpha1 / k;
        m[2] += p.beta1 / k;
        m[3] += p.lambda0 / k;
        m
    });
    let mean = Params::new(mean[0], mean[1], mean[2], mean[3]);

    let residuals = pearson_residuals(&spec, &mean, &x)?;
    let max_lag = cfg.max_lag.unwrap_or(DEFAULT_MAX_LAG).min(residuals.len() - 1);
    let rho = acf(&residuals, max_lag)?;
    let bins = cfg.hist_bins.unwrap_or(DEFAULT_HIST_BINS).max(1);
    let lo = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for r in &residuals {
        let b = (((r - lo) / width).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    let report: ForecastReport = forecast_metrics(&spec, kept, &x, cfg.point_forecast())?;

    let mut run = RunDir::create(&out_dir(cfg)?)?;
    run.record_input(&data_path)?;
    run.record_input(&chain_path)?;
    run.write_csv(
        "residuals.csv",
        &["t", "residual"],
        residuals.iter().enumerate().map(|(t, r)| vec![(t + 1).to_string(), num(*r)]),
    )?;
    run.write_csv(
        "residual_acf.csv",
        &["lag", "rho"],
        rho.iter().enumerate().map(|(l, r)| vec![l.to_string(), num(*r)]),
    )?;
    run.write_csv(
        "residual_hist.csv",
        &["bin_lo", "bin_hi", "count"],
        counts.iter().enumerate().map(|(b, c)| {
            vec![
                num(lo + b as f64 * width),
                num(lo + (b + 1) as f64 * width),
                c.to_string(),
            ]
        }),
    )?;
    run.write_json(
        "metrics.json",
        &serde_json::json!({ "mae": report.mae, "rmse": report.rmse, "lpd": report.lpd }),
    )?;
    run.finish("diagnose", cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rep_rmse_is_absolute_error() {
        let (rmse, mad) = rmse_mad(&[0.35], 0.3);
        assert!((rmse - 0.05).abs() < 1e-15);
        assert!((mad - 0.05).abs() < 1e-15);
    }

    #[test]
    fn aggregate_skips_failures() {
        let truth = Params::new(0.3, 0.2, 0.6, 3.0);
        let outcomes = vec![
            RepOutcome {
                rep: 0,
                seed: 0,
                method: Method::Mle,
                estimate: Ok([0.4, 0.2, 0.5, 1.0]),
            },
            RepOutcome {
                rep: 1,
                seed: 1,
                method: Method::Mle,
                estimate: Err("boom".into()),
            },
            RepOutcome {
                rep: 2,
                seed: 2,
                method: Method::Mle,
                estimate: Ok([0.2, 0.2, 0.7, 1.0]),
            },
        ];
        let rows = aggregate(&truth, &[Method::Mle, Method::Mh], &outcomes);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].successes, 2);
        assert!((rows[0].estimate - 0.3).abs() < 1e-15);
        assert!((rows[0].rmse - 0.1).abs() < 1e-12);
        assert!((rows[2].mad - 0.1).abs() < 1e-12);
    }
}
