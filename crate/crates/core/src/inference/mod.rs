//! Maximum likelihood, posterior summaries, chain diagnostics and forecast
//! scores.

pub mod diagnostics;
pub mod forecast;
pub mod mle;
pub mod summary;

pub use diagnostics::{acf, ess, Ess};
pub use forecast::{forecast_metrics, pearson_residuals, ForecastReport, PointForecast};
pub use mle::{mle_fit, MleFit};
pub use summary::{posterior_summary, ParamSummary, PosteriorSummary};
