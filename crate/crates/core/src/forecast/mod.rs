//! Baseline forecasting, scenario generation and the forecast metrics used
//! to score submissions.

pub mod metrics;
pub mod seasonal;
pub mod tsf;

pub use metrics::{mae, mase, rmse, ForecastEvalInput};
pub use seasonal::{
    median, quantile, quantile_scenarios, seasonal_median_forecast, QuantileScenarios,
    WEEK_PERIOD,
};
pub use tsf::{parse_tsf, write_tsf, Series, SeriesRole, SeriesSet};
