//! Seasonal-median forecasting and empirical quantile scenarios over the
//! weekly cycle.

use crate::error::ForecastError;

/// Weekly period on the standard 15-minute lattice.
pub const WEEK_PERIOD: usize = 672;

/// Median with the even-count convention: mean of the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return Some(sorted[lo]);
    }
    let frac = pos - lo as f64;
    Some(sorted[lo] * (1.0 - frac) + sorted[hi] * frac)
}

fn candidate_pool(
    history: &[Option<f64>],
    slot: usize,
    weeks: usize,
    period: usize,
) -> Vec<f64> {
    let target = history.len() + slot;
    let mut pool = Vec::new();
    for k in 1..=weeks {
        let Some(index) = target.checked_sub(k * period) else {
            break;
        };
        if index >= history.len() {
            continue;
        }
        if let Some(v) = history[index] {
            pool.push(v);
        }
    }
    pool
}

/// Forecast by the median of the same weekly position over the most recent
/// `weeks` weeks of history, skipping missing values. Positions whose pool is
/// entirely missing fall back to the median of all non-missing history.
pub fn seasonal_median_forecast(
    history: &[Option<f64>],
    horizon: usize,
    weeks: usize,
) -> Result<Vec<f64>, ForecastError> {
    seasonal_median_forecast_with_period(history, horizon, weeks, WEEK_PERIOD)
}

pub fn seasonal_median_forecast_with_period(
    history: &[Option<f64>],
    horizon: usize,
    weeks: usize,
    period: usize,
) -> Result<Vec<f64>, ForecastError> {
    if history.len() < period {
        return Err(ForecastError::HistoryTooShort {
            len: history.len(),
            required: period,
        });
    }
    let all: Vec<f64> = history.iter().filter_map(|v| *v).collect();
    let global = median(&all).ok_or(ForecastError::AllMissing)?;
    Ok((0..horizon)
        .map(|slot| {
            let pool = candidate_pool(history, slot, weeks, period);
            median(&pool).unwrap_or(global)
        })
        .collect())
}

/// Per-quantile scenario series plus the median central scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileScenarios {
    /// `(quantile, series)` pairs, in the order requested.
    pub quantiles: Vec<(f64, Vec<f64>)>,
    pub median: Vec<f64>,
}

impl QuantileScenarios {
    /// All scenario series: quantile bands then the central median.
    pub fn all_series(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> =
            self.quantiles.iter().map(|(_, s)| s.clone()).collect();
        out.push(self.median.clone());
        out
    }
}

/// Empirical per-slot quantiles of the weekly-position pools.
///
/// Requires at least two non-missing values at every weekly position inside
/// the horizon.
pub fn quantile_scenarios(
    history: &[Option<f64>],
    horizon: usize,
    quantiles: &[f64],
    weeks: usize,
) -> Result<QuantileScenarios, ForecastError> {
    quantile_scenarios_with_period(history, horizon, quantiles, weeks, WEEK_PERIOD)
}

pub fn quantile_scenarios_with_period(
    history: &[Option<f64>],
    horizon: usize,
    quantiles: &[f64],
    weeks: usize,
    period: usize,
) -> Result<QuantileScenarios, ForecastError> {
    if history.len() < period {
        return Err(ForecastError::HistoryTooShort {
            len: history.len(),
            required: period,
        });
    }
    let mut bands: Vec<(f64, Vec<f64>)> =
        quantiles.iter().map(|q| (*q, Vec::with_capacity(horizon))).collect();
    let mut central = Vec::with_capacity(horizon);
    for slot in 0..horizon {
        let pool = candidate_pool(history, slot, weeks, period);
        if pool.len() < 2 {
            return Err(ForecastError::InsufficientHistory {
                position: (history.len() + slot) % period,
                required: 2,
            });
        }
        for (q, series) in bands.iter_mut() {
            series.push(quantile(&pool, *q).unwrap());
        }
        central.push(median(&pool).unwrap());
    }
    Ok(QuantileScenarios {
        quantiles: bands,
        median: central,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repeat_week(pattern: &[f64], weeks: usize) -> Vec<Option<f64>> {
        let mut out = Vec::new();
        for _ in 0..weeks {
            out.extend(pattern.iter().map(|v| Some(*v)));
        }
        out
    }

    #[test]
    fn identical_weeks_forecast_exactly() {
        let pattern: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let history = repeat_week(&pattern, 8);
        let fc = seasonal_median_forecast_with_period(&history, 8, 8, 8).unwrap();
        assert_eq!(fc, pattern);
    }

    #[test]
    fn even_count_median_is_the_midpoint() {
        // Values 1,1,1,1,9,9,9,9 at one weekly position.
        let mut history = Vec::new();
        for w in 0..8 {
            history.push(Some(if w < 4 { 1.0 } else { 9.0 }));
        }
        let fc = seasonal_median_forecast_with_period(&history, 1, 8, 1).unwrap();
        assert_eq!(fc, vec![5.0]);
    }

    #[test]
    fn single_week_history_replicates() {
        let pattern: Vec<f64> = vec![3.0, 1.0, 4.0, 1.0];
        let history = repeat_week(&pattern, 1);
        let fc = seasonal_median_forecast_with_period(&history, 4, 8, 4).unwrap();
        assert_eq!(fc, pattern);
    }

    #[test]
    fn missing_values_are_skipped_with_global_fallback() {
        // Position 1 is always missing; the forecast there falls back to the
        // median of all non-missing history.
        let mut history = Vec::new();
        for _ in 0..4 {
            history.push(Some(10.0));
            history.push(None);
        }
        let fc = seasonal_median_forecast_with_period(&history, 2, 8, 2).unwrap();
        assert_eq!(fc, vec![10.0, 10.0]);
    }

    #[test]
    fn entirely_missing_history_is_an_error() {
        let history = vec![None; 8];
        assert!(matches!(
            seasonal_median_forecast_with_period(&history, 2, 8, 4),
            Err(ForecastError::AllMissing)
        ));
    }

    #[test]
    fn quantile_interpolation_fixture() {
        // Pool {0, 10}: the 10% quantile interpolates to 1.0.
        assert_eq!(quantile(&[0.0, 10.0], 0.10), Some(1.0));
    }

    #[test]
    fn constant_history_gives_constant_scenarios() {
        let history = vec![Some(7.0); 16];
        let sc = quantile_scenarios_with_period(&history, 4, &[0.1, 0.9], 8, 4).unwrap();
        for (_, series) in &sc.quantiles {
            assert!(series.iter().all(|v| *v == 7.0));
        }
        assert!(sc.median.iter().all(|v| *v == 7.0));
    }

    #[test]
    fn median_band_matches_seasonal_median() {
        let mut history = Vec::new();
        for w in 0..6 {
            for s in 0..4 {
                history.push(Some((w * s) as f64));
            }
        }
        let sc = quantile_scenarios_with_period(&history, 4, &[0.5], 6, 4).unwrap();
        let fc = seasonal_median_forecast_with_period(&history, 4, 6, 4).unwrap();
        assert_eq!(sc.quantiles[0].1, fc);
        assert_eq!(sc.median, fc);
    }

    #[test]
    fn insufficient_history_is_an_error() {
        let mut history = vec![Some(1.0); 4];
        history[1] = None;
        // Period 4, 1 week of history: position 1 has zero candidates.
        assert!(matches!(
            quantile_scenarios_with_period(&history, 4, &[0.1], 8, 4),
            Err(ForecastError::InsufficientHistory { .. })
        ));
    }
}
