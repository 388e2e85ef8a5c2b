//! Forecast accuracy metrics: MASE as used to rank submissions, plus MAE and
//! RMSE.

use num_traits::Float;

use crate::error::ForecastError;

/// Inputs to [`mase`]: a training window, the realized values and the
/// forecasts over the horizon, and the seasonal period of the data.
#[derive(Debug, Clone, Copy)]
pub struct ForecastEvalInput<'a, T> {
    pub training: &'a [T],
    pub actuals: &'a [T],
    pub forecasts: &'a [T],
    /// Seasonal cycle length `S` (96 = daily on the 15-minute lattice).
    pub season: usize,
}

/// Mean absolute scaled error: forecast MAE scaled by the in-sample
/// seasonal-naive MAE.
///
/// A constant-at-seasonal-lag training series makes the scale zero; that is
/// reported as an error rather than returning infinity.
pub fn mase<T: Float>(input: &ForecastEvalInput<'_, T>) -> Result<T, ForecastError> {
    let m = input.training.len();
    let s = input.season;
    let h = input.actuals.len();
    if h == 0 {
        return Err(ForecastError::Empty);
    }
    if input.forecasts.len() != h {
        return Err(ForecastError::LengthMismatch {
            forecast: input.forecasts.len(),
            actual: h,
        });
    }
    if m <= s {
        return Err(ForecastError::TrainingTooShort { season: s });
    }
    let mut seasonal_sum = T::zero();
    for k in s..m {
        seasonal_sum = seasonal_sum + (input.training[k] - input.training[k - s]).abs();
    }
    if seasonal_sum <= T::zero() {
        return Err(ForecastError::ZeroDenominator { season: s });
    }
    let mut err_sum = T::zero();
    for (f, y) in input.forecasts.iter().zip(input.actuals) {
        err_sum = err_sum + (*f - *y).abs();
    }
    let h_t = T::from(h).unwrap();
    let scale = T::from(m - s).unwrap();
    Ok(err_sum / (h_t / scale * seasonal_sum))
}

/// Mean absolute error.
pub fn mae<T: Float>(forecasts: &[T], actuals: &[T]) -> Result<T, ForecastError> {
    if forecasts.len() != actuals.len() {
        return Err(ForecastError::LengthMismatch {
            forecast: forecasts.len(),
            actual: actuals.len(),
        });
    }
    if forecasts.is_empty() {
        return Err(ForecastError::Empty);
    }
    let sum = forecasts
        .iter()
        .zip(actuals)
        .fold(T::zero(), |acc, (f, y)| acc + (*f - *y).abs());
    Ok(sum / T::from(forecasts.len()).unwrap())
}

/// Root mean squared error.
pub fn rmse<T: Float>(forecasts: &[T], actuals: &[T]) -> Result<T, ForecastError> {
    if forecasts.len() != actuals.len() {
        return Err(ForecastError::LengthMismatch {
            forecast: forecasts.len(),
            actual: actuals.len(),
        });
    }
    if forecasts.is_empty() {
        return Err(ForecastError::Empty);
    }
    let sum = forecasts.iter().zip(actuals).fold(T::zero(), |acc, (f, y)| {
        let d = *f - *y;
        acc + d * d
    });
    Ok((sum / T::from(forecasts.len()).unwrap()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_forecast_scores_zero() {
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let input = ForecastEvalInput {
            training: &y,
            actuals: &y[..2],
            forecasts: &y[..2],
            season: 2,
        };
        assert_eq!(mase(&input).unwrap(), 0.0);
        assert_eq!(mae(&y[..2], &y[..2]).unwrap(), 0.0);
        assert_eq!(rmse(&y[..2], &y[..2]).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_mase() {
        // Training [0,1,0,3], S=2: seasonal errors |0-0| + |3-1| = 2,
        // scale h/(M-S) = 2/2 = 1. Forecast errors |1-0| + |1-2| = 2.
        let input = ForecastEvalInput {
            training: &[0.0, 1.0, 0.0, 3.0],
            actuals: &[0.0, 2.0],
            forecasts: &[1.0, 1.0],
            season: 2,
        };
        assert!((mase(&input).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_at_lag_training_is_an_error() {
        let input = ForecastEvalInput {
            training: &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0],
            actuals: &[1.0],
            forecasts: &[1.5],
            season: 2,
        };
        assert!(matches!(
            mase(&input),
            Err(ForecastError::ZeroDenominator { season: 2 })
        ));
    }

    #[test]
    fn mae_and_rmse_fixtures() {
        let f = [0.0, 0.0];
        let y = [3.0, 4.0];
        assert!((mae(&f, &y).unwrap() - 3.5).abs() < 1e-15);
        assert!((rmse(&f, &y).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            mae(&[1.0], &[1.0, 2.0]),
            Err(ForecastError::LengthMismatch { .. })
        ));
    }
}
