//! Scalar abstraction for the evaluation arithmetic.
//!
//! The evaluator and the forecast metrics are written against [`Scalar`] so
//! the same formulas can run on `f64` (the production path) and on exact
//! rationals (the cross-check path used by tests to rule out accumulation
//! artifacts). Concrete aliases live at the crate root.

use num_traits::{Num, ToPrimitive};

/// Exact rational scalar, used to re-run evaluations without rounding.
pub type Exact = num_rational::BigRational;

/// Number type the evaluation formulas are generic over.
///
/// `from_f64` must be value-preserving: every finite `f64` converts to a
/// scalar that represents it exactly (trivially true for `f64` itself,
/// true for rationals since every finite float is a dyadic rational).
pub trait Scalar: Num + Clone + PartialOrd + std::fmt::Debug {
    fn from_f64(value: f64) -> Self;
    fn to_f64(&self) -> f64;

    /// Ratio of two integers, exact where the representation allows it.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_f64(num as f64) / Self::from_f64(den as f64)
    }
}

impl Scalar for f64 {
    fn from_f64(value: f64) -> Self {
        value
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Exact {
    fn from_f64(value: f64) -> Self {
        Exact::from_float(value).expect("finite value")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Maximum over a non-empty iterator of partially ordered scalars.
pub fn fold_max<S: Scalar>(values: impl IntoIterator<Item = S>) -> Option<S> {
    values.into_iter().reduce(|a, b| if b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_is_exact_for_rationals() {
        let r = <Exact as Scalar>::ratio(1, 4000);
        assert_eq!(r, Exact::new(1.into(), 4000.into()));
        // 0.25/1000 in f64 rounds once; the rational route does not.
        let f = <f64 as Scalar>::ratio(1, 4000);
        assert!((f - 0.00025).abs() < 1e-18);
    }

    #[test]
    fn from_f64_preserves_floats_exactly() {
        for v in [0.1, 166.66666666666666, -37.5, 0.0] {
            assert_eq!(Scalar::to_f64(&<Exact as Scalar>::from_f64(v)), v);
        }
    }

    #[test]
    fn fold_max_picks_largest() {
        assert_eq!(fold_max(vec![1.0, 3.0, 2.0]), Some(3.0));
        assert_eq!(fold_max(Vec::<f64>::new()), None);
    }
}
