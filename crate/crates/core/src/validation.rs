//! Error statistics between reference and simulated pump durations.

use serde::{Deserialize, Serialize};

use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("nothing to compare")]
    Empty,
    #[error("{reference} reference values but {actual} simulated values")]
    LengthMismatch { reference: usize, actual: usize },
    #[error("non-finite value at case {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub n: usize,
    pub rmse: f64,
    /// RMSE over the reference range (max − min); `None` when the range is 0.
    pub nrmse: Option<f64>,
    pub max_abs: f64,
    pub mean_abs: f64,
}

/// Summarise `actual − reference`.
pub fn summarize(reference: &[f64], actual: &[f64]) -> Result<ErrorSummary, ValidationError> {
    if reference.len() != actual.len() {
        return Err(ValidationError::LengthMismatch { reference: reference.len(), actual: actual.len() });
    }
    if reference.is_empty() {
        return Err(ValidationError::Empty);
    }
    let (mut sq, mut abs_sum, mut max_abs) = (0.0, 0.0, 0.0_f64);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, (&r, &a)) in reference.iter().zip(actual).enumerate() {
        if !r.is_finite() || !a.is_finite() {
            return Err(ValidationError::NonFinite(i));
        }
        let e = a - r;
        sq += e * e;
        abs_sum += e.abs();
        max_abs = max_abs.max(e.abs());
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let n = reference.len();
    let rmse = sqrt(sq / n as f64);
    let range = hi - lo;
    Ok(ErrorSummary {
        n,
        // guard the rmse ≤ max bound against rounding in the mean
        rmse: rmse.min(max_abs),
        nrmse: (range > 0.0).then(|| rmse.min(max_abs) / range),
        max_abs,
        mean_abs: abs_sum / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_is_zero() {
        let s = summarize(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.rmse, 0.0);
        assert_eq!(s.max_abs, 0.0);
        assert_eq!(s.nrmse, Some(0.0));
    }

    #[test]
    fn hand_example() {
        let s = summarize(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((s.rmse - 12.5_f64.sqrt()).abs() < 1e-12);
        assert!((s.rmse - 3.5355).abs() < 1e-4);
        assert_eq!(s.max_abs, 4.0);
        assert_eq!(s.mean_abs, 3.5);
        assert_eq!(s.nrmse, None);
    }

    #[test]
    fn range_normalised() {
        let s = summarize(&[0.0, 10.0], &[1.0, 9.0]).unwrap();
        assert!((s.nrmse.unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(summarize(&[], &[]), Err(ValidationError::Empty));
        assert!(matches!(summarize(&[1.0], &[]), Err(ValidationError::LengthMismatch { .. })));
        assert_eq!(summarize(&[1.0, f64::NAN], &[1.0, 2.0]), Err(ValidationError::NonFinite(1)));
    }

    proptest! {
        #[test]
        fn rmse_between_mean_and_max(pairs in prop::collection::vec((-1e4f64..1e4, -1e4f64..1e4), 1..100)) {
            let (r, a): (std::vec::Vec<f64>, std::vec::Vec<f64>) = pairs.into_iter().unzip();
            let s = summarize(&r, &a).unwrap();
            prop_assert!(s.rmse <= s.max_abs);
            prop_assert!(s.rmse >= s.mean_abs * (1.0 - 1e-12));
        }
    }
}
