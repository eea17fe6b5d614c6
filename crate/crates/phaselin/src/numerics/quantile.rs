//! Quantiles by linear interpolation of adjacent order statistics.

use crate::error::{Error, Result};

/// The α-th quantile of `values`.
///
/// With the sorted sample c_(1) ≤ … ≤ c_(m), interpolates linearly between
/// c_(⌊mα⌋) and c_(⌈mα⌉), clamping both indices to [1, m]. Note this is the
/// interpolation the solver's radius estimates are specified against; for odd
/// m it does not coincide with the textbook midpoint median.
pub fn quantile(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    assert!((0.0..=1.0).contains(&alpha), "alpha must be in [0,1]");
    let m = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));

    let pos = m as f64 * alpha;
    let lo = (pos.floor() as usize).clamp(1, m);
    let hi = (pos.ceil() as usize).clamp(1, m);
    if lo == hi {
        return Ok(sorted[lo - 1]);
    }
    let t = pos - pos.floor();
    Ok(sorted[lo - 1] + t * (sorted[hi - 1] - sorted[lo - 1]))
}

/// quantile(values, 0.5)
pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_between_order_stats() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.625).unwrap(), 2.5);
    }

    #[test]
    fn singleton_is_constant_in_alpha() {
        for alpha in [0.0, 0.3, 0.5, 1.0] {
            assert_eq!(quantile(&[5.0], alpha).unwrap(), 5.0);
        }
    }

    #[test]
    fn empty_sample_errors() {
        assert!(matches!(quantile(&[], 0.5), Err(Error::EmptySample)));
    }

    #[test]
    fn endpoints() {
        let v = [4.0, -1.0, 2.0];
        assert_eq!(quantile(&v, 0.0).unwrap(), -1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 4.0);
    }
}
