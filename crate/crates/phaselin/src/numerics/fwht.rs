//! Fast Walsh-Hadamard transform.

use crate::error::{Error, Result};

/// Applies the normalized Sylvester Hadamard matrix H_n (entries ±1/√n) to
/// `v` in O(n log n). H_n is symmetric and involutive, so this is its own
/// inverse and adjoint, and it preserves the Euclidean norm.
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut out = v.to_vec();
    fwht_in_place(&mut out);
    Ok(out)
}

/// In-place butterfly, including the 1/√n normalization.
pub fn fwht_in_place(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for x in v.iter_mut() {
        *x *= scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_column_of_h2() {
        let out = fwht(&[1.0, 0.0]).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert!((out[0] - s).abs() < 1e-15);
        assert!((out[1] - s).abs() < 1e-15);
    }

    #[test]
    fn constant_vector_concentrates() {
        let out = fwht(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-15);
        for &x in &out[1..] {
            assert!(x.abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(fwht(&[1.0; 12]), Err(Error::NotPowerOfTwo(12))));
        assert!(matches!(fwht(&[]), Err(Error::NotPowerOfTwo(0))));
    }
}
