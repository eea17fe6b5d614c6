//! Extreme eigenpairs of symmetric operators by power iteration.

use crate::error::{Error, Result};
use crate::numerics::{dot, norm2, FnOperator, SeededRng, SymmetricOperator};

pub const DEFAULT_EIG_TOL: f64 = 1e-8;
pub const DEFAULT_EIG_MAX_ITER: usize = 5000;

/// Power iteration from a seeded random start.
///
/// Returns the Rayleigh quotient λ and a unit vector v with
/// ‖op(v) − λv‖ ≤ tol·max(λ, 1). The operator is assumed PSD (or shifted to
/// be so by the caller), so the dominant eigenvalue is the largest one.
pub fn power_iteration(
    op: &dyn SymmetricOperator,
    rng: &mut SeededRng,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>)> {
    assert!(tol > 0.0);
    let n = op.dim();
    let mut v = rng.unit_vector(n);
    let mut w = vec![0.0; n];
    let mut best: Option<(f64, f64, Vec<f64>)> = None;

    for _ in 0..max_iter {
        op.apply(&v, &mut w);
        let lambda = dot(&v, &w);
        let mut residual = 0.0;
        for (wi, vi) in w.iter().zip(&v) {
            let r = wi - lambda * vi;
            residual += r * r;
        }
        let residual = residual.sqrt();
        if residual <= tol * lambda.max(1.0) {
            return Ok((lambda, v));
        }
        if best.as_ref().is_none_or(|(r, _, _)| residual < *r) {
            best = Some((residual, lambda, v.clone()));
        }

        let wn = norm2(&w);
        if wn <= f64::EPSILON * lambda.abs().max(1.0) {
            // v is (numerically) in the kernel; restart from a fresh direction.
            v = rng.unit_vector(n);
            continue;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
    }

    let (residual, eigenvalue, eigenvector) = best.expect("max_iter > 0");
    Err(Error::PowerIterationStalled {
        iters: max_iter,
        residual,
        eigenvalue,
        eigenvector,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extreme {
    Largest,
    Smallest,
}

/// Unit eigenvector for the largest or smallest eigenvalue of a PSD operator.
///
/// Largest is plain power iteration. Smallest first estimates λ_max, then
/// power-iterates the shifted operator σI − op with σ = 1.01·λ_max, whose
/// dominant eigenvector is the wanted one; the slack keeps the shifted
/// operator strictly positive when λ_max is nearly attained.
pub fn extreme_eigenvector(
    op: &dyn SymmetricOperator,
    which: Extreme,
    rng: &mut SeededRng,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    match which {
        Extreme::Largest => power_iteration(op, rng, tol, max_iter).map(|(_, v)| v),
        Extreme::Smallest => {
            let (lambda_max, _) = power_iteration(op, rng, tol, max_iter)?;
            let sigma = 1.01 * lambda_max;
            let n = op.dim();
            let shifted = FnOperator {
                n,
                f: |v: &[f64], out: &mut [f64]| {
                    op.apply(v, out);
                    for (oi, vi) in out.iter_mut().zip(v) {
                        *oi = sigma * vi - *oi;
                    }
                },
            };
            power_iteration(&shifted, rng, tol, max_iter).map(|(_, v)| v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseSymmetric;

    fn diag(entries: &[f64]) -> DenseSymmetric {
        let n = entries.len();
        let mut data = vec![0.0; n * n];
        for (i, &e) in entries.iter().enumerate() {
            data[i * n + i] = e;
        }
        DenseSymmetric::new(n, data)
    }

    #[test]
    fn diagonal_dominant_pair() {
        let op = diag(&[3.0, 1.0]);
        let mut rng = SeededRng::new(1);
        let (lambda, v) = power_iteration(&op, &mut rng, 1e-10, 5000).unwrap();
        assert!((lambda - 3.0).abs() < 1e-8);
        assert!(v[0].abs() > 1.0 - 1e-8);
        assert!(v[1].abs() < 1e-5);
    }

    #[test]
    fn identity_converges_immediately() {
        let n = 6;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        let op = DenseSymmetric::new(n, data);
        let mut rng = SeededRng::new(2);
        let (lambda, v) = power_iteration(&op, &mut rng, 1e-8, 10).unwrap();
        assert!((lambda - 1.0).abs() < 1e-12);
        assert!((norm2(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extremes_of_diagonal() {
        let op = diag(&[3.0, 1.0]);
        let mut rng = SeededRng::new(3);
        let top = extreme_eigenvector(&op, Extreme::Largest, &mut rng, 1e-10, 5000).unwrap();
        assert!(top[0].abs() > 1.0 - 1e-8);
        let bottom = extreme_eigenvector(&op, Extreme::Smallest, &mut rng, 1e-10, 5000).unwrap();
        assert!(bottom[1].abs() > 1.0 - 1e-6);
    }

    #[test]
    fn stall_reports_best_iterate() {
        // Tight spectrum gap and a single iteration allowed: must error.
        let op = diag(&[1.0, 0.999999]);
        let mut rng = SeededRng::new(4);
        match power_iteration(&op, &mut rng, 1e-14, 1) {
            Err(Error::PowerIterationStalled {
                iters, eigenvector, ..
            }) => {
                assert_eq!(iters, 1);
                assert_eq!(eigenvector.len(), 2);
            }
            other => panic!("expected stall, got {other:?}"),
        }
    }
}
