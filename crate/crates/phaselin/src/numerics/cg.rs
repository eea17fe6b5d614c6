//! Conjugate gradients for symmetric positive definite systems.

use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, norm2, SymmetricOperator};

/// Solution of an SPD system together with the work it took.
#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iters: usize,
    pub residual: f64,
}

/// Unpreconditioned CG on op·x = rhs, stopping at ‖op(x) − rhs‖ ≤ tol·‖rhs‖.
///
/// `warm` seeds the initial iterate. Whenever the recursively updated
/// residual reaches the target, the true residual is recomputed before
/// accepting, so the returned iterate genuinely satisfies the bound.
pub fn conjugate_gradient(
    op: &dyn SymmetricOperator,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
    warm: Option<&[f64]>,
) -> Result<CgOutcome> {
    let n = op.dim();
    assert_eq!(rhs.len(), n);
    let target = tol * norm2(rhs);

    let mut x = match warm {
        Some(w) => {
            assert_eq!(w.len(), n);
            w.to_vec()
        }
        None => vec![0.0; n],
    };

    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    let mut rs = dot(&r, &r);
    if rs.sqrt() <= target {
        return Ok(CgOutcome {
            x,
            iters: 0,
            residual: rs.sqrt(),
        });
    }

    let mut p = r.clone();
    let mut w = vec![0.0; n];
    let mut iters = 0;
    while iters < max_iter {
        op.apply(&p, &mut w);
        iters += 1;
        let pw = dot(&p, &w);
        if pw <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "operator is not positive definite along a CG direction (p·Ap = {pw:.3e})"
            )));
        }
        let alpha = rs / pw;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &w, &mut r);
        let rs_new = dot(&r, &r);
        if rs_new.sqrt() <= target {
            // Guard against drift in the recursive residual.
            op.apply(&x, &mut w);
            for ((ri, bi), wi) in r.iter_mut().zip(rhs).zip(&w) {
                *ri = bi - wi;
            }
            let true_rs = dot(&r, &r);
            if true_rs.sqrt() <= target {
                return Ok(CgOutcome {
                    x,
                    iters,
                    residual: true_rs.sqrt(),
                });
            }
            rs = true_rs;
            p.copy_from_slice(&r);
            continue;
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }

    Err(Error::CgMaxIter {
        max_iter,
        residual: rs.sqrt(),
        best: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseSymmetric;

    #[test]
    fn identity_returns_rhs() {
        let n = 5;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        let op = DenseSymmetric::new(n, data);
        let rhs = vec![1.0, -2.0, 3.0, 0.5, 0.0];
        let out = conjugate_gradient(&op, &rhs, 1e-12, 10, None).unwrap();
        for (xi, bi) in out.x.iter().zip(&rhs) {
            assert!((xi - bi).abs() < 1e-10);
        }
    }

    #[test]
    fn diagonal_system() {
        let op = DenseSymmetric::new(2, vec![2.0, 0.0, 0.0, 4.0]);
        let out = conjugate_gradient(&op, &[2.0, 4.0], 1e-12, 10, None).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-10);
        assert!((out.x[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn warm_start_at_solution_takes_no_iterations() {
        let op = DenseSymmetric::new(2, vec![2.0, 0.0, 0.0, 4.0]);
        let out = conjugate_gradient(&op, &[2.0, 4.0], 1e-10, 10, Some(&[1.0, 1.0])).unwrap();
        assert_eq!(out.iters, 0);
    }

    #[test]
    fn max_iter_carries_best_iterate() {
        let op = DenseSymmetric::new(3, vec![4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        match conjugate_gradient(&op, &[1.0, 2.0, 3.0], 1e-14, 1, None) {
            Err(Error::CgMaxIter { best, .. }) => assert_eq!(best.len(), 3),
            other => panic!("expected CgMaxIter, got {other:?}"),
        }
    }

    #[test]
    fn indefinite_operator_is_reported() {
        let op = DenseSymmetric::new(2, vec![1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            conjugate_gradient(&op, &[0.0, 1.0], 1e-10, 10, None),
            Err(Error::InvalidArgument(_))
        ));
    }
}
