//! Truncated amplitude-flow baseline: gradient descent on the amplitude
//! residual Σ(|⟨a_i, x⟩| − √b_i)², restricted each step to the rows whose
//! current inner product is large enough to trust.

use crate::error::{Error, Result};
use crate::sensing::MeasurementEnsemble;

#[derive(Clone, Copy, Debug)]
pub struct TafConfig {
    /// Truncation sharpness: row i participates when |⟨a_i, x⟩| ≥ √b_i/(1+γ).
    pub gamma: f64,
    /// Step size.
    pub alpha: f64,
    /// Iteration count; the method runs exactly this many steps.
    pub k: usize,
}

impl Default for TafConfig {
    fn default() -> Self {
        Self {
            gamma: 0.7,
            alpha: 0.6,
            k: 1000,
        }
    }
}

/// Runs truncated amplitude flow from x0. The measurements are amplitudes
/// squared, so every b_i must be nonnegative; rows with a zero inner product
/// have no usable sign and are skipped for that step.
pub fn taf_solve(
    ensemble: &MeasurementEnsemble,
    b: &[f64],
    x0: &[f64],
    config: &TafConfig,
) -> Result<Vec<f64>> {
    if b.len() != ensemble.m() {
        return Err(Error::LengthMismatch(b.len(), ensemble.m()));
    }
    if x0.len() != ensemble.n() {
        return Err(Error::LengthMismatch(x0.len(), ensemble.n()));
    }
    for (i, &bi) in b.iter().enumerate() {
        if bi < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "amplitude flow needs nonnegative measurements, got b[{i}] = {bi:.3e}"
            )));
        }
    }
    let m = ensemble.m() as f64;
    let psi: Vec<f64> = b.iter().map(|v| v.sqrt()).collect();
    let mut x = x0.to_vec();
    let mut z = vec![0.0; ensemble.m()];
    let mut residual = vec![0.0; ensemble.m()];
    let mut grad = vec![0.0; ensemble.n()];

    for _ in 0..config.k {
        ensemble.apply(&x, &mut z);
        for ((ri, &zi), &pi) in residual.iter_mut().zip(&z).zip(&psi) {
            *ri = if zi != 0.0 && zi.abs() >= pi / (1.0 + config.gamma) {
                zi - pi * zi.signum()
            } else {
                0.0
            };
        }
        ensemble.apply_adjoint(&residual, &mut grad);
        let scale = config.alpha / m;
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi -= scale * gi;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;
    use crate::sensing::{gen_gaussian_ensemble, measure};

    #[test]
    fn truth_is_a_fixed_point() {
        let mut rng = SeededRng::new(31);
        let ensemble = gen_gaussian_ensemble(40, 8, &mut rng);
        let x_star = rng.normal_vec(8);
        let b = measure(&ensemble, &x_star).unwrap();
        let out = taf_solve(
            &ensemble,
            &b,
            &x_star,
            &TafConfig {
                k: 3,
                ..TafConfig::default()
            },
        )
        .unwrap();
        assert_eq!(out, x_star);
    }

    #[test]
    fn sign_equivariant() {
        let mut rng = SeededRng::new(32);
        let ensemble = gen_gaussian_ensemble(30, 5, &mut rng);
        let b: Vec<f64> = rng.normal_vec(30).iter().map(|v| v * v).collect();
        let x0 = rng.normal_vec(5);
        let neg_x0: Vec<f64> = x0.iter().map(|v| -v).collect();
        let cfg = TafConfig {
            k: 7,
            ..TafConfig::default()
        };
        let a = taf_solve(&ensemble, &b, &x0, &cfg).unwrap();
        let c = taf_solve(&ensemble, &b, &neg_x0, &cfg).unwrap();
        for (ai, ci) in a.iter().zip(&c) {
            assert_eq!(*ai, -*ci);
        }
    }

    #[test]
    fn single_step_matches_direct_loop() {
        let mut rng = SeededRng::new(33);
        let m = 12;
        let n = 4;
        let ensemble = gen_gaussian_ensemble(m, n, &mut rng);
        let rows = ensemble.to_dense_rows();
        let b: Vec<f64> = rng.normal_vec(m).iter().map(|v| v * v).collect();
        let x0 = rng.normal_vec(n);
        let cfg = TafConfig {
            gamma: 0.7,
            alpha: 0.6,
            k: 1,
        };

        let mut want = x0.clone();
        for i in 0..m {
            let row = &rows[i * n..(i + 1) * n];
            let z: f64 = row.iter().zip(&x0).map(|(r, x)| r * x).sum();
            let psi = b[i].sqrt();
            if z != 0.0 && z.abs() >= psi / (1.0 + cfg.gamma) {
                let r = z - psi * z.signum();
                for (w, &ri) in want.iter_mut().zip(row) {
                    *w -= cfg.alpha / m as f64 * r * ri;
                }
            }
        }

        let got = taf_solve(&ensemble, &b, &x0, &cfg).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_negative_measurements() {
        let mut rng = SeededRng::new(34);
        let ensemble = gen_gaussian_ensemble(5, 2, &mut rng);
        let b = vec![1.0, -0.5, 2.0, 0.0, 1.0];
        let x0 = vec![1.0, 0.0];
        match taf_solve(&ensemble, &b, &x0, &TafConfig::default()) {
            Err(Error::InvalidArgument(msg)) => assert!(msg.contains("b[1]")),
            other => panic!("expected InvalidArgument, got {other:?}"),
        }
    }
}
