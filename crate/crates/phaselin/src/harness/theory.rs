//! Monte-Carlo self-checks of the constants and inequalities the solver's
//! guarantees lean on. Each check reports an estimate with its standard
//! error; pass criteria use a three-sigma band so a fixed seed gives a
//! stable verdict.

use std::f64::consts::PI;

use crate::numerics::{power_iteration, SeededRng};
use crate::proxlin::{model_value, objective};
use crate::sensing::{gen_gaussian_ensemble, gram_over_m, measure};

/// E|Z₁·Z₂| for independent standard normals: the sharpness constant of the
/// ℓ₁ measurement functional.
pub const KAPPA_TARGET: f64 = 2.0 / PI;

#[derive(Clone, Copy, Debug)]
pub struct ConditionalSecondMoment {
    pub c: f64,
    pub estimate: f64,
    pub se: f64,
    /// c²/3, the small-ball bound being verified.
    pub bound: f64,
    /// How many draws landed in the conditioning event Z² ≤ c².
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct TheoryCheckReport {
    pub samples: usize,
    pub kappa_hat: f64,
    pub kappa_se: f64,
    pub conditional: Vec<ConditionalSecondMoment>,
    pub sandwich_dims: (usize, usize),
    pub sandwich_pairs: usize,
    pub sandwich_violations: usize,
    pub stability_dims: (usize, usize),
    pub stability_pairs: usize,
    pub stability_inf: f64,
}

impl TheoryCheckReport {
    pub fn kappa_ok(&self) -> bool {
        (self.kappa_hat - KAPPA_TARGET).abs() <= 3.0 * self.kappa_se
    }

    pub fn conditional_ok(&self) -> bool {
        self.conditional
            .iter()
            .all(|c| c.estimate <= c.bound + 3.0 * c.se)
    }

    pub fn sandwich_ok(&self) -> bool {
        self.sandwich_violations == 0
    }

    pub fn stability_ok(&self) -> bool {
        self.stability_inf > 0.0
    }

    pub fn all_pass(&self) -> bool {
        self.kappa_ok() && self.conditional_ok() && self.sandwich_ok() && self.stability_ok()
    }

    /// One human-readable verdict line per check.
    pub fn lines(&self) -> Vec<String> {
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut out = vec![format!(
            "sharpness constant: estimate {:.5} +/- {:.5} (se), target {:.5}: {}",
            self.kappa_hat,
            self.kappa_se,
            KAPPA_TARGET,
            verdict(self.kappa_ok())
        )];
        for c in &self.conditional {
            out.push(format!(
                "conditional second moment c={}: estimate {:.4} <= bound {:.4} \
                 (se {:.4}, {} conditioned draws): {}",
                c.c,
                c.estimate,
                c.bound,
                c.se,
                c.samples,
                verdict(c.estimate <= c.bound + 3.0 * c.se)
            ));
        }
        out.push(format!(
            "model sandwich bound: {} violations over {} pairs on a {}x{} instance: {}",
            self.sandwich_violations,
            self.sandwich_pairs,
            self.sandwich_dims.0,
            self.sandwich_dims.1,
            verdict(self.sandwich_ok())
        ));
        out.push(format!(
            "directional stability: inf {:.4} over {} unit pairs on a {}x{} instance: {}",
            self.stability_inf,
            self.stability_pairs,
            self.stability_dims.0,
            self.stability_dims.1,
            verdict(self.stability_ok())
        ));
        out
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Runs all checks. `samples` sets the Monte-Carlo budget for the scalar
/// constants; the instance-based checks use 1000 pairs each.
pub fn theory_checks(samples: usize, rng: &mut SeededRng) -> TheoryCheckReport {
    assert!(samples >= 2);

    // Sharpness constant: |⟨a,u⟩⟨a,v⟩| for orthonormal u, v reduces to the
    // product of two independent standard normals.
    let products: Vec<f64> = (0..samples)
        .map(|_| (rng.normal() * rng.normal()).abs())
        .collect();
    let (kappa_hat, kappa_se) = mean_and_se(&products);

    let draws: Vec<f64> = (0..samples).map(|_| rng.normal()).collect();
    let conditional = [0.5, 1.0, 2.0]
        .iter()
        .map(|&c| {
            let kept: Vec<f64> = draws
                .iter()
                .map(|z| z * z)
                .filter(|z2| *z2 <= c * c)
                .collect();
            let (estimate, se) = mean_and_se(&kept);
            ConditionalSecondMoment {
                c,
                estimate,
                se,
                bound: c * c / 3.0,
                samples: kept.len(),
            }
        })
        .collect();

    // |f(y) − f_x(y)| ≤ (‖AᵀA‖/m)·‖x − y‖², checked on random pairs against
    // a tightly estimated operator norm.
    let (sm, sn) = (200, 50);
    let ensemble = gen_gaussian_ensemble(sm, sn, rng);
    let gram = gram_over_m(&ensemble);
    let opnorm_over_m = match power_iteration(&gram, rng, 1e-10, 20000) {
        Ok((lambda, _)) => lambda,
        Err(crate::error::Error::PowerIterationStalled { eigenvalue, .. }) => eigenvalue,
        Err(e) => panic!("operator norm estimation failed: {e}"),
    };
    let signal = rng.normal_vec(sn);
    let b = measure(&ensemble, &signal).expect("consistent dims");
    let sandwich_pairs = 1000;
    let mut sandwich_violations = 0;
    for _ in 0..sandwich_pairs {
        let x = rng.normal_vec(sn);
        let y = rng.normal_vec(sn);
        let f = objective(&ensemble, &b, &y).expect("consistent dims");
        let fx = model_value(&ensemble, &b, &x, &y).expect("consistent dims");
        let gap2: f64 = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (xi - yi) * (xi - yi))
            .sum();
        if (f - fx).abs() > opnorm_over_m * gap2 + 1e-9 {
            sandwich_violations += 1;
        }
    }

    // Sharpness of the measurement map itself: (1/m)Σ|⟨a,u⟩⟨a,v⟩| stays
    // bounded away from zero over unit directions at healthy oversampling.
    let (tm, tn) = (400, 50);
    let stab_ensemble = gen_gaussian_ensemble(tm, tn, rng);
    let stability_pairs = 1000;
    let mut stability_inf = f64::INFINITY;
    for _ in 0..stability_pairs {
        let u = rng.unit_vector(tn);
        let v = rng.unit_vector(tn);
        let zu = stab_ensemble.apply_vec(&u);
        let zv = stab_ensemble.apply_vec(&v);
        let val = zu
            .iter()
            .zip(&zv)
            .map(|(a, b)| (a * b).abs())
            .sum::<f64>()
            / tm as f64;
        stability_inf = stability_inf.min(val);
    }

    TheoryCheckReport {
        samples,
        kappa_hat,
        kappa_se,
        conditional,
        sandwich_dims: (sm, sn),
        sandwich_pairs,
        sandwich_violations,
        stability_dims: (tm, tn),
        stability_pairs,
        stability_inf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_pass_at_moderate_budget() {
        let mut rng = SeededRng::new(4242);
        let report = theory_checks(50_000, &mut rng);
        assert!(report.kappa_ok(), "kappa {}", report.kappa_hat);
        assert!(report.conditional_ok());
        assert!(report.sandwich_ok());
        assert!(report.stability_ok(), "inf {}", report.stability_inf);
        assert_eq!(report.lines().len(), 6);
        assert!(report.lines().iter().all(|l| l.ends_with("PASS")));
    }

    #[test]
    fn se_shrinks_with_budget() {
        let r1 = theory_checks(2_000, &mut SeededRng::new(5));
        let r2 = theory_checks(128_000, &mut SeededRng::new(5));
        assert!(r2.kappa_se < r1.kappa_se / 4.0);
    }
}
