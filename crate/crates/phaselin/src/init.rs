//! Spectral initializers. Each produces a radius estimate r̂ and a unit
//! direction d̂ from the measurements alone, combined as x0 = r̂·d̂.
//!
//! The eigenvector solves run at a loose tolerance: initialization accuracy
//! is statistical, so a stalled power iteration falls back to its best
//! iterate instead of failing the whole pipeline.

use crate::error::{Error, Result};
use crate::numerics::{
    median, power_iteration, quantile, Extreme, FnOperator, SeededRng, SymmetricOperator,
};
use crate::sensing::{MaskedGram, MeasurementEnsemble, Observations, WeightedGram};

const INIT_EIG_TOL: f64 = 1e-6;
const INIT_EIG_MAX_ITER: usize = 5000;

#[derive(Clone, Debug)]
pub struct InitEstimate {
    pub r_hat: f64,
    pub d_hat: Vec<f64>,
    pub x0: Vec<f64>,
}

impl InitEstimate {
    fn new(r_hat: f64, d_hat: Vec<f64>) -> Self {
        let x0 = d_hat.iter().map(|d| r_hat * d).collect();
        Self { r_hat, d_hat, x0 }
    }
}

/// Extreme eigenvector with best-iterate recovery on stall.
fn spectral_direction(
    op: &dyn SymmetricOperator,
    which: Extreme,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    let recover = |r: Result<(f64, Vec<f64>)>| match r {
        Ok(pair) => Ok(pair),
        Err(Error::PowerIterationStalled {
            eigenvalue,
            eigenvector,
            ..
        }) => Ok((eigenvalue, eigenvector)),
        Err(e) => Err(e),
    };
    match which {
        Extreme::Largest => {
            recover(power_iteration(op, rng, INIT_EIG_TOL, INIT_EIG_MAX_ITER)).map(|(_, v)| v)
        }
        Extreme::Smallest => {
            let (lambda_max, _) =
                recover(power_iteration(op, rng, INIT_EIG_TOL, INIT_EIG_MAX_ITER))?;
            let sigma = 1.01 * lambda_max.max(0.0) + f64::EPSILON;
            let shifted = FnOperator {
                n: op.dim(),
                f: |v: &[f64], out: &mut [f64]| {
                    op.apply(v, out);
                    for (oi, vi) in out.iter_mut().zip(v) {
                        *oi = sigma * vi - *oi;
                    }
                },
            };
            recover(power_iteration(
                &shifted,
                rng,
                INIT_EIG_TOL,
                INIT_EIG_MAX_ITER,
            ))
            .map(|(_, v)| v)
        }
    }
}

fn mean(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

fn check_len(b: &[f64], ensemble: &MeasurementEnsemble) -> Result<()> {
    if b.len() != ensemble.m() {
        return Err(Error::LengthMismatch(b.len(), ensemble.m()));
    }
    Ok(())
}

/// Null-space initializer for outlier-free data: the rows with small b are
/// nearly orthogonal to the signal, so the direction is the bottom
/// eigenvector of their Gram; the radius comes from mean(b) = ‖x⋆‖²·E⟨a,d⟩².
pub fn init_noiseless(
    ensemble: &MeasurementEnsemble,
    b: &[f64],
    rng: &mut SeededRng,
) -> Result<InitEstimate> {
    check_len(b, ensemble)?;
    let r2 = mean(b)?;
    if r2 < 0.0 {
        return Err(Error::DegenerateInit(format!(
            "negative mean measurement {r2:.3e}"
        )));
    }
    let mask: Vec<bool> = b.iter().map(|&bi| bi <= 0.5 * r2).collect();
    if !mask.iter().any(|&s| s) {
        return Err(Error::DegenerateInit(
            "no measurements below half the mean".into(),
        ));
    }
    let gram = MaskedGram::new(ensemble, &mask);
    let d_hat = spectral_direction(&gram, Extreme::Smallest, rng)?;
    Ok(InitEstimate::new(r2.sqrt(), d_hat))
}

/// Outlier-robust variant: select the rows with b at or below the median
/// (gross positive outliers land in the complement), take the bottom
/// eigenvector of their Gram, then estimate the radius by the ℓ₁ fit of b
/// against the squared projections onto the direction.
pub fn init_outlier(
    ensemble: &MeasurementEnsemble,
    obs: &Observations,
    rng: &mut SeededRng,
) -> Result<InitEstimate> {
    let b = &obs.b;
    check_len(b, ensemble)?;
    let thresh = median(b)?;
    let mask: Vec<bool> = b.iter().map(|&bi| bi <= thresh).collect();
    if !mask.iter().any(|&s| s) {
        return Err(Error::DegenerateInit("no measurements at or below the median".into()));
    }
    let gram = MaskedGram::new(ensemble, &mask);
    let d_hat = spectral_direction(&gram, Extreme::Smallest, rng)?;
    let c: Vec<f64> = ensemble.apply_vec(&d_hat).iter().map(|z| z * z).collect();
    let r2 = radius_estimate(b, &c)?;
    if r2 < 0.0 {
        return Err(Error::DegenerateInit(format!(
            "negative squared-radius estimate {r2:.3e}"
        )));
    }
    Ok(InitEstimate::new(r2.sqrt(), d_hat))
}

/// Minimizer over r of G(r) = Σ_i |b_i − c_i·r|: the weighted median of the
/// ratios b_i/c_i with weights c_i. Rows with c_i below 1e-12·max(c) carry no
/// information about r and are dropped. When the optimum is a flat interval
/// between consecutive ratios (cumulative weight hits exactly half the
/// total), its midpoint is returned.
pub fn radius_estimate(b: &[f64], c: &[f64]) -> Result<f64> {
    if b.len() != c.len() {
        return Err(Error::LengthMismatch(b.len(), c.len()));
    }
    if b.is_empty() {
        return Err(Error::EmptySample);
    }
    let c_max = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(c_max > 0.0) {
        return Err(Error::DegenerateInit(
            "all radius weights are nonpositive".into(),
        ));
    }
    let c_tol = 1e-12 * c_max;
    let mut pairs: Vec<(f64, f64)> = b
        .iter()
        .zip(c)
        .filter(|(_, &ci)| ci > c_tol)
        .map(|(&bi, &ci)| (bi / ci, ci))
        .collect();
    if pairs.is_empty() {
        return Err(Error::DegenerateInit("all radius weights vanish".into()));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite ratios"));
    let total: f64 = pairs.iter().map(|(_, w)| w).sum();
    let tie_tol = 1e-12 * total;
    let mut cum = 0.0;
    for (j, &(ratio, w)) in pairs.iter().enumerate() {
        cum += w;
        if cum >= 0.5 * total - tie_tol {
            // Exactly half the weight at or below ratio_j: every point of
            // [ratio_j, ratio_{j+1}] minimizes G.
            if (cum - 0.5 * total).abs() <= tie_tol && j + 1 < pairs.len() {
                return Ok(0.5 * (ratio + pairs[j + 1].0));
            }
            return Ok(ratio);
        }
    }
    Ok(pairs.last().expect("nonempty").0)
}

/// Initializer built from the largest normalized measurements: rows with big
/// b_i/‖a_i‖² are nearly aligned with the signal, so the direction is the top
/// eigenvector of their norm-compensated Gram.
pub fn init_big(
    ensemble: &MeasurementEnsemble,
    b: &[f64],
    rng: &mut SeededRng,
) -> Result<InitEstimate> {
    check_len(b, ensemble)?;
    let norms = ensemble.row_norms();
    for (i, &ni) in norms.iter().enumerate() {
        if ni == 0.0 {
            return Err(Error::ZeroRow(i));
        }
    }
    let ell: Vec<f64> = b
        .iter()
        .zip(&norms)
        .map(|(&bi, &ni)| bi / (ni * ni))
        .collect();
    let tau = quantile(&ell, 5.0 / 6.0)?;
    let weights: Vec<f64> = ell
        .iter()
        .zip(&norms)
        .map(|(&li, &ni)| if li >= tau { 1.0 / (ni * ni) } else { 0.0 })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateInit("top-quantile selection is empty".into()));
    }
    let gram = WeightedGram {
        ensemble,
        weights: &weights,
    };
    let d_hat = spectral_direction(&gram, Extreme::Largest, rng)?;
    let r2 = mean(b)?;
    if r2 < 0.0 {
        return Err(Error::DegenerateInit(format!(
            "negative mean measurement {r2:.3e}"
        )));
    }
    Ok(InitEstimate::new(r2.sqrt(), d_hat))
}

/// Median-truncated initializer: scales by the median of b (0.455 is the
/// median of the squared magnitude ⟨a, x⟩² at unit signal), keeps rows with
/// |b_i| within nine medians, and takes the top eigenvector of the
/// b-weighted Gram of the survivors. Requires explicit rows.
pub fn init_median(
    ensemble: &MeasurementEnsemble,
    b: &[f64],
    rng: &mut SeededRng,
) -> Result<InitEstimate> {
    if matches!(ensemble, MeasurementEnsemble::HadamardStack { .. }) {
        return Err(Error::RequiresDense);
    }
    check_len(b, ensemble)?;
    let lambda0 = quantile(b, 0.5)?;
    if lambda0 <= 0.0 {
        return Err(Error::DegenerateInit(format!(
            "nonpositive measurement median {lambda0:.3e}"
        )));
    }
    let r2 = lambda0 / 0.455;
    let weights: Vec<f64> = b
        .iter()
        .map(|&bi| if bi.abs() <= 9.0 * lambda0 { bi } else { 0.0 })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateInit(
            "median truncation removed every row".into(),
        ));
    }
    let gram = WeightedGram {
        ensemble,
        weights: &weights,
    };
    let d_hat = spectral_direction(&gram, Extreme::Largest, rng)?;
    Ok(InitEstimate::new(r2.sqrt(), d_hat))
}
