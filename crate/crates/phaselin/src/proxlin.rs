//! The robust phase-retrieval objective, its convex linearized model, the
//! canonical rescaling of the prox-linear step, and the two-phase outer loop.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::numerics::{dot, norm_diff, SeededRng};
use crate::sensing::{operator_norm_over_m, MeasurementEnsemble, Observations};
use crate::subsolver::{pogs_solve, PogsConfig, PogsState, ProjectorKind, TallOperator};

/// f(x) = (1/m)·Σ_i |⟨a_i, x⟩² − b_i|
pub fn objective(ensemble: &MeasurementEnsemble, b: &[f64], x: &[f64]) -> Result<f64> {
    if b.len() != ensemble.m() {
        return Err(Error::LengthMismatch(b.len(), ensemble.m()));
    }
    if x.len() != ensemble.n() {
        return Err(Error::LengthMismatch(x.len(), ensemble.n()));
    }
    let z = ensemble.apply_vec(x);
    let mut s = 0.0;
    for (zi, bi) in z.iter().zip(b) {
        s += (zi * zi - bi).abs();
    }
    Ok(s / ensemble.m() as f64)
}

/// The convex model of f linearized at x0, evaluated at y:
/// (1/m)·Σ_i |⟨a_i, x0⟩² − b_i + 2⟨a_i, x0⟩⟨a_i, y − x0⟩|.
///
/// Tangent at y = x0, where it equals the objective exactly.
pub fn model_value(
    ensemble: &MeasurementEnsemble,
    b: &[f64],
    x0: &[f64],
    y: &[f64],
) -> Result<f64> {
    if b.len() != ensemble.m() {
        return Err(Error::LengthMismatch(b.len(), ensemble.m()));
    }
    if x0.len() != ensemble.n() || y.len() != ensemble.n() {
        return Err(Error::LengthMismatch(x0.len().max(y.len()), ensemble.n()));
    }
    let z0 = ensemble.apply_vec(x0);
    let diff: Vec<f64> = y.iter().zip(x0).map(|(yi, xi)| yi - xi).collect();
    let zd = ensemble.apply_vec(&diff);
    let mut s = 0.0;
    for ((z0i, zdi), bi) in z0.iter().zip(&zd).zip(b) {
        s += (z0i * z0i - bi + 2.0 * z0i * zdi).abs();
    }
    Ok(s / ensemble.m() as f64)
}

/// The prox-linear step min_y f_{x0}(y) + (L/2)‖y − x0‖², rewritten in the
/// variable u = √L·(y − x0) as min_u ‖Bu − c‖₁ + ½‖u‖².
///
/// B has rows (2⟨a_i, x0⟩ / (m√L))·a_iᵀ and c_i = (b_i − ⟨a_i, x0⟩²)/m; B is
/// applied as a diagonal scale composed with the ensemble, never materialized
/// for the stacked-Hadamard variant. This is the unique rescaling that makes
/// the quadratic term exactly ½‖u‖².
pub struct CanonicalSubproblem<'a> {
    pub ensemble: &'a MeasurementEnsemble,
    pub x0: Vec<f64>,
    /// d_i = 2⟨a_i, x0⟩/(m√L)
    pub row_scale: Vec<f64>,
    pub c: Vec<f64>,
    pub quad_const: f64,
}

pub fn canonicalize<'a>(
    ensemble: &'a MeasurementEnsemble,
    b: &[f64],
    x0: &[f64],
    quad_const: f64,
) -> CanonicalSubproblem<'a> {
    assert!(quad_const > 0.0);
    assert_eq!(b.len(), ensemble.m());
    assert_eq!(x0.len(), ensemble.n());
    let m = ensemble.m() as f64;
    let sqrt_l = quad_const.sqrt();
    let z0 = ensemble.apply_vec(x0);
    let row_scale: Vec<f64> = z0.iter().map(|z| 2.0 * z / (m * sqrt_l)).collect();
    let c: Vec<f64> = z0.iter().zip(b).map(|(z, bi)| (bi - z * z) / m).collect();
    CanonicalSubproblem {
        ensemble,
        x0: x0.to_vec(),
        row_scale,
        c,
        quad_const,
    }
}

impl CanonicalSubproblem<'_> {
    /// u ↦ x0 + u/√L
    pub fn back_map(&self, u: &[f64]) -> Vec<f64> {
        let s = 1.0 / self.quad_const.sqrt();
        self.x0.iter().zip(u).map(|(xi, ui)| xi + s * ui).collect()
    }

    /// ‖Bu − c‖₁ + ½‖u‖², the subproblem objective (equals f(x0) at u = 0).
    pub fn canonical_objective(&self, u: &[f64]) -> f64 {
        let bu = self.apply_vec(u);
        let mut s = 0.5 * dot(u, u);
        for (bi, ci) in bu.iter().zip(&self.c) {
            s += (bi - ci).abs();
        }
        s
    }
}

impl TallOperator for CanonicalSubproblem<'_> {
    fn rows(&self) -> usize {
        self.ensemble.m()
    }

    fn cols(&self) -> usize {
        self.ensemble.n()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.ensemble.apply(x, out);
        for (oi, di) in out.iter_mut().zip(&self.row_scale) {
            *oi *= di;
        }
    }

    fn apply_adjoint(&self, z: &[f64], out: &mut [f64]) {
        let scaled: Vec<f64> = z.iter().zip(&self.row_scale).map(|(zi, di)| zi * di).collect();
        self.ensemble.apply_adjoint(&scaled, out);
    }

    fn add_gram(&self, gram: &mut [f64]) {
        // BᵀB = Σ d_i² a_i a_iᵀ; accumulate from rows when they are explicit.
        if let MeasurementEnsemble::Dense { m, n, rows } = self.ensemble {
            let n = *n;
            for i in 0..*m {
                let w = self.row_scale[i] * self.row_scale[i];
                if w == 0.0 {
                    continue;
                }
                let row = &rows[i * n..(i + 1) * n];
                for (r, &ri) in row.iter().enumerate() {
                    let wri = w * ri;
                    if wri == 0.0 {
                        continue;
                    }
                    let dst = &mut gram[r * n..r * n + r + 1];
                    for (d, &rc) in dst.iter_mut().zip(row.iter().take(r + 1)) {
                        *d += wri * rc;
                    }
                }
            }
            crate::subsolver::mirror_lower_to_upper(gram, n);
        } else {
            // Stacked-Hadamard: fall back to column materialization (used
            // only at small n, where the dense projector makes sense at all).
            default_add_gram(self, gram);
        }
    }
}

fn default_add_gram(op: &dyn TallOperator, gram: &mut [f64]) {
    let (m, n) = (op.rows(), op.cols());
    let mut basis = vec![0.0; n];
    let mut cols = vec![0.0; m * n];
    for j in 0..n {
        basis[j] = 1.0;
        op.apply(&basis, &mut cols[j * m..(j + 1) * m]);
        basis[j] = 0.0;
    }
    for i in 0..n {
        for j in 0..=i {
            let v = dot(&cols[i * m..(i + 1) * m], &cols[j * m..(j + 1) * m]);
            gram[i * n + j] += v;
            if i != j {
                gram[j * n + i] += v;
            }
        }
    }
}

/// Outer-loop parameters. The quadratic-approximation constant L defaults to
/// 2·‖AᵀA‖/m, computed once per solve; the cheap phase runs the inner solver
/// at `phase1_inner_eps` until its step criterion (or `max_outer_phase1`),
/// then the polish phase runs at `phase2_inner_eps` until the step-based
/// stopping rule ‖x_{k−1} − x_k‖ ≤ outer_tol/L.
#[derive(Clone, Debug)]
pub struct ProxLinearConfig {
    /// Override for L; `None` computes 2·operator_norm_over_m.
    pub quad_const: Option<f64>,
    pub outer_tol: f64,
    pub max_outer: usize,
    pub phase1_inner_eps: f64,
    pub phase1_delta: f64,
    pub max_outer_phase1: usize,
    pub phase2_inner_eps: f64,
    pub inner: PogsConfig,
    /// Record every outer iterate in the report (for convergence studies).
    pub record_iterates: bool,
}

impl Default for ProxLinearConfig {
    fn default() -> Self {
        Self {
            quad_const: None,
            outer_tol: 1e-5,
            max_outer: 50,
            phase1_inner_eps: 1e-5,
            phase1_delta: 1e-3,
            max_outer_phase1: 25,
            phase2_inner_eps: 1e-8,
            inner: PogsConfig::default(),
            record_iterates: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Converged,
    MaxOuter,
    InnerFailure(String),
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Converged => write!(f, "converged"),
            Self::MaxOuter => write!(f, "max_outer"),
            Self::InnerFailure(msg) => write!(f, "inner_failure: {msg}"),
        }
    }
}

/// Full trace of one prox-linear solve.
///
/// `objectives[k]` is f(x_k) with `objectives[0] = f(x₀)`; `step_norms[k]` is
/// ‖x_{k+1} − x_k‖. Each splitting iteration performs exactly one graph
/// projection, so `inner_iters` doubles as the per-step projection count;
/// `cg_iters` is nonzero only for the matrix-free projector. Objective
/// increases are recorded, not hidden: `nonmonotone_steps` lists the outer
/// steps k where f went up.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub final_x: Vec<f64>,
    pub outer_iters: usize,
    pub step_norms: Vec<f64>,
    pub objectives: Vec<f64>,
    pub inner_iters: Vec<usize>,
    pub cg_iters: Vec<usize>,
    pub nonmonotone_steps: Vec<usize>,
    /// Ensemble apply/adjoint invocations in the main loop (canonicalization,
    /// splitting iterations, CG, objective evaluations).
    pub matvecs: usize,
    pub wall_ms: f64,
    pub termination: Termination,
    pub iterates: Option<Vec<Vec<f64>>>,
}

impl SolveReport {
    pub fn inner_iters_total(&self) -> usize {
        self.inner_iters.iter().sum()
    }
}

/// Runs the prox-linear method on the observations' measurement vector.
///
/// Iterates x_{k+1} = back_map(argmin_u ‖B_k u − c_k‖₁ + ½‖u‖²) with the
/// inner solver warm-started from the previous state mapped into the new
/// canonical coordinates: the primal solution lands at u = 0 exactly, and
/// the x-block dual shifts by u_prev/ρ (its fixed point is −u⋆/ρ, so a
/// converged λ carries over as ≈ 0). Inner-solver failures are tolerated in
/// the cheap phase (the best available iterate is used) and abort the solve
/// in the polish phase, where their accuracy is load-bearing.
pub fn prox_linear_solve(
    ensemble: &MeasurementEnsemble,
    obs: &Observations,
    x0: &[f64],
    config: &ProxLinearConfig,
    inner_solver: ProjectorKind,
) -> SolveReport {
    let start = Instant::now();
    let b = &obs.b;
    assert_eq!(x0.len(), ensemble.n());
    assert_eq!(b.len(), ensemble.m());

    // L once per solve; the power-iteration start uses a fixed internal
    // stream so a solve is a pure function of (ensemble, obs, x0, config).
    let quad_const = config.quad_const.unwrap_or_else(|| {
        let mut rng = SeededRng::new(0x70_67_73);
        2.0 * operator_norm_over_m(ensemble, &mut rng)
            .expect("power iteration on the Gram operator")
    });
    let opnorm_over_m = quad_const / 2.0;

    let mut matvecs = 0usize;
    let mut x = x0.to_vec();
    let mut objectives = vec![objective(ensemble, b, &x).expect("validated dims")];
    matvecs += 1;
    let mut step_norms = Vec::new();
    let mut inner_iters = Vec::new();
    let mut cg_iters = Vec::new();
    let mut nonmonotone = Vec::new();
    let mut iterates = config.record_iterates.then(|| vec![x.clone()]);

    let mut carried_duals: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut phase = 1u8;
    let mut outer = 0usize;
    let mut termination = Termination::MaxOuter;

    while outer < config.max_outer {
        let inner_eps = if phase == 1 {
            config.phase1_inner_eps
        } else {
            config.phase2_inner_eps
        };
        let sub = canonicalize(ensemble, b, &x, quad_const);
        matvecs += 1;
        let warm = carried_duals.take().map(|(lambda, nu)| PogsState {
            x: vec![0.0; ensemble.n()],
            y: vec![0.0; ensemble.m()],
            lambda,
            nu,
            iterations: 0,
        });
        let pogs_cfg = PogsConfig {
            eps: inner_eps,
            ..config.inner
        };

        // Carrying state into the next subproblem shifts the canonical
        // coordinates by u (the step just taken), so the x-block dual moves
        // with them: a converged solve has λ ≈ −u/ρ, and λ + u/ρ ≈ 0 is the
        // fixed point of the next, nearby subproblem.
        let rho = pogs_cfg.rho;
        let u = match pogs_solve(&sub, &sub.c, &pogs_cfg, inner_solver, warm) {
            Ok(out) => {
                inner_iters.push(out.iters);
                cg_iters.push(out.cg_iters);
                matvecs += 2 * out.iters + 2 * out.cg_iters;
                let mut lambda = out.state.lambda;
                for (li, ui) in lambda.iter_mut().zip(&out.u) {
                    *li += ui / rho;
                }
                carried_duals = Some((lambda, out.state.nu));
                out.u
            }
            Err(Error::PogsMaxIter {
                max_iter,
                primal,
                dual,
                state,
            }) if phase == 1 => {
                // Cheap phase tolerates a stalled inner solve: take its best
                // iterate and keep going.
                inner_iters.push(max_iter);
                cg_iters.push(0);
                matvecs += 2 * max_iter;
                let _ = (primal, dual);
                let mut lambda = state.lambda.clone();
                for (li, ui) in lambda.iter_mut().zip(&state.x) {
                    *li += ui / rho;
                }
                carried_duals = Some((lambda, state.nu.clone()));
                state.x
            }
            Err(e) => {
                termination = Termination::InnerFailure(e.to_string());
                break;
            }
        };

        let x_next = sub.back_map(&u);
        let step = norm_diff(&x_next, &x);
        let f_next = objective(ensemble, b, &x_next).expect("validated dims");
        matvecs += 1;
        if f_next > *objectives.last().expect("nonempty") {
            nonmonotone.push(outer);
        }
        objectives.push(f_next);
        step_norms.push(step);
        if let Some(it) = iterates.as_mut() {
            it.push(x_next.clone());
        }
        x = x_next;
        outer += 1;

        if phase == 1 {
            if outer >= config.max_outer_phase1 || step <= config.phase1_delta / opnorm_over_m {
                phase = 2;
            }
        } else if step <= config.outer_tol / quad_const {
            termination = Termination::Converged;
            break;
        }
    }

    SolveReport {
        final_x: x,
        outer_iters: outer,
        step_norms,
        objectives,
        inner_iters,
        cg_iters,
        nonmonotone_steps: nonmonotone,
        matvecs,
        wall_ms: start.elapsed().as_secs_f64() * 1000.0,
        termination,
        iterates,
    }
}
