//! Inner solver for the canonical subproblem min_u ‖Bu − c‖₁ + ½‖u‖², by
//! proximal graph splitting (ADMM on the graph {(u, z) : z = Bu}) with either
//! a cached Cholesky factorization of I + BᵀB or matrix-free CG projection,
//! plus a duality-gap optimality certificate.

use crate::error::{Error, Result};
use crate::numerics::{axpy, conjugate_gradient, dot, norm2, soft_threshold, FnOperator};

/// A tall linear map B with its adjoint; the inner solver is generic over it.
pub trait TallOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// out = B·x (length rows)
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// out = Bᵀ·z (length cols)
    fn apply_adjoint(&self, z: &[f64], out: &mut [f64]);

    /// Adds BᵀB into `gram`, an n×n row-major buffer (both triangles).
    ///
    /// The default materializes the columns of B; implementors with cheap row
    /// access should override.
    fn add_gram(&self, gram: &mut [f64]) {
        let (m, n) = (self.rows(), self.cols());
        debug_assert_eq!(gram.len(), n * n);
        let mut basis = vec![0.0; n];
        let mut cols = vec![0.0; m * n]; // column-major: col j at j*m..(j+1)*m
        for j in 0..n {
            basis[j] = 1.0;
            let (head, _) = cols[j * m..].split_at_mut(m);
            self.apply(&basis, head);
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

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        self.apply(x, &mut out);
        out
    }

    fn apply_adjoint_vec(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        self.apply_adjoint(z, &mut out);
        out
    }
}

/// Explicit dense tall matrix, row-major.
pub struct DenseTall {
    pub m: usize,
    pub n: usize,
    pub rows: Vec<f64>,
}

impl DenseTall {
    pub fn new(m: usize, n: usize, rows: Vec<f64>) -> Self {
        assert_eq!(rows.len(), m * n);
        Self { m, n, rows }
    }
}

impl TallOperator for DenseTall {
    fn rows(&self) -> usize {
        self.m
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.m {
            out[i] = dot(&self.rows[i * self.n..(i + 1) * self.n], x);
        }
    }

    fn apply_adjoint(&self, z: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.m {
            if z[i] != 0.0 {
                axpy(z[i], &self.rows[i * self.n..(i + 1) * self.n], out);
            }
        }
    }

    fn add_gram(&self, gram: &mut [f64]) {
        let n = self.n;
        for i in 0..self.m {
            let row = &self.rows[i * n..(i + 1) * n];
            for (r, &ri) in row.iter().enumerate() {
                if ri == 0.0 {
                    continue;
                }
                let dst = &mut gram[r * n..r * n + r + 1];
                for (d, &rc) in dst.iter_mut().zip(row.iter().take(r + 1)) {
                    *d += ri * rc;
                }
            }
        }
        mirror_lower_to_upper(gram, n);
    }
}

pub(crate) fn mirror_lower_to_upper(gram: &mut [f64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            gram[i * n + j] = gram[j * n + i];
        }
    }
}

/// Cholesky factorization M = LLᵀ of a symmetric positive definite matrix.
pub struct CholeskyFactor {
    n: usize,
    /// Lower triangle of L, row-major in an n×n buffer.
    l: Vec<f64>,
}

impl CholeskyFactor {
    /// Factors the matrix in `data` (n×n row-major, only the lower triangle
    /// is read). Fails on a nonpositive pivot, which for I + BᵀB can only
    /// happen through numerical breakdown.
    pub fn new(n: usize, mut data: Vec<f64>) -> Result<Self> {
        assert_eq!(data.len(), n * n);
        for j in 0..n {
            let (head, tail) = data.split_at_mut((j + 1) * n);
            let row_j = &mut head[j * n..];
            let mut d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
            if d <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "Cholesky breakdown: nonpositive pivot {d:.3e} at column {j}"
                )));
            }
            d = d.sqrt();
            row_j[j] = d;
            for i in j + 1..n {
                let row_i = &mut tail[(i - j - 1) * n..(i - j) * n];
                row_i[j] = (row_i[j] - dot(&row_i[..j], &row_j[..j])) / d;
            }
        }
        Ok(Self { n, l: data })
    }

    /// Solves LLᵀx = v.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(v.len(), n);
        let mut x = v.to_vec();
        // Forward: L y = v
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            x[i] = (x[i] - dot(row, &x[..i])) / self.l[i * n + i];
        }
        // Backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }
}

/// Which graph-projection backend to use inside the inner solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectorKind {
    Dense,
    MatrixFree,
}

enum ProjectorBackend {
    DenseFactor(CholeskyFactor),
    MatrixFree { cg_tol: f64, cg_max_iter: usize },
}

/// Projection onto the graph {(x, y) : y = Bx}: solves (I + BᵀB)x = v,
/// then y = Bx.
pub struct GraphProjector<'a> {
    b: &'a dyn TallOperator,
    backend: ProjectorBackend,
}

pub struct Projection {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub cg_iters: usize,
}

impl<'a> GraphProjector<'a> {
    /// Caches a Cholesky factorization of I + BᵀB.
    pub fn dense(b: &'a dyn TallOperator) -> Result<Self> {
        let n = b.cols();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            gram[i * n + i] = 1.0;
        }
        b.add_gram(&mut gram);
        Ok(Self {
            b,
            backend: ProjectorBackend::DenseFactor(CholeskyFactor::new(n, gram)?),
        })
    }

    /// Solves the projection system iteratively with unpreconditioned CG.
    pub fn matrix_free(b: &'a dyn TallOperator, cg_tol: f64, cg_max_iter: usize) -> Self {
        Self {
            b,
            backend: ProjectorBackend::MatrixFree {
                cg_tol,
                cg_max_iter,
            },
        }
    }

    pub fn project(&self, v: &[f64], warm: Option<&[f64]>) -> Result<Projection> {
        let x = match &self.backend {
            ProjectorBackend::DenseFactor(chol) => {
                let x = chol.solve(v);
                return Ok(Projection {
                    y: self.b.apply_vec(&x),
                    x,
                    cg_iters: 0,
                });
            }
            ProjectorBackend::MatrixFree {
                cg_tol,
                cg_max_iter,
            } => {
                let op = FnOperator {
                    n: self.b.cols(),
                    f: |u: &[f64], out: &mut [f64]| {
                        let z = self.b.apply_vec(u);
                        self.b.apply_adjoint(&z, out);
                        for (oi, ui) in out.iter_mut().zip(u) {
                            *oi += ui;
                        }
                    },
                };
                conjugate_gradient(&op, v, *cg_tol, *cg_max_iter, warm)?
            }
        };
        Ok(Projection {
            y: self.b.apply_vec(&x.x),
            cg_iters: x.iters,
            x: x.x,
        })
    }
}

/// Spec'd entry point: project `v` with no warm start.
pub fn graph_project(projector: &GraphProjector, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    projector.project(v, None).map(|p| (p.x, p.y))
}

/// Inner-solver parameters. `eps` is the residual tolerance, set per
/// prox-linear phase (1e-5 cheap phase, 1e-8 polish phase).
#[derive(Clone, Copy, Debug)]
pub struct PogsConfig {
    pub rho: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for PogsConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            eps: 1e-8,
            max_iter: 20_000,
            cg_tol: 1e-6,
            cg_max_iter: 500,
        }
    }
}

/// Splitting state; duals λ, ν are the scaled ADMM multipliers.
#[derive(Clone, Debug)]
pub struct PogsState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub nu: Vec<f64>,
    pub iterations: usize,
}

impl PogsState {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            x: vec![0.0; n],
            y: vec![0.0; m],
            lambda: vec![0.0; n],
            nu: vec![0.0; m],
            iterations: 0,
        }
    }
}

pub struct PogsOutcome {
    pub u: Vec<f64>,
    pub state: PogsState,
    pub iters: usize,
    pub cg_iters: usize,
}

/// Runs the splitting iteration until both residual tests hold:
/// ‖r^pri‖ < ε(√n + max(‖x‖, ‖y‖)) and ‖r^dual‖ < ε(√n + max(‖λ‖, ‖ν‖)),
/// where r^pri = (x_{k+1} − x_{k+½}, y_{k+1} − y_{k+½}) and
/// r^dual = ρ(x_k − x_{k+1}, y_k − y_{k+1}).
///
/// Returns u = final x. A warm state (typically the duals carried over from
/// the previous outer iteration) replaces the zero start.
pub fn pogs_solve(
    b: &dyn TallOperator,
    c: &[f64],
    config: &PogsConfig,
    kind: ProjectorKind,
    warm: Option<PogsState>,
) -> Result<PogsOutcome> {
    let (m, n) = (b.rows(), b.cols());
    assert_eq!(c.len(), m);
    let rho = config.rho;
    let shrink = rho / (1.0 + rho);

    let projector = match kind {
        ProjectorKind::Dense => GraphProjector::dense(b)?,
        ProjectorKind::MatrixFree => GraphProjector::matrix_free(b, config.cg_tol, config.cg_max_iter),
    };

    let mut st = warm.unwrap_or_else(|| PogsState::zeros(n, m));
    assert_eq!(st.x.len(), n);
    assert_eq!(st.y.len(), m);
    let sqrt_n = (n as f64).sqrt();

    let mut cg_total = 0usize;
    let mut cg_warm: Option<Vec<f64>> = None;
    let mut v = vec![0.0; n];
    let mut y_in = vec![0.0; m];
    let mut last_residuals = (f64::NAN, f64::NAN);

    for iter in 1..=config.max_iter {
        // Half step: separable proxes of ½‖·‖² and ‖· − c‖₁.
        let x_half: Vec<f64> = st
            .x
            .iter()
            .zip(&st.lambda)
            .map(|(xi, li)| shrink * (xi - li))
            .collect();
        for ((yi, ni), o) in st.y.iter().zip(&st.nu).zip(y_in.iter_mut()) {
            *o = yi - ni;
        }
        let y_half = soft_threshold(&y_in, c, 1.0 / rho)?;

        // Graph projection of (x_half + λ, y_half + ν).
        for ((o, yi), ni) in y_in.iter_mut().zip(&y_half).zip(&st.nu) {
            *o = yi + ni;
        }
        b.apply_adjoint(&y_in, &mut v);
        for ((vi, xi), li) in v.iter_mut().zip(&x_half).zip(&st.lambda) {
            *vi += xi + li;
        }
        let proj = projector.project(&v, cg_warm.as_deref())?;
        cg_total += proj.cg_iters;
        if matches!(kind, ProjectorKind::MatrixFree) {
            cg_warm = Some(proj.x.clone());
        }

        // Dual ascent λ += x_half − x_new, ν += y_half − y_new, and the
        // primal/dual residual norms of the same differences.
        let mut pri = 0.0;
        let mut dual = 0.0;
        for i in 0..n {
            let d = proj.x[i] - x_half[i];
            st.lambda[i] -= d;
            pri += d * d;
            let s = st.x[i] - proj.x[i];
            dual += s * s;
        }
        for i in 0..m {
            let d = proj.y[i] - y_half[i];
            st.nu[i] -= d;
            pri += d * d;
            let s = st.y[i] - proj.y[i];
            dual += s * s;
        }
        let pri = pri.sqrt();
        let dual = rho * dual.sqrt();
        last_residuals = (pri, dual);

        st.x = proj.x;
        st.y = proj.y;
        st.iterations += 1;

        let pri_scale = config.eps * (sqrt_n + norm2(&st.x).max(norm2(&st.y)));
        let dual_scale = config.eps * (sqrt_n + norm2(&st.lambda).max(norm2(&st.nu)));
        if pri < pri_scale && dual < dual_scale {
            return Ok(PogsOutcome {
                u: st.x.clone(),
                iters: iter,
                cg_iters: cg_total,
                state: st,
            });
        }
    }

    Err(Error::PogsMaxIter {
        max_iter: config.max_iter,
        primal: last_residuals.0,
        dual: last_residuals.1,
        state: Box::new(st),
    })
}

/// Duality gap p(u) − d(g) for the canonical subproblem, with
/// p(u) = ‖Bu − c‖₁ + ½‖u‖² and d(g) = −½‖Bᵀg‖² − gᵀc over ‖g‖∞ ≤ 1.
///
/// Strong duality makes the gap zero exactly at the optimal pair; it is
/// nonnegative everywhere (up to roundoff).
pub fn duality_gap(b: &dyn TallOperator, c: &[f64], u: &[f64], g: &[f64]) -> Result<f64> {
    if g.len() != b.rows() {
        return Err(Error::LengthMismatch(g.len(), b.rows()));
    }
    let linf = g.iter().fold(0.0f64, |acc, &gi| acc.max(gi.abs()));
    if linf > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "dual candidate infeasible: ‖g‖∞ = {linf} > 1"
        )));
    }
    let bu = b.apply_vec(u);
    let mut primal = 0.5 * dot(u, u);
    for (bi, ci) in bu.iter().zip(c) {
        primal += (bi - ci).abs();
    }
    let btg = b.apply_adjoint_vec(g);
    let dual = -0.5 * dot(&btg, &btg) - dot(g, c);
    Ok(primal - dual)
}

/// The dual candidate extracted from a converged splitting state:
/// clip(−ρν) entrywise to [−1, 1]. At a fixed point −ρν is a subgradient of
/// ‖· − c‖₁ at y, which is exactly a maximizer of the dual.
pub fn dual_candidate(state: &PogsState, rho: f64) -> Vec<f64> {
    state
        .nu
        .iter()
        .map(|&ni| (-rho * ni).clamp(-1.0, 1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_b(m: usize, n: usize) -> DenseTall {
        DenseTall::new(m, n, vec![0.0; m * n])
    }

    fn eye(n: usize) -> DenseTall {
        let mut rows = vec![0.0; n * n];
        for i in 0..n {
            rows[i * n + i] = 1.0;
        }
        DenseTall::new(n, n, rows)
    }

    #[test]
    fn project_zero_matrix_is_identity() {
        let b = zero_b(3, 2);
        let v = vec![1.5, -2.0];
        for projector in [
            GraphProjector::dense(&b).unwrap(),
            GraphProjector::matrix_free(&b, 1e-10, 100),
        ] {
            let (x, y) = graph_project(&projector, &v).unwrap();
            assert!((x[0] - 1.5).abs() < 1e-12);
            assert!((x[1] + 2.0).abs() < 1e-12);
            assert!(y.iter().all(|&yi| yi.abs() < 1e-12));
        }
    }

    #[test]
    fn project_identity_halves() {
        let b = eye(4);
        let v = vec![2.0, -4.0, 6.0, 0.0];
        for projector in [
            GraphProjector::dense(&b).unwrap(),
            GraphProjector::matrix_free(&b, 1e-12, 100),
        ] {
            let (x, y) = graph_project(&projector, &v).unwrap();
            for i in 0..4 {
                assert!((x[i] - v[i] / 2.0).abs() < 1e-10);
                assert!((y[i] - v[i] / 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pogs_zero_target_gives_zero() {
        let b = DenseTall::new(3, 2, vec![1.0, 2.0, -1.0, 0.5, 0.3, 0.3]);
        let c = vec![0.0; 3];
        let out = pogs_solve(&b, &c, &PogsConfig::default(), ProjectorKind::Dense, None).unwrap();
        assert!(crate::numerics::norm2(&out.u) < 1e-6, "u = {:?}", out.u);
    }

    #[test]
    fn pogs_one_dimensional_shrinkage() {
        // min |u − 10| + u²/2 has optimum u = 1.
        let b = eye(1);
        let out =
            pogs_solve(&b, &[10.0], &PogsConfig::default(), ProjectorKind::Dense, None).unwrap();
        assert!((out.u[0] - 1.0).abs() < 1e-6, "u = {:?}", out.u);
        let g = dual_candidate(&out.state, 1.0);
        let gap = duality_gap(&b, &[10.0], &out.u, &g).unwrap();
        assert!(gap.abs() < 1e-6, "gap = {gap}");
        assert!(gap >= -1e-12);
    }

    #[test]
    fn duality_gap_trivials() {
        let b = eye(2);
        let c = vec![3.0, -4.0];
        let gap = duality_gap(&b, &c, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((gap - 7.0).abs() < 1e-12);

        // Exact primal-dual pair for the 1-D instance: u = 1, g = −1.
        let b1 = eye(1);
        let gap = duality_gap(&b1, &[10.0], &[1.0], &[-1.0]).unwrap();
        assert!(gap.abs() < 1e-12);

        assert!(duality_gap(&b1, &[10.0], &[1.0], &[1.5]).is_err());
    }

    #[test]
    fn dual_candidate_is_clipped() {
        let st = PogsState {
            x: vec![],
            y: vec![],
            lambda: vec![],
            nu: vec![2.0, -0.25, -3.0],
            iterations: 0,
        };
        assert_eq!(dual_candidate(&st, 1.0), vec![-1.0, 0.25, 1.0]);
    }

    #[test]
    fn pogs_max_iter_carries_state() {
        let b = eye(1);
        let cfg = PogsConfig {
            max_iter: 1,
            eps: 1e-14,
            ..PogsConfig::default()
        };
        match pogs_solve(&b, &[10.0], &cfg, ProjectorKind::Dense, None) {
            Err(Error::PogsMaxIter { state, .. }) => assert_eq!(state.iterations, 1),
            other => panic!("expected PogsMaxIter, got {:?}", other.map(|o| o.u)),
        }
    }
}
