//! Measurement ensembles, phaseless measurement, outlier corruption, and
//! signal ingestion.

use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{dot, norm2, power_iteration, FnOperator, SeededRng, SymmetricOperator};

/// The sensing operator A, either an explicit dense matrix or a stack of
/// sign-randomized Hadamard transforms applied matrix-free.
///
/// The stacked variant is A = [H·S₁; …; H·S_k] with H the normalized
/// Sylvester Hadamard matrix and S_l = diag(±1), so m = k·n and AᵀA = k·I.
#[derive(Clone, Debug)]
pub enum MeasurementEnsemble {
    Dense {
        m: usize,
        n: usize,
        /// Row-major m×n entries.
        rows: Vec<f64>,
    },
    HadamardStack {
        n: usize,
        k: usize,
        /// k diagonals with entries ±1.
        sign_diagonals: Vec<Vec<f64>>,
    },
}

impl MeasurementEnsemble {
    pub fn m(&self) -> usize {
        match self {
            Self::Dense { m, .. } => *m,
            Self::HadamardStack { n, k, .. } => n * k,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Dense { n, .. } => *n,
            Self::HadamardStack { n, .. } => *n,
        }
    }

    /// out = A·x (length m)
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n());
        debug_assert_eq!(out.len(), self.m());
        match self {
            Self::Dense { m, n, rows } => {
                for i in 0..*m {
                    out[i] = dot(&rows[i * n..(i + 1) * n], x);
                }
            }
            Self::HadamardStack {
                n, sign_diagonals, ..
            } => {
                for (l, signs) in sign_diagonals.iter().enumerate() {
                    let block = &mut out[l * n..(l + 1) * n];
                    for (bi, (si, xi)) in block.iter_mut().zip(signs.iter().zip(x)) {
                        *bi = si * xi;
                    }
                    crate::numerics::fwht_in_place(block);
                }
            }
        }
    }

    /// out = Aᵀ·z (length n)
    pub fn apply_adjoint(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.m());
        debug_assert_eq!(out.len(), self.n());
        match self {
            Self::Dense { m, n, rows } => {
                out.fill(0.0);
                for i in 0..*m {
                    let zi = z[i];
                    if zi != 0.0 {
                        crate::numerics::axpy(zi, &rows[i * n..(i + 1) * n], out);
                    }
                }
            }
            Self::HadamardStack {
                n, sign_diagonals, ..
            } => {
                out.fill(0.0);
                let mut buf = vec![0.0; *n];
                for (l, signs) in sign_diagonals.iter().enumerate() {
                    buf.copy_from_slice(&z[l * n..(l + 1) * n]);
                    crate::numerics::fwht_in_place(&mut buf);
                    for (oi, (si, bi)) in out.iter_mut().zip(signs.iter().zip(&buf)) {
                        *oi += si * bi;
                    }
                }
            }
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        self.apply(x, &mut out);
        out
    }

    pub fn apply_adjoint_vec(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.apply_adjoint(z, &mut out);
        out
    }

    /// Euclidean norms of the rows of A. Stacked-Hadamard rows all have unit
    /// norm (each is a signed row of H).
    pub fn row_norms(&self) -> Vec<f64> {
        match self {
            Self::Dense { m, n, rows } => (0..*m)
                .map(|i| norm2(&rows[i * n..(i + 1) * n]))
                .collect(),
            Self::HadamardStack { .. } => vec![1.0; self.m()],
        }
    }

    /// Materializes the rows of A (row-major m×n). Intended for small-n
    /// diagnostics and tests; the stacked variant costs m Hadamard applies.
    pub fn to_dense_rows(&self) -> Vec<f64> {
        match self {
            Self::Dense { rows, .. } => rows.clone(),
            Self::HadamardStack { n, .. } => {
                let (m, n) = (self.m(), *n);
                let mut rows = vec![0.0; m * n];
                let mut basis = vec![0.0; n];
                let mut col = vec![0.0; m];
                for j in 0..n {
                    basis[j] = 1.0;
                    self.apply(&basis, &mut col);
                    basis[j] = 0.0;
                    for i in 0..m {
                        rows[i * n + j] = col[i];
                    }
                }
                rows
            }
        }
    }
}

/// i.i.d. N(0,1) dense ensemble; entries are drawn in row-major order, which
/// is part of the reproducibility contract.
pub fn gen_gaussian_ensemble(m: usize, n: usize, rng: &mut SeededRng) -> MeasurementEnsemble {
    assert!(m >= 1 && n >= 1);
    let rows = (0..m * n).map(|_| rng.normal()).collect();
    MeasurementEnsemble::Dense { m, n, rows }
}

/// Stack of k sign-randomized Hadamard blocks; diagonals are i.i.d. ±1.
pub fn gen_hadamard_ensemble(
    k: usize,
    n: usize,
    rng: &mut SeededRng,
) -> Result<MeasurementEnsemble> {
    assert!(k >= 1);
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let sign_diagonals = (0..k).map(|_| rng.sign_vec(n)).collect();
    Ok(MeasurementEnsemble::HadamardStack {
        n,
        k,
        sign_diagonals,
    })
}

/// How the ground-truth signal was produced.
#[derive(Clone, Debug, PartialEq)]
pub enum SignalMode {
    Rademacher,
    Gaussian,
    FromFile,
}

#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub x_star: Vec<f64>,
    pub mode: SignalMode,
}

impl GroundTruth {
    /// Uniform draw from {−1, +1}ⁿ.
    pub fn rademacher(n: usize, rng: &mut SeededRng) -> Self {
        Self {
            x_star: rng.sign_vec(n),
            mode: SignalMode::Rademacher,
        }
    }

    /// x⋆ ∼ N(0, Iₙ)
    pub fn gaussian(n: usize, rng: &mut SeededRng) -> Self {
        Self {
            x_star: rng.normal_vec(n),
            mode: SignalMode::Gaussian,
        }
    }
}

/// Phaseless measurement: b_i = ⟨a_i, x⟩².
pub fn measure(ensemble: &MeasurementEnsemble, x_star: &[f64]) -> Result<Vec<f64>> {
    if x_star.len() != ensemble.n() {
        return Err(Error::LengthMismatch(x_star.len(), ensemble.n()));
    }
    let mut b = ensemble.apply_vec(x_star);
    for bi in b.iter_mut() {
        *bi = *bi * *bi;
    }
    Ok(b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CorruptionKind {
    Zero,
    Cauchy,
    Constant(f64),
}

/// Whether corruptions are drawn independently of the ensemble or may depend
/// on it. Only independent corruptions are instantiated; the adversarial
/// variant exists as metadata (plus the constant kind) for labeling runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorruptionModel {
    Independent,
    AdversarialCapable,
}

#[derive(Clone, Copy, Debug)]
pub struct CorruptionSpec {
    pub p_fail: f64,
    pub kind: CorruptionKind,
    pub model: CorruptionModel,
}

impl CorruptionSpec {
    pub fn new(p_fail: f64, kind: CorruptionKind) -> Self {
        assert!(
            (0.0..0.5).contains(&p_fail),
            "p_fail must lie in [0, 0.5), got {p_fail}"
        );
        Self {
            p_fail,
            kind,
            model: CorruptionModel::Independent,
        }
    }
}

/// Measurements after corruption, with the (algorithm-invisible) mask kept
/// for evaluation.
#[derive(Clone, Debug)]
pub struct Observations {
    pub b: Vec<f64>,
    pub outlier_mask: Vec<bool>,
    pub spec: CorruptionSpec,
    pub truth: Option<GroundTruth>,
}

/// Replaces ⌊p_fail·m⌋ entries of b, at indices drawn uniformly without
/// replacement, by the corruption value: 0, a standard Cauchy draw, or a
/// constant. Cauchy draws are not clipped; the ℓ₁ objective handles sign.
pub fn corrupt(b: &[f64], spec: CorruptionSpec, rng: &mut SeededRng) -> Observations {
    let m = b.len();
    let count = (spec.p_fail * m as f64).floor() as usize;
    let mut out = b.to_vec();
    let mut mask = vec![false; m];
    let mut chosen = rng.distinct_indices(m, count);
    chosen.sort_unstable();
    for &i in &chosen {
        mask[i] = true;
        out[i] = match spec.kind {
            CorruptionKind::Zero => 0.0,
            CorruptionKind::Cauchy => rng.cauchy(1.0),
            CorruptionKind::Constant(v) => v,
        };
    }
    Observations {
        b: out,
        outlier_mask: mask,
        spec,
        truth: None,
    }
}

/// Rescales a dense ensemble to unit-norm rows and b accordingly
/// (a_i ↦ a_i/‖a_i‖, b_i ↦ b_i/‖a_i‖²), preserving b_i = ⟨a_i, x⋆⟩² on
/// uncorrupted entries.
pub fn normalize_measurements(
    ensemble: &MeasurementEnsemble,
    b: &[f64],
) -> Result<(MeasurementEnsemble, Vec<f64>)> {
    let MeasurementEnsemble::Dense { m, n, rows } = ensemble else {
        return Err(Error::RequiresDense);
    };
    if b.len() != *m {
        return Err(Error::LengthMismatch(b.len(), *m));
    }
    let mut new_rows = rows.clone();
    let mut new_b = b.to_vec();
    for i in 0..*m {
        let row = &mut new_rows[i * n..(i + 1) * n];
        let nrm = norm2(row);
        if nrm == 0.0 {
            return Err(Error::ZeroRow(i));
        }
        for e in row.iter_mut() {
            *e /= nrm;
        }
        new_b[i] /= nrm * nrm;
    }
    Ok((
        MeasurementEnsemble::Dense {
            m: *m,
            n: *n,
            rows: new_rows,
        },
        new_b,
    ))
}

/// ‖AᵀA‖/m estimated by power iteration (tolerance 1e-6) on the Gram
/// operator v ↦ Aᵀ(Av)/m.
pub fn operator_norm_over_m(ensemble: &MeasurementEnsemble, rng: &mut SeededRng) -> Result<f64> {
    let op = gram_over_m(ensemble);
    power_iteration(&op, rng, 1e-6, 5000).map(|(lambda, _)| lambda)
}

/// The operator v ↦ AᵀAv/m.
pub fn gram_over_m(ensemble: &MeasurementEnsemble) -> impl SymmetricOperator + '_ {
    let m = ensemble.m() as f64;
    FnOperator {
        n: ensemble.n(),
        f: move |v: &[f64], out: &mut [f64]| {
            let z = ensemble.apply_vec(v);
            ensemble.apply_adjoint(&z, out);
            for oi in out.iter_mut() {
                *oi /= m;
            }
        },
    }
}

/// (1/m)·Aᵀ diag(mask) A v, the selected-row Gram operator used by the
/// spectral initializers.
pub fn masked_gram_apply(
    ensemble: &MeasurementEnsemble,
    mask: &[bool],
    v: &[f64],
) -> Result<Vec<f64>> {
    if mask.len() != ensemble.m() {
        return Err(Error::LengthMismatch(mask.len(), ensemble.m()));
    }
    if v.len() != ensemble.n() {
        return Err(Error::LengthMismatch(v.len(), ensemble.n()));
    }
    let weights: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    Ok(WeightedGram {
        ensemble,
        weights: &weights,
    }
    .apply_vec(v))
}

/// (1/m)·Σ_i w_i a_i a_iᵀ as a matrix-free symmetric operator.
pub struct WeightedGram<'a> {
    pub ensemble: &'a MeasurementEnsemble,
    pub weights: &'a [f64],
}

impl SymmetricOperator for WeightedGram<'_> {
    fn dim(&self) -> usize {
        self.ensemble.n()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let m = self.ensemble.m() as f64;
        let mut z = self.ensemble.apply_vec(v);
        for (zi, wi) in z.iter_mut().zip(self.weights) {
            *zi *= wi;
        }
        self.ensemble.apply_adjoint(&z, out);
        for oi in out.iter_mut() {
            *oi /= m;
        }
    }
}

/// Masked Gram operator (1/m)·Σ_{mask} a_i a_iᵀ, owning its mask weights.
pub struct MaskedGram<'a> {
    ensemble: &'a MeasurementEnsemble,
    weights: Vec<f64>,
}

impl<'a> MaskedGram<'a> {
    pub fn new(ensemble: &'a MeasurementEnsemble, mask: &[bool]) -> Self {
        assert_eq!(mask.len(), ensemble.m());
        Self {
            ensemble,
            weights: mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

impl SymmetricOperator for MaskedGram<'_> {
    fn dim(&self) -> usize {
        self.ensemble.n()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        WeightedGram {
            ensemble: self.ensemble,
            weights: &self.weights,
        }
        .apply(v, out)
    }
}

/// Reads a signal from disk: CSV (one real per line) or binary 8-bit P5 PGM
/// with pixels mapped to [0,1] row-major. `target_n`, when given, zero-pads
/// up to the requested length (useful for power-of-two Hadamard sensing).
pub fn ingest_signal(
    path: &Path,
    format: SignalFormat,
    target_n: Option<usize>,
) -> Result<GroundTruth> {
    let mut x = match format {
        SignalFormat::Csv => parse_signal_csv(&std::fs::read_to_string(path)?)?,
        SignalFormat::Pgm => parse_pgm(&std::fs::read(path)?)?,
    };
    if let Some(n) = target_n {
        if n < x.len() {
            return Err(Error::SignalFormat(format!(
                "target_n = {n} is smaller than the {} samples read",
                x.len()
            )));
        }
        x.resize(n, 0.0);
    }
    Ok(GroundTruth {
        x_star: x,
        mode: SignalMode::FromFile,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalFormat {
    Csv,
    Pgm,
}

fn parse_signal_csv(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::SignalFormat(format!("line {}: not a real: {t:?}", lineno + 1)))?;
        if !v.is_finite() {
            return Err(Error::SignalFormat(format!(
                "line {}: non-finite value",
                lineno + 1
            )));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::SignalFormat("no samples in file".into()));
    }
    Ok(out)
}

fn parse_pgm(bytes: &[u8]) -> Result<Vec<f64>> {
    let mut pos = 0usize;
    let mut next_token = |bytes: &[u8]| -> Result<String> {
        // Skip whitespace and '#' comment lines between header tokens.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::SignalFormat("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token(bytes)?;
    if magic != "P5" {
        return Err(Error::SignalFormat(format!(
            "expected binary PGM magic P5, got {magic:?}"
        )));
    }
    let width: usize = next_token(bytes)?
        .parse()
        .map_err(|_| Error::SignalFormat("bad width".into()))?;
    let height: usize = next_token(bytes)?
        .parse()
        .map_err(|_| Error::SignalFormat("bad height".into()))?;
    let maxval: usize = next_token(bytes)?
        .parse()
        .map_err(|_| Error::SignalFormat("bad maxval".into()))?;
    if maxval != 255 {
        return Err(Error::SignalFormat(format!(
            "only 8-bit PGM (maxval 255) is supported, got {maxval}"
        )));
    }
    // Exactly one whitespace byte separates the header from pixel data.
    pos += 1;
    let need = width * height;
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| Error::SignalFormat("truncated pixel data".into()))?;
    Ok(data.iter().map(|&p| p as f64 / 255.0).collect())
}
