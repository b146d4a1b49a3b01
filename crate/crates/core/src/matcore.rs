//! Dense complex matrices, density matrices, distances and entropy kernels.
//!
//! Everything here works on small square matrices (N up to roughly 8). The
//! carrier type is [`ComplexMatrix`], a plain `nalgebra` matrix; validated
//! states are wrapped in [`DensityMatrix`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QifsError, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Tolerances applied when validating a [`DensityMatrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max entrywise `|m - m*|`.
    pub herm: f64,
    /// Smallest eigenvalue may dip this far below zero.
    pub psd: f64,
    /// Max `|tr m - 1|`.
    pub unit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-10,
            psd: 1e-10,
            unit: 1e-10,
        }
    }
}

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a complex matrix from real rows.
pub fn real_matrix(rows: &[&[f64]]) -> ComplexMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, m, |i, j| c64(rows[i][j], 0.0))
}

/// Builds a complex matrix from rows of `(re, im)` pairs.
pub fn complex_matrix(rows: &[&[(f64, f64)]]) -> ComplexMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, m, |i, j| c64(rows[i][j].0, rows[i][j].1))
}

pub fn identity(n: usize) -> ComplexMatrix {
    DMatrix::identity(n, n)
}

/// `|i><j|` in dimension `n`.
pub fn unit_matrix(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = c64(1.0, 0.0);
    m
}

pub fn diag_real(d: &[f64]) -> ComplexMatrix {
    let n = d.len();
    DMatrix::from_fn(n, n, |i, j| if i == j { c64(d[i], 0.0) } else { c64(0.0, 0.0) })
}

pub fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(QifsError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Real part of the trace.
#[inline]
pub fn real_trace(m: &ComplexMatrix) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

/// `a rho a*`.
#[inline]
pub fn sandwich(a: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    a * rho * a.adjoint()
}

/// `tr(a rho a*)` without forming the product's off-diagonal entries twice.
#[inline]
pub fn sandwich_trace(a: &ComplexMatrix, rho: &ComplexMatrix) -> f64 {
    let ar = a * rho;
    let n = a.nrows();
    let mut t = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            t += (ar[(i, k)] * a[(i, k)].conj()).re;
        }
    }
    t
}

/// `(m + m*) / 2`.
pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending, eigenvectors as columns.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Principal square root of a PSD matrix; negative eigenvalues are clamped to zero.
pub fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let d = diag_real(&values.iter().map(|&l| l.max(0.0).sqrt()).collect::<Vec<_>>());
    &vectors * d * vectors.adjoint()
}

/// Column-major vectorization.
pub fn vec_col(m: &ComplexMatrix) -> ComplexVector {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_col`].
pub fn unvec_col(v: &ComplexVector, n: usize) -> ComplexMatrix {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// A validated density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(mat, &Tolerances::default())
    }

    pub fn with_tolerances(mat: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        ensure_square(&mat)?;
        let asym = max_abs(&(&mat - mat.adjoint()));
        if !(asym <= tol.herm) {
            return Err(QifsError::InvalidState(format!(
                "not Hermitian (max |m - m*| = {asym:e})"
            )));
        }
        let tr = mat.trace();
        if !((tr.re - 1.0).abs() <= tol.unit && tr.im.abs() <= tol.unit) {
            return Err(QifsError::InvalidState(format!("trace is {tr}, not 1")));
        }
        let mat = hermitize(&mat);
        let min_eig = hermitian_eigenvalues(&mat)[0];
        if !(min_eig >= -tol.psd) {
            return Err(QifsError::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(DensityMatrix { mat })
    }

    /// `I / n`.
    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix {
            mat: identity(n).scale(1.0 / n as f64),
        }
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        if d.is_empty() {
            return Err(QifsError::InvalidState("empty diagonal".into()));
        }
        Self::new(diag_real(d))
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let v = ComplexVector::from_column_slice(psi);
        let n2 = v.norm_squared();
        if !(n2 > 0.0) {
            return Err(QifsError::InvalidState("zero state vector".into()));
        }
        Ok(DensityMatrix {
            mat: (&v * v.adjoint()).scale(1.0 / n2),
        })
    }

    /// Wraps the output of a positive map: hermitizes and rescales to unit
    /// trace. The caller guarantees positivity; the trace must be positive.
    pub(crate) fn from_positive(mat: ComplexMatrix) -> Option<Self> {
        let tr = real_trace(&mat);
        if !(tr > 0.0) || !tr.is_finite() {
            return None;
        }
        let mut h = hermitize(&mat);
        h.scale_mut(1.0 / tr);
        Some(DensityMatrix { mat: h })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }

    /// Largest off-diagonal modulus.
    pub fn off_diagonal_norm(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self.mat[(i, j)].norm());
                }
            }
        }
        m
    }
}

/// A nonnegative entropy value in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EntropyScalar(f64);

impl EntropyScalar {
    pub fn new(value: f64) -> Result<Self> {
        if !(value >= 0.0) {
            return Err(QifsError::Domain(format!("entropy must be nonnegative, got {value}")));
        }
        Ok(EntropyScalar(value))
    }

    /// Sums of `eta` terms can land a few ulps below zero.
    pub(crate) fn from_sum(value: f64) -> Self {
        EntropyScalar(if value < 0.0 && value > -1e-12 { 0.0 } else { value })
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn bits(self) -> f64 {
        self.0 / std::f64::consts::LN_2
    }
}

/// `eta(x) = -x ln x`, with `eta(0) = 0`.
pub fn eta(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(QifsError::Domain(format!("eta is defined on x >= 0, got {x}")));
    }
    Ok(eta_clamped(x))
}

/// `eta` for values that are nonnegative up to rounding.
#[inline]
pub(crate) fn eta_clamped(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Shannon entropy of a probability vector (nats).
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().map(|&x| eta_clamped(x)).sum()
}

/// `S(rho) = -tr(rho ln rho)`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> EntropyScalar {
    EntropyScalar::from_sum(rho.eigenvalues().into_iter().map(eta_clamped).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    HilbertSchmidt,
    Trace,
    Bures,
}

/// Frobenius norm of `a - b`; equals the Hilbert-Schmidt distance on Hermitian inputs.
#[inline]
pub fn hs_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn distance(a: &DensityMatrix, b: &DensityMatrix, kind: DistanceKind) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(QifsError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(match kind {
        DistanceKind::HilbertSchmidt => hs_distance(a.matrix(), b.matrix()),
        DistanceKind::Trace => hermitian_eigenvalues(&(a.matrix() - b.matrix()))
            .iter()
            .map(|l| l.abs())
            .sum(),
        DistanceKind::Bures => {
            let ra = psd_sqrt(a.matrix());
            let inner = &ra * b.matrix() * &ra;
            let fidelity: f64 = hermitian_eigenvalues(&inner)
                .iter()
                .map(|l| l.max(0.0).sqrt())
                .sum();
            (2.0 * (1.0 - fidelity).max(0.0)).sqrt()
        }
    })
}

/// Dominant eigenpair of a square matrix with a real leading eigenvalue.
///
/// Power iteration first; if that stalls (equal-modulus competitors, bad
/// start vector) a dense Schur/SVD route takes over. The eigenvector is scaled
/// to unit 1-norm with its largest entry real and positive, so a nonnegative
/// matrix yields a nonnegative Perron vector.
pub fn dominant_eigenpair(m: &ComplexMatrix) -> Result<(f64, ComplexVector)> {
    dominant_eigenpair_with(m, 1e-12, 20_000)
}

pub fn dominant_eigenpair_with(
    m: &ComplexMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, ComplexVector)> {
    let n = ensure_square(m)?;
    let mut v = ComplexVector::from_element(n, c64(1.0 / (n as f64).sqrt(), 0.0));
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let w = m * &v;
        let lambda = v.dotc(&w);
        residual = (&w - &v * lambda).norm();
        if residual <= tol * lambda.norm().max(1.0) {
            if lambda.im.abs() <= tol.sqrt() * lambda.norm().max(1.0) {
                return Ok((lambda.re, normalize_phase(v)));
            }
            break;
        }
        let wn = w.norm();
        if wn == 0.0 {
            return Ok((0.0, normalize_phase(v)));
        }
        v = w.unscale(wn);
    }
    dense_dominant(m, tol).ok_or(QifsError::NonConvergence {
        iterations: max_iter,
        residual,
    })
}

fn dense_dominant(m: &ComplexMatrix, tol: f64) -> Option<(f64, ComplexVector)> {
    let n = m.nrows();
    let eigs = m.clone().schur().eigenvalues()?;
    let rho = eigs.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    let scale = rho.max(1.0);
    let lambda = eigs
        .iter()
        .filter(|z| z.norm() >= rho - 1e-9 * scale && z.im.abs() <= 1e-8 * scale)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !lambda.is_finite() {
        return None;
    }
    let shifted = m - identity(n).scale(lambda);
    let svd = shifted.svd(false, true);
    let vt = svd.v_t?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let v = ComplexVector::from_fn(n, |i, _| vt[(idx, i)].conj());
    let res = (m * &v - &v * c64(lambda, 0.0)).norm() / v.norm();
    if res <= tol.max(1e-12) * scale * 10.0 {
        Some((lambda, normalize_phase(v)))
    } else {
        None
    }
}

fn normalize_phase(v: ComplexVector) -> ComplexVector {
    let (imax, _) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("nonempty vector");
    let pivot = v[imax];
    if pivot.norm() == 0.0 {
        return v;
    }
    let phase = pivot.conj() / pivot.norm();
    let mut w = v * phase;
    let l1: f64 = w.iter().map(|z| z.norm()).sum();
    w.unscale_mut(l1);
    w
}
