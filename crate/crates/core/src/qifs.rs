//! QIFS models: branch maps, state-dependent weights, the nonlinear operator
//! `Λ`, the dual operator on observables, words and partial entropies.

use rayon::prelude::*;

use crate::error::{QifsError, Result};
use crate::matcore::{
    ensure_square, eta_clamped, identity, max_abs, real_trace, sandwich, sandwich_trace,
    ComplexMatrix, DensityMatrix, EntropyScalar,
};

/// Below this, `tr(V_i rho V_i*)` is treated as zero.
pub const BRANCH_FLOOR: f64 = 1e-12;
/// Largest word count enumerated exactly.
pub const ENUMERATION_CAP: u64 = 1_000_000;
/// Tolerance on `max |sum K*K - I|` for the normalized flag.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// An ordered list of equally sized square matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausFamily {
    dim: usize,
    ops: Vec<ComplexMatrix>,
    deviation: f64,
}

impl KrausFamily {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops.first().ok_or(QifsError::EmptyFamily)?;
        let dim = ensure_square(first)?;
        for op in &ops {
            let n = ensure_square(op)?;
            if n != dim {
                return Err(QifsError::DimensionMismatch { expected: dim, found: n });
            }
        }
        let gram: ComplexMatrix = ops.iter().map(|k| k.adjoint() * k).sum();
        let deviation = max_abs(&(gram - identity(dim)));
        Ok(KrausFamily { dim, ops, deviation })
    }

    /// Like [`KrausFamily::new`] but rejects families with `sum K*K != I`.
    pub fn new_normalized(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let fam = Self::new(ops)?;
        if !fam.is_normalized() {
            return Err(QifsError::NotNormalized { deviation: fam.deviation });
        }
        Ok(fam)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn op(&self, i: usize) -> &ComplexMatrix {
        &self.ops[i]
    }

    pub fn is_normalized(&self) -> bool {
        self.deviation <= NORMALIZATION_TOL
    }

    /// `max |sum K*K - I|`.
    pub fn normalization_deviation(&self) -> f64 {
        self.deviation
    }

    /// Every operator satisfies `K K* = I` within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let id = identity(self.dim);
        self.ops.iter().all(|k| max_abs(&(k * k.adjoint() - &id)) <= tol)
    }

    /// Every operator is a multiple of the identity within `tol`.
    pub fn is_scalar(&self, tol: f64) -> bool {
        self.ops.iter().all(|k| {
            let c = k[(0, 0)];
            max_abs(&(k - identity(self.dim) * c)) <= tol
        })
    }

    /// Entrywise scaling of every operator.
    pub fn scaled(&self, s: f64) -> KrausFamily {
        KrausFamily::new(self.ops.iter().map(|k| k.scale(s)).collect())
            .expect("scaling preserves shape")
    }

    fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.dim {
            return Err(QifsError::DimensionMismatch { expected: self.dim, found: rho.dim() });
        }
        Ok(())
    }
}

/// Homogeneous image `sum V_i rho V_i*`; trace one iff `V` is normalized.
pub fn lambda_homogeneous(v: &KrausFamily, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    v.check_state(rho)?;
    Ok(v.ops.iter().map(|k| sandwich(k, rho.matrix())).sum())
}

/// A sequence of branch indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>, arity: usize) -> Result<Self> {
        if letters.is_empty() {
            return Err(QifsError::InvalidArgument("empty word".into()));
        }
        if let Some(&bad) = letters.iter().find(|&&l| l >= arity) {
            return Err(QifsError::InvalidArgument(format!(
                "letter {bad} out of range for arity {arity}"
            )));
        }
        Ok(Word(letters))
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `rho -> Re tr(A rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctional(pub ComplexMatrix);

impl LinearFunctional {
    pub fn eval(&self, rho: &DensityMatrix) -> f64 {
        let a = &self.0;
        let r = rho.matrix();
        let n = r.nrows();
        let mut t = 0.0;
        for i in 0..n {
            for k in 0..n {
                t += (a[(i, k)] * r[(k, i)]).re;
            }
        }
        t
    }
}

/// `a_ij = tr(W_j V_i rho V_i* W_j*) / tr(V_i rho V_i*)` together with `p_i(rho)`.
/// Rows of branches that are degenerate with zero weight are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchTransitions {
    pub probs: Vec<f64>,
    pub rows: Vec<Option<Vec<f64>>>,
}

/// A QIFS: dynamics `V` and normalized weights `W` of equal arity and dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct QifsModel {
    v: KrausFamily,
    w: KrausFamily,
}

impl QifsModel {
    pub fn new(v: KrausFamily, w: KrausFamily) -> Result<Self> {
        if v.dim != w.dim {
            return Err(QifsError::DimensionMismatch { expected: v.dim, found: w.dim });
        }
        if v.arity() != w.arity() {
            return Err(QifsError::ArityMismatch { expected: v.arity(), found: w.arity() });
        }
        if !w.is_normalized() {
            return Err(QifsError::NotNormalized { deviation: w.deviation });
        }
        Ok(QifsModel { v, w })
    }

    /// `W = V`; requires `V` normalized.
    pub fn homogeneous(v: KrausFamily) -> Result<Self> {
        Self::new(v.clone(), v)
    }

    pub fn v(&self) -> &KrausFamily {
        &self.v
    }

    pub fn w(&self) -> &KrausFamily {
        &self.w
    }

    pub fn arity(&self) -> usize {
        self.v.arity()
    }

    pub fn dim(&self) -> usize {
        self.v.dim
    }

    fn check(&self, i: usize, rho: &DensityMatrix) -> Result<()> {
        self.v.check_state(rho)?;
        if i >= self.arity() {
            return Err(QifsError::InvalidArgument(format!(
                "branch {i} out of range for arity {}",
                self.arity()
            )));
        }
        Ok(())
    }

    /// `p_i(rho) = tr(W_i rho W_i*)`.
    pub fn branch_prob(&self, i: usize, rho: &DensityMatrix) -> Result<f64> {
        self.check(i, rho)?;
        Ok(self.prob_unchecked(i, rho.matrix()))
    }

    fn prob_unchecked(&self, i: usize, rho: &ComplexMatrix) -> f64 {
        sandwich_trace(&self.w.ops[i], rho).max(0.0)
    }

    pub fn branch_probs(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.v.check_state(rho)?;
        Ok((0..self.arity()).map(|i| self.prob_unchecked(i, rho.matrix())).collect())
    }

    /// `F_i(rho) = V_i rho V_i* / tr(V_i rho V_i*)`.
    pub fn branch_map(&self, i: usize, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check(i, rho)?;
        let img = sandwich(&self.v.ops[i], rho.matrix());
        let t = real_trace(&img);
        if t <= BRANCH_FLOOR {
            return Err(QifsError::DegenerateBranch {
                branch: i,
                trace: t,
                weight: self.prob_unchecked(i, rho.matrix()),
            });
        }
        Ok(DensityMatrix::from_positive(img).expect("positive trace"))
    }

    /// Image under `F_i` paired with `p_i`, or `None` for a degenerate zero-weight branch.
    pub(crate) fn step(&self, i: usize, rho: &DensityMatrix) -> Result<Option<(f64, DensityMatrix)>> {
        let p = self.prob_unchecked(i, rho.matrix());
        let img = sandwich(&self.v.ops[i], rho.matrix());
        let t = real_trace(&img);
        if t <= BRANCH_FLOOR {
            if p <= BRANCH_FLOOR {
                return Ok(None);
            }
            return Err(QifsError::DegenerateBranch { branch: i, trace: t, weight: p });
        }
        Ok(Some((p, DensityMatrix::from_positive(img).expect("positive trace"))))
    }

    /// `Λ(rho) = sum_i p_i(rho) F_i(rho)`.
    pub fn lambda_apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.v.check_state(rho)?;
        let n = self.dim();
        let mut acc = ComplexMatrix::zeros(n, n);
        for i in 0..self.arity() {
            let p = self.prob_unchecked(i, rho.matrix());
            let img = sandwich(&self.v.ops[i], rho.matrix());
            let t = real_trace(&img);
            if t <= BRANCH_FLOOR {
                if p <= BRANCH_FLOOR {
                    continue;
                }
                return Err(QifsError::DegenerateBranch { branch: i, trace: t, weight: p });
            }
            acc += img.scale(p / t);
        }
        Ok(DensityMatrix::from_positive(acc).expect("weights sum to one"))
    }

    /// `(U f)(rho) = sum_i p_i(rho) f(F_i(rho))`.
    pub fn dual_apply<F>(&self, mut f: F, rho: &DensityMatrix) -> Result<f64>
    where
        F: FnMut(&DensityMatrix) -> f64,
    {
        self.v.check_state(rho)?;
        let mut total = 0.0;
        for i in 0..self.arity() {
            if let Some((p, img)) = self.step(i, rho)? {
                total += p * f(&img);
            }
        }
        Ok(total)
    }

    /// `h(rho) = sum_i eta(p_i(rho))`, Shannon entropy of the branch weights.
    pub fn shannon_h(&self, rho: &DensityMatrix) -> f64 {
        (0..self.arity())
            .map(|i| eta_clamped(self.prob_unchecked(i, rho.matrix())))
            .sum()
    }

    /// Branch weights and the transition rows `a_ij = p_j(F_i(rho))`.
    pub fn transitions(&self, rho: &DensityMatrix) -> Result<BranchTransitions> {
        self.v.check_state(rho)?;
        let k = self.arity();
        let mut probs = Vec::with_capacity(k);
        let mut rows = Vec::with_capacity(k);
        for i in 0..k {
            probs.push(self.prob_unchecked(i, rho.matrix()));
            rows.push(
                self.step(i, rho)?
                    .map(|(_, img)| (0..k).map(|j| self.prob_unchecked(j, img.matrix())).collect()),
            );
        }
        Ok(BranchTransitions { probs, rows })
    }

    /// `(p_ι(rho), F_ι(rho))`, letters applied left to right. A word that
    /// reaches zero weight returns `(0, last state)`.
    pub fn word_prob_and_map(&self, word: &Word, rho: &DensityMatrix) -> Result<(f64, DensityMatrix)> {
        self.v.check_state(rho)?;
        if let Some(&bad) = word.0.iter().find(|&&l| l >= self.arity()) {
            return Err(QifsError::InvalidArgument(format!("letter {bad} out of range")));
        }
        let mut prob = 1.0;
        let mut state = rho.clone();
        for &i in &word.0 {
            match self.step(i, &state)? {
                Some((p, img)) if p * prob > 0.0 => {
                    prob *= p;
                    state = img;
                }
                _ => return Ok((0.0, state)),
            }
        }
        Ok((prob, state))
    }

    fn check_cap(&self, n: usize) -> Result<()> {
        let words = (self.arity() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if words > ENUMERATION_CAP as u128 {
            return Err(QifsError::CapExceeded { words, cap: ENUMERATION_CAP });
        }
        Ok(())
    }

    /// Depth-first walk over all words of length `n`, sharing prefixes.
    /// `leaf` receives `(p_ι, F_ι(rho))`; a subtree whose weight vanished
    /// is reported once through `pruned` with its (zero or sub-floor) weight.
    fn walk<L, P>(&self, depth: usize, prob: f64, state: &DensityMatrix, leaf: &L, pruned: &P) -> Result<f64>
    where
        L: Fn(f64, &DensityMatrix) -> f64 + Sync,
        P: Fn(f64) -> f64 + Sync,
    {
        if depth == 0 {
            return Ok(leaf(prob, state));
        }
        let mut total = 0.0;
        for i in 0..self.arity() {
            match self.step(i, state)? {
                Some((p, img)) if p * prob > 0.0 => {
                    total += self.walk(depth - 1, prob * p, &img, leaf, pruned)?;
                }
                Some((p, _)) => total += pruned(p * prob),
                None => total += pruned(self.prob_unchecked(i, state.matrix()) * prob),
            }
        }
        Ok(total)
    }

    fn enumerate<L, P>(&self, rho: &DensityMatrix, n: usize, leaf: L, pruned: P) -> Result<f64>
    where
        L: Fn(f64, &DensityMatrix) -> f64 + Sync,
        P: Fn(f64) -> f64 + Sync,
    {
        self.v.check_state(rho)?;
        self.check_cap(n)?;
        if n == 0 {
            return Ok(leaf(1.0, rho));
        }
        let parts: Result<Vec<f64>> = (0..self.arity())
            .into_par_iter()
            .map(|i| match self.step(i, rho)? {
                Some((p, img)) if p > 0.0 => self.walk(n - 1, p, &img, &leaf, &pruned),
                Some((p, _)) => Ok(pruned(p)),
                None => Ok(pruned(self.prob_unchecked(i, rho.matrix()))),
            })
            .collect();
        Ok(parts?.into_iter().sum())
    }

    /// `H_n(rho) = sum over words of length n of eta(p_ι(rho))`.
    pub fn partial_entropy(&self, rho: &DensityMatrix, n: usize) -> Result<EntropyScalar> {
        if n == 0 {
            self.v.check_state(rho)?;
            return Ok(EntropyScalar::from_sum(0.0));
        }
        let h = self.enumerate(rho, n, |p, _| eta_clamped(p), |w| eta_clamped(w))?;
        Ok(EntropyScalar::from_sum(h))
    }

    /// `(U^n h)(rho) = sum over words of p_ι(rho) h(F_ι(rho))`.
    pub fn iterated_dual_entropy(&self, rho: &DensityMatrix, n: usize) -> Result<EntropyScalar> {
        let h = self.enumerate(rho, n, |p, s| p * self.shannon_h(s), |_| 0.0)?;
        Ok(EntropyScalar::from_sum(h))
    }
}
