//! Ensembles induced by a QIFS, Holevo information and measurement statistics.

use nalgebra::DMatrix;

use crate::error::{QifsError, Result};
use crate::matcore::{
    hermitian_eigenvalues, identity, max_abs, shannon_entropy, von_neumann_entropy, ComplexMatrix,
    DensityMatrix, EntropyScalar,
};
use crate::qifs::{KrausFamily, QifsModel, NORMALIZATION_TOL};

const PROB_TOL: f64 = 1e-12;
const POVM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    states: Vec<DensityMatrix>,
    probs: Vec<f64>,
}

impl Ensemble {
    pub fn new(states: Vec<DensityMatrix>, probs: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(QifsError::EmptyFamily);
        }
        if states.len() != probs.len() {
            return Err(QifsError::ArityMismatch { expected: states.len(), found: probs.len() });
        }
        let n = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != n) {
            return Err(QifsError::DimensionMismatch { expected: n, found: s.dim() });
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(QifsError::InvalidArgument("ensemble weights must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(QifsError::InvalidArgument(format!("ensemble weights sum to {total}")));
        }
        Ok(Ensemble { states, probs })
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// `sum_i p_i rho_i`.
    pub fn average(&self) -> DensityMatrix {
        let n = self.dim();
        let mut acc = ComplexMatrix::zeros(n, n);
        for (s, p) in self.states.iter().zip(&self.probs) {
            acc += s.matrix().scale(*p);
        }
        DensityMatrix::from_positive(acc).expect("convex combination")
    }

    /// `sum_i p_i S(rho_i)`.
    pub fn average_entropy(&self) -> f64 {
        self.states
            .iter()
            .zip(&self.probs)
            .map(|(s, p)| p * von_neumann_entropy(s).value())
            .sum()
    }
}

/// Label-space ensemble `rho_i = sum_j a_ij(rho_W) |j><j|` with weights
/// `p_i(rho_W)`. The states are `k x k`, one basis vector per branch. A
/// degenerate branch of zero weight gets the uniform label state.
pub fn induced_ensemble(m: &QifsModel, rho_w: &DensityMatrix) -> Result<Ensemble> {
    let tr = m.transitions(rho_w)?;
    let k = m.arity();
    let total: f64 = tr.probs.iter().sum();
    let probs: Vec<f64> = tr.probs.iter().map(|p| p / total).collect();
    let states = tr
        .rows
        .into_iter()
        .map(|row| match row {
            Some(r) => {
                let s: f64 = r.iter().sum();
                let d: Vec<f64> = r.iter().map(|x| x / s).collect();
                DensityMatrix::diagonal(&d)
            }
            None => Ok(DensityMatrix::maximally_mixed(k)),
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(states, probs)
}

/// `xi = S(sum p_i rho_i) - sum p_i S(rho_i)`.
pub fn holevo_information(e: &Ensemble) -> f64 {
    von_neumann_entropy(&e.average()).value() - e.average_entropy()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let n = elements.first().ok_or(QifsError::EmptyFamily)?.nrows();
        let mut sum = ComplexMatrix::zeros(n, n);
        for e in &elements {
            if e.nrows() != n || e.ncols() != n {
                return Err(QifsError::DimensionMismatch { expected: n, found: e.nrows().max(e.ncols()) });
            }
            if max_abs(&(e - e.adjoint())) > POVM_TOL {
                return Err(QifsError::InvalidArgument("POVM element is not Hermitian".into()));
            }
            if let Some(&min) = hermitian_eigenvalues(e).first() {
                if min < -POVM_TOL {
                    return Err(QifsError::InvalidArgument(format!("POVM element has eigenvalue {min}")));
                }
            }
            sum += e;
        }
        let deviation = max_abs(&(sum - identity(n)));
        if deviation > POVM_TOL {
            return Err(QifsError::NotNormalized { deviation });
        }
        Ok(Povm { elements })
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    /// `tr(E_y rho)` for every outcome.
    pub fn outcome_probs(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(QifsError::DimensionMismatch { expected: self.dim(), found: rho.dim() });
        }
        Ok(self.elements.iter().map(|e| (e * rho.matrix()).trace().re.max(0.0)).collect())
    }

    /// Diagonal label-space POVM `P_y = sum_j tr(E_y sigma_j) |j><j|`. Each
    /// branch `j` is probed by the system state `sigma_j`, so outcome `y`
    /// given label `j` occurs with the Born probability of `sigma_j`.
    pub fn lift_to_labels(&self, probes: &[DensityMatrix]) -> Result<Povm> {
        let k = probes.len();
        let mut elements = vec![ComplexMatrix::zeros(k, k); self.elements.len()];
        for (j, s) in probes.iter().enumerate() {
            for (y, p) in self.outcome_probs(s)?.into_iter().enumerate() {
                elements[y][(j, j)] = p.into();
            }
        }
        // Rounding can leave column sums a few ulps from one.
        for j in 0..k {
            let s: f64 = elements.iter().map(|e| e[(j, j)].re).sum();
            for e in &mut elements {
                e[(j, j)] /= s;
            }
        }
        Povm::new(elements)
    }
}

/// `E_i = W_i* W_i`.
pub fn povm_from_weights(w: &KrausFamily) -> Result<Povm> {
    if w.normalization_deviation() > NORMALIZATION_TOL {
        return Err(QifsError::NotNormalized { deviation: w.normalization_deviation() });
    }
    Povm::new(w.ops().iter().map(|op| op.adjoint() * op).collect())
}

/// `p(x, y) = p_x tr(E_y rho_x)`, rows indexed by `x`.
pub fn born_joint(e: &Ensemble, povm: &Povm) -> Result<DMatrix<f64>> {
    let mut joint = DMatrix::zeros(e.len(), povm.elements().len());
    for (x, (s, p)) in e.states().iter().zip(e.probs()).enumerate() {
        for (y, q) in povm.outcome_probs(s)?.into_iter().enumerate() {
            joint[(x, y)] = p * q;
        }
    }
    Ok(joint)
}

/// `I(X:Y) = H(X) + H(Y) - H(X,Y)`.
pub fn mutual_information(joint: &DMatrix<f64>) -> Result<EntropyScalar> {
    if joint.iter().any(|x| !(*x >= 0.0)) {
        return Err(QifsError::InvalidArgument("joint distribution has negative entries".into()));
    }
    let total = joint.sum();
    if (total - 1.0).abs() > POVM_TOL {
        return Err(QifsError::InvalidArgument(format!("joint distribution sums to {total}")));
    }
    let px: Vec<f64> = joint.row_iter().map(|r| r.sum()).collect();
    let py: Vec<f64> = joint.column_iter().map(|c| c.sum()).collect();
    let pxy: Vec<f64> = joint.iter().copied().collect();
    Ok(EntropyScalar::from_sum(shannon_entropy(&px) + shannon_entropy(&py) - shannon_entropy(&pxy)))
}
