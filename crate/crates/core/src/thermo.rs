//! Entropies, the pressure inequality in trace and coordinate form, the
//! classic inequality, maximizing weights and the capacity-cost search.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{QifsError, Result};
use crate::markov::stationary_vector;
use crate::matcore::{
    c64, dominant_eigenpair, eta_clamped, identity, psd_sqrt, real_trace, sandwich,
    sandwich_trace, ComplexMatrix, DensityMatrix, EntropyScalar,
};
use crate::qifs::{KrausFamily, QifsModel, BRANCH_FLOOR};
use crate::solvers::{solve_lambda_fixed_point, EigenResult, SolveConfig};

/// `rho_W` must satisfy `D_1(Λ(rho_W), rho_W)` below this before entropies are evaluated.
pub const FIXED_POINT_CHECK: f64 = 1e-8;
/// Smallest usable `|(rho_beta)_{lm}|` in the coordinate form.
pub const COORD_FLOOR: f64 = 1e-12;

/// Column-stochastic real matrix: nonnegative entries, every column sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    m: DMatrix<f64>,
}

impl StochasticMatrix {
    /// Entries given row by row; columns must sum to one.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(QifsError::NotSquare { rows: 0, cols: 0 });
        }
        for r in rows {
            if r.len() != n {
                return Err(QifsError::NotSquare { rows: n, cols: r.len() });
            }
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let n = cols.len();
        for c in cols {
            if c.len() != n {
                return Err(QifsError::NotSquare { rows: c.len(), cols: n });
            }
        }
        if n == 0 {
            return Err(QifsError::NotSquare { rows: 0, cols: 0 });
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(QifsError::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if let Some(x) = m.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(QifsError::InvalidArgument(format!("stochastic entries must be nonnegative, got {x}")));
        }
        for (j, col) in m.column_iter().enumerate() {
            let s: f64 = col.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(QifsError::InvalidArgument(format!("column {j} sums to {s}, not 1")));
            }
        }
        Ok(StochasticMatrix { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Entry `p_ij` (row `i`, column `j`): probability of moving from state `j` to `i`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn power(&self, n: u32) -> StochasticMatrix {
        let mut acc = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..n {
            acc = &self.m * acc;
        }
        StochasticMatrix { m: acc }
    }

    /// `(I + P)^dim` entrywise positive.
    pub fn is_irreducible(&self) -> bool {
        let n = self.dim();
        let step = DMatrix::identity(n, n) + &self.m;
        let mut acc = DMatrix::identity(n, n);
        for _ in 0..n {
            acc = &step * acc;
        }
        acc.iter().all(|x| *x > 0.0)
    }

    pub fn min_entry(&self) -> f64 {
        self.m.min()
    }
}

/// `H(P) = -sum_j pi_j sum_i p_ij ln p_ij` with `P pi = pi`.
pub fn markov_entropy(p: &StochasticMatrix) -> Result<EntropyScalar> {
    let pi = stationary_vector(p)?;
    let n = p.dim();
    let mut h = 0.0;
    for j in 0..n {
        h += pi[j] * (0..n).map(|i| eta_clamped(p.get(i, j))).sum::<f64>();
    }
    Ok(EntropyScalar::from_sum(h))
}

fn check_fixed_point(m: &QifsModel, rho_w: &DensityMatrix) -> Result<()> {
    let next = m.lambda_apply(rho_w)?;
    let residual = crate::matcore::hs_distance(next.matrix(), rho_w.matrix());
    if residual > FIXED_POINT_CHECK {
        return Err(QifsError::NotFixedPoint { residual });
    }
    Ok(())
}

/// `h_V(W) = -sum_i p_i(rho_W) sum_j a_ij ln a_ij`, evaluated at a solved fixed point of `Λ`.
pub fn qifs_entropy(m: &QifsModel, rho_w: &DensityMatrix) -> Result<EntropyScalar> {
    check_fixed_point(m, rho_w)?;
    m.iterated_dual_entropy(rho_w, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureForm {
    TraceForm,
    CoordinateForm { l: usize, m: usize },
    Classic,
}

/// Both sides of a pressure inequality and the equality diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureReport {
    pub entropy_term: f64,
    pub potential_term: f64,
    pub lhs: f64,
    pub log_beta: f64,
    /// `log_beta - lhs`; nonnegative up to rounding.
    pub gap: f64,
    pub equality_residual: f64,
    pub form: PressureForm,
}

impl PressureReport {
    fn new(entropy_term: f64, potential_term: f64, log_beta: f64, equality_residual: f64, form: PressureForm) -> Self {
        let lhs = entropy_term + potential_term;
        PressureReport {
            entropy_term,
            potential_term,
            lhs,
            log_beta,
            gap: log_beta - lhs,
            equality_residual,
            form,
        }
    }
}

fn check_potential(m: &QifsModel, h: &KrausFamily, eig: &EigenResult) -> Result<()> {
    if h.dim() != m.dim() || eig.rho_beta.dim() != m.dim() {
        return Err(QifsError::DimensionMismatch { expected: m.dim(), found: h.dim().max(eig.rho_beta.dim()) });
    }
    if h.arity() != m.arity() {
        return Err(QifsError::ArityMismatch { expected: m.arity(), found: h.arity() });
    }
    Ok(())
}

/// `sum_j p_j (ln x_j + ln y_j)`. Logs are added rather than taken of the
/// product so a tiny factor cannot underflow. Zero-weight branches with a
/// nonpositive factor are skipped; positive-weight ones go to `on_bad`.
fn weighted_log_sum(
    probs: &[f64],
    factors: impl Fn(usize) -> (f64, f64),
    on_bad: impl Fn(usize) -> QifsError,
) -> Result<f64> {
    let mut s = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        match factors(j) {
            (x, y) if x > 0.0 && y > 0.0 => s += p * (x.ln() + y.ln()),
            _ if p <= BRANCH_FLOOR => {}
            _ => return Err(on_bad(j)),
        }
    }
    Ok(s)
}

fn equality_residual(rows: &[Option<Vec<f64>>], target: &[f64]) -> f64 {
    rows.iter()
        .flatten()
        .flat_map(|row| row.iter().zip(target).map(|(a, r)| (a - r).abs()))
        .fold(0.0, f64::max)
}

/// `h_V(W) + sum_j p_j(rho_W) ln(tr(H_j rho_b H_j*) tr(V_j rho_b V_j*)) <= ln beta`.
/// Equality holds iff `a_ij = tr(H_j rho_b H_j*) tr(V_j rho_b V_j*) / beta` for all `i, j`.
pub fn pressure_check_trace_form(
    m: &QifsModel,
    h: &KrausFamily,
    eig: &EigenResult,
    rho_w: &DensityMatrix,
) -> Result<PressureReport> {
    check_potential(m, h, eig)?;
    let entropy = qifs_entropy(m, rho_w)?.value();
    let tr = m.transitions(rho_w)?;
    let rb = eig.rho_beta.matrix();
    let t: Vec<f64> = h.ops().iter().map(|k| sandwich_trace(k, rb)).collect();
    let s: Vec<f64> = m.v().ops().iter().map(|k| sandwich_trace(k, rb)).collect();
    let potential = weighted_log_sum(
        &tr.probs,
        |j| (t[j], s[j]),
        |j| QifsError::DegeneratePotential { branch: j },
    )?;
    let target: Vec<f64> = (0..t.len()).map(|j| t[j] * s[j] / eig.beta).collect();
    Ok(PressureReport::new(
        entropy,
        potential,
        eig.beta.ln(),
        equality_residual(&tr.rows, &target),
        PressureForm::TraceForm,
    ))
}

/// The `(l, m)` ratios `(V_j rho_b V_j*)_{lm} / (rho_b)_{lm}`; each must be
/// real and positive for the coordinate form to be defined.
pub fn coordinate_ratios(v: &KrausFamily, rho_beta: &DensityMatrix, l: usize, m: usize) -> Result<Vec<f64>> {
    let n = rho_beta.dim();
    if l >= n || m >= n {
        return Err(QifsError::InvalidArgument(format!("coordinate ({l}, {m}) outside dimension {n}")));
    }
    let den = rho_beta.entry(l, m);
    if den.norm() <= COORD_FLOOR {
        return Err(QifsError::CoordinateDegenerate { l, m, reason: format!("(rho_beta)_lm = {den} is zero") });
    }
    Ok(v.ops()
        .iter()
        .map(|k| {
            let r = sandwich(k, rho_beta.matrix())[(l, m)] / den;
            if r.im.abs() > 1e-12 * r.norm().max(1.0) {
                f64::NAN
            } else {
                r.re
            }
        })
        .collect())
}

/// Coordinate form: the factor `tr(V_j rho_b V_j*)` is replaced by the ratio
/// `(V_j rho_b V_j*)_{lm} / (rho_b)_{lm}`. A nonpositive or complex ratio on a
/// branch with positive weight is reported as `CoordinateDegenerate`.
pub fn pressure_check_coordinate_form(
    model: &QifsModel,
    h: &KrausFamily,
    eig: &EigenResult,
    rho_w: &DensityMatrix,
    l: usize,
    m: usize,
) -> Result<PressureReport> {
    check_potential(model, h, eig)?;
    let ratios = coordinate_ratios(model.v(), &eig.rho_beta, l, m)?;
    let entropy = qifs_entropy(model, rho_w)?.value();
    let tr = model.transitions(rho_w)?;
    let rb = eig.rho_beta.matrix();
    let t: Vec<f64> = h.ops().iter().map(|k| sandwich_trace(k, rb)).collect();
    let potential = weighted_log_sum(
        &tr.probs,
        |j| (t[j], ratios[j]),
        |j| {
            if t[j] > 0.0 {
                QifsError::CoordinateDegenerate {
                    l,
                    m,
                    reason: format!("ratio {} for branch {j} has no real logarithm", ratios[j]),
                }
            } else {
                QifsError::DegeneratePotential { branch: j }
            }
        },
    )?;
    let target: Vec<f64> = (0..t.len()).map(|j| t[j] * ratios[j] / eig.beta).collect();
    Ok(PressureReport::new(
        entropy,
        potential,
        eig.beta.ln(),
        equality_residual(&tr.rows, &target),
        PressureForm::CoordinateForm { l, m },
    ))
}

/// Every `(l, m)` for which the coordinate form is defined, with its report.
pub fn pressure_check_all_coordinates(
    model: &QifsModel,
    h: &KrausFamily,
    eig: &EigenResult,
    rho_w: &DensityMatrix,
) -> Vec<((usize, usize), Result<PressureReport>)> {
    let n = model.dim();
    (0..n)
        .flat_map(|l| (0..n).map(move |m| (l, m)))
        .map(|(l, m)| ((l, m), pressure_check_coordinate_form(model, h, eig, rho_w, l, m)))
        .collect()
}

/// Entrywise exponential of a real matrix.
pub fn exp_matrix(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.map(f64::exp)
}

/// `H(Q) + sum_j pi_j sum_i q_ij a_ij <= ln beta(E^A)`; equality iff
/// `q_ij = e^{a_ij} v_i / (beta v_j)` with `v` the left Perron vector of `E^A`.
pub fn classic_inequality_check(a: &DMatrix<f64>, q: &StochasticMatrix) -> Result<PressureReport> {
    let n = q.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(QifsError::DimensionMismatch { expected: n, found: a.nrows() });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(QifsError::InvalidArgument("potential matrix must be finite".into()));
    }
    let pi = stationary_vector(q)?;
    let mut entropy = 0.0;
    let mut potential = 0.0;
    for j in 0..n {
        for i in 0..n {
            entropy += pi[j] * eta_clamped(q.get(i, j));
            potential += pi[j] * q.get(i, j) * a[(i, j)];
        }
    }
    let (beta, v) = perron_left(a)?;
    let mut residual: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let r = a[(i, j)].exp() * v[i] / (beta * v[j]);
            residual = residual.max((q.get(i, j) - r).abs());
        }
    }
    Ok(PressureReport::new(entropy, potential, beta.ln(), residual, PressureForm::Classic))
}

/// Perron root of `E^A` and its left eigenvector (positive, summing to one).
pub fn perron_left(a: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let e = exp_matrix(a).transpose();
    let m = ComplexMatrix::from_fn(e.nrows(), e.ncols(), |i, j| c64(e[(i, j)], 0.0));
    let (beta, v) = dominant_eigenpair(&m)?;
    Ok((beta, v.iter().map(|z| z.re).collect()))
}

/// The optimal transition matrix `r_ij = e^{a_ij} v_i / (beta v_j)` of the classic inequality.
pub fn classic_maximizer(a: &DMatrix<f64>) -> Result<StochasticMatrix> {
    let (beta, v) = perron_left(a)?;
    let n = a.nrows();
    let mut cols = vec![vec![0.0; n]; n];
    for (j, col) in cols.iter_mut().enumerate() {
        for i in 0..n {
            col[i] = a[(i, j)].exp() * v[i] / (beta * v[j]);
        }
        let s: f64 = col.iter().sum();
        col.iter_mut().for_each(|x| *x /= s);
    }
    StochasticMatrix::from_columns(&cols)
}

/// Scalar weights `W_j = sqrt(r_j) I` with `r_j = tr(H_j rho_b H_j*) tr(V_j rho_b V_j*) / beta`.
///
/// These meet the trace-form equality condition. They are returned only when
/// `V` is unitary, `V` is scalar, or the fixed point of `Λ` for these weights
/// is fixed by every branch; otherwise `PreconditionUnmet`.
pub fn maximizing_weights(v: &KrausFamily, h: &KrausFamily, eig: &EigenResult) -> Result<KrausFamily> {
    if h.dim() != v.dim() {
        return Err(QifsError::DimensionMismatch { expected: v.dim(), found: h.dim() });
    }
    if h.arity() != v.arity() {
        return Err(QifsError::ArityMismatch { expected: v.arity(), found: h.arity() });
    }
    let rb = eig.rho_beta.matrix();
    let n = v.dim();
    let mut ops = Vec::with_capacity(v.arity());
    for (j, (hj, vj)) in h.ops().iter().zip(v.ops()).enumerate() {
        let t = sandwich_trace(hj, rb);
        if !(t > 0.0) {
            return Err(QifsError::PreconditionUnmet(format!("tr(H_j rho_beta H_j*) = {t} for branch {j}")));
        }
        let r = t * sandwich_trace(vj, rb) / eig.beta;
        ops.push(identity(n).scale(r.max(0.0).sqrt()));
    }
    let w = KrausFamily::new(ops)?;
    if v.is_unitary(1e-10) || v.is_scalar(1e-10) {
        return Ok(w);
    }
    let model = QifsModel::new(v.clone(), w.clone())
        .map_err(|e| QifsError::PreconditionUnmet(format!("weights not normalized: {e}")))?;
    let fp = solve_lambda_fixed_point(&model, &SolveConfig::default())
        .map_err(|e| QifsError::PreconditionUnmet(format!("no fixed point for the weights: {e}")))?;
    for i in 0..model.arity() {
        match model.branch_map(i, &fp.rho) {
            Ok(f) if crate::matcore::hs_distance(f.matrix(), fp.rho.matrix()) <= 1e-8 => {}
            _ => {
                return Err(QifsError::PreconditionUnmet(
                    "V is neither unitary nor scalar and the weights' fixed point is not fixed by every branch".into(),
                ))
            }
        }
    }
    Ok(w)
}

/// `H -> sqrt(alpha) H`; the eigenvalue scales by `alpha`, the eigenstate is unchanged.
pub fn renormalize_potential(h: &KrausFamily, alpha: f64) -> Result<KrausFamily> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(QifsError::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    Ok(h.scaled(alpha.sqrt()))
}

/// `W_i(t) = sqrt((1 - t) I / k + t W_i* W_i)`, a normalized path from the
/// uniform weights (`t = 0`) to the POVM of `W` (`t = 1`).
pub fn mixture_weights(w: &KrausFamily, t: f64) -> Result<KrausFamily> {
    if !(0.0..=1.0).contains(&t) {
        return Err(QifsError::InvalidArgument(format!("mixture parameter {t} outside [0, 1]")));
    }
    if !w.is_normalized() {
        return Err(QifsError::NotNormalized { deviation: w.normalization_deviation() });
    }
    let n = w.dim();
    let k = w.arity() as f64;
    let ops = w
        .ops()
        .iter()
        .map(|wi| psd_sqrt(&(identity(n).scale((1.0 - t) / k) + (wi.adjoint() * wi).scale(t))))
        .collect();
    KrausFamily::new(ops)
}

/// `W_i = I / sqrt(k)`.
pub fn uniform_weights(n: usize, k: usize) -> KrausFamily {
    KrausFamily::new(vec![identity(n).scale(1.0 / (k as f64).sqrt()); k]).expect("k >= 1")
}

/// One evaluated capacity-cost candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEval {
    pub entropy: f64,
    /// `tr(H rho_W)`.
    pub cost: f64,
    pub rho_w: DensityMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// Largest entropy among feasible candidates.
    pub value: f64,
    pub best: usize,
    pub best_w: KrausFamily,
    /// Per-candidate evaluation; `None` where `Λ` did not converge.
    pub evaluated: Vec<Option<CandidateEval>>,
}

/// Approximates `C(a) = max { h_V(W) : tr(H rho_W) <= a }` over the supplied
/// candidate weights only.
pub fn capacity_cost(
    v: &KrausFamily,
    candidates: &[KrausFamily],
    cost: &ComplexMatrix,
    a: f64,
    cfg: &SolveConfig,
) -> Result<CapacityResult> {
    if candidates.is_empty() {
        return Err(QifsError::InvalidArgument("empty candidate grid".into()));
    }
    if cost.nrows() != v.dim() || cost.ncols() != v.dim() {
        return Err(QifsError::DimensionMismatch { expected: v.dim(), found: cost.nrows() });
    }
    let models: Vec<QifsModel> = candidates
        .iter()
        .map(|w| QifsModel::new(v.clone(), w.clone()))
        .collect::<Result<_>>()?;
    let evaluated: Vec<Option<CandidateEval>> = models
        .par_iter()
        .map(|model| {
            let fp = solve_lambda_fixed_point(model, cfg).ok()?;
            let entropy = qifs_entropy(model, &fp.rho).ok()?.value();
            let c = real_trace(&(cost * fp.rho.matrix()));
            Some(CandidateEval { entropy, cost: c, rho_w: fp.rho })
        })
        .collect();
    let best = evaluated
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.as_ref().filter(|e| e.cost <= a + 1e-12).map(|e| (i, e.entropy)))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .ok_or(QifsError::Infeasible)?;
    Ok(CapacityResult {
        value: best.1,
        best: best.0,
        best_w: candidates[best.0].clone(),
        evaluated,
    })
}

/// Candidate maximizing `h - lambda * cost` (the Lagrangian relaxation of `C`).
pub fn lagrangian_argmax(evaluated: &[Option<CandidateEval>], lambda: f64) -> Option<usize> {
    evaluated
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.as_ref().map(|e| (i, e.entropy - lambda * e.cost)))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(i, _)| i)
}
