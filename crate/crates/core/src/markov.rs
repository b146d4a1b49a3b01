//! Classical Markov chains and positive matrices embedded as QIFS, plus the
//! classical quantities they must reproduce.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;

use crate::error::{QifsError, Result};
use crate::matcore::{hs_distance, real_matrix, unit_matrix, ComplexMatrix, DensityMatrix};
use crate::qifs::{lambda_homogeneous, KrausFamily, QifsModel};
use crate::random::{random_density_matrix, stream_rng};
use crate::thermo::StochasticMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingKind {
    /// Four elementary operators `sqrt(p_ij) |i><j|`, `W = V`.
    Hom4,
    /// Elementary `V` from `P`, elementary `W` from `Q`.
    NonHom4,
    /// Two column operators `V_j = sum_i sqrt(p_ij) |i><j|`, `W = V`.
    Hom2,
    /// Column operators for `V` from `P` and for `W` from `Q`.
    NonHom2,
    /// Positive matrix `A` as a Ruelle operator (see [`embed_perron`]).
    PerronPotential,
    /// Positive potential and stochastic weights (see [`embed_classic_bridge`]).
    ClassicBridge,
}

impl EmbeddingKind {
    pub fn arity(self) -> usize {
        match self {
            EmbeddingKind::Hom4 | EmbeddingKind::NonHom4 | EmbeddingKind::ClassicBridge => 4,
            EmbeddingKind::Hom2 | EmbeddingKind::NonHom2 | EmbeddingKind::PerronPotential => 2,
        }
    }

    pub fn dim(self) -> usize {
        2
    }

    pub fn is_homogeneous(self) -> bool {
        matches!(self, EmbeddingKind::Hom4 | EmbeddingKind::Hom2)
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "hom4" => EmbeddingKind::Hom4,
            "nonhom4" => EmbeddingKind::NonHom4,
            "hom2" => EmbeddingKind::Hom2,
            "nonhom2" => EmbeddingKind::NonHom2,
            "perron" | "perronpotential" => EmbeddingKind::PerronPotential,
            "classic" | "classicbridge" => EmbeddingKind::ClassicBridge,
            _ => return None,
        })
    }

    /// The stochastic matrix whose entropy the embedding's QIFS entropy equals.
    pub fn governing<'a>(self, p: &'a StochasticMatrix, q: Option<&'a StochasticMatrix>) -> &'a StochasticMatrix {
        match self {
            EmbeddingKind::NonHom4 => q.unwrap_or(p),
            _ => p,
        }
    }
}

fn require_positive_2x2(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(QifsError::DimensionMismatch { expected: 2, found: m.nrows().max(m.ncols()) });
    }
    if let Some(x) = m.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(QifsError::EmbeddingDegenerate(format!("{name} has entry {x}")));
    }
    Ok(())
}

fn elementary_family(p: &StochasticMatrix) -> Vec<ComplexMatrix> {
    let mut ops = Vec::with_capacity(4);
    for i in 0..2 {
        for j in 0..2 {
            ops.push(unit_matrix(2, i, j).scale(p.get(i, j).sqrt()));
        }
    }
    ops
}

fn column_family(p: &StochasticMatrix) -> Vec<ComplexMatrix> {
    (0..2)
        .map(|j| {
            let mut m = ComplexMatrix::zeros(2, 2);
            for i in 0..2 {
                m[(i, j)] = num_complex::Complex64::new(p.get(i, j).sqrt(), 0.0);
            }
            m
        })
        .collect()
}

/// QIFS built from a 2x2 column-stochastic `P` (dynamics) and, for the
/// nonhomogeneous kinds, `Q` (weights). Entries must be strictly positive.
pub fn embed_stochastic(p: &StochasticMatrix, q: Option<&StochasticMatrix>, kind: EmbeddingKind) -> Result<QifsModel> {
    require_positive_2x2(p.matrix(), "P")?;
    let q = match (kind, q) {
        (EmbeddingKind::NonHom4 | EmbeddingKind::NonHom2, Some(q)) => {
            require_positive_2x2(q.matrix(), "Q")?;
            Some(q)
        }
        (EmbeddingKind::NonHom4 | EmbeddingKind::NonHom2, None) => {
            return Err(QifsError::InvalidArgument(format!("{kind:?} needs a weight matrix Q")))
        }
        (EmbeddingKind::PerronPotential | EmbeddingKind::ClassicBridge, _) => {
            return Err(QifsError::InvalidArgument(format!("{kind:?} is not a stochastic embedding")))
        }
        _ => None,
    };
    let (v, w) = match kind {
        EmbeddingKind::Hom4 => (elementary_family(p), elementary_family(p)),
        EmbeddingKind::NonHom4 => (elementary_family(p), elementary_family(q.expect("checked"))),
        EmbeddingKind::Hom2 => (column_family(p), column_family(p)),
        EmbeddingKind::NonHom2 => (column_family(p), column_family(q.expect("checked"))),
        _ => unreachable!(),
    };
    QifsModel::new(KrausFamily::new(v)?, KrausFamily::new(w)?)
}

/// `(V, H)` with `V_1 = [[1, 1], [0, 0]]`, `V_2 = [[0, 0], [1, 1]]` and
/// `H_i = diag(sqrt(a_i1), sqrt(a_i2))`. On diagonal states the Ruelle
/// operator acts as `A` on `(rho_11, rho_22)`.
pub fn embed_perron(a: &DMatrix<f64>) -> Result<(KrausFamily, KrausFamily)> {
    require_positive_2x2(a, "A")?;
    let v = vec![
        real_matrix(&[&[1.0, 1.0], &[0.0, 0.0]]),
        real_matrix(&[&[0.0, 0.0], &[1.0, 1.0]]),
    ];
    let h = (0..2)
        .map(|i| real_matrix(&[&[a[(i, 0)].sqrt(), 0.0], &[0.0, a[(i, 1)].sqrt()]]))
        .collect();
    Ok((KrausFamily::new(v)?, KrausFamily::new(h)?))
}

/// Branches indexed `(i, j)` in the order 11, 12, 21, 22: `V_ij = |i><j|`,
/// `W_ij = sqrt(q_ij) |i><j|`, and `H_ij` the rank-one operator with row `i`
/// equal to `(sqrt(e^{a_ij}), sqrt(e^{a_ij}))`. Any finite `A` is accepted
/// since only `e^{a_ij}` enters.
pub fn embed_classic_bridge(a: &DMatrix<f64>, q: &StochasticMatrix) -> Result<(QifsModel, KrausFamily)> {
    if a.nrows() != 2 || a.ncols() != 2 {
        return Err(QifsError::DimensionMismatch { expected: 2, found: a.nrows().max(a.ncols()) });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(QifsError::InvalidArgument("potential matrix must be finite".into()));
    }
    require_positive_2x2(q.matrix(), "Q")?;
    let mut v = Vec::with_capacity(4);
    let mut h = Vec::with_capacity(4);
    for i in 0..2 {
        for j in 0..2 {
            v.push(unit_matrix(2, i, j));
            let s = (0.5 * a[(i, j)]).exp();
            h.push(unit_matrix(2, i, 0).scale(s) + unit_matrix(2, i, 1).scale(s));
        }
    }
    let w = elementary_family(q);
    let model = QifsModel::new(KrausFamily::new(v)?, KrausFamily::new(w)?)?;
    Ok((model, KrausFamily::new(h)?))
}

/// `V_ij = sqrt(p_ij) |i><j|` for an `n x n` stochastic `P`, in row-major index order.
pub fn elementary_embedding(p: &StochasticMatrix) -> KrausFamily {
    let n = p.dim();
    let mut ops = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            ops.push(unit_matrix(n, i, j).scale(p.get(i, j).sqrt()));
        }
    }
    KrausFamily::new(ops).expect("square units")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIdentityReport {
    /// `max D_1(Λ_P^n(rho), Λ_{P^n}(rho))` over the sampled states.
    pub deviation: f64,
    /// `max D_1(Λ_P^n(rho), Λ_π(rho))`, with `π` the matrix whose columns all
    /// equal the stationary vector.
    pub limit_deviation: f64,
}

/// Compares `n` applications of `Λ_P` with one application of `Λ_{P^n}` on
/// `samples` random states drawn from `seed`.
pub fn markov_power_identity(p: &StochasticMatrix, n: u32, samples: usize, seed: u64) -> Result<PowerIdentityReport> {
    if n == 0 {
        return Err(QifsError::InvalidArgument("power must be at least 1".into()));
    }
    if samples == 0 {
        return Err(QifsError::InvalidArgument("need at least one sample".into()));
    }
    let dim = p.dim();
    let lp = elementary_embedding(p);
    let lpn = elementary_embedding(&p.power(n));
    let pi = stationary_vector(p)?;
    let lim = StochasticMatrix::from_columns(&vec![pi.clone(); dim])?;
    let lpi = elementary_embedding(&lim);
    let mut report = PowerIdentityReport { deviation: 0.0, limit_deviation: 0.0 };
    for s in 0..samples {
        let mut rng = stream_rng(seed, s as u64);
        let rho = random_density_matrix(&mut rng, dim);
        let mut iter = rho.clone();
        for _ in 0..n {
            iter = DensityMatrix::from_positive(lambda_homogeneous(&lp, &iter)?).expect("trace preserved");
        }
        let once = lambda_homogeneous(&lpn, &rho)?;
        let limit = lambda_homogeneous(&lpi, &rho)?;
        report.deviation = report.deviation.max(hs_distance(iter.matrix(), &once));
        report.limit_deviation = report.limit_deviation.max(hs_distance(iter.matrix(), &limit));
    }
    Ok(report)
}

/// `π` with `P π = π`, nonnegative, summing to one.
pub fn stationary_vector(p: &StochasticMatrix) -> Result<Vec<f64>> {
    if !p.is_irreducible() {
        return Err(QifsError::Reducible);
    }
    let n = p.dim();
    let mut sys = p.matrix() - DMatrix::identity(n, n);
    for j in 0..n {
        sys[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let sol = sys.lu().solve(&rhs).ok_or(QifsError::Reducible)?;
    let clamped: Vec<f64> = sol.iter().map(|x| x.max(0.0)).collect();
    let s: f64 = clamped.iter().sum();
    Ok(clamped.into_iter().map(|x| x / s).collect())
}

/// `(p_01, 1 - p_00) / (1 - p_00 + p_01)` for a 2x2 chain.
pub fn stationary_vector_2x2(p: &StochasticMatrix) -> Result<[f64; 2]> {
    if p.dim() != 2 {
        return Err(QifsError::DimensionMismatch { expected: 2, found: p.dim() });
    }
    let (p00, p01) = (p.get(0, 0), p.get(0, 1));
    let d = 1.0 - p00 + p01;
    if !(d > 0.0) || !p.is_irreducible() {
        return Err(QifsError::Reducible);
    }
    Ok([p01 / d, (1.0 - p00) / d])
}

/// `(H, V)` with `V` the four matrix units scaled by `p_ij` and scalar
/// potentials `H_i = sqrt(q_i) I`; on diagonal states the Ruelle operator is
/// `[[q_1 p_00^2, q_2 p_01^2], [q_3 p_10^2, q_4 p_11^2]]`.
pub fn perron_weighted(p: &StochasticMatrix, q: [f64; 4]) -> Result<(KrausFamily, KrausFamily)> {
    require_positive_2x2(p.matrix(), "P")?;
    if q.iter().any(|x| !(*x > 0.0)) {
        return Err(QifsError::InvalidArgument(format!("weights must be positive, got {q:?}")));
    }
    let mut v = Vec::with_capacity(4);
    for i in 0..2 {
        for j in 0..2 {
            v.push(unit_matrix(2, i, j).scale(p.get(i, j)));
        }
    }
    let h = q.iter().map(|x| crate::matcore::identity(2).scale(x.sqrt())).collect();
    Ok((KrausFamily::new(h)?, KrausFamily::new(v)?))
}

/// `q_i = 1 / p_ij`.
pub fn natural_perron_weights(p: &StochasticMatrix) -> [f64; 4] {
    [1.0 / p.get(0, 0), 1.0 / p.get(0, 1), 1.0 / p.get(1, 0), 1.0 / p.get(1, 1)]
}

/// Weights with free `q_1, q_3` and the other two fixed so that `diag(π)`
/// stays an eigenstate with eigenvalue one:
/// `q_2 = (1 - q_1 p_00^2) / (p_01 p_10)`, `q_4 = (1 - q_3 p_10 p_01) / p_11^2`.
pub fn parametric_perron_weights(p: &StochasticMatrix, q1: f64, q3: f64) -> Result<[f64; 4]> {
    let (p00, p01, p10, p11) = (p.get(0, 0), p.get(0, 1), p.get(1, 0), p.get(1, 1));
    let q2 = (1.0 - q1 * p00 * p00) / (p01 * p10);
    let q4 = (1.0 - q3 * p10 * p01) / (p11 * p11);
    let q = [q1, q2, q3, q4];
    if q.iter().any(|x| !(*x > 0.0)) {
        return Err(QifsError::InvalidArgument(format!("parameters give nonpositive weights {q:?}")));
    }
    Ok(q)
}

/// Draws `(q_1, q_3)` strictly inside the range where [`parametric_perron_weights`] is positive.
pub fn sample_parametric_perron_weights(p: &StochasticMatrix, seed: u64) -> Result<[f64; 4]> {
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (p00, p01, p10) = (p.get(0, 0), p.get(0, 1), p.get(1, 0));
    let q1 = rng.random_range(0.05..0.95) / (p00 * p00);
    let q3 = rng.random_range(0.05..0.95) / (p10 * p01);
    parametric_perron_weights(p, q1, q3)
}
