//! Fixed points of `Λ`, eigenpairs of the Ruelle operator `L_H`, and two
//! independent oracles: the closed-form 2x2 diagonal problem and the
//! vectorized superoperator of a homogeneous channel.

use crate::error::{QifsError, Result};
use crate::matcore::{
    c64, dominant_eigenpair, hermitize, hs_distance, identity, real_trace, sandwich,
    sandwich_trace, unit_matrix, unvec_col, ComplexMatrix, DensityMatrix,
};
use crate::qifs::{KrausFamily, QifsModel, BRANCH_FLOOR};

/// Doublings of the regularization parameter before giving up.
pub const LADDER_RUNGS: usize = 40;

/// Step fractions tried when the plain iteration stalls.
pub const DAMPING: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Convergence threshold on the Hilbert-Schmidt step size.
    pub tol: f64,
    pub max_iter: usize,
    /// First rung of the `rho + I/n` ladder; 0 starts with direct iteration.
    pub regularization_n0: usize,
    /// Defaults to `I/N`.
    pub seed_state: Option<DensityMatrix>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-12,
            max_iter: 100_000,
            regularization_n0: 0,
            seed_state: None,
        }
    }
}

impl SolveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(QifsError::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(QifsError::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    fn seed(&self, n: usize) -> Result<DensityMatrix> {
        match &self.seed_state {
            Some(s) if s.dim() != n => Err(QifsError::DimensionMismatch { expected: n, found: s.dim() }),
            Some(s) => Ok(s.clone()),
            None => Ok(DensityMatrix::maximally_mixed(n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub rho: DensityMatrix,
    pub iterations: usize,
    /// `D_1(Λ(rho), rho)`.
    pub residual: f64,
}

/// Iterates `rho <- Λ(rho)` from the seed until the step is below `tol`.
pub fn solve_lambda_fixed_point(m: &QifsModel, cfg: &SolveConfig) -> Result<FixedPoint> {
    cfg.validate()?;
    let mut rho = cfg.seed(m.dim())?;
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let next = m.lambda_apply(&rho)?;
        residual = hs_distance(next.matrix(), rho.matrix());
        if residual <= cfg.tol {
            return Ok(FixedPoint { rho, iterations: it, residual });
        }
        rho = next;
    }
    Err(QifsError::NonConvergence { iterations: cfg.max_iter, residual })
}

fn check_pair(h: &KrausFamily, v: &KrausFamily) -> Result<()> {
    if h.dim() != v.dim() {
        return Err(QifsError::DimensionMismatch { expected: v.dim(), found: h.dim() });
    }
    if h.arity() != v.arity() {
        return Err(QifsError::ArityMismatch { expected: v.arity(), found: h.arity() });
    }
    Ok(())
}

pub(crate) fn ruelle_raw(h: &KrausFamily, v: &KrausFamily, rho: &ComplexMatrix) -> ComplexMatrix {
    let n = v.dim();
    let mut acc = ComplexMatrix::zeros(n, n);
    for (hi, vi) in h.ops().iter().zip(v.ops()) {
        let w = sandwich_trace(hi, rho);
        if w != 0.0 {
            acc += sandwich(vi, rho).scale(w);
        }
    }
    hermitize(&acc)
}

/// `L_H(rho) = sum_i tr(H_i rho H_i*) V_i rho V_i*` (not normalized).
pub fn ruelle_apply(h: &KrausFamily, v: &KrausFamily, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    check_pair(h, v)?;
    if rho.dim() != v.dim() {
        return Err(QifsError::DimensionMismatch { expected: v.dim(), found: rho.dim() });
    }
    Ok(ruelle_raw(h, v, rho.matrix()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub beta: f64,
    pub rho_beta: DensityMatrix,
    /// `D_1(L_H(rho_beta) / beta, rho_beta)`.
    pub residual: f64,
    /// Total iterations over all attempts.
    pub iterations: usize,
    /// Regularization parameter of the rung that led to convergence, if any.
    pub regularization: Option<usize>,
}

enum Outcome {
    Converged { rho: DensityMatrix },
    Stalled { rho: DensityMatrix, residual: f64 },
    ZeroImage,
}

/// Normalized power iteration of `rho -> L(rho + shift I) / tr(...)`, moving
/// only a fraction `damping` of the way to the image at each step. The
/// residual is always the undamped step.
fn iterate(
    h: &KrausFamily,
    v: &KrausFamily,
    start: DensityMatrix,
    shift: f64,
    damping: f64,
    cfg: &SolveConfig,
    iterations: &mut usize,
) -> Outcome {
    let n = v.dim();
    let id = identity(n);
    let mut rho = start;
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        *iterations += 1;
        let arg = if shift > 0.0 { rho.matrix() + &id * c64(shift, 0.0) } else { rho.matrix().clone() };
        let img = ruelle_raw(h, v, &arg);
        let t = real_trace(&img);
        if !(t > BRANCH_FLOOR) {
            return Outcome::ZeroImage;
        }
        let next = DensityMatrix::from_positive(img).expect("positive trace");
        residual = hs_distance(next.matrix(), rho.matrix());
        if residual <= cfg.tol {
            return Outcome::Converged { rho };
        }
        rho = if damping < 1.0 {
            let mixed = rho.matrix().scale(1.0 - damping) + next.matrix().scale(damping);
            DensityMatrix::from_positive(mixed).expect("convex combination of states")
        } else {
            next
        };
    }
    Outcome::Stalled { rho, residual }
}

/// Eigenpair `L_H(rho) = beta rho` reached from the seed state.
///
/// Plain normalized iteration first. The normalized map is nonlinear and can
/// settle on a periodic orbit, so a stall is retried with damped steps
/// (`DAMPING`). If that fails too, or the orbit hits a zero-trace image, the
/// regularized maps `L_n(rho) = L(rho + I/n)/tr(...)`
/// are solved for `n = n0, 2 n0, 4 n0, ...`, each warm-started from the
/// previous rung and then polished by the unregularized iteration.
pub fn solve_ruelle_eigen(h: &KrausFamily, v: &KrausFamily, cfg: &SolveConfig) -> Result<EigenResult> {
    cfg.validate()?;
    check_pair(h, v)?;
    let seed = cfg.seed(v.dim())?;
    let t0 = real_trace(&ruelle_raw(h, v, seed.matrix()));
    if !(t0 > BRANCH_FLOOR) {
        return Err(QifsError::ZeroImage { trace: t0 });
    }
    let mut iterations = 0;
    let mut last_residual = f64::INFINITY;
    let mut warm = seed.clone();
    if cfg.regularization_n0 == 0 {
        match iterate(h, v, seed.clone(), 0.0, 1.0, cfg, &mut iterations) {
            Outcome::Converged { rho, .. } => return finish(h, v, rho, iterations, None),
            Outcome::Stalled { rho, residual } => {
                last_residual = residual;
                warm = rho;
                for theta in DAMPING {
                    match iterate(h, v, seed.clone(), 0.0, theta, cfg, &mut iterations) {
                        Outcome::Converged { rho, .. } => return finish(h, v, rho, iterations, None),
                        Outcome::Stalled { residual, .. } => last_residual = last_residual.min(residual),
                        Outcome::ZeroImage => break,
                    }
                }
            }
            Outcome::ZeroImage => {}
        }
    }
    let mut n = cfg.regularization_n0.max(1);
    for _ in 0..LADDER_RUNGS {
        match iterate(h, v, warm.clone(), 1.0 / n as f64, 1.0, cfg, &mut iterations) {
            Outcome::Converged { rho, .. } | Outcome::Stalled { rho, .. } => warm = rho,
            Outcome::ZeroImage => {}
        }
        match iterate(h, v, warm.clone(), 0.0, 1.0, cfg, &mut iterations) {
            Outcome::Converged { rho, .. } => return finish(h, v, rho, iterations, Some(n)),
            Outcome::Stalled { residual, .. } => last_residual = residual,
            Outcome::ZeroImage => {}
        }
        n = n.saturating_mul(2);
    }
    Err(QifsError::NonConvergence { iterations, residual: last_residual })
}

fn finish(
    h: &KrausFamily,
    v: &KrausFamily,
    rho: DensityMatrix,
    iterations: usize,
    regularization: Option<usize>,
) -> Result<EigenResult> {
    let img = ruelle_raw(h, v, rho.matrix());
    let beta = real_trace(&img);
    if !(beta > 0.0) {
        return Err(QifsError::ZeroImage { trace: beta });
    }
    let residual = hs_distance(&img.unscale(beta), rho.matrix());
    Ok(EigenResult { beta, rho_beta: rho, residual, iterations, regularization })
}

/// Solves from every seed and keeps the distinct eigenpairs. The limit may
/// depend on the seed; no pair is preferred over another.
pub fn solve_ruelle_eigen_multi(
    h: &KrausFamily,
    v: &KrausFamily,
    seeds: &[DensityMatrix],
    cfg: &SolveConfig,
) -> Result<Vec<EigenResult>> {
    let mut found: Vec<EigenResult> = Vec::new();
    for s in seeds {
        let c = SolveConfig { seed_state: Some(s.clone()), ..cfg.clone() };
        let r = solve_ruelle_eigen(h, v, &c)?;
        let dup = found.iter().any(|f| {
            (f.beta - r.beta).abs() <= 1e-8 * f.beta.max(1.0)
                && hs_distance(f.rho_beta.matrix(), r.rho_beta.matrix()) <= 1e-8
        });
        if !dup {
            found.push(r);
        }
    }
    Ok(found)
}

/// Both eigenpairs of `[[a, b], [c, d]]` acting on the diagonal `(rho_11, rho_22)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm2x2 {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// `sqrt((d - a)^2 + 4 b c)`.
    pub zeta: f64,
    pub rho_plus: DensityMatrix,
    /// `None` when the eigenvector has entries of both signs.
    pub rho_minus: Option<DensityMatrix>,
    /// `zeta == 0`: a single eigenvalue of multiplicity two.
    pub tie: bool,
    /// `(1 - a)(1 - d) - b c`; zero exactly when 1 is an eigenvalue, the
    /// solvability condition for the normalized (`beta = 1`) problem.
    pub normalized_restriction: f64,
}

pub fn closed_form_2x2_diagonal(a: f64, b: f64, c: f64, d: f64) -> Result<ClosedForm2x2> {
    if ![a, b, c, d].iter().all(|x| *x > 0.0 && x.is_finite()) {
        return Err(QifsError::InvalidArgument("closed form needs positive a, b, c, d".into()));
    }
    let zeta = ((d - a).powi(2) + 4.0 * b * c).sqrt();
    let lambda_plus = 0.5 * (a + d) + 0.5 * zeta;
    let lambda_minus = 0.5 * (a + d) - 0.5 * zeta;
    // first row: (a - l) x + b y = 0, so (x, y) is proportional to (b, l - a)
    let state = |l: f64| {
        let (x, y) = (b, l - a);
        if x + y == 0.0 || x * y < 0.0 {
            return None;
        }
        DensityMatrix::diagonal(&[x / (x + y), y / (x + y)]).ok()
    };
    let rho_plus = state(lambda_plus).expect("Perron vector of a positive matrix is positive");
    let rho_minus = state(lambda_minus);
    Ok(ClosedForm2x2 {
        lambda_plus,
        lambda_minus,
        zeta,
        rho_plus,
        rho_minus,
        tie: zeta <= 1e-14 * (a + d),
        normalized_restriction: (1.0 - a) * (1.0 - d) - b * c,
    })
}

/// `(H, V)` whose Ruelle operator acts on diagonal states as `[[a, b], [c, d]]`:
/// `V` runs over the matrix units `E11, E12, E21, E22` and `H_i` is the
/// matching scalar `sqrt(coef) I`.
pub fn closed_form_embedding(a: f64, b: f64, c: f64, d: f64) -> (KrausFamily, KrausFamily) {
    let units = vec![unit_matrix(2, 0, 0), unit_matrix(2, 0, 1), unit_matrix(2, 1, 0), unit_matrix(2, 1, 1)];
    let h = [a, b, c, d].iter().map(|x| identity(2).scale(x.sqrt())).collect();
    (
        KrausFamily::new(h).expect("2x2 scalars"),
        KrausFamily::new(units).expect("2x2 units"),
    )
}

/// Matrix of `rho -> sum V_i rho V_i*` on column-major vectorizations:
/// `sum conj(V_i) ⊗ V_i`.
pub fn superoperator_matrix(v: &KrausFamily) -> ComplexMatrix {
    let n = v.dim();
    let mut s = ComplexMatrix::zeros(n * n, n * n);
    for k in v.ops() {
        s += k.map(|z| z.conj()).kronecker(k);
    }
    s
}

/// Fixed state of a homogeneous channel from the dominant eigenvector of its superoperator.
pub fn superoperator_fixed_state(v: &KrausFamily) -> Result<DensityMatrix> {
    let s = superoperator_matrix(v);
    let (_, vec) = dominant_eigenpair(&s)?;
    let m = unvec_col(&vec, v.dim());
    let tr = m.trace();
    if tr.norm() <= BRANCH_FLOOR {
        return Err(QifsError::ZeroImage { trace: tr.norm() });
    }
    DensityMatrix::from_positive(m / tr).ok_or(QifsError::ZeroImage { trace: tr.norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{complex_matrix, real_matrix, vec_col};
    use crate::random::{ginibre, random_density_matrix, random_normalized_family, random_unitary, stream_rng};
    use rand::Rng;

    #[test]
    fn damping_escapes_a_period_two_orbit() {
        // Undamped, this pair alternates between two states with traces 16.28 and 18.84.
        let mut rng = stream_rng(5331238131107929625, 0);
        let h = KrausFamily::new((0..3).map(|_| ginibre(&mut rng, 2, 2)).collect()).unwrap();
        let mut rng = stream_rng(5331238131107929625, 1);
        let v = KrausFamily::new((0..3).map(|_| ginibre(&mut rng, 2, 2)).collect()).unwrap();
        let cfg = SolveConfig { max_iter: 2000, ..SolveConfig::default() };
        let mut it = 0;
        let plain = iterate(&h, &v, DensityMatrix::maximally_mixed(2), 0.0, 1.0, &cfg, &mut it);
        assert!(matches!(plain, Outcome::Stalled { residual, .. } if residual > 0.1));
        let r = solve_ruelle_eigen(&h, &v, &cfg).unwrap();
        assert!((r.beta - 17.186391).abs() < 1e-5, "{}", r.beta);
        assert!(r.residual <= 1e-11);
        assert_eq!(r.regularization, None);
    }

    pub(crate) fn rank_one() -> (KrausFamily, KrausFamily) {
        let s = 2f64.sqrt();
        let v = KrausFamily::new(vec![
            unit_matrix(2, 0, 0),
            unit_matrix(2, 0, 1),
            unit_matrix(2, 1, 0),
            unit_matrix(2, 1, 1),
        ])
        .unwrap();
        let h = KrausFamily::new(vec![
            complex_matrix(&[&[(0.0, 2.0), (0.0, 2.0)], &[(0.0, 0.0), (0.0, 0.0)]]),
            identity(2),
            complex_matrix(&[&[(0.0, s), (0.0, s)], &[(0.0, 0.0), (0.0, 0.0)]]),
            identity(2),
        ])
        .unwrap();
        (h, v)
    }

    #[test]
    fn rank_one_traces_on_diagonal_states() {
        let (h, _) = rank_one();
        for d in [[0.64, 0.36], [0.5, 0.5], [0.1, 0.9]] {
            let rho = DensityMatrix::diagonal(&d).unwrap();
            let t: Vec<f64> = h.ops().iter().map(|k| sandwich_trace(k, rho.matrix())).collect();
            for (x, e) in t.iter().zip([4.0, 1.0, 2.0, 1.0]) {
                assert!((x - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rank_one_eigenpair() {
        let (h, v) = rank_one();
        let r = solve_ruelle_eigen(&h, &v, &SolveConfig::default()).unwrap();
        let r17 = 17f64.sqrt();
        assert!((r.beta - (5.0 + r17) / 2.0).abs() < 1e-9);
        let d = r.rho_beta.diag();
        assert!((d[0] - (3.0 + r17) / (7.0 + r17)).abs() < 1e-8);
        assert!((d[1] - 4.0 / (7.0 + r17)).abs() < 1e-8);
        assert!(r.residual <= 1e-11);
        assert_eq!(r.regularization, None);
    }

    #[test]
    fn scaled_identity_potential_with_unitary() {
        let mut rng = stream_rng(8, 0);
        let u = random_unitary(&mut rng, 2);
        let v = KrausFamily::new(vec![u]).unwrap();
        let h = KrausFamily::new(vec![identity(2).scale(2f64.sqrt())]).unwrap();
        let r = solve_ruelle_eigen(&h, &v, &SolveConfig::default()).unwrap();
        assert!((r.beta - 2.0).abs() < 1e-12);
        assert!(r.residual <= 1e-12);
    }

    #[test]
    fn ruelle_reduces_to_homogeneous_and_scales() {
        let mut rng = stream_rng(9, 0);
        let v = random_normalized_family(&mut rng, 3, 2);
        let h = KrausFamily::new(vec![identity(3); 2]).unwrap();
        let rho = random_density_matrix(&mut rng, 3);
        let l = ruelle_apply(&h, &v, &rho).unwrap();
        let hom = crate::qifs::lambda_homogeneous(&v, &rho).unwrap();
        assert!(hs_distance(&l, &hom) < 1e-14);
        let l7 = ruelle_apply(&h.scaled(7f64.sqrt()), &v, &rho).unwrap();
        assert!(hs_distance(&l7, &l.scale(7.0)) < 1e-13);
    }

    #[test]
    fn zero_image_at_seed() {
        let v = KrausFamily::new(vec![unit_matrix(2, 0, 1)]).unwrap();
        let h = KrausFamily::new(vec![identity(2)]).unwrap();
        let cfg = SolveConfig {
            seed_state: Some(DensityMatrix::diagonal(&[1.0, 0.0]).unwrap()),
            ..SolveConfig::default()
        };
        assert!(matches!(solve_ruelle_eigen(&h, &v, &cfg), Err(QifsError::ZeroImage { .. })));
    }

    #[test]
    fn oscillating_seed_is_rescued() {
        let v = KrausFamily::new(vec![unit_matrix(2, 1, 0), unit_matrix(2, 0, 1)]).unwrap();
        let h = KrausFamily::new(vec![identity(2); 2]).unwrap();
        let cfg = SolveConfig {
            seed_state: Some(DensityMatrix::diagonal(&[0.3, 0.7]).unwrap()),
            max_iter: 2000,
            ..SolveConfig::default()
        };
        // Damped steps settle the swap orbit before the ladder is needed.
        let r = solve_ruelle_eigen(&h, &v, &cfg).unwrap();
        assert_eq!(r.regularization, None);
        assert!((r.beta - 1.0).abs() < 1e-12);
        assert!(hs_distance(r.rho_beta.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-11);

        let reg = SolveConfig { regularization_n0: 4, ..cfg };
        let r = solve_ruelle_eigen(&h, &v, &reg).unwrap();
        assert_eq!(r.regularization, Some(4));
    }

    #[test]
    fn config_validation() {
        let (h, v) = rank_one();
        let bad = SolveConfig { tol: 0.0, ..SolveConfig::default() };
        assert!(solve_ruelle_eigen(&h, &v, &bad).unwrap_err().is_validation());
        let bad = SolveConfig { seed_state: Some(DensityMatrix::maximally_mixed(3)), ..SolveConfig::default() };
        assert!(matches!(solve_ruelle_eigen(&h, &v, &bad), Err(QifsError::DimensionMismatch { .. })));
    }

    #[test]
    fn closed_form_examples() {
        let cf = closed_form_2x2_diagonal(4.0, 1.0, 2.0, 1.0).unwrap();
        let r17 = 17f64.sqrt();
        assert!((cf.lambda_plus - (5.0 + r17) / 2.0).abs() < 1e-14);
        assert!((cf.zeta * cf.zeta - (9.0 + 8.0)).abs() < 1e-12);
        assert!((cf.rho_plus.diag()[0] - (3.0 + r17) / (7.0 + r17)).abs() < 1e-14);
        assert!(cf.rho_minus.is_none());
        assert!(cf.lambda_plus >= cf.lambda_minus);

        let sym = closed_form_2x2_diagonal(2.0, 0.5, 0.5, 2.0).unwrap();
        assert!((sym.lambda_plus - 2.5).abs() < 1e-14);
        assert!((sym.lambda_minus - 1.5).abs() < 1e-14);
        assert!((sym.rho_plus.diag()[0] - 0.5).abs() < 1e-14);

        assert!(closed_form_2x2_diagonal(1.0, 0.0, 1.0, 1.0).is_err());
        // natural Perron weights make 1 an eigenvalue
        let nat = closed_form_2x2_diagonal(0.6, 0.3, 0.4, 0.7).unwrap();
        assert!(nat.normalized_restriction.abs() < 1e-15);
        assert!((nat.lambda_plus - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_agrees_with_iteration() {
        let mut rng = stream_rng(10, 0);
        for _ in 0..100 {
            let q: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..5.0)).collect();
            let cf = closed_form_2x2_diagonal(q[0], q[1], q[2], q[3]).unwrap();
            let (h, v) = closed_form_embedding(q[0], q[1], q[2], q[3]);
            let r = solve_ruelle_eigen(&h, &v, &SolveConfig::default()).unwrap();
            assert!((r.beta - cf.lambda_plus).abs() < 1e-9 * cf.lambda_plus.max(1.0));
            assert!(hs_distance(r.rho_beta.matrix(), cf.rho_plus.matrix()) < 1e-9);
        }
    }

    #[test]
    fn superoperator_identity_and_action() {
        let id = KrausFamily::new(vec![identity(3)]).unwrap();
        assert_eq!(superoperator_matrix(&id), identity(9));
        let mut rng = stream_rng(11, 0);
        let v = random_normalized_family(&mut rng, 3, 3);
        let s = superoperator_matrix(&v);
        for _ in 0..100 {
            let rho = random_density_matrix(&mut rng, 3);
            let direct = crate::qifs::lambda_homogeneous(&v, &rho).unwrap();
            let via = unvec_col(&(&s * vec_col(rho.matrix())), 3);
            assert!(hs_distance(&direct, &via) < 1e-13);
        }
    }

    #[test]
    fn homogeneous_fixed_point_matches_superoperator() {
        let mut rng = stream_rng(12, 0);
        for _ in 0..10 {
            let v = random_normalized_family(&mut rng, 2, 3);
            let m = QifsModel::homogeneous(v.clone()).unwrap();
            let fp = solve_lambda_fixed_point(&m, &SolveConfig::default()).unwrap();
            let oracle = superoperator_fixed_state(&v).unwrap();
            assert!(hs_distance(fp.rho.matrix(), oracle.matrix()) < 1e-9);
        }
    }

    #[test]
    fn identity_model_returns_seed_immediately() {
        let m = QifsModel::homogeneous(KrausFamily::new(vec![identity(2)]).unwrap()).unwrap();
        let seed = DensityMatrix::diagonal(&[0.2, 0.8]).unwrap();
        let cfg = SolveConfig { seed_state: Some(seed.clone()), ..SolveConfig::default() };
        let fp = solve_lambda_fixed_point(&m, &cfg).unwrap();
        assert_eq!(fp.iterations, 1);
        assert_eq!(fp.rho, seed);
    }

    #[test]
    fn periodic_model_does_not_converge() {
        let x = real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let m = QifsModel::homogeneous(KrausFamily::new(vec![x]).unwrap()).unwrap();
        let cfg = SolveConfig {
            seed_state: Some(DensityMatrix::diagonal(&[0.25, 0.75]).unwrap()),
            max_iter: 500,
            ..SolveConfig::default()
        };
        let err = solve_lambda_fixed_point(&m, &cfg).unwrap_err();
        assert!(err.is_non_convergence());
    }

    #[test]
    fn multi_seed_reports_distinct_pairs() {
        // block-diagonal potential with two invariant corners
        let v = KrausFamily::new(vec![unit_matrix(2, 0, 0), unit_matrix(2, 1, 1)]).unwrap();
        let h = KrausFamily::new(vec![identity(2).scale(2f64.sqrt()), identity(2)]).unwrap();
        let seeds = [
            DensityMatrix::diagonal(&[1.0, 0.0]).unwrap(),
            DensityMatrix::diagonal(&[0.0, 1.0]).unwrap(),
            DensityMatrix::diagonal(&[0.5, 0.5]).unwrap(),
        ];
        let found = solve_ruelle_eigen_multi(&h, &v, &seeds, &SolveConfig::default()).unwrap();
        let mut betas: Vec<f64> = found.iter().map(|r| r.beta).collect();
        betas.sort_by(f64::total_cmp);
        assert_eq!(betas.len(), 2);
        assert!((betas[0] - 1.0).abs() < 1e-12 && (betas[1] - 2.0).abs() < 1e-12);
    }
}
