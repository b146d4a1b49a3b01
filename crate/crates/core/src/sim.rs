//! Monte-Carlo realization of the Markov operator on states: trajectories,
//! barycenters and ergodic averages of the branch entropy.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{QifsError, Result};
use crate::matcore::{hermitize, hs_distance, ComplexMatrix, DensityMatrix};
use crate::qifs::QifsModel;
use crate::random::{random_density_matrix, stream_rng};

pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DensityMatrix>,
    pub branches: Vec<usize>,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    samples: Vec<DensityMatrix>,
}

impl EmpiricalMeasure {
    pub fn new(samples: Vec<DensityMatrix>) -> Result<Self> {
        if samples.is_empty() {
            return Err(QifsError::EmptyFamily);
        }
        Ok(EmpiricalMeasure { samples })
    }

    pub fn samples(&self) -> &[DensityMatrix] {
        &self.samples
    }

    pub fn barycenter(&self) -> DensityMatrix {
        let n = self.samples[0].dim();
        let mut acc = ComplexMatrix::zeros(n, n);
        for s in &self.samples {
            acc += s.matrix();
        }
        DensityMatrix::from_positive(hermitize(&acc)).expect("average of states")
    }

    /// Average of `f` over the samples.
    pub fn integrate<F: Fn(&DensityMatrix) -> f64>(&self, f: F) -> f64 {
        self.samples.iter().map(f).sum::<f64>() / self.samples.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub burn_in: usize,
    pub samples: usize,
    pub batches: usize,
    pub seed: u64,
    /// Defaults to the maximally mixed state.
    pub start: Option<DensityMatrix>,
}

impl SimConfig {
    pub fn new(seed: u64) -> Self {
        SimConfig { burn_in: 1000, samples: 100_000, batches: 50, seed, start: None }
    }

    fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(QifsError::InvalidArgument(format!(
                "need at least {MIN_SAMPLES} samples, got {}",
                self.samples
            )));
        }
        if self.batches < 2 || self.batches > self.samples {
            return Err(QifsError::InvalidArgument(format!("invalid batch count {}", self.batches)));
        }
        Ok(())
    }
}

fn draw_branch<R: Rng + ?Sized>(m: &QifsModel, rho: &DensityMatrix, rng: &mut R) -> Result<usize> {
    let probs = m.branch_probs(rho)?;
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(last)
}

/// Runs a chain from `rho0`, choosing branch `i` with probability `p_i`
/// of the current state. `states` has `steps + 1` entries.
pub fn sample_trajectory(m: &QifsModel, rho0: &DensityMatrix, steps: usize, seed: u64) -> Result<Trajectory> {
    if steps == 0 {
        return Err(QifsError::InvalidArgument("steps must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let mut states = Vec::with_capacity(steps + 1);
    let mut branches = Vec::with_capacity(steps);
    let mut cur = rho0.clone();
    states.push(cur.clone());
    for _ in 0..steps {
        let i = draw_branch(m, &cur, &mut rng)?;
        cur = m.branch_map(i, &cur)?;
        branches.push(i);
        states.push(cur.clone());
    }
    Ok(Trajectory { states, branches, seed })
}

/// Mean of a scalar series with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

fn batch_means(series: &[f64], batches: usize) -> Estimate {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let bm = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Estimate { mean, stderr: (var / batches as f64).sqrt() }
}

/// Runs the chain and records `record(state)` for every post-burn-in state.
fn run_chain<T, F>(m: &QifsModel, cfg: &SimConfig, stream: u64, mut record: F) -> Result<Vec<T>>
where
    F: FnMut(&DensityMatrix) -> T,
{
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, stream);
    let mut cur = match &cfg.start {
        Some(s) => s.clone(),
        None => DensityMatrix::maximally_mixed(m.dim()),
    };
    if cur.dim() != m.dim() {
        return Err(QifsError::DimensionMismatch { expected: m.dim(), found: cur.dim() });
    }
    for _ in 0..cfg.burn_in {
        let i = draw_branch(m, &cur, &mut rng)?;
        cur = m.branch_map(i, &cur)?;
    }
    let mut out = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let i = draw_branch(m, &cur, &mut rng)?;
        cur = m.branch_map(i, &cur)?;
        out.push(record(&cur));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterEstimate {
    pub rho: DensityMatrix,
    /// Batch-means standard errors of the real and imaginary parts, entrywise.
    pub stderr_re: DMatrix<f64>,
    pub stderr_im: DMatrix<f64>,
}

impl BarycenterEstimate {
    pub fn max_stderr(&self) -> f64 {
        self.stderr_re.max().max(self.stderr_im.max())
    }

    /// Largest entrywise `|target - estimate| / stderr`; an entry with zero
    /// stderr counts as infinite unless it matches to 1e-12.
    pub fn z_score(&self, target: &DensityMatrix) -> f64 {
        let n = self.rho.dim();
        let mut z: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = target.entry(i, j) - self.rho.entry(i, j);
                for (diff, se) in [(d.re.abs(), self.stderr_re[(i, j)]), (d.im.abs(), self.stderr_im[(i, j)])] {
                    let r = if se > 0.0 {
                        diff / se
                    } else if diff <= 1e-12 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    z = z.max(r);
                }
            }
        }
        z
    }
}

fn barycenter_from(flat: Vec<ComplexMatrix>, n: usize, batches: usize) -> BarycenterEstimate {
    let mut stderr_re = DMatrix::zeros(n, n);
    let mut stderr_im = DMatrix::zeros(n, n);
    let mut mean = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re: Vec<f64> = flat.iter().map(|s| s[(i, j)].re).collect();
            let im: Vec<f64> = flat.iter().map(|s| s[(i, j)].im).collect();
            let (er, ei) = (batch_means(&re, batches), batch_means(&im, batches));
            mean[(i, j)] = num_complex::Complex64::new(er.mean, ei.mean);
            stderr_re[(i, j)] = er.stderr;
            stderr_im[(i, j)] = ei.stderr;
        }
    }
    let rho = DensityMatrix::from_positive(hermitize(&mean)).expect("average of states");
    BarycenterEstimate { rho, stderr_re, stderr_im }
}

/// Entrywise trajectory average after `burn_in` steps.
pub fn estimate_barycenter(m: &QifsModel, cfg: &SimConfig) -> Result<BarycenterEstimate> {
    let flat = run_chain(m, cfg, 0, |s| s.matrix().clone())?;
    Ok(barycenter_from(flat, m.dim(), cfg.batches))
}

/// Trajectory average of `h(rho) = sum_i eta(p_i(rho))` after `burn_in` steps.
pub fn estimate_entropy_integral(m: &QifsModel, cfg: &SimConfig) -> Result<Estimate> {
    let series = run_chain(m, cfg, 0, |s| m.shannon_h(s))?;
    Ok(batch_means(&series, cfg.batches))
}

/// Both estimates from one trajectory; identical to calling
/// [`estimate_barycenter`] and [`estimate_entropy_integral`] with `cfg`.
pub fn estimate_barycenter_and_entropy(m: &QifsModel, cfg: &SimConfig) -> Result<(BarycenterEstimate, Estimate)> {
    let both = run_chain(m, cfg, 0, |s| (s.matrix().clone(), m.shannon_h(s)))?;
    let (mats, hs): (Vec<_>, Vec<_>) = both.into_iter().unzip();
    Ok((barycenter_from(mats, m.dim(), cfg.batches), batch_means(&hs, cfg.batches)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub start: DensityMatrix,
    pub barycenter: BarycenterEstimate,
    pub entropy: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiChainReport {
    pub chains: Vec<ChainReport>,
    /// Set when two chains' entropy estimates differ by more than
    /// `4 sqrt(se_a^2 + se_b^2)`.
    pub disagreement: bool,
}

/// Independent chains, one per start state, on streams `1..=starts.len()`.
/// With no starts given, `count` random full-rank starts are drawn.
pub fn multichain(m: &QifsModel, starts: &[DensityMatrix], count: usize, cfg: &SimConfig) -> Result<MultiChainReport> {
    let starts: Vec<DensityMatrix> = if starts.is_empty() {
        (0..count)
            .map(|c| random_density_matrix(&mut stream_rng(cfg.seed ^ 0x5eed, c as u64), m.dim()))
            .collect()
    } else {
        starts.to_vec()
    };
    if starts.is_empty() {
        return Err(QifsError::InvalidArgument("no chains requested".into()));
    }
    let chains: Result<Vec<ChainReport>> = starts
        .into_par_iter()
        .enumerate()
        .map(|(c, start)| {
            let sub = SimConfig { start: Some(start.clone()), ..cfg.clone() };
            let both = run_chain(m, &sub, c as u64 + 1, |s| (s.matrix().clone(), m.shannon_h(s)))?;
            let (mats, hs): (Vec<_>, Vec<_>) = both.into_iter().unzip();
            Ok(ChainReport {
                start,
                barycenter: barycenter_from(mats, m.dim(), cfg.batches),
                entropy: batch_means(&hs, cfg.batches),
            })
        })
        .collect();
    let chains = chains?;
    let mut disagreement = false;
    for a in 0..chains.len() {
        for b in a + 1..chains.len() {
            let (x, y) = (chains[a].entropy, chains[b].entropy);
            let bound = 4.0 * (x.stderr.powi(2) + y.stderr.powi(2)).sqrt() + 1e-12;
            disagreement |= (x.mean - y.mean).abs() > bound;
        }
    }
    Ok(MultiChainReport { chains, disagreement })
}

/// Per branch, the largest sampled `D_1(F_i rho, F_i sigma) / D_1(rho, sigma)`.
/// Pairs hitting a degenerate branch are skipped for that branch.
pub fn empirical_contraction(m: &QifsModel, pairs: usize, seed: u64) -> Result<Vec<f64>> {
    if pairs < 10 {
        return Err(QifsError::InvalidArgument(format!("need at least 10 pairs, got {pairs}")));
    }
    let mut out = vec![0.0f64; m.arity()];
    let mut rng = stream_rng(seed, 0);
    for _ in 0..pairs {
        let a = random_density_matrix(&mut rng, m.dim());
        let b = random_density_matrix(&mut rng, m.dim());
        let d = hs_distance(a.matrix(), b.matrix());
        if d <= 0.0 {
            continue;
        }
        for (i, best) in out.iter_mut().enumerate() {
            if let (Ok(fa), Ok(fb)) = (m.branch_map(i, &a), m.branch_map(i, &b)) {
                *best = best.max(hs_distance(fa.matrix(), fb.matrix()) / d);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{embed_stochastic, stationary_vector_2x2, EmbeddingKind};
    use crate::matcore::{identity, unit_matrix};
    use crate::qifs::KrausFamily;
    use crate::random::{random_normalized_family, random_stochastic, random_unitary};
    use crate::solvers::{solve_lambda_fixed_point, SolveConfig};
    use crate::thermo::{markov_entropy, qifs_entropy, uniform_weights, StochasticMatrix};

    fn small(seed: u64) -> SimConfig {
        SimConfig { samples: 20_000, burn_in: 200, ..SimConfig::new(seed) }
    }

    fn example_ifs() -> QifsModel {
        let s = 2f64.sqrt();
        let v1 = crate::matcore::real_matrix(&[&[-1.0, 0.0], &[0.0, 1.0]]);
        let v2 = crate::matcore::real_matrix(&[&[0.0, -3.0 * s / 4.0], &[-3.0 * s / 2.0, 0.0]]);
        let w = KrausFamily::new(vec![identity(2).scale(0.5), identity(2).scale(3f64.sqrt() / 2.0)]).unwrap();
        QifsModel::new(KrausFamily::new(vec![v1, v2]).unwrap(), w).unwrap()
    }

    #[test]
    fn invariant_point_gives_constant_trajectory() {
        let m = example_ifs();
        let rho0 = DensityMatrix::diagonal(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let t = sample_trajectory(&m, &rho0, 50, 1).unwrap();
        assert_eq!(t.len(), 50);
        for s in &t.states {
            assert!(hs_distance(s.matrix(), rho0.matrix()) < 1e-14);
        }
        let cfg = SimConfig { start: Some(rho0.clone()), ..small(2) };
        let b = estimate_barycenter(&m, &cfg).unwrap();
        assert!(hs_distance(b.rho.matrix(), rho0.matrix()) < 1e-12);
        assert!(b.max_stderr() < 1e-12);
        let h = estimate_entropy_integral(&m, &cfg).unwrap();
        assert!((h.mean - m.shannon_h(&rho0)).abs() < 1e-12);
        assert!(h.stderr < 1e-12);
    }

    #[test]
    fn identity_model_is_static() {
        let m = QifsModel::homogeneous(KrausFamily::new(vec![identity(2)]).unwrap()).unwrap();
        let rho0 = DensityMatrix::diagonal(&[0.2, 0.8]).unwrap();
        let t = sample_trajectory(&m, &rho0, 10, 5).unwrap();
        assert!(t.states.iter().all(|s| s == &rho0));
        assert!(t.branches.iter().all(|&b| b == 0));
    }

    #[test]
    fn replay_is_bit_identical() {
        let mut rng = stream_rng(50, 0);
        let v = random_normalized_family(&mut rng, 2, 3);
        let m = QifsModel::homogeneous(v).unwrap();
        let rho0 = DensityMatrix::maximally_mixed(2);
        assert_eq!(sample_trajectory(&m, &rho0, 200, 9).unwrap(), sample_trajectory(&m, &rho0, 200, 9).unwrap());
        let cfg = SimConfig { samples: 1000, burn_in: 10, ..SimConfig::new(9) };
        assert_eq!(estimate_barycenter(&m, &cfg).unwrap(), estimate_barycenter(&m, &cfg).unwrap());
        assert_eq!(estimate_entropy_integral(&m, &cfg).unwrap(), estimate_entropy_integral(&m, &cfg).unwrap());
        let (b, h) = estimate_barycenter_and_entropy(&m, &cfg).unwrap();
        assert_eq!(b, estimate_barycenter(&m, &cfg).unwrap());
        assert_eq!(h, estimate_entropy_integral(&m, &cfg).unwrap());
    }

    #[test]
    fn uniform_weights_have_constant_entropy() {
        let mut rng = stream_rng(51, 0);
        let v = random_normalized_family(&mut rng, 2, 3);
        let m = QifsModel::new(v, uniform_weights(2, 3)).unwrap();
        let h = estimate_entropy_integral(&m, &small(3)).unwrap();
        assert!((h.mean - 3f64.ln()).abs() < 1e-12);
        assert!(h.stderr < 1e-12);
    }

    #[test]
    fn homogeneous_embedding_barycenter_is_stationary() {
        let mut rng = stream_rng(52, 0);
        let p = random_stochastic(&mut rng, 2, 0.1);
        let m = embed_stochastic(&p, None, EmbeddingKind::Hom4).unwrap();
        let b = estimate_barycenter(&m, &small(4)).unwrap();
        let pi = stationary_vector_2x2(&p).unwrap();
        let target = DensityMatrix::diagonal(&pi).unwrap();
        assert!(b.z_score(&target) <= 3.0, "z = {}", b.z_score(&target));
    }

    #[test]
    fn nonhomogeneous_embedding_entropy_matches_markov() {
        let q = StochasticMatrix::from_rows(&[vec![0.6, 0.3], vec![0.4, 0.7]]).unwrap();
        let mut rng = stream_rng(53, 0);
        let p = random_stochastic(&mut rng, 2, 0.1);
        let m = embed_stochastic(&p, Some(&q), EmbeddingKind::NonHom4).unwrap();
        let h = estimate_entropy_integral(&m, &small(5)).unwrap();
        let target = markov_entropy(&q).unwrap().value();
        assert!((h.mean - target).abs() <= 3.0 * h.stderr, "{} vs {target} (se {})", h.mean, h.stderr);
    }

    #[test]
    fn homogeneous_barycenter_is_fixed_point() {
        for s in 0..3 {
            let mut rng = stream_rng(54, s);
            let m = QifsModel::homogeneous(random_normalized_family(&mut rng, 2, 2)).unwrap();
            let fp = solve_lambda_fixed_point(&m, &SolveConfig::default()).unwrap();
            let b = estimate_barycenter(&m, &small(6 + s)).unwrap();
            assert!(b.z_score(&fp.rho) <= 3.5, "z = {}", b.z_score(&fp.rho));
            let h = estimate_entropy_integral(&m, &small(6 + s)).unwrap();
            let exact = qifs_entropy(&m, &fp.rho).unwrap().value();
            // Homogeneous models are not rank one, so only a loose check applies here.
            assert!(h.mean >= 0.0 && h.mean <= 2f64.ln() + 1e-12 && exact <= 2f64.ln() + 1e-12);
        }
    }

    #[test]
    fn multichain_agrees_on_mixing_model() {
        let mut rng = stream_rng(55, 0);
        let p = random_stochastic(&mut rng, 2, 0.2);
        let m = embed_stochastic(&p, None, EmbeddingKind::Hom2).unwrap();
        let r = multichain(&m, &[], 4, &small(7)).unwrap();
        assert_eq!(r.chains.len(), 4);
        assert!(!r.disagreement);
    }

    #[test]
    fn multichain_flags_separate_invariant_states() {
        // Diagonal unitaries fix both basis states; chains never leave their start.
        let v = KrausFamily::new(vec![identity(2), crate::matcore::diag_real(&[1.0, -1.0])]).unwrap();
        let w = KrausFamily::new(vec![
            crate::matcore::diag_real(&[0.9f64.sqrt(), 0.2f64.sqrt()]),
            crate::matcore::diag_real(&[0.1f64.sqrt(), 0.8f64.sqrt()]),
        ])
        .unwrap();
        let m = QifsModel::new(v, w).unwrap();
        let starts = [
            DensityMatrix::diagonal(&[1.0, 0.0]).unwrap(),
            DensityMatrix::diagonal(&[0.0, 1.0]).unwrap(),
        ];
        let r = multichain(&m, &starts, 0, &SimConfig { samples: 1000, burn_in: 0, ..SimConfig::new(8) }).unwrap();
        assert!(r.disagreement);
    }

    #[test]
    fn contraction_examples() {
        let mut rng = stream_rng(56, 0);
        let u = random_unitary(&mut rng, 2);
        let m = QifsModel::homogeneous(KrausFamily::new(vec![u]).unwrap()).unwrap();
        let r = empirical_contraction(&m, 20, 1).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-12);
        let m = QifsModel::homogeneous(
            KrausFamily::new(vec![unit_matrix(2, 0, 0), unit_matrix(2, 0, 1), unit_matrix(2, 1, 0), unit_matrix(2, 1, 1)])
                .unwrap()
                .scaled(std::f64::consts::FRAC_1_SQRT_2),
        )
        .unwrap();
        let r = empirical_contraction(&m, 20, 1).unwrap();
        assert!(r.iter().all(|x| *x < 1e-12));
        assert!(empirical_contraction(&example_ifs(), 20, 1).unwrap().len() == 2);
        assert!(empirical_contraction(&example_ifs(), 5, 1).is_err());
    }

    #[test]
    fn config_validation() {
        let m = example_ifs();
        assert!(estimate_barycenter(&m, &SimConfig { samples: 50, ..SimConfig::new(1) }).is_err());
        assert!(sample_trajectory(&m, &DensityMatrix::maximally_mixed(2), 0, 1).is_err());
    }
}
