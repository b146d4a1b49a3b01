use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use qifs_core::holevo::{
    born_joint, holevo_information, induced_ensemble, mutual_information, povm_from_weights,
};
use qifs_core::markov::{
    embed_classic_bridge, embed_perron, embed_stochastic, parametric_perron_weights, perron_weighted,
    stationary_vector_2x2,
};
use qifs_core::matcore::{distance, hermitize, hs_distance, von_neumann_entropy, ComplexMatrix};
use qifs_core::random::{
    ginibre, random_density_matrix, random_normalized_family, random_stochastic, random_unitary, stream_rng,
};
use qifs_core::solvers::{
    closed_form_2x2_diagonal, closed_form_embedding, ruelle_apply, solve_lambda_fixed_point,
    solve_ruelle_eigen, superoperator_fixed_state, SolveConfig,
};
use qifs_core::thermo::{
    classic_inequality_check, markov_entropy, pressure_check_trace_form, qifs_entropy, renormalize_potential,
};
use qifs_core::{
    DensityMatrix, DistanceKind, EmbeddingKind, KrausFamily, LinearFunctional, QifsModel, SimConfig, Word,
};

fn model(seed: u64, dim: usize, k: usize) -> QifsModel {
    let mut rng = stream_rng(seed, 0);
    let v = random_normalized_family(&mut rng, dim, k);
    let w = random_normalized_family(&mut rng, dim, k);
    QifsModel::new(v, w).unwrap()
}

fn random_family(seed: u64, stream: u64, dim: usize, k: usize) -> KrausFamily {
    let mut rng = stream_rng(seed, stream);
    KrausFamily::new((0..k).map(|_| ginibre(&mut rng, dim, dim)).collect()).unwrap()
}

fn fixed(m: &QifsModel) -> DensityMatrix {
    solve_lambda_fixed_point(m, &SolveConfig::default()).unwrap().rho
}

fn all_words(k: usize, n: usize) -> Vec<Word> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|w: Vec<usize>| {
                (0..k).map(move |l| {
                    let mut x = w.clone();
                    x.push(l);
                    x
                })
            })
            .collect();
    }
    out.into_iter().map(|w| Word::new(w, k).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hermitize_is_idempotent(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = stream_rng(seed, 0);
        let a = ginibre(&mut rng, n, n);
        let h = hermitize(&a);
        prop_assert_eq!(hermitize(&h), h.clone());
        let rho = random_density_matrix(&mut rng, n);
        prop_assert_eq!(&hermitize(rho.matrix()), rho.matrix());
    }

    #[test]
    fn von_neumann_entropy_is_unitarily_invariant_and_bounded(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = stream_rng(seed, 0);
        let rho = random_density_matrix(&mut rng, n);
        let u = random_unitary(&mut rng, n);
        let rotated = DensityMatrix::new(hermitize(&(&u * rho.matrix() * u.adjoint()))).unwrap();
        let s = von_neumann_entropy(&rho).value();
        prop_assert!((s - von_neumann_entropy(&rotated).value()).abs() < 1e-10);
        prop_assert!(s >= 0.0 && s <= (n as f64).ln() + 1e-12);
    }

    #[test]
    fn distances_are_metrics(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = stream_rng(seed, 0);
        let a = random_density_matrix(&mut rng, n);
        let b = random_density_matrix(&mut rng, n);
        let c = random_density_matrix(&mut rng, n);
        for kind in [DistanceKind::HilbertSchmidt, DistanceKind::Trace, DistanceKind::Bures] {
            let ab = distance(&a, &b, kind).unwrap();
            let ba = distance(&b, &a, kind).unwrap();
            let bc = distance(&b, &c, kind).unwrap();
            let ac = distance(&a, &c, kind).unwrap();
            prop_assert!((ab - ba).abs() < 1e-10);
            prop_assert!(ac <= ab + bc + 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn branch_probabilities_sum_to_one(seed in any::<u64>(), n in 1usize..4, k in 1usize..5) {
        let m = model(seed, n, k);
        let rho = random_density_matrix(&mut stream_rng(seed, 1), n);
        let total: f64 = m.branch_probs(&rho).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lambda_preserves_states_and_duality_holds(seed in any::<u64>(), n in 1usize..4, k in 1usize..4) {
        let m = model(seed, n, k);
        let mut rng = stream_rng(seed, 1);
        let rho = random_density_matrix(&mut rng, n);
        let out = m.lambda_apply(&rho).unwrap();
        prop_assert!(DensityMatrix::new(out.matrix().clone()).is_ok());
        let psi = LinearFunctional(hermitize(&ginibre(&mut rng, n, n)));
        let lhs = psi.eval(&out);
        let rhs = m.dual_apply(|s| psi.eval(s), &rho).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn word_probabilities_sum_to_one(seed in any::<u64>(), k in 1usize..4, n in 1usize..6) {
        prop_assume!(k.pow(n as u32) <= 300);
        let m = model(seed, 2, k);
        let rho = random_density_matrix(&mut stream_rng(seed, 1), 2);
        let total: f64 = all_words(k, n).iter().map(|w| m.word_prob_and_map(w, &rho).unwrap().0).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dual_entropy_is_nonincreasing_at_homogeneous_fixed_points(seed in any::<u64>(), n in 1usize..4, k in 2usize..4) {
        let m = QifsModel::homogeneous(random_normalized_family(&mut stream_rng(seed, 0), n, k)).unwrap();
        let rho = fixed(&m);
        let mut prev = m.shannon_h(&rho);
        for n in 1..=5 {
            let cur = m.iterated_dual_entropy(&rho, n).unwrap().value();
            prop_assert!(cur <= prev + 1e-10, "n = {}: {} > {}", n, cur, prev);
            prev = cur;
        }
    }

    #[test]
    fn entropy_lies_between_zero_and_log_k(seed in any::<u64>(), n in 1usize..4, k in 1usize..5) {
        let m = model(seed, n, k);
        let h = qifs_entropy(&m, &fixed(&m)).unwrap().value();
        prop_assert!(h >= 0.0 && h <= (k as f64).ln() + 1e-12);
    }

    #[test]
    fn eigenpairs_pass_post_hoc_checks(seed in any::<u64>(), n in 1usize..4, k in 1usize..4) {
        let h = random_family(seed, 0, n, k);
        let v = random_family(seed, 1, n, k);
        let cfg = SolveConfig::default();
        let r = solve_ruelle_eigen(&h, &v, &cfg).unwrap();
        let img = ruelle_apply(&h, &v, &r.rho_beta).unwrap();
        prop_assert!(hs_distance(&img, &r.rho_beta.matrix().scale(r.beta)) / r.beta <= 10.0 * cfg.tol);
        prop_assert!((r.beta - img.trace().re).abs() <= 1e-10 * r.beta);
        for alpha in [0.1, 1.0, 7.3] {
            let scaled = solve_ruelle_eigen(&renormalize_potential(&h, alpha).unwrap(), &v, &cfg).unwrap();
            prop_assert!((scaled.beta - alpha * r.beta).abs() <= 1e-9 * alpha * r.beta);
            prop_assert!(hs_distance(scaled.rho_beta.matrix(), r.rho_beta.matrix()) <= 1e-8);
        }
    }

    #[test]
    fn homogeneous_fixed_point_matches_superoperator(seed in any::<u64>(), n in 1usize..4, k in 2usize..4) {
        let v = random_normalized_family(&mut stream_rng(seed, 0), n, k);
        let m = QifsModel::homogeneous(v.clone()).unwrap();
        let oracle = superoperator_fixed_state(&v).unwrap();
        prop_assert!(hs_distance(fixed(&m).matrix(), oracle.matrix()) <= 1e-9);
    }

    #[test]
    fn closed_form_matches_iteration(a in 0.01f64..5.0, b in 0.01f64..5.0, c in 0.01f64..5.0, d in 0.01f64..5.0) {
        let cf = closed_form_2x2_diagonal(a, b, c, d).unwrap();
        let (h, v) = closed_form_embedding(a, b, c, d);
        let r = solve_ruelle_eigen(&h, &v, &SolveConfig::default()).unwrap();
        prop_assert!((r.beta - cf.lambda_plus).abs() <= 1e-9 * cf.lambda_plus.max(1.0));
        prop_assert!((r.rho_beta.diag()[0] - cf.rho_plus.diag()[0]).abs() <= 1e-9);
    }

    #[test]
    fn basic_inequality_on_random_instances(seed in any::<u64>(), n in 1usize..4, k in 2usize..4) {
        let h = random_family(seed, 0, n, k);
        let v = random_family(seed, 1, n, k);
        let eig = solve_ruelle_eigen(&h, &v, &SolveConfig::default()).unwrap();
        let w = random_normalized_family(&mut stream_rng(seed, 2), n, k);
        let m = QifsModel::new(v.clone(), w).unwrap();
        let rho = fixed(&m);
        let r = pressure_check_trace_form(&m, &h, &eig, &rho).unwrap();
        prop_assert!(r.gap >= -1e-9, "gap {}", r.gap);
        if r.equality_residual <= 1e-9 {
            prop_assert!(r.gap <= 1e-8);
        }
        // H -> sqrt(alpha) H moves both sides by ln alpha.
        let alpha = 3.7;
        let hs = renormalize_potential(&h, alpha).unwrap();
        let eig_s = solve_ruelle_eigen(&hs, &v, &SolveConfig::default()).unwrap();
        let rs = pressure_check_trace_form(&m, &hs, &eig_s, &rho).unwrap();
        prop_assert!((rs.lhs - r.lhs - alpha.ln()).abs() <= 1e-9);
        prop_assert!((rs.log_beta - r.log_beta - alpha.ln()).abs() <= 1e-9);
        prop_assert!((rs.gap - r.gap).abs() <= 1e-9);
    }

    #[test]
    fn markov_embeddings_match_markov_entropy(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let p = random_stochastic(&mut rng, 2, 0.05);
        let q = random_stochastic(&mut rng, 2, 0.05);
        for kind in [EmbeddingKind::Hom4, EmbeddingKind::NonHom4, EmbeddingKind::Hom2, EmbeddingKind::NonHom2] {
            let m = embed_stochastic(&p, Some(&q), kind).unwrap();
            prop_assert!(m.w().normalization_deviation() <= 1e-12);
            let rho = fixed(&m);
            let h = qifs_entropy(&m, &rho).unwrap().value();
            let oracle = markov_entropy(kind.governing(&p, Some(&q))).unwrap().value();
            prop_assert!((h - oracle).abs() <= 1e-10);
            if kind.arity() == 4 {
                prop_assert!(rho.off_diagonal_norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn perron_embedding_solves_eigenproblem(x in prop::array::uniform4(0.05f64..6.0)) {
        let a = DMatrix::from_row_slice(2, 2, &x);
        let (v, h) = embed_perron(&a).unwrap();
        let r = solve_ruelle_eigen(&h, &v, &SolveConfig::default()).unwrap();
        let d = nalgebra::DVector::from_vec(r.rho_beta.diag());
        prop_assert!((&a * &d - &d * r.beta).norm() <= 1e-9 * r.beta.max(1.0));
    }

    #[test]
    fn classic_rhs_matches_bridge_rhs(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let a = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
        let q = random_stochastic(&mut rng, 2, 0.05);
        let (m, h) = embed_classic_bridge(&a, &q).unwrap();
        let eig = solve_ruelle_eigen(&h, m.v(), &SolveConfig::default()).unwrap();
        prop_assert!(eig.rho_beta.off_diagonal_norm() <= 1e-10);
        let rho = fixed(&m);
        prop_assert!(rho.off_diagonal_norm() <= 1e-10);
        let trace = pressure_check_trace_form(&m, &h, &eig, &rho).unwrap();
        let classic = classic_inequality_check(&a, &q).unwrap();
        prop_assert!((trace.log_beta - classic.log_beta).abs() <= 1e-9);
        prop_assert!(classic.gap >= -1e-12);
    }

    #[test]
    fn parametric_perron_weights_keep_the_fixed_point(seed in any::<u64>(), s1 in 0.05f64..0.95, s3 in 0.05f64..0.95) {
        let p = random_stochastic(&mut stream_rng(seed, 0), 2, 0.05);
        let q1 = s1 / (p.get(0, 0) * p.get(0, 0));
        let q3 = s3 / (p.get(1, 0) * p.get(0, 1));
        let (h, v) = perron_weighted(&p, parametric_perron_weights(&p, q1, q3).unwrap()).unwrap();
        let r = solve_ruelle_eigen(&h, &v, &SolveConfig::default()).unwrap();
        prop_assert!((r.beta - 1.0).abs() <= 1e-10);
        prop_assert!((r.rho_beta.diag()[0] - stationary_vector_2x2(&p).unwrap()[0]).abs() <= 1e-9);
    }

    #[test]
    fn holevo_bounds_on_induced_ensembles(seed in any::<u64>(), n in 1usize..4, k in 2usize..4) {
        let m = model(seed, n, k);
        let rho = fixed(&m);
        let e = induced_ensemble(&m, &rho).unwrap();
        let xi = holevo_information(&e);
        let sbar = von_neumann_entropy(&e.average()).value();
        prop_assert!(xi >= -1e-10 && xi <= sbar + 1e-12 && sbar <= (e.dim() as f64).ln() + 1e-12);
        let h = qifs_entropy(&m, &rho).unwrap().value();
        prop_assert!((e.average_entropy() - h).abs() <= 1e-10);
        let probes: Vec<DensityMatrix> = (0..k).map(|j| m.branch_map(j, &rho).unwrap()).collect();
        let bob = povm_from_weights(&random_normalized_family(&mut stream_rng(seed, 9), n, 3)).unwrap();
        let joint = born_joint(&e, &bob.lift_to_labels(&probes).unwrap()).unwrap();
        prop_assert!(mutual_information(&joint).unwrap().value() <= xi + 1e-9);
    }
}

#[test]
fn nonhomogeneous_dual_entropy_can_increase() {
    // Jensen still gives U h <= h at the fixed point, but U^n h need not be
    // concave without W = V, and the sequence can rise later on.
    let m = model(3343401909993383656, 2, 2);
    let rho = fixed(&m);
    let h: Vec<f64> = (0..=5).map(|n| m.iterated_dual_entropy(&rho, n).unwrap().value()).collect();
    assert!(h[1] <= h[0] + 1e-12);
    assert!(h.windows(2).any(|w| w[1] > w[0] + 1e-3), "{h:?}");
}

/// `V_i = |a_i><b_i|`: every branch image is a fixed pure state, so `Λ` is affine on the support of the invariant
/// measure and the barycenter is the fixed point.
fn rank_one_model(seed: u64, k: usize) -> QifsModel {
    let mut rng = stream_rng(seed, 0);
    let v: Vec<ComplexMatrix> = (0..k)
        .map(|_| {
            let a = ginibre(&mut rng, 2, 1);
            let b = ginibre(&mut rng, 1, 2);
            a.unscale(a.norm()) * b.unscale(b.norm())
        })
        .collect();
    let w = random_normalized_family(&mut rng, 2, k);
    QifsModel::new(KrausFamily::new(v).unwrap(), w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sampling_is_reproducible_and_consistent(seed in any::<u64>(), k in 2usize..4) {
        let m = rank_one_model(seed, k);
        let cfg = SimConfig { samples: 20_000, burn_in: 100, ..SimConfig::new(seed) };
        let b = qifs_core::sim::estimate_barycenter(&m, &cfg).unwrap();
        prop_assert_eq!(&b, &qifs_core::sim::estimate_barycenter(&m, &cfg).unwrap());
        let rho = fixed(&m);
        prop_assert!(b.z_score(&rho) <= 4.5, "z = {}", b.z_score(&rho));
        let h = qifs_core::sim::estimate_entropy_integral(&m, &cfg).unwrap();
        let exact = qifs_entropy(&m, &rho).unwrap().value();
        prop_assert!((h.mean - exact).abs() <= 4.5 * h.stderr.max(1e-12), "{} vs {}", h.mean, exact);
    }
}
