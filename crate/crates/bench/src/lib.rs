//! Fixed inputs shared by the benchmarks.

use qifs_core::matcore::{identity, real_matrix, unit_matrix, ComplexMatrix};
use qifs_core::random::{random_normalized_family, stream_rng};
use qifs_core::{KrausFamily, QifsModel};

/// Elementary dynamics with rank-one potentials of traces (4, 1, 2, 1).
pub fn elementary_pair() -> (KrausFamily, KrausFamily) {
    let v = (0..4).map(|k| unit_matrix(2, k / 2, k % 2)).collect();
    let top = |s: f64| -> ComplexMatrix { real_matrix(&[&[s, s], &[0.0, 0.0]]) };
    let h = vec![top(2.0), identity(2), top(2f64.sqrt()), identity(2)];
    (KrausFamily::new(h).unwrap(), KrausFamily::new(v).unwrap())
}

pub fn random_model(dim: usize, arity: usize, seed: u64) -> QifsModel {
    let mut rng = stream_rng(seed, 0);
    let v = random_normalized_family(&mut rng, dim, arity);
    let w = random_normalized_family(&mut rng, dim, arity);
    QifsModel::new(v, w).unwrap()
}
