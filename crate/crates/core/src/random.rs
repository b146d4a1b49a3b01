//! Seeded random generators for states, unitaries, Kraus families and stochastic matrices.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{c64, ComplexMatrix, DensityMatrix};
use crate::qifs::KrausFamily;
use crate::thermo::StochasticMatrix;

/// Independent generator for `(seed, stream)`. Streams never overlap, so
/// parallel sweeps can hand sample `i` the stream `i`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Full-rank random state `G G* / tr(G G*)`.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DensityMatrix {
    let g = ginibre(rng, n, n);
    DensityMatrix::from_positive(&g * g.adjoint()).expect("Ginibre product has positive trace")
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phase of R's diagonal removed).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let qr = ginibre(rng, n, n).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// `k` blocks of an isometry `C^n -> C^{kn}`: stack Gaussian blocks,
/// orthonormalize the columns, split. The result satisfies `sum W*W = I`.
pub fn random_normalized_family<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> KrausFamily {
    let stacked = ginibre(rng, k * n, n);
    let q = stacked.qr().q();
    let ops = (0..k).map(|b| q.rows(b * n, n).into_owned()).collect();
    KrausFamily::new(ops).expect("isometry blocks form a valid family")
}

/// Column-stochastic matrix with every entry at least `min_entry`.
pub fn random_stochastic<R: Rng + ?Sized>(rng: &mut R, dim: usize, min_entry: f64) -> StochasticMatrix {
    assert!(min_entry * dim as f64 <= 1.0, "min_entry too large for dimension");
    let mut cols = vec![vec![0.0; dim]; dim];
    for col in cols.iter_mut() {
        let raw: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 1e-9).collect();
        let s: f64 = raw.iter().sum();
        let free = 1.0 - min_entry * dim as f64;
        for (x, r) in col.iter_mut().zip(&raw) {
            *x = min_entry + free * r / s;
        }
    }
    StochasticMatrix::from_columns(&cols).expect("columns sum to one")
}

/// Column-stochastic matrix from entries drawn uniformly in `[lo, hi)` and
/// normalized per column. A narrow band keeps the chain strongly mixing.
pub fn random_stochastic_banded<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    lo: f64,
    hi: f64,
) -> StochasticMatrix {
    let cols: Vec<Vec<f64>> = (0..dim)
        .map(|_| {
            let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(lo..hi)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    StochasticMatrix::from_columns(&cols).expect("columns sum to one")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{identity, max_abs};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(1, 0).random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let x: u64 = stream_rng(1, 0).random();
        let y: u64 = stream_rng(1, 1).random();
        assert_ne!(x, y);
    }

    #[test]
    fn unitary_and_family_are_well_formed() {
        let mut rng = stream_rng(9, 0);
        for n in 1..=4 {
            let u = random_unitary(&mut rng, n);
            assert!(max_abs(&(&u * u.adjoint() - identity(n))) < 1e-12);
            let w = random_normalized_family(&mut rng, n, 3);
            assert!(w.is_normalized());
        }
    }

    #[test]
    fn stochastic_respects_floor() {
        let mut rng = stream_rng(4, 0);
        for _ in 0..20 {
            let p = random_stochastic(&mut rng, 3, 0.05);
            for i in 0..3 {
                for j in 0..3 {
                    assert!(p.get(i, j) >= 0.05 - 1e-15);
                }
            }
        }
    }
}
