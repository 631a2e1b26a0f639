//! Shared fixtures for unit tests.

use alloc::vec::Vec;

use rand::Rng;

use crate::sparse::{Field, SparseMatrix, Symmetry};
use crate::C64;

/// Random complex sparse matrix with `per_row` random off-diagonal entries per
/// row and a diagonal shifted by `diag`.
pub fn random_sparse<R: Rng>(rng: &mut R, n: usize, per_row: usize, diag: f64) -> SparseMatrix {
    let mut entries = Vec::new();
    for i in 0..n {
        entries.push((i, i, C64::new(diag + rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5))));
        for _ in 0..per_row {
            let j = rng.gen_range(0..n);
            entries.push((i, j, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
    }
    SparseMatrix::from_triplets(n, &entries, Field::Complex, Symmetry::General).unwrap()
}

/// Real matrix `P·T·Pᵀ` with `T` upper triangular (sparse random strict upper
/// part) and a random permutation `P`; returns the matrix and its eigenvalues,
/// the diagonal of `T`.
pub fn planted<R: Rng>(rng: &mut R, n: usize) -> (SparseMatrix, Vec<C64>) {
    let eigs: Vec<C64> = (0..n)
        .map(|k| C64::new(-5.0 + 10.0 * (k as f64 + rng.gen_range(0.1..0.9)) / n as f64, 0.0))
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut entries = Vec::new();
    for i in 0..n {
        entries.push((perm[i], perm[i], eigs[i]));
        if i + 1 < n {
            for _ in 0..3 {
                let j = rng.gen_range(i + 1..n);
                entries.push((perm[i], perm[j], C64::new(rng.gen_range(-0.3..0.3), 0.0)));
            }
        }
    }
    let a = SparseMatrix::from_triplets(n, &entries, Field::Real, Symmetry::General).unwrap();
    (a, eigs)
}
