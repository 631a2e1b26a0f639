//! Test matrices with a known spectrum.

use hsira_core::sparse::{Field, Symmetry};
use hsira_core::{SparseMatrix, C64};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A matrix together with its exact eigenvalues and a target inside the spectrum.
#[derive(Debug, Clone)]
pub struct PlantedProblem {
    pub matrix: SparseMatrix,
    pub eigenvalues: Vec<C64>,
    pub sigma: C64,
    /// The eigenvalue closest to `sigma`.
    pub target: C64,
}

/// `A = P·T·Pᵀ` with `T` upper triangular: the diagonal of `T` is the
/// spectrum, the strict upper part has three random entries per row, and
/// `P` is a random permutation.
///
/// Real problems have eigenvalues spread over `[−5, 5]`; complex ones also
/// get imaginary parts in `[−1, 1]`. The target sits at 0.3 times the gap
/// from an eigenvalue in the middle half of the spectrum, so the wanted
/// eigenvalue is interior and unambiguous.
pub fn planted_problem(seed: u64, n: usize, complex: bool) -> PlantedProblem {
    assert!(n >= 4, "need at least four eigenvalues");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eigenvalues: Vec<C64> = (0..n)
        .map(|k| {
            let re = -5.0 + 10.0 * (k as f64 + rng.gen_range(0.1..0.9)) / n as f64;
            let im = if complex { rng.gen_range(-1.0..1.0) } else { 0.0 };
            C64::new(re, im)
        })
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut entries = Vec::with_capacity(4 * n);
    for i in 0..n {
        entries.push((perm[i], perm[i], eigenvalues[i]));
        if i + 1 < n {
            for _ in 0..3 {
                let j = rng.gen_range(i + 1..n);
                let v = if complex {
                    C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))
                } else {
                    C64::new(rng.gen_range(-0.3..0.3), 0.0)
                };
                entries.push((perm[i], perm[j], v));
            }
        }
    }
    let field = if complex { Field::Complex } else { Field::Real };
    let matrix = SparseMatrix::from_triplets(n, &entries, field, Symmetry::General).expect("indices in range");

    let target = eigenvalues[rng.gen_range(n / 4..3 * n / 4)];
    let gap = eigenvalues
        .iter()
        .filter(|&&l| l != target)
        .map(|l| (l - target).norm())
        .fold(f64::INFINITY, f64::min);
    let offset = if complex {
        C64::from_polar(0.3 * gap, rng.gen_range(0.0..std::f64::consts::TAU))
    } else {
        C64::new(if rng.gen_bool(0.5) { 0.3 } else { -0.3 } * gap, 0.0)
    };
    PlantedProblem {
        matrix,
        sigma: target + offset,
        target,
        eigenvalues,
    }
}

/// The entry of `values` closest to `sigma`.
pub fn closest_to(values: &[C64], sigma: C64) -> Option<C64> {
    values
        .iter()
        .copied()
        .min_by(|a, b| (a - sigma).norm().total_cmp(&(b - sigma).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_is_closest_and_deterministic() {
        for seed in 0..10 {
            for complex in [false, true] {
                let p = planted_problem(seed, 50, complex);
                assert_eq!(closest_to(&p.eigenvalues, p.sigma), Some(p.target));
                let q = planted_problem(seed, 50, complex);
                assert_eq!(p.matrix, q.matrix);
                assert_eq!(p.matrix.is_real(), !complex);
            }
        }
    }

    #[test]
    fn spectrum_is_the_planted_diagonal() {
        // trace and the permuted diagonal both carry the eigenvalues
        let p = planted_problem(3, 30, true);
        let mut diag: Vec<C64> = (0..30).map(|i| p.matrix.get(i, i)).collect();
        let mut eig = p.eigenvalues.clone();
        let key = |z: &C64| (z.re, z.im);
        diag.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        eig.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        assert_eq!(diag, eig);
    }
}
