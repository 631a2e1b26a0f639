//! Cyclic Jacobi methods: two-sided for Hermitian matrices, one-sided
//! (Hestenes) for the singular values of the triangular QR factor.

use alloc::vec::Vec;

use super::{thin_qr, DenseError, DenseMatrix, EigPair};
use crate::vector::{dotc, fix_phase, norm2, normalize};
use crate::C64;

const MAX_SWEEPS: usize = 30;

/// Rotation that diagonalizes the Hermitian 2×2 `[[app, apq], [conj(apq), aqq]]`.
/// Returns `(c, s, e)` for the transform `J` with columns
/// `J[:,p] = (c, −s·ē)`, `J[:,q] = (s, c·ē)` in the `(p, q)` plane.
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let mag = apq.norm();
    let e = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + libm::hypot(theta, 1.0))
    } else {
        -1.0 / (-theta + libm::hypot(theta, 1.0))
    };
    let c = 1.0 / libm::hypot(t, 1.0);
    (c, t * c, e)
}

/// `A ← A·J` restricted to columns p, q.
fn rotate_columns(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64, e: C64) {
    let ec = e.conj();
    for k in 0..a.rows() {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * (s * ec);
        a[(k, q)] = akp * s + akq * (c * ec);
    }
}

/// `A ← Jᴴ·A` restricted to rows p, q.
fn rotate_rows(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64, e: C64) {
    for k in 0..a.cols() {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * (s * e);
        a[(q, k)] = apk * s + aqk * (c * e);
    }
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// A rotation is skipped when `|a_pq| ≤ eps·sqrt(|a_pp·a_qq|)`, which keeps
/// small eigenvalues of semidefinite inputs to high relative accuracy.
pub fn eig_hermitian(s: &DenseMatrix) -> Result<Vec<EigPair>, DenseError> {
    if !s.is_square() {
        return Err(DenseError::Dimension("eig_hermitian needs a square matrix"));
    }
    let m = s.rows();
    let mut a = s.clone();
    for i in 0..m {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut v = DenseMatrix::identity(m);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[(p, q)];
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if apq.norm() <= f64::EPSILON * libm::sqrt((app * aqq).abs()) || apq.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                let (c, sn, e) = jacobi_rotation(app, aqq, apq);
                rotate_columns(&mut a, p, q, c, sn, e);
                rotate_rows(&mut a, p, q, c, sn, e);
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                rotate_columns(&mut v, p, q, c, sn, e);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(DenseError::NoConvergence {
            iterations: MAX_SWEEPS,
        });
    }
    let mut pairs: Vec<EigPair> = (0..m)
        .map(|j| {
            let mut z = v.column(j).to_vec();
            normalize(&mut z);
            fix_phase(&mut z);
            EigPair {
                value: C64::new(a[(j, j)].re, 0.0),
                vector: z,
            }
        })
        .collect();
    pairs.sort_by(|x, y| x.value.re.partial_cmp(&y.value.re).unwrap_or(core::cmp::Ordering::Equal));
    Ok(pairs)
}

/// Smallest eigenvalue of a Hermitian (semidefinite) matrix and its unit eigenvector.
pub fn eig_hermitian_smallest(s: &DenseMatrix) -> Result<EigPair, DenseError> {
    if s.rows() == 0 {
        return Err(DenseError::Dimension("empty matrix"));
    }
    Ok(eig_hermitian(s)?.swap_remove(0))
}

/// Smallest singular value of a tall matrix with its right singular vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriplet {
    pub sigma_min: f64,
    pub z: Vec<C64>,
    /// `σ_min ≤ n·eps·‖W‖`.
    pub rank_deficient: bool,
}

/// Thin QR of the columns of `W` (Gram–Schmidt with refinement) followed by a
/// one-sided Jacobi SVD of the `m×m` factor `R`.
pub fn smallest_singular_triplet_qr(columns: &[Vec<C64>]) -> Result<SingularTriplet, DenseError> {
    let m = columns.len();
    let n = columns.first().map_or(0, Vec::len);
    if m == 0 || n < m {
        return Err(DenseError::Dimension("need a tall matrix with at least one column"));
    }
    let (_, mut r) = thin_qr(columns);
    let mut v = DenseMatrix::identity(m);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let alpha = norm2(r.column(p)).powi(2);
                let beta = norm2(r.column(q)).powi(2);
                let gamma = dotc(r.column(p), r.column(q));
                if gamma.norm() <= f64::EPSILON * libm::sqrt(alpha * beta) || gamma.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                let (c, sn, e) = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut r, p, q, c, sn, e);
                rotate_columns(&mut v, p, q, c, sn, e);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(DenseError::NoConvergence {
            iterations: MAX_SWEEPS,
        });
    }
    let (idx, sigma_min) = (0..m)
        .map(|j| (j, norm2(r.column(j))))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal))
        .expect("m >= 1");
    let mut z = v.column(idx).to_vec();
    normalize(&mut z);
    fix_phase(&mut z);
    let wnorm = libm::sqrt(columns.iter().map(|c| norm2(c).powi(2)).sum::<f64>());
    Ok(SingularTriplet {
        sigma_min,
        z,
        rank_deficient: sigma_min <= n as f64 * f64::EPSILON * wnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::testutil::{random_matrix, random_orthonormal};
    use crate::vector::{sub, ZERO};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn diagonal_smallest() {
        let s = DenseMatrix::from_diagonal(&[c(3.0), c(1.0), c(2.0)]);
        let p = eig_hermitian_smallest(&s).unwrap();
        assert_eq!(p.value, c(1.0));
        assert!((p.vector[1] - c(1.0)).norm() < 1e-15);
        let p = eig_hermitian_smallest(&DenseMatrix::identity(4)).unwrap();
        assert_eq!(p.value, c(1.0));
    }

    #[test]
    fn constructed_spectrum_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..10 {
            let m = 6 + trial;
            let q = random_orthonormal(&mut rng, m, m);
            let mut d: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..10.0)).collect();
            d[trial % m] = 1e-6 * (1.0 + trial as f64);
            let dm = DenseMatrix::from_diagonal(&d.iter().map(|&x| c(x)).collect::<Vec<_>>());
            let s = q.adjoint().matmul(&dm).matmul(&q);
            let p = eig_hermitian_smallest(&s).unwrap();
            let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
            // relative accuracy is limited by the rounding in forming QᴴDQ
            assert!((p.value.re - dmin).abs() <= 1e-12 * s.frobenius_norm(), "{} vs {dmin}", p.value.re);
            let sz = s.matvec(&p.vector);
            let lz: Vec<C64> = p.vector.iter().map(|z| z * p.value).collect();
            assert!(norm2(&sub(&sz, &lz)) <= 1e-11 * s.frobenius_norm());
            assert!((norm2(&p.vector) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn diagonal_spectrum_to_relative_accuracy() {
        // exactly representable Hermitian input with a tiny eigenvalue
        let s = DenseMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(1.0),
            (1, 1) => c(1e-20),
            _ => ZERO,
        });
        let p = eig_hermitian_smallest(&s).unwrap();
        assert!((p.value.re - 1e-20).abs() <= 1e-12 * 1e-20);
    }

    #[test]
    fn qr_triplet_small_examples() {
        let w = alloc::vec![alloc::vec![c(2.0), c(0.0), c(0.0)], alloc::vec![c(0.0), c(1.0), c(0.0)]];
        let t = smallest_singular_triplet_qr(&w).unwrap();
        assert!((t.sigma_min - 1.0).abs() < 1e-15);
        assert!((t.z[1] - c(1.0)).norm() < 1e-15);
        assert!(!t.rank_deficient);

        let w = alloc::vec![alloc::vec![c(1.0), c(2.0), c(0.0)], alloc::vec![ZERO; 3]];
        let t = smallest_singular_triplet_qr(&w).unwrap();
        assert_eq!(t.sigma_min, 0.0);
        assert!((t.z[1] - c(1.0)).norm() < 1e-15);
        assert!(t.rank_deficient);
    }

    #[test]
    fn qr_route_matches_cross_product_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let w = random_matrix(&mut rng, 40, 8, true);
            let cols: Vec<Vec<C64>> = (0..8).map(|j| w.column(j).to_vec()).collect();
            let t = smallest_singular_triplet_qr(&cols).unwrap();
            let p = eig_hermitian_smallest(&w.adjoint().matmul(&w)).unwrap();
            let rel = (t.sigma_min * t.sigma_min - p.value.re).abs() / p.value.re;
            assert!(rel <= 1e-9, "{rel}");
            let wz = norm2(&w.matvec(&t.z));
            assert!((wz - t.sigma_min).abs() <= 1e-10 * w.frobenius_norm());
            assert!(dotc(&t.z, &p.vector).norm() >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn non_hermitian_input_rejected_dimensionally() {
        let r = DenseMatrix::zeros(2, 3);
        assert!(eig_hermitian(&r).is_err());
        assert!(smallest_singular_triplet_qr(&[alloc::vec![c(1.0)], alloc::vec![c(1.0)]]).is_err());
    }
}
