use alloc::vec::Vec;

use super::{DenseError, DenseMatrix};
use crate::C64;

/// Lower-triangular `L` with `LLᴴ = G` for Hermitian positive definite `G`.
///
/// A pivot at or below `m·eps·max(diag G)` is reported as
/// [`DenseError::NotPositiveDefinite`].
pub fn cholesky(g: &DenseMatrix) -> Result<DenseMatrix, DenseError> {
    if !g.is_square() {
        return Err(DenseError::Dimension("cholesky needs a square matrix"));
    }
    let m = g.rows();
    let max_diag = (0..m).map(|i| g[(i, i)].re.abs()).fold(0.0, f64::max);
    let tol = m as f64 * f64::EPSILON * max_diag;
    let mut l = DenseMatrix::zeros(m, m);
    for j in 0..m {
        let mut d = g[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > tol) {
            return Err(DenseError::NotPositiveDefinite { pivot: j });
        }
        let ljj = libm::sqrt(d);
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in j + 1..m {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `Lx = b` for lower-triangular `L`.
pub fn solve_lower(l: &DenseMatrix, b: &[C64]) -> Vec<C64> {
    let m = l.rows();
    let mut x = b.to_vec();
    for i in 0..m {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `Lᴴx = b` for lower-triangular `L`.
pub fn solve_lower_adjoint(l: &DenseMatrix, b: &[C64]) -> Vec<C64> {
    let m = l.rows();
    let mut x = b.to_vec();
    for i in (0..m).rev() {
        let mut s = x[i];
        for k in i + 1..m {
            s -= l[(k, i)].conj() * x[k];
        }
        x[i] = s / l[(i, i)].conj();
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::testutil::random_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_factor() {
        let l = cholesky(&DenseMatrix::identity(4)).unwrap();
        assert_eq!(l, DenseMatrix::identity(4));
    }

    #[test]
    fn hand_factorization() {
        let g = DenseMatrix::from_real_rows(&[&[4.0, 2.0], &[2.0, 2.0]]);
        let l = cholesky(&g).unwrap();
        let expect = DenseMatrix::from_real_rows(&[&[2.0, 0.0], &[1.0, 1.0]]);
        assert!(l.sub(&expect).frobenius_norm() < 1e-15);
    }

    #[test]
    fn gram_matrix_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_matrix(&mut rng, 40, 40, true);
        let v = random_matrix(&mut rng, 40, 8, true);
        let mv = m.matmul(&v);
        let g = mv.adjoint().matmul(&mv);
        let l = cholesky(&g).unwrap();
        let err = l.matmul(&l.adjoint()).sub(&g).frobenius_norm() / g.frobenius_norm();
        assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn singular_rejected() {
        let g = DenseMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(cholesky(&g), Err(DenseError::NotPositiveDefinite { pivot: 1 }));
    }

    #[test]
    fn triangular_solves() {
        let g = DenseMatrix::from_real_rows(&[&[4.0, 2.0], &[2.0, 2.0]]);
        let l = cholesky(&g).unwrap();
        let b = [C64::new(1.0, 1.0), C64::new(-2.0, 0.5)];
        let y = solve_lower(&l, &b);
        assert!(crate::vector::norm2(&crate::vector::sub(&l.matvec(&y), &b)) < 1e-15);
        let x = solve_lower_adjoint(&l, &b);
        assert!(crate::vector::norm2(&crate::vector::sub(&l.adjoint().matvec(&x), &b)) < 1e-15);
    }
}
