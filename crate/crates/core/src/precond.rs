//! ILUT preconditioner for `A − σI` and the projected preconditioner for the
//! Jacobi–Davidson correction equation.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

use thiserror::Error;

use crate::krylov::Preconditioner;
use crate::sparse::SparseMatrix;
use crate::vector::{axpy, dotc, norm2, ZERO};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrecondError {
    #[error("drop tolerance must be finite and nonnegative, got {0}")]
    InvalidDropTol(f64),
    #[error("zero pivot in row {row}")]
    ZeroPivot { row: usize },
    #[error("preconditioner nearly annihilates the projection vector (yᴴM⁻¹y = {value:e})")]
    BreakdownScalar { value: f64 },
}

/// Per-row limit on kept off-diagonal entries in each factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillCap {
    #[default]
    Unbounded,
    /// At most this many entries per row in L and in U (diagonal not counted).
    Fixed(usize),
    /// At most as many entries per row as the original row has in the
    /// corresponding strict triangle of `A − σI`.
    Original,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlutOptions {
    pub drop_tol: f64,
    pub fill_cap: FillCap,
    /// Replace tiny pivots instead of failing with [`PrecondError::ZeroPivot`].
    pub patch_pivots: bool,
}

impl IlutOptions {
    pub fn new(drop_tol: f64) -> Self {
        Self {
            drop_tol,
            fill_cap: FillCap::Unbounded,
            patch_pivots: true,
        }
    }
}

/// Incomplete factors `L·U ≈ A − σI`; `L` unit lower triangular.
#[derive(Debug, Clone)]
pub struct IlutFactors {
    n: usize,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<C64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<C64>,
    u_diag: Vec<C64>,
    drop_tol: f64,
    patched_pivots: usize,
}

/// Keeps the `cap` largest-magnitude entries, then restores column order.
fn cap_entries(entries: &mut Vec<(usize, C64)>, cap: Option<usize>) {
    if let Some(cap) = cap {
        if entries.len() > cap {
            entries.sort_by(|a, b| {
                b.1.norm()
                    .partial_cmp(&a.1.norm())
                    .unwrap_or(core::cmp::Ordering::Equal)
                    .then(a.0.cmp(&b.0))
            });
            entries.truncate(cap);
        }
    }
    entries.sort_by_key(|e| e.0);
}

/// Row-wise threshold ILU of `A − σI` (no pivoting).
///
/// Entries of row `i` smaller than `drop_tol·‖row_i(A − σI)‖₂` are dropped,
/// the diagonal never is. A pivot below `eps·‖row_i‖` is replaced by
/// `max(drop_tol, √eps)·‖row_i‖` with the phase of the original diagonal.
pub fn ilut_factorize(a: &SparseMatrix, sigma: C64, opts: &IlutOptions) -> Result<IlutFactors, PrecondError> {
    if !(opts.drop_tol >= 0.0 && opts.drop_tol.is_finite()) {
        return Err(PrecondError::InvalidDropTol(opts.drop_tol));
    }
    let n = a.dim();
    let row_norms = a.shifted_row_norms(sigma);
    let mut f = IlutFactors {
        n,
        l_ptr: alloc::vec![0],
        l_idx: Vec::new(),
        l_val: Vec::new(),
        u_ptr: alloc::vec![0],
        u_idx: Vec::new(),
        u_val: Vec::new(),
        u_diag: Vec::with_capacity(n),
        drop_tol: opts.drop_tol,
        patched_pivots: 0,
    };

    let mut work = alloc::vec![ZERO; n];
    let mut in_pattern = alloc::vec![false; n];
    let mut pattern: Vec<usize> = Vec::new();
    let mut pending: BinaryHeap<Reverse<usize>> = BinaryHeap::new();

    for i in 0..n {
        let tau = opts.drop_tol * row_norms[i];
        let (cols, vals) = a.row(i);
        let mut orig_lower = 0usize;
        let mut orig_upper = 0usize;
        for (&j, &v) in cols.iter().zip(vals) {
            work[j] = v;
            in_pattern[j] = true;
            pattern.push(j);
            if j < i {
                orig_lower += 1;
                pending.push(Reverse(j));
            } else if j > i {
                orig_upper += 1;
            }
        }
        if !in_pattern[i] {
            in_pattern[i] = true;
            pattern.push(i);
        }
        work[i] -= sigma;
        let orig_diag = work[i];

        while let Some(Reverse(k)) = pending.pop() {
            let lik = work[k] / f.u_diag[k];
            if lik.norm() < tau {
                work[k] = ZERO;
                continue;
            }
            work[k] = lik;
            for p in f.u_ptr[k]..f.u_ptr[k + 1] {
                let j = f.u_idx[p];
                if !in_pattern[j] {
                    in_pattern[j] = true;
                    pattern.push(j);
                    if j < i {
                        pending.push(Reverse(j));
                    }
                }
                work[j] -= lik * f.u_val[p];
            }
        }

        let mut lower: Vec<(usize, C64)> = Vec::new();
        let mut upper: Vec<(usize, C64)> = Vec::new();
        for &j in &pattern {
            let v = work[j];
            if j == i || v == ZERO || v.norm() < tau {
                continue;
            }
            if j < i {
                lower.push((j, v));
            } else {
                upper.push((j, v));
            }
        }
        let (lcap, ucap) = match opts.fill_cap {
            FillCap::Unbounded => (None, None),
            FillCap::Fixed(p) => (Some(p), Some(p)),
            FillCap::Original => (Some(orig_lower), Some(orig_upper)),
        };
        cap_entries(&mut lower, lcap);
        cap_entries(&mut upper, ucap);

        let mut pivot = work[i];
        if !(pivot.norm() >= f64::EPSILON * row_norms[i]) || pivot == ZERO {
            if !opts.patch_pivots {
                return Err(PrecondError::ZeroPivot { row: i });
            }
            let magnitude = if row_norms[i] > 0.0 {
                opts.drop_tol.max(libm::sqrt(f64::EPSILON)) * row_norms[i]
            } else {
                1.0
            };
            let phase = if orig_diag.norm() > 0.0 {
                orig_diag / orig_diag.norm()
            } else {
                C64::new(1.0, 0.0)
            };
            pivot = phase * magnitude;
            f.patched_pivots += 1;
            log::warn!("ilut: patched zero pivot in row {i}");
        }

        for (j, v) in lower {
            f.l_idx.push(j);
            f.l_val.push(v);
        }
        f.l_ptr.push(f.l_idx.len());
        for (j, v) in upper {
            f.u_idx.push(j);
            f.u_val.push(v);
        }
        f.u_ptr.push(f.u_idx.len());
        f.u_diag.push(pivot);

        for &j in &pattern {
            work[j] = ZERO;
            in_pattern[j] = false;
        }
        pattern.clear();
    }
    Ok(f)
}

impl IlutFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn drop_tol(&self) -> f64 {
        self.drop_tol
    }

    /// Number of pivots replaced during factorization.
    pub fn patched_pivots(&self) -> usize {
        self.patched_pivots
    }

    /// Stored entries of `L` (excluding the unit diagonal).
    pub fn nnz_l(&self) -> usize {
        self.l_idx.len()
    }

    /// Stored entries of `U` including the diagonal.
    pub fn nnz_u(&self) -> usize {
        self.u_idx.len() + self.n
    }

    /// Solves `L(Ux) = b`.
    pub fn apply_inverse(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.n, "apply_inverse dimension mismatch");
        let mut x = b.to_vec();
        for i in 0..self.n {
            let mut s = x[i];
            for p in self.l_ptr[i]..self.l_ptr[i + 1] {
                s -= self.l_val[p] * x[self.l_idx[p]];
            }
            x[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for p in self.u_ptr[i]..self.u_ptr[i + 1] {
                s -= self.u_val[p] * x[self.u_idx[p]];
            }
            x[i] = s / self.u_diag[i];
        }
        x
    }

    /// Dense `L·U`, for tests on small matrices.
    pub fn product_dense(&self) -> Vec<Vec<C64>> {
        let n = self.n;
        let mut l = alloc::vec![alloc::vec![ZERO; n]; n];
        let mut u = alloc::vec![alloc::vec![ZERO; n]; n];
        for i in 0..n {
            l[i][i] = C64::new(1.0, 0.0);
            for p in self.l_ptr[i]..self.l_ptr[i + 1] {
                l[i][self.l_idx[p]] = self.l_val[p];
            }
            u[i][i] = self.u_diag[i];
            for p in self.u_ptr[i]..self.u_ptr[i + 1] {
                u[i][self.u_idx[p]] = self.u_val[p];
            }
        }
        let mut out = alloc::vec![alloc::vec![ZERO; n]; n];
        for i in 0..n {
            for k in 0..=i {
                if l[i][k] == ZERO {
                    continue;
                }
                for j in k..n {
                    out[i][j] += l[i][k] * u[k][j];
                }
            }
        }
        out
    }
}

impl Preconditioner for IlutFactors {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, b: &[C64]) -> Vec<C64> {
        self.apply_inverse(b)
    }
}

/// `M_y = (I − yyᴴ) M (I − yyᴴ)` restricted to `y⊥`. Applying it solves
/// `M_y t = b` for `b ⊥ y` via `t = M⁻¹b − (yᴴM⁻¹b / yᴴM⁻¹y)·M⁻¹y`.
#[derive(Debug, Clone)]
pub struct JdProjectedPreconditioner<'a, P: Preconditioner + ?Sized> {
    base: &'a P,
    y: Vec<C64>,
    m_inv_y: Vec<C64>,
    y_m_inv_y: C64,
    fallback: bool,
}

impl<'a, P: Preconditioner + ?Sized> JdProjectedPreconditioner<'a, P> {
    /// Fails when `|yᴴM⁻¹y| < eps·‖M⁻¹y‖`.
    pub fn new(base: &'a P, y: &[C64]) -> Result<Self, PrecondError> {
        let p = Self::new_or_fallback(base, y);
        if p.fallback {
            return Err(PrecondError::BreakdownScalar {
                value: p.y_m_inv_y.norm(),
            });
        }
        Ok(p)
    }

    /// Like [`Self::new`], but on breakdown applies `(I − yyᴴ)M⁻¹` instead.
    pub fn new_or_fallback(base: &'a P, y: &[C64]) -> Self {
        let m_inv_y = base.apply(y);
        let y_m_inv_y = dotc(y, &m_inv_y);
        let fallback = !(y_m_inv_y.norm() >= f64::EPSILON * norm2(&m_inv_y)) || y_m_inv_y.norm() == 0.0;
        if fallback {
            log::warn!("projected preconditioner breakdown; using (I - yy^H) M^-1");
        }
        Self {
            base,
            y: y.to_vec(),
            m_inv_y,
            y_m_inv_y,
            fallback,
        }
    }

    pub fn is_fallback(&self) -> bool {
        self.fallback
    }

    pub fn apply_projected_inverse(&self, b: &[C64]) -> Vec<C64> {
        let mut t = self.base.apply(b);
        if !self.fallback {
            let coef = dotc(&self.y, &t) / self.y_m_inv_y;
            axpy(-coef, &self.m_inv_y, &mut t);
        }
        // exact in exact arithmetic; removes the rounding residue along y
        let c = dotc(&self.y, &t);
        axpy(-c, &self.y, &mut t);
        t
    }
}

impl<P: Preconditioner + ?Sized> Preconditioner for JdProjectedPreconditioner<'_, P> {
    fn dim(&self) -> usize {
        self.y.len()
    }

    fn apply(&self, b: &[C64]) -> Vec<C64> {
        self.apply_projected_inverse(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{Field, Symmetry};
    use crate::testutil::random_sparse;
    use crate::vector::{norm2, sub};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn shifted_dense(a: &SparseMatrix, sigma: C64) -> Vec<Vec<C64>> {
        let n = a.dim();
        let mut d = alloc::vec![alloc::vec![ZERO; n]; n];
        for (i, j, v) in a.triplets() {
            d[i][j] += v;
        }
        for (i, row) in d.iter_mut().enumerate() {
            row[i] -= sigma;
        }
        d
    }

    #[test]
    fn zero_drop_is_exact_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_sparse(&mut rng, 5, 5, 6.0);
        let sigma = C64::new(0.3, -0.2);
        let f = ilut_factorize(&a, sigma, &IlutOptions::new(0.0)).unwrap();
        let lu = f.product_dense();
        let t = shifted_dense(&a, sigma);
        let mut err = 0.0;
        let mut nrm = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                err += (lu[i][j] - t[i][j]).norm_sqr();
                nrm += t[i][j].norm_sqr();
            }
        }
        assert!(libm::sqrt(err / nrm) <= 1e-13);
    }

    #[test]
    fn diagonal_matrix_factors_trivially() {
        let a = SparseMatrix::from_diagonal(&[c(2.0), c(-3.0), c(5.0)]);
        let f = ilut_factorize(&a, c(1.0), &IlutOptions::new(0.5)).unwrap();
        assert_eq!(f.nnz_l(), 0);
        assert_eq!(f.nnz_u(), 3);
        let x = f.apply_inverse(&[c(1.0), c(1.0), c(1.0)]);
        assert_eq!(x, alloc::vec![c(1.0), c(-0.25), c(0.25)]);
    }

    #[test]
    fn identity_preconditioner_is_identity() {
        let f = ilut_factorize(&SparseMatrix::identity(4), ZERO, &IlutOptions::new(1e-3)).unwrap();
        let b = alloc::vec![c(1.0), C64::new(0.0, 2.0), c(-3.0), c(4.0)];
        assert_eq!(f.apply_inverse(&b), b);
    }

    #[test]
    fn exact_factors_invert_on_larger_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [20usize, 100, 200] {
            let a = random_sparse(&mut rng, n, 4, 5.0);
            let sigma = C64::new(0.5, 0.1);
            let f = ilut_factorize(&a, sigma, &IlutOptions::new(0.0)).unwrap();
            let b: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
            let x = f.apply_inverse(&b);
            let r = sub(&a.shifted_matvec(sigma, &x).unwrap(), &b);
            assert!(norm2(&r) <= 1e-12 * norm2(&b), "n={n}: {}", norm2(&r));
        }
    }

    #[test]
    fn dropped_factors_reduce_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_sparse(&mut rng, 300, 6, 4.0);
        let sigma = c(0.2);
        let f = ilut_factorize(&a, sigma, &IlutOptions::new(1e-3)).unwrap();
        let b: Vec<C64> = (0..300).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let x = f.apply_inverse(&b);
        let with_prec = norm2(&sub(&a.shifted_matvec(sigma, &x).unwrap(), &b));
        let without = norm2(&sub(&a.shifted_matvec(sigma, &b).unwrap(), &b));
        assert!(with_prec < without);
    }

    #[test]
    fn original_fill_cap_bounds_nnz() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_sparse(&mut rng, 150, 5, 3.0);
        let sigma = c(0.1);
        let opts = IlutOptions {
            drop_tol: 1e-6,
            fill_cap: FillCap::Original,
            patch_pivots: true,
        };
        let f = ilut_factorize(&a, sigma, &opts).unwrap();
        let shifted_nnz = a.nnz() + (0..150).filter(|&i| a.get(i, i) == ZERO).count();
        assert!(f.nnz_l() + f.nnz_u() <= shifted_nnz + 2 * 150);
    }

    #[test]
    fn zero_pivot_patched_or_reported() {
        // [[0,1],[1,0]]: first pivot is exactly zero without pivoting
        let a = SparseMatrix::from_triplets(2, &[(0, 1, c(1.0)), (1, 0, c(1.0))], Field::Real, Symmetry::General)
            .unwrap();
        let f = ilut_factorize(&a, ZERO, &IlutOptions::new(0.1)).unwrap();
        assert_eq!(f.patched_pivots(), 1);
        let strict = IlutOptions {
            patch_pivots: false,
            ..IlutOptions::new(0.1)
        };
        assert_eq!(
            ilut_factorize(&a, ZERO, &strict).unwrap_err(),
            PrecondError::ZeroPivot { row: 0 }
        );
        assert!(ilut_factorize(&a, ZERO, &IlutOptions::new(-1.0)).is_err());
    }

    #[test]
    fn projected_inverse_identity_and_zero() {
        let id = ilut_factorize(&SparseMatrix::identity(3), ZERO, &IlutOptions::new(0.0)).unwrap();
        let y = alloc::vec![c(1.0), ZERO, ZERO];
        let p = JdProjectedPreconditioner::new(&id, &y).unwrap();
        let b = alloc::vec![ZERO, c(2.0), C64::new(0.0, -1.0)];
        assert_eq!(p.apply_projected_inverse(&b), b);
        assert_eq!(p.apply_projected_inverse(&[ZERO; 3]), alloc::vec![ZERO; 3]);
    }

    #[test]
    fn projected_inverse_solves_projected_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 60;
        let a = random_sparse(&mut rng, n, 4, 5.0);
        let sigma = C64::new(0.1, 0.3);
        let f = ilut_factorize(&a, sigma, &IlutOptions::new(0.0)).unwrap();
        let mut y: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        crate::vector::normalize(&mut y);
        let mut b: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let cb = dotc(&y, &b);
        axpy(-cb, &y, &mut b);

        let p = JdProjectedPreconditioner::new(&f, &y).unwrap();
        let t = p.apply_projected_inverse(&b);
        assert!(dotc(&y, &t).norm() <= 1e-12 * norm2(&t));
        // (I − yyᴴ) M (I − yyᴴ) t with M = A − σI (exact factors)
        let mut pt = t.clone();
        let ct = dotc(&y, &pt);
        axpy(-ct, &y, &mut pt);
        let mut mt = a.shifted_matvec(sigma, &pt).unwrap();
        let cm = dotc(&y, &mt);
        axpy(-cm, &y, &mut mt);
        assert!(norm2(&sub(&mt, &b)) <= 1e-10 * norm2(&b));
    }

    #[test]
    fn breakdown_detected_and_fallback_stays_orthogonal() {
        // M = [[0,1],[-1,0]] maps y = e1 to -e2, so yᴴM⁻¹y = 0
        let y = alloc::vec![c(1.0), ZERO];
        struct Rot;
        impl Preconditioner for Rot {
            fn dim(&self) -> usize {
                2
            }
            fn apply(&self, b: &[C64]) -> Vec<C64> {
                alloc::vec![-b[1], b[0]]
            }
        }
        assert!(matches!(
            JdProjectedPreconditioner::new(&Rot, &y),
            Err(PrecondError::BreakdownScalar { .. })
        ));
        let p = JdProjectedPreconditioner::new_or_fallback(&Rot, &y);
        assert!(p.is_fallback());
        let t = p.apply_projected_inverse(&[ZERO, c(1.0)]);
        assert!(dotc(&y, &t).norm() <= 1e-15);
    }
}
