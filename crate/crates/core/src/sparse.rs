//! Compressed sparse row storage for the operator `A`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::vector::ZERO;
use crate::C64;

/// Scalar field declared by the source of a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
    Integer,
    Pattern,
}

/// Symmetry declared by the source of a matrix. Storage is always expanded
/// to the full pattern; this only records what the source said.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
    Hermitian,
    SkewSymmetric,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SparseError {
    #[error("entry ({row}, {col}) outside a {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("dimension mismatch: operator is {expected}, vector has length {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Square sparse matrix in CSR layout. Values are stored as complex numbers;
/// `field` remembers whether the source was real.
///
/// Invariants: `row_ptr` nondecreasing with `row_ptr[0] = 0` and
/// `row_ptr[n] = nnz`; column indices strictly increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    field: Field,
    symmetry: Symmetry,
}

impl SparseMatrix {
    /// Assembles from 0-based coordinate entries. Entries of a non-general
    /// source are mirrored across the diagonal (transposed, conjugated or
    /// negated as declared); duplicates are summed.
    pub fn from_triplets(
        n: usize,
        entries: &[(usize, usize, C64)],
        field: Field,
        symmetry: Symmetry,
    ) -> Result<Self, SparseError> {
        let mut all: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len() * 2);
        for &(i, j, v) in entries {
            if i >= n || j >= n {
                return Err(SparseError::IndexOutOfRange { row: i, col: j, n });
            }
            all.push((i, j, v));
            if i != j {
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => all.push((j, i, v)),
                    Symmetry::Hermitian => all.push((j, i, v.conj())),
                    Symmetry::SkewSymmetric => all.push((j, i, -v)),
                }
            }
        }
        all.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = alloc::vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(all.len());
        let mut values: Vec<C64> = Vec::with_capacity(all.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in all {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
            field,
            symmetry,
        })
    }

    /// Builds directly from CSR arrays; rows must already be sorted.
    pub fn from_csr(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<C64>,
    ) -> Result<Self, SparseError> {
        assert_eq!(row_ptr.len(), n + 1, "row_ptr must have n+1 entries");
        assert_eq!(col_idx.len(), values.len());
        assert_eq!(row_ptr[n], col_idx.len());
        for i in 0..n {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            for (k, &j) in cols.iter().enumerate() {
                if j >= n {
                    return Err(SparseError::IndexOutOfRange { row: i, col: j, n });
                }
                assert!(k == 0 || cols[k - 1] < j, "row {i} not strictly sorted");
            }
        }
        let field = if values.iter().all(|v| v.im == 0.0) {
            Field::Real
        } else {
            Field::Complex
        };
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
            field,
            symmetry: Symmetry::General,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&alloc::vec![C64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let entries: Vec<_> = diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
        let field = if diag.iter().all(|d| d.im == 0.0) {
            Field::Real
        } else {
            Field::Complex
        };
        Self::from_triplets(n, &entries, field, Symmetry::General).expect("diagonal indices in range")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    /// True when every stored value has a zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => ZERO,
        }
    }

    /// Row-major iteration over stored entries.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    fn check_len(&self, len: usize) -> Result<(), SparseError> {
        if len != self.n {
            return Err(SparseError::DimensionMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    /// `y = Ax`.
    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>, SparseError> {
        let mut y = alloc::vec![ZERO; self.n];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) -> Result<(), SparseError> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
        Ok(())
    }

    /// `y = Ax − σx` without forming `A − σI`.
    pub fn shifted_matvec(&self, sigma: C64, x: &[C64]) -> Result<Vec<C64>, SparseError> {
        let mut y = alloc::vec![ZERO; self.n];
        self.shifted_matvec_into(sigma, x, &mut y)?;
        Ok(y)
    }

    pub fn shifted_matvec_into(&self, sigma: C64, x: &[C64], y: &mut [C64]) -> Result<(), SparseError> {
        self.matvec_into(x, y)?;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi -= sigma * xi;
        }
        Ok(())
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut col_sums = alloc::vec![0.0f64; self.n];
        for (&j, v) in self.col_idx.iter().zip(&self.values) {
            col_sums[j] += v.norm();
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }

    /// Euclidean norms of the rows of `A − σI`.
    pub fn shifted_row_norms(&self, sigma: C64) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                let mut ssq = 0.0;
                let mut has_diag = false;
                for (&j, &v) in cols.iter().zip(vals) {
                    let v = if j == i {
                        has_diag = true;
                        v - sigma
                    } else {
                        v
                    };
                    ssq += v.norm_sqr();
                }
                if !has_diag {
                    ssq += sigma.norm_sqr();
                }
                libm::sqrt(ssq)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn diagonal_from_coordinates() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, c(2.0)), (1, 1, c(3.0))], Field::Real, Symmetry::General)
            .unwrap();
        assert_eq!(a.matvec(&[c(1.0), c(1.0)]).unwrap(), vec![c(2.0), c(3.0)]);
    }

    #[test]
    fn symmetric_expansion_and_duplicates() {
        let a = SparseMatrix::from_triplets(2, &[(1, 0, c(5.0))], Field::Real, Symmetry::Symmetric).unwrap();
        assert_eq!(a.get(0, 1), c(5.0));
        assert_eq!(a.get(1, 0), c(5.0));

        let h = SparseMatrix::from_triplets(2, &[(1, 0, C64::new(1.0, 2.0))], Field::Complex, Symmetry::Hermitian)
            .unwrap();
        assert_eq!(h.get(0, 1), C64::new(1.0, -2.0));

        let k = SparseMatrix::from_triplets(2, &[(1, 0, c(4.0))], Field::Real, Symmetry::SkewSymmetric).unwrap();
        assert_eq!(k.get(0, 1), c(-4.0));

        let d = SparseMatrix::from_triplets(1, &[(0, 0, c(1.0)), (0, 0, c(2.5))], Field::Real, Symmetry::General)
            .unwrap();
        assert_eq!(d.nnz(), 1);
        assert_eq!(d.get(0, 0), c(3.5));
    }

    #[test]
    fn out_of_range_rejected() {
        let err = SparseMatrix::from_triplets(2, &[(2, 0, c(1.0))], Field::Real, Symmetry::General).unwrap_err();
        assert_eq!(err, SparseError::IndexOutOfRange { row: 2, col: 0, n: 2 });
    }

    #[test]
    fn identity_and_shift() {
        let i3 = SparseMatrix::identity(3);
        let x = vec![C64::new(1.0, -1.0), c(2.0), c(-0.5)];
        assert_eq!(i3.matvec(&x).unwrap(), x);
        assert_eq!(i3.shifted_matvec(c(1.0), &x).unwrap(), vec![ZERO; 3]);
        assert_eq!(i3.shifted_matvec(ZERO, &x).unwrap(), i3.matvec(&x).unwrap());
        assert!(matches!(
            i3.matvec(&x[..2]),
            Err(SparseError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn one_norm_is_max_column_sum() {
        let a = SparseMatrix::from_triplets(
            2,
            &[(0, 0, c(1.0)), (0, 1, c(-2.0)), (1, 0, c(3.0)), (1, 1, c(4.0))],
            Field::Real,
            Symmetry::General,
        )
        .unwrap();
        assert_eq!(a.one_norm(), 6.0);
        assert_eq!(SparseMatrix::identity(4).one_norm(), 1.0);
    }

    #[test]
    fn row_norms_include_missing_diagonal() {
        let a = SparseMatrix::from_triplets(2, &[(0, 1, c(3.0))], Field::Real, Symmetry::General).unwrap();
        let norms = a.shifted_row_norms(c(4.0));
        assert_eq!(norms, vec![5.0, 4.0]);
    }
}
