//! Complex Schur decomposition by Hessenberg reduction and single-shift QR,
//! with eigenvectors from triangular back-substitution.

use alloc::vec::Vec;

use super::{DenseError, DenseMatrix, EigPair};
use crate::vector::{fix_phase, normalize, norm2, ZERO};
use crate::C64;

/// All eigenpairs of a square matrix. Eigenvectors are unit norm with the
/// largest entry real positive; order follows the Schur diagonal.
pub fn eig_general(t: &DenseMatrix) -> Result<Vec<EigPair>, DenseError> {
    if !t.is_square() {
        return Err(DenseError::Dimension("eig_general needs a square matrix"));
    }
    let m = t.rows();
    if m == 0 {
        return Ok(Vec::new());
    }
    if m == 1 {
        return Ok(alloc::vec![EigPair {
            value: t[(0, 0)],
            vector: alloc::vec![C64::new(1.0, 0.0)],
        }]);
    }
    let (mut h, mut q) = hessenberg(t);
    schur_qr(&mut h, &mut q)?;
    Ok(triangular_eigvecs(&h, &q))
}

/// Householder reduction `T = Q H Qᴴ`, H upper Hessenberg.
fn hessenberg(t: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let m = t.rows();
    let mut h = t.clone();
    let mut q = DenseMatrix::identity(m);
    for k in 0..m.saturating_sub(2) {
        let mut v: Vec<C64> = (k + 1..m).map(|i| h[(i, k)]).collect();
        let alpha_abs = norm2(&v);
        if alpha_abs == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * alpha_abs;
        v[0] -= alpha;
        if normalize(&mut v) == 0.0 {
            continue;
        }
        // H ← P H P with P = I − 2vvᴴ acting on rows/cols k+1..m
        for j in 0..m {
            let mut s = ZERO;
            for (r, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + r, j)];
            }
            for (r, vi) in v.iter().enumerate() {
                h[(k + 1 + r, j)] -= 2.0 * vi * s;
            }
        }
        for mat in [&mut h, &mut q] {
            for i in 0..m {
                let mut s = ZERO;
                for (r, vi) in v.iter().enumerate() {
                    s += mat[(i, k + 1 + r)] * vi;
                }
                for (r, vi) in v.iter().enumerate() {
                    mat[(i, k + 1 + r)] -= 2.0 * s * vi.conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..m {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Rotation `[[c, s], [−s̄, c]]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let nrm = libm::hypot(ax, ay);
    (ax / nrm, (x / ax) * y.conj() / nrm)
}

fn rotate_rows(h: &mut DenseMatrix, k: usize, c: f64, s: C64, cols: core::ops::Range<usize>) {
    for j in cols {
        let t1 = h[(k, j)];
        let t2 = h[(k + 1, j)];
        h[(k, j)] = c * t1 + s * t2;
        h[(k + 1, j)] = -s.conj() * t1 + c * t2;
    }
}

fn rotate_cols(h: &mut DenseMatrix, k: usize, c: f64, s: C64, rows: core::ops::Range<usize>) {
    for i in rows {
        let t1 = h[(i, k)];
        let t2 = h[(i, k + 1)];
        h[(i, k)] = c * t1 + s.conj() * t2;
        h[(i, k + 1)] = -s * t1 + c * t2;
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Reduces Hessenberg `h` to upper triangular form in place, accumulating into `q`.
fn schur_qr(h: &mut DenseMatrix, q: &mut DenseMatrix) -> Result<(), DenseError> {
    let m = h.rows();
    let max_iter = 30 * m;
    let hnorm = h.frobenius_norm();
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = m - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut scale = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if scale == 0.0 {
                scale = hnorm;
            }
            if h[(l, l - 1)].norm() <= f64::EPSILON * scale {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > max_iter {
            return Err(DenseError::NoConvergence { iterations: total });
        }
        let mu = if since_deflation % 11 == 10 {
            // exceptional shift
            let extra = if hi >= 2 { h[(hi - 1, hi - 2)].norm() } else { 0.0 };
            h[(hi, hi)] + C64::new(0.75 * (h[(hi, hi - 1)].norm() + extra), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for k in l..hi {
            let (x, y) = if k == l {
                (h[(l, l)] - mu, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let first_col = if k == l { l } else { k - 1 };
            rotate_rows(h, k, c, s, first_col..m);
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
            let last_row = (k + 2).min(hi);
            rotate_cols(h, k, c, s, 0..last_row + 1);
            rotate_cols(q, k, c, s, 0..m);
        }
    }
    Ok(())
}

/// Eigenvectors of the Schur form `T = QᴴAQ`: back-substitute on
/// `(T − t_kk I)x = 0` and map back with `Q`.
fn triangular_eigvecs(t: &DenseMatrix, q: &DenseMatrix) -> Vec<EigPair> {
    let m = t.rows();
    let small = f64::EPSILON * t.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let lambda = t[(k, k)];
        let mut x = alloc::vec![ZERO; m];
        x[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in i + 1..=k {
                s += t[(i, j)] * x[j];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < small {
                d = C64::new(small, 0.0);
            }
            x[i] = -s / d;
            let big = x[i].norm();
            if big > 1e100 {
                for xj in x.iter_mut() {
                    *xj /= big;
                }
            }
        }
        let mut z = q.matvec(&x);
        normalize(&mut z);
        fix_phase(&mut z);
        out.push(EigPair { value: lambda, vector: z });
    }
    out
}
