use alloc::vec::Vec;

use thiserror::Error;

use super::DenseMatrix;
use crate::vector::{axpy, dotc, norm2, scale_real, ZERO};
use crate::C64;

/// The vector to orthonormalize lies in the span of the basis.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("vector is numerically contained in the basis span (residual {residual:e}, input {input:e})")]
pub struct Deflated {
    pub residual: f64,
    pub input: f64,
}

/// Modified Gram–Schmidt of `u` against the orthonormal columns of `basis`,
/// followed by one reorthogonalization pass. Returns the unit vector and its
/// norm before normalization.
pub fn orthonormalize_against(basis: &[Vec<C64>], u: &[C64]) -> Result<(Vec<C64>, f64), Deflated> {
    let input = norm2(u);
    let mut w = u.to_vec();
    for _ in 0..2 {
        for v in basis {
            let c = dotc(v, &w);
            axpy(-c, v, &mut w);
        }
    }
    let residual = norm2(&w);
    let threshold = u.len().max(1) as f64 * f64::EPSILON * input;
    if input == 0.0 || !residual.is_finite() || residual <= threshold {
        return Err(Deflated { residual, input });
    }
    scale_real(1.0 / residual, &mut w);
    Ok((w, residual))
}

/// Thin QR by Gram–Schmidt with one refinement pass: `W = QR`, `R` upper
/// triangular `m×m`. A numerically dependent column gets a zero `Q` column
/// and a zero `R` row, so `W = QR` still holds and `‖Wz‖ = ‖Rz‖`.
pub fn thin_qr(columns: &[Vec<C64>]) -> (Vec<Vec<C64>>, DenseMatrix) {
    let m = columns.len();
    let n = columns.first().map_or(0, Vec::len);
    let scale = columns.iter().map(|c| norm2(c)).fold(0.0, f64::max);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut r = DenseMatrix::zeros(m, m);
    for (j, col) in columns.iter().enumerate() {
        let mut w = col.clone();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dotc(qi, &w);
                axpy(-c, qi, &mut w);
                r[(i, j)] += c;
            }
        }
        let nrm = norm2(&w);
        if nrm <= n.max(1) as f64 * f64::EPSILON * scale || nrm == 0.0 {
            q.push(alloc::vec![ZERO; n]);
        } else {
            scale_real(1.0 / nrm, &mut w);
            r[(j, j)] = C64::new(nrm, 0.0);
            q.push(w);
        }
    }
    (q, r)
}
