use alloc::vec::Vec;

use super::{cholesky, eig_general, magnitude_then_arg, solve_lower, solve_lower_adjoint, DenseError, DenseMatrix, EigPair};
use crate::vector::{fix_phase, normalize};
use crate::C64;

/// Eigenpairs `(μ, z)` of the pencil `Hz = (1/μ) Gz` for Hermitian positive
/// definite `G`, sorted by `|μ|` ascending (ties by argument).
///
/// Reduced to the standard problem `L⁻¹HL⁻ᴴ w = θw`, `θ = 1/μ`, with
/// `G = LLᴴ` and `z = L⁻ᴴw`. Pairs with `θ = 0` (infinite `μ`) are dropped.
pub fn pencil_eig(h: &DenseMatrix, g: &DenseMatrix) -> Result<Vec<EigPair>, DenseError> {
    if !h.is_square() || !g.is_square() || h.rows() != g.rows() {
        return Err(DenseError::Dimension("pencil_eig needs matching square matrices"));
    }
    let m = h.rows();
    let l = cholesky(g)?;
    // X = L⁻¹H column by column, then T = X L⁻ᴴ = (L⁻¹ Xᴴ)ᴴ
    let x_cols: Vec<Vec<C64>> = (0..m).map(|j| solve_lower(&l, h.column(j))).collect();
    let xh = DenseMatrix::from_columns(&x_cols).adjoint();
    let t_adj_cols: Vec<Vec<C64>> = (0..m).map(|j| solve_lower(&l, xh.column(j))).collect();
    let t = DenseMatrix::from_columns(&t_adj_cols).adjoint();

    let tnorm = t.frobenius_norm();
    let mut out = Vec::with_capacity(m);
    for pair in eig_general(&t)? {
        if pair.value.norm() <= m as f64 * f64::EPSILON * tnorm || pair.value.norm() == 0.0 {
            log::debug!("pencil_eig: dropping infinite harmonic value (theta = {})", pair.value);
            continue;
        }
        let mut z = solve_lower_adjoint(&l, &pair.vector);
        normalize(&mut z);
        fix_phase(&mut z);
        out.push(EigPair {
            value: C64::new(1.0, 0.0) / pair.value,
            vector: z,
        });
    }
    out.sort_by(|a, b| magnitude_then_arg(a.value, b.value));
    Ok(out)
}
