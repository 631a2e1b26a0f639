//! Search-subspace bookkeeping and the three extraction strategies.
//!
//! With `V` orthonormal and `W = (A − σI)V` the projected matrices are
//! `H = Vᴴ(A − σI)ᴴV = WᴴV` and `G = WᴴW`. Both are grown one row and
//! column per expansion, never recomputed.

use alloc::vec::Vec;

use thiserror::Error;

use crate::dense::{
    eig_general, eig_hermitian_smallest, magnitude_then_arg, pencil_eig, smallest_singular_triplet_qr, DenseError,
    DenseMatrix,
};
use crate::sparse::{SparseError, SparseMatrix};
use crate::vector::{axpy, dotc, norm2, scale_real, ZERO};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractionError {
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("subspace is empty")]
    Empty,
    #[error("subspace already has the maximum dimension {0}")]
    Full(usize),
    #[error("no finite approximate eigenvalue in the subspace")]
    NoFiniteValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtractionKind {
    Standard,
    Harmonic,
    RefinedHarmonic,
}

/// How the refined vector is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefinedApproach {
    /// Smallest eigenpair of the cross-product matrix assembled from `G` and `H`.
    #[default]
    CrossProduct,
    /// Thin QR of `(A − ρI)V = W + (σ − ρ)V` and SVD of the triangular factor.
    QrSvd,
}

/// Orthonormal basis `V`, the cache `W = (A − σI)V`, and `H`, `G`.
#[derive(Debug, Clone)]
pub struct SubspaceState {
    sigma: C64,
    m_max: usize,
    v: Vec<Vec<C64>>,
    w: Vec<Vec<C64>>,
    h: DenseMatrix,
    g: DenseMatrix,
}

impl SubspaceState {
    pub fn new(sigma: C64, m_max: usize) -> Self {
        Self {
            sigma,
            m_max,
            v: Vec::with_capacity(m_max),
            w: Vec::with_capacity(m_max),
            h: DenseMatrix::zeros(m_max, m_max),
            g: DenseMatrix::zeros(m_max, m_max),
        }
    }

    /// State spanned by the given orthonormal columns.
    pub fn from_basis(a: &SparseMatrix, sigma: C64, m_max: usize, columns: Vec<Vec<C64>>) -> Result<Self, ExtractionError> {
        let mut s = Self::new(sigma, m_max);
        for c in columns {
            s.expand(a, c)?;
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn sigma(&self) -> C64 {
        self.sigma
    }

    pub fn is_full(&self) -> bool {
        self.v.len() >= self.m_max
    }

    pub fn basis(&self) -> &[Vec<C64>] {
        &self.v
    }

    pub fn shifted_basis(&self) -> &[Vec<C64>] {
        &self.w
    }

    pub fn h(&self) -> DenseMatrix {
        self.h.leading(self.dim())
    }

    pub fn g(&self) -> DenseMatrix {
        self.g.leading(self.dim())
    }

    /// Appends a unit vector orthogonal to the current basis. One product
    /// with `A` and `O(nm)` further work.
    pub fn expand(&mut self, a: &SparseMatrix, v_new: Vec<C64>) -> Result<(), ExtractionError> {
        if self.is_full() {
            return Err(ExtractionError::Full(self.m_max));
        }
        let m = self.dim();
        let w_new = a.shifted_matvec(self.sigma, &v_new)?;
        for i in 0..m {
            self.h[(i, m)] = dotc(&self.w[i], &v_new);
            self.h[(m, i)] = dotc(&w_new, &self.v[i]);
            let gim = dotc(&self.w[i], &w_new);
            self.g[(i, m)] = gim;
            self.g[(m, i)] = gim.conj();
        }
        self.h[(m, m)] = dotc(&w_new, &v_new);
        self.g[(m, m)] = C64::new(norm2(&w_new).powi(2), 0.0);
        self.v.push(v_new);
        self.w.push(w_new);
        Ok(())
    }

    /// `‖VᴴV − I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, vi) in self.v.iter().enumerate() {
            for (j, vj) in self.v.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dotc(vi, vj) - target).norm());
            }
        }
        worst
    }

    /// `V·z`.
    pub fn combine(&self, z: &[C64]) -> Vec<C64> {
        let n = self.v.first().map_or(0, Vec::len);
        let mut y = alloc::vec![ZERO; n];
        for (zi, vi) in z.iter().zip(&self.v) {
            axpy(*zi, vi, &mut y);
        }
        y
    }

    /// `zᴴHᴴz + σ`, the Rayleigh quotient of `Vz` for unit `z`.
    fn rayleigh_quotient(&self, z: &[C64]) -> C64 {
        let m = self.dim();
        let mut s = ZERO;
        for i in 0..m {
            for j in 0..m {
                // (Hᴴ)_{ij} = conj(H_{ji})
                s += z[i].conj() * self.h[(j, i)].conj() * z[j];
            }
        }
        s + self.sigma
    }
}

/// One outer step's approximate eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub kind: ExtractionKind,
    /// Eigenvalue estimate.
    pub rho: C64,
    /// Unit approximate eigenvector `y = V·coeffs`.
    pub y: Vec<C64>,
    pub coeffs: Vec<C64>,
    /// `Ay − ρy`.
    pub residual: Vec<C64>,
    pub residual_norm: f64,
    /// All (harmonic) Ritz values `ν_i`, sorted by `|ν_i − σ|` ascending.
    pub harmonic_values: Vec<C64>,
}

fn finish(
    state: &SubspaceState,
    a: &SparseMatrix,
    kind: ExtractionKind,
    rho: C64,
    mut coeffs: Vec<C64>,
    harmonic_values: Vec<C64>,
) -> Extraction {
    let mut y = state.combine(&coeffs);
    let nrm = norm2(&y);
    if nrm > 0.0 {
        scale_real(1.0 / nrm, &mut y);
        scale_real(1.0 / nrm, &mut coeffs);
    }
    let mut residual = a.matvec(&y).expect("basis vector length");
    axpy(-rho, &y, &mut residual);
    let residual_norm = norm2(&residual);
    Extraction {
        kind,
        rho,
        y,
        coeffs,
        residual,
        residual_norm,
        harmonic_values,
    }
}

/// Ritz pairs from `Hᴴz = μz`; the pair with the smallest `|μ|` is selected
/// and `ρ = ν = μ + σ`.
pub fn extract_standard(state: &SubspaceState, a: &SparseMatrix) -> Result<Extraction, ExtractionError> {
    let m = state.dim();
    if m == 0 {
        return Err(ExtractionError::Empty);
    }
    let sigma = state.sigma;
    let mut pairs = if m == 1 {
        alloc::vec![crate::dense::EigPair {
            value: state.h[(0, 0)].conj(),
            vector: alloc::vec![C64::new(1.0, 0.0)],
        }]
    } else {
        eig_general(&state.h().adjoint())?
    };
    pairs.sort_by(|x, y| magnitude_then_arg(x.value, y.value));
    let values = pairs.iter().map(|p| p.value + sigma).collect();
    let first = pairs.swap_remove(0);
    Ok(finish(state, a, ExtractionKind::Standard, first.value + sigma, first.vector, values))
}

/// Harmonic pairs from the pencil `Hz = (1/μ)Gz`, sorted by `|μ|`.
fn harmonic_pairs(state: &SubspaceState) -> Result<(Vec<C64>, Vec<C64>), ExtractionError> {
    let m = state.dim();
    if m == 0 {
        return Err(ExtractionError::Empty);
    }
    let sigma = state.sigma;
    if m == 1 {
        let h = state.h[(0, 0)];
        let g = state.g[(0, 0)].re;
        if !(g > 0.0) {
            return Err(DenseError::NotPositiveDefinite { pivot: 0 }.into());
        }
        let values = if h == ZERO {
            Vec::new()
        } else {
            alloc::vec![C64::new(g, 0.0) / h + sigma]
        };
        return Ok((alloc::vec![C64::new(1.0, 0.0)], values));
    }
    let pairs = pencil_eig(&state.h(), &state.g())?;
    if pairs.is_empty() {
        return Err(ExtractionError::NoFiniteValue);
    }
    let values = pairs.iter().map(|p| p.value + sigma).collect();
    Ok((pairs.into_iter().next().expect("nonempty").vector, values))
}

/// Harmonic Ritz vector for the harmonic value closest to σ, with its
/// Rayleigh quotient `ρ = zᴴHᴴz + σ` as the eigenvalue estimate.
pub fn extract_harmonic(state: &SubspaceState, a: &SparseMatrix) -> Result<Extraction, ExtractionError> {
    let (z, values) = harmonic_pairs(state)?;
    let rho = state.rayleigh_quotient(&z);
    Ok(finish(state, a, ExtractionKind::Harmonic, rho, z, values))
}

/// The unit vector in `span(V)` minimizing `‖(A − ρI)w‖` for the harmonic
/// Rayleigh quotient `ρ`, returned with its own Rayleigh quotient `ρ̂`.
pub fn extract_refined_harmonic(
    state: &SubspaceState,
    a: &SparseMatrix,
    approach: RefinedApproach,
) -> Result<Extraction, ExtractionError> {
    let (z, values) = harmonic_pairs(state)?;
    let rho = state.rayleigh_quotient(&z);
    let z_hat = refined_coefficients(state, rho, approach)?;
    let rho_hat = state.rayleigh_quotient(&z_hat);
    Ok(finish(state, a, ExtractionKind::RefinedHarmonic, rho_hat, z_hat, values))
}

/// Coefficients `ẑ` minimizing `‖(A − ρI)Vz‖` over unit `z`.
pub fn refined_coefficients(state: &SubspaceState, rho: C64, approach: RefinedApproach) -> Result<Vec<C64>, ExtractionError> {
    let m = state.dim();
    if m == 0 {
        return Err(ExtractionError::Empty);
    }
    if m == 1 {
        return Ok(alloc::vec![C64::new(1.0, 0.0)]);
    }
    let shift = state.sigma - rho;
    match approach {
        RefinedApproach::CrossProduct => Ok(eig_hermitian_smallest(&cross_product_matrix(state, rho))?.vector),
        RefinedApproach::QrSvd => {
            let cols: Vec<Vec<C64>> = state
                .w
                .iter()
                .zip(&state.v)
                .map(|(w, v)| {
                    let mut c = w.clone();
                    axpy(shift, v, &mut c);
                    c
                })
                .collect();
            Ok(smallest_singular_triplet_qr(&cols)?.z)
        }
    }
}

/// `S = G + conj(σ−ρ)Hᴴ + (σ−ρ)H + |σ−ρ|²I`, i.e. `Vᴴ(A−ρI)ᴴ(A−ρI)V`.
pub fn cross_product_matrix(state: &SubspaceState, rho: C64) -> DenseMatrix {
    let m = state.dim();
    let d = state.sigma - rho;
    let mut s = DenseMatrix::from_fn(m, m, |i, j| {
        state.g[(i, j)] + d.conj() * state.h[(j, i)].conj() + d * state.h[(i, j)]
    });
    for i in 0..m {
        s[(i, i)] = C64::new(s[(i, i)].re + d.norm_sqr(), 0.0);
    }
    // Hermitian by construction; symmetrize the rounding
    for j in 0..m {
        for i in 0..j {
            let avg = (s[(i, j)] + s[(j, i)].conj()) * 0.5;
            s[(i, j)] = avg;
            s[(j, i)] = avg.conj();
        }
    }
    s
}

/// Dispatches on the extraction kind.
pub fn extract(
    state: &SubspaceState,
    a: &SparseMatrix,
    kind: ExtractionKind,
    approach: RefinedApproach,
) -> Result<Extraction, ExtractionError> {
    match kind {
        ExtractionKind::Standard => extract_standard(state, a),
        ExtractionKind::Harmonic => extract_harmonic(state, a),
        ExtractionKind::RefinedHarmonic => extract_refined_harmonic(state, a, approach),
    }
}
