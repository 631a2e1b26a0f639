//! Restarted shift-invert subspace-expansion eigensolvers for the interior
//! eigenvalue problem `Ax = λx`, λ closest to a target σ.
//!
//! Six methods are provided, the cross product of the expansion
//! (SIRA: `(A−σI)u = r`, Jacobi–Davidson: projected correction equation)
//! and the extraction (standard Rayleigh–Ritz, harmonic, refined harmonic).
//! Inner linear systems are solved inexactly by right-preconditioned
//! GMRES with an ILUT preconditioner; the requested inner accuracy is set
//! per outer step by [`governor::ToleranceGovernor`].
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the
//! experiment runner and the CLI live in the `hsira` companion crate.
#![no_std]
// `!(x > t)` is used on purpose so that NaN takes the failure branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dense;
pub mod driver;
pub mod extraction;
pub mod governor;
pub mod krylov;
pub mod precond;
pub mod sparse;
pub mod vector;

#[cfg(test)]
mod testutil;

pub use driver::{solve, Expansion, MethodSpec, SolveConfig, SolveReport};
pub use extraction::ExtractionKind;
pub use governor::ToleranceMode;
pub use num_complex::Complex64 as C64;
pub use sparse::SparseMatrix;
