//! Dense vector kernels over complex scalars.
//!
//! Summation order is always index order so results are reproducible.

use alloc::vec::Vec;

use crate::C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// `xᴴy`.
pub fn dotc(x: &[C64], y: &[C64]) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    let mut s = ZERO;
    for (a, b) in x.iter().zip(y) {
        s += a.conj() * b;
    }
    s
}

pub fn norm2(x: &[C64]) -> f64 {
    // scaled accumulation to avoid overflow/underflow on extreme entries
    let mut scale = 0.0f64;
    let mut ssq = 1.0f64;
    for z in x {
        for part in [z.re, z.im] {
            if part != 0.0 {
                let a = part.abs();
                if scale < a {
                    let q = scale / a;
                    ssq = 1.0 + ssq * q * q;
                    scale = a;
                } else {
                    let q = a / scale;
                    ssq += q * q;
                }
            }
        }
    }
    scale * libm::sqrt(ssq)
}

/// `y += a·x`.
pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: C64, x: &mut [C64]) {
    for xi in x.iter_mut() {
        *xi *= a;
    }
}

pub fn scale_real(a: f64, x: &mut [C64]) {
    for xi in x.iter_mut() {
        *xi *= a;
    }
}

/// Normalizes `x` in place and returns its former norm. Zero vectors are left untouched.
pub fn normalize(x: &mut [C64]) -> f64 {
    let nrm = norm2(x);
    if nrm > 0.0 {
        scale_real(1.0 / nrm, x);
    }
    nrm
}

pub fn sub(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn is_finite(x: &[C64]) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Rotates `x` by a unit phase so that its largest-magnitude entry is real
/// positive. Ties go to the lowest index.
pub fn fix_phase(x: &mut [C64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0f64;
    for (i, z) in x.iter().enumerate() {
        let a = z.norm();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if best_abs > 0.0 {
        let phase = x[best].conj() / best_abs;
        scale(phase, x);
        x[best] = C64::new(x[best].re, 0.0);
    }
}

/// The all-ones vector scaled to unit length.
pub fn normalized_ones(n: usize) -> Vec<C64> {
    let v = 1.0 / libm::sqrt(n as f64);
    alloc::vec![C64::new(v, 0.0); n]
}
