//! Linear operators and right-preconditioned restarted GMRES.

use alloc::vec::Vec;

use crate::sparse::SparseMatrix;
use crate::vector::{axpy, dotc, is_finite, norm2, scale_real, sub, ZERO};
use crate::C64;

/// A square linear map `x ↦ Ax`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
}

/// Approximate inverse `b ↦ M⁻¹b`.
pub trait Preconditioner {
    fn dim(&self) -> usize;
    fn apply(&self, b: &[C64]) -> Vec<C64>;
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, b: &[C64]) -> Vec<C64> {
        b.to_vec()
    }
}

/// `v ↦ (A − σI)v`.
#[derive(Debug, Clone, Copy)]
pub struct SiraOperator<'a> {
    a: &'a SparseMatrix,
    sigma: C64,
}

pub fn make_sira_operator(a: &SparseMatrix, sigma: C64) -> SiraOperator<'_> {
    SiraOperator { a, sigma }
}

impl LinearOperator for SiraOperator<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.a.shifted_matvec(self.sigma, x).expect("operator dimension")
    }
}

/// `v ↦ (I − yyᴴ)(A − σI)(I − yyᴴ)v` for unit `y`.
#[derive(Debug, Clone)]
pub struct JdOperator<'a> {
    a: &'a SparseMatrix,
    sigma: C64,
    y: Vec<C64>,
}

pub fn make_jd_operator<'a>(a: &'a SparseMatrix, sigma: C64, y: &[C64]) -> JdOperator<'a> {
    debug_assert!((norm2(y) - 1.0).abs() < 1e-10, "projection vector must be unit norm");
    JdOperator { a, sigma, y: y.to_vec() }
}

impl JdOperator<'_> {
    fn project(&self, x: &mut [C64]) {
        let c = dotc(&self.y, x);
        axpy(-c, &self.y, x);
    }
}

impl LinearOperator for JdOperator<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut px = x.to_vec();
        self.project(&mut px);
        let mut w = self.a.shifted_matvec(self.sigma, &px).expect("operator dimension");
        self.project(&mut w);
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Krylov dimension per cycle.
    pub restart: usize,
    /// Cap on Arnoldi steps over all cycles of one solve.
    pub max_total_iters: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 30,
            max_total_iters: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmresStatus {
    Converged,
    ZeroRhs,
    MaxItersExceeded,
    /// A full cycle brought no real improvement of the true residual.
    Stagnated,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub solution: Vec<C64>,
    /// `‖b − op(x̃)‖/‖b‖` from an explicitly recomputed residual.
    pub achieved_rel_residual: f64,
    /// Arnoldi steps, i.e. applications of `op∘M⁻¹`.
    pub iterations: usize,
    pub converged: bool,
    pub status: GmresStatus,
    /// True relative residual at the end of every cycle.
    pub cycle_residuals: Vec<f64>,
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

/// Restarted GMRES on `op∘M⁻¹` from a zero initial guess; the returned
/// iterate is `M⁻¹` applied to the Krylov solution. Stops when the true
/// relative residual is at most `eps`.
///
/// On hitting the iteration cap, or when a cycle fails to improve the
/// residual by at least 0.1%, the best iterate is returned with
/// `converged = false`.
pub fn gmres_right_preconditioned<O, P>(op: &O, m_inv: &P, b: &[C64], eps: f64, opts: &GmresOptions) -> GmresOutcome
where
    O: LinearOperator + ?Sized,
    P: Preconditioner + ?Sized,
{
    let n = op.dim();
    assert_eq!(b.len(), n, "rhs dimension");
    assert_eq!(m_inv.dim(), n, "preconditioner dimension");
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return GmresOutcome {
            solution: alloc::vec![ZERO; n],
            achieved_rel_residual: 0.0,
            iterations: 0,
            converged: true,
            status: GmresStatus::ZeroRhs,
            cycle_residuals: Vec::new(),
        };
    }
    let restart = opts.restart.max(1);

    let mut x = alloc::vec![ZERO; n];
    let mut r = b.to_vec();
    let mut rel = 1.0f64;
    let mut best = (x.clone(), rel);
    let mut total = 0usize;
    let mut cycle_residuals = Vec::new();

    let finish = |best: (Vec<C64>, f64), total, status: GmresStatus, cycles| GmresOutcome {
        solution: best.0,
        achieved_rel_residual: best.1,
        iterations: total,
        converged: status == GmresStatus::Converged,
        status,
        cycle_residuals: cycles,
    };

    loop {
        if rel <= eps {
            return finish(best, total, GmresStatus::Converged, cycle_residuals);
        }
        if total >= opts.max_total_iters {
            return finish(best, total, GmresStatus::MaxItersExceeded, cycle_residuals);
        }

        let beta = norm2(&r);
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(restart + 1);
        let mut v0 = r.clone();
        scale_real(1.0 / beta, &mut v0);
        basis.push(v0);
        // column-major Hessenberg, column j has j+2 entries
        let mut hess: Vec<Vec<C64>> = Vec::with_capacity(restart);
        let mut rot: Vec<(f64, C64)> = Vec::with_capacity(restart);
        let mut g = alloc::vec![ZERO; restart + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k = 0usize;

        while k < restart && total < opts.max_total_iters {
            let z = m_inv.apply(&basis[k]);
            let mut w = op.apply(&z);
            total += 1;
            if !is_finite(&w) {
                return finish(best, total, GmresStatus::NonFinite, cycle_residuals);
            }
            let before = norm2(&w);
            let mut h = alloc::vec![ZERO; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let c = dotc(v, &w);
                axpy(-c, v, &mut w);
                h[i] = c;
            }
            let mut after = norm2(&w);
            if after < before / 100.0 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dotc(v, &w);
                    axpy(-c, v, &mut w);
                    h[i] += c;
                }
                after = norm2(&w);
            }
            h[k + 1] = C64::new(after, 0.0);

            for (i, &(c, s)) in rot.iter().enumerate() {
                let t1 = h[i];
                let t2 = h[i + 1];
                h[i] = c * t1 + s * t2;
                h[i + 1] = -s.conj() * t1 + c * t2;
            }
            let (c, s) = givens(h[k], h[k + 1]);
            h[k] = c * h[k] + s * h[k + 1];
            h[k + 1] = ZERO;
            rot.push((c, s));
            let gk = g[k];
            g[k] = c * gk;
            g[k + 1] = -s.conj() * gk;
            hess.push(h);
            k += 1;

            let happy = after <= f64::EPSILON * before;
            if happy || g[k].norm() <= eps * bnorm {
                break;
            }
            scale_real(1.0 / after, &mut w);
            basis.push(w);
        }

        // back substitution on the k×k triangle
        let mut y = alloc::vec![ZERO; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (j, yj) in y.iter().enumerate().skip(i + 1) {
                s -= hess[j][i] * yj;
            }
            y[i] = if hess[i][i] == ZERO { ZERO } else { s / hess[i][i] };
        }
        let mut u = alloc::vec![ZERO; n];
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut u);
        }
        let dx = m_inv.apply(&u);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        r = sub(b, &op.apply(&x));
        let prev = rel;
        rel = norm2(&r) / bnorm;
        if !rel.is_finite() {
            return finish(best, total, GmresStatus::NonFinite, cycle_residuals);
        }
        cycle_residuals.push(rel);
        if rel < best.1 {
            best = (x.clone(), rel);
        }
        if rel > eps && rel > 0.999 * prev {
            log::debug!("gmres: stagnated at relative residual {rel:e} (requested {eps:e})");
            return finish(best, total, GmresStatus::Stagnated, cycle_residuals);
        }
    }
}
