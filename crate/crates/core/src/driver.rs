//! Restarted outer iteration for the six methods.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::dense::orthonormalize_against;
use crate::extraction::{extract, Extraction, ExtractionError, ExtractionKind, RefinedApproach, SubspaceState};
use crate::governor::{compute_c_prime, ToleranceGovernor, ToleranceMode};
use crate::krylov::{gmres_right_preconditioned, make_jd_operator, make_sira_operator, GmresOptions, GmresStatus};
use crate::precond::{ilut_factorize, IlutOptions, JdProjectedPreconditioner, PrecondError};
use crate::sparse::SparseMatrix;
use crate::vector::{axpy, dotc, fix_phase, is_finite, norm2, normalized_ones, scale_real};
use crate::C64;

/// How the subspace is expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Expansion {
    /// `(A − σI)u = r`.
    Sira,
    /// `(I − yyᴴ)(A − σI)(I − yyᴴ)u = −r`, `u ⊥ y`.
    Jd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MethodSpec {
    pub expansion: Expansion,
    pub extraction: ExtractionKind,
}

impl MethodSpec {
    pub const SIRA: Self = Self::new(Expansion::Sira, ExtractionKind::Standard);
    pub const JD: Self = Self::new(Expansion::Jd, ExtractionKind::Standard);
    pub const HSIRA: Self = Self::new(Expansion::Sira, ExtractionKind::Harmonic);
    pub const HJD: Self = Self::new(Expansion::Jd, ExtractionKind::Harmonic);
    pub const RHSIRA: Self = Self::new(Expansion::Sira, ExtractionKind::RefinedHarmonic);
    pub const RHJD: Self = Self::new(Expansion::Jd, ExtractionKind::RefinedHarmonic);

    /// In the order the methods are usually tabulated.
    pub const ALL: [Self; 6] = [Self::SIRA, Self::JD, Self::HSIRA, Self::HJD, Self::RHSIRA, Self::RHJD];

    pub const fn new(expansion: Expansion, extraction: ExtractionKind) -> Self {
        Self { expansion, extraction }
    }

    pub fn name(&self) -> &'static str {
        match (self.expansion, self.extraction) {
            (Expansion::Sira, ExtractionKind::Standard) => "SIRA",
            (Expansion::Jd, ExtractionKind::Standard) => "JD",
            (Expansion::Sira, ExtractionKind::Harmonic) => "HSIRA",
            (Expansion::Jd, ExtractionKind::Harmonic) => "HJD",
            (Expansion::Sira, ExtractionKind::RefinedHarmonic) => "RHSIRA",
            (Expansion::Jd, ExtractionKind::RefinedHarmonic) => "RHJD",
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method {0:?} (expected one of sira, jd, hsira, hjd, rhsira, rhjd)")]
pub struct UnknownMethod(pub String);

impl FromStr for MethodSpec {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownMethod(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub sigma: C64,
    /// Maximum subspace dimension per cycle.
    pub m_max: usize,
    /// Restarts allowed before giving up.
    pub max_restarts: usize,
    /// Outer tolerance is `max(‖A‖₁, 1)·tol_factor`.
    pub tol_factor: f64,
    pub mode: ToleranceMode,
    pub ilu: IlutOptions,
    pub gmres: GmresOptions,
    pub refined: RefinedApproach,
}

impl SolveConfig {
    pub fn new(sigma: C64) -> Self {
        Self {
            sigma,
            m_max: 30,
            max_restarts: 500,
            tol_factor: 1e-12,
            mode: ToleranceMode::Adaptive { eps_tilde: 1e-3 },
            ilu: IlutOptions::new(1e-3),
            gmres: GmresOptions::default(),
            refined: RefinedApproach::CrossProduct,
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.m_max < 2 {
            return Err(SolveError::InvalidConfig("m_max must be at least 2"));
        }
        if self.max_restarts < 1 {
            return Err(SolveError::InvalidConfig("max_restarts must be at least 1"));
        }
        if !(self.tol_factor > 0.0 && self.tol_factor.is_finite()) {
            return Err(SolveError::InvalidConfig("tol_factor must be positive"));
        }
        if !(self.sigma.re.is_finite() && self.sigma.im.is_finite()) {
            return Err(SolveError::InvalidConfig("sigma must be finite"));
        }
        if self.gmres.restart == 0 {
            return Err(SolveError::InvalidConfig("gmres restart length must be positive"));
        }
        match self.mode {
            ToleranceMode::Adaptive { eps_tilde } if !(eps_tilde > 0.0 && eps_tilde < 1.0) => {
                Err(SolveError::InvalidConfig("eps_tilde must lie in (0, 1)"))
            }
            ToleranceMode::Fixed(eps) if !(eps > 0.0) => Err(SolveError::InvalidConfig("fixed inner tolerance must be positive")),
            _ => Ok(()),
        }
    }
}

/// Problems with the inputs; solver breakdowns are reported in [`SolveReport::failure`] instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("matrix is empty")]
    EmptyMatrix,
}

/// Why a run stopped without meeting the tolerance.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveFailure {
    #[error("no convergence within {0} restarts")]
    MaxRestarts(usize),
    #[error("preconditioner construction failed: {0}")]
    Preconditioner(PrecondError),
    #[error("extraction failed: {0}")]
    Extraction(ExtractionError),
    #[error("expansion vector repeatedly fell inside the search subspace")]
    RepeatedDeflation,
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    /// Number of restarts before this iteration.
    pub cycle: usize,
    /// Subspace dimension at extraction.
    pub m: usize,
    pub rho: C64,
    pub residual_norm: f64,
    /// Requested inner relative residual; `None` when no inner solve followed.
    pub eps_used: Option<f64>,
    pub c_prime: Option<f64>,
    /// `C′` skipped near-coincident values.
    pub degenerate: bool,
    pub inner_iters: usize,
    pub capped: bool,
    /// Recomputed true relative residual of the inner solve.
    pub inner_rel_residual: Option<f64>,
    pub inner_status: Option<GmresStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: MethodSpec,
    pub converged: bool,
    pub failure: Option<SolveFailure>,
    /// The converged pair, or the smallest-residual pair seen on failure.
    pub eigenvalue: C64,
    pub eigenvector: Vec<C64>,
    pub residual_norm: f64,
    pub tol: f64,
    pub i_restart: usize,
    /// Inner solves performed.
    pub i_outer: usize,
    /// Arnoldi steps summed over all inner solves.
    pub i_inner: usize,
    pub p_01: f64,
    pub history: Vec<OuterRecord>,
}

/// `‖r‖ < tol`.
pub fn convergence_check(r: &[C64], tol: f64) -> bool {
    norm2(r) < tol
}

/// Orthonormal columns spanning the restart subspace for the unit vector `y`.
///
/// For a real matrix and real shift the real and imaginary parts of `y`
/// are used (one column when they are dependent or one is negligible);
/// otherwise `y` itself.
pub fn restart_basis(y: &[C64], real_problem: bool) -> Vec<Vec<C64>> {
    let ny = norm2(y);
    let mut unit = y.to_vec();
    if ny > 0.0 {
        scale_real(1.0 / ny, &mut unit);
    }
    if !real_problem {
        return alloc::vec![unit];
    }
    fix_phase(&mut unit);
    let re: Vec<C64> = unit.iter().map(|z| C64::new(z.re, 0.0)).collect();
    let im: Vec<C64> = unit.iter().map(|z| C64::new(z.im, 0.0)).collect();
    let floor = 1e-13;
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(2);
    for part in [re, im] {
        if norm2(&part) <= floor {
            continue;
        }
        if let Ok((q, _)) = orthonormalize_against(&basis, &part) {
            basis.push(q);
        }
    }
    if basis.is_empty() {
        basis.push(unit);
    }
    basis
}

struct Run<'a> {
    a: &'a SparseMatrix,
    spec: MethodSpec,
    cfg: &'a SolveConfig,
    real_problem: bool,
    state: SubspaceState,
    /// Dimension the current cycle started with.
    cycle_start: usize,
    i_restart: usize,
    i_inner: usize,
    history: Vec<OuterRecord>,
    best: Option<Extraction>,
    last_good: Option<Extraction>,
}

impl Run<'_> {
    /// Collapses the basis onto `y`; `false` when the restart budget is spent.
    fn restart(&mut self, y: &[C64]) -> Result<bool, SolveFailure> {
        if self.i_restart >= self.cfg.max_restarts {
            return Ok(false);
        }
        let cols = restart_basis(y, self.real_problem);
        self.cycle_start = cols.len();
        self.state = SubspaceState::from_basis(self.a, self.cfg.sigma, self.cfg.m_max, cols).map_err(SolveFailure::Extraction)?;
        self.i_restart += 1;
        log::debug!("{}: restart {} (basis dimension {})", self.spec, self.i_restart, self.cycle_start);
        Ok(true)
    }

    fn note(&mut self, ex: &Extraction) {
        if self.best.as_ref().is_none_or(|b| ex.residual_norm < b.residual_norm) {
            self.best = Some(ex.clone());
        }
        self.last_good = Some(ex.clone());
    }
}

/// Runs one method from the normalized all-ones vector until
/// `‖Ay − ρy‖ < max(‖A‖₁, 1)·tol_factor`.
pub fn solve(a: &SparseMatrix, spec: MethodSpec, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    cfg.validate()?;
    let n = a.dim();
    if n == 0 {
        return Err(SolveError::EmptyMatrix);
    }
    let sigma = cfg.sigma;
    let tol = a.one_norm().max(1.0) * cfg.tol_factor;
    let mut governor = ToleranceGovernor::new(cfg.mode);

    let mut run = Run {
        a,
        spec,
        cfg,
        real_problem: a.is_real() && sigma.im == 0.0,
        state: SubspaceState::new(sigma, cfg.m_max),
        cycle_start: 1,
        i_restart: 0,
        i_inner: 0,
        history: Vec::new(),
        best: None,
        last_good: None,
    };

    let finish = |run: Run<'_>, governor: &ToleranceGovernor, converged: Option<Extraction>, failure: Option<SolveFailure>| {
        let pair = converged.clone().or(run.best);
        let (eigenvalue, eigenvector, residual_norm) = match pair {
            Some(ex) => (ex.rho, ex.y, ex.residual_norm),
            None => (C64::new(f64::NAN, f64::NAN), Vec::new(), f64::INFINITY),
        };
        SolveReport {
            method: spec,
            converged: converged.is_some(),
            failure,
            eigenvalue,
            eigenvector,
            residual_norm,
            tol,
            i_restart: run.i_restart,
            i_outer: governor.count_total(),
            i_inner: run.i_inner,
            p_01: governor.p_01(),
            history: run.history,
        }
    };

    let ilu = match ilut_factorize(a, sigma, &cfg.ilu) {
        Ok(f) => f,
        Err(e) => return Ok(finish(run, &governor, None, Some(SolveFailure::Preconditioner(e)))),
    };
    if ilu.patched_pivots() > 0 {
        log::warn!("ILUT patched {} small pivots", ilu.patched_pivots());
    }

    if let Err(e) = run.state.expand(a, normalized_ones(n)) {
        return Ok(finish(run, &governor, None, Some(SolveFailure::Extraction(e))));
    }
    let mut after_deflation = false;

    loop {
        let m = run.state.dim();
        let ex = match extract(&run.state, a, spec.extraction, cfg.refined) {
            Ok(ex) if ex.residual_norm.is_finite() => ex,
            outcome => {
                let err = outcome.err().unwrap_or(ExtractionError::NoFiniteValue);
                log::warn!("{spec}: extraction failed at m = {m}: {err}");
                // fall back to the last good vector if this cycle has gained anything
                let retry = match run.last_good.take() {
                    Some(prev) if m > run.cycle_start => Some(prev),
                    _ => None,
                };
                let failure = match retry {
                    Some(prev) => match run.restart(&prev.y) {
                        Ok(true) => continue,
                        Ok(false) => SolveFailure::MaxRestarts(cfg.max_restarts),
                        Err(f) => f,
                    },
                    None => SolveFailure::Extraction(err),
                };
                return Ok(finish(run, &governor, None, Some(failure)));
            }
        };
        run.note(&ex);

        let mut record = OuterRecord {
            cycle: run.i_restart,
            m,
            rho: ex.rho,
            residual_norm: ex.residual_norm,
            eps_used: None,
            c_prime: None,
            degenerate: false,
            inner_iters: 0,
            capped: false,
            inner_rel_residual: None,
            inner_status: None,
        };
        log::debug!("{spec}: cycle {} m {m} rho {} |r| {:e}", run.i_restart, ex.rho, ex.residual_norm);

        if convergence_check(&ex.residual, tol) {
            run.history.push(record);
            return Ok(finish(run, &governor, Some(ex), None));
        }

        if run.state.is_full() {
            run.history.push(record);
            match run.restart(&ex.y) {
                Ok(true) => continue,
                Ok(false) => return Ok(finish(run, &governor, None, Some(SolveFailure::MaxRestarts(cfg.max_restarts)))),
                Err(f) => return Ok(finish(run, &governor, None, Some(f))),
            }
        }

        let cp = compute_c_prime(ex.rho, sigma, &ex.harmonic_values, m);
        if cp.degenerate {
            log::debug!("{spec}: near-coincident values skipped in C'");
        }
        let (eps, capped) = governor.inner_tolerance(cp.value);
        let outcome = match spec.expansion {
            Expansion::Sira => gmres_right_preconditioned(&make_sira_operator(a, sigma), &ilu, &ex.residual, eps, &cfg.gmres),
            Expansion::Jd => {
                let op = make_jd_operator(a, sigma, &ex.y);
                let prec = JdProjectedPreconditioner::new_or_fallback(&ilu, &ex.y);
                let mut rhs: Vec<C64> = ex.residual.iter().map(|r| -r).collect();
                let c = dotc(&ex.y, &rhs);
                axpy(-c, &ex.y, &mut rhs);
                let mut out = gmres_right_preconditioned(&op, &prec, &rhs, eps, &cfg.gmres);
                let c = dotc(&ex.y, &out.solution);
                axpy(-c, &ex.y, &mut out.solution);
                out
            }
        };
        run.i_inner += outcome.iterations;
        record.eps_used = Some(eps);
        record.c_prime = Some(cp.value);
        record.degenerate = cp.degenerate;
        record.capped = capped;
        record.inner_iters = outcome.iterations;
        record.inner_rel_residual = Some(outcome.achieved_rel_residual);
        record.inner_status = Some(outcome.status);
        run.history.push(record);
        if !outcome.converged {
            log::debug!("{spec}: inner solve {:?} at {:e} (asked {eps:e})", outcome.status, outcome.achieved_rel_residual);
        }

        let expanded = if is_finite(&outcome.solution) {
            orthonormalize_against(run.state.basis(), &outcome.solution).ok()
        } else {
            None
        };
        match expanded {
            Some((v, _)) => {
                if let Err(e) = run.state.expand(a, v) {
                    return Ok(finish(run, &governor, None, Some(SolveFailure::Extraction(e))));
                }
                after_deflation = false;
            }
            None => {
                if after_deflation && run.state.dim() == run.cycle_start {
                    return Ok(finish(run, &governor, None, Some(SolveFailure::RepeatedDeflation)));
                }
                log::warn!("{spec}: expansion vector deflated at m = {m}; restarting");
                after_deflation = true;
                match run.restart(&ex.y) {
                    Ok(true) => {}
                    Ok(false) => return Ok(finish(run, &governor, None, Some(SolveFailure::MaxRestarts(cfg.max_restarts)))),
                    Err(f) => return Ok(finish(run, &governor, None, Some(f))),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::planted;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn exact_cfg(sigma: C64) -> SolveConfig {
        let mut cfg = SolveConfig::new(sigma);
        cfg.mode = ToleranceMode::Exact;
        cfg
    }

    #[test]
    fn method_names_round_trip() {
        for m in MethodSpec::ALL {
            assert_eq!(m.name().to_ascii_lowercase().parse::<MethodSpec>().unwrap(), m);
        }
        assert!("xjd".parse::<MethodSpec>().is_err());
    }

    #[test]
    fn convergence_check_is_strict() {
        assert!(convergence_check(&[C64::new(0.0, 0.0)], 1e-12));
        let a = SparseMatrix::from_diagonal(&[c(5.0)]);
        let tol = a.one_norm().max(1.0) * 1e-12;
        assert_eq!(tol, 5e-12);
        assert!(!convergence_check(&[c(tol)], tol));
        assert!(convergence_check(&[c(tol * 0.5)], tol));
    }

    #[test]
    fn restart_basis_cases() {
        let y = alloc::vec![c(0.6), c(0.8)];
        assert_eq!(restart_basis(&y, true), alloc::vec![y.clone()]);
        assert_eq!(restart_basis(&y, false), alloc::vec![y.clone()]);

        let s = 1.0 / libm::sqrt(2.0);
        let y = alloc::vec![C64::new(s, s), c(0.0)];
        let b = restart_basis(&y, true);
        assert_eq!(b.len(), 1);
        assert!((b[0][0] - c(1.0)).norm() < 1e-15 && b[0][1].norm() < 1e-15);
        // complex problems keep y as is
        assert_eq!(restart_basis(&y, false).len(), 1);

        let mut y = alloc::vec![C64::new(1.0, 0.5), C64::new(-0.3, 2.0), C64::new(0.2, -0.1)];
        let ny = norm2(&y);
        scale_real(1.0 / ny, &mut y);
        let b = restart_basis(&y, true);
        assert_eq!(b.len(), 2);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((dotc(&b[i], &b[j]) - c(target)).norm() <= 1e-12);
            }
            assert!(b[i].iter().all(|z| z.im == 0.0));
        }
    }

    #[test]
    fn diagonal_problem_all_methods() {
        let d: Vec<C64> = (1..=10).map(|k| c(k as f64)).collect();
        let a = SparseMatrix::from_diagonal(&d);
        for spec in MethodSpec::ALL {
            let rep = solve(&a, spec, &exact_cfg(c(4.2))).unwrap();
            assert!(rep.converged, "{spec}: {:?}", rep.failure);
            assert!((rep.eigenvalue - c(4.0)).norm() <= 1e-10, "{spec}: {}", rep.eigenvalue);
            assert!(rep.history.len() <= 15, "{spec}: {} outer iterations", rep.history.len());
        }
    }

    #[test]
    fn planted_spectrum_inexact_all_methods() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let (a, eigs) = planted(&mut rng, 100);
        let sigma = C64::new(0.3, 0.1);
        let target = *eigs
            .iter()
            .min_by(|x, y| (*x - sigma).norm().partial_cmp(&(*y - sigma).norm()).unwrap())
            .unwrap();
        for spec in MethodSpec::ALL {
            let mut cfg = SolveConfig::new(sigma);
            cfg.mode = ToleranceMode::Adaptive { eps_tilde: 1e-3 };
            let rep = solve(&a, spec, &cfg).unwrap();
            assert!(rep.converged, "{spec}: {:?}", rep.failure);
            assert!((rep.eigenvalue - target).norm() <= 1e-8 * (1.0 + target.norm()), "{spec}: {} vs {target}", rep.eigenvalue);
        }
    }

    #[test]
    fn report_bookkeeping_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, _) = planted(&mut rng, 80);
        let mut cfg = SolveConfig::new(C64::new(-0.2, 0.0));
        cfg.m_max = 5;
        for spec in MethodSpec::ALL {
            let rep = solve(&a, spec, &cfg).unwrap();
            assert!(rep.converged, "{spec}: {:?}", rep.failure);
            let last = rep.history.last().unwrap();
            assert!(last.residual_norm < rep.tol);
            assert_eq!(rep.i_inner, rep.history.iter().map(|r| r.inner_iters).sum::<usize>());
            let solves = rep.history.iter().filter(|r| r.eps_used.is_some()).count();
            assert_eq!(rep.i_outer, solves);
            let capped = rep.history.iter().filter(|r| r.capped).count();
            assert_eq!(rep.p_01, capped as f64 / solves as f64);
            assert_eq!(rep.i_restart, last.cycle);
            assert!(rep.history.iter().all(|r| r.m <= cfg.m_max));
            for r in rep.history.iter().filter(|r| r.m == 1) {
                if let Some(cp) = r.c_prime {
                    assert_eq!(cp, 1.0);
                }
            }
            // recomputed residual agrees with the logged one
            let mut res = a.matvec(&rep.eigenvector).unwrap();
            axpy(-rep.eigenvalue, &rep.eigenvector, &mut res);
            assert!((norm2(&res) - rep.residual_norm).abs() <= 1e-13 * rep.residual_norm.max(1e-300) + 1e-16);
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (a, _) = planted(&mut rng, 60);
        let cfg = SolveConfig::new(C64::new(0.1, 0.2));
        for spec in [MethodSpec::HJD, MethodSpec::RHSIRA] {
            assert_eq!(solve(&a, spec, &cfg).unwrap(), solve(&a, spec, &cfg).unwrap());
        }
    }

    #[test]
    fn max_restarts_failure_reports_best_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (a, _) = planted(&mut rng, 80);
        let mut cfg = SolveConfig::new(C64::new(0.05, 0.0));
        cfg.m_max = 2;
        cfg.max_restarts = 1;
        cfg.tol_factor = 1e-15;
        let rep = solve(&a, MethodSpec::SIRA, &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.failure, Some(SolveFailure::MaxRestarts(1)));
        assert_eq!(rep.i_restart, 1);
        let best = rep.history.iter().map(|r| r.residual_norm).fold(f64::INFINITY, f64::min);
        assert_eq!(rep.residual_norm, best);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let a = SparseMatrix::identity(3);
        let mut cfg = SolveConfig::new(c(0.5));
        cfg.m_max = 1;
        assert!(solve(&a, MethodSpec::JD, &cfg).is_err());
    }
}
