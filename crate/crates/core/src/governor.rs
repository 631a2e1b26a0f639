//! Inner-solve accuracy control.
//!
//! For a target relative error `ε̃` of the expansion vector the inner
//! solver is asked for relative residual `ε = min(C′ε̃, 0.1)`, with `C′`
//! estimated from the current (harmonic) Ritz values.

use crate::C64;

/// Cap on the requested inner tolerance in adaptive mode.
pub const EPS_CAP: f64 = 0.1;
/// Inner tolerance used for the "exact" methods.
pub const EXACT_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ToleranceMode {
    /// `ε = min(C′ε̃, 0.1)`.
    Adaptive { eps_tilde: f64 },
    /// Fixed `ε = 1e-14`.
    Exact,
    Fixed(f64),
}

impl ToleranceMode {
    pub fn is_adaptive(&self) -> bool {
        matches!(self, Self::Adaptive { .. })
    }
}

/// Value of the constant estimate, plus whether near-coincident terms were skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CPrime {
    pub value: f64,
    pub degenerate: bool,
}

/// `C′ = 1` for `m = 1`, otherwise `2·max_{i≥2} |ν_i − σ| / |ν_i − ρ|`.
///
/// `values` must be sorted by `|ν_i − σ|`; `m` is the current subspace
/// dimension. Terms with `|ν_i − ρ| < eps·(1 + |ρ|)` are skipped and flagged;
/// if every term is skipped the estimate is infinite.
pub fn compute_c_prime(rho: C64, sigma: C64, values: &[C64], m: usize) -> CPrime {
    if m <= 1 {
        return CPrime {
            value: 1.0,
            degenerate: false,
        };
    }
    let floor = f64::EPSILON * (1.0 + rho.norm());
    let mut degenerate = false;
    let mut best: Option<f64> = None;
    for nu in values.iter().skip(1) {
        let gap = (nu - rho).norm();
        if gap < floor {
            degenerate = true;
            continue;
        }
        let term = (nu - sigma).norm() / gap;
        best = Some(best.map_or(term, |b: f64| b.max(term)));
    }
    match best {
        Some(b) => CPrime {
            value: 2.0 * b,
            degenerate,
        },
        None if degenerate => CPrime {
            value: f64::INFINITY,
            degenerate,
        },
        // fewer than two finite values: nothing to separate from
        None => CPrime {
            value: 1.0,
            degenerate: false,
        },
    }
}

/// Turns `C′` into per-solve tolerances and counts how often the cap is hit.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceGovernor {
    mode: ToleranceMode,
    count_total: usize,
    count_capped: usize,
}

impl ToleranceGovernor {
    /// Panics if an adaptive `ε̃` is outside `(0, 1)` or a fixed `ε` is not positive.
    pub fn new(mode: ToleranceMode) -> Self {
        match mode {
            ToleranceMode::Adaptive { eps_tilde } => {
                assert!(eps_tilde > 0.0 && eps_tilde < 1.0, "eps_tilde must lie in (0, 1)");
            }
            ToleranceMode::Fixed(eps) => assert!(eps > 0.0, "fixed inner tolerance must be positive"),
            ToleranceMode::Exact => {}
        }
        Self {
            mode,
            count_total: 0,
            count_capped: 0,
        }
    }

    pub fn mode(&self) -> ToleranceMode {
        self.mode
    }

    /// Tolerance for the next inner solve and whether the cap was selected.
    pub fn inner_tolerance(&mut self, c_prime: f64) -> (f64, bool) {
        self.count_total += 1;
        match self.mode {
            ToleranceMode::Adaptive { eps_tilde } => {
                let scaled = c_prime * eps_tilde;
                if scaled.is_nan() || scaled >= EPS_CAP {
                    self.count_capped += 1;
                    (EPS_CAP, true)
                } else {
                    (scaled, false)
                }
            }
            ToleranceMode::Exact => (EXACT_EPS, false),
            ToleranceMode::Fixed(eps) => (eps, false),
        }
    }

    pub fn count_total(&self) -> usize {
        self.count_total
    }

    pub fn count_capped(&self) -> usize {
        self.count_capped
    }

    /// Fraction of inner solves that used the cap.
    pub fn p_01(&self) -> f64 {
        if self.count_total == 0 {
            0.0
        } else {
            self.count_capped as f64 / self.count_total as f64
        }
    }
}
