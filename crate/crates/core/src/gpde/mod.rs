//! The G-heat equation and the distributions it generates.
//!
//! For a mean interval `[mu_lo, mu_hi]` and variance interval
//! `[var_lo, var_hi]` the sublinear function
//!
//! ```text
//! G(p, a) = max { q p + sigma2 a / 2 : q in {mu_lo, mu_hi}, sigma2 in {var_lo, var_hi} }
//! ```
//!
//! drives `d_t u = G(u_x, u_xx)`, `u(0, .) = phi`. With zero mean,
//! `u(1, 0)` is the G-normal expectation of `phi`; with zero variance the
//! solution is the maximal distribution over the mean interval.
//!
//! The solver is an explicit monotone scheme (see [`solve`]) so discrete
//! comparison holds bit for bit.

mod grid;
mod quadrature;
mod scheme;

pub use grid::GridFunction;
pub use quadrature::{gauss_hermite, gaussian_reference, HERMITE_NODES};
pub use scheme::{solve, solve_g_parabolic, Boundary, Generator, SolverConfig};

use crate::error::{Error, Result};
use crate::func::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyParams {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub var_lo: f64,
    pub var_hi: f64,
}

impl UncertaintyParams {
    pub fn new(mu_lo: f64, mu_hi: f64, var_lo: f64, var_hi: f64) -> Result<Self> {
        let all = [mu_lo, mu_hi, var_lo, var_hi];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Construction(format!(
                "non-finite uncertainty parameters {all:?}"
            )));
        }
        if mu_lo > mu_hi {
            return Err(Error::Construction(format!(
                "mean interval [{mu_lo}, {mu_hi}] is empty"
            )));
        }
        if !(0.0 <= var_lo && var_lo <= var_hi) {
            return Err(Error::Construction(format!(
                "variance interval [{var_lo}, {var_hi}] must satisfy 0 <= lo <= hi"
            )));
        }
        Ok(Self {
            mu_lo,
            mu_hi,
            var_lo,
            var_hi,
        })
    }

    /// Zero mean, variance in `[var_lo, var_hi]`.
    pub fn volatility(var_lo: f64, var_hi: f64) -> Result<Self> {
        Self::new(0.0, 0.0, var_lo, var_hi)
    }

    /// Zero variance, mean in `[mu_lo, mu_hi]`.
    pub fn mean(mu_lo: f64, mu_hi: f64) -> Result<Self> {
        Self::new(mu_lo, mu_hi, 0.0, 0.0)
    }

    pub fn sig_lo(&self) -> f64 {
        self.var_lo.sqrt()
    }

    pub fn sig_hi(&self) -> f64 {
        self.var_hi.sqrt()
    }

    pub fn mu_abs_max(&self) -> f64 {
        self.mu_lo.abs().max(self.mu_hi.abs())
    }

    pub fn is_mean_free(&self) -> bool {
        self.mu_lo == 0.0 && self.mu_hi == 0.0
    }

    /// Distinct `(q, sigma2)` corners of the generator set.
    pub fn corners(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(4);
        for q in [self.mu_lo, self.mu_hi] {
            for v in [self.var_lo, self.var_hi] {
                if !out.contains(&(q, v)) {
                    out.push((q, v));
                }
            }
        }
        out
    }
}

/// `G(p, a)`, the maximum of `q p + sigma2 a / 2` over the four corners.
pub fn g_eval(params: &UncertaintyParams, p: f64, a: f64) -> f64 {
    params
        .corners()
        .into_iter()
        .map(|(q, v)| 0.5 * v * a + q * p)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `E[phi(X)]` for `X` G-normal: `u(1, 0)` of the G-heat equation.
pub fn gnormal_expectation(
    phi: &TestFunction,
    params: &UncertaintyParams,
    cfg: &SolverConfig,
) -> Result<f64> {
    if !params.is_mean_free() {
        return Err(Error::Argument(format!(
            "G-normal expectation needs a zero mean interval, got [{}, {}]",
            params.mu_lo, params.mu_hi
        )));
    }
    solve_g_parabolic(phi, params, 1.0, cfg)?.evaluate(0.0)
}

const SCAN_POINTS: usize = 2049;
const GOLDEN_TOL: f64 = 1e-10;

/// `max` of `phi` over `[mu_lo, mu_hi]`: a 2049-point scan, then
/// golden-section refinement around the best scan point.
pub fn maximal_expectation(phi: &TestFunction, mu_lo: f64, mu_hi: f64) -> Result<f64> {
    if !(mu_lo <= mu_hi) {
        return Err(Error::Argument(format!(
            "empty interval [{mu_lo}, {mu_hi}]"
        )));
    }
    if mu_lo == mu_hi {
        return Ok(phi.call(mu_lo));
    }
    let step = (mu_hi - mu_lo) / (SCAN_POINTS - 1) as f64;
    let at = |i: usize| {
        if i == SCAN_POINTS - 1 {
            mu_hi
        } else {
            mu_lo + i as f64 * step
        }
    };
    let (mut best_i, mut best) = (0, phi.call(mu_lo));
    for i in 1..SCAN_POINTS {
        let v = phi.call(at(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = at(best_i.saturating_sub(1));
    let hi = at((best_i + 1).min(SCAN_POINTS - 1));
    Ok(best.max(golden_max(phi, lo, hi)))
}

fn golden_max(phi: &TestFunction, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (phi.call(c), phi.call(d));
    while b - a > GOLDEN_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = phi.call(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = phi.call(d);
        }
    }
    fc.max(fd)
}
