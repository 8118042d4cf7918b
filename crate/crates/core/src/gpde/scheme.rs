use super::grid::{nodes, GridFunction};
use super::UncertaintyParams;
use crate::error::{Error, Result};
use crate::func::TestFunction;

/// Boundary treatment at `x = -L` and `x = L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Dirichlet data equal to the initial condition.
    #[default]
    Clamp,
    /// Linear extrapolation from the two nearest interior nodes.
    Extrapolate,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamp" => Ok(Self::Clamp),
            "extrapolate" | "linear" => Ok(Self::Extrapolate),
            _ => Err(Error::Parse(format!(
                "unknown boundary `{s}` (clamp, extrapolate)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Truncation radius `L`. When absent, `data_radius` plus six standard
    /// deviations plus the largest drift over the horizon.
    pub half_width: Option<f64>,
    pub data_radius: f64,
    /// Grid points; odd so that `x = 0` is a node.
    pub nx: usize,
    /// Fraction of the stability bound used for the time step.
    pub cfl: f64,
    pub boundary: Boundary,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            half_width: None,
            data_radius: 0.0,
            nx: 801,
            cfl: 0.4,
            boundary: Boundary::Clamp,
        }
    }
}

/// Refuses runs that would need more time steps than this.
const MAX_TIME_STEPS: usize = 50_000_000;

impl SolverConfig {
    pub fn with_nx(mut self, nx: usize) -> Self {
        self.nx = nx;
        self
    }

    pub fn with_half_width(mut self, l: f64) -> Self {
        self.half_width = Some(l);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 51 || self.nx % 2 == 0 {
            return Err(Error::Config(format!(
                "nx must be odd and >= 51, got {}",
                self.nx
            )));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, 1), got {}",
                self.cfl
            )));
        }
        if let Some(l) = self.half_width {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!(
                    "half width must be positive, got {l}"
                )));
            }
        }
        if !(self.data_radius >= 0.0 && self.data_radius.is_finite()) {
            return Err(Error::Config(format!(
                "data radius must be >= 0, got {}",
                self.data_radius
            )));
        }
        Ok(())
    }

    pub fn resolve_half_width(&self, reach: f64) -> f64 {
        match self.half_width {
            Some(l) => l,
            None => {
                let l = self.data_radius + reach;
                if l > 0.0 {
                    l
                } else {
                    1.0
                }
            }
        }
    }
}

/// A family of linear operators `d(x) u'' + q(x) u' + source(x, u)`
/// indexed by a finite control set. The evolution takes the pointwise
/// maximum over controls.
pub trait Generator {
    fn control_count(&self) -> usize;

    /// `(d, q)` for control `c` at `x`, with `d >= 0`.
    fn coefficients(&self, c: usize, x: f64) -> (f64, f64);

    fn has_source(&self) -> bool {
        false
    }

    fn source(&self, _c: usize, _x: f64, _u: f64) -> f64 {
        0.0
    }

    /// Default distance added to the data radius when choosing `L`.
    fn reach(&self, horizon: f64) -> f64;
}

impl Generator for UncertaintyParams {
    fn control_count(&self) -> usize {
        self.corners().len()
    }

    fn coefficients(&self, c: usize, _x: f64) -> (f64, f64) {
        let (q, v) = self.corners()[c];
        (0.5 * v, q)
    }

    fn reach(&self, horizon: f64) -> f64 {
        6.0 * self.sig_hi() * horizon.sqrt() + self.mu_abs_max() * horizon
    }
}

/// Solves `d_t u = G(u_x, u_xx)` on `[0, horizon]` with `u(0, .) = phi`.
pub fn solve_g_parabolic(
    phi: &TestFunction,
    params: &UncertaintyParams,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<GridFunction> {
    solve(phi, params, horizon, cfg)
}

/// Explicit monotone scheme for `d_t u = max_c [d_c u_xx + q_c u_x + f_c(x, u)]`.
///
/// Each control contributes the convex combination
///
/// ```text
/// (1 - w+ - w-) u_i + w+ u_{i+1} + w- u_{i-1}
/// w+ = dt (d/h^2 + max(q, 0)/h),   w- = dt (d/h^2 + max(-q, 0)/h)
/// ```
///
/// which is the central second difference plus an upwind first difference.
/// The step `dt = cfl h^2 / max(2d + |q| h)` keeps every weight in `[0, 1]`,
/// so the update is monotone in each input, also in floating point. The last
/// step is shortened to land on `horizon` exactly.
pub fn solve<G: Generator + ?Sized>(
    phi: &TestFunction,
    generator: &G,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<GridFunction> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Argument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let controls = generator.control_count();
    if controls == 0 {
        return Err(Error::Argument("generator has no controls".into()));
    }
    let l = cfg.resolve_half_width(generator.reach(horizon));
    let nx = cfg.nx;
    let xs = nodes(l, nx);
    let h = 2.0 * l / (nx - 1) as f64;

    let initial: Vec<f64> = xs.iter().map(|&x| phi.call(x)).collect();
    if let Some(i) = initial.iter().position(|u| !u.is_finite()) {
        return Err(Error::Numeric {
            step: 0,
            detail: format!("initial value non-finite at x = {}", xs[i]),
        });
    }

    // Per (control, node) rates: w+ / dt and w- / dt.
    let mut rates = vec![(0.0, 0.0); controls * nx];
    let mut speed: f64 = 0.0;
    for c in 0..controls {
        for (i, &x) in xs.iter().enumerate() {
            let (d, q) = generator.coefficients(c, x);
            if !(d >= 0.0) || !d.is_finite() || !q.is_finite() {
                return Err(Error::Numeric {
                    step: 0,
                    detail: format!("bad coefficients d = {d}, q = {q} at x = {x}"),
                });
            }
            rates[c * nx + i] = (
                d / (h * h) + q.max(0.0) / h,
                d / (h * h) + (-q).max(0.0) / h,
            );
            speed = speed.max(2.0 * d + q.abs() * h);
        }
    }
    let dt_max = if speed > 0.0 {
        cfg.cfl * h * h / speed
    } else {
        horizon
    };
    let steps = (horizon / dt_max).ceil().max(1.0);
    if steps > MAX_TIME_STEPS as f64 {
        return Err(Error::Config(format!(
            "{steps} time steps needed; reduce nx or the horizon"
        )));
    }
    let steps = steps as usize;
    let source = generator.has_source();

    let mut u = initial.clone();
    let mut next = initial.clone();
    for step in 1..=steps {
        let dt = if step == steps {
            horizon - (steps - 1) as f64 * dt_max
        } else {
            dt_max
        };
        for i in 1..nx - 1 {
            let (left, mid, right) = (u[i - 1], u[i], u[i + 1]);
            let mut best = f64::NEG_INFINITY;
            for c in 0..controls {
                let (rp, rm) = rates[c * nx + i];
                let (wp, wm) = (dt * rp, dt * rm);
                let mut v = (1.0 - wp - wm) * mid + wp * right + wm * left;
                if source {
                    v += dt * generator.source(c, xs[i], mid);
                }
                if v > best {
                    best = v;
                }
            }
            next[i] = best;
        }
        match cfg.boundary {
            Boundary::Clamp => {
                next[0] = initial[0];
                next[nx - 1] = initial[nx - 1];
            }
            Boundary::Extrapolate => {
                next[0] = 2.0 * next[1] - next[2];
                next[nx - 1] = 2.0 * next[nx - 2] - next[nx - 3];
            }
        }
        if let Some(i) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                step,
                detail: format!("non-finite value at x = {}", xs[i]),
            });
        }
        std::mem::swap(&mut u, &mut next);
    }
    GridFunction::new(horizon, l, u)
}
