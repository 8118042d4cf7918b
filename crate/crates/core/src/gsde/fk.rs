use crate::decimal::decimal;
use crate::error::{Error, Result};
use crate::glattice::LatticeModel;
use crate::gpde::{solve, Generator, SolverConfig};

use super::bsde::{picard_bsde, BsdeSpec, PicardConfig, Terminal};
use super::{solve_sde, SdeSpec};

/// The PDE generator of the forward-backward pair, in forward time:
///
/// ```text
/// d_tau u = max_{v in {var_lo, var_hi}} [ v s^2 u_xx / 2 + (v h + b) u_x + v g(x, u) + f(x, u) ]
/// ```
pub struct FeynmanKacGenerator<'a> {
    pub sde: &'a SdeSpec,
    pub bsde: &'a BsdeSpec,
    pub variances: [f64; 2],
    /// Coefficient bounds on the data range, for the default half width.
    pub s_max: f64,
    pub drift_max: f64,
}

impl<'a> FeynmanKacGenerator<'a> {
    /// Samples the coefficients on `[-r, r]` to size the default domain.
    pub fn new(sde: &'a SdeSpec, bsde: &'a BsdeSpec, var_lo: f64, var_hi: f64, r: f64) -> Self {
        let (mut s_max, mut drift_max) = (0.0f64, 0.0f64);
        for i in 0..=200 {
            let x = r * (i as f64 / 100.0 - 1.0);
            s_max = s_max.max(sde.s(x).abs());
            drift_max = drift_max.max(sde.b(x).abs() + var_hi * sde.h(x).abs());
        }
        Self {
            sde,
            bsde,
            variances: [var_lo, var_hi],
            s_max,
            drift_max,
        }
    }
}

impl Generator for FeynmanKacGenerator<'_> {
    fn control_count(&self) -> usize {
        2
    }

    fn coefficients(&self, c: usize, x: f64) -> (f64, f64) {
        let v = self.variances[c];
        let s = self.sde.s(x);
        (0.5 * v * s * s, v * self.sde.h(x) + self.sde.b(x))
    }

    fn has_source(&self) -> bool {
        true
    }

    fn source(&self, c: usize, x: f64, u: f64) -> f64 {
        self.variances[c] * self.bsde.g(x, u) + self.bsde.f(x, u)
    }

    fn reach(&self, horizon: f64) -> f64 {
        6.0 * self.variances[1].sqrt() * self.s_max * horizon.sqrt() + self.drift_max * horizon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkRow {
    pub x: f64,
    pub u_lattice: f64,
    pub u_pde: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FkReport {
    pub rows: Vec<FkRow>,
    pub residual: f64,
    pub picard_iterations: usize,
}

impl FkReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,u_lattice,u_pde,abs_diff\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                decimal(r.x),
                decimal(r.u_lattice),
                decimal(r.u_pde),
                decimal(r.abs_diff)
            ));
        }
        out
    }
}

/// `u(0, x)` from the lattice BSDE started at each sample `x` against the
/// PDE solution with the same generator. The variances are those of `m`.
pub fn feynman_kac_check(
    m: &LatticeModel,
    sde: &SdeSpec,
    bsde: &BsdeSpec,
    xs: &[f64],
    cfg: &SolverConfig,
    picard: &PicardConfig,
) -> Result<FkReport> {
    let Terminal::Markov(phi) = &bsde.terminal else {
        return Err(Error::Argument(
            "the Feynman–Kac check needs a terminal of the form phi(X_T)".into(),
        ));
    };
    if xs.is_empty() {
        return Err(Error::Argument("no sample points".into()));
    }
    let radius = xs.iter().fold(cfg.data_radius, |r, x| r.max(x.abs()));
    let generator = FeynmanKacGenerator::new(sde, bsde, m.var_lo(), m.var_hi(), radius.max(1.0));
    let pde_cfg = SolverConfig {
        data_radius: radius,
        ..cfg.clone()
    };
    let u = solve(phi, &generator, m.horizon(), &pde_cfg)?;
    let mut rows = Vec::with_capacity(xs.len());
    let mut iterations = 0;
    for &x in xs {
        let forward = solve_sde(m, sde, x)?;
        let sol = picard_bsde(m, &forward, bsde, picard)?;
        iterations = iterations.max(sol.iterations);
        let u_pde = u.evaluate(x)?;
        let u_lattice = sol.y0();
        rows.push(FkRow {
            x,
            u_lattice,
            u_pde,
            abs_diff: (u_lattice - u_pde).abs(),
        });
    }
    let residual = rows.iter().fold(0.0f64, |w, r| w.max(r.abs_diff));
    Ok(FkReport {
        rows,
        residual,
        picard_iterations: iterations,
    })
}
