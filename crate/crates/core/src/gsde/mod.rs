//! Scalar G-SDEs on the lattice, backward SDEs by Picard iteration, and the
//! nonlinear Feynman–Kac cross-check against the PDE solver.
//!
//! The forward equation is the time-homogeneous Euler recursion
//!
//! ```text
//! X_{k+1} = X_k + b(X_k) dt + h(X_k) d<B>_k + s(X_k) dB_k
//! ```
//!
//! evaluated on every node of a [`LatticeModel`].

mod bsde;
mod fk;

pub use bsde::{
    picard_bsde, stability_ratio, BsdeSolution, BsdeSpec, Driver, PicardConfig, Terminal,
};
pub use fk::{feynman_kac_check, FeynmanKacGenerator, FkReport, FkRow};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::glattice::{expectation, AdaptedProcess, LatticeModel, PathFunctional};

pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `X_t = exp(alpha t + beta <B>_t + gamma B_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl GeomParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
            return Err(Error::Construction(format!(
                "non-finite geometric parameters ({alpha}, {beta}, {gamma})"
            )));
        }
        Ok(Self { alpha, beta, gamma })
    }
}

/// Drift `b`, `<B>` coefficient `h` and diffusion `s`, with a declared
/// Lipschitz bound `K` covering all three.
#[derive(Clone)]
pub struct SdeSpec {
    name: String,
    b: Coefficient,
    h: Coefficient,
    s: Coefficient,
    lipschitz: f64,
    geometric: Option<GeomParams>,
}

impl fmt::Debug for SdeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeSpec")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl SdeSpec {
    pub fn new(
        name: impl Into<String>,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
        s: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
    ) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::Construction(format!(
                "Lipschitz constant must be positive, got {lipschitz}"
            )));
        }
        Ok(Self {
            name: name.into(),
            b: Arc::new(b),
            h: Arc::new(h),
            s: Arc::new(s),
            lipschitz,
            geometric: None,
        })
    }

    /// `dX = 0`.
    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0, |_| 0.0, |_| 0.0, 1.0).expect("valid")
    }

    /// `dX = dB`.
    pub fn brownian() -> Self {
        Self::new("bm", |_| 0.0, |_| 0.0, |_| 1.0, 1.0).expect("valid")
    }

    /// `dX = a X dt + c X dB`.
    pub fn linear(a: f64, c: f64) -> Result<Self> {
        let mut spec = Self::new(
            format!("linear:{a},{c}"),
            move |x| a * x,
            |_| 0.0,
            move |x| c * x,
            a.abs().max(c.abs()).max(f64::MIN_POSITIVE),
        )?;
        spec.geometric = Some(GeomParams::new(a, -0.5 * c * c, c)?);
        Ok(spec)
    }

    /// `dX = mu X dt + nu X d<B> + sigma X dB`.
    pub fn black_scholes(mu: f64, nu: f64, sigma: f64) -> Result<Self> {
        let mut spec = Self::new(
            format!("bs:{mu},{nu},{sigma}"),
            move |x| mu * x,
            move |x| nu * x,
            move |x| sigma * x,
            mu.abs()
                .max(nu.abs())
                .max(sigma.abs())
                .max(f64::MIN_POSITIVE),
        )?;
        spec.geometric = Some(GeomParams::new(mu, nu - 0.5 * sigma * sigma, sigma)?);
        Ok(spec)
    }

    /// `zero`, `bm`, `linear:a,c` or `bs:mu,nu,sigma`.
    pub fn parse(text: &str) -> Result<Self> {
        let (head, args) = text.split_once(':').unwrap_or((text, ""));
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad coefficient '{t}' in '{text}'")))
                })
                .collect()
        };
        match (head, nums()) {
            ("zero", _) if args.is_empty() => Ok(Self::zero()),
            ("bm", _) if args.is_empty() => Ok(Self::brownian()),
            ("linear", Ok(v)) if v.len() == 2 => Self::linear(v[0], v[1]),
            ("bs", Ok(v)) if v.len() == 3 => Self::black_scholes(v[0], v[1], v[2]),
            (_, Err(e)) if matches!(head, "linear" | "bs") => Err(e),
            _ => Err(Error::Parse(format!(
                "unknown coefficient set '{text}'; expected zero, bm, linear:a,c or bs:mu,nu,sigma"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn b(&self, x: f64) -> f64 {
        (self.b)(x)
    }

    pub fn h(&self, x: f64) -> f64 {
        (self.h)(x)
    }

    pub fn s(&self, x: f64) -> f64 {
        (self.s)(x)
    }

    /// The closed form `X = x0 exp(...)` for geometric presets.
    pub fn geometric(&self) -> Option<GeomParams> {
        self.geometric
    }
}

/// Euler recursion on every node, starting from `x0`.
pub fn solve_sde(m: &LatticeModel, spec: &SdeSpec, x0: f64) -> Result<AdaptedProcess> {
    m.ensure_exact()?;
    if !x0.is_finite() {
        return Err(Error::Argument(format!(
            "initial state must be finite, got {x0}"
        )));
    }
    let inc = m.increments();
    let dt = m.dt();
    let mut layers = vec![vec![x0]];
    for k in 0..m.steps() {
        let prev = &layers[k];
        let mut next = Vec::with_capacity(4 * prev.len());
        for (i, &x) in prev.iter().enumerate() {
            let (b, h, s) = (spec.b(x), spec.h(x), spec.s(x));
            for (d, &db) in inc.iter().enumerate() {
                let v = x + b * dt + h * (db * db) + s * db;
                if !v.is_finite() {
                    return Err(Error::Numeric {
                        step: k + 1,
                        detail: format!(
                            "state overflow at node (depth {}, index {})",
                            k + 1,
                            4 * i + d
                        ),
                    });
                }
                next.push(v);
            }
        }
        layers.push(next);
    }
    AdaptedProcess::from_layers(layers)
}

/// `exp(alpha t_k + beta <B>_k + gamma B_k)` on every node.
pub fn geometric_gbm(m: &LatticeModel, p: &GeomParams) -> Result<AdaptedProcess> {
    let b = AdaptedProcess::brownian(m)?;
    let qv = AdaptedProcess::quadratic_variation(m)?;
    let layers = (0..=m.steps())
        .map(|k| {
            let t = m.time(k);
            b.layer(k)
                .iter()
                .zip(qv.layer(k))
                .map(|(&b, &q)| (p.alpha * t + p.beta * q + p.gamma * b).exp())
                .collect()
        })
        .collect();
    AdaptedProcess::from_layers(layers)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementRow {
    pub n: usize,
    /// `sqrt(E[(X_T - X_T^exact)^2])`.
    pub l2_error: f64,
    /// `max |X_T - X_T^exact|` over all paths.
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementStudy {
    pub rows: Vec<RefinementRow>,
}

impl RefinementStudy {
    /// Error reduction per doubling of `N` between consecutive rows:
    /// `(e_i / e_{i+1})^(ln 2 / ln(n_{i+1} / n_i))`.
    pub fn doubling_ratios(&self, metric: impl Fn(&RefinementRow) -> f64) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| {
                let p = (metric(&w[0]) / metric(&w[1])).ln() / (w[1].n as f64 / w[0].n as f64).ln();
                2f64.powf(p)
            })
            .collect()
    }

    pub fn l2_ratios(&self) -> Vec<f64> {
        self.doubling_ratios(|r| r.l2_error)
    }

    pub fn max_ratios(&self) -> Vec<f64> {
        self.doubling_ratios(|r| r.max_error)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,l2_error,max_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                r.n,
                crate::decimal::decimal(r.l2_error),
                crate::decimal::decimal(r.max_error)
            ));
        }
        out
    }
}

/// Euler solutions of a geometric preset against its closed form for each
/// step count in `ns`, with horizon and variances taken from `base`.
pub fn sde_refinement(
    base: &LatticeModel,
    spec: &SdeSpec,
    x0: f64,
    ns: &[usize],
) -> Result<RefinementStudy> {
    let geom = spec.geometric().ok_or_else(|| {
        Error::Argument(format!(
            "'{}' has no closed form; use a linear or bs preset",
            spec.name()
        ))
    })?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let m = LatticeModel::new(n, base.horizon(), base.var_lo(), base.var_hi())?;
        let euler = solve_sde(&m, spec, x0)?;
        let exact = geometric_gbm(&m, &geom)?;
        let err: Vec<f64> = euler
            .layer(n)
            .iter()
            .zip(exact.layer(n))
            .map(|(&a, &e)| a - x0 * e)
            .collect();
        let max_error = err.iter().fold(0.0f64, |w, e| w.max(e.abs()));
        let sq = PathFunctional::from_leaves(&m, err.iter().map(|e| e * e).collect())?;
        rows.push(RefinementRow {
            n,
            l2_error: expectation(&m, &sq)?.sqrt(),
            max_error,
        });
    }
    Ok(RefinementStudy { rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSensitivity {
    /// `max |X - X'| / |x0 - x0'|` over all nodes.
    pub max_node: f64,
    /// `max_k E[|X_k - X'_k|^2] / |x0 - x0'|^2`.
    pub mean_square: f64,
}

impl FlowSensitivity {
    /// `C` with `mean_square = exp(C T)`.
    pub fn mean_square_rate(&self, horizon: f64) -> f64 {
        self.mean_square.ln() / horizon
    }
}

/// Mean-square Gronwall constant of the Euler recursion for Lipschitz bound `K`:
/// `E[|X_k - X'_k|^2] <= exp(C t_k) |x0 - x0'|^2` for every `N` with
/// `C = 2K(1 + sig_hi^2) + K^2 sig_hi^2 + K^2 (1 + sig_hi^2)^2 T`.
pub fn gronwall_constant(m: &LatticeModel, spec: &SdeSpec) -> f64 {
    let k = spec.lipschitz();
    let v = m.var_hi();
    2.0 * k * (1.0 + v) + k * k * v + k * k * (1.0 + v).powi(2) * m.horizon()
}

/// Dependence of the Euler solution on its initial state.
pub fn flow_sensitivity(
    m: &LatticeModel,
    spec: &SdeSpec,
    x0: f64,
    x1: f64,
) -> Result<FlowSensitivity> {
    let d0 = (x0 - x1).abs();
    if d0 == 0.0 {
        return Err(Error::Argument("initial states must differ".into()));
    }
    let a = solve_sde(m, spec, x0)?;
    let b = solve_sde(m, spec, x1)?;
    let mut max_node = 0.0f64;
    let mut mean_square = 0.0f64;
    for k in 0..=m.steps() {
        let diff: Vec<f64> = a
            .layer(k)
            .iter()
            .zip(b.layer(k))
            .map(|(p, q)| (p - q).abs())
            .collect();
        max_node = max_node.max(diff.iter().fold(0.0, |w: f64, v| w.max(*v)));
        let sq = PathFunctional::from_layer(m, k, &diff.iter().map(|v| v * v).collect::<Vec<_>>())?;
        mean_square = mean_square.max(expectation(m, &sq)?);
    }
    Ok(FlowSensitivity {
        max_node: max_node / d0,
        mean_square: mean_square / (d0 * d0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: usize) -> LatticeModel {
        LatticeModel::new(n, 1.0, 0.25, 1.0).unwrap()
    }

    #[test]
    fn trivial_specs() {
        let m = model(5);
        let x = solve_sde(&m, &SdeSpec::zero(), 0.7).unwrap();
        assert!(x.layers().iter().flatten().all(|&v| v == 0.7));
        let x = solve_sde(&m, &SdeSpec::brownian(), 0.7).unwrap();
        let b = AdaptedProcess::brownian(&m).unwrap();
        for k in 0..=5 {
            for (a, c) in x.layer(k).iter().zip(b.layer(k)) {
                assert!((a - (0.7 + c)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn geometric_bounds() {
        let m = model(6);
        let one = geometric_gbm(&m, &GeomParams::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(one.layers().iter().flatten().all(|&v| v == 1.0));
        let g = geometric_gbm(&m, &GeomParams::new(0.0, 1.0, 0.0).unwrap()).unwrap();
        for k in 0..=6 {
            let t = m.time(k);
            for &v in g.layer(k) {
                assert!(v >= (0.25 * t).exp() * (1.0 - 1e-14) && v <= t.exp() * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn parse_presets() {
        assert_eq!(SdeSpec::parse("bm").unwrap().s(3.0), 1.0);
        let bs = SdeSpec::parse("bs:0.1,0.2,0.5").unwrap();
        assert_eq!(
            bs.geometric().unwrap(),
            GeomParams {
                alpha: 0.1,
                beta: 0.2 - 0.125,
                gamma: 0.5
            }
        );
        assert_eq!(SdeSpec::parse("linear:1,2").unwrap().h(4.0), 0.0);
        assert!(matches!(SdeSpec::parse("linear:1"), Err(Error::Parse(_))));
        assert!(matches!(SdeSpec::parse("bs:a,b,c"), Err(Error::Parse(_))));
        assert!(SdeSpec::parse("cubic").is_err());
        assert!(SdeSpec::new("x", |x| x, |x| x, |x| x, 0.0).is_err());
    }

    #[test]
    fn overflow_reports_node() {
        let m = model(8);
        let spec = SdeSpec::new("blow", |x| x * x * 1e200, |_| 0.0, |_| 0.0, 1.0).unwrap();
        match solve_sde(&m, &spec, 10.0) {
            Err(Error::Numeric { step, detail }) => {
                assert!(step >= 1 && detail.contains("depth"), "{detail}");
            }
            other => panic!("{other:?}"),
        }
    }
}
