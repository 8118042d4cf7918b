use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::func::TestFunction;
use crate::glattice::{
    conditional_process, expectation, AdaptedProcess, LatticeModel, PathFunctional,
};

pub type Driver = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone)]
pub enum Terminal {
    /// `xi = phi(X_T)`.
    Markov(TestFunction),
    /// Any function of the path.
    Path(PathFunctional),
}

/// `Y_t = E[xi + int_t^T f(X, Y) ds + int_t^T g(X, Y) d<B> | Omega_t]`.
#[derive(Clone)]
pub struct BsdeSpec {
    pub terminal: Terminal,
    f: Driver,
    g: Driver,
    lipschitz: f64,
}

impl fmt::Debug for BsdeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BsdeSpec")
            .field("terminal", &self.terminal)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl BsdeSpec {
    pub fn new(
        terminal: Terminal,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
    ) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::Construction(format!(
                "Lipschitz constant must be finite and >= 0, got {lipschitz}"
            )));
        }
        Ok(Self {
            terminal,
            f: Arc::new(f),
            g: Arc::new(g),
            lipschitz,
        })
    }

    /// Zero drivers.
    pub fn terminal_only(terminal: Terminal) -> Self {
        Self::new(terminal, |_, _| 0.0, |_, _| 0.0, 0.0).expect("valid")
    }

    pub fn markov(phi: TestFunction) -> Self {
        Self::terminal_only(Terminal::Markov(phi))
    }

    /// `f(x, y) = -rate y`.
    pub fn discounted(terminal: Terminal, rate: f64) -> Result<Self> {
        Self::new(terminal, move |_, y| -rate * y, |_, _| 0.0, rate.abs())
    }

    pub fn with_terminal(&self, terminal: Terminal) -> Self {
        Self {
            terminal,
            ..self.clone()
        }
    }

    pub fn f(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    pub fn g(&self, x: f64, y: f64) -> f64 {
        (self.g)(x, y)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn terminal_values(
        &self,
        m: &LatticeModel,
        forward: &AdaptedProcess,
    ) -> Result<PathFunctional> {
        match &self.terminal {
            Terminal::Markov(phi) => PathFunctional::from_leaves(
                m,
                forward
                    .layer(m.steps())
                    .iter()
                    .map(|&x| phi.call(x))
                    .collect(),
            ),
            Terminal::Path(xi) => {
                if xi.leaves().len() != forward.layer(m.steps()).len() {
                    return Err(Error::Contract(
                        "terminal path functional does not match the lattice".into(),
                    ));
                }
                Ok(xi.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BsdeSolution {
    pub y: AdaptedProcess,
    pub iterations: usize,
    /// Sup-node change of each iteration.
    pub deltas: Vec<f64>,
}

impl BsdeSolution {
    pub fn y0(&self) -> f64 {
        self.y.root()
    }

    /// Largest ratio of consecutive deltas over the last three iterations;
    /// `None` with fewer than two nonzero deltas there.
    pub fn contraction_ratio(&self) -> Option<f64> {
        let tail = &self.deltas[self.deltas.len().saturating_sub(3)..];
        let ratios: Vec<f64> = tail
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect();
        if ratios.is_empty() {
            None
        } else {
            Some(ratios.into_iter().fold(0.0, f64::max))
        }
    }
}

/// Picard iteration for the BSDE driven by the forward process `forward`.
///
/// Each iterate is computed by backward induction, which equals the
/// conditional expectation of the full remaining sum by the tower property:
///
/// ```text
/// Z_k = f(X_k, Y_k) dt + max_sigma [ (Z_{k+1}(+) + Z_{k+1}(-)) / 2 + g(X_k, Y_k) sigma^2 dt ]
/// ```
///
/// with `Y` the previous iterate. The start is `E[xi | Omega_k]`.
pub fn picard_bsde(
    m: &LatticeModel,
    forward: &AdaptedProcess,
    spec: &BsdeSpec,
    cfg: &PicardConfig,
) -> Result<BsdeSolution> {
    if !(cfg.tol > 0.0) {
        return Err(Error::Argument(format!(
            "Picard tolerance must be positive, got {}",
            cfg.tol
        )));
    }
    if cfg.max_iter == 0 {
        return Err(Error::Argument(
            "Picard needs at least one iteration".into(),
        ));
    }
    forward.require_depth_exact(m)?;
    let xi = spec.terminal_values(m, forward)?;
    let mut y = conditional_process(m, &xi)?;
    let dt = m.dt();
    let (vlo, vhi) = (m.var_lo() * dt, m.var_hi() * dt);
    let mut deltas = Vec::new();
    for iter in 1..=cfg.max_iter {
        let mut layers: Vec<Vec<f64>> = vec![xi.leaves().to_vec()];
        for k in (0..m.steps()).rev() {
            let children = layers.last().expect("non-empty");
            let (xs, ys) = (forward.layer(k), y.layer(k));
            let mut layer = Vec::with_capacity(xs.len());
            for (i, c) in children.chunks_exact(4).enumerate() {
                let (x, yo) = (xs[i], ys[i]);
                let g = spec.g(x, yo);
                let hi = 0.5 * (c[3] + c[0]) + g * vhi;
                let lo = 0.5 * (c[2] + c[1]) + g * vlo;
                let v = spec.f(x, yo) * dt + if hi >= lo { hi } else { lo };
                if !v.is_finite() {
                    return Err(Error::Numeric {
                        step: iter,
                        detail: format!("non-finite Y at node (depth {k}, index {i})"),
                    });
                }
                layer.push(v);
            }
            layers.push(layer);
        }
        layers.reverse();
        let next = AdaptedProcess::from_layers(layers)?;
        let delta = next
            .layers()
            .iter()
            .zip(y.layers())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).abs()))
            .fold(0.0f64, f64::max);
        deltas.push(delta);
        y = next;
        if delta < cfg.tol {
            return Ok(BsdeSolution {
                y,
                iterations: iter,
                deltas,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        last_delta: *deltas.last().expect("ran"),
    })
}

/// `|Y_0(xi) - Y_0(xi')| / E[|xi - xi'|]` for two terminals under the same drivers.
pub fn stability_ratio(
    m: &LatticeModel,
    forward: &AdaptedProcess,
    spec: &BsdeSpec,
    other: &Terminal,
    cfg: &PicardConfig,
) -> Result<f64> {
    let alt = spec.with_terminal(other.clone());
    let a = picard_bsde(m, forward, spec, cfg)?;
    let b = picard_bsde(m, forward, &alt, cfg)?;
    let xa = spec.terminal_values(m, forward)?;
    let xb = alt.terminal_values(m, forward)?;
    let gap = expectation(m, &xa.zip_with(&xb, |p, q| (p - q).abs())?)?;
    if gap == 0.0 {
        return Err(Error::Argument("terminals coincide".into()));
    }
    Ok((a.y0() - b.y0()).abs() / gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsde::{solve_sde, SdeSpec};

    fn setup(n: usize) -> (LatticeModel, AdaptedProcess) {
        let m = LatticeModel::new(n, 1.0, 0.25, 1.0).unwrap();
        let x = solve_sde(&m, &SdeSpec::brownian(), 0.0).unwrap();
        (m, x)
    }

    #[test]
    fn zero_driver_is_conditional_expectation() {
        let (m, x) = setup(5);
        let spec = BsdeSpec::markov(TestFunction::call_payoff(0.1));
        let sol = picard_bsde(&m, &x, &spec, &PicardConfig::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        let xi = PathFunctional::terminal(&m, &TestFunction::call_payoff(0.1)).unwrap();
        assert_eq!(sol.y, conditional_process(&m, &xi).unwrap());
    }

    #[test]
    fn non_convergence_is_reported() {
        let (m, x) = setup(6);
        let spec = BsdeSpec::discounted(Terminal::Markov(TestFunction::square()), 1.0).unwrap();
        let cfg = PicardConfig {
            tol: 1e-10,
            max_iter: 2,
        };
        match picard_bsde(&m, &x, &spec, &cfg) {
            Err(Error::NonConvergence {
                iterations: 2,
                last_delta,
            }) => assert!(last_delta > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn g_driver_adds_quadratic_variation() {
        // g = 1, f = 0, xi = 0: Y_0 = E[<B>_T] = var_hi T
        let (m, x) = setup(4);
        let spec = BsdeSpec::new(
            Terminal::Markov(TestFunction::constant(0.0)),
            |_, _| 0.0,
            |_, _| 1.0,
            0.0,
        )
        .unwrap();
        let sol = picard_bsde(&m, &x, &spec, &PicardConfig::default()).unwrap();
        assert!((sol.y0() - 1.0).abs() < 1e-14);
    }
}
