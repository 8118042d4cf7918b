//! G-Brownian motion on a volatility-controlled lattice.
//!
//! Each of the `N` steps first picks a volatility `sigma in {sig_lo, sig_hi}`
//! and then moves by `+sigma sqrt(dt)` or `-sigma sqrt(dt)` with probability
//! one half. A node at depth `k` is a path prefix over the four increments
//!
//! ```text
//! digit 0: -sig_hi sqrt(dt)   digit 1: -sig_lo sqrt(dt)
//! digit 2: +sig_lo sqrt(dt)   digit 3: +sig_hi sqrt(dt)
//! ```
//!
//! and is stored at index `sum_j digit_j 4^(k-1-j)`, so the children of node
//! `i` are `4i + d`. The conditional expectation is the backward induction
//!
//! ```text
//! V(i) = max( (V(4i+3) + V(4i)) / 2, (V(4i+2) + V(4i+1)) / 2 )
//! ```
//!
//! Full trees are kept in memory, which caps the exact mode at 12 steps.
//! [`markov_expectation`] covers longer horizons for functions of `B_T`.

mod calculus;
mod checks;

pub use calculus::{
    conditional_expectation, conditional_process, expectation, isometry_check, ito_integral,
    ito_process, lower_expectation, markov_expectation, martingale_residual, quadratic_variation,
    qv_moment, Drift, IsometryCheck, QuadraticVariation, QvMoment,
};
pub use checks::{
    gbm_characterization_residual, gbm_probes, jensen_check, qv_maximal_check, GbmCharacterization,
    JensenCondition, JensenReport, JensenRow, QvMaximal, JENSEN_TOL,
};

use crate::error::{Error, Result};
use crate::gpde::UncertaintyParams;

/// Largest step count for full-tree computations.
pub const EXACT_MAX_STEPS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeModel {
    steps: usize,
    horizon: f64,
    var_lo: f64,
    var_hi: f64,
}

impl LatticeModel {
    pub fn new(steps: usize, horizon: f64, var_lo: f64, var_hi: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Construction(
                "lattice needs at least one step".into(),
            ));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Construction(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(0.0 <= var_lo && var_lo <= var_hi && var_hi > 0.0 && var_hi.is_finite()) {
            return Err(Error::Construction(format!(
                "variances must satisfy 0 <= lo <= hi, hi > 0; got [{var_lo}, {var_hi}]"
            )));
        }
        Ok(Self {
            steps,
            horizon,
            var_lo,
            var_hi,
        })
    }

    pub fn from_params(steps: usize, horizon: f64, params: &UncertaintyParams) -> Result<Self> {
        Self::new(steps, horizon, params.var_lo, params.var_hi)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn var_lo(&self) -> f64 {
        self.var_lo
    }

    pub fn var_hi(&self) -> f64 {
        self.var_hi
    }

    pub fn sig_lo(&self) -> f64 {
        self.var_lo.sqrt()
    }

    pub fn sig_hi(&self) -> f64 {
        self.var_hi.sqrt()
    }

    pub fn params(&self) -> UncertaintyParams {
        UncertaintyParams {
            mu_lo: 0.0,
            mu_hi: 0.0,
            var_lo: self.var_lo,
            var_hi: self.var_hi,
        }
    }

    /// `2 G(eta) = max(sig_lo^2 eta, sig_hi^2 eta)`.
    pub fn two_g(&self, eta: f64) -> f64 {
        (self.var_hi * eta).max(self.var_lo * eta)
    }

    /// Increments indexed by digit.
    pub fn increments(&self) -> [f64; 4] {
        let r = self.dt().sqrt();
        let (lo, hi) = (self.sig_lo() * r, self.sig_hi() * r);
        [-hi, -lo, lo, hi]
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    /// Fails when the full tree would exceed [`EXACT_MAX_STEPS`].
    pub fn ensure_exact(&self) -> Result<()> {
        if self.steps > EXACT_MAX_STEPS {
            return Err(Error::Capacity(format!(
                "exact lattice mode is limited to {EXACT_MAX_STEPS} steps (4^{EXACT_MAX_STEPS} leaves), \
                 {} requested; use markov_expectation for functions of B_T",
                self.steps
            )));
        }
        Ok(())
    }

    /// Same volatilities and step size, fewer steps.
    pub fn truncated(&self, steps: usize) -> Result<Self> {
        Self::new(steps, self.dt() * steps as f64, self.var_lo, self.var_hi)
    }
}

pub(crate) fn layer_len(k: usize) -> usize {
    1usize << (2 * k)
}

/// A node seen from the root: its digits and the running `B` and `<B>`.
#[derive(Debug)]
pub struct PathView<'a> {
    pub depth: usize,
    pub index: usize,
    pub digits: &'a [u8],
    /// `dB_j` for `j < depth`.
    pub increments: &'a [f64],
    /// `B_j` for `j <= depth`.
    pub b: &'a [f64],
    /// `<B>_j` for `j <= depth`.
    pub qv: &'a [f64],
    pub dt: f64,
}

impl PathView<'_> {
    pub fn b_now(&self) -> f64 {
        self.b[self.depth]
    }

    pub fn qv_now(&self) -> f64 {
        self.qv[self.depth]
    }
}

/// Visits every node of depth `<= max_depth` in depth-first order.
pub(crate) fn walk(m: &LatticeModel, max_depth: usize, mut visit: impl FnMut(&PathView)) {
    let inc = m.increments();
    let mut digits = vec![0u8; max_depth];
    let mut incs = vec![0.0; max_depth];
    let mut b = vec![0.0; max_depth + 1];
    let mut qv = vec![0.0; max_depth + 1];
    #[allow(clippy::too_many_arguments)]
    fn go(
        depth: usize,
        index: usize,
        max_depth: usize,
        inc: &[f64; 4],
        dt: f64,
        digits: &mut [u8],
        incs: &mut [f64],
        b: &mut [f64],
        qv: &mut [f64],
        visit: &mut dyn FnMut(&PathView),
    ) {
        visit(&PathView {
            depth,
            index,
            digits: &digits[..depth],
            increments: &incs[..depth],
            b: &b[..=depth],
            qv: &qv[..=depth],
            dt,
        });
        if depth == max_depth {
            return;
        }
        for d in 0..4u8 {
            let x = inc[d as usize];
            digits[depth] = d;
            incs[depth] = x;
            b[depth + 1] = b[depth] + x;
            qv[depth + 1] = qv[depth] + x * x;
            go(
                depth + 1,
                4 * index + d as usize,
                max_depth,
                inc,
                dt,
                digits,
                incs,
                b,
                qv,
                visit,
            );
        }
    }
    go(
        0,
        0,
        max_depth,
        &inc,
        m.dt(),
        &mut digits,
        &mut incs,
        &mut b,
        &mut qv,
        &mut visit,
    );
}

/// One value per node, layer `k` holding the `4^k` nodes of depth `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess {
    layers: Vec<Vec<f64>>,
}

impl AdaptedProcess {
    /// Evaluates `f` at every node of depth `0..=N`.
    pub fn from_fn(m: &LatticeModel, f: impl Fn(&PathView) -> f64) -> Result<Self> {
        m.ensure_exact()?;
        let mut layers: Vec<Vec<f64>> = (0..=m.steps).map(|k| vec![0.0; layer_len(k)]).collect();
        walk(m, m.steps, |p| layers[p.depth][p.index] = f(p));
        Ok(Self { layers })
    }

    /// Wraps precomputed layers; fails unless layer `k` has `4^k` entries.
    pub fn from_layers(layers: Vec<Vec<f64>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Contract("adapted process without layers".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.len() != layer_len(k) {
                return Err(Error::Contract(format!(
                    "layer {k} has {} values, a depth-{k} layer has {}",
                    l.len(),
                    layer_len(k)
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn constant(m: &LatticeModel, c: f64) -> Result<Self> {
        m.ensure_exact()?;
        Ok(Self {
            layers: (0..=m.steps).map(|k| vec![c; layer_len(k)]).collect(),
        })
    }

    /// `B_k` on every node.
    pub fn brownian(m: &LatticeModel) -> Result<Self> {
        Self::accumulate(m, |x| x)
    }

    /// `<B>_k = sum_{j<k} dB_j^2` on every node.
    pub fn quadratic_variation(m: &LatticeModel) -> Result<Self> {
        Self::accumulate(m, |x| x * x)
    }

    fn accumulate(m: &LatticeModel, f: impl Fn(f64) -> f64) -> Result<Self> {
        m.ensure_exact()?;
        let inc = m.increments().map(f);
        let mut layers = vec![vec![0.0]];
        for k in 0..m.steps {
            let prev = &layers[k];
            let mut next = Vec::with_capacity(4 * prev.len());
            for &v in prev {
                next.extend(inc.iter().map(|&x| v + x));
            }
            layers.push(next);
        }
        Ok(Self { layers })
    }

    /// Deepest stored depth.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn layer(&self, k: usize) -> &[f64] {
        &self.layers[k]
    }

    pub fn at(&self, k: usize, index: usize) -> f64 {
        self.layers[k][index]
    }

    pub fn root(&self) -> f64 {
        self.layers[0][0]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| l.iter().map(|&v| f(v)).collect())
                .collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::Contract(format!(
                "processes of depth {} and {} cannot be combined",
                self.depth(),
                other.depth()
            )));
        }
        Ok(Self {
            layers: self
                .layers
                .iter()
                .zip(&other.layers)
                .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
                .collect(),
        })
    }

    /// Largest absolute value over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.layers
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn require_depth_exact(&self, m: &LatticeModel) -> Result<()> {
        if self.depth() != m.steps() {
            return Err(Error::Contract(format!(
                "process has depth {}, the lattice has {} steps",
                self.depth(),
                m.steps()
            )));
        }
        Ok(())
    }

    pub(crate) fn require_depth(&self, m: &LatticeModel, depth: usize, what: &str) -> Result<()> {
        if self.layers.len() <= depth || self.layers.len() > m.steps + 1 {
            return Err(Error::Contract(format!(
                "{what} has depth {}, the lattice needs values through depth {depth} of {}",
                self.depth(),
                m.steps
            )));
        }
        Ok(())
    }
}

/// A function of the whole path: one value per leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFunctional {
    leaves: Vec<f64>,
}

impl PathFunctional {
    pub fn from_fn(m: &LatticeModel, f: impl Fn(&PathView) -> f64) -> Result<Self> {
        m.ensure_exact()?;
        let mut leaves = vec![0.0; layer_len(m.steps)];
        walk(m, m.steps, |p| {
            if p.depth == m.steps {
                leaves[p.index] = f(p);
            }
        });
        Ok(Self { leaves })
    }

    pub fn from_leaves(m: &LatticeModel, leaves: Vec<f64>) -> Result<Self> {
        m.ensure_exact()?;
        if leaves.len() != layer_len(m.steps) {
            return Err(Error::Contract(format!(
                "{} leaf values for a lattice with {} leaves",
                leaves.len(),
                layer_len(m.steps)
            )));
        }
        Ok(Self { leaves })
    }

    /// `phi(B_T)`.
    pub fn terminal(m: &LatticeModel, phi: &crate::TestFunction) -> Result<Self> {
        let b = AdaptedProcess::brownian(m)?;
        Ok(Self {
            leaves: b.layers[m.steps].iter().map(|&x| phi.call(x)).collect(),
        })
    }

    /// `X_k` of an adapted process, seen as a function of the full path.
    pub fn from_adapted_at(m: &LatticeModel, x: &AdaptedProcess, k: usize) -> Result<Self> {
        x.require_depth(m, k, "process")?;
        Self::from_layer(m, k, x.layer(k))
    }

    /// Lifts depth-`k` node values to the leaves below them.
    pub fn from_layer(m: &LatticeModel, k: usize, values: &[f64]) -> Result<Self> {
        m.ensure_exact()?;
        if k > m.steps || values.len() != layer_len(k) {
            return Err(Error::Contract(format!(
                "{} values do not form layer {k}",
                values.len()
            )));
        }
        let shift = 2 * (m.steps - k);
        Ok(Self {
            leaves: (0..layer_len(m.steps))
                .map(|i| values[i >> shift])
                .collect(),
        })
    }

    pub fn leaves(&self) -> &[f64] {
        &self.leaves
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            leaves: self.leaves.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.leaves.len() != other.leaves.len() {
            return Err(Error::Contract(
                "path functionals on different lattices".into(),
            ));
        }
        Ok(Self {
            leaves: self
                .leaves
                .iter()
                .zip(&other.leaves)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: usize) -> LatticeModel {
        LatticeModel::new(n, 1.0, 0.25, 1.0).unwrap()
    }

    #[test]
    fn model_invariants() {
        assert!(LatticeModel::new(0, 1.0, 0.25, 1.0).is_err());
        assert!(LatticeModel::new(3, 0.0, 0.25, 1.0).is_err());
        assert!(LatticeModel::new(3, 1.0, 1.0, 0.5).is_err());
        assert!(LatticeModel::new(3, 1.0, 0.0, 0.0).is_err());
        assert!(LatticeModel::new(3, 1.0, 0.0, 1.0).is_ok());
        assert!(matches!(model(13).ensure_exact(), Err(Error::Capacity(_))));
        let inc = model(4).increments();
        assert_eq!(inc, [-0.5, -0.25, 0.25, 0.5]);
    }

    #[test]
    fn walk_and_layers_agree() {
        let m = model(4);
        let b = AdaptedProcess::brownian(&m).unwrap();
        let walked = AdaptedProcess::from_fn(&m, |p| p.b_now()).unwrap();
        assert_eq!(b, walked);
        let qv = AdaptedProcess::quadratic_variation(&m).unwrap();
        let walked = AdaptedProcess::from_fn(&m, |p| p.qv_now()).unwrap();
        assert_eq!(qv, walked);
        assert_eq!(b.at(2, 4 * 3 + 0), 0.5 - 0.5);
    }

    #[test]
    fn shape_checks() {
        assert!(matches!(
            AdaptedProcess::from_layers(vec![vec![0.0], vec![1.0, 2.0]]),
            Err(Error::Contract(_))
        ));
        let m = model(2);
        assert!(PathFunctional::from_leaves(&m, vec![0.0; 15]).is_err());
        let lifted = PathFunctional::from_layer(&m, 1, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(lifted.leaves()[..5], [1.0, 1.0, 1.0, 1.0, 2.0]);
    }
}
