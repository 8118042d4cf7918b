use crate::dp::{self, Coverage, DpConfig, DpValue};
use crate::error::{Error, Result};
use crate::func::TestFunction;

use super::{layer_len, AdaptedProcess, LatticeModel, PathFunctional};

/// One backward step: `max_sigma` of the symmetric pair averages, ties to `sig_hi`.
pub(crate) fn backward_layer(children: &[f64]) -> Vec<f64> {
    children
        .chunks_exact(4)
        .map(|c| {
            let hi = 0.5 * (c[3] + c[0]);
            let lo = 0.5 * (c[2] + c[1]);
            if hi >= lo {
                hi
            } else {
                lo
            }
        })
        .collect()
}

/// `E[X | Omega_k]` at every depth `k = 0..=N`.
pub fn conditional_process(m: &LatticeModel, x: &PathFunctional) -> Result<AdaptedProcess> {
    m.ensure_exact()?;
    if x.leaves().len() != layer_len(m.steps()) {
        return Err(Error::Contract(
            "path functional does not belong to this lattice".into(),
        ));
    }
    let mut layers = vec![x.leaves().to_vec()];
    for _ in 0..m.steps() {
        let next = backward_layer(layers.last().expect("non-empty"));
        layers.push(next);
    }
    layers.reverse();
    AdaptedProcess::from_layers(layers)
}

/// The depth-`k` slice of `E[X | Omega_k]`.
pub fn conditional_expectation(m: &LatticeModel, x: &PathFunctional, k: usize) -> Result<Vec<f64>> {
    if k > m.steps() {
        return Err(Error::Argument(format!(
            "depth {k} exceeds the {} lattice steps",
            m.steps()
        )));
    }
    m.ensure_exact()?;
    let mut layer = x.leaves().to_vec();
    if layer.len() != layer_len(m.steps()) {
        return Err(Error::Contract(
            "path functional does not belong to this lattice".into(),
        ));
    }
    for _ in k..m.steps() {
        layer = backward_layer(&layer);
    }
    Ok(layer)
}

/// `E[X]`, the root value.
pub fn expectation(m: &LatticeModel, x: &PathFunctional) -> Result<f64> {
    Ok(conditional_expectation(m, x, 0)?[0])
}

/// `-E[-X]`.
pub fn lower_expectation(m: &LatticeModel, x: &PathFunctional) -> Result<f64> {
    Ok(-expectation(m, &x.map(|v| -v))?)
}

/// `E[terminal(B_T)]` by state-grid dynamic programming, for any step count.
pub fn markov_expectation(
    m: &LatticeModel,
    terminal: &TestFunction,
    cfg: &DpConfig,
) -> Result<DpValue> {
    let [a, b, c, d] = m.increments();
    let controls = vec![vec![(a, 0.5), (d, 0.5)], vec![(b, 0.5), (c, 0.5)]];
    let spread = m.sig_hi() * m.horizon().sqrt();
    let coverage = Coverage {
        default_half_width: 8.0 * spread,
        min_half_width: 4.0 * spread,
    };
    dp::evaluate(&controls, m.steps(), terminal, cfg, coverage)
}

fn check_integrand(m: &LatticeModel, eta: &AdaptedProcess, what: &str) -> Result<()> {
    m.ensure_exact()?;
    eta.require_depth(m, m.steps() - 1, what)
}

/// `sum_{j<k} eta_j dB_j` at every node.
pub fn ito_process(m: &LatticeModel, eta: &AdaptedProcess) -> Result<AdaptedProcess> {
    check_integrand(m, eta, "integrand")?;
    let inc = m.increments();
    let mut layers = vec![vec![0.0]];
    for k in 0..m.steps() {
        let prev = &layers[k];
        let e = eta.layer(k);
        let mut next = Vec::with_capacity(4 * prev.len());
        for (i, &v) in prev.iter().enumerate() {
            next.extend(inc.iter().map(|&x| v + e[i] * x));
        }
        layers.push(next);
    }
    AdaptedProcess::from_layers(layers)
}

/// `int_0^T eta dB = sum_k eta_k dB_k` on every path.
pub fn ito_integral(m: &LatticeModel, eta: &AdaptedProcess) -> Result<PathFunctional> {
    let p = ito_process(m, eta)?;
    PathFunctional::from_adapted_at(m, &p, m.steps())
}

#[derive(Debug, Clone)]
pub struct QuadraticVariation {
    pub process: AdaptedProcess,
    /// `max |B_k^2 - 2 sum_{j<k} B_j dB_j - <B>_k|` over all nodes.
    pub identity_residual: f64,
}

pub fn quadratic_variation(m: &LatticeModel) -> Result<QuadraticVariation> {
    let b = AdaptedProcess::brownian(m)?;
    let qv = AdaptedProcess::quadratic_variation(m)?;
    let stoch = ito_process(m, &b)?;
    let mut residual = 0.0f64;
    for k in 0..=m.steps() {
        for ((&bk, &q), &s) in b.layer(k).iter().zip(qv.layer(k)).zip(stoch.layer(k)) {
            residual = residual.max((bk * bk - 2.0 * s - q).abs());
        }
    }
    Ok(QuadraticVariation {
        process: qv,
        identity_residual: residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QvMoment {
    /// `E[<B>_T^n]`.
    pub upper: f64,
    /// `-E[-<B>_T^n]`.
    pub lower: f64,
    /// `E[<B>_T^2]`.
    pub second_moment: f64,
    /// `E[<B>_T^2] <= 10 sig_hi^4 T^2`.
    pub second_moment_bounded: bool,
}

pub fn qv_moment(m: &LatticeModel, n: u32) -> Result<QvMoment> {
    if n == 0 {
        return Err(Error::Argument("moment order must be at least 1".into()));
    }
    let qv = AdaptedProcess::quadratic_variation(m)?;
    let terminal = PathFunctional::from_adapted_at(m, &qv, m.steps())?;
    let power = terminal.map(|v| v.powi(n as i32));
    let second = expectation(m, &terminal.map(|v| v * v))?;
    Ok(QvMoment {
        upper: expectation(m, &power)?,
        lower: lower_expectation(m, &power)?,
        second_moment: second,
        second_moment_bounded: second <= 10.0 * m.var_hi().powi(2) * m.horizon().powi(2),
    })
}

/// Whether the martingale is compensated by `-2G(eta) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Drift {
    #[default]
    Compensated,
    Omitted,
}

/// Builds `M_k = sum phi_j dB_j + sum eta_j d<B>_j - sum 2G(eta_j) dt` and
/// returns `max |E[M_{k+1} | Omega_k] - M_k|` over all nodes of depth `< N`.
pub fn martingale_residual(
    m: &LatticeModel,
    phi: &AdaptedProcess,
    eta: &AdaptedProcess,
    drift: Drift,
) -> Result<f64> {
    check_integrand(m, phi, "phi")?;
    check_integrand(m, eta, "eta")?;
    let inc = m.increments();
    let dt = m.dt();
    let mut prev = vec![0.0];
    let mut residual = 0.0f64;
    for k in 0..m.steps() {
        let (p, e) = (phi.layer(k), eta.layer(k));
        let mut next = Vec::with_capacity(4 * prev.len());
        for (i, &mk) in prev.iter().enumerate() {
            let comp = match drift {
                Drift::Compensated => m.two_g(e[i]) * dt,
                Drift::Omitted => 0.0,
            };
            next.extend(inc.iter().map(|&x| mk + p[i] * x + e[i] * (x * x) - comp));
        }
        for (mk, cond) in prev.iter().zip(backward_layer(&next)) {
            residual = residual.max((cond - mk).abs());
        }
        prev = next;
    }
    Ok(residual)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryCheck {
    /// `E[(sum eta dB)^2]`.
    pub lhs: f64,
    /// `E[sum eta^2 d<B>]`.
    pub rhs: f64,
    pub pass: bool,
}

pub fn isometry_check(m: &LatticeModel, eta: &AdaptedProcess) -> Result<IsometryCheck> {
    let integral = ito_integral(m, eta)?;
    let eta2 = eta.map(|v| v * v);
    // sum eta^2 d<B> is the Ito-type sum against <B> increments
    let inc = m.increments().map(|x| x * x);
    let mut layers = vec![vec![0.0]];
    for k in 0..m.steps() {
        let e = eta2.layer(k);
        let next: Vec<f64> = layers[k]
            .iter()
            .enumerate()
            .flat_map(|(i, &v)| inc.map(|q| v + e[i] * q))
            .collect();
        layers.push(next);
    }
    let energy = PathFunctional::from_leaves(m, layers.pop().expect("non-empty"))?;
    let lhs = expectation(m, &integral.map(|v| v * v))?;
    let rhs = expectation(m, &energy)?;
    Ok(IsometryCheck {
        lhs,
        rhs,
        pass: (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glattice::PathView;

    fn model(n: usize) -> LatticeModel {
        LatticeModel::new(n, 1.0, 0.25, 1.0).unwrap()
    }

    /// Direct recursion over explicit paths, without layers.
    fn naive(m: &LatticeModel, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        fn go(m: &LatticeModel, path: &mut Vec<f64>, f: &dyn Fn(&[f64]) -> f64) -> f64 {
            if path.len() == m.steps() {
                return f(path);
            }
            let [a, b, c, d] = m.increments();
            let mut avg = |x: f64, y: f64| {
                path.push(x);
                let u = go(m, path, f);
                path.pop();
                path.push(y);
                let v = go(m, path, f);
                path.pop();
                0.5 * (u + v)
            };
            let hi = avg(d, a);
            let lo = avg(c, b);
            hi.max(lo)
        }
        go(m, &mut Vec::new(), f)
    }

    #[test]
    fn moments_at_root() {
        let m = model(6);
        let b = PathFunctional::terminal(&m, &TestFunction::identity()).unwrap();
        assert!(expectation(&m, &b).unwrap().abs() < 1e-14);
        let b2 = PathFunctional::terminal(&m, &TestFunction::square()).unwrap();
        assert!((expectation(&m, &b2).unwrap() - 1.0).abs() < 1e-13);
        assert!((lower_expectation(&m, &b2).unwrap() - 0.25).abs() < 1e-13);
        let c = PathFunctional::from_fn(&m, |_| 2.5).unwrap();
        let all = conditional_process(&m, &c).unwrap();
        assert!(all.layers().iter().flatten().all(|&v| v == 2.5));
    }

    #[test]
    fn matches_naive_recursion() {
        let m = model(5);
        let f = |p: &[f64]| {
            let b: f64 = p.iter().sum();
            (b - 0.3).max(0.0) + p[0] * p[2].abs() - (p.iter().map(|x| x * x).sum::<f64>()).sqrt()
        };
        let x = PathFunctional::from_fn(&m, |v: &PathView| f(v.increments)).unwrap();
        let lat = expectation(&m, &x).unwrap();
        assert!((lat - naive(&m, &f)).abs() < 1e-13);
    }

    #[test]
    fn exact_mode_capacity() {
        let m = model(13);
        assert!(matches!(
            PathFunctional::terminal(&m, &TestFunction::square()),
            Err(Error::Capacity(_))
        ));
        let v = markov_expectation(&m, &TestFunction::square(), &DpConfig::default()).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ito_integral_of_one_is_b() {
        let m = model(5);
        let one = AdaptedProcess::constant(&m, 1.0).unwrap();
        let i = ito_integral(&m, &one).unwrap();
        let b = PathFunctional::terminal(&m, &TestFunction::identity()).unwrap();
        assert_eq!(i, b);
    }

    #[test]
    fn short_integrand_is_a_contract_error() {
        let m = model(4);
        let short = AdaptedProcess::constant(&model(2), 1.0).unwrap();
        assert!(matches!(ito_integral(&m, &short), Err(Error::Contract(_))));
        let long = AdaptedProcess::constant(&model(5), 1.0).unwrap();
        assert!(matches!(ito_integral(&m, &long), Err(Error::Contract(_))));
    }

    #[test]
    fn qv_identity_and_moments() {
        let m = model(6);
        let qv = quadratic_variation(&m).unwrap();
        assert!(qv.identity_residual <= 1e-12);
        let mom = qv_moment(&m, 2).unwrap();
        assert!((mom.upper - 1.0).abs() <= 1e-12);
        assert!((mom.lower - 0.0625).abs() <= 1e-12);
        assert!(mom.second_moment_bounded);
    }

    #[test]
    fn omitted_drift_leaves_a_residual() {
        let m = model(5);
        let zero = AdaptedProcess::constant(&m, 0.0).unwrap();
        let one = AdaptedProcess::constant(&m, 1.0).unwrap();
        assert!(martingale_residual(&m, &zero, &one, Drift::Compensated).unwrap() <= 1e-12);
        let r = martingale_residual(&m, &zero, &one, Drift::Omitted).unwrap();
        assert!((r - m.var_hi() * m.dt()).abs() < 1e-12);
    }
}
