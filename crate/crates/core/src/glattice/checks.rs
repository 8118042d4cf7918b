use crate::error::{Error, Result};
use crate::func::TestFunction;
use crate::gpde::maximal_expectation;

use super::calculus::{conditional_expectation, expectation};
use super::{LatticeModel, PathFunctional};

#[derive(Debug, Clone, PartialEq)]
pub struct JensenRow {
    pub probe: String,
    /// `E[h(xi)]`.
    pub lhs: f64,
    /// `h(E[xi])`.
    pub rhs: f64,
    pub pass: bool,
}

/// Sampled pointwise condition `G(h'(y) a + h''(y) z^2) - h'(y) G(a) >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenCondition {
    pub min_value: f64,
    pub samples: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JensenReport {
    pub rows: Vec<JensenRow>,
    pub condition: JensenCondition,
    /// The condition holding implies every probe passes.
    pub consistent: bool,
}

impl JensenReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub const JENSEN_TOL: f64 = 1e-9;

/// Tests `E[h(xi)] >= h(E[xi])` for `xi = phi(B_T)` over the probes and
/// samples the pointwise convexity condition of `h` on a `(y, z, a)` lattice.
pub fn jensen_check(
    m: &LatticeModel,
    h: &TestFunction,
    probes: &[TestFunction],
) -> Result<JensenReport> {
    if probes.is_empty() {
        return Err(Error::Argument(
            "jensen check needs at least one probe".into(),
        ));
    }
    let mut rows = Vec::with_capacity(probes.len());
    for phi in probes {
        let xi = PathFunctional::terminal(m, phi)?;
        let lhs = expectation(m, &xi.map(|v| h.call(v)))?;
        let rhs = h.call(expectation(m, &xi)?);
        rows.push(JensenRow {
            probe: phi.name().to_string(),
            lhs,
            rhs,
            pass: lhs >= rhs - JENSEN_TOL,
        });
    }
    let condition = jensen_condition(m, h);
    let consistent = !condition.holds || rows.iter().all(|r| r.pass);
    Ok(JensenReport {
        rows,
        condition,
        consistent,
    })
}

fn jensen_condition(m: &LatticeModel, h: &TestFunction) -> JensenCondition {
    let g = |a: f64| 0.5 * (m.var_hi() * a.max(0.0) - m.var_lo() * (-a).max(0.0));
    let delta = 1e-4;
    let zs = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let as_ = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
    let mut min_value = f64::INFINITY;
    let mut holds = true;
    let mut samples = 0;
    for i in 0..=24 {
        let y = -3.0 + 0.25 * i as f64;
        let (hm, h0, hp) = (h.call(y - delta), h.call(y), h.call(y + delta));
        let d1 = (hp - hm) / (2.0 * delta);
        let d2 = (hp - 2.0 * h0 + hm) / (delta * delta);
        // finite-difference noise in d2 is about eps |h| / delta^2
        let tol = 1e-6 * (1.0 + 2.0 * d1.abs() + d2.abs() + h0.abs());
        for &z in &zs {
            for &a in &as_ {
                let v = g(d1 * a + d2 * z * z) - d1 * g(a);
                samples += 1;
                min_value = min_value.min(v);
                if v < -tol {
                    holds = false;
                }
            }
        }
    }
    JensenCondition {
        min_value,
        samples,
        holds,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbmCharacterization {
    /// Worst residual per probe.
    pub probes: Vec<(String, f64)>,
    pub residual: f64,
}

/// The fixed Lipschitz probe set.
pub fn gbm_probes() -> Vec<TestFunction> {
    vec![
        TestFunction::identity(),
        TestFunction::abs(),
        TestFunction::call_payoff(0.25),
        TestFunction::scalar("sin", f64::sin).with_lipschitz(1.0),
        TestFunction::scalar("clamp(x,-0.5,0.5)", |x| x.clamp(-0.5, 0.5)).with_lipschitz(1.0),
    ]
}

/// `max |E[phi(B_T - B_s) | Omega_s] - E[phi(B_{T-s})]|` over depth-`N/2`
/// nodes and the probes of [`gbm_probes`], with `s = T/2`.
pub fn gbm_characterization_residual(m: &LatticeModel) -> Result<GbmCharacterization> {
    if m.steps() % 2 != 0 {
        return Err(Error::Argument(format!(
            "s = T/2 needs an even step count, got {}",
            m.steps()
        )));
    }
    m.ensure_exact()?;
    let half = m.steps() / 2;
    let tail = m.truncated(half)?;
    let mut probes = Vec::new();
    let mut residual = 0.0f64;
    for phi in gbm_probes() {
        let x = PathFunctional::from_fn(m, |p| phi.call(p.b[m.steps()] - p.b[half]))?;
        let cond = conditional_expectation(m, &x, half)?;
        let reference = expectation(&tail, &PathFunctional::terminal(&tail, &phi)?)?;
        let worst = cond
            .iter()
            .fold(0.0f64, |w, &v| w.max((v - reference).abs()));
        residual = residual.max(worst);
        probes.push((phi.name().to_string(), worst));
    }
    Ok(GbmCharacterization { probes, residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QvMaximal {
    /// `E[phi(<B>_T)]` on the lattice.
    pub lattice: f64,
    /// `sup_{v in [var_lo, var_hi]} phi(v T)`.
    pub sup_interval: f64,
}

/// Compares the lattice value of `phi(<B>_T)` with the maximal distribution.
/// The lattice only reaches `<B>_T` on `N + 1` points of `[var_lo T, var_hi T]`,
/// so equality holds when `phi` peaks at one of them (monotone or convex `phi`).
pub fn qv_maximal_check(m: &LatticeModel, phi: &TestFunction) -> Result<QvMaximal> {
    let qv = super::AdaptedProcess::quadratic_variation(m)?;
    let x = PathFunctional::from_adapted_at(m, &qv, m.steps())?.map(|v| phi.call(v));
    let lattice = expectation(m, &x)?;
    let t = m.horizon();
    let scaled = {
        let phi = phi.clone();
        TestFunction::scalar("phi(vT)", move |v| phi.call(v * t))
    };
    let sup_interval = maximal_expectation(&scaled, m.var_lo(), m.var_hi())?;
    Ok(QvMaximal {
        lattice,
        sup_interval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn characterization_holds() {
        let m = LatticeModel::new(8, 1.0, 0.25, 1.0).unwrap();
        let r = gbm_characterization_residual(&m).unwrap();
        assert!(r.residual <= 1e-10, "{r:?}");
        assert!(
            gbm_characterization_residual(&LatticeModel::new(5, 1.0, 0.25, 1.0).unwrap()).is_err()
        );
    }

    #[test]
    fn jensen_linear_and_square() {
        let m = LatticeModel::new(6, 1.0, 0.25, 1.0).unwrap();
        let lin = jensen_check(&m, &TestFunction::identity(), &[TestFunction::identity()]).unwrap();
        assert!((lin.rows[0].lhs - lin.rows[0].rhs).abs() <= 1e-12);
        let sq = jensen_check(&m, &TestFunction::square(), &[TestFunction::identity()]).unwrap();
        assert!((sq.rows[0].lhs - 1.0).abs() < 1e-12);
        assert!(sq.condition.holds && sq.consistent);
    }

    #[test]
    fn qv_maximal_for_monotone_phi() {
        let m = LatticeModel::new(6, 2.0, 0.25, 1.0).unwrap();
        let r = qv_maximal_check(&m, &TestFunction::exp().negated()).unwrap();
        assert!((r.lattice - r.sup_interval).abs() < 1e-9, "{r:?}");
    }
}
