//! Robust limit theorems for i.i.d. sequences under sublinear expectation.
//!
//! A [`StepFamily`] lists the candidate laws of one step. The upper
//! expectation of `phi(S_n / n)` or `phi(S_n / sqrt(n))` lets every step pick
//! its law after seeing the past, which is the backward recursion of
//! [`crate::dp`]. The nesting order makes `X_{i+1}` independent from
//! `(X_1, ..., X_i)`.
//!
//! As `n` grows the scaled sums converge to the maximal distribution on the
//! mean interval (law of large numbers) and to the G-normal distribution with
//! the variance interval of the family (central limit theorem).

use std::fmt::Write as _;

use serde::Deserialize;

use crate::decimal::decimal;
use crate::dp::{self, Control, Coverage, DpConfig, DpValue};
use crate::error::{Error, Result};
use crate::func::TestFunction;
use crate::gpde::UncertaintyParams;

const PROB_TOL: f64 = 1e-12;
const ENVELOPE_TOL: f64 = 1e-12;

/// A finitely supported law: `(value, probability)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    support: Vec<(f64, f64)>,
}

impl StepDistribution {
    pub fn new(support: Vec<(f64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Construction(
                "step distribution with empty support".into(),
            ));
        }
        if support
            .iter()
            .any(|&(x, p)| !x.is_finite() || !p.is_finite() || p < 0.0)
        {
            return Err(Error::Construction(format!(
                "invalid step distribution {support:?}"
            )));
        }
        let total: f64 = support.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Construction(format!(
                "step probabilities sum to {total}"
            )));
        }
        Ok(Self { support })
    }

    pub fn dirac(x: f64) -> Result<Self> {
        Self::new(vec![(x, 1.0)])
    }

    /// `1/2 delta(-s) + 1/2 delta(s)`.
    pub fn symmetric(s: f64) -> Result<Self> {
        Self::new(vec![(-s, 0.5), (s, 0.5)])
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|&(x, p)| p * x).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.support.iter().map(|&(x, p)| p * x * x).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.support.iter().fold(0.0, |m, &(x, _)| m.max(x.abs()))
    }

    fn scaled(&self, c: f64) -> Control {
        self.support.iter().map(|&(x, p)| (x * c, p)).collect()
    }
}

/// Candidate one-step laws and the uncertainty envelope they realize.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFamily {
    atoms: Vec<StepDistribution>,
    envelope: UncertaintyParams,
}

fn extremes(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

impl StepFamily {
    /// Checks that the atom means span exactly `[mu_lo, mu_hi]` of `envelope`.
    pub fn new(atoms: Vec<StepDistribution>, envelope: UncertaintyParams) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Construction(
                "step family needs at least one atom".into(),
            ));
        }
        let (lo, hi) = extremes(atoms.iter().map(StepDistribution::mean));
        if (lo - envelope.mu_lo).abs() > ENVELOPE_TOL || (hi - envelope.mu_hi).abs() > ENVELOPE_TOL
        {
            return Err(Error::Construction(format!(
                "atom means span [{lo}, {hi}], envelope declares [{}, {}]",
                envelope.mu_lo, envelope.mu_hi
            )));
        }
        let mut unique: Vec<StepDistribution> = Vec::with_capacity(atoms.len());
        for a in atoms {
            if !unique.contains(&a) {
                unique.push(a);
            }
        }
        Ok(Self {
            atoms: unique,
            envelope,
        })
    }

    /// Envelope read off the atoms: mean range and variance range.
    pub fn from_atoms(atoms: Vec<StepDistribution>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Construction(
                "step family needs at least one atom".into(),
            ));
        }
        let (mu_lo, mu_hi) = extremes(atoms.iter().map(StepDistribution::mean));
        let (var_lo, var_hi) = extremes(
            atoms
                .iter()
                .map(|a| (a.second_moment() - a.mean().powi(2)).max(0.0)),
        );
        Self::new(atoms, UncertaintyParams::new(mu_lo, mu_hi, var_lo, var_hi)?)
    }

    /// `{1/2 delta(-s) + 1/2 delta(s) : s in {sig_lo, sig_hi}}`.
    pub fn rademacher(var_lo: f64, var_hi: f64) -> Result<Self> {
        let env = UncertaintyParams::volatility(var_lo, var_hi)?;
        Self::new(
            vec![
                StepDistribution::symmetric(env.sig_lo())?,
                StepDistribution::symmetric(env.sig_hi())?,
            ],
            env,
        )
    }

    /// `{delta(mu_lo), delta(mu_hi)}`.
    pub fn dirac(mu_lo: f64, mu_hi: f64) -> Result<Self> {
        let env = UncertaintyParams::mean(mu_lo, mu_hi)?;
        Self::new(
            vec![
                StepDistribution::dirac(mu_lo)?,
                StepDistribution::dirac(mu_hi)?,
            ],
            env,
        )
    }

    pub fn lln_default(mu_lo: f64, mu_hi: f64) -> Result<Self> {
        Self::dirac(mu_lo, mu_hi)
    }

    pub fn clt_default(var_lo: f64, var_hi: f64) -> Result<Self> {
        Self::rademacher(var_lo, var_hi)
    }

    /// A family written as a scenario document: numeric outcome labels are
    /// the step values and each measure is one atom.
    ///
    /// ```json
    /// {"outcomes": [-1, 1], "measures": [[0.5, 0.5]]}
    /// ```
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            outcomes: Vec<serde_json::Value>,
            measures: Vec<Vec<f64>>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        let values = raw
            .outcomes
            .iter()
            .map(|v| match v {
                serde_json::Value::Number(n) => n
                    .to_string()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad step value {n}"))),
                serde_json::Value::String(s) => s
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("step value `{s}` is not a number"))),
                other => Err(Error::Parse(format!(
                    "step value must be numeric, got {other}"
                ))),
            })
            .collect::<Result<Vec<f64>>>()?;
        let atoms = raw
            .measures
            .into_iter()
            .map(|p| {
                if p.len() != values.len() {
                    return Err(Error::Construction(format!(
                        "{} probabilities for {} step values",
                        p.len(),
                        values.len()
                    )));
                }
                StepDistribution::new(
                    values
                        .iter()
                        .copied()
                        .zip(p)
                        .filter(|&(_, p)| p > 0.0)
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_atoms(atoms)
    }

    pub fn atoms(&self) -> &[StepDistribution] {
        &self.atoms
    }

    pub fn envelope(&self) -> &UncertaintyParams {
        &self.envelope
    }

    /// Largest `|x|` over all atoms.
    pub fn max_abs(&self) -> f64 {
        self.atoms.iter().fold(0.0, |m, a| m.max(a.max_abs()))
    }

    /// Largest second moment over the atoms.
    pub fn sig_hi(&self) -> f64 {
        self.atoms
            .iter()
            .fold(0.0f64, |m, a| m.max(a.second_moment()))
            .sqrt()
    }

    /// Every atom has mean zero and the second moments span the variance
    /// envelope.
    pub fn check_clt(&self) -> Result<()> {
        if let Some(a) = self.atoms.iter().find(|a| a.mean().abs() > ENVELOPE_TOL) {
            return Err(Error::Argument(format!(
                "CLT atoms need mean 0, found mean {}",
                a.mean()
            )));
        }
        let (lo, hi) = extremes(self.atoms.iter().map(StepDistribution::second_moment));
        let env = &self.envelope;
        if (lo - env.var_lo).abs() > ENVELOPE_TOL || (hi - env.var_hi).abs() > ENVELOPE_TOL {
            return Err(Error::Argument(format!(
                "second moments span [{lo}, {hi}], envelope declares [{}, {}]",
                env.var_lo, env.var_hi
            )));
        }
        Ok(())
    }

    fn controls(&self, scale: f64) -> Vec<Control> {
        self.atoms.iter().map(|a| a.scaled(scale)).collect()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    Ok(())
}

/// `E[phi(S_n / n)]`.
pub fn lln_value(
    fam: &StepFamily,
    phi: &TestFunction,
    n: usize,
    cfg: &DpConfig,
) -> Result<DpValue> {
    check_n(n)?;
    let reach = fam.max_abs();
    let coverage = Coverage {
        default_half_width: if reach > 0.0 { reach } else { 1.0 },
        min_half_width: reach,
    };
    dp::evaluate(&fam.controls(1.0 / n as f64), n, phi, cfg, coverage)
}

/// `E[phi(S_n / sqrt(n))]` for a zero-mean family.
pub fn clt_value(
    fam: &StepFamily,
    phi: &TestFunction,
    n: usize,
    cfg: &DpConfig,
) -> Result<DpValue> {
    check_n(n)?;
    fam.check_clt()?;
    let sig = fam.sig_hi();
    let coverage = Coverage {
        default_half_width: if sig > 0.0 { 8.0 * sig } else { 1.0 },
        min_half_width: 4.0 * sig,
    };
    dp::evaluate(
        &fam.controls(1.0 / (n as f64).sqrt()),
        n,
        phi,
        cfg,
        coverage,
    )
}

/// `E[phi(sum_i X_i / sqrt(n) + Y_i / n)]` with `X` from a zero-mean family
/// and `Y` from any family; each step picks the pair of laws jointly.
pub fn clt_lln_value(
    fam_x: &StepFamily,
    fam_y: &StepFamily,
    phi: &TestFunction,
    n: usize,
    cfg: &DpConfig,
) -> Result<DpValue> {
    check_n(n)?;
    fam_x.check_clt()?;
    let (cx, cy) = (1.0 / (n as f64).sqrt(), 1.0 / n as f64);
    let mut controls = Vec::with_capacity(fam_x.atoms.len() * fam_y.atoms.len());
    for a in &fam_x.atoms {
        for b in &fam_y.atoms {
            let mut joint = Vec::with_capacity(a.support.len() * b.support.len());
            for &(x, p) in &a.support {
                for &(y, q) in &b.support {
                    joint.push((x * cx + y * cy, p * q));
                }
            }
            controls.push(joint);
        }
    }
    let sig = fam_x.sig_hi();
    let drift = fam_y.max_abs();
    let coverage = Coverage {
        default_half_width: if sig + drift > 0.0 {
            8.0 * sig + drift
        } else {
            1.0
        },
        min_half_width: 4.0 * sig + drift,
    };
    dp::evaluate(&controls, n, phi, cfg, coverage)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    Lln,
    Clt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub reference: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Each error is at most 1.1 times the previous one.
    pub monotone: bool,
}

/// Slack allowed between successive errors in [`ConvergenceReport::monotone`].
pub const MONOTONE_SLACK: f64 = 0.1;

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,value,abs_error\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.n, decimal(r.value), decimal(r.abs_error));
        }
        s
    }

    pub fn max_error(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.abs_error))
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].abs_error < w[0].abs_error)
    }
}

/// Values and errors against `reference` for each `n`.
pub fn convergence_report(
    fam: &StepFamily,
    phi: &TestFunction,
    ns: &[usize],
    reference: f64,
    kind: LimitKind,
    cfg: &DpConfig,
) -> Result<ConvergenceReport> {
    let rows = ns
        .iter()
        .map(|&n| {
            let value = match kind {
                LimitKind::Lln => lln_value(fam, phi, n, cfg)?,
                LimitKind::Clt => clt_value(fam, phi, n, cfg)?,
            }
            .value;
            Ok(ConvergenceRow {
                n,
                value,
                abs_error: (value - reference).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows
        .windows(2)
        .all(|w| w[1].abs_error <= (1.0 + MONOTONE_SLACK) * w[0].abs_error + 1e-12);
    Ok(ConvergenceReport {
        reference,
        rows,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_invariants() {
        let env = UncertaintyParams::mean(0.0, 1.0).unwrap();
        let atom = StepDistribution::dirac(0.5).unwrap();
        assert!(StepFamily::new(vec![atom], env).is_err());
        assert!(StepDistribution::new(vec![(1.0, 0.7)]).is_err());
        assert!(StepDistribution::new(vec![(1.0, -0.5), (0.0, 1.5)]).is_err());
        let fam = StepFamily::rademacher(0.25, 1.0).unwrap();
        assert!(fam.check_clt().is_ok());
        assert!(StepFamily::dirac(-1.0, 2.0).unwrap().check_clt().is_err());
        assert_eq!(StepFamily::rademacher(1.0, 1.0).unwrap().atoms().len(), 1);
    }

    #[test]
    fn json_family() {
        let fam = StepFamily::from_json(
            r#"{"outcomes":[-1,0,1],"measures":[[0.2,0.6,0.2],[0.25,0.5,0.25]]}"#,
        )
        .unwrap();
        assert_eq!(fam.envelope().mu_hi, 0.0);
        assert!((fam.envelope().var_hi - 0.5).abs() < 1e-15);
        assert!(fam.check_clt().is_ok());
    }

    #[test]
    fn lln_identity_gives_upper_mean() {
        let fam = StepFamily::dirac(-1.0, 2.0).unwrap();
        for n in [1, 5, 16, 17, 100] {
            let v = lln_value(&fam, &TestFunction::identity(), n, &DpConfig::default()).unwrap();
            assert!((v.value - 2.0).abs() < 1e-12, "n={n}: {}", v.value);
        }
    }

    #[test]
    fn one_step_is_the_atom_max() {
        let fam = StepFamily::rademacher(0.25, 1.0).unwrap();
        let phi = TestFunction::call_payoff(0.6);
        let v = clt_value(&fam, &phi, 1, &DpConfig::default())
            .unwrap()
            .value;
        assert!((v - 0.2).abs() < 1e-15);
    }

    #[test]
    fn clt_square_is_exact() {
        let fam = StepFamily::rademacher(0.25, 1.0).unwrap();
        for n in [1, 2, 7, 16, 17, 64, 200] {
            let v = clt_value(&fam, &TestFunction::square(), n, &DpConfig::default()).unwrap();
            assert!((v.value - 1.0).abs() < 1e-10, "n={n}: {}", v.value);
        }
    }

    #[test]
    fn report_csv() {
        let fam = StepFamily::rademacher(0.25, 1.0).unwrap();
        let r = convergence_report(
            &fam,
            &TestFunction::identity(),
            &[4, 32],
            0.0,
            LimitKind::Clt,
            &DpConfig::default(),
        )
        .unwrap();
        assert!(r.monotone);
        assert!(r.max_error() < 1e-14);
        assert!(r.to_csv().starts_with("n,value,abs_error\n4,"));
    }
}
