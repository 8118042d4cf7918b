use super::{lp_norm, RandomVariable, ScenarioSet};
use crate::error::{Error, Result};

/// Relative tolerance applied to every axiom.
pub const AXIOM_TOL: f64 = 1e-12;

const LAMBDAS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
const SHIFTS: [f64; 3] = [-1.0, 0.0, 3.0];
const MEAN_CERTAIN_ALPHAS: [f64; 2] = [-2.0, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomCheck {
    pub name: &'static str,
    /// Largest violation, scaled by the sup norm of the probes involved.
    pub worst_violation: f64,
    /// Number of individual comparisons made.
    pub cases: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
    pub tolerance: f64,
}

impl AxiomReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn worst_violation(&self) -> f64 {
        self.checks
            .iter()
            .fold(0.0, |m, c| m.max(c.worst_violation))
    }

    pub fn get(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    worst: f64,
    cases: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            worst: 0.0,
            cases: 0,
        }
    }

    fn record(&mut self, violation: f64, scale: f64) {
        self.cases += 1;
        let v = violation.max(0.0) / scale.max(1.0);
        if v > self.worst || v.is_nan() {
            self.worst = v;
        }
    }

    fn finish(self) -> AxiomCheck {
        AxiomCheck {
            name: self.name,
            worst_violation: self.worst,
            cases: self.cases,
            pass: self.worst <= AXIOM_TOL,
        }
    }
}

fn sup_norm(v: &RandomVariable) -> f64 {
    v.values()
        .iter()
        .flatten()
        .fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// Checks the sublinear-expectation axioms of `set` on every probe and every
/// ordered pair of probes.
///
/// Covered: monotonicity, constant preservation, sub-additivity, positive
/// homogeneity, translation by constants, the Hoelder and Minkowski
/// inequalities with `p = q = 2`, and additivity along mean-certain probes
/// (`E[Y] = -E[-Y]` implies `E[X + aY] = E[X] + aE[Y]`).
pub fn check_axioms(set: &ScenarioSet, probes: &[RandomVariable]) -> Result<AxiomReport> {
    if probes.is_empty() {
        return Err(Error::Argument(
            "axiom check needs at least one probe".into(),
        ));
    }
    let e = |x: &RandomVariable| set.expect(x);
    let expectations = probes.iter().map(e).collect::<Result<Vec<_>>>()?;
    let norms = probes.iter().map(sup_norm).collect::<Vec<_>>();

    let mut monotone = Tally::new("monotonicity");
    let mut constants = Tally::new("constant preserving");
    let mut subadditive = Tally::new("sub-additivity");
    let mut homogeneous = Tally::new("positive homogeneity");
    let mut translation = Tally::new("constant translation");
    let mut holder = Tally::new("hoelder");
    let mut minkowski = Tally::new("minkowski");
    let mut mean_certain = Tally::new("mean-certain additivity");

    let template = &probes[0];
    for &c in &SHIFTS {
        let k = template.map(|_| c);
        constants.record((e(&k)? - c).abs(), c.abs());
    }

    for (i, x) in probes.iter().enumerate() {
        let ex = expectations[i];
        for &lambda in &LAMBDAS {
            let scaled = e(&x.map(|v| lambda * v))?;
            homogeneous.record((scaled - lambda * ex).abs(), lambda * norms[i]);
        }
        for &c in &SHIFTS {
            let shifted = e(&x.map(|v| v + c))?;
            translation.record((shifted - ex - c).abs(), norms[i] + c.abs());
        }
    }

    for (i, x) in probes.iter().enumerate() {
        for (j, y) in probes.iter().enumerate() {
            let (ex, ey) = (expectations[i], expectations[j]);
            let scale = norms[i] + norms[j];

            let upper = x.zip_with(y, f64::max)?;
            monotone.record(ex - e(&upper)?, scale);
            let pointwise_le = x
                .values()
                .iter()
                .zip(y.values())
                .all(|(a, b)| a.iter().zip(b).all(|(p, q)| p <= q));
            if pointwise_le {
                monotone.record(ex - ey, scale);
            }

            subadditive.record(e(&x.zip_with(y, |a, b| a + b)?)? - ex - ey, scale);

            let lhs = e(&x.zip_with(y, |a, b| (a * b).abs())?)?;
            let rhs = lp_norm(set, x, 2.0)? * lp_norm(set, y, 2.0)?;
            holder.record(lhs - rhs, norms[i] * norms[j]);

            let sum = lp_norm(set, &x.zip_with(y, |a, b| a + b)?, 2.0)?;
            minkowski.record(sum - lp_norm(set, x, 2.0)? - lp_norm(set, y, 2.0)?, scale);

            let neg_ey = e(&y.map(|v| -v))?;
            if (ey + neg_ey).abs() <= AXIOM_TOL * norms[j].max(1.0) {
                for &alpha in &MEAN_CERTAIN_ALPHAS {
                    let combined = e(&x.zip_with(y, |a, b| a + alpha * b)?)?;
                    mean_certain.record(
                        (combined - ex - alpha * ey).abs(),
                        norms[i] + alpha.abs() * norms[j],
                    );
                }
            }
        }
    }

    Ok(AxiomReport {
        checks: vec![
            monotone.finish(),
            constants.finish(),
            subadditive.finish(),
            homogeneous.finish(),
            translation.finish(),
            holder.finish(),
            minkowski.finish(),
            mean_certain.finish(),
        ],
        tolerance: AXIOM_TOL,
    })
}
