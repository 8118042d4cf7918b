//! Discrete sublinear expectations over finite scenario families.
//!
//! A [`ScenarioSet`] is a finite outcome space carrying a finite family of
//! probability vectors. Its upper expectation
//!
//! ```text
//! E[X] = max_k  sum_i p_k(i) X(i)
//! ```
//!
//! is monotone, constant preserving, sub-additive and positively
//! homogeneous, and every sublinear expectation on a finite space with a
//! finite extreme-point family has this form. Because the family is finite
//! the supremum is an exact maximum and the maximizing measure is reported.

mod axioms;
mod io;

pub use axioms::{check_axioms, AxiomCheck, AxiomReport, AXIOM_TOL};
pub use io::ScenarioDocument;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::func::TestFunction;

const PROB_TOL: f64 = 1e-12;

/// Largest `m1*m2` (and `K1*K2`) accepted by [`product_expectation`].
pub const PRODUCT_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    outcomes: Vec<String>,
    measures: Vec<Vec<f64>>,
}

impl ScenarioSet {
    pub fn new(outcomes: Vec<String>, measures: Vec<Vec<f64>>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Construction(
                "scenario set needs at least one outcome".into(),
            ));
        }
        if measures.is_empty() {
            return Err(Error::Construction(
                "scenario set needs at least one measure".into(),
            ));
        }
        let mut seen = HashMap::with_capacity(outcomes.len());
        for (i, label) in outcomes.iter().enumerate() {
            if let Some(j) = seen.insert(label.as_str(), i) {
                return Err(Error::Construction(format!(
                    "outcome label `{label}` repeated at positions {j} and {i}"
                )));
            }
        }
        for (k, p) in measures.iter().enumerate() {
            if p.len() != outcomes.len() {
                return Err(Error::Construction(format!(
                    "measure {k} has {} weights for {} outcomes",
                    p.len(),
                    outcomes.len()
                )));
            }
            if let Some(w) = p.iter().find(|w| !w.is_finite() || **w < 0.0) {
                return Err(Error::Construction(format!(
                    "measure {k} has invalid weight {w}"
                )));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::Construction(format!(
                    "measure {k} sums to {total}, not 1"
                )));
            }
        }
        Ok(Self { outcomes, measures })
    }

    /// Outcomes labelled `0..m`.
    pub fn indexed(measures: Vec<Vec<f64>>) -> Result<Self> {
        let m = measures.first().map_or(0, Vec::len);
        Self::new((0..m).map(|i| i.to_string()).collect(), measures)
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn measures(&self) -> &[Vec<f64>] {
        &self.measures
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn measure_count(&self) -> usize {
        self.measures.len()
    }

    /// Builds a scalar random variable from values listed in outcome order.
    pub fn variable(&self, values: Vec<f64>) -> Result<RandomVariable> {
        if values.len() != self.outcomes.len() {
            return Err(Error::Domain(format!(
                "{} values for {} outcomes",
                values.len(),
                self.outcomes.len()
            )));
        }
        RandomVariable::new(
            self.outcomes.clone(),
            values.into_iter().map(|v| vec![v]).collect(),
        )
    }

    /// `E[X]`. Shorthand for [`upper_expectation`] when the argmax is not needed.
    pub fn expect(&self, x: &RandomVariable) -> Result<f64> {
        upper_expectation(self, x).map(|e| e.value)
    }

    /// The ball-drawing game: outcomes `-1, 0, 1` with weights
    /// `(p/2, 1-p, p/2)` for each `p` in `ps`.
    pub fn ball_game(ps: &[f64]) -> Result<Self> {
        Self::new(
            vec!["-1".into(), "0".into(), "1".into()],
            ps.iter()
                .map(|&p| vec![p / 2.0, 1.0 - p, p / 2.0])
                .collect(),
        )
    }
}

/// A map from outcome labels to real `d`-vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
    dim: usize,
}

impl RandomVariable {
    pub fn new(labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::Construction(format!(
                "{} labels for {} values",
                labels.len(),
                values.len()
            )));
        }
        let dim = values.first().map_or(1, Vec::len);
        if dim == 0 {
            return Err(Error::Construction("random variable of dimension 0".into()));
        }
        for (label, v) in labels.iter().zip(&values) {
            if v.len() != dim {
                return Err(Error::Construction(format!(
                    "value at `{label}` has dimension {} instead of {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Construction(format!(
                    "non-finite value at `{label}`"
                )));
            }
        }
        Ok(Self {
            labels,
            values,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Componentwise image under `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            labels: self.labels.clone(),
            values: self
                .values
                .iter()
                .map(|v| v.iter().map(|&x| f(x)).collect())
                .collect(),
            dim: self.dim,
        }
    }

    /// Scalar image `phi(X)` of a `d`-vector variable.
    pub fn apply(&self, phi: &TestFunction) -> Result<Self> {
        if phi.arity() != self.dim {
            return Err(Error::Argument(format!(
                "test function `{}` has arity {} but the variable has dimension {}",
                phi.name(),
                phi.arity(),
                self.dim
            )));
        }
        Ok(Self {
            labels: self.labels.clone(),
            values: self.values.iter().map(|v| vec![phi.eval(v)]).collect(),
            dim: 1,
        })
    }

    /// Componentwise combination of two variables on the same outcomes.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.labels != other.labels || self.dim != other.dim {
            return Err(Error::Domain(
                "random variables live on different outcomes".into(),
            ));
        }
        Ok(Self {
            labels: self.labels.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
                .collect(),
            dim: self.dim,
        })
    }

    /// Scalar values listed in the outcome order of `set`.
    pub fn scalar_on(&self, set: &ScenarioSet) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(Error::Argument(format!(
                "expected a scalar random variable, got dimension {}",
                self.dim
            )));
        }
        Ok(self.rows_on(set)?.into_iter().map(|v| v[0]).collect())
    }

    fn rows_on<'a>(&'a self, set: &ScenarioSet) -> Result<Vec<&'a [f64]>> {
        if self.labels == set.outcomes {
            return Ok(self.values.iter().map(Vec::as_slice).collect());
        }
        if self.labels.len() != set.outcomes.len() {
            return Err(Error::Domain(format!(
                "variable defined on {} outcomes, scenario set has {}",
                self.labels.len(),
                set.outcomes.len()
            )));
        }
        let index: HashMap<&str, usize> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        set.outcomes
            .iter()
            .map(|o| {
                index
                    .get(o.as_str())
                    .map(|&i| self.values[i].as_slice())
                    .ok_or_else(|| Error::Domain(format!("variable undefined at outcome `{o}`")))
            })
            .collect()
    }
}

/// Value of an upper expectation together with the maximizing measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub value: f64,
    /// Index of the maximizing measure; ties go to the lowest index.
    pub argmax: usize,
}

fn linear(p: &[f64], x: &[f64]) -> f64 {
    p.iter().zip(x).fold(0.0, |acc, (w, v)| acc + w * v)
}

fn max_over(set: &ScenarioSet, x: &[f64]) -> Expectation {
    let mut best = Expectation {
        value: f64::NEG_INFINITY,
        argmax: 0,
    };
    for (k, p) in set.measures.iter().enumerate() {
        let v = linear(p, x);
        if v > best.value {
            best = Expectation {
                value: v,
                argmax: k,
            };
        }
    }
    best
}

/// `max_k E_{P_k}[X]` with the maximizing measure.
pub fn upper_expectation(set: &ScenarioSet, x: &RandomVariable) -> Result<Expectation> {
    let values = x.scalar_on(set)?;
    Ok(max_over(set, &values))
}

/// Coherent risk measure `rho(X) = E[-X]`.
pub fn risk_measure(set: &ScenarioSet, x: &RandomVariable) -> Result<f64> {
    set.expect(&x.map(|v| -v))
}

/// `(E[|X|^p])^(1/p)` for `p >= 1`.
pub fn lp_norm(set: &ScenarioSet, x: &RandomVariable, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Argument(format!("Lp norm needs p >= 1, got {p}")));
    }
    let e = set.expect(&x.map(|v| v.abs().powf(p)))?;
    Ok(e.powf(1.0 / p))
}

/// `E[psi(X, Y)]` with `Y` independent from `X`.
///
/// The inner expectation runs over `Y` at frozen `x`, the outer over `X`:
/// `E1[phibar(X)]` where `phibar(x) = E2[psi(x, Y)]`. Swapping the roles of
/// the two arguments gives the other direction of independence, which in
/// general has a different value.
pub fn product_expectation(
    p1: &ScenarioSet,
    p2: &ScenarioSet,
    psi: &TestFunction,
    x: &RandomVariable,
    y: &RandomVariable,
) -> Result<f64> {
    if psi.arity() != x.dim() + y.dim() {
        return Err(Error::Argument(format!(
            "test function `{}` has arity {}, expected {} + {}",
            psi.name(),
            psi.arity(),
            x.dim(),
            y.dim()
        )));
    }
    let (m1, m2) = (p1.outcome_count(), p2.outcome_count());
    let (k1, k2) = (p1.measure_count(), p2.measure_count());
    if m1.saturating_mul(m2) > PRODUCT_CAP || k1.saturating_mul(k2) > PRODUCT_CAP {
        return Err(Error::Capacity(format!(
            "product space {m1}x{m2} outcomes, {k1}x{k2} measures exceeds {PRODUCT_CAP}"
        )));
    }
    let xs = x.rows_on(p1)?;
    let ys = y.rows_on(p2)?;
    let mut arg = vec![0.0; psi.arity()];
    let mut inner = vec![0.0; m2];
    let phibar: Vec<f64> = xs
        .iter()
        .map(|xv| {
            arg[..xv.len()].copy_from_slice(xv);
            for (slot, yv) in inner.iter_mut().zip(&ys) {
                arg[xv.len()..].copy_from_slice(yv);
                *slot = psi.eval(&arg);
            }
            max_over(p2, &inner).value
        })
        .collect();
    Ok(max_over(p1, &phibar).value)
}
