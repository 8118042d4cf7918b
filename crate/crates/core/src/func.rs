//! Test functions: the real-valued maps whose sublinear expectations are
//! evaluated throughout the toolkit.
//!
//! A [`TestFunction`] is an evaluable map on `R^d` with an optional declared
//! Lipschitz bound and polynomial-growth exponent. The declared bounds are
//! carried for diagnostics only; nothing checks them.
//!
//! A small registry of named built-ins is provided so that command lines and
//! config files can select a function by name (see [`TestFunction::parse`]).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Eval = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct TestFunction {
    name: String,
    arity: usize,
    eval: Arc<Eval>,
    lipschitz: Option<f64>,
    growth: Option<f64>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("lipschitz", &self.lipschitz)
            .field("growth", &self.growth)
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            arity,
            eval: Arc::new(f),
            lipschitz: None,
            growth: None,
        }
    }

    /// A function of one real variable.
    pub fn scalar(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, 1, move |x: &[f64]| f(x[0]))
    }

    pub fn with_lipschitz(mut self, bound: f64) -> Self {
        self.lipschitz = Some(bound);
        self
    }

    pub fn with_growth(mut self, exponent: f64) -> Self {
        self.growth = Some(exponent);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn growth(&self) -> Option<f64> {
        self.growth
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.arity, "arity mismatch for {}", self.name);
        (self.eval)(x)
    }

    /// Evaluates a function of one variable.
    pub fn call(&self, x: f64) -> f64 {
        debug_assert_eq!(self.arity, 1, "{} is not scalar", self.name);
        (self.eval)(std::slice::from_ref(&x))
    }

    /// `x -> g(self(x))` for a scalar function.
    pub fn compose(
        &self,
        name: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let inner = self.eval.clone();
        Self::new(name, self.arity, move |x: &[f64]| g(inner(x)))
    }

    pub fn identity() -> Self {
        Self::scalar("identity", |x| x)
            .with_lipschitz(1.0)
            .with_growth(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::scalar(format!("const:{c}"), move |_| c)
            .with_lipschitz(0.0)
            .with_growth(0.0)
    }

    pub fn square() -> Self {
        Self::scalar("square", |x| x * x).with_growth(2.0)
    }

    pub fn quartic() -> Self {
        Self::scalar("quartic", |x| {
            let x2 = x * x;
            x2 * x2
        })
        .with_growth(4.0)
    }

    pub fn cube() -> Self {
        Self::scalar("cube", |x| x * x * x).with_growth(3.0)
    }

    pub fn abs() -> Self {
        Self::scalar("abs", f64::abs)
            .with_lipschitz(1.0)
            .with_growth(1.0)
    }

    pub fn exp() -> Self {
        Self::scalar("exp", f64::exp)
    }

    /// Call payoff `(x - strike)^+`.
    pub fn call_payoff(strike: f64) -> Self {
        Self::scalar(format!("call:{strike}"), move |x| (x - strike).max(0.0))
            .with_lipschitz(1.0)
            .with_growth(1.0)
    }

    /// Distance from `x` to the interval `[lo, hi]`.
    pub fn distance(lo: f64, hi: f64) -> Self {
        Self::scalar(format!("dist:[{lo},{hi}]"), move |x| {
            (lo - x).max(x - hi).max(0.0)
        })
        .with_lipschitz(1.0)
        .with_growth(1.0)
    }

    /// `x -> -self(x)`.
    pub fn negated(&self) -> Self {
        let mut out = self.compose(format!("neg:{}", self.name), |y| -y);
        out.lipschitz = self.lipschitz;
        out.growth = self.growth;
        out
    }

    /// Parses a built-in by name.
    ///
    /// Accepted forms: `identity`, `square`, `quartic`, `cube`, `abs`, `exp`,
    /// `call:K`, `dist:[a,b]` (brackets optional), `const:c` and `neg:NAME`
    /// for the negation of any other built-in.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(rest) = spec.strip_prefix("neg:") {
            return Ok(Self::parse(rest)?.negated());
        }
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (spec, None),
        };
        let number = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{s}` in test function `{spec}`")))
        };
        match (head, arg) {
            ("identity" | "x", None) => Ok(Self::identity()),
            ("square", None) => Ok(Self::square()),
            ("quartic", None) => Ok(Self::quartic()),
            ("cube", None) => Ok(Self::cube()),
            ("abs", None) => Ok(Self::abs()),
            ("exp", None) => Ok(Self::exp()),
            ("call", Some(k)) => Ok(Self::call_payoff(number(k)?)),
            ("const", Some(c)) => Ok(Self::constant(number(c)?)),
            ("dist", Some(range)) => {
                let inner = range.trim().trim_start_matches('[').trim_end_matches(']');
                let (a, b) = inner
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("`{spec}`: expected dist:[a,b]")))?;
                let (a, b) = (number(a)?, number(b)?);
                if a > b {
                    return Err(Error::Parse(format!("`{spec}`: empty interval")));
                }
                Ok(Self::distance(a, b))
            }
            _ => Err(Error::Parse(format!("unknown test function `{spec}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_evaluate() {
        assert_eq!(TestFunction::parse("square").unwrap().call(-3.0), 9.0);
        assert_eq!(TestFunction::parse("quartic").unwrap().call(2.0), 16.0);
        assert_eq!(TestFunction::parse("cube").unwrap().call(-2.0), -8.0);
        assert_eq!(TestFunction::parse("call:1").unwrap().call(0.5), 0.0);
        assert_eq!(TestFunction::parse("call:1").unwrap().call(2.5), 1.5);
        assert_eq!(TestFunction::parse("abs").unwrap().call(-0.25), 0.25);
        assert_eq!(TestFunction::parse("neg:square").unwrap().call(3.0), -9.0);
        assert_eq!(TestFunction::parse("const:2.5").unwrap().call(100.0), 2.5);
    }

    #[test]
    fn distance_to_interval() {
        let d = TestFunction::parse("dist:[-1,2]").unwrap();
        assert_eq!(d.call(0.0), 0.0);
        assert_eq!(d.call(-1.0), 0.0);
        assert_eq!(d.call(3.5), 1.5);
        assert_eq!(d.call(-4.0), 3.0);
        assert_eq!(TestFunction::parse("dist:0.4,0.5").unwrap().call(0.45), 0.0);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(TestFunction::parse("sine").is_err());
        assert!(TestFunction::parse("call:abc").is_err());
        assert!(TestFunction::parse("dist:[2,1]").is_err());
        assert!(TestFunction::parse("square:3").is_err());
    }
}
