use std::fmt::Write as _;

use crate::decimal::decimal;
use crate::error::{Error, Result};
use crate::func::TestFunction;

/// Values of `u(t, .)` on the uniform grid `x_i = L (2i - (nx-1)) / (nx-1)`.
///
/// The node formula keeps the grid exactly symmetric with `x = 0` as a node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub t: f64,
    pub half_width: f64,
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
}

pub(crate) fn nodes(half_width: f64, nx: usize) -> Vec<f64> {
    let m = (nx - 1) as f64;
    (0..nx)
        .map(|i| half_width * (2.0 * i as f64 - m) / m)
        .collect()
}

impl GridFunction {
    pub fn new(t: f64, half_width: f64, us: Vec<f64>) -> Result<Self> {
        if us.len() < 2 || !(half_width > 0.0) {
            return Err(Error::Construction(format!(
                "grid needs >= 2 nodes and L > 0, got {} nodes, L = {half_width}",
                us.len()
            )));
        }
        Ok(Self {
            t,
            half_width,
            xs: nodes(half_width, us.len()),
            us,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.xs.len() - 1) as f64
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    /// Piecewise-linear interpolation; exact at nodes.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let l = self.half_width;
        if !(x.abs() <= l) {
            return Err(Error::Domain(format!(
                "x = {x} outside the grid [-{l}, {l}]"
            )));
        }
        Ok(self.interpolate(x))
    }

    fn interpolate(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let pos = (x + self.half_width) / self.spacing();
        let mut i = (pos.floor().max(0.0) as usize).min(n - 2);
        // rounding in `pos` can land one cell off
        if x < self.xs[i] && i > 0 {
            i -= 1;
        } else if x > self.xs[i + 1] && i + 2 < n {
            i += 1;
        }
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        if x == x0 {
            return self.us[i];
        }
        if x == x1 {
            return self.us[i + 1];
        }
        let w = (x - x0) / (x1 - x0);
        (1.0 - w) * self.us[i] + w * self.us[i + 1]
    }

    /// The interpolant as a test function, held constant beyond `[-L, L]`.
    pub fn to_test_function(&self, name: impl Into<String>) -> TestFunction {
        let g = self.clone();
        TestFunction::scalar(name, move |x| {
            g.interpolate(x.clamp(-g.half_width, g.half_width))
        })
    }

    /// `# t=<t>` then an `x,u` header and one row per node.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(48 * self.xs.len());
        let _ = writeln!(s, "# t={}", decimal(self.t));
        s.push_str("x,u\n");
        for (x, u) in self.xs.iter().zip(&self.us) {
            let _ = writeln!(s, "{},{}", decimal(*x), decimal(*u));
        }
        s
    }

    /// Largest absolute nodewise difference to another grid of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.xs.len() != other.xs.len() || self.half_width != other.half_width {
            return Err(Error::Domain("grids differ in shape".into()));
        }
        Ok(self
            .us
            .iter()
            .zip(&other.us)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> GridFunction {
        let xs = nodes(2.0, 51);
        GridFunction::new(0.5, 2.0, xs.iter().map(|x| 3.0 * x + 1.0).collect()).unwrap()
    }

    #[test]
    fn nodes_are_symmetric() {
        let xs = nodes(1.7, 801);
        assert_eq!(xs[400], 0.0);
        assert_eq!(xs[0], -1.7);
        assert_eq!(xs[800], 1.7);
        for i in 0..801 {
            assert_eq!(xs[i], -xs[800 - i]);
        }
    }

    #[test]
    fn evaluation() {
        let g = linear();
        for (x, u) in g.xs.iter().zip(&g.us) {
            assert_eq!(g.evaluate(*x).unwrap(), *u);
        }
        let mid = 0.5 * (g.xs[10] + g.xs[11]);
        let expect = 0.5 * (g.us[10] + g.us[11]);
        assert!((g.evaluate(mid).unwrap() - expect).abs() < 1e-14);
        assert!(matches!(g.evaluate(2.0001), Err(Error::Domain(_))));
        assert!(g.evaluate(f64::NAN).is_err());
    }

    #[test]
    fn csv_layout() {
        let csv = linear().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "# t=5.0000000000000000e-1");
        assert_eq!(lines.next().unwrap(), "x,u");
        assert_eq!(lines.count(), 51);
    }
}
