use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::func::TestFunction;

pub const HERMITE_NODES: usize = 128;

/// Positive nodes and weights of the `n`-point Gauss-Hermite rule for the
/// weight `exp(-x^2)`, largest node first. `n` must be even; the negative
/// nodes are the mirror images.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    assert!(
        n >= 2 && n % 2 == 0,
        "Gauss-Hermite rule needs an even node count"
    );
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(n / 2);
    let mut z = 0.0;
    for i in 0..n / 2 {
        // initial guesses for the roots, largest first
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * out[0].0,
            3 => 1.91 * z - 0.91 * out[1].0,
            _ => 2.0 * z - out[i - 2].0,
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        out.push((z, 2.0 / (pp * pp)));
    }
    out
}

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(HERMITE_NODES))
}

/// `E[phi(Z)]` for `Z ~ N(0, sigma2)` by 128-node Gauss-Hermite quadrature.
///
/// Nodes are summed in mirrored pairs, smallest weights first, so an odd
/// `phi` gives exactly zero.
pub fn gaussian_reference(phi: &TestFunction, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Argument(format!(
            "Gaussian variance must be positive, got {sigma2}"
        )));
    }
    let scale = (2.0 * sigma2).sqrt();
    let sum = rule().iter().fold(0.0, |acc, &(x, w)| {
        let y = scale * x;
        acc + w * (phi.call(y) + phi.call(-y))
    });
    Ok(sum / std::f64::consts::PI.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        let total: f64 = rule().iter().map(|&(_, w)| 2.0 * w).sum();
        assert!((total - std::f64::consts::PI.sqrt()).abs() < 1e-13);
        assert_eq!(rule().len(), HERMITE_NODES / 2);
        assert!(rule().windows(2).all(|p| p[0].0 > p[1].0 && p[1].0 > 0.0));
    }

    #[test]
    fn gaussian_moments() {
        let sq = gaussian_reference(&TestFunction::square(), 1.0).unwrap();
        assert!((sq - 1.0).abs() < 1e-12);
        let q = gaussian_reference(&TestFunction::quartic(), 1.0).unwrap();
        assert!((q - 3.0).abs() < 1e-12);
        let q2 = gaussian_reference(&TestFunction::quartic(), 0.25).unwrap();
        assert!((q2 - 3.0 / 16.0).abs() < 1e-13);
        for s in [0.25, 1.0, 7.0] {
            assert_eq!(gaussian_reference(&TestFunction::cube(), s).unwrap(), 0.0);
        }
        let e = gaussian_reference(&TestFunction::exp(), 0.5).unwrap();
        assert!((e - 0.25f64.exp()).abs() < 1e-13);
        assert!(gaussian_reference(&TestFunction::square(), 0.0).is_err());
    }

    #[test]
    fn small_rule_matches_known_values() {
        // two-point rule: nodes +-1/sqrt(2), weights sqrt(pi)/2
        let r = gauss_hermite(2);
        assert!((r[0].0 - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((r[0].1 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
    }
}
