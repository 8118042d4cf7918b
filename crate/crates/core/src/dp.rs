//! Backward dynamic programming for sums of independent controlled steps.
//!
//! Every step picks a control `theta` (a finite distribution of increments)
//! after seeing the current partial sum, and the value is
//!
//! ```text
//! V_n(s) = phi(s),   V_k(s) = max_theta sum_i p_theta(i) V_{k+1}(s + d_theta(i))
//! ```
//!
//! evaluated at `V_0(0)`. Two evaluation modes share this recursion:
//!
//! * exact: the state is the vector of counts of each distinct increment, so
//!   the recursion is tree enumeration with identical subtrees merged;
//! * grid: a uniform state grid on `[-S, S]` with linear interpolation and
//!   clamping beyond the ends. When all increments are integer multiples of a
//!   common unit the grid is aligned to that unit and no interpolation occurs.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::func::TestFunction;

/// A control: `(increment, probability)` pairs.
pub type Control = Vec<(f64, f64)>;

/// Largest step count handled by the exact mode.
pub const EXACT_MAX_STEPS: usize = 16;
const EXACT_MAX_STATES: usize = 2_000_000;
const MAX_DISTINCT: usize = 12;
const ALIGN_MAX_RATIO: usize = 64;
const ALIGN_MAX_GROWTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DpMode {
    /// Exact when the step count and state count allow it, grid otherwise.
    #[default]
    Auto,
    Exact,
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpConfig {
    /// Grid half width `S`; a problem-specific default when absent.
    pub half_width: Option<f64>,
    /// Grid points; odd, at least 201.
    pub points: usize,
    /// Snap the grid to a common unit of the increments when one exists.
    pub align: bool,
    pub mode: DpMode,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            half_width: None,
            points: 2001,
            align: true,
            mode: DpMode::Auto,
        }
    }
}

impl DpConfig {
    pub fn grid() -> Self {
        Self {
            mode: DpMode::Grid,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 201 || self.points % 2 == 0 {
            return Err(Error::Config(format!(
                "DP grid needs an odd number of points >= 201, got {}",
                self.points
            )));
        }
        if let Some(s) = self.half_width {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!(
                    "DP half width must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// How a value was computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    Exact {
        states: usize,
    },
    Grid {
        half_width: f64,
        spacing: f64,
        points: usize,
        aligned: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpValue {
    pub value: f64,
    pub evaluation: Evaluation,
}

/// State-space requirements supplied by the caller for grid mode.
#[derive(Debug, Clone, Copy)]
pub struct Coverage {
    pub default_half_width: f64,
    pub min_half_width: f64,
}

fn check_controls(controls: &[Control]) -> Result<()> {
    if controls.is_empty() || controls.iter().any(Vec::is_empty) {
        return Err(Error::Argument(
            "DP needs at least one non-empty control".into(),
        ));
    }
    for c in controls {
        if c.iter().any(|&(d, p)| !d.is_finite() || !(p >= 0.0)) {
            return Err(Error::Argument(format!("invalid control {c:?}")));
        }
    }
    Ok(())
}

fn distinct_increments(controls: &[Control]) -> Vec<f64> {
    let mut ds: Vec<f64> = Vec::new();
    for &(d, _) in controls.iter().flatten() {
        if !ds.contains(&d) {
            ds.push(d);
        }
    }
    ds
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of count vectors over all layers: `C(steps + D, D)`.
fn exact_state_count(steps: usize, distinct: usize) -> usize {
    binomial(steps + distinct, distinct)
}

/// Evaluates `V_0(0)` for `steps` controlled steps and terminal `phi`.
pub fn evaluate(
    controls: &[Control],
    steps: usize,
    phi: &TestFunction,
    cfg: &DpConfig,
    coverage: Coverage,
) -> Result<DpValue> {
    cfg.validate()?;
    check_controls(controls)?;
    if steps == 0 {
        return Err(Error::Argument("DP needs at least one step".into()));
    }
    let distinct = distinct_increments(controls);
    let exact_ok = steps <= EXACT_MAX_STEPS
        && distinct.len() <= MAX_DISTINCT
        && exact_state_count(steps, distinct.len()) <= EXACT_MAX_STATES;
    match cfg.mode {
        DpMode::Exact if !exact_ok => Err(Error::Capacity(format!(
            "exact DP limited to {EXACT_MAX_STEPS} steps and {MAX_DISTINCT} distinct increments \
             ({steps} steps, {} increments requested); use grid mode",
            distinct.len()
        ))),
        DpMode::Exact => Ok(exact(controls, &distinct, steps, phi)),
        DpMode::Auto if exact_ok => Ok(exact(controls, &distinct, steps, phi)),
        _ => grid(controls, &distinct, steps, phi, cfg, coverage),
    }
}

fn exact(controls: &[Control], distinct: &[f64], steps: usize, phi: &TestFunction) -> DpValue {
    const BITS: u32 = 5;
    let dn = distinct.len();
    let slot = |d: f64| {
        distinct
            .iter()
            .position(|&x| x == d)
            .expect("increment listed")
    };
    // (count-vector shift, probability) per control outcome
    let moves: Vec<Vec<(u64, f64)>> = controls
        .iter()
        .map(|c| {
            c.iter()
                .map(|&(d, p)| (1u64 << (BITS * slot(d) as u32), p))
                .collect()
        })
        .collect();

    let layer_states = |k: usize| -> Vec<u64> {
        let mut out = Vec::with_capacity(binomial(k + dn - 1, dn - 1));
        let mut counts = vec![0usize; dn];
        fn fill(j: usize, left: usize, counts: &mut [usize], out: &mut Vec<u64>) {
            if j + 1 == counts.len() {
                counts[j] = left;
                out.push(
                    counts
                        .iter()
                        .enumerate()
                        .fold(0u64, |key, (i, &c)| key | ((c as u64) << (5 * i))),
                );
                return;
            }
            for c in 0..=left {
                counts[j] = c;
                fill(j + 1, left - c, counts, out);
            }
        }
        fill(0, k, &mut counts, &mut out);
        out
    };

    let mut next: HashMap<u64, f64> = layer_states(steps)
        .into_iter()
        .map(|key| {
            let s = distinct.iter().enumerate().fold(0.0, |acc, (i, &d)| {
                acc + ((key >> (BITS * i as u32)) & 0x1f) as f64 * d
            });
            (key, phi.call(s))
        })
        .collect();
    let mut states = next.len();
    for k in (0..steps).rev() {
        let layer: HashMap<u64, f64> = layer_states(k)
            .into_iter()
            .map(|key| {
                let mut best = f64::NEG_INFINITY;
                for mv in &moves {
                    let v = mv
                        .iter()
                        .fold(0.0, |acc, &(shift, p)| acc + p * next[&(key + shift)]);
                    if v > best {
                        best = v;
                    }
                }
                (key, best)
            })
            .collect();
        states += layer.len();
        next = layer;
    }
    DpValue {
        value: next[&0],
        evaluation: Evaluation::Exact { states },
    }
}

/// Smallest common unit `min|d| / r` with `r <= 64` of which every increment
/// is an integer multiple.
fn common_unit(distinct: &[f64]) -> Option<f64> {
    let nonzero: Vec<f64> = distinct
        .iter()
        .map(|d| d.abs())
        .filter(|&d| d > 0.0)
        .collect();
    let dmin = nonzero.iter().copied().fold(f64::INFINITY, f64::min);
    if !dmin.is_finite() {
        return None;
    }
    (1..=ALIGN_MAX_RATIO)
        .map(|r| dmin / r as f64)
        .find(|&unit| {
            nonzero.iter().all(|&d| {
                let q = d / unit;
                (q - q.round()).abs() <= 1e-9 * q.max(1.0)
            })
        })
}

fn grid(
    controls: &[Control],
    distinct: &[f64],
    steps: usize,
    phi: &TestFunction,
    cfg: &DpConfig,
    coverage: Coverage,
) -> Result<DpValue> {
    let s = cfg.half_width.unwrap_or(coverage.default_half_width);
    if !(s >= coverage.min_half_width) {
        return Err(Error::Config(format!(
            "DP half width {s} does not cover the required range {}",
            coverage.min_half_width
        )));
    }
    let target = 2.0 * s / (cfg.points - 1) as f64;
    let mut layout = None;
    if cfg.align {
        let unit = if distinct.iter().all(|&d| d == 0.0) {
            Some(target)
        } else {
            common_unit(distinct)
        };
        if let Some(unit) = unit {
            let j = ((unit / target).floor() as usize).max(1);
            let h = unit / j as f64;
            let m = (s / h - 1e-9).ceil() as usize;
            if 2 * m + 1 <= ALIGN_MAX_GROWTH * cfg.points {
                layout = Some((h, m, true));
            }
        }
    }
    let (h, m, aligned) = layout.unwrap_or((target, (cfg.points - 1) / 2, false));
    let n = 2 * m + 1;

    // Each outcome shifts the state by (q + frac) cells.
    let moves: Vec<Vec<(isize, f64, f64)>> = controls
        .iter()
        .map(|c| {
            c.iter()
                .map(|&(d, p)| {
                    let pos = d / h;
                    let (q, frac) = if aligned {
                        (pos.round(), 0.0)
                    } else {
                        let q = pos.floor();
                        (q, pos - q)
                    };
                    (q as isize, frac, p)
                })
                .collect()
        })
        .collect();

    let mut v: Vec<f64> = (0..n)
        .map(|i| phi.call((i as f64 - m as f64) * h))
        .collect();
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numeric {
            step: 0,
            detail: format!("terminal value non-finite at node {i}"),
        });
    }
    let last = n as isize - 1;
    let at = |v: &[f64], i: isize| v[i.clamp(0, last) as usize];
    let mut next = vec![0.0; n];
    for step in 1..=steps {
        for (i, slot) in next.iter_mut().enumerate() {
            let i = i as isize;
            let mut best = f64::NEG_INFINITY;
            for mv in &moves {
                let mut acc = 0.0;
                for &(q, frac, p) in mv {
                    let j = i + q;
                    let val = if frac == 0.0 {
                        at(&v, j)
                    } else {
                        (1.0 - frac) * at(&v, j) + frac * at(&v, j + 1)
                    };
                    acc += p * val;
                }
                if acc > best {
                    best = acc;
                }
            }
            *slot = best;
        }
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric {
                step,
                detail: "non-finite DP value".into(),
            });
        }
        std::mem::swap(&mut v, &mut next);
    }
    Ok(DpValue {
        value: v[m],
        evaluation: Evaluation::Grid {
            half_width: m as f64 * h,
            spacing: h,
            points: n,
            aligned,
        },
    })
}

/// Plain recursive tree enumeration of `V_0(0)`, following every path
/// separately. Cost grows like `(sum of support sizes)^steps`; a reference
/// for small problems only.
pub fn enumerate_tree(controls: &[Control], steps: usize, phi: &TestFunction) -> Result<f64> {
    check_controls(controls)?;
    let width: usize = controls.iter().map(Vec::len).sum();
    if (width as f64).powi(steps as i32) > 1e8 {
        return Err(Error::Capacity(format!(
            "tree with {width}^{steps} leaves is too large"
        )));
    }
    fn go(controls: &[Control], left: usize, s: f64, phi: &TestFunction) -> f64 {
        if left == 0 {
            return phi.call(s);
        }
        controls
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&(d, p)| p * go(controls, left - 1, s + d, phi))
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
    Ok(go(controls, steps, 0.0, phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rademacher(sigmas: &[f64]) -> Vec<Control> {
        sigmas.iter().map(|&s| vec![(-s, 0.5), (s, 0.5)]).collect()
    }

    fn cover(s: f64) -> Coverage {
        Coverage {
            default_half_width: s,
            min_half_width: 0.0,
        }
    }

    #[test]
    fn exact_matches_tree() {
        let controls = rademacher(&[0.5, 1.0]);
        for phi in [
            TestFunction::call_payoff(0.3),
            TestFunction::cube(),
            TestFunction::abs(),
        ] {
            for n in 1..=6 {
                let tree = enumerate_tree(&controls, n, &phi).unwrap();
                let dp = evaluate(&controls, n, &phi, &DpConfig::default(), cover(8.0)).unwrap();
                assert!(matches!(dp.evaluation, Evaluation::Exact { .. }));
                assert!((tree - dp.value).abs() < 1e-12, "{} n={n}", phi.name());
            }
        }
    }

    #[test]
    fn aligned_grid_matches_tree() {
        let controls = rademacher(&[0.5, 1.0]);
        let phi = TestFunction::call_payoff(0.3);
        let tree = enumerate_tree(&controls, 7, &phi).unwrap();
        let dp = evaluate(&controls, 7, &phi, &DpConfig::grid(), cover(8.0)).unwrap();
        match dp.evaluation {
            Evaluation::Grid { aligned, .. } => assert!(aligned),
            e => panic!("{e:?}"),
        }
        assert!((tree - dp.value).abs() < 1e-12);
    }

    #[test]
    fn unaligned_grid_is_close() {
        let controls = rademacher(&[0.5, 2f64.sqrt() / 2.0 + 0.3]);
        let phi = TestFunction::square();
        let tree = enumerate_tree(&controls, 5, &phi).unwrap();
        let dp = evaluate(&controls, 5, &phi, &DpConfig::grid(), cover(8.0)).unwrap();
        assert!(matches!(
            dp.evaluation,
            Evaluation::Grid { aligned: false, .. }
        ));
        assert!((tree - dp.value).abs() < 1e-3);
    }

    #[test]
    fn common_units() {
        assert_eq!(common_unit(&[0.5, -0.5, 1.0, -1.0]), Some(0.5));
        let u = common_unit(&[0.3, 0.45]).unwrap();
        assert!((u - 0.15).abs() < 1e-15);
        assert_eq!(common_unit(&[1.0, 2f64.sqrt()]), None);
        assert_eq!(common_unit(&[0.0]), None);
    }

    #[test]
    fn coverage_and_capacity_errors() {
        let controls = rademacher(&[1.0]);
        let phi = TestFunction::square();
        let need = Coverage {
            default_half_width: 2.0,
            min_half_width: 4.0,
        };
        assert!(matches!(
            evaluate(&controls, 20, &phi, &DpConfig::default(), need),
            Err(Error::Config(_))
        ));
        let exact = DpConfig {
            mode: DpMode::Exact,
            ..DpConfig::default()
        };
        assert!(matches!(
            evaluate(&controls, 17, &phi, &exact, cover(8.0)),
            Err(Error::Capacity(_))
        ));
        let bad = DpConfig {
            points: 200,
            ..DpConfig::default()
        };
        assert!(matches!(
            evaluate(&controls, 3, &phi, &bad, cover(8.0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn state_counts() {
        assert_eq!(exact_state_count(16, 4), binomial(20, 4));
        assert_eq!(binomial(20, 4), 4845);
    }
}
