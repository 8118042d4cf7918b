use sublinear::dp::DpConfig;
use sublinear::glattice::{
    conditional_expectation, conditional_process, expectation, isometry_check, ito_integral,
    jensen_check, markov_expectation, martingale_residual, quadratic_variation, qv_maximal_check,
    qv_moment, AdaptedProcess, Drift, LatticeModel, PathFunctional,
};
use sublinear::TestFunction;

fn model(n: usize) -> LatticeModel {
    LatticeModel::new(n, 1.0, 0.25, 1.0).unwrap()
}

fn path_probe(m: &LatticeModel) -> PathFunctional {
    PathFunctional::from_fn(m, |p| {
        let max = p.b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (max - 0.2).max(0.0) - 0.3 * p.b_now() * p.qv_now() + (2.0 * p.b[1]).sin()
    })
    .unwrap()
}

/// Sign-flipping integrand: depends on the sign of B and the last digit.
fn flipping(m: &LatticeModel) -> AdaptedProcess {
    AdaptedProcess::from_fn(m, |p| {
        let s = if p.b_now() >= 0.0 { 1.0 } else { -1.5 };
        match p.digits.last() {
            Some(&d) if d % 2 == 0 => -s,
            _ => s,
        }
    })
    .unwrap()
}

#[test]
fn tower_property() {
    let m = model(7);
    let x = path_probe(&m);
    let full = conditional_process(&m, &x).unwrap();
    for k in 0..=7 {
        let inner = PathFunctional::from_layer(&m, k, full.layer(k)).unwrap();
        for j in 0..=7 {
            let lhs = conditional_expectation(&m, &inner, j).unwrap();
            let rhs = full.layer(j.min(k));
            if j <= k {
                for (a, b) in lhs.iter().zip(rhs) {
                    assert!((a - b).abs() <= 1e-12, "k={k} j={j}");
                }
            } else {
                // inner is Omega_k measurable: conditioning deeper changes nothing
                for (i, a) in lhs.iter().enumerate() {
                    assert!((a - rhs[i >> (2 * (j - k))]).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn sub_additivity_and_monotonicity() {
    let m = model(6);
    let x = path_probe(&m);
    let y = PathFunctional::terminal(&m, &TestFunction::call_payoff(0.1).negated()).unwrap();
    let sum = x.zip_with(&y, |a, b| a + b).unwrap();
    let (ex, ey, es) = (
        expectation(&m, &x).unwrap(),
        expectation(&m, &y).unwrap(),
        expectation(&m, &sum).unwrap(),
    );
    assert!(es <= ex + ey);
    let bigger = x.map(|v| v + v.abs());
    assert!(expectation(&m, &bigger).unwrap() >= ex);
}

#[test]
fn stochastic_integral_is_symmetric() {
    let m = model(8);
    let b = AdaptedProcess::brownian(&m).unwrap();
    for eta in [
        flipping(&m),
        b.map(|x| x * x - 0.3),
        AdaptedProcess::constant(&m, -2.0).unwrap(),
    ] {
        let i = ito_integral(&m, &eta).unwrap();
        assert!(expectation(&m, &i).unwrap().abs() <= 1e-12);
        assert!(expectation(&m, &i.map(|v| -v)).unwrap().abs() <= 1e-12);
        let chk = isometry_check(&m, &eta).unwrap();
        assert!(chk.pass, "{chk:?}");
    }
}

#[test]
fn ito_bound_by_energy() {
    let m = model(6);
    let eta = flipping(&m);
    let i = ito_integral(&m, &eta).unwrap();
    let lhs = expectation(&m, &i.map(|v| v * v)).unwrap();
    // E[sum eta^2 dt]
    let e2 = eta.map(|v| v * v);
    let leaves = PathFunctional::from_fn(&m, |p| {
        let mut idx = 0usize;
        let mut acc = 0.0;
        for (k, &d) in p.digits.iter().enumerate() {
            acc += e2.at(k, idx) * p.dt;
            idx = 4 * idx + d as usize;
        }
        acc
    })
    .unwrap();
    let rhs = m.var_hi() * expectation(&m, &leaves).unwrap();
    assert!(lhs <= rhs + 1e-12);
}

#[test]
fn isometry_examples() {
    let m = model(6);
    let one = AdaptedProcess::constant(&m, 1.0).unwrap();
    let c = isometry_check(&m, &one).unwrap();
    assert!((c.lhs - 1.0).abs() < 1e-12 && (c.rhs - 1.0).abs() < 1e-12);
    let flat = LatticeModel::new(5, 2.0, 0.49, 0.49).unwrap();
    let eta = flipping(&flat);
    let c = isometry_check(&flat, &eta).unwrap();
    let e2 = eta.map(|v| v * v);
    // classical: sigma^2 E[sum eta^2 dt]; all paths have equal weight
    let mut energy = 0.0;
    for k in 0..5 {
        energy += e2.layer(k).iter().sum::<f64>() / e2.layer(k).len() as f64 * flat.dt();
    }
    assert!(
        (c.rhs - 0.49 * energy).abs() < 1e-12,
        "{} vs {}",
        c.rhs,
        0.49 * energy
    );
    assert!(c.pass);
}

#[test]
fn quadratic_variation_bounds() {
    let m = model(7);
    let qv = quadratic_variation(&m).unwrap();
    assert!(qv.identity_residual <= 1e-12);
    let dt = m.dt();
    for k in 0..7 {
        let (parent, child) = (qv.process.layer(k), qv.process.layer(k + 1));
        for (i, &c) in child.iter().enumerate() {
            let d = c - parent[i / 4];
            assert!(d >= 0.25 * dt * (1.0 - 1e-12) && d <= dt * (1.0 + 1e-12));
        }
    }
    let flat = LatticeModel::new(6, 1.5, 0.36, 0.36).unwrap();
    let qv = quadratic_variation(&flat).unwrap();
    for k in 0..=6 {
        for &v in qv.process.layer(k) {
            assert!((v - 0.36 * k as f64 * flat.dt()).abs() < 1e-14);
        }
    }
}

#[test]
fn qv_moments_and_maximal_distribution() {
    let m = LatticeModel::new(8, 2.0, 0.25, 1.0).unwrap();
    for n in 1..=3 {
        let r = qv_moment(&m, n).unwrap();
        assert!((r.upper - 2f64.powi(n as i32)).abs() <= 1e-12, "{r:?}");
        assert!(
            (r.lower - (0.25f64 * 2.0).powi(n as i32)).abs() <= 1e-12,
            "{r:?}"
        );
        assert!(r.second_moment_bounded);
    }
    let flat = LatticeModel::new(4, 1.0, 0.5, 0.5).unwrap();
    let r = qv_moment(&flat, 2).unwrap();
    assert!((r.upper - r.lower).abs() < 1e-15);

    for phi in [
        TestFunction::square(),
        TestFunction::identity().negated(),
        TestFunction::call_payoff(1.2),
    ] {
        let r = qv_maximal_check(&m, &phi).unwrap();
        assert!(
            (r.lattice - r.sup_interval).abs() < 1e-9,
            "{}: {r:?}",
            phi.name()
        );
    }
    // interior peak: the lattice sees N+1 points of the interval
    let bump = TestFunction::scalar("bump", |v| -(v - 1.3f64).powi(2));
    let r = qv_maximal_check(&m, &bump).unwrap();
    assert!(r.lattice <= r.sup_interval + 1e-12);
    let grid_gap = (2.0 - 0.5) / 8.0;
    assert!(r.sup_interval - r.lattice <= grid_gap * grid_gap);
}

#[test]
fn martingale_with_drift() {
    let m = model(6);
    let b = AdaptedProcess::brownian(&m).unwrap();
    let zero = AdaptedProcess::constant(&m, 0.0).unwrap();
    let one = AdaptedProcess::constant(&m, 1.0).unwrap();
    let cases = [
        (b.map(f64::sin), zero.clone()),
        (zero.clone(), one.clone()),
        (flipping(&m), b.map(|x| x - 0.1)),
        (b.clone(), flipping(&m)),
    ];
    for (phi, eta) in &cases {
        assert!(martingale_residual(&m, phi, eta, Drift::Compensated).unwrap() <= 1e-12);
    }
    let r = martingale_residual(&m, &zero, &one, Drift::Omitted).unwrap();
    assert!(r > 1e-4);
}

#[test]
fn markov_matches_exact_mode() {
    for (n, t, lo, hi) in [
        (4, 1.0, 0.25, 1.0),
        (9, 0.5, 0.09, 0.36),
        (10, 2.0, 0.0, 1.0),
    ] {
        let m = LatticeModel::new(n, t, lo, hi).unwrap();
        for phi in [
            TestFunction::call_payoff(0.2),
            TestFunction::abs(),
            TestFunction::cube(),
        ] {
            let exact = expectation(&m, &PathFunctional::terminal(&m, &phi).unwrap()).unwrap();
            for cfg in [DpConfig::default(), DpConfig::grid()] {
                let mk = markov_expectation(&m, &phi, &cfg).unwrap().value;
                assert!(
                    (mk - exact).abs() <= 1e-9,
                    "n={n} {}: {mk} vs {exact}",
                    phi.name()
                );
            }
        }
    }
}

#[test]
fn markov_moments() {
    let m = LatticeModel::new(400, 1.5, 0.25, 1.0).unwrap();
    let cfg = DpConfig::default();
    let quartic = markov_expectation(&m, &TestFunction::quartic(), &cfg)
        .unwrap()
        .value;
    assert!(
        (quartic / (3.0 * 1.5 * 1.5) - 1.0).abs() < 1e-2,
        "{quartic}"
    );
    let neg = markov_expectation(&m, &TestFunction::square().negated(), &cfg)
        .unwrap()
        .value;
    assert!((neg + 0.25 * 1.5).abs() < 1e-2, "{neg}");
    let abs = markov_expectation(&m, &TestFunction::abs(), &cfg)
        .unwrap()
        .value;
    let target = 2.0 * 1.5f64.sqrt() / (2.0 * std::f64::consts::PI).sqrt();
    assert!((abs / target - 1.0).abs() < 1e-2, "{abs} vs {target}");
    let flat = LatticeModel::new(300, 1.0, 0.5, 0.5).unwrap();
    let odd = markov_expectation(&flat, &TestFunction::cube(), &cfg)
        .unwrap()
        .value;
    assert!(odd.abs() < 1e-9);
}

#[test]
fn jensen_exponential_is_strict() {
    let m = model(8);
    let report = jensen_check(
        &m,
        &TestFunction::exp(),
        &[TestFunction::identity(), TestFunction::abs()],
    )
    .unwrap();
    assert!(report.all_pass() && report.condition.holds && report.consistent);
    assert!(report.rows[0].lhs > report.rows[0].rhs + 1e-3);
    let concave = jensen_check(
        &m,
        &TestFunction::square().negated(),
        &[TestFunction::identity()],
    )
    .unwrap();
    assert!(!concave.condition.holds);
}
