use sublinear::gpde::{
    gaussian_reference, gnormal_expectation, solve_g_parabolic, Boundary, GridFunction,
    SolverConfig, UncertaintyParams,
};
use sublinear::TestFunction;

fn params() -> UncertaintyParams {
    UncertaintyParams::volatility(0.25, 1.0).unwrap()
}

fn cfg401() -> SolverConfig {
    SolverConfig {
        data_radius: 1.0,
        ..SolverConfig::default().with_nx(401)
    }
}

fn scale(g: &GridFunction) -> f64 {
    g.us.iter().fold(1.0f64, |m, u| m.max(u.abs()))
}

#[test]
fn gnormal_moments() {
    let p = params();
    let cfg = SolverConfig::default();
    let m2 = gnormal_expectation(&TestFunction::square(), &p, &cfg).unwrap();
    assert!((m2 - 1.0).abs() < 1e-2, "{m2}");
    let m4 = gnormal_expectation(&TestFunction::quartic(), &p, &cfg).unwrap();
    assert!((m4 - 3.0).abs() < 0.03, "{m4}");
    let neg = gnormal_expectation(&TestFunction::square().negated(), &p, &cfg).unwrap();
    assert!((neg + 0.25).abs() < 1e-2, "{neg}");
    let m3 = gnormal_expectation(&TestFunction::cube(), &p, &cfg).unwrap();
    assert!(m3 > 1e-3, "{m3}");
}

#[test]
fn cube_exceeds_every_gaussian_reference() {
    let p = params();
    let m3 = gnormal_expectation(&TestFunction::cube(), &p, &cfg401()).unwrap();
    let best = (0..9)
        .map(|k| 0.25 + 0.75 * k as f64 / 8.0)
        .map(|s| gaussian_reference(&TestFunction::cube(), s).unwrap())
        .fold(0.0f64, f64::max);
    assert_eq!(best, 0.0);
    assert!(m3 > best);
}

#[test]
fn mean_uncertainty_requires_general_solver() {
    let p = UncertaintyParams::new(-0.5, 0.5, 0.25, 1.0).unwrap();
    assert!(gnormal_expectation(&TestFunction::square(), &p, &cfg401()).is_err());
}

#[test]
fn discrete_comparison_is_exact() {
    let p = params();
    let pairs = [
        (
            TestFunction::scalar("min(x^2,1)", |x| (x * x).min(1.0)),
            TestFunction::square(),
        ),
        (TestFunction::call_payoff(0.5), TestFunction::abs()),
        (
            TestFunction::cube().compose("tanh", f64::tanh),
            TestFunction::scalar("1", |_| 1.0),
        ),
    ];
    for (phi, psi) in &pairs {
        let a = solve_g_parabolic(phi, &p, 1.0, &cfg401()).unwrap();
        let b = solve_g_parabolic(psi, &p, 1.0, &cfg401()).unwrap();
        assert!(a.xs.iter().all(|&x| phi.call(x) <= psi.call(x)));
        for (u, v) in a.us.iter().zip(&b.us) {
            assert!(u <= v, "{} vs {}: {u} > {v}", phi.name(), psi.name());
        }
    }
}

#[test]
fn sublinearity_and_homogeneity() {
    let p = params();
    let cfg = cfg401();
    let phi = TestFunction::call_payoff(0.3);
    let psi = TestFunction::cube().compose("sin(x^3)", f64::sin);
    let sum = TestFunction::scalar("sum", {
        let (phi, psi) = (phi.clone(), psi.clone());
        move |x| phi.call(x) + psi.call(x)
    });
    let a = solve_g_parabolic(&phi, &p, 1.0, &cfg).unwrap();
    let b = solve_g_parabolic(&psi, &p, 1.0, &cfg).unwrap();
    let s = solve_g_parabolic(&sum, &p, 1.0, &cfg).unwrap();
    let tol = 1e-12 * (scale(&a) + scale(&b));
    for i in 0..s.nx() {
        assert!(s.us[i] <= a.us[i] + b.us[i] + tol);
    }
    // strict somewhere: the two payoffs prefer different volatilities
    assert!((0..s.nx()).any(|i| s.us[i] < a.us[i] + b.us[i] - 1e-6));

    for lambda in [0.0, 0.5, 2.0, 3.0] {
        let scaled = TestFunction::scalar("scaled", {
            let phi = phi.clone();
            move |x| lambda * phi.call(x)
        });
        let g = solve_g_parabolic(&scaled, &p, 1.0, &cfg).unwrap();
        for (u, v) in g.us.iter().zip(&a.us) {
            assert!((u - lambda * v).abs() <= 1e-12 * scale(&a).max(1.0) * lambda.max(1.0));
        }
    }
}

#[test]
fn cash_translation() {
    let p = params();
    let phi = TestFunction::abs();
    let base = solve_g_parabolic(&phi, &p, 1.0, &cfg401()).unwrap();
    for c in [-1.0, 3.0, 0.125] {
        let shifted = phi.compose("shift", move |y| y + c);
        let g = solve_g_parabolic(&shifted, &p, 1.0, &cfg401()).unwrap();
        for (u, v) in g.us.iter().zip(&base.us) {
            assert!((u - v - c).abs() <= 1e-12 * (scale(&base) + c.abs()));
        }
    }
}

#[test]
fn semigroup_restart() {
    let p = params();
    let phi = TestFunction::call_payoff(0.5);
    let cfg = cfg401();
    let whole = solve_g_parabolic(&phi, &p, 1.0, &cfg).unwrap();
    let fine = solve_g_parabolic(
        &phi,
        &p,
        1.0,
        &SolverConfig {
            nx: 801,
            ..cfg.clone()
        },
    )
    .unwrap();
    let grid_error = (whole.evaluate(0.0).unwrap() - fine.evaluate(0.0).unwrap()).abs();

    let fixed = SolverConfig {
        half_width: Some(whole.half_width),
        ..cfg.clone()
    };
    let half = solve_g_parabolic(&phi, &p, 0.4, &fixed).unwrap();
    let restarted = solve_g_parabolic(&half.to_test_function("u(0.4)"), &p, 0.6, &fixed).unwrap();
    let gap = (restarted.evaluate(0.0).unwrap() - whole.evaluate(0.0).unwrap()).abs();
    assert!(
        gap <= 3.0 * grid_error,
        "gap {gap}, grid error {grid_error}"
    );
}

#[test]
fn reflection_symmetry() {
    let p = params();
    let phi = TestFunction::call_payoff(0.5);
    let reflected = TestFunction::scalar("put", |x| (-x - 0.5).max(0.0));
    let a = solve_g_parabolic(&phi, &p, 1.0, &cfg401())
        .unwrap()
        .evaluate(0.0)
        .unwrap();
    let b = solve_g_parabolic(&reflected, &p, 1.0, &cfg401())
        .unwrap()
        .evaluate(0.0)
        .unwrap();
    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
}

#[test]
fn convex_and_concave_closed_forms() {
    // convex payoffs see the high volatility, concave ones the low volatility
    let p = params();
    let cfg = SolverConfig {
        data_radius: 1.0,
        ..SolverConfig::default()
    };
    let call = TestFunction::call_payoff(0.2);
    let u = gnormal_expectation(&call, &p, &cfg).unwrap();
    assert!((u - gaussian_reference(&call, 1.0).unwrap()).abs() < 2e-3);
    let concave = call.negated();
    let v = gnormal_expectation(&concave, &p, &cfg).unwrap();
    assert!((v - gaussian_reference(&concave, 0.25).unwrap()).abs() < 2e-3);
}

#[test]
fn extrapolated_boundary_tracks_growing_payoffs() {
    let p = UncertaintyParams::volatility(1.0, 1.0).unwrap();
    let cfg = SolverConfig {
        half_width: Some(3.0),
        boundary: Boundary::Extrapolate,
        ..SolverConfig::default().with_nx(201)
    };
    let g = solve_g_parabolic(&TestFunction::identity(), &p, 1.0, &cfg).unwrap();
    for (x, u) in g.xs.iter().zip(&g.us) {
        assert!((u - x).abs() < 1e-12);
    }
}
