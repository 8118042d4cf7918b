use proptest::prelude::*;
use sublinear::scenario::{
    check_axioms, product_expectation, risk_measure, upper_expectation, ScenarioSet,
};
use sublinear::TestFunction;

fn normalized(w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// A scenario set over `m` outcomes with 1 to 4 measures, plus three
/// variables on it.
fn set_and_values() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (2usize..6).prop_flat_map(|m| {
        (
            prop::collection::vec(prop::collection::vec(0.01f64..1.0, m), 1..5),
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, m), 3),
        )
    })
}

proptest! {
    #[test]
    fn axioms_hold_on_random_sets((weights, values) in set_and_values()) {
        let set = ScenarioSet::indexed(weights.into_iter().map(normalized).collect()).unwrap();
        let probes: Vec<_> = values.into_iter().map(|v| set.variable(v).unwrap()).collect();
        let report = check_axioms(&set, &probes).unwrap();
        prop_assert!(report.pass(), "{:?}", report);
        for x in &probes {
            let rho = risk_measure(&set, x).unwrap();
            let again = risk_measure(&set, &x.map(|v| v + rho)).unwrap();
            prop_assert!(again.abs() <= 1e-12);
        }
    }

    #[test]
    fn upper_dominates_every_measure((weights, values) in set_and_values()) {
        let set = ScenarioSet::indexed(weights.into_iter().map(normalized).collect()).unwrap();
        let x = set.variable(values[0].clone()).unwrap();
        let e = upper_expectation(&set, &x).unwrap();
        for p in set.measures() {
            let linear: f64 = p.iter().zip(&values[0]).map(|(w, v)| w * v).sum();
            prop_assert!(linear <= e.value + 1e-12);
        }
        let at: f64 = set.measures()[e.argmax].iter().zip(&values[0]).map(|(w, v)| w * v).sum();
        prop_assert!((at - e.value).abs() <= 1e-12);
    }

    #[test]
    fn product_with_a_single_measure_is_the_iterated_linear_mean((weights, values) in set_and_values()) {
        // with one measure per factor both orders of independence agree
        let single = ScenarioSet::indexed(vec![normalized(weights[0].clone())]).unwrap();
        let x = single.variable(values[0].clone()).unwrap();
        let y = single.variable(values[1].clone()).unwrap();
        let psi = TestFunction::new("x*y+y^2", 2, |a| a[0] * a[1] + a[1] * a[1]);
        let swapped = TestFunction::new("y*x+x^2", 2, |a| a[1] * a[0] + a[0] * a[0]);
        let a = product_expectation(&single, &single, &psi, &x, &y).unwrap();
        let b = product_expectation(&single, &single, &swapped, &y, &x).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}
