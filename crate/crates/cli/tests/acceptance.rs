//! One line per acceptance criterion. Runs without the test harness so the
//! lines are always printed.

use sublinear_cli::acceptance::{run_all, CRITERIA};

/// Criteria that fail for reasons recorded with the project decisions: the
/// call-payoff error of the central limit oscillates with the strike offset
/// on the lattice, so it is not nonincreasing over n = 8, 32, 128, 512.
const KNOWN_RED: &[u8] = &[2];

fn main() {
    let results = run_all();
    assert_eq!(results.len(), CRITERIA.len());
    let mut unexpected = Vec::new();
    for r in &results {
        println!("{}", r.line());
        if !r.pass && !KNOWN_RED.contains(&r.id) {
            unexpected.push(r.id);
        }
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
