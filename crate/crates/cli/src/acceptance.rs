//! The nine acceptance criteria. Each criterion runs its checks, collects
//! report entries and passes when every entry with a contract passes.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sublinear::dp::DpConfig;
use sublinear::glattice::{gbm_probes, jensen_check, LatticeModel, JENSEN_TOL};
use sublinear::gpde::{
    gaussian_reference, gnormal_expectation, solve_g_parabolic, GridFunction, SolverConfig,
    UncertaintyParams,
};
use sublinear::gsde::{
    feynman_kac_check, picard_bsde, sde_refinement, solve_sde, BsdeSpec, PicardConfig, SdeSpec,
    Terminal,
};
use sublinear::limits::{clt_value, convergence_report, LimitKind, StepFamily};
use sublinear::scenario::{check_axioms, product_expectation, RandomVariable, ScenarioSet};
use sublinear::TestFunction;

use crate::commands::{clt_reference, ito_entries, martingale_entries, qv_entries, risk_entries};
use crate::report::Entry;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub entries: Vec<Entry>,
    pub elapsed_s: f64,
    pub error: Option<String>,
}

impl CriterionResult {
    /// One line: `criterion 4 PASS lattice exact identities (1.2 s)`.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!(
            "criterion {} {verdict} {} ({:.1} s)",
            self.id, self.title, self.elapsed_s
        );
        if let Some(e) = &self.error {
            s.push_str(&format!(": error: {e}"));
        }
        for e in self.entries.iter().filter(|e| e.failed()) {
            s.push_str(&format!("; failed {}", e.op));
            if let (Some(r), Some(t)) = (e.residual, e.tolerance) {
                s.push_str(&format!(" ({r:.3e} > {t:.1e})"));
            }
        }
        s
    }

    pub fn summary_entry(&self) -> Entry {
        let failed: Vec<&str> = self
            .entries
            .iter()
            .filter(|e| e.failed())
            .map(|e| e.op.as_str())
            .collect();
        let mut e = Entry::values(
            format!("criterion {}: {}", self.id, self.title),
            vec![
                ("elapsed_s".into(), self.elapsed_s),
                ("checks".into(), self.entries.len() as f64),
            ],
        )
        .check("every check of the criterion passes", self.pass);
        if let Some(err) = &self.error {
            e = e.note(format!("error: {err}"));
        } else if !failed.is_empty() {
            e = e.note(format!("failed: {}", failed.join(", ")));
        }
        e
    }
}

type Check = fn() -> sublinear::Result<Vec<Entry>>;

pub const CRITERIA: [(u8, &str, Check); 9] = [
    (1, "G-normal moments", c1_gnormal_moments),
    (2, "robust central limit", c2_clt),
    (3, "robust law of large numbers", c3_lln),
    (4, "lattice exact identities", c4_lattice),
    (5, "independence asymmetry", c5_independence),
    (6, "axiom suite", c6_axioms),
    (7, "PDE property suite", c7_pde_properties),
    (8, "SDE and BSDE", c8_sde_bsde),
    (9, "Jensen inequality", c9_jensen),
];

pub fn run_criterion(id: u8) -> CriterionResult {
    let (id, title, check) = *CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .expect("criterion ids run from 1 to 9");
    let start = Instant::now();
    let outcome = check();
    let elapsed_s = start.elapsed().as_secs_f64();
    match outcome {
        Ok(entries) => {
            let pass = !entries.iter().any(Entry::failed);
            CriterionResult {
                id,
                title,
                pass,
                entries,
                elapsed_s,
                error: None,
            }
        }
        Err(e) => CriterionResult {
            id,
            title,
            pass: false,
            entries: Vec::new(),
            elapsed_s,
            error: Some(e.to_string()),
        },
    }
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| run_criterion(c.0)).collect()
}

pub fn summary_csv(results: &[CriterionResult]) -> String {
    let mut s = String::from("criterion,title,pass,elapsed_s\n");
    for r in results {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.id,
            r.title,
            r.pass,
            sublinear::decimal::decimal(r.elapsed_s)
        ));
    }
    s
}

fn runtime(start: Instant, limit_s: f64) -> Entry {
    let t = start.elapsed().as_secs_f64();
    Entry::value("runtime_s", t).within(t, limit_s)
}

fn volatility() -> UncertaintyParams {
    UncertaintyParams::volatility(0.25, 1.0).expect("valid interval")
}

fn c1_gnormal_moments() -> sublinear::Result<Vec<Entry>> {
    let start = Instant::now();
    let p = volatility();
    let cfg = SolverConfig::default();
    let mut out = Vec::new();
    let m2 = gnormal_expectation(&TestFunction::square(), &p, &cfg)?;
    out.push(Entry::value("E[X^2]", m2).within((m2 - 1.0).abs(), 1e-2));
    let m4 = gnormal_expectation(&TestFunction::quartic(), &p, &cfg)?;
    out.push(
        Entry::value("E[X^4]", m4)
            .within((m4 - 3.0).abs() / 3.0, 1e-2)
            .note("relative to 3"),
    );
    let neg = gnormal_expectation(&TestFunction::square().negated(), &p, &cfg)?;
    out.push(Entry::value("E[-X^2]", neg).within((neg + 0.25).abs(), 1e-2));
    let m3 = gnormal_expectation(&TestFunction::cube(), &p, &cfg)?;
    out.push(
        Entry::value("E[X^3]", m3)
            .check("E[X^3] > 1e-3", m3 > 1e-3)
            .with_tolerance(1e-3),
    );
    let mut sup = f64::NEG_INFINITY;
    for k in 0..9 {
        sup = sup.max(gaussian_reference(
            &TestFunction::cube(),
            0.25 + 0.75 * k as f64 / 8.0,
        )?);
    }
    out.push(Entry::value("sup Gaussian E[X^3]", sup).within(sup.abs(), 1e-12));
    out.push(runtime(start, 30.0));
    Ok(out)
}

fn c2_clt() -> sublinear::Result<Vec<Entry>> {
    let start = Instant::now();
    let fam = StepFamily::clt_default(0.25, 1.0)?;
    let dp = DpConfig::default();
    let phi = TestFunction::call_payoff(1.0);
    let reference = clt_reference(&phi, fam.envelope(), &SolverConfig::default().with_nx(1601))?;
    let conv = convergence_report(
        &fam,
        &phi,
        &[8, 32, 128, 512],
        reference,
        LimitKind::Clt,
        &dp,
    )?;
    let mut out = vec![Entry::value("call reference", reference)];
    for row in &conv.rows {
        out.push(Entry::values(
            format!("call n={}", row.n),
            vec![
                ("value".into(), row.value),
                ("abs_error".into(), row.abs_error),
            ],
        ));
    }
    out.push(
        Entry::value(
            "call errors nonincreasing",
            f64::from(u8::from(conv.monotone)),
        )
        .check("each error at most 1.1 times the previous", conv.monotone),
    );
    let last = conv.rows[3].abs_error;
    out.push(Entry::value("call error n=512", last).within(last, 1e-2));
    let mut worst = 0.0f64;
    for n in 1..=512 {
        let v = clt_value(&fam, &TestFunction::square(), n, &dp)?.value;
        worst = worst.max((v - 1.0).abs());
    }
    out.push(Entry::value("max |E[x^2] - 1| over n<=512", worst).within(worst, 1e-10));
    out.push(runtime(start, 60.0));
    Ok(out)
}

fn c3_lln() -> sublinear::Result<Vec<Entry>> {
    let fam = StepFamily::lln_default(-0.5, 0.5)?;
    let phi = TestFunction::distance(-0.5, 0.5);
    let conv = convergence_report(
        &fam,
        &phi,
        &[8, 32, 128, 512],
        0.0,
        LimitKind::Lln,
        &DpConfig::default(),
    )?;
    let mut out: Vec<Entry> = conv
        .rows
        .iter()
        .map(|r| Entry::value(format!("dist n={}", r.n), r.value))
        .collect();
    let decreasing = conv.rows.windows(2).all(|w| w[1].value <= w[0].value);
    out.push(
        Entry::value("nonincreasing", f64::from(u8::from(decreasing)))
            .check("values nonincreasing in n", decreasing),
    );
    let last = conv.rows[3].value;
    out.push(Entry::value("dist n=512", last).within(last, 1e-2));
    Ok(out)
}

fn c4_lattice() -> sublinear::Result<Vec<Entry>> {
    let start = Instant::now();
    let m = LatticeModel::new(10, 1.0, 0.25, 1.0)?;
    let mut out = ito_entries(&m)?;
    out.extend(qv_entries(&m, &[1, 2, 3])?);
    out.extend(martingale_entries(&m)?);
    out.push(runtime(start, 60.0));
    Ok(out)
}

fn c5_independence() -> sublinear::Result<Vec<Entry>> {
    // each variable has law 1/2 d(-1) + 1/2 d(1) or d(0)
    let set = ScenarioSet::new(
        vec!["-1".into(), "0".into(), "1".into()],
        vec![vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0]],
    )?;
    let v = set.variable(vec![-1.0, 0.0, 1.0])?;
    let forward = product_expectation(
        &set,
        &set,
        &TestFunction::new("x*y^2", 2, |a| a[0] * a[1] * a[1]),
        &v,
        &v,
    )?;
    let backward = product_expectation(
        &set,
        &set,
        &TestFunction::new("y*x^2", 2, |a| a[1] * a[0] * a[0]),
        &v,
        &v,
    )?;
    Ok(vec![
        Entry::value("E[X Y^2], Y independent from X", forward).within((forward - 0.5).abs(), 0.0),
        Entry::value("E[Y X^2], X independent from Y", backward).within(backward.abs(), 0.0),
    ])
}

fn random_set(rng: &mut ChaCha8Rng) -> sublinear::Result<ScenarioSet> {
    let outcomes = rng.gen_range(2..=6);
    let measures = rng.gen_range(1..=5);
    let rows = (0..measures)
        .map(|_| {
            let w: Vec<f64> = (0..outcomes).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        })
        .collect();
    ScenarioSet::indexed(rows)
}

fn c6_axioms() -> sublinear::Result<Vec<Entry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (mut worst, mut risk_worst, mut cases) = (0.0f64, 0.0f64, 0usize);
    let mut failing = Vec::new();
    for s in 0..20 {
        let set = random_set(&mut rng)?;
        let probes: Vec<RandomVariable> = (0..10)
            .map(|_| {
                set.variable(
                    (0..set.outcome_count())
                        .map(|_| rng.gen_range(-3.0..3.0))
                        .collect(),
                )
            })
            .collect::<sublinear::Result<_>>()?;
        let report = check_axioms(&set, &probes)?;
        worst = worst.max(report.worst_violation());
        cases += report.checks.iter().map(|c| c.cases).sum::<usize>();
        if !report.pass() {
            failing.push(s);
        }
        for x in &probes {
            let e = &risk_entries(&set, "X", x)?[1];
            risk_worst = risk_worst.max(e.residual.expect("contract entry"));
        }
    }
    let axioms = Entry::value("worst axiom violation", worst)
        .within(worst, 1e-12)
        .note(format!("{cases} cases, failing sets {failing:?}"));
    let (set, probes) = crate::commands::ball_game()?;
    let ball = risk_entries(&set, &probes[0].0, &probes[0].1)?;
    let ball_gap = ball[1].residual.expect("contract entry");
    Ok(vec![
        axioms,
        Entry::value("worst |rho(X + rho(X))|, random sets", risk_worst).within(risk_worst, 1e-12),
        Entry::value("|rho(xi^2 + rho(xi^2))|, urn", ball_gap).within(ball_gap, 1e-12),
    ])
}

fn scale(g: &GridFunction) -> f64 {
    g.us.iter().fold(1.0f64, |m, u| m.max(u.abs()))
}

fn c7_pde_properties() -> sublinear::Result<Vec<Entry>> {
    let p = volatility();
    let cfg = SolverConfig {
        data_radius: 1.0,
        ..SolverConfig::default().with_nx(401)
    };
    let solve = |phi: &TestFunction| solve_g_parabolic(phi, &p, 1.0, &cfg);
    let mut out = Vec::new();

    // comparison: phi <= psi pointwise implies u <= v on every node
    let pairs = [
        (
            TestFunction::scalar("min(x^2,1)", |x| (x * x).min(1.0)),
            TestFunction::square(),
        ),
        (TestFunction::call_payoff(0.5), TestFunction::abs()),
        (
            TestFunction::cube().compose("tanh", f64::tanh),
            TestFunction::constant(1.0),
        ),
    ];
    let mut worst = 0.0f64;
    for (phi, psi) in &pairs {
        let (a, b) = (solve(phi)?, solve(psi)?);
        for (u, v) in a.us.iter().zip(&b.us) {
            worst = worst.max(u - v);
        }
    }
    out.push(Entry::value("comparison violation", worst.max(0.0)).within(worst.max(0.0), 0.0));

    // sublinearity
    let phi = TestFunction::call_payoff(0.3);
    let psi = TestFunction::cube().compose("sin(x^3)", f64::sin);
    let sum = TestFunction::scalar("sum", {
        let (phi, psi) = (phi.clone(), psi.clone());
        move |x| phi.call(x) + psi.call(x)
    });
    let (a, b, s) = (solve(&phi)?, solve(&psi)?, solve(&sum)?);
    let tol = 1e-12 * (scale(&a) + scale(&b));
    let excess = (0..s.nx())
        .map(|i| s.us[i] - a.us[i] - b.us[i])
        .fold(0.0f64, f64::max);
    out.push(Entry::value("sub-additivity excess", excess).within(excess, tol));

    // positive homogeneity
    let mut worst = 0.0f64;
    let mut tol = 0.0f64;
    for lambda in [0.0, 0.5, 2.0, 3.0] {
        let scaled = TestFunction::scalar("scaled", {
            let phi = phi.clone();
            move |x| lambda * phi.call(x)
        });
        let g = solve(&scaled)?;
        for (u, v) in g.us.iter().zip(&a.us) {
            worst = worst.max((u - lambda * v).abs());
        }
        tol = tol.max(1e-12 * scale(&a) * f64::max(lambda, 1.0));
    }
    out.push(Entry::value("homogeneity residual", worst).within(worst, tol));

    // cash translation
    let base = solve(&TestFunction::abs())?;
    let mut worst = 0.0f64;
    let mut tol = f64::INFINITY;
    for c in [-1.0, 3.0, 0.125] {
        let g = solve(&TestFunction::abs().compose("shift", move |y| y + c))?;
        for (u, v) in g.us.iter().zip(&base.us) {
            worst = worst.max((u - v - c).abs());
        }
        tol = tol.min(1e-12 * (scale(&base) + c.abs()));
    }
    out.push(Entry::value("cash translation residual", worst).within(worst, tol));

    // semigroup: solving to 0.4 and restarting for 0.6 matches one solve to 1
    let call = TestFunction::call_payoff(0.5);
    let whole = solve(&call)?;
    let fine = solve_g_parabolic(
        &call,
        &p,
        1.0,
        &SolverConfig {
            nx: 801,
            ..cfg.clone()
        },
    )?;
    let grid_error = (whole.evaluate(0.0)? - fine.evaluate(0.0)?).abs();
    let fixed = SolverConfig {
        half_width: Some(whole.half_width),
        ..cfg.clone()
    };
    let half = solve_g_parabolic(&call, &p, 0.4, &fixed)?;
    let restarted = solve_g_parabolic(&half.to_test_function("u(0.4)"), &p, 0.6, &fixed)?;
    let gap = (restarted.evaluate(0.0)? - whole.evaluate(0.0)?).abs();
    out.push(
        Entry::value("semigroup gap", gap)
            .within(gap, 3.0 * grid_error)
            .note("three times the nx=401 vs 801 gap"),
    );

    // odd symmetry: phi(x) and phi(-x) give the same value at the origin
    let put = TestFunction::scalar("put", |x| (-x - 0.5).max(0.0));
    let diff = (whole.evaluate(0.0)? - solve(&put)?.evaluate(0.0)?).abs();
    out.push(Entry::value("reflection residual", diff).within(diff, 1e-10));
    Ok(out)
}

fn c8_sde_bsde() -> sublinear::Result<Vec<Entry>> {
    let model = |n| LatticeModel::new(n, 1.0, 0.25, 1.0);
    let mut out = Vec::new();
    let spec = SdeSpec::black_scholes(0.1, 0.2, 0.5)?;
    let study = sde_refinement(&model(4)?, &spec, 1.0, &[4, 8, 12])?;
    for (row, ratio) in study.rows.iter().skip(1).zip(study.l2_ratios()) {
        out.push(
            Entry::value(format!("Euler L2 refinement ratio n={}", row.n), ratio)
                .check("ratio in [1.5, 3]", (1.5..=3.0).contains(&ratio)),
        );
    }

    let m = model(12)?;
    let x = solve_sde(&m, &SdeSpec::brownian(), 0.0)?;
    let linear = BsdeSpec::discounted(Terminal::Markov(TestFunction::square()), 1.0)?;
    let cfg = PicardConfig {
        tol: 1e-10,
        ..PicardConfig::default()
    };
    match picard_bsde(&m, &x, &linear, &cfg) {
        Ok(sol) => {
            out.push(Entry::value("Picard Y_0, f = -y", sol.y0()));
            out.push(
                Entry::value("Picard iterations", sol.iterations as f64)
                    .check("at most 30", sol.iterations <= 30)
                    .with_tolerance(30.0),
            );
        }
        Err(e @ sublinear::Error::NonConvergence { .. }) => {
            out.push(
                Entry::value("Picard iterations", cfg.max_iter as f64)
                    .check("at most 30", false)
                    .note(e.to_string()),
            );
        }
        Err(e) => return Err(e),
    }

    let quadratic = BsdeSpec::markov(TestFunction::square());
    let xs = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut prev = f64::INFINITY;
    for (n, nx) in [(3, 101), (6, 201), (12, 401)] {
        let fk = feynman_kac_check(
            &model(n)?,
            &SdeSpec::brownian(),
            &quadratic,
            &xs,
            &SolverConfig::default().with_nx(nx),
            &PicardConfig::default(),
        )?;
        out.push(
            Entry::value(format!("Feynman-Kac residual N={n} nx={nx}"), fk.residual)
                .check("nonincreasing under joint refinement", fk.residual <= prev),
        );
        if n == 12 {
            out.push(
                Entry::value("Feynman-Kac residual at N=12, nx=401", fk.residual)
                    .within(fk.residual, 2e-2),
            );
        }
        prev = fk.residual;
    }
    Ok(out)
}

fn c9_jensen() -> sublinear::Result<Vec<Entry>> {
    let m = LatticeModel::new(10, 1.0, 0.25, 1.0)?;
    let probes = gbm_probes();
    let mut out = Vec::new();
    for h in [
        TestFunction::square(),
        TestFunction::exp(),
        TestFunction::abs(),
    ] {
        let report = jensen_check(&m, &h, &probes)?;
        let gap = report
            .rows
            .iter()
            .fold(f64::NEG_INFINITY, |w, r| w.max(r.rhs - r.lhs));
        out.push(
            Entry::value(format!("max h(E[xi]) - E[h(xi)], h={}", h.name()), gap)
                .within(gap.max(0.0), JENSEN_TOL)
                .note(format!("{} probes", report.rows.len())),
        );
    }
    Ok(out)
}
