//! One function per command. Each returns the report entries; the lattice
//! and scenario helpers are shared with the acceptance suite.

use sublinear::glattice::{
    expectation, gbm_characterization_residual, isometry_check, ito_integral, markov_expectation,
    martingale_residual, quadratic_variation, qv_moment, AdaptedProcess, Drift, LatticeModel,
    PathFunctional,
};
use sublinear::gpde::{
    gaussian_reference, maximal_expectation, solve_g_parabolic, SolverConfig, UncertaintyParams,
};
use sublinear::gsde::{
    feynman_kac_check, flow_sensitivity, gronwall_constant, picard_bsde, sde_refinement, solve_sde,
    BsdeSpec, PicardConfig, SdeSpec, Terminal,
};
use sublinear::limits::{convergence_report, LimitKind, StepFamily};
use sublinear::scenario::{
    check_axioms, risk_measure, RandomVariable, ScenarioDocument, ScenarioSet, AXIOM_TOL,
};
use sublinear::TestFunction;

use crate::args::Command;
use crate::config::Resolved;
use crate::report::{Entry, Report};
use crate::CliError;

/// Exact lattice identities are checked to this absolute tolerance.
pub const EXACT_TOL: f64 = 1e-12;

pub fn dispatch(r: &Resolved) -> Result<Report, CliError> {
    let mut report = Report::new(r.command.name(), r.to_json());
    match r.command {
        Command::Gheat => gheat(r, &mut report)?,
        Command::Maximal => maximal(r, &mut report)?,
        Command::Lln => lln(r, &mut report)?,
        Command::Clt => clt(r, &mut report)?,
        Command::Lattice => lattice(r, &mut report)?,
        Command::Qv => {
            let m = model(r)?;
            let ns = r.ns.iter().map(|&n| n as u32).collect::<Vec<_>>();
            report.entries.extend(qv_entries(&m, &ns)?);
        }
        Command::Ito => report.entries.extend(ito_entries(&model(r)?)?),
        Command::Martingale => report.entries.extend(martingale_entries(&model(r)?)?),
        Command::Sde => sde(r, &mut report)?,
        Command::Bsde => bsde(r, &mut report)?,
        Command::FeynmanKac => feynman_kac(r, &mut report)?,
        Command::Risk => risk(r, &mut report)?,
        Command::Axioms => axioms(r, &mut report)?,
        Command::Accept => {
            let results = crate::acceptance::run_all();
            report.csv = Some(crate::acceptance::summary_csv(&results));
            for c in results {
                report.push(c.summary_entry());
            }
        }
    }
    Ok(report)
}

fn model(r: &Resolved) -> Result<LatticeModel, CliError> {
    Ok(LatticeModel::new(
        r.steps,
        r.horizon,
        r.params.var_lo,
        r.params.var_hi,
    )?)
}

fn rel_tol(scale: f64) -> f64 {
    1e-2 * scale.abs().max(1.0)
}

/// `max E[phi(mu T + sqrt(v T) N)]` over the mean endpoints and nine
/// variances spread over the interval.
pub fn gaussian_lower_bound(
    phi: &TestFunction,
    p: &UncertaintyParams,
    t: f64,
) -> sublinear::Result<f64> {
    let mut best = f64::NEG_INFINITY;
    let means = if p.mu_lo == p.mu_hi {
        vec![p.mu_lo]
    } else {
        vec![p.mu_lo, p.mu_hi]
    };
    for mu in means {
        let shifted = {
            let phi = phi.clone();
            let shift = mu * t;
            TestFunction::scalar("shifted", move |x| phi.call(x + shift))
        };
        for k in 0..9 {
            let v = p.var_lo + (p.var_hi - p.var_lo) * k as f64 / 8.0;
            best = best.max(gaussian_reference(&shifted, v * t)?);
        }
    }
    Ok(best)
}

fn gheat(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let phi = r.phi()?;
    let grid = solve_g_parabolic(&phi, &r.params, r.horizon, &r.solver)?;
    let value = grid.evaluate(0.0)?;
    let bound = gaussian_lower_bound(&phi, &r.params, r.horizon)?;
    report.push(
        Entry::value("u(T,0)", value)
            .within((bound - value).max(0.0), rel_tol(bound))
            .note("at least the best Gaussian reference"),
    );
    report.push(Entry::value("gaussian_reference_max", bound));
    report.csv = Some(grid.to_csv());
    Ok(())
}

fn maximal(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let phi = r.phi()?;
    let (lo, hi) = (r.params.mu_lo, r.params.mu_hi);
    let value = maximal_expectation(&phi, lo, hi)?;
    let scan = (0..=100)
        .map(|i| phi.call(lo + (hi - lo) * i as f64 / 100.0))
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(Entry::value("max_phi", value).check("value >= 101-point scan", value >= scan));
    Ok(())
}

fn lln(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let phi = r.phi()?;
    let fam = StepFamily::lln_default(r.params.mu_lo, r.params.mu_hi)?;
    let reference = maximal_expectation(&phi, r.params.mu_lo, r.params.mu_hi)?;
    let conv = convergence_report(&fam, &phi, &r.ns, reference, LimitKind::Lln, &r.dp)?;
    report.push(Entry::value("reference", reference));
    for row in &conv.rows {
        report.push(Entry::value(format!("lln_value(n={})", row.n), row.value));
    }
    let last = conv.rows.last().expect("n list is non-empty");
    report.push(Entry::value("final_error", last.abs_error).within(last.abs_error, 1e-2));
    report.push(
        Entry::value("nonincreasing", f64::from(u8::from(conv.monotone)))
            .check("errors nonincreasing (10% slack)", conv.monotone),
    );
    report.csv = Some(conv.to_csv());
    Ok(())
}

/// Reference for the central limit: the G-heat equation at `t = 1`.
pub fn clt_reference(
    phi: &TestFunction,
    env: &UncertaintyParams,
    cfg: &SolverConfig,
) -> sublinear::Result<f64> {
    let cfg = SolverConfig {
        data_radius: cfg.data_radius.max(1.0),
        ..cfg.clone()
    };
    solve_g_parabolic(phi, env, 1.0, &cfg)?.evaluate(0.0)
}

fn clt(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    if !r.params.is_mean_free() {
        return Err(CliError::Usage(
            "clt needs a zero mean interval; use --var only".into(),
        ));
    }
    let phi = r.phi()?;
    let fam = StepFamily::clt_default(r.params.var_lo, r.params.var_hi)?;
    let reference = clt_reference(&phi, fam.envelope(), &r.solver)?;
    let conv = convergence_report(&fam, &phi, &r.ns, reference, LimitKind::Clt, &r.dp)?;
    report.push(Entry::value("reference", reference));
    for row in &conv.rows {
        report.push(Entry::value(format!("clt_value(n={})", row.n), row.value));
    }
    let last = conv.rows.last().expect("n list is non-empty");
    report.push(Entry::value("final_error", last.abs_error).within(last.abs_error, 1e-2));
    report.push(
        Entry::value("nonincreasing", f64::from(u8::from(conv.monotone)))
            .check("errors nonincreasing (10% slack)", conv.monotone),
    );
    report.csv = Some(conv.to_csv());
    Ok(())
}

fn lattice(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let m = model(r)?;
    let phi = r.phi()?;
    let markov = markov_expectation(&m, &phi, &r.dp)?.value;
    if m.ensure_exact().is_err() {
        report.push(Entry::value("markov", markov).note("exact tree skipped above 12 steps"));
        return Ok(());
    }
    let x = PathFunctional::terminal(&m, &phi)?;
    let exact = expectation(&m, &x)?;
    let lower = -expectation(&m, &x.map(|v| -v))?;
    report.push(Entry::value("exact", exact));
    report.push(Entry::value("lower", lower).check("lower <= upper", lower <= exact));
    report.push(Entry::value("markov", markov).within((markov - exact).abs(), 1e-9));
    if m.steps() % 2 == 0 {
        let c = gbm_characterization_residual(&m)?;
        report
            .push(Entry::value("characterization_residual", c.residual).within(c.residual, 1e-10));
    }
    Ok(())
}

/// Integrands used by the stochastic-integral and martingale checks.
pub fn sample_integrands(
    m: &LatticeModel,
) -> sublinear::Result<Vec<(&'static str, AdaptedProcess)>> {
    let b = AdaptedProcess::brownian(m)?;
    let flipping = AdaptedProcess::from_fn(m, |p| {
        let s = if p.b_now() >= 0.0 { 1.0 } else { -1.5 };
        match p.digits.last() {
            Some(&d) if d % 2 == 0 => -s,
            _ => s,
        }
    })?;
    Ok(vec![
        ("-2", AdaptedProcess::constant(m, -2.0)?),
        ("B^2-0.3", b.map(|x| x * x - 0.3)),
        ("sign-flipping", flipping),
    ])
}

pub fn ito_entries(m: &LatticeModel) -> sublinear::Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (name, eta) in sample_integrands(m)? {
        let i = ito_integral(m, &eta)?;
        let up = expectation(m, &i)?;
        let down = expectation(m, &i.map(|v| -v))?;
        out.push(Entry::value(format!("E[int eta dB] eta={name}"), up).within(up.abs(), EXACT_TOL));
        out.push(
            Entry::value(format!("E[-int eta dB] eta={name}"), down).within(down.abs(), EXACT_TOL),
        );
        let iso = isometry_check(m, &eta)?;
        let gap = (iso.lhs - iso.rhs).abs();
        out.push(
            Entry::values(
                format!("isometry eta={name}"),
                vec![("lhs".into(), iso.lhs), ("rhs".into(), iso.rhs)],
            )
            .within(gap, 1e-10 * iso.lhs.abs().max(1.0)),
        );
    }
    Ok(out)
}

pub fn qv_entries(m: &LatticeModel, ns: &[u32]) -> sublinear::Result<Vec<Entry>> {
    let mut out = Vec::new();
    let t = m.horizon();
    for &n in ns {
        let q = qv_moment(m, n)?;
        let (up, lo) = (
            (m.var_hi() * t).powi(n as i32),
            (m.var_lo() * t).powi(n as i32),
        );
        out.push(
            Entry::value(format!("E[<B>^{n}]"), q.upper)
                .within((q.upper - up).abs(), EXACT_TOL * up.max(1.0)),
        );
        out.push(
            Entry::value(format!("-E[-<B>^{n}]"), q.lower)
                .within((q.lower - lo).abs(), EXACT_TOL * lo.max(1.0)),
        );
    }
    let q2 = qv_moment(m, 2)?;
    let cap = 10.0 * (m.var_hi() * t).powi(2);
    out.push(
        Entry::value("E[<B>_T^2]", q2.second_moment)
            .check("at most 10 var_hi^2 T^2", q2.second_moment <= cap)
            .with_tolerance(cap),
    );
    let qv = quadratic_variation(m)?;
    out.push(
        Entry::value("sum dB^2 - <B>", qv.identity_residual)
            .within(qv.identity_residual, EXACT_TOL),
    );
    // every node: var_lo t <= <B>_t <= var_hi t
    let mut worst = 0.0f64;
    for k in 0..=m.steps() {
        let tk = m.time(k);
        for &v in qv.process.layer(k) {
            worst = worst.max(m.var_lo() * tk - v).max(v - m.var_hi() * tk);
        }
    }
    out.push(
        Entry::value("pathwise_bound_violation", worst.max(0.0)).within(worst.max(0.0), EXACT_TOL),
    );
    Ok(out)
}

pub fn martingale_entries(m: &LatticeModel) -> sublinear::Result<Vec<Entry>> {
    let b = AdaptedProcess::brownian(m)?;
    let zero = AdaptedProcess::constant(m, 0.0)?;
    let one = AdaptedProcess::constant(m, 1.0)?;
    let integrands = sample_integrands(m)?;
    let pairs = [
        ("phi=sin(B), eta=0", b.map(f64::sin), zero.clone()),
        ("phi=0, eta=1", zero.clone(), one.clone()),
        (
            "phi=sign-flipping, eta=B-0.1",
            integrands[2].1.clone(),
            b.map(|x| x - 0.1),
        ),
    ];
    let mut out = Vec::new();
    for (name, phi, eta) in &pairs {
        let r = martingale_residual(m, phi, eta, Drift::Compensated)?;
        out.push(Entry::value(format!("residual {name}"), r).within(r, EXACT_TOL));
    }
    let r = martingale_residual(m, &zero, &one, Drift::Omitted)?;
    out.push(
        Entry::value("residual without drift, eta=1", r)
            .check("residual > 1e-4", r > 1e-4)
            .with_tolerance(1e-4),
    );
    Ok(out)
}

fn sde(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let spec = SdeSpec::parse(&r.coeff)?;
    let m = model(r)?;
    let x0 = r.xs.first().copied().unwrap_or(0.0);
    if spec.geometric().is_some() && r.ns.len() >= 2 {
        let study = sde_refinement(&m, &spec, x0, &r.ns)?;
        for (row, ratio) in study.rows.iter().skip(1).zip(study.l2_ratios()) {
            report.push(
                Entry::value(format!("l2_ratio(n={})", row.n), ratio)
                    .check("ratio in [1.5, 3]", (1.5..=3.0).contains(&ratio)),
            );
        }
        report.csv = Some(study.to_csv());
    }
    if m.ensure_exact().is_ok() {
        let x = solve_sde(&m, &spec, x0)?;
        let xt = PathFunctional::from_adapted_at(&m, &x, m.steps())?;
        let upper = expectation(&m, &xt)?;
        let lower = -expectation(&m, &xt.map(|v| -v))?;
        report.push(Entry::values(
            "X_T",
            vec![("upper".into(), upper), ("lower".into(), lower)],
        ));
        let c = gronwall_constant(&m, &spec);
        let f = flow_sensitivity(&m, &spec, x0, x0 + 0.1)?;
        let bound = (c * m.horizon()).exp();
        report.push(
            Entry::value("flow_mean_square", f.mean_square)
                .check("at most exp(C T)", f.mean_square <= bound)
                .with_tolerance(bound),
        );
    }
    Ok(())
}

fn bsde_spec(r: &Resolved) -> Result<BsdeSpec, CliError> {
    let phi = r.phi()?;
    Ok(if r.rate == 0.0 {
        BsdeSpec::markov(phi)
    } else {
        BsdeSpec::discounted(Terminal::Markov(phi), r.rate)?
    })
}

fn bsde(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let m = model(r)?;
    let sde = SdeSpec::parse(&r.coeff)?;
    let spec = bsde_spec(r)?;
    let x0 = r.xs.first().copied().unwrap_or(0.0);
    let forward = solve_sde(&m, &sde, x0)?;
    let cfg = PicardConfig::default();
    let sol = picard_bsde(&m, &forward, &spec, &cfg)?;
    report.push(Entry::value("Y_0", sol.y0()));
    report.push(Entry::value("iterations", sol.iterations as f64).check(
        format!(
            "converged to {:e} within {} iterations",
            cfg.tol, cfg.max_iter
        ),
        true,
    ));
    if let Some(ratio) = sol.contraction_ratio() {
        report.push(Entry::value("contraction_ratio", ratio).check("ratio < 1", ratio < 1.0));
    }
    let zero = picard_bsde(&m, &forward, &BsdeSpec::markov(r.phi()?), &cfg)?;
    report.push(Entry::value(
        "exp(-rate T) Y_0(f=0)",
        (-r.rate * m.horizon()).exp() * zero.y0(),
    ));
    Ok(())
}

fn feynman_kac(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let m = model(r)?;
    let sde = SdeSpec::parse(&r.coeff)?;
    let spec = bsde_spec(r)?;
    let fk = feynman_kac_check(&m, &sde, &spec, &r.xs, &r.solver, &PicardConfig::default())?;
    for row in &fk.rows {
        report.push(Entry::values(
            format!("u(0,{})", row.x),
            vec![("lattice".into(), row.u_lattice), ("pde".into(), row.u_pde)],
        ));
    }
    report.push(Entry::value("residual", fk.residual).within(fk.residual, 2e-2));
    report.csv = Some(fk.to_csv());
    Ok(())
}

/// The urn with unknown composition: `xi` in {-1, 0, 1}, `P(xi = 0)` in [0.4, 0.5].
pub fn ball_game() -> sublinear::Result<(ScenarioSet, Vec<(String, RandomVariable)>)> {
    let set = ScenarioSet::ball_game(&[0.4, 0.5])?;
    let xi = set.variable(vec![-1.0, 0.0, 1.0])?;
    let probes = vec![
        ("xi^2".to_string(), xi.map(|v| v * v)),
        ("xi".to_string(), xi.clone()),
        ("|xi|".to_string(), xi.map(f64::abs)),
    ];
    Ok((set, probes))
}

fn scenario_inputs(r: &Resolved) -> Result<(ScenarioSet, Vec<(String, RandomVariable)>), CliError> {
    let Some(path) = &r.scenarios else {
        return Ok(ball_game()?);
    };
    let doc = ScenarioDocument::load(path)?;
    let vars: Vec<(String, RandomVariable)> = match &r.variable {
        Some(name) => vec![(name.clone(), doc.variable(name)?.clone())],
        None => doc.variables.clone().into_iter().collect(),
    };
    if vars.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no variables",
            path.display()
        )));
    }
    Ok((doc.set, vars))
}

/// `rho(X)` and the cash-invariance identity `rho(X + rho(X)) = 0`.
pub fn risk_entries(
    set: &ScenarioSet,
    name: &str,
    x: &RandomVariable,
) -> sublinear::Result<Vec<Entry>> {
    let rho = risk_measure(set, x)?;
    let again = risk_measure(set, &x.map(|v| v + rho))?;
    Ok(vec![
        Entry::value(format!("rho({name})"), rho),
        Entry::value(format!("rho({name} + rho({name}))"), again).within(again.abs(), EXACT_TOL),
    ])
}

fn risk(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let (set, vars) = scenario_inputs(r)?;
    // only the first variable unless one was named
    let (name, x) = &vars[0];
    report.entries.extend(risk_entries(&set, name, x)?);
    Ok(())
}

fn axioms(r: &Resolved, report: &mut Report) -> Result<(), CliError> {
    let (set, vars) = scenario_inputs(r)?;
    let probes: Vec<RandomVariable> = vars.into_iter().map(|(_, v)| v).collect();
    let ax = check_axioms(&set, &probes)?;
    for c in &ax.checks {
        report.push(
            Entry::value(c.name, c.worst_violation)
                .within(c.worst_violation, AXIOM_TOL)
                .note(format!("{} cases", c.cases)),
        );
    }
    Ok(())
}
