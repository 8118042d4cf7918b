//! Experiment configuration: a JSON file, command-line flags on top, and
//! per-command defaults below both.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};
use sublinear::dp::{DpConfig, DpMode};
use sublinear::gpde::{Boundary, SolverConfig, UncertaintyParams};
use sublinear::TestFunction;

use crate::args::{Command, Flags};
use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub mu: Option<[f64; 2]>,
    pub var: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub half_width: Option<f64>,
    pub data_radius: Option<f64>,
    pub nx: Option<usize>,
    pub cfl: Option<f64>,
    pub boundary: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpSection {
    pub half_width: Option<f64>,
    pub points: Option<usize>,
    pub align: Option<bool>,
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub steps: Option<usize>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
}

/// The file form of an experiment. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub dp: DpSection,
    #[serde(default)]
    pub lattice: LatticeSection,
    pub phi: Option<String>,
    pub n: Option<Vec<usize>>,
    pub coeff: Option<String>,
    pub x: Option<Vec<f64>>,
    pub rate: Option<f64>,
    pub scenarios: Option<PathBuf>,
    pub variable: Option<String>,
    pub out: Option<PathBuf>,
    /// Reserved; every computation is deterministic.
    pub seed: Option<u64>,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Fully resolved inputs of one command.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub command: Command,
    pub params: UncertaintyParams,
    pub solver: SolverConfig,
    pub dp: DpConfig,
    pub steps: usize,
    pub horizon: f64,
    pub phi_name: String,
    pub ns: Vec<usize>,
    pub coeff: String,
    pub xs: Vec<f64>,
    pub rate: f64,
    pub scenarios: Option<PathBuf>,
    pub variable: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Resolved {
    pub fn phi(&self) -> Result<TestFunction, CliError> {
        Ok(TestFunction::parse(&self.phi_name)?)
    }

    /// Echo of every input, for the report.
    pub fn to_json(&self) -> Value {
        let n = sublinear::decimal::json_number;
        let opt = |x: Option<f64>| x.map(n).unwrap_or(Value::Null);
        json!({
            "params": {
                "mu": [n(self.params.mu_lo), n(self.params.mu_hi)],
                "var": [n(self.params.var_lo), n(self.params.var_hi)],
            },
            "solver": {
                "half_width": opt(self.solver.half_width),
                "data_radius": n(self.solver.data_radius),
                "nx": self.solver.nx,
                "cfl": n(self.solver.cfl),
                "boundary": boundary_name(self.solver.boundary),
            },
            "dp": {
                "half_width": opt(self.dp.half_width),
                "points": self.dp.points,
                "align": self.dp.align,
                "mode": mode_name(self.dp.mode),
            },
            "lattice": { "steps": self.steps, "T": n(self.horizon) },
            "phi": self.phi_name,
            "n": self.ns,
            "coeff": self.coeff,
            "x": self.xs.iter().map(|&x| n(x)).collect::<Vec<_>>(),
            "rate": n(self.rate),
            "scenarios": self.scenarios.as_ref().map(|p| p.display().to_string()),
            "variable": self.variable,
            "out": self.out.as_ref().map(|p| p.display().to_string()),
            "seed": self.seed,
        })
    }
}

fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::Clamp => "clamp",
        Boundary::Extrapolate => "extrapolate",
    }
}

fn mode_name(m: DpMode) -> &'static str {
    match m {
        DpMode::Auto => "auto",
        DpMode::Exact => "exact",
        DpMode::Grid => "grid",
    }
}

fn parse_mode(text: &str) -> Result<DpMode, CliError> {
    match text {
        "auto" => Ok(DpMode::Auto),
        "exact" => Ok(DpMode::Exact),
        "grid" => Ok(DpMode::Grid),
        other => Err(CliError::Config(format!(
            "dp.mode: unknown mode '{other}' (auto, exact, grid)"
        ))),
    }
}

struct Defaults {
    mu: [f64; 2],
    phi: &'static str,
    steps: usize,
    ns: &'static [usize],
    coeff: &'static str,
    xs: &'static [f64],
    rate: f64,
}

fn defaults(command: Command) -> Defaults {
    let mut d = Defaults {
        mu: [0.0, 0.0],
        phi: "square",
        steps: 10,
        ns: &[],
        coeff: "bm",
        xs: &[0.0],
        rate: 0.0,
    };
    match command {
        Command::Maximal => d.mu = [-0.5, 0.5],
        Command::Lln => {
            d.mu = [-0.5, 0.5];
            d.phi = "";
            d.ns = &[8, 32, 128, 512];
        }
        Command::Clt => {
            d.phi = "call:1";
            d.ns = &[8, 32, 128, 512];
        }
        Command::Lattice => d.phi = "abs",
        Command::Qv => d.ns = &[1, 2, 3],
        Command::Sde => {
            d.coeff = "bs:0.1,0.2,0.5";
            d.ns = &[4, 8, 12];
            d.xs = &[1.0];
        }
        Command::Bsde => {
            d.steps = 12;
            d.rate = 1.0;
        }
        Command::FeynmanKac => {
            d.steps = 12;
            d.xs = &[-1.0, -0.5, 0.0, 0.5, 1.0];
        }
        _ => {}
    }
    d
}

fn pair(flag: Option<&[f64]>, name: &str) -> Result<Option<[f64; 2]>, CliError> {
    match flag {
        None => Ok(None),
        Some([a, b]) => Ok(Some([*a, *b])),
        Some(v) => Err(CliError::Usage(format!(
            "--{name} takes two values lo,hi, got {}",
            v.len()
        ))),
    }
}

/// Merges defaults, the optional file and the flags (flags win).
pub fn resolve(command: Command, flags: &Flags) -> Result<Resolved, CliError> {
    let file = match &flags.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(c) = &file.command {
        if *c != command.name() {
            return Err(CliError::Config(format!(
                "command: file is for '{c}' but '{}' was requested",
                command.name()
            )));
        }
    }
    let d = defaults(command);

    let mu = pair(flags.mu.as_deref(), "mu")?
        .or(file.params.mu)
        .unwrap_or(d.mu);
    let var = pair(flags.var.as_deref(), "var")?
        .or(file.params.var)
        .unwrap_or([0.25, 1.0]);
    let params = UncertaintyParams::new(mu[0], mu[1], var[0], var[1])
        .map_err(|e| CliError::Config(format!("params: {e}")))?;

    let base = SolverConfig::default();
    let boundary = match &file.solver.boundary {
        Some(b) => b
            .parse::<Boundary>()
            .map_err(|e| CliError::Config(format!("solver.boundary: {e}")))?,
        None => base.boundary,
    };
    let solver = SolverConfig {
        half_width: file.solver.half_width.or(base.half_width),
        data_radius: file.solver.data_radius.unwrap_or(base.data_radius),
        nx: flags.nx.or(file.solver.nx).unwrap_or(base.nx),
        cfl: flags.cfl.or(file.solver.cfl).unwrap_or(base.cfl),
        boundary,
    };
    solver
        .validate()
        .map_err(|e| CliError::Config(format!("solver: {e}")))?;

    let dp_base = DpConfig::default();
    let dp = DpConfig {
        half_width: file.dp.half_width.or(dp_base.half_width),
        points: file.dp.points.unwrap_or(dp_base.points),
        align: file.dp.align.unwrap_or(dp_base.align),
        mode: match &file.dp.mode {
            Some(m) => parse_mode(m)?,
            None => dp_base.mode,
        },
    };
    dp.validate()
        .map_err(|e| CliError::Config(format!("dp: {e}")))?;

    let steps = flags.steps.or(file.lattice.steps).unwrap_or(d.steps);
    let horizon = flags.horizon.or(file.lattice.horizon).unwrap_or(1.0);
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CliError::Config(format!(
            "lattice.T: horizon must be positive, got {horizon}"
        )));
    }
    let phi_name = match flags.phi.clone().or(file.phi.clone()) {
        Some(p) => p,
        None if d.phi.is_empty() => format!("dist:[{},{}]", mu[0], mu[1]),
        None => d.phi.to_string(),
    };
    TestFunction::parse(&phi_name).map_err(|e| CliError::Config(format!("phi: {e}")))?;

    let ns = flags
        .n
        .clone()
        .or(file.n.clone())
        .unwrap_or_else(|| d.ns.to_vec());
    if ns.iter().any(|&n| n == 0) {
        return Err(CliError::Config("n: values must be at least 1".into()));
    }
    let xs = flags
        .x
        .clone()
        .or(file.x.clone())
        .unwrap_or_else(|| d.xs.to_vec());
    Ok(Resolved {
        command,
        params,
        solver,
        dp,
        steps,
        horizon,
        phi_name,
        ns,
        coeff: flags
            .coeff
            .clone()
            .or(file.coeff.clone())
            .unwrap_or_else(|| d.coeff.to_string()),
        xs,
        rate: flags.rate.or(file.rate).unwrap_or(d.rate),
        scenarios: flags.scenarios.clone().or(file.scenarios.clone()),
        variable: flags.variable.clone().or(file.variable.clone()),
        out: flags.out.clone().or(file.out.clone()),
        seed: file.seed,
    })
}
