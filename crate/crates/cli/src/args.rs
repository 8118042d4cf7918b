use std::path::PathBuf;

use clap::{Args, Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// G-heat equation at the origin
    Gheat,
    /// Maximal distribution over the mean interval
    Maximal,
    Lln,
    Clt,
    /// Exact lattice against the Markov recursion
    Lattice,
    Qv,
    Ito,
    Martingale,
    Sde,
    Bsde,
    FeynmanKac,
    Risk,
    Axioms,
    /// The full acceptance suite
    Accept,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string()
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Variance interval lo,hi
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        value_name = "LO,HI"
    )]
    pub var: Option<Vec<f64>>,
    /// Mean interval lo,hi
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        value_name = "LO,HI"
    )]
    pub mu: Option<Vec<f64>>,
    /// Test function: square, quartic, cube, abs, exp, identity, call:K, const:c, dist:[a,b], neg:NAME
    #[arg(long)]
    pub phi: Option<String>,
    /// Horizon
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<f64>,
    /// Step counts, comma separated
    #[arg(long, value_delimiter = ',', value_name = "N")]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub cfl: Option<f64>,
    /// Lattice steps
    #[arg(long)]
    pub steps: Option<usize>,
    /// CSV output path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON experiment file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// SDE coefficients: zero, bm, linear:a,c, bs:mu,nu,sigma
    #[arg(long)]
    pub coeff: Option<String>,
    /// Starting points, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Discount rate of the BSDE driver f = -rate * y
    #[arg(long, allow_hyphen_values = true)]
    pub rate: Option<f64>,
    /// Scenario document (JSON) for risk and axioms
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    /// Variable of the scenario document
    #[arg(long)]
    pub variable: Option<String>,
}

#[derive(Debug, Parser)]
#[command(
    name = "sublinear",
    version,
    about = "Sublinear expectations under volatility and mean uncertainty"
)]
pub struct Cli {
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_pairs_and_names() {
        let cli =
            Cli::try_parse_from(["sublinear", "maximal", "--mu", "-1,2", "--T", "0.5"]).unwrap();
        assert_eq!(cli.flags.mu, Some(vec![-1.0, 2.0]));
        assert_eq!(cli.flags.horizon, Some(0.5));
        assert_eq!(Command::FeynmanKac.name(), "feynman-kac");
        assert!(Cli::try_parse_from(["sublinear", "nope"]).is_err());
    }
}
