use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kirchhoff_core::MomentKind;

#[derive(Debug, Parser)]
#[command(
    name = "kirchhoff",
    version,
    about = "Exact solutions of -(∫(1-x)^n u^q) u'' = λ u^p on (0,1)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the problem and report the solution with a residual check.
    Solve(SolveArgs),
    /// Sample the bifurcation curve λ(α) on a log-spaced α grid.
    Curve(CurveArgs),
    /// Tabulate the ground state W_p, or the solution u_λ when --lambda is given.
    Profile(ProfileArgs),
    /// Evaluate moment constants L, S, R, M with their quadrature cross-check.
    Constants(ConstantsArgs),
    /// Run every built-in identity check and emit a report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Quadrature tolerance (relative for values above one).
    #[arg(long, default_value_t = kirchhoff_core::quadrature::DEFAULT_TOL)]
    pub tol: f64,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub lambda: f64,
    /// Coarsest mesh of the residual check (N, 2N, 4N).
    #[arg(long, default_value_t = 128)]
    pub mesh: usize,
    /// Family member t W_p to residual-check when q = p - 1.
    #[arg(long)]
    pub family_t: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub n: u32,
    /// min:max:count
    #[arg(long)]
    pub alpha_range: AlphaRange,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, requires_all = ["n", "lambda"])]
    pub q: Option<f64>,
    #[arg(long, requires_all = ["q", "lambda"])]
    pub n: Option<u32>,
    #[arg(long, requires_all = ["q", "n"])]
    pub lambda: Option<f64>,
    /// Number of cells; N+1 rows are written.
    #[arg(long, default_value_t = 100)]
    pub mesh: usize,
    #[arg(long)]
    pub family_t: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    /// Required unless every index is of kind L.
    #[arg(long)]
    pub p: Option<f64>,
    /// KIND:k:d with KIND one of L, S, R, M; repeatable.
    #[arg(long = "index", required = true)]
    pub indices: Vec<IndexSpec>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Override the p grid; repeatable.
    #[arg(long)]
    pub p: Vec<f64>,
    /// Coarsest mesh of the refinement checks.
    #[arg(long, default_value_t = 128)]
    pub mesh: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl FromStr for AlphaRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, count] = parts.as_slice() else {
            return Err(format!("expected min:max:count, got {s:?}"));
        };
        Ok(Self {
            min: min.parse().map_err(|e| format!("bad min {min:?}: {e}"))?,
            max: max.parse().map_err(|e| format!("bad max {max:?}: {e}"))?,
            count: count
                .parse()
                .map_err(|e| format!("bad count {count:?}: {e}"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexSpec {
    pub kind: MomentKind,
    pub k: f64,
    pub d: f64,
}

impl FromStr for IndexSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [kind, k, d] = parts.as_slice() else {
            return Err(format!("expected KIND:k:d, got {s:?}"));
        };
        let kind = match kind.to_ascii_uppercase().as_str() {
            "L" => MomentKind::L,
            "S" => MomentKind::S,
            "R" => MomentKind::R,
            "M" => MomentKind::M,
            other => return Err(format!("unknown kind {other:?}, expected L, S, R or M")),
        };
        Ok(Self {
            kind,
            k: k.parse().map_err(|e| format!("bad k {k:?}: {e}"))?,
            d: d.parse().map_err(|e| format!("bad d {d:?}: {e}"))?,
        })
    }
}
