//! `jetext`: command-line driver for the extension pipeline.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "jetext", version, about = "Whitney-type extension of jet fields on finite sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write outputs into this directory instead of stdout.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

/// Construction constants shared by the commands that build a plan.
#[derive(Args, Debug, Clone)]
pub struct PlanArgs {
    /// Lacuna constant τ.
    #[arg(long, default_value_t = 4.0)]
    pub tau: f64,
    /// Sparsity constant γ for certificates; defaults to the value derived from τ.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Maximal Whitney refinement depth.
    #[arg(long)]
    pub depth_cap: Option<u32>,
    /// Window size relative to the bounding cube of E.
    #[arg(long, default_value_t = 4.0)]
    pub inflate: f64,
    /// Abort past this many Whitney cubes.
    #[arg(long, default_value_t = 4_000_000)]
    pub max_cubes: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Json,
    Dot,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Random jet instance from a seed.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Defaults to 2n.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        points: usize,
        /// Jets of one global polynomial instead of independent jets.
        #[arg(long)]
        poly: bool,
        #[arg(long, default_value_t = 1e-3)]
        min_sep: f64,
    },
    /// Whitney cover as JSON.
    Decompose {
        input: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Lacuna report.
    Lacunae {
        input: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Sparse graph with its certificates and sparsity report.
    Graph {
        input: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, value_enum, default_value_t = GraphFormat::Json)]
        format: GraphFormat,
    },
    /// Every trace functional of the field.
    Seminorm {
        input: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        /// Gauss-Legendre points per axis; defaults by m.
        #[arg(long)]
        order: Option<usize>,
    },
    /// F and its derivatives on a grid over the window, as CSV.
    Extend {
        input: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        /// Grid points per axis.
        #[arg(long, default_value_t = 17)]
        grid: usize,
        /// Largest derivative order; defaults to m − 1.
        #[arg(long)]
        deriv: Option<usize>,
        /// Evaluate the truncated extension F_ε instead.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// F_ε on a grid and the discrete W^m_p parts.
    Wmp {
        input: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 17)]
        grid: usize,
        /// Also integrate the W^m_p norm of F_ε numerically.
        #[arg(long)]
        numeric: bool,
    },
    /// Pre-metric and geodesic distances for a density file, as CSV.
    Metric {
        density: PathBuf,
        /// JSON list of query points; random ones otherwise.
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample radius in grid cells.
        #[arg(long, default_value_t = 4.0)]
        radius: f64,
    },
    /// McShane-type extension of the values of an m = 1 field on a grid.
    Mcshane {
        input: PathBuf,
        #[arg(long, default_value_t = 33)]
        grid: usize,
        /// Density resolution per axis.
        #[arg(long, default_value_t = 32)]
        res: usize,
        /// Use the metric Lip(f)·‖x − y‖ instead of 48 d_q(f♯).
        #[arg(long)]
        lipschitz: bool,
    },
    /// Full invariant suite; exits with 3 on a violation.
    Verify {
        input: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
