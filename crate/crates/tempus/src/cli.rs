use clap::{Parser, Subcommand as ClapSubcommand};

use crate::commands::{
    branch::BranchParams, classify::ClassifyParams, cosmo::CosmoParams, deco::DecoParams, execute,
    measure::MeasureParams, reproduce, reproduce::ReproduceParams, schulman::SchulmanParams,
    wigner::WignerParams,
};
use crate::error::CliResult;
use crate::output::OutputArgs;

#[derive(Parser, Debug)]
#[command(
    name = "tempus",
    version,
    about = "Numerical laboratory for the arrow of time"
)]
pub struct Cli {
    /// Worker threads; falls back to TEMPUS_THREADS, then all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(ClapSubcommand, Debug)]
pub enum Commands {
    /// Classify the four reference dynamical systems.
    Classify {
        #[command(flatten)]
        params: ClassifyParams,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evolve a scalar-field FRW universe both ways from a state.
    Cosmo {
        #[command(flatten)]
        params: CosmoParams,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Estimate the measure of time-symmetric solutions.
    Measure {
        #[command(flatten)]
        params: MeasureParams,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Off-diagonal decoherence envelope for a spectral kernel.
    Deco {
        #[command(flatten)]
        params: DecoParams,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Energy-shell Wigner function on a phase-space grid.
    Wigner {
        #[command(flatten)]
        params: WignerParams,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check a branch graph and answer causal queries.
    Branch {
        #[command(flatten)]
        params: BranchParams,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Coupled Ehrenfest urn ensembles.
    Schulman {
        #[command(flatten)]
        params: SchulmanParams,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the acceptance suite.
    Reproduce {
        #[command(flatten)]
        params: ReproduceParams,
        #[command(flatten)]
        out: OutputArgs,
    },
}

impl Cli {
    pub fn run(self) -> CliResult<()> {
        let t = self.threads;
        match self.command {
            Commands::Classify { params, out } => execute(params, &out, t),
            Commands::Cosmo { params, out } => execute(params, &out, t),
            Commands::Measure { params, out } => execute(params, &out, t),
            Commands::Deco { params, out } => execute(params, &out, t),
            Commands::Wigner { params, out } => execute(params, &out, t),
            Commands::Branch { params, out } => execute(params, &out, t),
            Commands::Schulman { params, out } => execute(params, &out, t),
            Commands::Reproduce { params, out } => reproduce::execute(params, &out, t),
        }
    }
}
