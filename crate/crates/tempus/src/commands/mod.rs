//! One module per subcommand. Each parameter struct doubles as the config
//! file schema: flags and file keys share names, every field is optional
//! and defaults are filled in before the manifest is written.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{load_config, merge};
use crate::error::CliResult;
use crate::output::{emit, OutputArgs, RunOutput};

pub mod branch;
pub mod classify;
pub mod cosmo;
pub mod deco;
pub mod measure;
pub mod reproduce;
pub mod schulman;
pub mod wigner;

pub trait Subcommand: Serialize + DeserializeOwned + Send {
    const NAME: &'static str;

    fn run(self) -> CliResult<RunOutput>;
}

/// Merges the config file under the flags, runs and writes the outputs.
pub fn execute<P: Subcommand>(
    params: P,
    out: &OutputArgs,
    threads: Option<usize>,
) -> CliResult<()> {
    let file = out
        .config
        .as_deref()
        .map(|p| load_config(p, P::NAME))
        .transpose()?;
    let merged: P = merge(file, &params)?;
    let run = crate::parallel::with_threads(threads, || merged.run())??;
    emit(out, &run)
}

/// Runs with the given parameters and no config file, returning the output.
pub fn evaluate<P: Subcommand>(params: P) -> CliResult<RunOutput> {
    let merged: P = merge(None, &params)?;
    merged.run()
}
