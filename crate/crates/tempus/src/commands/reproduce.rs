use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Subcommand;
use crate::config::{load_config, merge, Manifest};
use crate::error::{CliError, CliResult};
use crate::output::{emit, render, OutputArgs, RunOutput, Table};
use crate::suite::{self, Scale, SUITE_SEED};

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReproduceParams {
    /// Suite scale [default: full]
    #[arg(value_enum, value_name = "SUITE")]
    pub suite: Option<Scale>,
}

impl Subcommand for ReproduceParams {
    const NAME: &'static str = "reproduce";

    fn run(self) -> CliResult<RunOutput> {
        let p = ReproduceParams {
            suite: Some(self.suite.unwrap_or(Scale::Full)),
        };
        let outcomes = suite::run_all(p.suite.unwrap(), |o| eprintln!("{}", o.line()));
        let mut table = Table::new(&["criterion", "title", "passed", "detail", "seconds"]);
        for o in &outcomes {
            table.push(vec![
                o.id.to_string(),
                o.title.to_string(),
                o.passed.to_string(),
                o.detail.clone(),
                format!("{:.2}", o.seconds),
            ]);
        }
        let failed = outcomes.iter().filter(|o| !o.passed).count();
        let report = format!(
            "{}{} of {} criteria passed\n",
            render(&table),
            outcomes.len() - failed,
            outcomes.len()
        );
        let json = json!({
            "passed": failed == 0,
            "criteria": outcomes.iter().map(|o| json!({
                "id": o.id,
                "title": o.title,
                "passed": o.passed,
                "detail": o.detail,
                "seconds": o.seconds,
                "budget": o.budget,
            })).collect::<Vec<_>>(),
        });
        Ok(RunOutput {
            manifest: Manifest::new(Self::NAME, Some(SUITE_SEED), &p)?,
            report,
            table,
            json,
        })
    }
}

/// Like [`super::execute`], but fails after writing the outputs when any
/// criterion failed.
pub fn execute(params: ReproduceParams, out: &OutputArgs, threads: Option<usize>) -> CliResult<()> {
    let file = out
        .config
        .as_deref()
        .map(|p| load_config(p, ReproduceParams::NAME))
        .transpose()?;
    let merged: ReproduceParams = merge(file, &params)?;
    let run = crate::parallel::with_threads(threads, || merged.run())??;
    emit(out, &run)?;
    let total = run.table.rows.len();
    let failed = run.table.rows.iter().filter(|r| r[2] != "true").count();
    if failed > 0 {
        return Err(CliError::SuiteFailed { failed, total });
    }
    Ok(())
}
