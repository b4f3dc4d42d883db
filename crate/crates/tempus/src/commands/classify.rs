use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tempus_core::symmetry::{
    classify_system, CatalogSystem, CatalogVerdict, ClassificationReport, IrreversibleCause,
    Reversibility, Tolerances,
};

use super::Subcommand;
use crate::error::{CliResult, Context};
use crate::output::{num, render, RunOutput, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemChoice {
    All,
    A,
    B,
    C,
    D,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyParams {
    /// Catalog system to classify [default: all]
    #[arg(long, value_enum)]
    pub system: Option<SystemChoice>,
    /// Integration step [default: 1e-3]
    #[arg(long)]
    pub step: Option<f64>,
    /// Return distance that counts as closing an orbit [default: 1e-3]
    #[arg(long)]
    pub close: Option<f64>,
    /// Integration horizon for the reversibility test [default: 40]
    #[arg(long)]
    pub horizon: Option<f64>,
}

pub fn verdict_name(v: CatalogVerdict) -> &'static str {
    match v {
        CatalogVerdict::Reversible => "reversible",
        CatalogVerdict::Irreversible => "irreversible",
        CatalogVerdict::Mixed => "mixed",
        CatalogVerdict::Undetermined => "undetermined",
    }
}

pub fn reversibility_name(r: &Reversibility) -> String {
    match r {
        Reversibility::Reversible { period } => format!("reversible(period={})", num(*period)),
        Reversibility::Irreversible(IrreversibleCause::Escape) => "irreversible(escape)".into(),
        Reversibility::Irreversible(IrreversibleCause::Attractor) => {
            "irreversible(attractor)".into()
        }
        Reversibility::Undetermined => "undetermined".into(),
    }
}

fn report_json(r: &ClassificationReport) -> serde_json::Value {
    json!({
        "system": r.system.label(),
        "description": r.system.description(),
        "tri": r.tri,
        "verdict": verdict_name(r.verdict),
        "trajectories": r.trajectories.iter().map(|t| json!({
            "label": t.label,
            "reversibility": reversibility_name(&t.reversibility),
        })).collect::<Vec<_>>(),
        "time_symmetric_at": r.time_symmetric,
    })
}

impl Subcommand for ClassifyParams {
    const NAME: &'static str = "classify";

    fn run(self) -> CliResult<RunOutput> {
        let d = Tolerances::default();
        let p = ClassifyParams {
            system: Some(self.system.unwrap_or(SystemChoice::All)),
            step: Some(self.step.unwrap_or(d.step)),
            close: Some(self.close.unwrap_or(d.close)),
            horizon: Some(self.horizon.unwrap_or(d.horizon)),
        };
        let tol = Tolerances {
            step: p.step.unwrap(),
            close: p.close.unwrap(),
            horizon: p.horizon.unwrap(),
            ..d
        };
        let systems: Vec<CatalogSystem> = match p.system.unwrap() {
            SystemChoice::All => CatalogSystem::ALL.to_vec(),
            SystemChoice::A => vec![CatalogSystem::A],
            SystemChoice::B => vec![CatalogSystem::B],
            SystemChoice::C => vec![CatalogSystem::C],
            SystemChoice::D => vec![CatalogSystem::D],
        };
        let reports = systems
            .iter()
            .map(|&s| classify_system(s, &tol))
            .collect::<tempus_core::Result<Vec<_>>>()
            .context("classification")?;

        let mut table = Table::new(&[
            "system",
            "description",
            "tri",
            "verdict",
            "trajectories",
            "time_symmetric_at",
        ]);
        for r in &reports {
            table.push(vec![
                r.system.label().into(),
                r.system.description().into(),
                r.tri.to_string(),
                verdict_name(r.verdict).into(),
                r.trajectories
                    .iter()
                    .map(|t| format!("{}={}", t.label, reversibility_name(&t.reversibility)))
                    .collect::<Vec<_>>()
                    .join("; "),
                r.time_symmetric.map(num).unwrap_or_else(|| "none".into()),
            ]);
        }
        Ok(RunOutput {
            manifest: crate::config::Manifest::new(Self::NAME, None, &p)?,
            report: render(&table),
            json: json!(reports.iter().map(report_json).collect::<Vec<_>>()),
            table,
        })
    }
}
