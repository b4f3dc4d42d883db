use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tempus_core::rng;
use tempus_core::urn::{coarse_grain, summarize, Scenario, UrnPair};

use super::Subcommand;
use crate::config::Manifest;
use crate::error::{CliError, CliResult, Context};
use crate::output::{num, RunOutput, Table};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioChoice {
    /// A starts in one urn, B at equilibrium.
    Asymmetric,
    /// Both relax from one urn; B is read backwards in time.
    Mirror,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchulmanParams {
    /// Balls in subsystem A [default: 200]
    #[arg(long)]
    pub na: Option<u32>,
    /// Balls in subsystem B [default: 20]
    #[arg(long)]
    pub nb: Option<u32>,
    /// Coupling strength, at most 0.05 [default: 0.01]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Steps per run [default: 20000]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Seeded runs [default: 100]
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// [default: asymmetric]
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioChoice>,
}

impl Subcommand for SchulmanParams {
    const NAME: &'static str = "schulman";

    fn run(self) -> CliResult<RunOutput> {
        let p = SchulmanParams {
            na: Some(self.na.unwrap_or(200)),
            nb: Some(self.nb.unwrap_or(20)),
            lambda: Some(self.lambda.unwrap_or(0.01)),
            steps: Some(self.steps.unwrap_or(20_000)),
            runs: Some(self.runs.unwrap_or(100)),
            seed: Some(self.seed.unwrap_or(0)),
            scenario: Some(self.scenario.unwrap_or(ScenarioChoice::Asymmetric)),
        };
        let (na, nb, lambda) = (p.na.unwrap(), p.nb.unwrap(), p.lambda.unwrap());
        let scenario = match p.scenario.unwrap() {
            ScenarioChoice::Asymmetric => Scenario::AsymmetricSizes,
            ScenarioChoice::Mirror => Scenario::Mirror,
        };
        // the mirror scenario injects asymmetries in either direction
        let pair = match scenario {
            Scenario::AsymmetricSizes => UrnPair::new(na, nb, lambda),
            Scenario::Mirror => UrnPair::unchecked(na, nb, lambda),
        }
        .map_err(|e| CliError::config("urns", e.to_string()))?;
        let runs = p.runs.unwrap();
        if runs == 0 {
            return Err(CliError::config("runs", "must be at least 1"));
        }
        let seed = rng::derive(p.seed.unwrap(), Self::NAME);
        let (cal, results) =
            parallel::schulman_ensemble(&pair, p.steps.unwrap(), runs, seed, scenario)
                .context("simulation")?;
        let summary = summarize(&results);

        let w = pair.window();
        let mut table = Table::new(&["run", "window", "s_a", "s_b", "s_total"]);
        for (i, r) in results.iter().enumerate() {
            let (a, b) = (coarse_grain(&r.s_a, w), coarse_grain(&r.s_b, w));
            for (k, (x, y)) in a.iter().zip(&b).enumerate() {
                table.push(vec![
                    i.to_string(),
                    k.to_string(),
                    num(*x),
                    num(*y),
                    num(x + y),
                ]);
            }
        }
        let mut report = format!(
            "urns N_A = {na}, N_B = {nb}, lambda = {}, {} steps, {runs} runs, window {w}\n\
             calibration: drop tolerance {}, displacement threshold {} (3 x {})\n\
             coarse-grained entropy nondecreasing: {}\n\
             B displaced from equilibrium: {}\n",
            num(lambda),
            p.steps.unwrap(),
            num(cal.drop_tol),
            num(cal.threshold()),
            num(cal.displacement_scale),
            num(summary.monotone_fraction),
            num(summary.displaced_fraction),
        );
        if let Some(f) = summary.symmetric_fraction {
            report.push_str(&format!(
                "mirror symmetry accepted at the 5% level: {}\n",
                num(f)
            ));
        }
        let json = json!({
            "window": w,
            "calibration": {
                "drop_tol": cal.drop_tol,
                "displacement_scale": cal.displacement_scale,
                "displacement_std": cal.displacement_std,
                "threshold": cal.threshold(),
            },
            "monotone_fraction": summary.monotone_fraction,
            "displaced_fraction": summary.displaced_fraction,
            "symmetric_fraction": summary.symmetric_fraction,
            "runs": results.iter().map(|r| json!({
                "max_drop": r.max_drop,
                "monotone": r.monotone,
                "displacement": r.displacement,
                "displaced": r.displaced,
                "symmetry_p": r.symmetry_p,
            })).collect::<Vec<_>>(),
        });
        Ok(RunOutput {
            manifest: Manifest::new(Self::NAME, p.seed, &p)?,
            report,
            table,
            json,
        })
    }
}
