use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tempus_core::cosmology::FRWModel;
use tempus_core::measure::{
    CensusOptions, MeasureMode, MeasureScanConfig, MeasureScanResult, SurfaceOptions,
};
use tempus_core::rng;

use super::Subcommand;
use crate::config::{required, Manifest, RangeSpec};
use crate::error::{CliError, CliResult, Context};
use crate::output::{num, render, RunOutput, Table};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    /// Initial conditions within ε of the symmetry axes.
    Axis,
    /// Points within ε of the symmetric solution surfaces.
    Tube,
    /// Integrated samples that reflect about their own time.
    Dynamic,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureParams {
    #[arg(long, value_enum)]
    pub mode: Option<ModeChoice>,
    /// Side of the sampling cube [default: 2]
    #[arg(long = "L", id = "L")]
    #[serde(rename = "L")]
    pub l: Option<f64>,
    /// Grain sizes, geometrically spaced: start:stop:count
    #[arg(long)]
    pub eps: Option<RangeSpec>,
    /// Samples per grain [default: 1000000 axis, 200000 tube, 20000 dynamic]
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Spatial curvature [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// Field mass [default: 0.5]
    #[arg(long)]
    pub mass: Option<f64>,
    /// Half-width of the integration window in dynamic mode [default: 0.5]
    #[arg(long)]
    pub window: Option<f64>,
    /// Surface refinements in tube mode [default: 2]
    #[arg(long)]
    pub refinements: Option<u32>,
}

fn scan_table(res: &MeasureScanResult) -> Table {
    let mut t = Table::new(&["epsilon", "fraction", "stderr", "predicted"]);
    for e in &res.estimates {
        t.push(vec![
            num(e.epsilon),
            num(e.fraction),
            num(e.stderr),
            num(e.predicted),
        ]);
    }
    t
}

impl Subcommand for MeasureParams {
    const NAME: &'static str = "measure";

    fn run(self) -> CliResult<RunOutput> {
        let mode = required(&self.mode, "mode")?;
        let eps = required(&self.eps, "eps")?;
        let default_n = match mode {
            ModeChoice::Axis => 1_000_000,
            ModeChoice::Tube => 200_000,
            ModeChoice::Dynamic => 20_000,
        };
        let p = MeasureParams {
            mode: Some(mode),
            l: Some(self.l.unwrap_or(2.0)),
            eps: Some(eps),
            n: Some(self.n.unwrap_or(default_n)),
            seed: Some(self.seed.unwrap_or(0)),
            k: Some(self.k.unwrap_or(1.0)),
            mass: Some(self.mass.unwrap_or(0.5)),
            window: Some(self.window.unwrap_or(0.5)),
            refinements: Some(self.refinements.unwrap_or(2)),
        };
        let epsilons = eps.geomspace().map_err(|m| CliError::config("eps", m))?;
        let l = p.l.unwrap();
        let model = FRWModel::with_mass(p.k.unwrap(), p.mass.unwrap());
        let core_mode = match mode {
            ModeChoice::Axis => MeasureMode::AxisSet,
            ModeChoice::Tube => MeasureMode::SolutionTube,
            ModeChoice::Dynamic => MeasureMode::Dynamic,
        };
        let seed = rng::derive(p.seed.unwrap(), Self::NAME);
        let cfg = MeasureScanConfig::new(l, epsilons.clone(), p.n.unwrap(), seed, model, core_mode)
            .map_err(|e| CliError::config("measure", e.to_string()))?;
        let manifest = Manifest::new(Self::NAME, p.seed, &p)?;

        match mode {
            ModeChoice::Axis | ModeChoice::Tube => {
                let (res, extra) = if mode == ModeChoice::Axis {
                    (parallel::axis_scan(&cfg).context("axis scan")?, json!(null))
                } else {
                    let (res, s) = parallel::tube_scan_converged(
                        &cfg,
                        &SurfaceOptions::new(l, 0.005),
                        p.refinements.unwrap(),
                    )
                    .context("tube scan")?;
                    (
                        res,
                        json!({"surface_spacing": s.spacing(), "trajectories": s.trajectory_count()}),
                    )
                };
                let table = scan_table(&res);
                let report = format!(
                    "{}slope = {} (95% CI {} .. {}), expected {}\n",
                    render(&table),
                    num(res.slope()),
                    num(res.slope_ci.0),
                    num(res.slope_ci.1),
                    if mode == ModeChoice::Axis { 2 } else { 1 },
                );
                let json = json!({
                    "estimates": res.estimates.iter().map(|e| json!({
                        "epsilon": e.epsilon, "hits": e.hits, "n": e.n, "fraction": e.fraction,
                        "stderr": e.stderr, "predicted": e.predicted, "saturated": e.saturated,
                    })).collect::<Vec<_>>(),
                    "slope": res.slope(),
                    "slope_ci": [res.slope_ci.0, res.slope_ci.1],
                    "surfaces": extra,
                });
                Ok(RunOutput {
                    manifest,
                    report,
                    table,
                    json,
                })
            }
            ModeChoice::Dynamic => {
                let mut table = Table::new(&["epsilon", "fraction", "stderr", "predicted"]);
                let mut rows = Vec::new();
                for &e in &epsilons {
                    let opts = CensusOptions {
                        window: p.window.unwrap(),
                        ..CensusOptions::new(e)
                    };
                    let cfg = MeasureScanConfig {
                        epsilons: vec![e],
                        ..cfg.clone()
                    };
                    let r = parallel::census(&cfg, &opts).context("dynamic census")?;
                    table.push(vec![
                        num(e),
                        num(r.dynamic_fraction),
                        num(r.dynamic_stderr),
                        num(r.predicted),
                    ]);
                    rows.push(json!({
                        "epsilon": e, "n": r.n, "failures": r.failures, "predicted": r.predicted,
                        "member_fraction": r.member_fraction, "member_stderr": r.member_stderr,
                        "dynamic_fraction": r.dynamic_fraction, "dynamic_stderr": r.dynamic_stderr,
                        "detected_fraction": r.detected_fraction, "agree": r.agree,
                        "max_residual": r.max_residual,
                    }));
                }
                let mut report = render(&table);
                for r in &rows {
                    report.push_str(&format!(
                        "epsilon {}: axis members {}, detector {}, routes agree: {}\n",
                        r["epsilon"], r["member_fraction"], r["detected_fraction"], r["agree"]
                    ));
                }
                Ok(RunOutput {
                    manifest,
                    report,
                    table,
                    json: json!({ "census": rows }),
                })
            }
        }
    }
}
