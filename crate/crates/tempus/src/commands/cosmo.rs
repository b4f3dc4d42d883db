use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tempus_core::cosmology::{
    detect_cosmo_symmetry, dominant_energy_check, evolve_cosmo_two_sided, AxisParity, CosmoEnd,
    CosmoState, FRWModel, Potential,
};

use super::Subcommand;
use crate::config::Manifest;
use crate::error::{CliResult, Context};
use crate::output::{num, RunOutput, Table};

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CosmoParams {
    /// Spatial curvature [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// Field mass of the quadratic potential [default: 0.5]
    #[arg(long)]
    pub mass: Option<f64>,
    /// Constant added to the potential; negative values break the energy condition [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub v0: Option<f64>,
    /// Coupling 8πG/3 [default: 1]
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Cosmological constant [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Initial expansion rate ȧ; a is solved from the constraint [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub adot: Option<f64>,
    /// Initial field value [default: 0.6]
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Initial field velocity [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub phidot: Option<f64>,
    /// Time evolved into the past [default: 2.5]
    #[arg(long)]
    pub t_back: Option<f64>,
    /// Time evolved into the future [default: 2.5]
    #[arg(long)]
    pub t_fwd: Option<f64>,
    /// Output step [default: 0.01]
    #[arg(long)]
    pub step: Option<f64>,
    /// Reflection residual accepted by the symmetry detector [default: 1e-4]
    #[arg(long)]
    pub tol: Option<f64>,
}

fn end_name(e: &CosmoEnd) -> String {
    match e {
        CosmoEnd::Completed => "completed".into(),
        CosmoEnd::Singular { t, a } => format!("singular at t={} (a={})", num(*t), num(*a)),
        CosmoEnd::Stopped { t } => format!("stopped at t={}", num(*t)),
    }
}

impl Subcommand for CosmoParams {
    const NAME: &'static str = "cosmo";

    fn run(self) -> CliResult<RunOutput> {
        let p = CosmoParams {
            k: Some(self.k.unwrap_or(1.0)),
            mass: Some(self.mass.unwrap_or(0.5)),
            v0: Some(self.v0.unwrap_or(0.0)),
            kappa: Some(self.kappa.unwrap_or(1.0)),
            lambda: Some(self.lambda.unwrap_or(0.0)),
            adot: Some(self.adot.unwrap_or(0.0)),
            phi: Some(self.phi.unwrap_or(0.6)),
            phidot: Some(self.phidot.unwrap_or(0.0)),
            t_back: Some(self.t_back.unwrap_or(2.5)),
            t_fwd: Some(self.t_fwd.unwrap_or(2.5)),
            step: Some(self.step.unwrap_or(0.01)),
            tol: Some(self.tol.unwrap_or(1e-4)),
        };
        let potential = Potential::QuadraticPlusConstant {
            mass: p.mass.unwrap(),
            constant: p.v0.unwrap(),
        };
        let model = FRWModel::new(p.k.unwrap(), p.kappa.unwrap(), p.lambda.unwrap(), potential)
            .context("model")?;
        let start =
            CosmoState::on_constraint(p.adot.unwrap(), p.phi.unwrap(), p.phidot.unwrap(), &model)
                .context("initial data")?;
        let run = evolve_cosmo_two_sided(
            &start,
            &model,
            p.t_back.unwrap(),
            p.t_fwd.unwrap(),
            p.step.unwrap(),
        )
        .context("evolution")?;
        let sym = detect_cosmo_symmetry(&run.trajectory, p.tol.unwrap());

        let mut table = Table::new(&["t", "a", "phi", "adot", "phidot", "residual", "dec_margin"]);
        let mut dec_ok = true;
        let mut min_margin = f64::INFINITY;
        for i in 0..run.trajectory.len() {
            let s = run.state(i);
            let dec = dominant_energy_check(&s, &model);
            dec_ok &= dec.holds;
            min_margin = min_margin.min(dec.margin);
            table.push(vec![
                num(s.t),
                num(s.a),
                num(s.phi),
                num(s.a_dot),
                num(s.phi_dot),
                num(run.residuals[i]),
                num(dec.margin),
            ]);
        }
        let parity = |p: AxisParity| match p {
            AxisParity::Even => "even",
            AxisParity::Odd => "odd",
        };
        let mut report = format!(
            "initial a = {}\nsamples = {}\nmax constraint residual = {:e}\npast end: {}\nfuture end: {}\n",
            num(start.a),
            run.trajectory.len(),
            run.max_residual,
            end_name(&run.past),
            end_name(&run.future),
        );
        match &sym {
            Some(s) => report.push_str(&format!(
                "time-symmetric about t_S = {} ({} parity, residual {:e})\n",
                num(s.t_s),
                parity(s.parity),
                s.residual
            )),
            None => report.push_str("no time-symmetry center found\n"),
        }
        report.push_str(&format!(
            "dominant energy condition: {} (min margin {})\n",
            if dec_ok {
                "holds at every sample"
            } else {
                "violated"
            },
            num(min_margin)
        ));
        let json = json!({
            "initial_a": start.a,
            "samples": run.trajectory.len(),
            "max_residual": run.max_residual,
            "past_end": end_name(&run.past),
            "future_end": end_name(&run.future),
            "symmetry": sym.map(|s| json!({"t_s": s.t_s, "parity": parity(s.parity), "residual": s.residual})),
            "dec_holds": dec_ok,
            "dec_min_margin": min_margin,
        });
        Ok(RunOutput {
            manifest: Manifest::new(Self::NAME, None, &p)?,
            report,
            table,
            json,
        })
    }
}
