use std::f64::consts::PI;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tempus_core::wigner::{wigner_energy_shell, Hamiltonian, PhaseGrid};

use super::Subcommand;
use crate::config::{required, GridSpec, Interval, Manifest};
use crate::error::{CliError, CliResult, Context};
use crate::output::{num, RunOutput, Table};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianChoice {
    /// p²/2 + k q²/2
    Sho,
    /// p²/2 + k (1 − cos q)
    Pendulum,
    /// p²/2 + k q²/2 + λ q⁴/4
    Quartic,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerParams {
    /// [default: sho]
    #[arg(long, value_enum)]
    pub hamiltonian: Option<HamiltonianChoice>,
    /// Stiffness k [default: 1]
    #[arg(long)]
    pub k: Option<f64>,
    /// Quartic coefficient λ [default: 0.5]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Shell energy ω
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Shell width σ
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Cells as NQxNP [default: 512x512]
    #[arg(long)]
    pub grid: Option<GridSpec>,
    /// Position range lo:hi [default: -2.5:2.5, or -π:π for the pendulum]
    #[arg(long, allow_hyphen_values = true)]
    pub q_range: Option<Interval>,
    /// Momentum range lo:hi [default: -2.5:2.5]
    #[arg(long, allow_hyphen_values = true)]
    pub p_range: Option<Interval>,
    /// Transport the shell for this time and report the relative change
    #[arg(long)]
    pub transport: Option<f64>,
    /// Largest RK4 step used for transport [default: 0.02]
    #[arg(long)]
    pub step: Option<f64>,
}

impl Subcommand for WignerParams {
    const NAME: &'static str = "wigner";

    fn run(self) -> CliResult<RunOutput> {
        let omega = required(&self.omega, "omega")?;
        let sigma = required(&self.sigma, "sigma")?;
        let choice = self.hamiltonian.unwrap_or(HamiltonianChoice::Sho);
        let q_default = match choice {
            HamiltonianChoice::Pendulum => Interval { lo: -PI, hi: PI },
            _ => Interval { lo: -2.5, hi: 2.5 },
        };
        let p = WignerParams {
            hamiltonian: Some(choice),
            k: Some(self.k.unwrap_or(1.0)),
            lambda: Some(self.lambda.unwrap_or(0.5)),
            omega: Some(omega),
            sigma: Some(sigma),
            grid: Some(self.grid.unwrap_or(GridSpec { nq: 512, np: 512 })),
            q_range: Some(self.q_range.unwrap_or(q_default)),
            p_range: Some(self.p_range.unwrap_or(Interval { lo: -2.5, hi: 2.5 })),
            transport: self.transport,
            step: Some(self.step.unwrap_or(0.02)),
        };
        let k = p.k.unwrap();
        let h = match choice {
            HamiltonianChoice::Sho => Hamiltonian::Harmonic { k },
            HamiltonianChoice::Pendulum => Hamiltonian::Pendulum { k },
            HamiltonianChoice::Quartic => Hamiltonian::Anharmonic {
                k,
                lambda: p.lambda.unwrap(),
            },
        };
        let (gs, qr, pr) = (p.grid.unwrap(), p.q_range.unwrap(), p.p_range.unwrap());
        let grid = PhaseGrid::new((qr.lo, qr.hi), gs.nq, (pr.lo, pr.hi), gs.np)
            .map_err(|e| CliError::config("grid", e.to_string()))?;
        let shell = wigner_energy_shell(omega, &h, sigma, &grid, &[]).context("energy shell")?;

        let mut table = Table::new(&["q", "p", "value"]);
        for k in 0..grid.len() {
            let (q, pp) = grid.point(k);
            table.push(vec![num(q), num(pp), num(shell.values[k])]);
        }
        let within = shell.mass_within(omega, 3.0 * sigma);
        let thickness = shell.thickness(omega);
        let change = match p.transport {
            Some(t) => {
                Some(parallel::transport_change(&shell, t, p.step.unwrap()).context("transport")?)
            }
            None => None,
        };
        let mut report = format!(
            "grid {} on q {} p {}, model ħ (cell area) = {}\nmass = {}\nmass within 3σ of ω = {}\nshell thickness = {}\n",
            gs,
            qr,
            pr,
            num(grid.cell_area()),
            num(shell.mass()),
            num(within),
            num(thickness),
        );
        if let (Some(t), Some(c)) = (p.transport, change) {
            report.push_str(&format!(
                "relative change after transport for t = {}: {}\n",
                num(t),
                num(c)
            ));
        }
        let json = json!({
            "grid": {"nq": gs.nq, "np": gs.np, "q": [qr.lo, qr.hi], "p": [pr.lo, pr.hi], "cell_area": grid.cell_area()},
            "mass": shell.mass(),
            "mass_within_3sigma": within,
            "thickness": thickness,
            "transport_change": change,
        });
        Ok(RunOutput {
            manifest: Manifest::new(Self::NAME, None, &p)?,
            report,
            table,
            json,
        })
    }
}
