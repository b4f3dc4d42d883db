use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tempus_core::decoherence::{
    decoherence_time_from_poles, difference_kernel_pair, fit_decoherence_time, offdiag_envelope,
    pole_model_pair, DecayForm, DifferenceKernel, PoleModel,
};

use super::Subcommand;
use crate::config::{required, Manifest};
use crate::error::{CliError, CliResult, Context};
use crate::output::{num, RunOutput, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    Lorentzian,
    Gaussian,
    Poles,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoParams {
    #[arg(long, value_enum)]
    pub kernel: Option<KernelChoice>,
    /// Lorentzian width γ [default: 0.3]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Gaussian width σ [default: 1]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Lower half-plane poles as re:im pairs, comma separated, e.g. "0.5:-0.2,-0.5:-0.2"
    #[arg(long, allow_hyphen_values = true)]
    pub poles: Option<String>,
    /// Pole weights, comma separated [default: equal]
    #[arg(long)]
    pub residues: Option<String>,
    /// Largest |t| sampled [default: 6 decay times]
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of time samples, symmetric about 0 [default: 301]
    #[arg(long)]
    pub nt: Option<usize>,
}

fn parse_poles(s: &str) -> CliResult<Vec<Complex64>> {
    s.split(',')
        .map(|z| {
            let (re, im) = z
                .split_once(':')
                .ok_or_else(|| CliError::config("poles", format!("expected re:im, got `{z}`")))?;
            let re: f64 = re
                .trim()
                .parse()
                .map_err(|_| CliError::config("poles", format!("bad real part `{re}`")))?;
            let im: f64 = im
                .trim()
                .parse()
                .map_err(|_| CliError::config("poles", format!("bad imaginary part `{im}`")))?;
            if !(im < 0.0) {
                return Err(CliError::config(
                    "poles",
                    "poles must lie in the lower half plane",
                ));
            }
            Ok(Complex64::new(re, im))
        })
        .collect()
}

fn parse_list(s: &str, field: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(field, format!("`{x}` is not a number")))
        })
        .collect()
}

impl Subcommand for DecoParams {
    const NAME: &'static str = "deco";

    fn run(self) -> CliResult<RunOutput> {
        let kernel = required(&self.kernel, "kernel")?;
        let gamma = self.gamma.unwrap_or(0.3);
        let sigma = self.sigma.unwrap_or(1.0);
        let poles = match kernel {
            KernelChoice::Poles => Some(parse_poles(&required(&self.poles, "poles")?)?),
            _ => None,
        };
        let residues = self
            .residues
            .as_deref()
            .map(|r| parse_list(r, "residues"))
            .transpose()?;
        let model = match &poles {
            Some(z) => Some(
                PoleModel::symmetric(z, residues.as_deref())
                    .map_err(|e| CliError::config("residues", e.to_string()))?,
            ),
            None => None,
        };
        let pole_time = model
            .as_ref()
            .map(decoherence_time_from_poles)
            .transpose()
            .context("pole rule")?;
        // time scale of the decay, used for the default window
        let scale = match kernel {
            KernelChoice::Lorentzian => 1.0 / gamma,
            KernelChoice::Gaussian => 1.0 / sigma,
            KernelChoice::Poles => pole_time.as_ref().map(|p| p.time).unwrap_or(1.0),
        };
        let p = DecoParams {
            kernel: Some(kernel),
            gamma: Some(gamma),
            sigma: Some(sigma),
            poles: self.poles.clone(),
            residues: self.residues.clone(),
            t_max: Some(self.t_max.unwrap_or(6.0 * scale)),
            nt: Some(self.nt.unwrap_or(301)),
        };
        let (t_max, nt) = (p.t_max.unwrap(), p.nt.unwrap());
        if !(t_max > 0.0) || nt < 3 {
            return Err(CliError::config(
                "t_max",
                "need t_max > 0 and at least 3 samples",
            ));
        }
        let (state, obs) = match kernel {
            KernelChoice::Lorentzian => {
                difference_kernel_pair(DifferenceKernel::Lorentzian { gamma }, t_max)
            }
            KernelChoice::Gaussian => {
                difference_kernel_pair(DifferenceKernel::Gaussian { sigma }, t_max)
            }
            KernelChoice::Poles => pole_model_pair(model.as_ref().unwrap(), t_max),
        }
        .context("spectral pair")?;
        let t: Vec<f64> = (0..nt)
            .map(|i| -t_max + 2.0 * t_max * i as f64 / (nt - 1) as f64)
            .collect();
        let env = offdiag_envelope(&state, &obs, &t).context("envelope")?;
        let i0 = t
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap();
        let d0 = env.d[i0];
        let lower = model.as_ref().map(|m| m.lower()).unwrap_or_default();
        let weight: f64 = lower.iter().map(|(_, r)| r).sum();
        let reference = |t: f64| match kernel {
            KernelChoice::Lorentzian => (-gamma * t.abs()).exp(),
            KernelChoice::Gaussian => (-sigma * sigma * t * t / 2.0).exp(),
            // envelope of the pole sum; the phases can only lower it
            KernelChoice::Poles => {
                lower
                    .iter()
                    .map(|(z, r)| r * (-z.im.abs() * t.abs()).exp())
                    .sum::<f64>()
                    / weight
            }
        };
        let mut table = Table::new(&["t", "d", "ratio", "reference"]);
        let mut max_err: f64 = 0.0;
        for (k, &tk) in t.iter().enumerate() {
            let ratio = env.d[k] / d0;
            if kernel != KernelChoice::Poles {
                max_err = max_err.max((ratio - reference(tk)).abs());
            }
            table.push(vec![num(tk), num(env.d[k]), num(ratio), num(reference(tk))]);
        }
        let form = if kernel == KernelChoice::Gaussian {
            DecayForm::Gaussian
        } else {
            DecayForm::Exponential
        };
        let fit = fit_decoherence_time(&env.t, &env.d, form).context("decay fit")?;

        let mut report = format!(
            "equilibrium mean = {}\ntwin asymmetry max|D(t) - D(-t)| = {:e}\nimaginary residual = {:e}\nfitted {} rate = {} (R² = {})\n",
            num(env.equilibrium),
            env.twin_asymmetry,
            env.max_imag,
            if form == DecayForm::Gaussian { "gaussian" } else { "exponential" },
            num(fit.rate),
            num(fit.r_squared),
        );
        if kernel != KernelChoice::Poles {
            report.push_str(&format!("max |D/D(0) - analytic| = {:e}\n", max_err));
        }
        if let Some(pt) = &pole_time {
            report.push_str(&format!(
                "pole rule: nearest lower pole {} gives decoherence time {} (rate {})\n",
                pt.pole,
                num(pt.time),
                num(1.0 / pt.time)
            ));
        }
        let json = json!({
            "equilibrium": env.equilibrium,
            "twin_asymmetry": env.twin_asymmetry,
            "max_imag": env.max_imag,
            "fit": {"rate": fit.rate, "r_squared": fit.r_squared, "points": fit.points},
            "max_oracle_error": (kernel != KernelChoice::Poles).then_some(max_err),
            "pole_time": pole_time.as_ref().map(|p| p.time),
        });
        Ok(RunOutput {
            manifest: Manifest::new(Self::NAME, None, &p)?,
            report,
            table,
            json,
        })
    }
}
