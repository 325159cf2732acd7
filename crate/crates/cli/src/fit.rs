//! `fit` subcommand: refit a transmission table written by a spectrum preset.

use std::path::Path;

use clap::ValueEnum;
use lambda_eit::presets;
use lambda_eit::spectroscopy::{fit_eit, fit_two_level, Spectrum};
use lambda_eit::units::{ghz, to_ghz, to_mhz};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult, ConfigError};
use crate::output::Table;
use crate::run::eit_fixed;

/// Model fitted by the `fit` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum FitModel {
    TwoLevel,
    Eit,
}

/// Row filter `column=value` for long-format tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub column: String,
    pub value: f64,
}

impl std::str::FromStr for Selection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (column, value) = s.split_once('=').ok_or_else(|| format!("expected column=value, got `{s}`"))?;
        let value = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
        Ok(Self {
            column: column.trim().to_string(),
            value,
        })
    }
}

/// Read `omega_p_GHz`, `re_t` and `im_t` from `input` and fit `model`.
///
/// The device and drive come from `config` when given, otherwise from the
/// reference sample. Only rows matching `select` are used.
pub fn fit_table(
    input: &Path,
    model: FitModel,
    config: Option<&ExperimentConfig>,
    select: Option<&Selection>,
) -> CliResult<Value> {
    let table = Table::read_csv(input)?;
    let column = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| CliError::Schema(format!("{}: missing column `{name}`", input.display())))
    };
    let (w, re, im) = (column("omega_p_GHz")?, column("re_t")?, column("im_t")?);
    let keep: Vec<bool> = match select {
        None => vec![true; w.len()],
        Some(sel) => {
            let c = column(&sel.column)?;
            c.iter().map(|v| (v - sel.value).abs() <= 1e-9 * sel.value.abs().max(1.0)).collect()
        }
    };
    let mut omega_p = Vec::new();
    let mut t_c = Vec::new();
    for i in (0..w.len()).filter(|&i| keep[i]) {
        omega_p.push(ghz(w[i]));
        t_c.push(Complex64::new(re[i], im[i]));
    }
    if omega_p.is_empty() {
        return Err(ConfigError::new("no rows match the selection").into());
    }
    if select.is_none() && omega_p.windows(2).any(|w| w[1] <= w[0]) {
        let outer: Vec<&str> = table
            .columns
            .iter()
            .map(String::as_str)
            .filter(|c| !matches!(*c, "omega_p_GHz" | "abs_t" | "phase_rad" | "re_t" | "im_t"))
            .collect();
        if !outer.is_empty() {
            return Err(ConfigError::new(format!(
                "table holds several spectra; pick one with --select {}=<value>",
                outer[0]
            ))
            .into());
        }
    }
    let (device, drive) = match config {
        Some(c) => (c.device.clone(), c.drive.clone()),
        None => (presets::paper_device(), presets::paper_drive(0.0)),
    };
    let fixed = eit_fixed(&device, &drive);
    let spectrum = Spectrum::new(omega_p, t_c, device, drive)?;
    let points = spectrum.len();
    Ok(match model {
        FitModel::TwoLevel => {
            let f = fit_two_level(&spectrum)?;
            let u = f.uncertainties();
            json!({
                "model": "two_level",
                "points": points,
                "omega_q_GHz": to_ghz(f.omega_q),
                "gamma_MHz": to_mhz(f.gamma_relax),
                "gamma_phi_MHz": to_mhz(f.gamma_phi),
                "sigma_omega_q_GHz": to_ghz(u[0]),
                "sigma_gamma_MHz": to_mhz(u[1]),
                "sigma_gamma_phi_MHz": to_mhz(u[2]),
                "residual_norm": f.residual_norm,
            })
        }
        FitModel::Eit => {
            let f = fit_eit(&spectrum, &fixed)?;
            let u = f.uncertainties();
            json!({
                "model": "eit",
                "points": points,
                "omega_q_motional_GHz": to_ghz(f.omega_q_motional),
                "omega_phi_MHz": to_mhz(f.omega_phi),
                "sigma_omega_q_motional_GHz": to_ghz(u[0]),
                "sigma_omega_phi_MHz": to_mhz(u[1]),
                "residual_norm": f.residual_norm,
                "rms_abs_t": f.magnitude_rms(&spectrum, &fixed)?,
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_parses() {
        let s: Selection = "delta_phi_Phi0=0.09".parse().unwrap();
        assert_eq!(s.column, "delta_phi_Phi0");
        assert_eq!(s.value, 0.09);
        assert!("delta_phi_Phi0".parse::<Selection>().is_err());
        assert!("a=b".parse::<Selection>().is_err());
    }
}
