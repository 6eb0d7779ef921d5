//! Length and time scales of decoherence and of environmental
//! distinguishability, and the gap between them.

use std::fmt;

use crate::error::{Error, Result};
use crate::params::ValidatedParams;

/// lambda_dB = sqrt(hbar^2 / (2 M k_B T)).
pub fn thermal_de_broglie(params: &ValidatedParams) -> f64 {
    params.hbar() / (2.0 * params.mass() * params.thermal_energy()).sqrt()
}

/// lambda_dist = sqrt(2 k_B T / (M Lambda^2)): the displacement at which a
/// cutoff-frequency oscillator of mass M stores energy k_B T.
pub fn distinguishability_length(params: &ValidatedParams) -> f64 {
    (2.0 * params.thermal_energy() / params.mass()).sqrt() / params.lambda()
}

fn check_separation(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveSeparation(d))
    }
}

/// (1/gamma) (lambda_dB / d)^2
pub fn decoherence_time(params: &ValidatedParams, d: f64) -> Result<f64> {
    check_separation(d)?;
    let r = thermal_de_broglie(params) / d;
    Ok(r * r / params.gamma())
}

/// (1/gamma) (lambda_dist / d)^2
pub fn distinguishability_time(params: &ValidatedParams, d: f64) -> Result<f64> {
    check_separation(d)?;
    let r = distinguishability_length(params) / d;
    Ok(r * r / params.gamma())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalesReport {
    pub lambda_db: f64,
    pub lambda_dist: f64,
    pub t_dec: f64,
    pub t_dist: f64,
    /// lambda_dist / lambda_dB = 2 k_B T / (hbar Lambda)
    pub length_ratio: f64,
    /// t_dist / t_dec
    pub time_ratio: f64,
    /// lambda_dist * lambda_dB = hbar / (M Lambda)
    pub gain_disturbance_product: f64,
    pub separation_d: f64,
}

impl ScalesReport {
    pub const CSV_HEADER: [&'static str; 8] = [
        "lambda_dB",
        "lambda_dist",
        "t_dec",
        "t_dist",
        "length_ratio",
        "time_ratio",
        "gain_disturbance_product",
        "separation_d",
    ];

    pub fn to_row(&self) -> [f64; 8] {
        [
            self.lambda_db,
            self.lambda_dist,
            self.t_dec,
            self.t_dist,
            self.length_ratio,
            self.time_ratio,
            self.gain_disturbance_product,
            self.separation_d,
        ]
    }

    /// Comma-separated row in full precision, matching [`Self::CSV_HEADER`].
    pub fn to_csv_row(&self) -> String {
        self.to_row()
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for ScalesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "separation d              {:.6e}", self.separation_d)?;
        writeln!(f, "thermal de Broglie        {:.6e}", self.lambda_db)?;
        writeln!(f, "distinguishability length {:.6e}", self.lambda_dist)?;
        writeln!(f, "decoherence time          {:.6e}", self.t_dec)?;
        writeln!(f, "distinguishability time   {:.6e}", self.t_dist)?;
        writeln!(f, "length ratio              {:.6}", self.length_ratio)?;
        writeln!(f, "time ratio                {:.6}", self.time_ratio)?;
        write!(
            f,
            "gain-disturbance product  {:.6e}",
            self.gain_disturbance_product
        )
    }
}

pub fn gap_report(params: &ValidatedParams, d: f64) -> Result<ScalesReport> {
    let lambda_db = thermal_de_broglie(params);
    let lambda_dist = distinguishability_length(params);
    let length_ratio = 2.0 * params.thermal_energy() / (params.hbar() * params.lambda());
    Ok(ScalesReport {
        lambda_db,
        lambda_dist,
        t_dec: decoherence_time(params, d)?,
        t_dist: distinguishability_time(params, d)?,
        length_ratio,
        time_ratio: length_ratio * length_ratio,
        gain_disturbance_product: lambda_db * lambda_dist,
        separation_d: d,
    })
}
