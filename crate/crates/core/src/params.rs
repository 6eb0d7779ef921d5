use crate::error::{Error, Result};

/// Reduced Planck constant, CODATA 2018 (exact since the SI redefinition).
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Boltzmann constant, CODATA 2018 (exact).
pub const K_B_SI: f64 = 1.380_649e-23;

pub const DEFAULT_REGIME_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub hbar: f64,
    pub k_b: f64,
}

impl Constants {
    pub const SI: Constants = Constants {
        hbar: HBAR_SI,
        k_b: K_B_SI,
    };

    /// hbar = k_B = 1.
    pub const fn natural() -> Self {
        Constants {
            hbar: 1.0,
            k_b: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("hbar", self.hbar)?;
        positive("k_B", self.k_b)
    }

    /// Inverse temperature 1/(k_B T).
    pub fn beta(&self, temperature: f64) -> f64 {
        1.0 / (self.k_b * temperature)
    }
}

impl Default for Constants {
    fn default() -> Self {
        Constants::SI
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Central mass.
    pub mass: f64,
    /// Central oscillator frequency.
    pub omega: f64,
    /// Effective coupling strength.
    pub gamma: f64,
    /// Lorentz-Drude cutoff frequency.
    pub lambda: f64,
    /// Bath temperature.
    pub temperature: f64,
    pub constants: Constants,
}

/// Parameters that passed [`validate_params`]. Cheap to copy; the only way to
/// build one is through validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams(PhysicalParams);

impl ValidatedParams {
    pub fn get(&self) -> &PhysicalParams {
        &self.0
    }

    pub fn into_inner(self) -> PhysicalParams {
        self.0
    }

    pub fn mass(&self) -> f64 {
        self.0.mass
    }

    pub fn omega(&self) -> f64 {
        self.0.omega
    }

    pub fn gamma(&self) -> f64 {
        self.0.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.0.lambda
    }

    pub fn temperature(&self) -> f64 {
        self.0.temperature
    }

    pub fn constants(&self) -> Constants {
        self.0.constants
    }

    pub fn hbar(&self) -> f64 {
        self.0.constants.hbar
    }

    pub fn k_b(&self) -> f64 {
        self.0.constants.k_b
    }

    pub fn beta(&self) -> f64 {
        self.0.constants.beta(self.0.temperature)
    }

    /// k_B T.
    pub fn thermal_energy(&self) -> f64 {
        self.0.constants.k_b * self.0.temperature
    }

    pub fn spectral_density(&self) -> crate::kernels::SpectralDensity {
        crate::kernels::SpectralDensity::new(self.0.mass, self.0.gamma, self.0.lambda)
    }

    /// Same parameters at a different temperature.
    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        validate_params(PhysicalParams {
            temperature,
            ..self.0
        })
    }
}

impl AsRef<PhysicalParams> for ValidatedParams {
    fn as_ref(&self) -> &PhysicalParams {
        &self.0
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    // NaN fails this comparison as well
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter(name))
    }
}

pub fn validate_params(params: PhysicalParams) -> Result<ValidatedParams> {
    positive("M", params.mass)?;
    positive("Omega", params.omega)?;
    positive("gamma", params.gamma)?;
    positive("Lambda", params.lambda)?;
    positive("T", params.temperature)?;
    params.constants.validate()?;
    Ok(ValidatedParams(params))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    /// k_B T / (hbar Lambda)
    pub r_temp: f64,
    /// Lambda / Omega
    pub r_cutoff: f64,
    pub in_cl_regime: bool,
    pub thresholds: (f64, f64),
}

/// Checks the high-temperature, high-cutoff ordering k_B T/hbar >> Lambda >> Omega
/// against the given (temperature, cutoff) thresholds.
pub fn cl_regime_check(params: &ValidatedParams, thresholds: (f64, f64)) -> Result<RegimeReport> {
    if !(thresholds.0 > 1.0 && thresholds.1 > 1.0) {
        return Err(Error::InvalidArgument(
            "thresholds",
            format!("both must exceed 1, got {thresholds:?}"),
        ));
    }
    let r_temp = params.thermal_energy() / (params.hbar() * params.lambda());
    let r_cutoff = params.lambda() / params.omega();
    Ok(RegimeReport {
        r_temp,
        r_cutoff,
        in_cl_regime: r_temp > thresholds.0 && r_cutoff > thresholds.1,
        thresholds,
    })
}
