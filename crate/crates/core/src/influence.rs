//! Influence-functional exponents for a pair of system paths.
//!
//! ```text
//! log F = -(1/hbar) int_0^t int_0^tau Delta(tau) nu(tau - tau') Delta(tau')
//!         -(i/hbar) int_0^t int_0^tau Delta(tau) eta(tau - tau') Xbar(tau')
//! ```
//!
//! with Delta = X - X' and Xbar = (X + X')/2.

use crate::error::{Error, Result};
use crate::functional::{
    exponential_form, spectral_form, toeplitz_form, SpectralScales, ToeplitzOptions,
};
use crate::kernels::{noise_kernel, SpectralDensity};
use crate::params::{Constants, ValidatedParams};
use crate::quad::{Estimate, Tolerance};
use crate::scales::thermal_de_broglie;
use crate::trajectory::{BoundaryCurve, DeltaTrajectory, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfluenceMethod {
    ExactQuadrature,
    ClLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceResult {
    /// log |F|, never positive.
    pub re_exponent: f64,
    /// Phase of F.
    pub im_exponent: f64,
    pub method: InfluenceMethod,
}

/// int_0^t int_0^tau Delta nu Delta, computed in the frequency domain as
/// (1/2) int_0^inf J coth(hbar beta w/2) |int_0^t e^{i w tau} Delta|^2 dw.
pub fn noise_functional(
    d: &DeltaTrajectory,
    sd: &SpectralDensity,
    beta: f64,
    c: &Constants,
) -> Result<Estimate<f64>> {
    sd.validate()?;
    if !(beta > 0.0) {
        return Err(Error::NonPositiveParameter("beta"));
    }
    if d.is_zero() || sd.gamma == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            abs_err: 0.0,
            evaluations: 0,
        });
    }
    let hb = c.hbar * beta;
    let scales = SpectralScales(vec![sd.lambda, 1.0 / hb]);
    spectral_form(d, |w| sd.j(w) / (0.5 * hb * w).tanh(), &scales, 1e-12)
}

/// The same double integral by two-dimensional quadrature with the noise
/// kernel evaluated at every lag. Slow; an independent cross-check.
pub fn noise_functional_time_domain(
    d: &DeltaTrajectory,
    sd: &SpectralDensity,
    beta: f64,
    c: &Constants,
    rel_tol: f64,
) -> Result<Estimate<f64>> {
    let hb = c.hbar * beta;
    let opts = ToeplitzOptions {
        tol: Tolerance::new(0.0, rel_tol),
        breaks: vec![
            0.1 / sd.lambda,
            1.0 / sd.lambda,
            10.0 / sd.lambda,
            hb,
            10.0 * hb,
        ],
        singular_at_zero: true,
        max_segments: 400,
    };
    toeplitz_form(
        |u| noise_kernel(u, sd, beta, c).map(|k| k.value),
        d,
        d,
        &opts,
    )
}

/// Real exponent of the influence functional, -(1/hbar) int int Delta nu Delta.
pub fn influence_exponent_exact(
    d: &DeltaTrajectory,
    sd: &SpectralDensity,
    beta: f64,
    c: &Constants,
) -> Result<f64> {
    Ok(-noise_functional(d, sd, beta, c)?.value / c.hbar)
}

/// Imaginary exponent -(1/hbar) int int Delta eta Xbar with the closed-form
/// dissipation kernel M gamma Lambda^2 e^{-Lambda u}.
pub fn influence_phase(
    d: &DeltaTrajectory,
    xbar: &Trajectory,
    sd: &SpectralDensity,
    c: &Constants,
) -> Result<f64> {
    if d.t_final() != xbar.t_final() || d.omega() != xbar.omega() {
        return Err(Error::MismatchedTrajectories);
    }
    let amplitude = sd.mass * sd.gamma * sd.lambda * sd.lambda;
    Ok(-amplitude * exponential_form(sd.lambda, d, xbar) / c.hbar)
}

/// High-temperature limit -(gamma / lambda_dB^2) int Delta^2.
pub fn influence_cl_limit(d: &DeltaTrajectory, params: &ValidatedParams) -> f64 {
    let l = thermal_de_broglie(params);
    -params.gamma() / (l * l) * d.l2()
}

/// Both exponents for the path pair (x, x').
pub fn influence_functional(
    x: &Trajectory,
    x_prime: &Trajectory,
    params: &ValidatedParams,
) -> Result<InfluenceResult> {
    let d = crate::trajectory::delta(x, x_prime)?;
    let xbar = crate::trajectory::average(x, x_prime)?;
    let sd = params.spectral_density();
    let c = params.constants();
    Ok(InfluenceResult {
        re_exponent: influence_exponent_exact(&d, &sd, params.beta(), &c)?,
        im_exponent: influence_phase(&d, &xbar, &sd, &c)?,
        method: InfluenceMethod::ExactQuadrature,
    })
}

/// The high-temperature real exponent paired with the exact phase.
pub fn influence_functional_cl(
    x: &Trajectory,
    x_prime: &Trajectory,
    params: &ValidatedParams,
) -> Result<InfluenceResult> {
    let d = crate::trajectory::delta(x, x_prime)?;
    let xbar = crate::trajectory::average(x, x_prime)?;
    Ok(InfluenceResult {
        re_exponent: influence_cl_limit(&d, params),
        im_exponent: influence_phase(&d, &xbar, &params.spectral_density(), &params.constants())?,
        method: InfluenceMethod::ClLimit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::dissipation_kernel_quadrature;
    use crate::params::{validate_params, PhysicalParams};
    use crate::scales::decoherence_time;
    use crate::trajectory::boundary_trajectory;
    use approx::assert_relative_eq;

    const NAT: Constants = Constants {
        hbar: 1.0,
        k_b: 1.0,
    };

    fn params(temperature: f64) -> ValidatedParams {
        validate_params(PhysicalParams {
            mass: 1.0,
            omega: 1.0,
            gamma: 0.1,
            lambda: 20.0,
            temperature,
            constants: NAT,
        })
        .unwrap()
    }

    #[test]
    fn zero_delta_gives_unit_modulus() {
        let d = DeltaTrajectory::new(0.0, 0.0, 2.0, 1.0).unwrap();
        let p = params(20.0);
        assert_eq!(
            influence_exponent_exact(&d, &p.spectral_density(), p.beta(), &NAT).unwrap(),
            0.0
        );
        assert_eq!(influence_cl_limit(&d, &p), 0.0);
        let xbar = boundary_trajectory(1.0, 0.2, 2.0, 1.0).unwrap();
        assert_eq!(
            influence_phase(&d, &xbar, &p.spectral_density(), &NAT).unwrap(),
            0.0
        );
    }

    #[test]
    fn zero_mean_path_gives_zero_phase() {
        let d = DeltaTrajectory::new(1.0, 0.3, 2.0, 1.0).unwrap();
        let xbar = boundary_trajectory(0.0, 0.0, 2.0, 1.0).unwrap();
        let p = params(20.0);
        assert_eq!(
            influence_phase(&d, &xbar, &p.spectral_density(), &NAT).unwrap(),
            0.0
        );
    }

    #[test]
    fn phase_requires_common_window() {
        let d = DeltaTrajectory::new(1.0, 0.3, 2.0, 1.0).unwrap();
        let xbar = boundary_trajectory(1.0, 0.0, 2.5, 1.0).unwrap();
        let p = params(20.0);
        assert_eq!(
            influence_phase(&d, &xbar, &p.spectral_density(), &NAT),
            Err(Error::MismatchedTrajectories)
        );
    }

    #[test]
    fn real_exponent_is_quadratic() {
        let d = DeltaTrajectory::new(1.0, 0.3, 2.0, 1.0).unwrap();
        let p = params(20.0);
        let sd = p.spectral_density();
        let a = influence_exponent_exact(&d, &sd, p.beta(), &NAT).unwrap();
        let b = influence_exponent_exact(&d.scaled(3.0), &sd, p.beta(), &NAT).unwrap();
        assert!(a < 0.0);
        assert_relative_eq!(b, 9.0 * a, max_relative = 1e-10);
    }

    #[test]
    fn spectral_route_matches_time_domain_quadrature() {
        let d = DeltaTrajectory::new(1.0, 0.3, 2.0, 1.0).unwrap();
        let p = params(20.0);
        let sd = p.spectral_density();
        let spec = noise_functional(&d, &sd, p.beta(), &NAT).unwrap();
        let direct = noise_functional_time_domain(&d, &sd, p.beta(), &NAT, 1e-9).unwrap();
        assert_relative_eq!(spec.value, direct.value, max_relative = 1e-7);
    }

    #[test]
    fn phase_matches_quadrature_with_numerical_eta() {
        let d = DeltaTrajectory::new(1.0, 0.3, 2.0, 1.0).unwrap();
        let xbar = boundary_trajectory(0.5, -0.7, 2.0, 1.0).unwrap();
        let p = params(20.0);
        let sd = p.spectral_density();
        let opts = ToeplitzOptions {
            tol: Tolerance::new(0.0, 1e-11),
            breaks: vec![0.1 / sd.lambda, 1.0 / sd.lambda, 10.0 / sd.lambda],
            ..Default::default()
        };
        let quad = toeplitz_form(
            |u| {
                if u == 0.0 {
                    Ok(sd.mass * sd.gamma * sd.lambda * sd.lambda)
                } else {
                    dissipation_kernel_quadrature(u, &sd).map(|k| k.value)
                }
            },
            &d,
            &xbar,
            &opts,
        )
        .unwrap();
        let closed = influence_phase(&d, &xbar, &sd, &NAT).unwrap();
        assert_relative_eq!(closed, -quad.value, max_relative = 1e-8);
    }

    #[test]
    fn cl_exponent_proportional_to_temperature() {
        let d = DeltaTrajectory::new(1.0, 0.3, 2.0, 1.0).unwrap();
        let a = influence_cl_limit(&d, &params(10.0));
        let b = influence_cl_limit(&d, &params(30.0));
        assert_relative_eq!(b, 3.0 * a, max_relative = 1e-14);
    }

    #[test]
    fn constant_separation_reaches_one_at_decoherence_time() {
        // Omega t <= 0.1 with equal end offsets keeps Delta ~ d
        let p = validate_params(PhysicalParams {
            mass: 1.0,
            omega: 0.01,
            gamma: 0.1,
            lambda: 20.0,
            temperature: 0.5,
            constants: NAT,
        })
        .unwrap();
        let sep = 2.0;
        let t_dec = decoherence_time(&p, sep).unwrap();
        let d = DeltaTrajectory::new(sep, sep, t_dec, p.omega()).unwrap();
        assert!(p.omega() * t_dec <= 0.1);
        let exponent = influence_cl_limit(&d, &p);
        assert!((exponent + 1.0).abs() < 0.2, "{exponent}");
    }
}
