//! Bath kernels for the Lorentz-Drude spectral density
//! J(w) = (2 M gamma / pi) w Lambda^2 / (Lambda^2 + w^2):
//!
//! * noise kernel       nu(tau)  = int_0^inf J(w) coth(hbar beta w / 2) cos(w tau) dw
//! * dissipation kernel eta(tau) = int_0^inf J(w) sin(w tau) dw
//! * QFI kernel         phi(tau) = int_0^inf J(w) tanh(hbar beta w / 2) cos(w tau) dw
//!
//! The quadrature paths move the integration line to Im w = sigma inside the
//! strip where the integrand is analytic. The vertical leg [0, i sigma]
//! contributes only to the component that is discarded (the integrand is real
//! on the imaginary axis for the even weights, imaginary for J alone), so the
//! kernel equals Re (or Im) of the shifted integral exactly. On the shifted
//! line the oscillatory integrand is damped by e^{-sigma tau}, which removes
//! the catastrophic cancellation that limits real-axis quadrature at large
//! Lambda tau.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::cmath;
use crate::error::{Error, Result};
use crate::params::{Constants, ValidatedParams};
use crate::quad::{oscillatory_integral, Integrator, OscillatoryOptions, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub mass: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl SpectralDensity {
    /// `gamma` may be zero (decoupled bath); mass and cutoff must be positive.
    pub fn new(mass: f64, gamma: f64, lambda: f64) -> Self {
        SpectralDensity {
            mass,
            gamma,
            lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::NonPositiveParameter("M"));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::NonPositiveParameter("Lambda"));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::NonPositiveParameter("gamma"));
        }
        Ok(())
    }

    fn prefactor(&self) -> f64 {
        2.0 * self.mass * self.gamma / PI
    }

    pub fn j(&self, w: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        self.prefactor() * w * l2 / (l2 + w * w)
    }

    pub fn j_complex(&self, w: Complex64) -> Complex64 {
        let l2 = self.lambda * self.lambda;
        self.prefactor() * w * l2 / (l2 + w * w)
    }

    /// Closed-form int_lo^hi J(w) dw.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        0.5 * self.prefactor() * l2 * ((l2 + hi * hi) / (l2 + lo * lo)).ln()
    }
}

/// A kernel value with an error estimate; `terms` counts series terms or
/// integrand evaluations depending on the method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEstimate {
    pub value: f64,
    pub abs_err: f64,
    pub terms: usize,
}

impl KernelEstimate {
    fn zero() -> Self {
        KernelEstimate {
            value: 0.0,
            abs_err: 0.0,
            terms: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatsubaraConfig {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl MatsubaraConfig {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::InvalidArgument(
                "rel_tol",
                format!("{rel_tol} not in (0, 1)"),
            ));
        }
        if max_terms == 0 {
            return Err(Error::InvalidArgument(
                "max_terms",
                "must be at least 1".into(),
            ));
        }
        Ok(MatsubaraConfig { rel_tol, max_terms })
    }
}

impl Default for MatsubaraConfig {
    fn default() -> Self {
        MatsubaraConfig {
            rel_tol: 1e-12,
            max_terms: 2_000_000,
        }
    }
}

/// w delta(tau) + A e^{-r tau}: the high-temperature form of a kernel after the
/// sharply peaked part has been collapsed onto a one-sided delta of full weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredKernel {
    pub delta_weight: f64,
    pub smooth_amplitude: f64,
    pub smooth_rate: f64,
}

impl StructuredKernel {
    pub fn smooth(&self, tau: f64) -> f64 {
        self.smooth_amplitude * (-self.smooth_rate * tau).exp()
    }

    /// The kernel before the delta limit: the delta is represented by the
    /// normalized one-sided exponential r e^{-r tau}.
    pub fn regularized(&self, tau: f64) -> f64 {
        (self.delta_weight * self.smooth_rate + self.smooth_amplitude)
            * (-self.smooth_rate * tau).exp()
    }

    /// int_0^tau K(tau - s) f(s) ds with the delta taking full weight at s = tau.
    pub fn one_sided_action(&self, f: impl Fn(f64) -> f64, tau: f64) -> Result<f64> {
        let r = self.smooth_rate;
        let smooth = Integrator::new(Tolerance::new(0.0, 1e-12))
            .integrate(|s| (-r * (tau - s)).exp() * f(s), 0.0, tau)?
            .value;
        Ok(self.delta_weight * f(tau) + self.smooth_amplitude * smooth)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::DivergentAtZero(tau))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter("beta"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Component {
    Re,
    Im,
}

/// Shifted-contour evaluation of int_0^inf g(w) e^{i w tau} dw.
fn shifted_transform(
    g: impl Fn(Complex64) -> Complex64,
    tau: f64,
    sigma: f64,
    smooth_from: f64,
    component: Component,
) -> Result<KernelEstimate> {
    let line = |x: f64| g(Complex64::new(x, sigma));
    let est = oscillatory_integral(line, tau, 0.0, smooth_from, &OscillatoryOptions::default())?;
    let damping = (-sigma * tau).exp();
    let v = est.value * damping;
    let value = match component {
        Component::Re => v.re,
        Component::Im => v.im,
    };
    Ok(KernelEstimate {
        value,
        abs_err: est.abs_err * damping,
        terms: est.evaluations,
    })
}

const SHIFT_FRACTION: f64 = 0.75;

fn smooth_from(sd: &SpectralDensity, hbar_beta: f64) -> f64 {
    (5.0 * sd.lambda).max(5.0 / hbar_beta)
}

pub fn noise_kernel(
    tau: f64,
    sd: &SpectralDensity,
    beta: f64,
    c: &Constants,
) -> Result<KernelEstimate> {
    check_tau(tau)?;
    check_beta(beta)?;
    sd.validate()?;
    if sd.gamma == 0.0 {
        return Ok(KernelEstimate::zero());
    }
    let hb = c.hbar * beta;
    // coth(hb w/2) has poles at w = 2 pi i n / hb, n >= 1 (n = 0 cancels against J)
    let sigma = SHIFT_FRACTION * sd.lambda.min(2.0 * PI / hb);
    shifted_transform(
        |w| sd.j_complex(w) * cmath::coth(0.5 * hb * w),
        tau,
        sigma,
        smooth_from(sd, hb),
        Component::Re,
    )
}

/// Closed form M gamma Lambda^2 e^{-Lambda tau}.
pub fn dissipation_kernel(tau: f64, sd: &SpectralDensity) -> f64 {
    sd.mass * sd.gamma * sd.lambda * sd.lambda * (-sd.lambda * tau).exp()
}

/// eta(tau) by oscillatory quadrature of the sine transform; an independent
/// check of [`dissipation_kernel`].
pub fn dissipation_kernel_quadrature(tau: f64, sd: &SpectralDensity) -> Result<KernelEstimate> {
    check_tau(tau)?;
    sd.validate()?;
    if sd.gamma == 0.0 {
        return Ok(KernelEstimate::zero());
    }
    shifted_transform(
        |w| sd.j_complex(w),
        tau,
        SHIFT_FRACTION * sd.lambda,
        5.0 * sd.lambda,
        Component::Im,
    )
}

pub fn qfi_kernel_quadrature(
    tau: f64,
    sd: &SpectralDensity,
    beta: f64,
    c: &Constants,
) -> Result<KernelEstimate> {
    check_tau(tau)?;
    check_beta(beta)?;
    sd.validate()?;
    if sd.gamma == 0.0 {
        return Ok(KernelEstimate::zero());
    }
    let hb = c.hbar * beta;
    // tanh(hb w/2) has poles at w = (2n+1) pi i / hb
    let sigma = SHIFT_FRACTION * sd.lambda.min(PI / hb);
    shifted_transform(
        |w| sd.j_complex(w) * cmath::tanh(0.5 * hb * w),
        tau,
        sigma,
        smooth_from(sd, hb),
        Component::Re,
    )
}

/// Fermionic Matsubara frequency (2n+1) pi / (hbar beta).
pub fn fermionic_frequency(n: usize, hbar_beta: f64) -> f64 {
    (2 * n + 1) as f64 * PI / hbar_beta
}

pub(crate) const POLE_COLLISION_TOL: f64 = 1e-9;

/// Rejects cutoffs that sit on a fermionic Matsubara frequency.
pub(crate) fn check_pole_collision(lambda: f64, hbar_beta: f64) -> Result<()> {
    let x = (lambda * hbar_beta / PI - 1.0) / 2.0;
    if x < -0.5 {
        return Ok(());
    }
    let lo = x.floor().max(0.0) as usize;
    for n in lo..=lo + 1 {
        let nu = fermionic_frequency(n, hbar_beta);
        if ((lambda - nu) / lambda).abs() < POLE_COLLISION_TOL {
            return Err(Error::PoleCollision { n, nu_n: nu });
        }
    }
    Ok(())
}

/// QFI kernel from the fermionic Matsubara series
///
/// ```text
/// phi(tau) = (4 M gamma Lambda / hbar beta) sum_n [e^{-Lambda tau} - (nu_n/Lambda) e^{-nu_n tau}] / [1 - (nu_n/Lambda)^2].
/// ```
///
/// The e^{-Lambda tau} pieces only decay like 1/n^2, so they are summed in
/// closed form: sum_n 1/(1 - (nu_n/Lambda)^2) = -(z/2) tan z with
/// z = hbar beta Lambda / 2. The remaining terms decay geometrically like
/// e^{-nu_n tau}; summation stops once a geometric bound on the remainder is
/// below `cfg.rel_tol` times the running sum.
pub fn qfi_kernel_matsubara(
    tau: f64,
    sd: &SpectralDensity,
    beta: f64,
    c: &Constants,
    cfg: &MatsubaraConfig,
) -> Result<KernelEstimate> {
    check_tau(tau)?;
    check_beta(beta)?;
    sd.validate()?;
    if sd.gamma == 0.0 {
        return Ok(KernelEstimate::zero());
    }
    let hb = c.hbar * beta;
    let lambda = sd.lambda;
    check_pole_collision(lambda, hb)?;
    let pre = 4.0 * sd.mass * sd.gamma * lambda / hb;
    let z = 0.5 * hb * lambda;
    let resummed = -0.5 * z * z.tan() * (-lambda * tau).exp();

    let ratio = (-2.0 * PI * tau / hb).exp();
    let mut sum = resummed;
    let mut terms = 0;
    let mut last = 0.0;
    for n in 0..cfg.max_terms {
        let x = fermionic_frequency(n, hb) / lambda;
        let term = x * (-fermionic_frequency(n, hb) * tau).exp() / (x * x - 1.0);
        sum += term;
        terms = n + 1;
        last = term;
        // x/(x^2-1) is decreasing once x > sqrt(3)... use x > 2 to be safe
        if x > 2.0 {
            let tail = term.abs() * ratio / (1.0 - ratio);
            if tail <= cfg.rel_tol * sum.abs() || term == 0.0 {
                let roundoff =
                    4.0 * f64::EPSILON * (resummed.abs() + sum.abs()) * (terms as f64).sqrt();
                return Ok(KernelEstimate {
                    value: pre * sum,
                    abs_err: pre * (tail + roundoff),
                    terms,
                });
            }
        }
    }
    Err(Error::SeriesNoConvergence {
        terms,
        last_term: pre * last,
        partial_sum: pre * sum,
    })
}

/// The first `n_terms` terms of the Matsubara series summed as written, with
/// no resummation; used to study convergence.
pub fn qfi_kernel_matsubara_partial(
    tau: f64,
    sd: &SpectralDensity,
    beta: f64,
    c: &Constants,
    n_terms: usize,
) -> Result<f64> {
    check_tau(tau)?;
    check_beta(beta)?;
    let hb = c.hbar * beta;
    let lambda = sd.lambda;
    check_pole_collision(lambda, hb)?;
    let pre = 4.0 * sd.mass * sd.gamma * lambda / hb;
    let e_l = (-lambda * tau).exp();
    let sum: f64 = (0..n_terms)
        .map(|n| {
            let nu = fermionic_frequency(n, hb);
            let x = nu / lambda;
            (e_l - x * (-nu * tau).exp()) / (1.0 - x * x)
        })
        .sum();
    Ok(pre * sum)
}

/// High-temperature noise kernel: coth x ~ 1/x gives
/// nu(tau) ~ (2 M gamma Lambda / hbar beta) e^{-Lambda tau}, which collapses to
/// a full-weight one-sided delta with weight 2 M gamma / (hbar beta).
pub fn noise_kernel_high_t(params: &ValidatedParams) -> StructuredKernel {
    StructuredKernel {
        delta_weight: 2.0 * params.mass() * params.gamma() / (params.hbar() * params.beta()),
        smooth_amplitude: 0.0,
        smooth_rate: params.lambda(),
    }
}

/// High-temperature QFI kernel gamma M hbar beta (Lambda^2 delta(tau) - Lambda^3 e^{-Lambda tau} / 2).
pub fn qfi_kernel_high_t(params: &ValidatedParams) -> StructuredKernel {
    let l = params.lambda();
    let w = params.gamma() * params.mass() * params.hbar() * params.beta() * l * l;
    StructuredKernel {
        delta_weight: w,
        smooth_amplitude: -0.5 * w * l,
        smooth_rate: l,
    }
}

/// Per-frequency spectral coefficients of the three kernels. Convention: a
/// kernel k(tau) = int_0^inf k~(w) cos(w tau) dw (sine for eta) has
/// coefficient k~(w), so nu~ = J coth, phi~ = J tanh and eta~ = J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCoefficients {
    pub nu: f64,
    pub phi: f64,
    pub eta: f64,
    pub tanh: f64,
    pub coth: f64,
}

pub fn spectral_coefficients(
    w: f64,
    sd: &SpectralDensity,
    beta: f64,
    c: &Constants,
) -> SpectralCoefficients {
    let x = 0.5 * c.hbar * beta * w;
    let th = x.tanh();
    let cth = 1.0 / th;
    let j = sd.j(w);
    SpectralCoefficients {
        nu: j * cth,
        phi: j * th,
        eta: j,
        tanh: th,
        coth: cth,
    }
}

fn normalized_residual(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    }
}

/// Residuals of phi~ = nu~ th^2, phi~ = eta~ th and nu~ = eta~ cth.
pub fn spectral_relation_check(
    w: f64,
    sd: &SpectralDensity,
    beta: f64,
    c: &Constants,
) -> Result<[f64; 3]> {
    if !(w > 0.0) {
        return Err(Error::NonPositiveParameter("omega"));
    }
    let s = spectral_coefficients(w, sd, beta, c);
    Ok([
        normalized_residual(s.phi, s.nu * s.tanh * s.tanh),
        normalized_residual(s.phi, s.eta * s.tanh),
        normalized_residual(s.nu, s.eta * s.coth),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate_params, PhysicalParams};
    use approx::assert_relative_eq;

    const NAT: Constants = Constants {
        hbar: 1.0,
        k_b: 1.0,
    };

    fn params(mass: f64, gamma: f64, lambda: f64, temperature: f64) -> ValidatedParams {
        validate_params(PhysicalParams {
            mass,
            omega: 1.0,
            gamma,
            lambda,
            temperature,
            constants: NAT,
        })
        .unwrap()
    }

    #[test]
    fn zero_coupling_gives_zero_kernels() {
        let sd = SpectralDensity::new(1.0, 0.0, 10.0);
        let cfg = MatsubaraConfig::default();
        assert_eq!(noise_kernel(0.3, &sd, 1.0, &NAT).unwrap().value, 0.0);
        assert_eq!(
            qfi_kernel_quadrature(0.3, &sd, 1.0, &NAT).unwrap().value,
            0.0
        );
        assert_eq!(
            qfi_kernel_matsubara(0.3, &sd, 1.0, &NAT, &cfg)
                .unwrap()
                .value,
            0.0
        );
        assert_eq!(dissipation_kernel(0.3, &sd), 0.0);
    }

    #[test]
    fn tau_zero_is_rejected() {
        let sd = SpectralDensity::new(1.0, 0.1, 10.0);
        assert_eq!(
            noise_kernel(0.0, &sd, 1.0, &NAT),
            Err(Error::DivergentAtZero(0.0))
        );
        assert!(matches!(
            qfi_kernel_quadrature(-1.0, &sd, 1.0, &NAT),
            Err(Error::DivergentAtZero(_))
        ));
        assert!(matches!(
            qfi_kernel_matsubara(0.0, &sd, 1.0, &NAT, &MatsubaraConfig::default()),
            Err(Error::DivergentAtZero(_))
        ));
    }

    #[test]
    fn dissipation_closed_form_example() {
        let sd = SpectralDensity::new(1.0, 1.0, 2.0);
        assert_relative_eq!(
            dissipation_kernel(1.0, &sd),
            4.0 * (-2f64).exp(),
            max_relative = 1e-15
        );
        let q = dissipation_kernel_quadrature(1.0, &sd).unwrap();
        assert_relative_eq!(q.value, 4.0 * (-2f64).exp(), max_relative = 1e-10);
        // Lambda tau = 30 is essentially zero
        assert!(dissipation_kernel(15.0, &sd) < 1e-12);
        let doubled = SpectralDensity::new(1.0, 2.0, 2.0);
        assert_relative_eq!(
            dissipation_kernel(0.7, &doubled),
            2.0 * dissipation_kernel(0.7, &sd)
        );
    }

    #[test]
    fn dissipation_quadrature_across_decades() {
        let sd = SpectralDensity::new(1.3, 0.2, 10.0);
        for lt in [0.1, 1.0, 5.0, 30.0] {
            let tau = lt / 10.0;
            let q = dissipation_kernel_quadrature(tau, &sd).unwrap();
            assert_relative_eq!(q.value, dissipation_kernel(tau, &sd), max_relative = 1e-8);
        }
    }

    #[test]
    fn noise_kernel_high_temperature_form() {
        // hbar beta Lambda = 0.01, Lambda tau = 5
        let sd = SpectralDensity::new(1.0, 0.1, 10.0);
        let beta = 0.001;
        let tau = 0.5;
        let nu = noise_kernel(tau, &sd, beta, &NAT).unwrap();
        let closed = 2.0 * sd.mass * sd.gamma * sd.lambda / beta * (-sd.lambda * tau).exp();
        assert!(
            (nu.value / closed - 1.0).abs() < 0.02,
            "{} vs {}",
            nu.value,
            closed
        );
    }

    #[test]
    fn noise_kernel_matches_bosonic_series() {
        // nu(tau) = (2 M gamma Lambda^2 / hbar beta) [ e^{-Lambda tau}/Lambda
        //   + 2 sum_{n>=1} (Lambda e^{-Lambda tau} - w_n e^{-w_n tau}) / (Lambda^2 - w_n^2) ]
        // with bosonic w_n = 2 pi n / hbar beta.
        let sd = SpectralDensity::new(1.0, 0.1, 10.0);
        for (beta, tau) in [(1.0, 0.05), (0.1, 0.3), (0.3, 1.0)] {
            let l = sd.lambda;
            // sum_{n>=1} 1/(Lambda^2 - w_n^2) via sum 1/(n^2 - a^2) = 1/(2a^2) - pi cot(pi a)/(2a)
            let a = beta * l / (2.0 * PI);
            let cot_sum = 1.0 / (2.0 * a * a) - PI / (PI * a).tan() / (2.0 * a);
            let resummed = -(beta / (2.0 * PI)).powi(2) * cot_sum;
            let mut s = (-l * tau).exp() / l + 2.0 * l * (-l * tau).exp() * resummed;
            for n in 1..10_000 {
                let w = 2.0 * PI * n as f64 / beta;
                s -= 2.0 * w * (-w * tau).exp() / (l * l - w * w);
            }
            let series = 2.0 * sd.mass * sd.gamma * l * l / beta * s;
            let q = noise_kernel(tau, &sd, beta, &NAT).unwrap();
            assert_relative_eq!(q.value, series, max_relative = 1e-8);
        }
    }

    #[test]
    fn qfi_quadrature_matches_matsubara_reference_points() {
        let sd = SpectralDensity::new(1.0, 1.0, 10.0);
        let cfg = MatsubaraConfig::default();
        for tau in [0.1, 1.0, 5.0] {
            let q = qfi_kernel_quadrature(tau, &sd, 1.0, &NAT).unwrap();
            let m = qfi_kernel_matsubara(tau, &sd, 1.0, &NAT, &cfg).unwrap();
            assert_relative_eq!(q.value, m.value, max_relative = 1e-6);
        }
    }

    #[test]
    fn temperature_ordering_at_moderate_tau() {
        let sd = SpectralDensity::new(1.0, 0.1, 10.0);
        let tau = 0.1;
        for beta in [2.0, 0.5, 0.2] {
            let phi_cold = qfi_kernel_quadrature(tau, &sd, beta, &NAT).unwrap().value;
            let phi_hot = qfi_kernel_quadrature(tau, &sd, 0.5 * beta, &NAT)
                .unwrap()
                .value;
            let nu_cold = noise_kernel(tau, &sd, beta, &NAT).unwrap().value;
            let nu_hot = noise_kernel(tau, &sd, 0.5 * beta, &NAT).unwrap().value;
            assert!(phi_hot < phi_cold, "beta = {beta}");
            assert!(nu_hot > nu_cold, "beta = {beta}");
        }
    }

    #[test]
    fn matsubara_partial_sums_converge_monotonically() {
        let sd = SpectralDensity::new(1.0, 1.0, 10.0);
        let tau = 0.1;
        let converged = qfi_kernel_matsubara(tau, &sd, 1.0, &NAT, &MatsubaraConfig::default())
            .unwrap()
            .value;
        let errs: Vec<f64> = [2, 8, 32, 128, 512, 2048]
            .iter()
            .map(|&n| {
                (qfi_kernel_matsubara_partial(tau, &sd, 1.0, &NAT, n).unwrap() - converged).abs()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn pole_collision_detected() {
        // Lambda = nu_1 = 3 pi / (hbar beta)
        let sd = SpectralDensity::new(1.0, 1.0, 3.0 * PI);
        assert!(matches!(
            qfi_kernel_matsubara(1.0, &sd, 1.0, &NAT, &MatsubaraConfig::default()),
            Err(Error::PoleCollision { n: 1, .. })
        ));
    }

    #[test]
    fn series_budget_exhaustion_reported() {
        let sd = SpectralDensity::new(1.0, 1.0, 10.0);
        let cfg = MatsubaraConfig::new(1e-12, 3).unwrap();
        assert!(matches!(
            qfi_kernel_matsubara(0.01, &sd, 1.0, &NAT, &cfg),
            Err(Error::SeriesNoConvergence { terms: 3, .. })
        ));
    }

    #[test]
    fn high_t_weights() {
        let p = params(1.0, 0.1, 100.0, 10.0);
        assert_relative_eq!(
            noise_kernel_high_t(&p).delta_weight,
            2.0,
            max_relative = 1e-15
        );
        let hot = p.with_temperature(20.0).unwrap();
        assert_relative_eq!(
            noise_kernel_high_t(&hot).delta_weight,
            4.0,
            max_relative = 1e-15
        );
        let strong = params(1.0, 0.3, 100.0, 10.0);
        assert_relative_eq!(
            noise_kernel_high_t(&strong).delta_weight,
            6.0,
            max_relative = 1e-15
        );

        let q = qfi_kernel_high_t(&params(1.0, 1.0, 100.0, 100.0));
        assert_relative_eq!(q.delta_weight, 100.0, max_relative = 1e-15);
        assert_relative_eq!(q.smooth_amplitude, -5000.0, max_relative = 1e-15);
        assert_relative_eq!(
            q.delta_weight / q.smooth_amplitude.abs(),
            2.0 / 100.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn noise_delta_weight_matches_collapsed_quadrature() {
        // int_0^inf nu(tau) d tau = pi/2 J(w) coth / w at w -> 0 = 2 M gamma / (hbar beta),
        // the weight the high-T delta carries.
        let p = params(1.0, 0.1, 10.0, 1000.0);
        let sd = p.spectral_density();
        let quad = Integrator::new(Tolerance::new(0.0, 1e-7)).with_max_segments(300);
        let body = quad
            .integrate(
                |tau: f64| noise_kernel(tau, &sd, p.beta(), &NAT).unwrap().value,
                1e-9,
                3.0,
            )
            .unwrap()
            .value;
        assert_relative_eq!(
            body,
            noise_kernel_high_t(&p).delta_weight,
            max_relative = 2e-3
        );
    }

    #[test]
    fn qfi_one_sided_action_halves_delta_weight() {
        let p = params(1.0, 1.0, 1000.0, 1000.0);
        let k = qfi_kernel_high_t(&p);
        let f = |s: f64| 0.3 * (1.3 * s).sin() + (0.7 * s).cos();
        for tau in [0.5, 1.0, 2.0] {
            let action = k.one_sided_action(f, tau).unwrap();
            let expected = 0.5 * k.delta_weight * f(tau);
            assert!((action / expected - 1.0).abs() < 5e-3, "tau = {tau}");
        }
    }

    #[test]
    fn spectral_relations_hold() {
        let sd = SpectralDensity::new(1.0, 0.1, 10.0);
        for (w, beta) in [(0.1, 1.0), (50.0, 0.02), (3.0, 7.0)] {
            let r = spectral_relation_check(w, &sd, beta, &NAT).unwrap();
            assert!(r.iter().all(|x| *x < 1e-12), "{r:?}");
        }
        let far = spectral_coefficients(1e4, &sd, 1.0, &NAT);
        assert_relative_eq!(far.phi / far.eta, 1.0, max_relative = 1e-12);
        let cold = spectral_coefficients(2.0, &sd, 1e3, &NAT);
        assert_relative_eq!(cold.phi, cold.eta, max_relative = 1e-12);
        assert_relative_eq!(cold.nu, cold.eta, max_relative = 1e-12);
    }

    #[test]
    fn spectral_ordering() {
        let sd = SpectralDensity::new(1.0, 0.1, 10.0);
        for w in [1e-3, 0.1, 1.0, 10.0, 1e3] {
            let s = spectral_coefficients(w, &sd, 0.4, &NAT);
            assert!(s.nu >= s.phi && s.phi >= 0.0);
        }
    }
}
