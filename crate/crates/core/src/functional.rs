//! Double integrals of the form
//!
//! ```text
//! I[k; f, g] = int_0^t d tau f(tau) int_0^tau d tau' k(tau - tau') g(tau')
//! ```
//!
//! for oscillator trajectories f, g and a stationary kernel k.
//!
//! Three routes are provided:
//!
//! * [`spectral_form`]: when k(u) = int_0^inf s(w) cos(w u) dw and f = g, the
//!   symmetric form equals (1/2) int_0^inf s(w) |F(w)|^2 dw with
//!   F(w) = int_0^t e^{i w tau} f(tau) d tau known in closed form. This needs
//!   only a one-dimensional integral and never evaluates k itself.
//! * [`toeplitz_form`]: direct two-dimensional quadrature in the lag
//!   u = tau - tau', I = int_0^t du k(u) W(u) with W(u) = int_u^t f(tau) g(tau - u) d tau.
//! * [`exponential_form`]: exact result for k(u) = e^{-a u}.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::cmath;
use crate::error::{Error, Result};
use crate::quad::{
    oscillatory_integral, Estimate, GaussRule, Integrator, OscillatoryOptions, Tolerance,
};
use crate::trajectory::BoundaryCurve;

/// Characteristic frequencies of the weight `s`; used to place breakpoints
/// and to decide where the large-frequency tail starts.
#[derive(Debug, Clone, Default)]
pub struct SpectralScales(pub Vec<f64>);

/// (1/2) int_0^inf s(w) |F(w)|^2 dw where F is the finite Fourier transform of
/// `f`. `s` must be non-negative, smooth and decay at least like 1/w.
pub fn spectral_form(
    f: &impl BoundaryCurve,
    s: impl Fn(f64) -> f64,
    scales: &SpectralScales,
    tol: f64,
) -> Result<Estimate<f64>> {
    let t = f.t_final();
    let half_period = PI / t;
    let largest = scales.0.iter().copied().fold(f.omega(), f64::max);
    // Beyond w_c the transform is split into smooth and oscillating parts.
    let w_c = (20.0 * largest).max(12.0 * half_period);

    let mut breaks: Vec<f64> = (0..)
        .map(|k| k as f64 * half_period)
        .take_while(|w| *w < w_c)
        .collect();
    breaks.extend(scales.0.iter().copied().filter(|w| *w > 0.0 && *w < w_c));
    breaks.push(f.omega());
    breaks.push(w_c);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let integrator =
        Integrator::new(Tolerance::new(0.0, tol)).with_max_segments(breaks.len() * 50 + 2000);
    let body =
        integrator.integrate_with_breaks(|w| 0.5 * s(w) * f.fourier(w).norm_sqr(), &breaks)?;

    // Tail: |F|^2 = |U|^2 + |V|^2 - 2 Re(e^{iwt} U conj(V)).
    let smooth = integrator.integrate_to_infinity(
        |w| {
            let (u, v) = f.fourier_asymptotic(w);
            0.5 * s(w) * (u.norm_sqr() + v.norm_sqr())
        },
        w_c,
    )?;
    let oscillating = oscillatory_integral(
        |w| {
            let (u, v) = f.fourier_asymptotic(w);
            -s(w) * u * v.conj()
        },
        t,
        w_c,
        w_c,
        &OscillatoryOptions::default(),
    )?;
    Ok(Estimate {
        value: body.value + smooth.value + oscillating.value.re,
        abs_err: body.abs_err + smooth.abs_err + oscillating.abs_err,
        evaluations: body.evaluations + smooth.evaluations + oscillating.evaluations,
    })
}

/// Band-limited (1/2) int_lo^hi s(w) |F(w)|^2 dw.
pub fn spectral_form_band(
    f: &impl BoundaryCurve,
    s: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Estimate<f64>> {
    let half_period = PI / f.t_final();
    let mut breaks = vec![lo];
    let mut w = (lo / half_period).floor() * half_period + half_period;
    while w < hi {
        breaks.push(w);
        w += half_period;
    }
    breaks.push(hi);
    Integrator::new(Tolerance::new(0.0, tol))
        .with_max_segments(breaks.len() * 50 + 2000)
        .integrate_with_breaks(|w| 0.5 * s(w) * f.fourier(w).norm_sqr(), &breaks)
}

/// Options for [`toeplitz_form`].
#[derive(Debug, Clone)]
pub struct ToeplitzOptions {
    pub tol: Tolerance,
    /// Lags where the kernel changes character (e.g. 1/Lambda).
    pub breaks: Vec<f64>,
    /// Use u = t x^3 so that an integrable singularity of k at u = 0 is
    /// flattened before the adaptive rule sees it.
    pub singular_at_zero: bool,
    pub max_segments: usize,
}

impl Default for ToeplitzOptions {
    fn default() -> Self {
        ToeplitzOptions {
            tol: Tolerance::new(0.0, 1e-10),
            breaks: Vec::new(),
            singular_at_zero: false,
            max_segments: 2000,
        }
    }
}

/// W(u) = int_u^t f(tau) g(tau - u) d tau on a composite Gauss rule fine
/// enough for the trigonometric integrand.
fn lag_overlap(rule: &GaussRule, f: &impl BoundaryCurve, g: &impl BoundaryCurve, u: f64) -> f64 {
    let t = f.t_final();
    let panels = (f.omega() * (t - u) / 2.0).ceil() as usize + 1;
    rule.composite(|tau| f.evaluate(tau) * g.evaluate(tau - u), u, t, panels)
}

/// Two-dimensional quadrature of I[k; f, g]. The kernel may fail (e.g. an
/// oscillatory quadrature that does not converge); the first failure is
/// returned.
pub fn toeplitz_form(
    k: impl Fn(f64) -> Result<f64>,
    f: &impl BoundaryCurve,
    g: &impl BoundaryCurve,
    opts: &ToeplitzOptions,
) -> Result<Estimate<f64>> {
    if f.t_final() != g.t_final() || f.omega() != g.omega() {
        return Err(Error::MismatchedTrajectories);
    }
    let t = f.t_final();
    let rule = GaussRule::new(20);
    let failure: Cell<Option<Error>> = Cell::new(None);
    let kernel = |u: f64| match k(u) {
        Ok(v) => v,
        Err(e) => {
            let prev = failure.take();
            failure.set(prev.or(Some(e)));
            0.0
        }
    };
    let integrator = Integrator::new(opts.tol).with_max_segments(opts.max_segments);
    let est = if opts.singular_at_zero {
        let mut points: Vec<f64> = std::iter::once(0.0)
            .chain(
                opts.breaks
                    .iter()
                    .filter(|b| **b > 0.0 && **b < t)
                    .map(|b| (b / t).cbrt()),
            )
            .chain(std::iter::once(1.0))
            .collect();
        points.sort_by(f64::total_cmp);
        integrator.integrate_with_breaks(
            |x| {
                let u = t * x * x * x;
                3.0 * t * x * x * kernel(u) * lag_overlap(&rule, f, g, u)
            },
            &points,
        )
    } else {
        let mut points: Vec<f64> = std::iter::once(0.0)
            .chain(opts.breaks.iter().copied().filter(|b| *b > 0.0 && *b < t))
            .chain(std::iter::once(t))
            .collect();
        points.sort_by(f64::total_cmp);
        integrator.integrate_with_breaks(|u| kernel(u) * lag_overlap(&rule, f, g, u), &points)
    };
    match failure.take() {
        Some(e) => Err(e),
        None => est,
    }
}

/// Exact I[k; f, g] for k(u) = e^{-a u}, a >= 0.
pub fn exponential_form(a: f64, f: &impl BoundaryCurve, g: &impl BoundaryCurve) -> f64 {
    let t = f.t_final();
    // int_0^t e^{s tau} d tau
    let ec = |s: Complex64| t * cmath::expm1_over(s * t);
    let mut acc = Complex64::default();
    for (cf, kf) in f.exponentials() {
        for (cg, kg) in g.exponentials() {
            let denom = Complex64::new(a, kg);
            let inner = ec(Complex64::new(0.0, kf + kg)) - ec(Complex64::new(-a, kf));
            acc += cf * cg * inner / denom;
        }
    }
    acc.re
}
