//! Generalized overlap of the environment's conditional states.
//!
//! A bath mode starting thermal and driven by the system along X(tau) ends up
//! displaced by alpha = -i C / sqrt(2 hbar m w) int_0^t e^{i w tau} X(tau) d tau.
//! Two such states (driven by X and X') have overlap
//! B = exp{-|alpha - alpha'|^2 tanh(hbar beta w / 2) / 2}. For a continuum of
//! modes with spectral density J the exponent becomes Phi / hbar with
//!
//! ```text
//! Phi = int_0^t d tau int_0^tau d tau' Delta(tau) phi(tau - tau') Delta(tau')
//! ```
//!
//! and phi the QFI kernel.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functional::{
    spectral_form, spectral_form_band, toeplitz_form, SpectralScales, ToeplitzOptions,
};
use crate::kernels::{
    check_pole_collision, fermionic_frequency, qfi_kernel_quadrature, MatsubaraConfig,
    SpectralDensity,
};
use crate::params::{Constants, ValidatedParams};
use crate::quad::{pairwise_sum, Estimate, Tolerance};
use crate::scales::distinguishability_length;
use crate::trajectory::{endpoint_zero_trajectory, BoundaryCurve, DeltaTrajectory, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Coupling C_k in L_int = -X sum_k C_k x_k.
    pub coupling: f64,
    pub mass: f64,
    pub omega: f64,
}

impl Mode {
    pub fn new(coupling: f64, mass: f64, omega: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::NonPositiveParameter("m_k"));
        }
        if !(omega > 0.0) {
            return Err(Error::NonPositiveParameter("omega_k"));
        }
        Ok(Mode {
            coupling,
            mass,
            omega,
        })
    }

    /// C^2 / (2 m w), the mode's contribution to J.
    pub fn spectral_weight(&self) -> f64 {
        self.coupling * self.coupling / (2.0 * self.mass * self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeSetProvenance {
    Explicit,
    SampledFromDensity {
        omega_min: f64,
        omega_max: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    modes: Vec<Mode>,
    provenance: ModeSetProvenance,
}

impl ModeSet {
    pub fn explicit(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidArgument("modes", "mode set is empty".into()));
        }
        Ok(ModeSet {
            modes,
            provenance: ModeSetProvenance::Explicit,
        })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn provenance(&self) -> ModeSetProvenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// One term of a conditional ensemble: initial position X0 with probability
/// `weight` and the displacement it imprints on every mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSample {
    pub weight: f64,
    pub x0: f64,
    pub alpha: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEnsemble {
    pub samples: Vec<ConditionalSample>,
}

pub fn displacement_amplitude(mode: &Mode, traj: &impl BoundaryCurve, c: &Constants) -> Complex64 {
    let scale = mode.coupling / (2.0 * c.hbar * mode.mass * mode.omega).sqrt();
    Complex64::new(0.0, -scale) * traj.fourier(mode.omega)
}

/// log B_k for one mode (non-positive).
pub fn single_mode_log_overlap(mode: &Mode, d: &DeltaTrajectory, beta: f64, c: &Constants) -> f64 {
    let th = (0.5 * c.hbar * mode.omega * beta).tanh();
    -mode.coupling * mode.coupling / (4.0 * c.hbar * mode.mass * mode.omega)
        * th
        * d.fourier(mode.omega).norm_sqr()
}

pub fn single_mode_overlap(mode: &Mode, d: &DeltaTrajectory, beta: f64, c: &Constants) -> f64 {
    single_mode_log_overlap(mode, d, beta, c).exp()
}

/// Sum of log B_k over the set, accumulated pairwise in mode order.
pub fn macrofraction_log_overlap(
    ms: &ModeSet,
    d: &DeltaTrajectory,
    beta: f64,
    c: &Constants,
) -> f64 {
    let logs: Vec<f64> = ms
        .modes
        .iter()
        .map(|m| single_mode_log_overlap(m, d, beta, c))
        .collect();
    pairwise_sum(&logs)
}

pub fn macrofraction_overlap(ms: &ModeSet, d: &DeltaTrajectory, beta: f64, c: &Constants) -> f64 {
    macrofraction_log_overlap(ms, d, beta, c).exp()
}

/// Midpoint discretization of J on [omega_min, omega_max] into `count` modes of
/// unit mass, with C_j^2 / (2 w_j) = J(w_j) dw.
pub fn sample_modes_from_density(
    sd: &SpectralDensity,
    omega_min: f64,
    omega_max: f64,
    count: usize,
) -> Result<ModeSet> {
    if !(omega_min > 0.0 && omega_max > omega_min && omega_max.is_finite()) || count == 0 {
        return Err(Error::InvalidRange {
            lo: omega_min,
            hi: omega_max,
            count,
        });
    }
    let dw = (omega_max - omega_min) / count as f64;
    let modes = (0..count)
        .map(|j| {
            let w = omega_min + (j as f64 + 0.5) * dw;
            Mode {
                coupling: (2.0 * w * sd.j(w) * dw).sqrt(),
                mass: 1.0,
                omega: w,
            }
        })
        .collect();
    Ok(ModeSet {
        modes,
        provenance: ModeSetProvenance::SampledFromDensity {
            omega_min,
            omega_max,
            count,
        },
    })
}

fn qfi_weight<'a>(sd: &'a SpectralDensity, beta: f64, c: &Constants) -> impl Fn(f64) -> f64 + 'a {
    let hb = c.hbar * beta;
    move |w| sd.j(w) * (0.5 * hb * w).tanh()
}

const PHI_QUAD_TOL: f64 = 1e-12;

/// Phi by quadrature. Uses the frequency-domain form
/// Phi = (1/2) int_0^inf J(w) tanh(hbar beta w/2) |int_0^t e^{i w tau} Delta d tau|^2 dw,
/// which is the same double integral with the kernel's cosine transform
/// carried out analytically.
pub fn phi_functional_quadrature(
    d: &DeltaTrajectory,
    sd: &SpectralDensity,
    beta: f64,
    c: &Constants,
) -> Result<Estimate<f64>> {
    sd.validate()?;
    if d.is_zero() || sd.gamma == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            abs_err: 0.0,
            evaluations: 0,
        });
    }
    let scales = SpectralScales(vec![sd.lambda, 1.0 / (c.hbar * beta)]);
    spectral_form(d, qfi_weight(sd, beta, c), &scales, PHI_QUAD_TOL)
}

/// The part of Phi carried by frequencies in [lo, hi].
pub fn phi_functional_band(
    d: &DeltaTrajectory,
    sd: &SpectralDensity,
    beta: f64,
    c: &Constants,
    lo: f64,
    hi: f64,
) -> Result<Estimate<f64>> {
    spectral_form_band(d, qfi_weight(sd, beta, c), lo, hi, PHI_QUAD_TOL)
}

/// Phi by direct two-dimensional quadrature in the time domain, with the QFI
/// kernel itself evaluated by quadrature at every lag. Slow; kept as an
/// independent cross-check of [`phi_functional_quadrature`].
pub fn phi_functional_time_domain(
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
        |u| qfi_kernel_quadrature(u, sd, beta, c).map(|k| k.value),
        d,
        d,
        &opts,
    )
}

/// Result of a series evaluation of Phi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSeries {
    pub value: f64,
    pub abs_err: f64,
    pub terms: usize,
}

/// Coefficients c_t(a), d_t(a): for the exponential kernel e^{-a u},
/// int_0^t int_0^tau Delta(tau) e^{-a(tau - tau')} Delta(tau') =
/// [c_t(a) (dX0^2 + dX^2) + d_t(a) dX0 dX] / sin^2(Omega t).
#[derive(Debug, Clone, Copy)]
pub struct ExpCoefficients {
    t: f64,
    omega: f64,
    sin_t: f64,
    cos_t: f64,
    /// lim a c_t(a) as a -> inf
    a_c: f64,
    /// lim a d_t(a) as a -> inf
    a_d: f64,
}

impl ExpCoefficients {
    pub fn new(t: f64, omega: f64) -> Self {
        let (sin_t, cos_t) = (omega * t).sin_cos();
        ExpCoefficients {
            t,
            omega,
            sin_t,
            cos_t,
            a_c: 0.5 * t - (2.0 * omega * t).sin() / (4.0 * omega),
            a_d: sin_t / omega - t * cos_t,
        }
    }

    fn r(&self, a: f64) -> f64 {
        1.0 / (1.0 + (self.omega / a).powi(2))
    }

    pub fn c(&self, a: f64) -> f64 {
        let (o, t, s, co) = (self.omega, self.t, self.sin_t, self.cos_t);
        let r = self.r(a);
        let a2 = a * a;
        let a3 = a2 * a;
        let a4 = a2 * a2;
        r * (t / (2.0 * a) - (2.0 * o * t).sin() / (4.0 * a * o) - s * s / (2.0 * a2))
            + r * r * (o * o / a4 - (-a * t).exp() * (o * s / a3 + o * o * co / a4))
    }

    pub fn d(&self, a: f64) -> f64 {
        let (o, t, s, co) = (self.omega, self.t, self.sin_t, self.cos_t);
        let r = self.r(a);
        let a2 = a * a;
        let a4 = a2 * a2;
        let inner = o * co / a2 + s / a;
        r * (-t * co / a + s / (o * a))
            - r * r * (2.0 * o * o * co / a4 - (-a * t).exp() * (o * o / a4 + inner * inner))
    }

    /// a c_t(a) - lim_{a->inf} a c_t(a), without cancellation at large a.
    fn c_excess(&self, a: f64) -> f64 {
        let (o, t, s, co) = (self.omega, self.t, self.sin_t, self.cos_t);
        let a2 = a * a;
        let r = a2 / (a2 + o * o);
        let r_minus_1 = -o * o / (a2 + o * o);
        r_minus_1 * self.a_c - r * s * s / (2.0 * a)
            + r * r * (o * o / (a2 * a) - (-a * t).exp() * (o * s / a2 + o * o * co / (a2 * a)))
    }

    /// a d_t(a) - lim_{a->inf} a d_t(a).
    fn d_excess(&self, a: f64) -> f64 {
        let (o, t, s, co) = (self.omega, self.t, self.sin_t, self.cos_t);
        let a2 = a * a;
        let r = a2 / (a2 + o * o);
        let r_minus_1 = -o * o / (a2 + o * o);
        let inner = o * co / a2 + s / a;
        r_minus_1 * self.a_d
            - r * r
                * (2.0 * o * o * co / (a2 * a)
                    - (-a * t).exp() * a * (o * o / (a2 * a2) + inner * inner))
    }
}

struct PhiSetup {
    coef: ExpCoefficients,
    prefactor: f64,
    hb: f64,
    lambda: f64,
    s: f64,
    p: f64,
}

impl PhiSetup {
    fn new(d: &DeltaTrajectory, params: &ValidatedParams) -> Result<Self> {
        let hb = params.hbar() * params.beta();
        check_pole_collision(params.lambda(), hb)?;
        let sin_t = d.sin_omega_t();
        Ok(PhiSetup {
            coef: ExpCoefficients::new(d.t_final(), d.omega()),
            prefactor: 4.0 * params.mass() * params.gamma() / PI / (sin_t * sin_t),
            hb,
            lambda: params.lambda(),
            s: d.dx0() * d.dx0() + d.dx_end() * d.dx_end(),
            p: d.dx0() * d.dx_end(),
        })
    }

    /// One term of the fermionic series, exactly as it stands.
    fn term(&self, n: usize) -> f64 {
        let nu = fermionic_frequency(n, self.hb);
        let l = self.lambda;
        let x = l / nu;
        let c = &self.coef;
        let weight = 1.0 / ((2 * n + 1) as f64 * (1.0 - x * x));
        weight * l * l * ((c.c(nu) - x * c.c(l)) * self.s + (c.d(nu) - x * c.d(l)) * self.p)
    }
}

fn check_omega_match(d: &DeltaTrajectory, params: &ValidatedParams) -> Result<()> {
    if d.omega() == params.omega() {
        Ok(())
    } else {
        Err(Error::MismatchedTrajectories)
    }
}

/// Phi from the fermionic Matsubara series of the QFI kernel. Each kernel
/// term is a pair of exponentials, so Phi is a series of closed-form
/// coefficients c_t, d_t evaluated at nu_n and Lambda.
///
/// The raw terms fall off like 1/n^2. Here the O(1/nu) part of nu c_t(nu) and
/// nu d_t(nu) is split off and summed exactly with
/// sum_n 1/(nu_n^2 - Lambda^2) = (hbar beta/2)^2 tan z / (2z), z = hbar beta Lambda/2;
/// the remainder decays like 1/n^3 and its tail is estimated by the integral
/// of the last term's power law, which is added to the sum.
pub fn phi_functional_matsubara(
    d: &DeltaTrajectory,
    params: &ValidatedParams,
    cfg: &MatsubaraConfig,
) -> Result<PhiSeries> {
    check_omega_match(d, params)?;
    if d.is_zero() {
        return Ok(PhiSeries {
            value: 0.0,
            abs_err: 0.0,
            terms: 0,
        });
    }
    let setup = PhiSetup::new(d, params)?;
    let PhiSetup {
        coef,
        hb,
        lambda: l,
        s,
        p,
        ..
    } = setup;
    let z = 0.5 * hb * l;
    let sum_inv = (0.5 * hb).powi(2) * z.tan() / (2.0 * z);
    let p1 = l * l * ((coef.a_c - l * coef.c(l)) * s + (coef.a_d - l * coef.d(l)) * p);
    let closed = p1 * sum_inv;

    let scale = l.max(d.omega()).max(1.0 / d.t_final());
    let mut acc = 0.0;
    let mut comp = 0.0;
    let mut last = 0.0;
    for n in 0..cfg.max_terms {
        let nu = fermionic_frequency(n, hb);
        let r = l * l * (coef.c_excess(nu) * s + coef.d_excess(nu) * p) / (nu * nu - l * l);
        // Neumaier summation; up to millions of terms
        let t = acc + r;
        comp += if acc.abs() >= r.abs() {
            (acc - t) + r
        } else {
            (r - t) + acc
        };
        acc = t;
        last = r;
        if nu > 10.0 * scale && n > 8 {
            let m = (n + 1) as f64;
            let n2 = (2 * n + 1) as f64;
            let tail = r * n2 * n2 * n2 / (16.0 * m * m);
            let err = tail.abs() * 4.0 * scale / nu;
            let total = closed + acc + comp + tail;
            if err <= cfg.rel_tol * total.abs() {
                let factor = setup.prefactor * PI / hb;
                let roundoff = 8.0 * f64::EPSILON * (closed.abs() + acc.abs());
                return Ok(PhiSeries {
                    value: factor * total,
                    abs_err: factor * (err + roundoff),
                    terms: n + 1,
                });
            }
        }
    }
    let factor = setup.prefactor * PI / hb;
    Err(Error::SeriesNoConvergence {
        terms: cfg.max_terms,
        last_term: factor * last,
        partial_sum: factor * (closed + acc + comp),
    })
}

/// The first `n_terms` terms of the fermionic series for Phi, as written.
pub fn phi_functional_matsubara_partial(
    d: &DeltaTrajectory,
    params: &ValidatedParams,
    n_terms: usize,
) -> Result<f64> {
    check_omega_match(d, params)?;
    let setup = PhiSetup::new(d, params)?;
    let sum: f64 = (0..n_terms).map(|n| setup.term(n)).sum();
    Ok(setup.prefactor * sum)
}

/// The contribution of the n-th fermionic frequency to Phi.
pub fn phi_series_term(d: &DeltaTrajectory, params: &ValidatedParams, n: usize) -> Result<f64> {
    check_omega_match(d, params)?;
    let setup = PhiSetup::new(d, params)?;
    Ok(setup.prefactor * setup.term(n))
}

/// The n-th term of the QFI kernel series at lag u:
/// (4 M gamma / pi) Lambda^2 / ((2n+1)(1 - (Lambda/nu_n)^2)) (e^{-nu_n u} - (Lambda/nu_n) e^{-Lambda u}).
pub fn qfi_kernel_series_term(params: &ValidatedParams, n: usize, u: f64) -> f64 {
    let hb = params.hbar() * params.beta();
    let l = params.lambda();
    let nu = fermionic_frequency(n, hb);
    let x = l / nu;
    4.0 * params.mass() * params.gamma() / PI * l * l / ((2 * n + 1) as f64 * (1.0 - x * x))
        * ((-nu * u).exp() - x * (-l * u).exp())
}

/// -(gamma / lambda_dist^2) int Delta^2, the logarithm of the high-temperature
/// overlap.
pub fn overlap_cl_log(d: &DeltaTrajectory, params: &ValidatedParams) -> f64 {
    let ld = distinguishability_length(params);
    -params.gamma() / (ld * ld) * d.l2()
}

pub fn overlap_cl_limit(d: &DeltaTrajectory, params: &ValidatedParams) -> f64 {
    overlap_cl_log(d, params).exp()
}

/// For each (weight, X0), the trajectory that starts at X0 and ends at zero and
/// the displacement it imprints on every mode.
pub fn conditional_ensemble(
    p_samples: &[(f64, f64)],
    t: f64,
    params: &ValidatedParams,
    modes: &ModeSet,
) -> Result<ConditionalEnsemble> {
    if p_samples.iter().any(|(w, _)| !(*w >= 0.0)) {
        return Err(Error::InvalidArgument(
            "weights",
            "weights must be non-negative".into(),
        ));
    }
    let total: f64 = p_samples.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(
            "weights",
            format!("weights sum to {total}, not 1"),
        ));
    }
    let c = params.constants();
    let samples = p_samples
        .iter()
        .map(|&(weight, x0)| {
            let traj: Trajectory = endpoint_zero_trajectory(x0, t, params.omega())?;
            let alpha = modes
                .modes
                .iter()
                .map(|m| displacement_amplitude(m, &traj, &c))
                .collect();
            Ok(ConditionalSample { weight, x0, alpha })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionalEnsemble { samples })
}
