//! Free-oscillator boundary-value trajectories X(tau) on [0, t] and their
//! differences.
//!
//! A trajectory with boundary data X(0) = X0, X(t) = X_t is
//!
//! ```text
//! X(tau) = [X0 sin(Omega (t - tau)) + X_t sin(Omega tau)] / sin(Omega t)
//! ```
//!
//! which is the unique solution of X'' = -Omega^2 X with those end points.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::ValidatedParams;

/// Smallest admissible |sin(Omega t)|.
pub const EPS_RES: f64 = 1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_boundary_problem(t: f64, omega: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::NonPositiveParameter("t"));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::NonPositiveParameter("Omega"));
    }
    let s = (omega * t).sin();
    if s.abs() <= EPS_RES {
        return Err(Error::ResonantBoundaryValue {
            sin_omega_t: s,
            threshold: EPS_RES,
        });
    }
    Ok(())
}

/// sin(y)/y, accurate near zero.
fn sinc(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        let y2 = y * y;
        1.0 - y2 / 6.0 * (1.0 - y2 / 20.0)
    } else {
        y.sin() / y
    }
}

/// int_0^t e^{i x tau} d tau, written so that x -> 0 is harmless.
fn exp_integral(x: f64, t: f64) -> Complex64 {
    Complex64::from_polar(t * sinc(0.5 * x * t), 0.5 * x * t)
}

/// Shared behaviour of [`Trajectory`] and [`DeltaTrajectory`]: both are free
/// oscillator solutions determined by their end points.
pub trait BoundaryCurve {
    fn start(&self) -> f64;
    fn end(&self) -> f64;
    fn t_final(&self) -> f64;
    fn omega(&self) -> f64;

    fn sin_omega_t(&self) -> f64 {
        (self.omega() * self.t_final()).sin()
    }

    fn evaluate(&self, tau: f64) -> f64 {
        let (o, t) = (self.omega(), self.t_final());
        (self.start() * (o * (t - tau)).sin() + self.end() * (o * tau).sin()) / self.sin_omega_t()
    }

    fn velocity(&self, tau: f64) -> f64 {
        let (o, t) = (self.omega(), self.t_final());
        o * (self.end() * (o * tau).cos() - self.start() * (o * (t - tau)).cos())
            / self.sin_omega_t()
    }

    fn acceleration(&self, tau: f64) -> f64 {
        -self.omega() * self.omega() * self.evaluate(tau)
    }

    /// Decomposition X(tau) = sum_j c_j e^{i kappa_j tau} with kappa = +Omega, -Omega.
    fn exponentials(&self) -> [(Complex64, f64); 2] {
        let (o, t) = (self.omega(), self.t_final());
        let s = self.sin_omega_t();
        let p = self.start() / s;
        let q = self.end() / s;
        let e = Complex64::from_polar(1.0, o * t);
        let plus = (q - p * e.conj()) / (2.0 * I);
        let minus = (p * e - q) / (2.0 * I);
        [(plus, o), (minus, -o)]
    }

    /// int_0^t e^{i w tau} X(tau) d tau in closed form. Uses a sinc
    /// formulation, so w = +-Omega needs no special branch.
    fn fourier(&self, w: f64) -> Complex64 {
        let t = self.t_final();
        self.exponentials()
            .iter()
            .map(|(c, k)| c * exp_integral(w + k, t))
            .sum()
    }

    /// For |w| > Omega, returns (U, V) with fourier(w) = e^{i w t} U - V. Both are
    /// smooth and decay like 1/w, which makes the large-w tail of |fourier|^2
    /// integrable without sampling its oscillation.
    fn fourier_asymptotic(&self, w: f64) -> (Complex64, Complex64) {
        let t = self.t_final();
        self.exponentials().iter().fold(
            (Complex64::default(), Complex64::default()),
            |(u, v), (c, k)| {
                let d = I * (w + k);
                (u + c * Complex64::from_polar(1.0, k * t) / d, v + c / d)
            },
        )
    }

    /// int_0^t X(tau)^2 d tau in closed form.
    fn l2(&self) -> f64 {
        let (o, t) = (self.omega(), self.t_final());
        let s = self.sin_omega_t();
        let p = self.start() / s;
        let q = self.end() / s;
        let diag = 0.5 * t - (2.0 * o * t).sin() / (4.0 * o);
        let cross = (o * t).sin() / o - t * (o * t).cos();
        (p * p + q * q) * diag + p * q * cross
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    x0: f64,
    x_end: f64,
    t_final: f64,
    omega: f64,
}

impl Trajectory {
    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x_end(&self) -> f64 {
        self.x_end
    }

    pub fn scaled(&self, s: f64) -> Trajectory {
        Trajectory {
            x0: s * self.x0,
            x_end: s * self.x_end,
            ..*self
        }
    }

    /// Pointwise sum of two trajectories on the same time window.
    pub fn plus(&self, other: &Trajectory) -> Result<Trajectory> {
        same_window(self, other)?;
        Ok(Trajectory {
            x0: self.x0 + other.x0,
            x_end: self.x_end + other.x_end,
            ..*self
        })
    }
}

impl BoundaryCurve for Trajectory {
    fn start(&self) -> f64 {
        self.x0
    }
    fn end(&self) -> f64 {
        self.x_end
    }
    fn t_final(&self) -> f64 {
        self.t_final
    }
    fn omega(&self) -> f64 {
        self.omega
    }
}

/// Difference of two trajectories, Delta(tau) = X(tau) - X'(tau).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaTrajectory {
    dx0: f64,
    dx_end: f64,
    t_final: f64,
    omega: f64,
}

impl DeltaTrajectory {
    pub fn new(dx0: f64, dx_end: f64, t: f64, omega: f64) -> Result<Self> {
        check_boundary_problem(t, omega)?;
        Ok(DeltaTrajectory {
            dx0,
            dx_end,
            t_final: t,
            omega,
        })
    }

    pub fn dx0(&self) -> f64 {
        self.dx0
    }

    pub fn dx_end(&self) -> f64 {
        self.dx_end
    }

    pub fn scaled(&self, s: f64) -> DeltaTrajectory {
        DeltaTrajectory {
            dx0: s * self.dx0,
            dx_end: s * self.dx_end,
            ..*self
        }
    }

    pub fn is_zero(&self) -> bool {
        self.dx0 == 0.0 && self.dx_end == 0.0
    }
}

impl BoundaryCurve for DeltaTrajectory {
    fn start(&self) -> f64 {
        self.dx0
    }
    fn end(&self) -> f64 {
        self.dx_end
    }
    fn t_final(&self) -> f64 {
        self.t_final
    }
    fn omega(&self) -> f64 {
        self.omega
    }
}

pub fn boundary_trajectory(x0: f64, x_end: f64, t: f64, omega: f64) -> Result<Trajectory> {
    check_boundary_problem(t, omega)?;
    Ok(Trajectory {
        x0,
        x_end,
        t_final: t,
        omega,
    })
}

pub fn endpoint_zero_trajectory(x0: f64, t: f64, omega: f64) -> Result<Trajectory> {
    boundary_trajectory(x0, 0.0, t, omega)
}

fn same_window(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.t_final == b.t_final && a.omega == b.omega {
        Ok(())
    } else {
        Err(Error::MismatchedTrajectories)
    }
}

pub fn delta(a: &Trajectory, b: &Trajectory) -> Result<DeltaTrajectory> {
    same_window(a, b)?;
    Ok(DeltaTrajectory {
        dx0: a.x0 - b.x0,
        dx_end: a.x_end - b.x_end,
        t_final: a.t_final,
        omega: a.omega,
    })
}

/// The average trajectory (X + X')/2.
pub fn average(a: &Trajectory, b: &Trajectory) -> Result<Trajectory> {
    same_window(a, b)?;
    Ok(Trajectory {
        x0: 0.5 * (a.x0 + b.x0),
        x_end: 0.5 * (a.x_end + b.x_end),
        ..*a
    })
}

pub fn delta_l2(d: &DeltaTrajectory) -> f64 {
    d.l2()
}

/// C_k / (M Omega^2); small values mean the bath mode barely pushes back on
/// the central oscillator.
pub fn no_recoil_ratio(params: &ValidatedParams, c_k: f64) -> f64 {
    c_k / (params.mass() * params.omega() * params.omega())
}

/// Quarter-period shift used by the identity Delta'(tau) = Omega Delta(tau + pi/(2 Omega)).
pub fn quarter_period(omega: f64) -> f64 {
    FRAC_PI_2 / omega
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate_params, Constants, PhysicalParams};
    use crate::quad::{Integrator, Tolerance};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn static_limit_is_constant() {
        let x = boundary_trajectory(1.0, 1.0, 1.0, 1e-8).unwrap();
        assert_relative_eq!(x.evaluate(0.5), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_boundary_data_gives_zero() {
        let x = boundary_trajectory(0.0, 0.0, 2.0, 1.0).unwrap();
        for tau in [0.0, 0.3, 1.7, 2.0] {
            assert_eq!(x.evaluate(tau), 0.0);
        }
        assert_eq!(x.l2(), 0.0);
        assert_eq!(x.fourier(3.0), Complex64::default());
    }

    #[test]
    fn resonant_time_is_rejected() {
        assert!(matches!(
            boundary_trajectory(1.0, 0.0, PI, 1.0),
            Err(Error::ResonantBoundaryValue { .. })
        ));
        assert!(matches!(
            DeltaTrajectory::new(1.0, 0.0, 2.0 * PI, 1.0),
            Err(Error::ResonantBoundaryValue { .. })
        ));
    }

    #[test]
    fn endpoint_zero_conditions() {
        let x = endpoint_zero_trajectory(1.0, FRAC_PI_2, 1.0).unwrap();
        assert_relative_eq!(x.evaluate(0.0), 1.0, max_relative = 1e-15);
        assert!(x.evaluate(FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn endpoint_zero_midpoint_value() {
        let x = endpoint_zero_trajectory(2.0, 1.0, 1.0).unwrap();
        // 2 sin(0.5)/sin(1)
        assert_relative_eq!(x.evaluate(0.5), 1.139_493_927_324_549, max_relative = 1e-14);
    }

    #[test]
    fn delta_of_identical_is_zero() {
        let a = boundary_trajectory(0.4, -1.2, 2.0, 1.3).unwrap();
        let d = delta(&a, &a).unwrap();
        assert!(d.is_zero());
        assert_eq!(d.l2(), 0.0);
    }

    #[test]
    fn delta_with_start_offset_only() {
        let a = boundary_trajectory(0.7, 0.0, 2.0, 1.0).unwrap();
        let b = boundary_trajectory(0.0, 0.0, 2.0, 1.0).unwrap();
        let d = delta(&a, &b).unwrap();
        for tau in [0.1f64, 0.9, 1.5] {
            let expected = 0.7 * (2.0 - tau).sin() / 2f64.sin();
            assert_relative_eq!(d.evaluate(tau), expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn delta_requires_common_window() {
        let a = boundary_trajectory(1.0, 0.0, 2.0, 1.0).unwrap();
        let b = boundary_trajectory(1.0, 0.0, 2.5, 1.0).unwrap();
        assert_eq!(delta(&a, &b), Err(Error::MismatchedTrajectories));
    }

    #[test]
    fn l2_quarter_period_case() {
        // dX0 = 0, dX_t = d with Omega t = pi/2: int sin^2 = t/2
        let d = DeltaTrajectory::new(0.0, 1.5, FRAC_PI_2, 1.0).unwrap();
        assert_relative_eq!(d.l2(), 1.5 * 1.5 * FRAC_PI_2 / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn l2_matches_quadrature() {
        let q = Integrator::new(Tolerance::new(0.0, 1e-14));
        for (a, b, t, o) in [
            (1.0, 0.3, 2.0, 1.0),
            (-0.5, 2.0, 0.05, 1.0),
            (1.0, 1.0, 7.3, 2.2),
        ] {
            let d = DeltaTrajectory::new(a, b, t, o).unwrap();
            let num = q
                .integrate(|x| d.evaluate(x).powi(2), 0.0, t)
                .unwrap()
                .value;
            assert_relative_eq!(d.l2(), num, max_relative = 1e-10);
        }
    }

    #[test]
    fn fourier_matches_quadrature() {
        let q = Integrator::new(Tolerance::new(0.0, 1e-14));
        let x = boundary_trajectory(1.0, 0.5, 2.0, 1.0).unwrap();
        for w in [0.0, 0.5, 1.0, 1.0 + 1e-9, 3.0, 40.0] {
            let num = q
                .integrate(|s| Complex64::from_polar(x.evaluate(s), w * s), 0.0, 2.0)
                .unwrap()
                .value;
            let exact = x.fourier(w);
            assert!(
                (num - exact).norm() <= 1e-12 * num.norm().max(1e-3),
                "w = {w}"
            );
        }
    }

    #[test]
    fn asymptotic_split_reassembles() {
        let d = DeltaTrajectory::new(1.0, 0.3, 2.0, 1.0).unwrap();
        for w in [5.0, 50.0, 1e4] {
            let (u, v) = d.fourier_asymptotic(w);
            let split = Complex64::from_polar(1.0, w * 2.0) * u - v;
            assert!((split - d.fourier(w)).norm() < 1e-13 * d.fourier(w).norm().max(1e-8));
        }
    }

    #[test]
    fn no_recoil_ratio_values() {
        let p = validate_params(PhysicalParams {
            mass: 1.0,
            omega: 1.0,
            gamma: 0.1,
            lambda: 10.0,
            temperature: 1.0,
            constants: Constants::natural(),
        })
        .unwrap();
        assert_eq!(no_recoil_ratio(&p, 1.0), 1.0);
        assert_eq!(no_recoil_ratio(&p, 0.0), 0.0);
        assert_relative_eq!(no_recoil_ratio(&p, 0.01), 0.01);
    }

    fn non_resonant() -> impl Strategy<Value = (f64, f64)> {
        (0.05f64..10.0, 0.1f64..3.0)
            .prop_filter("non-resonant", |(t, o)| (t * o).sin().abs() > 1e-3)
    }

    proptest! {
        #[test]
        fn satisfies_oscillator_equation(
            x0 in -5.0f64..5.0, x1 in -5.0f64..5.0, (t, o) in non_resonant(), u in 0.05f64..0.95,
        ) {
            let x = boundary_trajectory(x0, x1, t, o).unwrap();
            let tau = u * t;
            let h = 1e-4 * t;
            let fd = (x.evaluate(tau + h) - 2.0 * x.evaluate(tau) + x.evaluate(tau - h)) / (h * h);
            let scale = x0.abs().max(x1.abs()) / (t * o).sin().abs() * o * o;
            prop_assert!((fd + o * o * x.evaluate(tau)).abs() <= 1e-6 * scale.max(1e-12));
        }

        #[test]
        fn endpoints_reproduced(x0 in -5.0f64..5.0, x1 in -5.0f64..5.0, (t, o) in non_resonant()) {
            let x = boundary_trajectory(x0, x1, t, o).unwrap();
            prop_assert!((x.evaluate(0.0) - x0).abs() <= 1e-12 * x0.abs().max(1e-300));
            prop_assert!((x.evaluate(t) - x1).abs() <= 1e-12 * x1.abs().max(x0.abs()).max(1e-300) / (t * o).sin().abs());
        }

        #[test]
        fn delta_is_pointwise_difference(
            a0 in -5.0f64..5.0, a1 in -5.0f64..5.0, b0 in -5.0f64..5.0, b1 in -5.0f64..5.0,
            (t, o) in non_resonant(),
        ) {
            let a = boundary_trajectory(a0, a1, t, o).unwrap();
            let b = boundary_trajectory(b0, b1, t, o).unwrap();
            let d = delta(&a, &b).unwrap();
            for k in 0..=10 {
                let tau = t * k as f64 / 10.0;
                let diff = a.evaluate(tau) - b.evaluate(tau);
                let scale = a.evaluate(tau).abs().max(b.evaluate(tau).abs()).max(1e-12);
                prop_assert!((d.evaluate(tau) - diff).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn velocity_is_quarter_period_shift(
            d0 in -5.0f64..5.0, d1 in -5.0f64..5.0, o in 0.5f64..2.0, u in 0.0f64..1.0,
        ) {
            // long enough window that tau + pi/(2 Omega) stays inside
            let t = 3.0 * quarter_period(o) + 0.1;
            prop_assume!((o * t).sin().abs() > 1e-3);
            let d = DeltaTrajectory::new(d0, d1, t, o).unwrap();
            let tau = u * (t - quarter_period(o));
            let lhs = d.velocity(tau);
            let rhs = o * d.evaluate(tau + quarter_period(o));
            let scale = (d0.abs() + d1.abs()) / (o * t).sin().abs() * o;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-12));
        }

        #[test]
        fn l2_nonnegative_and_zero_only_for_zero(
            d0 in -5.0f64..5.0, d1 in -5.0f64..5.0, (t, o) in non_resonant(),
        ) {
            let d = DeltaTrajectory::new(d0, d1, t, o).unwrap();
            let v = d.l2();
            prop_assert!(v >= 0.0);
            if d0 != 0.0 || d1 != 0.0 {
                prop_assert!(v > 0.0);
            }
        }
    }
}
