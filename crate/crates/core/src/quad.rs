//! Adaptive Gauss-Legendre quadrature, alternating-series acceleration and
//! between-zeros integration of oscillatory Fourier integrals on [a, inf).
//!
//! Everything is generic over real and complex integrands through [`Field`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::ops::{Add, Mul, Sub};

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalar types that can be integrated.
pub trait Field:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
}

impl Field for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Field for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub abs_err: f64,
    pub evaluations: usize,
}

impl<T: Field> Estimate<T> {
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Estimate<U> {
        Estimate {
            value: f(self.value),
            abs_err: self.abs_err,
            evaluations: self.evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(0.0, 1e-12)
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(2)).expect("order is at least 2");
        let rule = GaussLegendre::new(order);
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        GaussRule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Returns the rule applied to f on [a, b] together with the same rule
    /// applied to |f| (used for a roundoff floor).
    pub fn apply<T: Field>(&self, f: &mut impl FnMut(f64) -> T, a: f64, b: f64) -> (T, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = T::default();
        let mut acc_abs = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            acc = acc + v * *w;
            acc_abs += w * v.magnitude();
        }
        (acc * half, acc_abs * half.abs())
    }

    /// Fixed composite rule with `panels` equal panels.
    pub fn composite<T: Field>(
        &self,
        mut f: impl FnMut(f64) -> T,
        a: f64,
        b: f64,
        panels: usize,
    ) -> T {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels).fold(T::default(), |acc, k| {
            let lo = a + h * k as f64;
            let hi = if k + 1 == panels { b } else { lo + h };
            acc + self.apply(&mut f, lo, hi).0
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: f64,
    b: f64,
    left: T,
    right: T,
    err: f64,
    abs_integral: f64,
    splittable: bool,
}

impl<T: Field> Segment<T> {
    fn value(&self) -> T {
        self.left + self.right
    }
}

// Max-heap on the error estimate.
struct ByError<T>(Segment<T>);

impl<T> PartialEq for ByError<T> {
    fn eq(&self, other: &Self) -> bool {
        self.0.err == other.0.err
    }
}
impl<T> Eq for ByError<T> {}
impl<T> PartialOrd for ByError<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for ByError<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.err.total_cmp(&other.0.err)
    }
}

const ROUNDOFF_FACTOR: f64 = 50.0 * f64::EPSILON;

/// Globally adaptive Gauss-Legendre integration. The error of a segment is
/// estimated by comparing the rule on the segment with the rule on its two
/// halves.
#[derive(Debug, Clone)]
pub struct Integrator {
    rule: GaussRule,
    pub tol: Tolerance,
    pub max_segments: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::new(Tolerance::default())
    }
}

impl Integrator {
    pub fn new(tol: Tolerance) -> Self {
        Integrator {
            rule: GaussRule::new(15),
            tol,
            max_segments: 4000,
        }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.rule = GaussRule::new(order);
        self
    }

    pub fn with_max_segments(mut self, max_segments: usize) -> Self {
        self.max_segments = max_segments;
        self
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    fn segment<T: Field>(
        &self,
        f: &mut impl FnMut(f64) -> T,
        a: f64,
        b: f64,
        whole: T,
    ) -> Segment<T> {
        let m = 0.5 * (a + b);
        let (left, abs_l) = self.rule.apply(f, a, m);
        let (right, abs_r) = self.rule.apply(f, m, b);
        let abs_integral = abs_l + abs_r;
        let diff = (whole - (left + right)).magnitude();
        let floor = ROUNDOFF_FACTOR * abs_integral;
        let splittable = m > a && m < b && (b - a).abs() > 1e-13 * a.abs().max(b.abs());
        Segment {
            a,
            b,
            left,
            right,
            err: diff.max(floor),
            abs_integral,
            splittable,
        }
    }

    pub fn integrate<T: Field>(
        &self,
        f: impl FnMut(f64) -> T,
        a: f64,
        b: f64,
    ) -> Result<Estimate<T>> {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integrates over [points[0], points.last()] starting from the partition
    /// given by `points`, which must be sorted.
    pub fn integrate_with_breaks<T: Field>(
        &self,
        mut f: impl FnMut(f64) -> T,
        points: &[f64],
    ) -> Result<Estimate<T>> {
        assert!(points.len() >= 2, "need at least one interval");
        let per_segment = 3 * self.rule.order();
        let mut heap = BinaryHeap::new();
        let mut evaluations = 0;
        for w in points.windows(2) {
            if w[1] == w[0] {
                continue;
            }
            let (whole, _) = self.rule.apply(&mut f, w[0], w[1]);
            heap.push(ByError(self.segment(&mut f, w[0], w[1], whole)));
            evaluations += per_segment;
        }
        loop {
            let (value, err) = heap.iter().fold((T::default(), 0.0), |(v, e), seg| {
                (v + seg.0.value(), e + seg.0.err)
            });
            let done = Estimate {
                value,
                abs_err: err,
                evaluations,
            };
            if heap.is_empty() || err <= self.tol.target(value.magnitude()) {
                return Ok(done);
            }
            if heap.len() >= self.max_segments {
                return Err(Error::QuadratureNoConvergence {
                    value: value.magnitude(),
                    abs_err: err,
                    evaluations,
                });
            }
            let worst = heap.pop().expect("heap is non-empty").0;
            if !worst.splittable || worst.err <= ROUNDOFF_FACTOR * worst.abs_integral {
                // The largest contribution is already at the roundoff floor.
                return Ok(done);
            }
            let m = 0.5 * (worst.a + worst.b);
            heap.push(ByError(self.segment(&mut f, worst.a, m, worst.left)));
            heap.push(ByError(self.segment(&mut f, m, worst.b, worst.right)));
            evaluations += 4 * self.rule.order();
        }
    }

    /// Integral over [a, inf) via the substitution x = a / s. Intended for
    /// integrands decaying at least like 1/x^2; `a` must be positive.
    pub fn integrate_to_infinity<T: Field>(
        &self,
        mut f: impl FnMut(f64) -> T,
        a: f64,
    ) -> Result<Estimate<T>> {
        assert!(a > 0.0, "lower limit must be positive");
        self.integrate(|s: f64| f(a / s) * (a / (s * s)), 0.0, 1.0)
    }
}

/// Euler (van Wijngaarden) acceleration of an alternating series given by its
/// partial sums. Returns the accelerated value and an error estimate taken
/// from the change between the last two averaging levels.
pub fn euler_accelerate<T: Field>(partial_sums: &[T]) -> (T, f64) {
    match partial_sums.len() {
        0 => return (T::default(), 0.0),
        1 => return (partial_sums[0], f64::INFINITY),
        _ => {}
    }
    let mut row = partial_sums.to_vec();
    let mut prev_last = *row.last().expect("non-empty");
    let mut err = f64::INFINITY;
    while row.len() > 1 {
        let next: Vec<T> = row.windows(2).map(|w| (w[0] + w[1]) * 0.5).collect();
        let last = *next.last().expect("non-empty");
        err = (last - prev_last).magnitude();
        prev_last = last;
        row = next;
    }
    (row[0], err)
}

/// Options for [`oscillatory_integral`].
#[derive(Debug, Clone)]
pub struct OscillatoryOptions {
    /// Relative tolerance for each half-period panel.
    pub panel_rel_tol: f64,
    /// Minimum number of half-period panels integrated directly before the
    /// accelerated tail starts; keeps the Euler transform well conditioned.
    pub min_direct_panels: usize,
    /// Number of panels fed into the Euler transform.
    pub tail_panels: usize,
}

impl Default for OscillatoryOptions {
    fn default() -> Self {
        OscillatoryOptions {
            panel_rel_tol: 1e-13,
            min_direct_panels: 12,
            tail_panels: 40,
        }
    }
}

/// Computes `int_start^inf g(x) e^{i x tau} dx` for a smooth `g` that decays
/// (possibly slowly) beyond `smooth_from`.
///
/// The axis is cut into half periods [start + k pi/tau, start + (k+1) pi/tau].
/// Panels below `smooth_from` are summed directly; the remaining panel
/// integrals alternate in sign and are summed with [`euler_accelerate`].
/// Phases are taken relative to each panel's left end so that large `x tau`
/// does not cost accuracy.
pub fn oscillatory_integral(
    g: impl Fn(f64) -> Complex64,
    tau: f64,
    start: f64,
    smooth_from: f64,
    opts: &OscillatoryOptions,
) -> Result<Estimate<Complex64>> {
    assert!(tau > 0.0, "oscillation frequency must be positive");
    let width = PI / tau;
    let direct =
        (((smooth_from - start) / width).ceil().max(0.0) as usize).max(opts.min_direct_panels);
    let base_phase = Complex64::from_polar(1.0, start * tau);
    let integrator =
        Integrator::new(Tolerance::new(0.0, opts.panel_rel_tol)).with_max_segments(200);

    let panel = |k: usize| -> Result<Estimate<Complex64>> {
        let left = start + k as f64 * width;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let est = integrator.integrate(
            |s: f64| g(left + s) * Complex64::from_polar(1.0, s * tau),
            0.0,
            width,
        )?;
        Ok(est.map(|v| v * base_phase * sign))
    };

    let mut sum = Complex64::default();
    let mut comp = Complex64::default();
    let mut err = 0.0;
    let mut abs_sum = 0.0;
    let mut evaluations = 0;
    for k in 0..direct {
        let p = panel(k)?;
        // Neumaier-compensated accumulation: thousands of panels may cancel.
        let t = sum + p.value;
        comp += if sum.norm() >= p.value.norm() {
            (sum - t) + p.value
        } else {
            (p.value - t) + sum
        };
        sum = t;
        err += p.abs_err;
        abs_sum += p.value.norm();
        evaluations += p.evaluations;
    }
    let mut partial = Vec::with_capacity(opts.tail_panels);
    let mut tail = Complex64::default();
    for k in direct..direct + opts.tail_panels {
        let p = panel(k)?;
        tail += p.value;
        partial.push(tail);
        err += p.abs_err;
        abs_sum += p.value.norm();
        evaluations += p.evaluations;
    }
    let (tail_value, euler_err) = euler_accelerate(&partial);
    let value = sum + comp + tail_value;
    Ok(Estimate {
        value,
        abs_err: err + euler_err + 4.0 * f64::EPSILON * abs_sum,
        evaluations,
    })
}

/// Pairwise (cascade) summation in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let (l, r) = values.split_at(values.len() / 2);
        pairwise_sum(l) + pairwise_sum(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let rule = GaussRule::new(5);
        let (v, _) = rule.apply(&mut |x: f64| x.powi(9) + 3.0 * x * x, -1.0, 2.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 + (8.0 + 1.0);
        assert_relative_eq!(v, exact, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_log_singularity() {
        let est = Integrator::default()
            .integrate(|x: f64| x.ln(), 0.0, 1.0)
            .unwrap();
        assert_relative_eq!(est.value, -1.0, max_relative = 1e-11);
        assert!(est.abs_err < 1e-10);
    }

    #[test]
    fn adaptive_complex_integrand() {
        let est = Integrator::default()
            .integrate(|x: f64| Complex64::from_polar(1.0, 3.0 * x), 0.0, 2.0)
            .unwrap();
        let exact = (Complex64::from_polar(1.0, 6.0) - 1.0) / Complex64::new(0.0, 3.0);
        assert!((est.value - exact).norm() < 1e-13);
    }

    #[test]
    fn semi_infinite_substitution() {
        let est = Integrator::default()
            .integrate_to_infinity(|x: f64| 1.0 / (x * x * x), 2.0)
            .unwrap();
        assert_relative_eq!(est.value, 0.125, max_relative = 1e-13);
    }

    #[test]
    fn euler_sums_alternating_harmonic() {
        let mut partial = Vec::new();
        let mut s = 0.0;
        for k in 0..40 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign / (k as f64 + 1.0);
            partial.push(s);
        }
        let (v, err) = euler_accelerate(&partial);
        assert_relative_eq!(v, 2f64.ln(), max_relative = 1e-12);
        assert!(err < 1e-10);
    }

    #[test]
    fn oscillatory_lorentzian_cosine_transform() {
        // int_0^inf cos(x tau) / (1 + x^2) dx = (pi/2) e^{-tau}
        for tau in [0.3, 1.0, 4.0] {
            let est = oscillatory_integral(
                |x| Complex64::new(1.0 / (1.0 + x * x), 0.0),
                tau,
                0.0,
                10.0,
                &OscillatoryOptions::default(),
            )
            .unwrap();
            assert_relative_eq!(est.value.re, 0.5 * PI * (-tau).exp(), max_relative = 1e-10);
        }
    }

    #[test]
    fn oscillatory_slow_sine_tail() {
        // int_0^inf x sin(x) / (1 + x^2) dx = (pi/2) e^{-1}; 1/x envelope
        let est = oscillatory_integral(
            |x| Complex64::new(x / (1.0 + x * x), 0.0),
            1.0,
            0.0,
            10.0,
            &OscillatoryOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(est.value.im, 0.5 * PI * (-1f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn pairwise_matches_plain_sum_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }
}
