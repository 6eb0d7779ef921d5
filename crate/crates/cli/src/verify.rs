//! Quick self-checks: the Fock-space oracle against the closed-form overlap,
//! and the cross-method agreement of kernels and of Phi.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use infogap::fock::{
    analytic_displaced_thermal_overlap, displaced_thermal_overlap, oracle_vs_analytic,
    TruncationPolicy,
};
use infogap::kernels::{qfi_kernel_matsubara, qfi_kernel_quadrature, spectral_relation_check};
use infogap::overlap::{phi_functional_matsubara, phi_functional_quadrature, Mode};
use infogap::params::validate_params;
use infogap::trajectory::boundary_trajectory;
use infogap::{Constants, DeltaTrajectory, MatsubaraConfig, PhysicalParams, SpectralDensity};

use crate::table::{ResultTable, TableError};

pub const COLUMNS: [&str; 6] = [
    "check",
    "measured",
    "reference",
    "error",
    "tolerance",
    "passed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub reference: f64,
    pub tolerance: f64,
}

impl Check {
    /// Relative error, or absolute error against a zero reference.
    pub fn error(&self) -> f64 {
        let diff = (self.measured - self.reference).abs();
        if self.reference == 0.0 {
            diff
        } else {
            diff / self.reference.abs()
        }
    }

    pub fn passed(&self) -> bool {
        self.error() <= self.tolerance
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    /// Checks that could not be evaluated, with the reason.
    pub errors: Vec<(String, String)>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().all(Check::passed)
    }

    fn record(
        &mut self,
        name: impl Into<String>,
        outcome: infogap::Result<(f64, f64)>,
        tolerance: f64,
    ) {
        let name = name.into();
        match outcome {
            Ok((measured, reference)) => self.checks.push(Check {
                name,
                measured,
                reference,
                tolerance,
            }),
            Err(e) => self.errors.push((name, e.to_string())),
        }
    }

    /// Fills `table` (with [`COLUMNS`] as its trailing columns); check names go
    /// to the metadata as `check_<i>`.
    pub fn into_table(self, mut table: ResultTable) -> Result<ResultTable, TableError> {
        for (i, c) in self.checks.iter().enumerate() {
            table = table.with_metadata(format!("check_{i}"), c.name.clone());
            let passed = if c.passed() { 1.0 } else { 0.0 };
            table.push_row(vec![
                i as f64,
                c.measured,
                c.reference,
                c.error(),
                c.tolerance,
                passed,
            ])?;
        }
        for (name, reason) in &self.errors {
            table = table.with_metadata("error", format!("{name}: {reason}"));
        }
        Ok(table)
    }

    pub fn summary(&self) -> String {
        let mut lines: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                format!(
                    "{} {:<40} error {:.3e} (tol {:.0e})",
                    if c.passed() { "ok  " } else { "FAIL" },
                    c.name,
                    c.error(),
                    c.tolerance
                )
            })
            .collect();
        lines.extend(self.errors.iter().map(|(n, r)| format!("ERR  {n:<40} {r}")));
        let failed = self.checks.iter().filter(|c| !c.passed()).count() + self.errors.len();
        lines.push(format!(
            "{} checks, {failed} failed",
            self.checks.len() + self.errors.len()
        ));
        lines.join("\n")
    }
}

const NAT: Constants = Constants {
    hbar: 1.0,
    k_b: 1.0,
};
/// Phi for M = 1, Omega = 1, gamma = 0.1, Lambda = 20, beta = 0.05, t = 2,
/// dX0 = 1, dX = 0.3 (natural units), from an independent high-precision evaluation.
const GENERIC_PHI: f64 = 0.026_780_205_664_713_34;

fn fock_suite(report: &mut VerifyReport, rng: &mut ChaCha8Rng) {
    let policy = TruncationPolicy::default();
    for nbar in [0.0, 0.5, 2.0] {
        for eta in [0.0, 0.3, 1.0] {
            let eta = Complex64::new(eta, 0.0);
            let outcome = policy.choose_dim(nbar, eta.norm()).and_then(|dim| {
                let numeric =
                    displaced_thermal_overlap(nbar, Complex64::default(), eta, dim, &policy)?;
                Ok((numeric, analytic_displaced_thermal_overlap(nbar, eta)))
            });
            report.record(format!("fock nbar={nbar} |eta|={}", eta.re), outcome, 1e-6);
        }
    }
    for i in 0..3 {
        let nbar = rng.random_range(0.0..2.0);
        let a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let b = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let outcome = policy
            .choose_dim(nbar, a.norm().max(b.norm()))
            .and_then(|dim| {
                let numeric = displaced_thermal_overlap(nbar, a, b, dim, &policy)?;
                Ok((numeric, analytic_displaced_thermal_overlap(nbar, b - a)))
            });
        report.record(format!("fock random pair {i}"), outcome, 1e-6);
    }
    let outcome = (|| {
        let mode = Mode::new(0.9, 1.0, 2.0)?;
        let x = boundary_trajectory(1.0, 0.4, 2.0, 1.0)?;
        let xp = boundary_trajectory(0.2, -0.3, 2.0, 1.0)?;
        let r = oracle_vs_analytic(&mode, (&x, &xp), 0.7, None, &NAT, &policy)?;
        Ok((r.numeric, r.analytic))
    })();
    report.record("fock conditional states", outcome, 1e-6);
}

fn kernel_suite(report: &mut VerifyReport) {
    let lambda = 10.0;
    let sd = SpectralDensity::new(1.0, 1.0, lambda);
    let cfg = MatsubaraConfig::default();
    for lt in [0.1, 1.0, 5.0] {
        for hbl in [0.1, 1.0, 10.0] {
            let (tau, beta) = (lt / lambda, hbl / lambda);
            let outcome = qfi_kernel_matsubara(tau, &sd, beta, &NAT, &cfg).and_then(|m| {
                let q = qfi_kernel_quadrature(tau, &sd, beta, &NAT)?;
                Ok((q.value, m.value))
            });
            report.record(
                format!("phi kernel Lambda tau={lt} hbar beta Lambda={hbl}"),
                outcome,
                1e-6,
            );
        }
    }
}

fn phi_suite(report: &mut VerifyReport) {
    let outcome = (|| {
        let p = validate_params(PhysicalParams {
            mass: 1.0,
            omega: 1.0,
            gamma: 0.1,
            lambda: 20.0,
            temperature: 20.0,
            constants: NAT,
        })?;
        let d = DeltaTrajectory::new(1.0, 0.3, 2.0, 1.0)?;
        let series = phi_functional_matsubara(&d, &p, &MatsubaraConfig::default())?.value;
        let quad = phi_functional_quadrature(&d, &p.spectral_density(), p.beta(), &NAT)?.value;
        Ok((series, quad))
    })();
    if let Ok((series, quad)) = outcome {
        report.record("Phi series vs quadrature", Ok((series, quad)), 1e-6);
        report.record("Phi reference value", Ok((quad, GENERIC_PHI)), 1e-10);
    } else {
        report.record("Phi series vs quadrature", outcome, 1e-6);
    }
}

fn spectral_suite(report: &mut VerifyReport, rng: &mut ChaCha8Rng) {
    let sd = SpectralDensity::new(1.0, 0.3, 10.0);
    let mut worst: infogap::Result<f64> = Ok(0.0);
    for _ in 0..50 {
        let w = 10f64.powf(rng.random_range(-3.0..3.0));
        let beta = 10f64.powf(rng.random_range(-3.0..1.0));
        worst = worst.and_then(|acc| {
            let r = spectral_relation_check(w, &sd, beta, &NAT)?;
            Ok(r.iter().copied().fold(acc, f64::max))
        });
    }
    report.record("spectral relations", worst.map(|w| (w, 0.0)), 1e-12);
}

/// Runs every suite; randomized checks draw from `seed`.
pub fn run_checks(seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport::default();
    fock_suite(&mut report, &mut rng);
    kernel_suite(&mut report);
    phi_suite(&mut report);
    spectral_suite(&mut report, &mut rng);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let r = run_checks(0);
        assert!(r.all_passed(), "{}", r.summary());
        assert!(r.checks.len() >= 20);
    }

    #[test]
    fn same_seed_same_report() {
        assert_eq!(run_checks(3), run_checks(3));
    }

    #[test]
    fn failing_check_is_reported() {
        let mut r = VerifyReport::default();
        r.record("bad", Ok((1.1, 1.0)), 1e-6);
        r.record(
            "broken",
            Err(infogap::Error::NonPositiveParameter("T")),
            1e-6,
        );
        assert!(!r.all_passed());
        assert!(r.summary().contains("FAIL bad"));
        assert!(r.summary().contains("2 checks, 2 failed"));
    }

    #[test]
    fn zero_reference_uses_absolute_error() {
        let c = Check {
            name: "z".into(),
            measured: 1e-13,
            reference: 0.0,
            tolerance: 1e-12,
        };
        assert!(c.passed());
    }
}
