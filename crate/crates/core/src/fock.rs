//! Brute-force overlap of displaced thermal states in a truncated Fock space.
//!
//! This is the ground truth for the single-mode overlap formula
//! B = exp{-|eta|^2 tanh(hbar beta w / 2) / 2}: states are built as explicit
//! density matrices and B(rho, sigma) = Tr sqrt(sqrt(rho) sigma sqrt(rho)) is
//! computed by dense Hermitian eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::overlap::{displacement_amplitude, single_mode_overlap, Mode};
use crate::params::Constants;
use crate::trajectory::{delta, Trajectory};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub trace_deficit_tol: f64,
    pub hard_max_dim: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            trace_deficit_tol: 1e-12,
            hard_max_dim: 400,
        }
    }
}

impl TruncationPolicy {
    pub fn new(trace_deficit_tol: f64, hard_max_dim: usize) -> Result<Self> {
        if !(trace_deficit_tol > 0.0 && trace_deficit_tol < 1.0) {
            return Err(Error::InvalidArgument(
                "trace_deficit_tol",
                format!("{trace_deficit_tol} not in (0, 1)"),
            ));
        }
        Ok(TruncationPolicy {
            trace_deficit_tol,
            hard_max_dim,
        })
    }

    /// Starts from (nbar + |alpha|^2) + 8 sqrt(nbar + |alpha|^2 + 1) and grows
    /// until both the thermal tail and the displaced-vacuum tail beyond the
    /// cut are below tolerance.
    pub fn choose_dim(&self, nbar: f64, alpha_max: f64) -> Result<usize> {
        let a2 = alpha_max * alpha_max;
        let mut dim = ((nbar + a2) + 8.0 * (nbar + a2 + 1.0).sqrt()).ceil() as usize;
        dim = dim.max(2);
        while dim <= self.hard_max_dim {
            if thermal_deficit(nbar, dim) <= self.trace_deficit_tol
                && poisson_tail(a2, dim) <= self.trace_deficit_tol
            {
                return Ok(dim);
            }
            dim += 1;
        }
        Err(Error::TruncationTooSmall {
            dim: self.hard_max_dim,
            deficit: thermal_deficit(nbar, self.hard_max_dim)
                .max(poisson_tail(a2, self.hard_max_dim)),
            tol: self.trace_deficit_tol,
        })
    }
}

/// Weight of a thermal state beyond level dim - 1: (nbar/(nbar+1))^dim.
pub fn thermal_deficit(nbar: f64, dim: usize) -> f64 {
    if nbar == 0.0 {
        0.0
    } else {
        (nbar / (nbar + 1.0)).powi(dim as i32)
    }
}

/// Weight of a coherent state |alpha> with |alpha|^2 = mean beyond level dim - 1.
pub fn poisson_tail(mean: f64, dim: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    // log of the first omitted term, then sum forward until negligible
    let mut log_term = -mean + dim as f64 * mean.ln() - ln_factorial(dim);
    let mut tail = 0.0;
    let mut n = dim;
    loop {
        let term = log_term.exp();
        tail += term;
        if term < 1e-18 * tail || (n as f64 > mean && term < 1e-30) {
            break;
        }
        n += 1;
        log_term += mean.ln() - (n as f64).ln();
    }
    tail
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and trace against the policy.
    pub fn new(entries: CMatrix, policy: &TruncationPolicy) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch(entries.nrows(), entries.ncols()));
        }
        let herm_err = (&entries - entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_err > 1e-12 {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm_err:e})"
            )));
        }
        let eig = SymmetricEigen::new(entries.clone()).eigenvalues;
        let lmax = eig.iter().copied().fold(0.0, f64::max);
        let lmin = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if lmin < -1e-12 * lmax {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {lmin:e}"
            )));
        }
        let trace = entries.trace().re;
        if trace > 1.0 + 1e-12 || trace < 1.0 - policy.trace_deficit_tol {
            return Err(Error::TruncationTooSmall {
                dim: entries.nrows(),
                deficit: 1.0 - trace,
                tol: policy.trace_deficit_tol,
            });
        }
        Ok(DensityMatrix { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// Tr(N rho).
    pub fn mean_occupation(&self) -> f64 {
        (0..self.dim())
            .map(|n| n as f64 * self.entries[(n, n)].re)
            .sum()
    }

    /// U rho U^dagger, revalidated.
    pub fn conjugate(&self, u: &CMatrix, policy: &TruncationPolicy) -> Result<Self> {
        if u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch(u.nrows(), self.dim()));
        }
        let m = u * &self.entries * u.adjoint();
        DensityMatrix::new(hermitize(m), policy)
    }
}

fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Diagonal thermal state with entries nbar^n / (nbar+1)^(n+1); not
/// renormalized after truncation.
pub fn thermal_state(nbar: f64, dim: usize, policy: &TruncationPolicy) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dim", "must be at least 1".into()));
    }
    if !(nbar >= 0.0) {
        return Err(Error::InvalidArgument(
            "nbar",
            format!("{nbar} is negative"),
        ));
    }
    let deficit = thermal_deficit(nbar, dim);
    if deficit > policy.trace_deficit_tol {
        return Err(Error::TruncationTooSmall {
            dim,
            deficit,
            tol: policy.trace_deficit_tol,
        });
    }
    let ratio = nbar / (nbar + 1.0);
    let diag = DVector::from_iterator(
        dim,
        (0..dim).scan(1.0 / (nbar + 1.0), |p, _| {
            let v = *p;
            *p *= ratio;
            Some(Complex64::new(v, 0.0))
        }),
    );
    Ok(DensityMatrix {
        entries: CMatrix::from_diagonal(&diag),
    })
}

/// Annihilation operator on levels 0..dim.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// D(alpha) = exp(alpha a^dagger - alpha^* a) on the truncated ladder.
pub fn displacement_matrix(
    alpha: Complex64,
    dim: usize,
    policy: &TruncationPolicy,
) -> Result<CMatrix> {
    let deficit = poisson_tail(alpha.norm_sqr(), dim);
    if deficit > policy.trace_deficit_tol {
        return Err(Error::TruncationTooSmall {
            dim,
            deficit,
            tol: policy.trace_deficit_tol,
        });
    }
    let a = annihilation(dim);
    let generator = a.adjoint() * alpha - a * alpha.conj();
    Ok(generator.exp())
}

/// Matrix square root of a Hermitian positive semi-definite matrix.
/// Eigenvalues below dim * eps * max are round-off and are set to zero.
fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let eig = SymmetricEigen::new(m.clone());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let floor = m.nrows() as f64 * f64::EPSILON * lmax;
    let roots = eig
        .eigenvalues
        .map(|l| Complex64::new(if l > floor { l.sqrt() } else { 0.0 }, 0.0));
    &eig.eigenvectors * CMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// B(rho, sigma) = Tr sqrt(sqrt(rho) sigma sqrt(rho)), evaluated as the sum of
/// singular values of sqrt(rho) sqrt(sigma).
pub fn generalized_overlap_numeric(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let product = psd_sqrt(&rho.entries) * psd_sqrt(&sigma.entries);
    Ok(product.singular_values().sum())
}

/// Mean occupation of a mode of frequency w at inverse temperature beta.
pub fn bose_occupation(omega: f64, beta: f64, c: &Constants) -> f64 {
    1.0 / (c.hbar * omega * beta).exp_m1()
}

/// D(alpha) rho_th D(alpha)^dagger with alpha the displacement imprinted by `traj`.
pub fn conditional_state(
    mode: &Mode,
    traj: &Trajectory,
    nbar: f64,
    dim: usize,
    c: &Constants,
    policy: &TruncationPolicy,
) -> Result<DensityMatrix> {
    let alpha = displacement_amplitude(mode, traj, c);
    let thermal = thermal_state(nbar, dim, policy)?;
    let d = displacement_matrix(alpha, dim, policy)?;
    thermal.conjugate(&d, policy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub numeric: f64,
    pub analytic: f64,
    pub abs_discrepancy: f64,
    pub rel_discrepancy: f64,
    pub dim: usize,
    pub nbar: f64,
    /// Thermal weight lost to the truncation.
    pub thermal_deficit: f64,
}

/// Compares the Fock-space overlap of the two conditional states with the
/// closed-form single-mode overlap. `dim = None` lets the policy choose.
pub fn oracle_vs_analytic(
    mode: &Mode,
    pair: (&Trajectory, &Trajectory),
    beta: f64,
    dim: Option<usize>,
    c: &Constants,
    policy: &TruncationPolicy,
) -> Result<OracleReport> {
    let nbar = bose_occupation(mode.omega, beta, c);
    let a = displacement_amplitude(mode, pair.0, c);
    let b = displacement_amplitude(mode, pair.1, c);
    let dim = match dim {
        Some(d) => d,
        None => policy.choose_dim(nbar, a.norm().max(b.norm()))?,
    };
    let rho = conditional_state(mode, pair.0, nbar, dim, c, policy)?;
    let sigma = conditional_state(mode, pair.1, nbar, dim, c, policy)?;
    let numeric = generalized_overlap_numeric(&rho, &sigma)?;
    let analytic = single_mode_overlap(mode, &delta(pair.0, pair.1)?, beta, c);
    let abs_discrepancy = (numeric - analytic).abs();
    Ok(OracleReport {
        numeric,
        analytic,
        abs_discrepancy,
        rel_discrepancy: abs_discrepancy / analytic,
        dim,
        nbar,
        thermal_deficit: thermal_deficit(nbar, dim),
    })
}

/// Overlap of two displaced thermal states with the same nbar, built directly
/// from the displacements.
pub fn displaced_thermal_overlap(
    nbar: f64,
    alpha: Complex64,
    beta_disp: Complex64,
    dim: usize,
    policy: &TruncationPolicy,
) -> Result<f64> {
    let thermal = thermal_state(nbar, dim, policy)?;
    let rho = thermal.conjugate(&displacement_matrix(alpha, dim, policy)?, policy)?;
    let sigma = thermal.conjugate(&displacement_matrix(beta_disp, dim, policy)?, policy)?;
    generalized_overlap_numeric(&rho, &sigma)
}

/// exp{-|eta|^2 / (2 (2 nbar + 1))}, the closed form with tanh(hbar beta w/2)
/// written through nbar.
pub fn analytic_displaced_thermal_overlap(nbar: f64, eta: Complex64) -> f64 {
    (-0.5 * eta.norm_sqr() / (2.0 * nbar + 1.0)).exp()
}
