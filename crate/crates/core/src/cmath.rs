//! Complex elementary functions that stay accurate where the textbook
//! formulas lose digits or overflow.

use num_complex::Complex64;

/// e^z - 1 without cancellation for small |z|.
pub fn expm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        return z * (1.0 + z * (0.5 + z / 6.0));
    }
    let (x, y) = (z.re, z.im);
    let half_sin = (0.5 * y).sin();
    Complex64::new(
        x.exp_m1() * y.cos() - 2.0 * half_sin * half_sin,
        x.exp() * y.sin(),
    )
}

/// (e^z - 1)/z, equal to 1 at z = 0.
pub fn expm1_over(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        1.0 + z * (0.5 + z / 6.0)
    } else {
        expm1(z) / z
    }
}

/// tanh for Re z >= 0 without overflow: (1 - e^{-2z}) / (1 + e^{-2z}).
pub fn tanh(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        return -tanh(-z);
    }
    let e = (-2.0 * z).exp();
    -expm1(-2.0 * z) / (1.0 + e)
}

/// coth for Re z >= 0, z != 0.
pub fn coth(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        return -coth(-z);
    }
    let e = (-2.0 * z).exp();
    (1.0 + e) / -expm1(-2.0 * z)
}
