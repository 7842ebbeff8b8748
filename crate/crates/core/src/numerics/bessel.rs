//! Modified Bessel function of the first kind, order zero.
//!
//! Real arguments use the power series up to |z| = 30 and the Hankel
//! asymptotic expansion beyond. Complex arguments use the power series for
//! |z| <= 8; further out the series cancels badly near the imaginary axis, so
//! the periodic integral I0(z) = (1/pi) int_0^pi exp(z cos t) dt is summed with
//! the trapezoidal rule, which converges geometrically for this integrand.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const TERM_BUDGET: usize = 200;
const REAL_SERIES_LIMIT: f64 = 30.0;
const COMPLEX_SERIES_LIMIT: f64 = 8.0;
/// Largest |z| accepted by the complex evaluators.
pub const COMPLEX_ARG_LIMIT: f64 = 1.0e3;

/// I0 of a real argument. Overflows to `inf` past z ~ 713.
pub fn bessel_i0_real(z: f64) -> f64 {
    let x = z.abs();
    if x <= REAL_SERIES_LIMIT {
        real_series(x)
    } else if x < 700.0 {
        x.exp() * asymptotic_sum(x) / (2.0 * PI * x).sqrt()
    } else {
        // Split the exponential so the intermediate does not overflow early.
        let half = (0.5 * x).exp();
        half * (half * asymptotic_sum(x) / (2.0 * PI * x).sqrt())
    }
}

/// Exponentially scaled I0: `exp(-|z|) * I0(z)`. Finite for every finite z.
pub fn bessel_i0e_real(z: f64) -> f64 {
    let x = z.abs();
    if x <= REAL_SERIES_LIMIT {
        real_series(x) * (-x).exp()
    } else {
        asymptotic_sum(x) / (2.0 * PI * x).sqrt()
    }
}

/// `ln I0(z)` without overflow.
pub fn ln_bessel_i0_real(z: f64) -> f64 {
    let x = z.abs();
    bessel_i0e_real(x).ln() + x
}

fn real_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut sum = 1.0;
    let mut comp = 0.0;
    let mut term = 1.0;
    for k in 1..TERM_BUDGET {
        let kf = k as f64;
        term *= q / (kf * kf);
        // Kahan step
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term < f64::EPSILON * 1e-2 * sum {
            break;
        }
    }
    sum
}

/// sum_k ((2k-1)!!)^2 / (k! 8^k x^k), truncated at the smallest term.
fn asymptotic_sum(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..TERM_BUDGET {
        let kf = k as f64;
        let next = term * (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (8.0 * kf * x);
        if next > term {
            break;
        }
        term = next;
        sum += term;
        if term < f64::EPSILON * 1e-2 * sum {
            break;
        }
    }
    sum
}

/// I0 of a complex argument, |z| <= 1e3.
pub fn bessel_i0_complex(z: Complex64) -> Result<Complex64> {
    let (scaled, shift) = i0_complex_parts(z)?;
    Ok(scaled * shift.exp())
}

/// `exp(-|Re z|) * I0(z)`.
pub fn bessel_i0e_complex(z: Complex64) -> Result<Complex64> {
    let (scaled, shift) = i0_complex_parts(z)?;
    Ok(scaled * (shift - z.re.abs()).exp())
}

/// Returns `(s, e)` with `I0(z) = s * exp(e)`.
fn i0_complex_parts(z: Complex64) -> Result<(Complex64, f64)> {
    let r = z.norm();
    if !r.is_finite() || r > COMPLEX_ARG_LIMIT {
        return Err(Error::Divergence { re: z.re, im: z.im });
    }
    if z.im == 0.0 {
        return Ok((Complex64::new(bessel_i0e_real(z.re), 0.0), z.re.abs()));
    }
    if r <= COMPLEX_SERIES_LIMIT {
        return complex_series(z).map(|v| (v, 0.0));
    }
    // Trapezoidal rule on [0, pi]; I0 is even so fold into Re z >= 0.
    let w = if z.re < 0.0 { -z } else { z };
    let m = r.ceil() as usize + 30;
    let h = PI / m as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..=m {
        let c = (j as f64 * h).cos();
        let v = (w * c - w.re).exp();
        let weight = if j == 0 || j == m { 0.5 } else { 1.0 };
        sum += v * weight;
    }
    Ok((sum / m as f64, w.re))
}

fn complex_series(z: Complex64) -> Result<Complex64> {
    let q = 0.25 * z * z;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..TERM_BUDGET {
        let kf = k as f64;
        term *= q / (kf * kf);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.norm() < f64::EPSILON * 1e-2 * sum.norm().max(1e-300) {
            return Ok(sum);
        }
    }
    Err(Error::Divergence { re: z.re, im: z.im })
}
