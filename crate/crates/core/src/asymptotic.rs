//! Large-frame limits of the estimation MSE.
//!
//! The pilot correlation sequence alpha^|k| / (K_R + 1) has the spectral
//! density
//!
//! ```text
//! Lambda(w)      = (1 - a^2) / (1 - 2 a cos w + a^2) / (K_R + 1)
//! Lambda_dh,u(w) = (a (1/b - b) e^{jw} + b - a^2 / b) / (1 - 2 a cos w + a^2) / (K_R + 1)
//! ```
//!
//! with a = exp(-c0 D / delta) and b = exp(-c0 u D). The pilot MSE has a
//! closed form; the data-group MSE adds the integral over w of
//! (Lambda^2 - |Lambda_dh,u|^2) / (Lambda + 1/snr).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::correlation::ScenarioParams;
use crate::error::{invalid, Error, Result};
use crate::numerics::integrate_doubling;

/// Starting node count and tolerance of the frequency-domain integral.
pub const SPECTRAL_NODES: usize = 256;
pub const SPECTRAL_REL_TOL: f64 = 1e-9;
const SPECTRAL_MAX_NODES: usize = 8192;

fn check_inputs(s: &ScenarioParams, delta: f64, snr: f64) -> Result<f64> {
    s.validate()?;
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(invalid("delta", format!("must lie in (0, 0.5], got {delta}")));
    }
    if !(snr > 0.0) || snr.is_nan() {
        return Err(invalid("snr", format!("must be > 0, got {snr}")));
    }
    let alpha = s.alpha(delta);
    if alpha >= 1.0 {
        return Err(Error::Degenerate { alpha });
    }
    Ok(alpha)
}

/// Limit of the normalized pilot error trace as the frame grows.
pub fn sigma_p_asymptotic(s: &ScenarioParams, delta: f64, snr: f64) -> Result<f64> {
    let alpha = check_inputs(s, delta, snr)?;
    Ok(sigma_p_closed_form(alpha, s.rician_factor, snr))
}

pub(crate) fn sigma_p_closed_form(alpha: f64, k: f64, snr: f64) -> f64 {
    let a2 = alpha * alpha;
    let kp = k + 1.0;
    if snr.is_infinite() {
        return 0.0;
    }
    1.0 / (snr * snr + 2.0 * snr * (1.0 + a2) / (1.0 - a2) * kp + kp * kp).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub alpha: f64,
    pub beta: f64,
    pub rician_factor: f64,
}

impl SpectralDensity {
    fn denom(&self, w: f64) -> f64 {
        let a = self.alpha;
        1.0 - 2.0 * a * w.cos() + a * a
    }

    pub fn lambda(&self, w: f64) -> f64 {
        let a = self.alpha;
        (1.0 - a * a) / self.denom(w) / (self.rician_factor + 1.0)
    }

    pub fn lambda_dh(&self, w: f64) -> Complex64 {
        let (a, b) = (self.alpha, self.beta);
        let amp = a * (1.0 / b - b);
        let re = amp * w.cos() + b - a * a / b;
        let im = amp * w.sin();
        Complex64::new(re, im) / (self.denom(w) * (self.rician_factor + 1.0))
    }

    pub fn lambda_dh_norm_sqr(&self, w: f64) -> f64 {
        self.lambda_dh(w).norm_sqr()
    }
}

/// Spectral densities of the pilot and group-u sequences (`u = 0` gives the
/// pilot sequence itself).
pub fn spectral_densities(s: &ScenarioParams, delta: f64, u: usize) -> Result<SpectralDensity> {
    let alpha = check_inputs(s, delta, 1.0)?;
    Ok(SpectralDensity {
        alpha,
        beta: s.beta(u),
        rician_factor: s.rician_factor,
    })
}

/// Limit of the normalized error trace of data group `u`.
pub fn sigma_d_asymptotic(s: &ScenarioParams, delta: f64, snr: f64, u: usize) -> Result<f64> {
    let alpha = check_inputs(s, delta, snr)?;
    let l = (1.0 / delta).round() as usize - 1;
    if u == 0 || u > l {
        return Err(Error::Index {
            index: u,
            range: format!("1..={l}"),
        });
    }
    let sd = SpectralDensity {
        alpha,
        beta: s.beta(u),
        rician_factor: s.rician_factor,
    };
    let sp = sigma_p_closed_form(alpha, s.rician_factor, snr);
    let c = 1.0 / snr;
    // the integrand is even in w
    let integral = integrate_doubling(
        |w| {
            let lam = sd.lambda(w);
            (lam * lam - sd.lambda_dh_norm_sqr(w)) / (lam + c)
        },
        0.0,
        PI,
        SPECTRAL_NODES,
        SPECTRAL_REL_TOL,
        SPECTRAL_MAX_NODES,
    )?;
    Ok((sp + integral / PI).max(sp))
}
