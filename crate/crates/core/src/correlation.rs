//! Spatial-temporal cross-correlation of the Rician channel seen by a moving
//! linear array, its delay-matched special case, and the Toeplitz
//! correlation matrices over pilot slots.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::channel::PilotLayout;
use crate::error::{invalid, Error, Result};
use crate::numerics::{bessel_i0_complex, bessel_i0e_complex, bessel_i0e_real, Matrix, SymmetricToeplitz};

/// Physical scenario. All quantities are linear (no dB) and SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    /// Rician factor K_R (LOS power over diffuse power).
    pub rician_factor: f64,
    /// Exponential decay of the diffuse correlation, 1/m.
    pub scatter_decay: f64,
    /// Antenna spacing D, m.
    pub antenna_spacing: f64,
    /// Train speed v, m/s.
    pub speed: f64,
    /// Carrier wavelength, m.
    pub wavelength: f64,
    /// Concentration of the von Mises angle-of-arrival distribution.
    pub aoa_width: f64,
    /// Mean angle of arrival, rad.
    pub aoa_mean: f64,
    /// Direction of travel, rad.
    pub heading: f64,
    /// Number of antennas N_R on the array.
    pub num_antennas: usize,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            rician_factor: 1.0,
            scatter_decay: 0.1,
            antenna_spacing: 0.5,
            speed: 100.0,
            wavelength: 0.1,
            aoa_width: 0.0,
            aoa_mean: 0.0,
            heading: 0.0,
            num_antennas: 1,
        }
    }
}

impl ScenarioParams {
    pub fn with_rician_factor(mut self, k: f64) -> Self {
        self.rician_factor = k;
        self
    }

    pub fn with_scatter_decay(mut self, c0: f64) -> Self {
        self.scatter_decay = c0;
        self
    }

    pub fn with_antenna_spacing(mut self, d: f64) -> Self {
        self.antenna_spacing = d;
        self
    }

    pub fn with_num_antennas(mut self, n: usize) -> Self {
        self.num_antennas = n;
        self
    }

    /// Checks the parameter bounds. `scatter_decay = 0` is accepted as the
    /// static-scatterer limit.
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and >= 0, got {v}")))
            }
        };
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        finite_nonneg("rician_factor", self.rician_factor)?;
        finite_nonneg("scatter_decay", self.scatter_decay)?;
        positive("antenna_spacing", self.antenna_spacing)?;
        positive("speed", self.speed)?;
        positive("wavelength", self.wavelength)?;
        finite_nonneg("aoa_width", self.aoa_width)?;
        if !(-PI..PI).contains(&self.aoa_mean) {
            return Err(invalid("aoa_mean", format!("must lie in [-pi, pi), got {}", self.aoa_mean)));
        }
        if !self.heading.is_finite() {
            return Err(invalid("heading", "must be finite"));
        }
        if self.num_antennas == 0 {
            return Err(invalid("num_antennas", "must be positive"));
        }
        Ok(())
    }

    /// Maximum Doppler shift v / lambda, Hz.
    pub fn doppler(&self) -> f64 {
        self.speed / self.wavelength
    }

    /// Diffuse power 1 / (K_R + 1).
    pub fn diffuse_power(&self) -> f64 {
        1.0 / (self.rician_factor + 1.0)
    }

    /// LOS power K_R / (K_R + 1).
    pub fn los_power(&self) -> f64 {
        self.rician_factor / (self.rician_factor + 1.0)
    }

    /// Correlation between adjacent pilots, exp(-c0 D / delta).
    pub fn alpha(&self, delta: f64) -> f64 {
        (-self.scatter_decay * self.antenna_spacing / delta).exp()
    }

    /// Correlation decay from a pilot to the u-th data slot after it.
    pub fn beta(&self, u: usize) -> f64 {
        (-self.scatter_decay * u as f64 * self.antenna_spacing).exp()
    }

    fn phase_offset(&self, tau: f64, d: f64) -> f64 {
        2.0 * PI * (self.doppler() * tau - d / self.wavelength)
    }
}

/// Diffuse cross-correlation between the channel at (t, x) and (t + tau, x + d).
pub fn cross_corr_diffuse(s: &ScenarioParams, tau: f64, d: f64) -> Result<Complex64> {
    if !tau.is_finite() || !d.is_finite() {
        return Err(invalid("tau/d", "must be finite"));
    }
    let delta = s.phase_offset(tau, d);
    let kappa = s.aoa_width;
    let arg = Complex64::new(kappa * kappa - delta * delta, -2.0 * kappa * delta * (s.aoa_mean - s.heading).cos());
    let w = arg.sqrt();
    let decay = (-s.scatter_decay * s.speed * tau.abs()).exp();
    let ratio = if kappa == 0.0 {
        bessel_i0_complex(w)?
    } else {
        // both Bessel values carry exp(|Re|) scalings; divide them out first
        let num = bessel_i0e_complex(w)?;
        num / bessel_i0e_real(kappa) * (w.re.abs() - kappa).exp()
    };
    Ok(ratio * decay * s.diffuse_power())
}

/// LOS cross-correlation for the same displacement.
pub fn cross_corr_los(s: &ScenarioParams, tau: f64, d: f64) -> Complex64 {
    let delta = s.phase_offset(tau, d);
    Complex64::from_polar(s.los_power(), delta * s.heading.cos())
}

/// Delay-matched correlation between antennas `p < q` (0-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayCorr {
    pub dif: f64,
    pub los: f64,
}

pub fn delay_corr(s: &ScenarioParams, p: usize, q: usize) -> Result<DelayCorr> {
    if q >= s.num_antennas {
        return Err(Error::Index {
            index: q,
            range: format!("0..{}", s.num_antennas),
        });
    }
    if p >= q {
        return Err(Error::Index {
            index: p,
            range: format!("0..{q}"),
        });
    }
    Ok(DelayCorr {
        dif: slot_corr(s, q - p),
        los: s.los_power(),
    })
}

/// Diffuse correlation between slots `k` apart on the staticized channel.
pub(crate) fn slot_corr(s: &ScenarioParams, k: usize) -> f64 {
    (-s.scatter_decay * k as f64 * s.antenna_spacing).exp() * s.diffuse_power()
}

/// Pilot-slot correlation matrix R_hh.
pub fn build_r_hh(s: &ScenarioParams, layout: &PilotLayout) -> SymmetricToeplitz {
    r_hh(s, layout.n_p, layout.delta)
}

pub(crate) fn r_hh(s: &ScenarioParams, n_p: usize, delta: f64) -> SymmetricToeplitz {
    let scale = s.scatter_decay * s.antenna_spacing / delta;
    let p = s.diffuse_power();
    SymmetricToeplitz::new((0..n_p).map(|k| (-scale * k as f64).exp() * p).collect())
}

/// Cross-correlation R_dh,u between the u-th data group and the pilots.
pub fn build_r_dh(s: &ScenarioParams, layout: &PilotLayout, u: usize) -> Result<Matrix> {
    if u == 0 || u > layout.l {
        return Err(Error::Index {
            index: u,
            range: format!("1..={}", layout.l),
        });
    }
    Ok(r_dh_offset(s, layout.n_p, layout.delta, u as f64 * layout.delta))
}

/// Entry (m, n) is exp(-c0 |m - n + offset| D / delta) / (K_R + 1); `offset`
/// is u * delta for the u-th data group and 0 for the pilots themselves.
pub fn r_dh_offset(s: &ScenarioParams, n_p: usize, delta: f64, offset: f64) -> Matrix {
    let scale = s.scatter_decay * s.antenna_spacing / delta;
    let p = s.diffuse_power();
    // Toeplitz in m - n; evaluate each diagonal once
    let diag: Vec<f64> = (0..2 * n_p.max(1) - 1)
        .map(|i| {
            let k = i as f64 - (n_p as f64 - 1.0);
            (-scale * (k + offset).abs()).exp() * p
        })
        .collect();
    Matrix::from_fn(n_p, n_p, |m, n| diag[m + n_p - 1 - n])
}

/// Correlation matrices of one layout.
#[derive(Debug, Clone)]
pub struct CorrelationSet {
    pub r_hh_dif: SymmetricToeplitz,
    /// Entry `u - 1` holds R_dh,u.
    pub r_dh_dif: Vec<Matrix>,
    pub los_coefficient: f64,
}

impl CorrelationSet {
    pub fn build(s: &ScenarioParams, layout: &PilotLayout) -> Result<Self> {
        s.validate()?;
        Ok(Self {
            r_hh_dif: build_r_hh(s, layout),
            r_dh_dif: (1..=layout.l)
                .map(|u| build_r_dh(s, layout, u))
                .collect::<Result<_>>()?,
            los_coefficient: s.los_power(),
        })
    }

    pub fn r_dh(&self, u: usize) -> Result<&Matrix> {
        u.checked_sub(1)
            .and_then(|i| self.r_dh_dif.get(i))
            .ok_or_else(|| Error::Index {
                index: u,
                range: format!("1..={}", self.r_dh_dif.len()),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_layout;
    use crate::exec::Execution;
    use crate::numerics::Cholesky;

    fn scen(k: f64, c0: f64, d: f64) -> ScenarioParams {
        ScenarioParams::default()
            .with_rician_factor(k)
            .with_scatter_decay(c0)
            .with_antenna_spacing(d)
            .with_num_antennas(16)
    }

    #[test]
    fn diffuse_examples() {
        let s = ScenarioParams {
            aoa_width: 2.5,
            aoa_mean: 0.4,
            ..scen(1.0, 0.1, 0.5)
        };
        // delta = 0 when f_D tau = d / lambda
        let tau = 0.02;
        let d = s.doppler() * tau * s.wavelength;
        let v = cross_corr_diffuse(&s, tau, d).unwrap();
        let want = (-s.scatter_decay * s.speed * tau).exp() / 2.0;
        assert!((v.re - want).abs() < 1e-12 && v.im.abs() < 1e-12);
        assert!((cross_corr_diffuse(&s, 0.0, 0.0).unwrap().re - 0.5).abs() < 1e-15);

        // kappa = 0, delta = pi, no decay, K_R = 0: J0(pi)
        let s = ScenarioParams {
            aoa_width: 0.0,
            ..scen(0.0, 0.0, 0.5)
        };
        let d = -s.wavelength / 2.0;
        let v = cross_corr_diffuse(&s, 0.0, d).unwrap();
        assert!((v.re + 0.3042421776).abs() < 1e-9 && v.im.abs() < 1e-12);
    }

    #[test]
    fn diffuse_branch_choice_is_irrelevant() {
        let s = ScenarioParams {
            aoa_width: 3.0,
            aoa_mean: 1.1,
            ..scen(0.0, 0.0, 0.5)
        };
        for &d in &[0.013, 0.07, 0.21] {
            let delta = s.phase_offset(0.0, d);
            let arg = Complex64::new(9.0 - delta * delta, -6.0 * delta * (s.aoa_mean - s.heading).cos());
            let a = bessel_i0_complex(arg.sqrt()).unwrap();
            let b = bessel_i0_complex(-arg.sqrt()).unwrap();
            assert!((a - b).norm() < 1e-12 * a.norm());
            let v = cross_corr_diffuse(&s, 0.0, d).unwrap();
            let want = a / crate::numerics::bessel_i0_real(3.0);
            assert!((v - want).norm() < 1e-12);
            assert!(v.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn los_examples() {
        let s = scen(1.0, 0.1, 0.5);
        assert_eq!(cross_corr_los(&s, 0.0, 0.0), Complex64::new(0.5, 0.0));
        assert_eq!(cross_corr_los(&scen(0.0, 0.1, 0.5), 0.3, 0.1).norm(), 0.0);
        let v = cross_corr_los(&s, 0.0, -s.wavelength / 2.0);
        assert!((v - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn delay_corr_examples_and_consistency() {
        let s = scen(0.0, 0.1, 1.0);
        let c = delay_corr(&s, 0, 1).unwrap();
        assert!((c.dif - (-0.1f64).exp()).abs() < 1e-15);
        assert_eq!(c.los, 0.0);
        assert!(delay_corr(&s, 1, 1).is_err());
        assert!(delay_corr(&s, 2, 1).is_err());
        assert!(delay_corr(&s, 0, 16).is_err());

        let s = scen(3.0, 0.0, 1.0);
        let c = delay_corr(&s, 0, 7).unwrap();
        assert!((c.dif - 0.25).abs() < 1e-15 && (c.dif + c.los - 1.0).abs() < 1e-15);
        let c = delay_corr(&scen(1e12, 0.1, 1.0), 0, 1).unwrap();
        assert!(c.dif < 1e-11 && (c.los - 1.0).abs() < 1e-11);

        let s = ScenarioParams {
            aoa_width: 1.7,
            aoa_mean: -0.3,
            heading: 0.2,
            ..scen(1.0, 0.1, 0.5)
        };
        for p in 0..15 {
            for q in p + 1..16 {
                let k = (q - p) as f64;
                let tau = k * s.antenna_spacing / s.speed;
                let v = cross_corr_diffuse(&s, tau, k * s.antenna_spacing).unwrap();
                let c = delay_corr(&s, p, q).unwrap();
                assert!((v.re - c.dif).abs() < 1e-12 && v.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn r_hh_examples() {
        let s = scen(0.0, 0.1, 1.0);
        let l = make_layout(2, 1).unwrap();
        let r = build_r_hh(&s, &l).to_dense();
        let e = (-0.2f64).exp();
        assert_eq!(r.row(0), &[1.0, e]);
        assert_eq!(r.row(1), &[e, 1.0]);
        let r = build_r_hh(&scen(1.0, 1e6, 1.0), &make_layout(3, 1).unwrap()).to_dense();
        assert!(r.max_abs_diff(&{
            let mut i = Matrix::identity(3);
            i.scale(0.5);
            i
        }) < 1e-300);
        let r = build_r_hh(&scen(2.0, 0.1, 1.0), &make_layout(1, 3).unwrap());
        assert_eq!(r.first_row(), &[1.0 / 3.0]);

        let l = make_layout(40, 4).unwrap();
        let r = build_r_hh(&scen(1.0, 0.1, 0.5), &l).to_dense();
        let c = Cholesky::factor(&r, Execution::Sequential).unwrap();
        assert_eq!(c.jitter(), 0.0);
    }

    #[test]
    fn r_dh_examples() {
        let s = scen(0.0, 0.1, 1.0);
        let l = make_layout(1, 1).unwrap();
        let r = build_r_dh(&s, &l, 1).unwrap();
        assert!((r[(0, 0)] - (-0.1f64).exp()).abs() < 1e-15);
        assert!(build_r_dh(&s, &l, 0).is_err());
        assert!(build_r_dh(&s, &l, 2).is_err());

        let l = make_layout(6, 5).unwrap();
        let zero = r_dh_offset(&s, 6, l.delta, 0.0);
        assert!(zero.max_abs_diff(&build_r_hh(&s, &l).to_dense()) < 1e-15);

        let mats: Vec<Matrix> = (1..=5).map(|u| build_r_dh(&s, &l, u).unwrap()).collect();
        for w in mats.windows(2) {
            for m in 0..6 {
                for n in 0..=m {
                    assert!(w[1][(m, n)] < w[0][(m, n)]);
                }
            }
        }
    }

    #[test]
    fn r_dh_matches_alpha_beta_form() {
        let s = scen(1.0, 0.1, 0.5);
        let l = make_layout(7, 9).unwrap();
        let a = s.alpha(l.delta);
        for u in 1..=9 {
            let b = s.beta(u);
            let r = build_r_dh(&s, &l, u).unwrap();
            for m in 0..7 {
                for n in 0..7 {
                    let k = m as i32 - n as i32;
                    let want = if k >= 0 { a.powi(k) * b } else { a.powi(-k) / b } / 2.0;
                    assert!((r[(m, n)] - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn correlation_set_bounds() {
        let s = scen(1.0, 0.1, 0.5);
        let l = make_layout(5, 3).unwrap();
        let set = CorrelationSet::build(&s, &l).unwrap();
        assert_eq!(set.r_dh_dif.len(), 3);
        assert_eq!(set.los_coefficient, 0.5);
        for v in set.r_hh_dif.first_row() {
            assert!(*v > 0.0 && *v <= 0.5);
        }
        assert!(set.r_dh(0).is_err() && set.r_dh(4).is_err());
        assert!(set.r_dh(3).unwrap().as_slice().iter().all(|v| *v > 0.0 && *v <= 0.5));
    }

    #[test]
    fn validation() {
        assert!(scen(1.0, 0.1, 0.5).validate().is_ok());
        assert!(scen(-1.0, 0.1, 0.5).validate().is_err());
        assert!(scen(1.0, 0.1, 0.0).validate().is_err());
        assert!(scen(1.0, 0.1, 0.5).with_num_antennas(0).validate().is_err());
        assert!(ScenarioParams { aoa_mean: PI, ..scen(1.0, 0.1, 0.5) }.validate().is_err());
        assert!((scen(1.0, 0.1, 0.5).alpha(0.1) - (-0.5f64).exp()).abs() < 1e-15);
    }
}
