//! Pilot-aided two-step MMSE estimation of the diffuse channel: MMSE at the
//! pilot slots followed by linear interpolation to every data group, the
//! equivalent one-shot MMSE, and the finite-size error covariances.
//!
//! Pilot symbols are all ones. With c = 1/snr and A = R_hh + c I:
//!
//! ```text
//! W_p^H     = R_hh A^{-1} / sqrt(E0)
//! W_d,u^H   = R_dh,u R_hh^{-1}
//! R_ee      = R_hh - R_hh A^{-1} R_hh = c (I - c A^{-1})
//! Psi_ee,u  = R_hh - R_dh,u A^{-1} R_dh,u^T
//! ```

use num_complex::Complex64;

use crate::channel::{LinkBudget, PilotLayout};
use crate::correlation::{r_dh_offset, r_hh, slot_corr, ScenarioParams};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::numerics::{cholesky_psd, Cholesky, Matrix, SymmetricToeplitz};

#[derive(Debug, Clone)]
pub struct EstimatorContext {
    scenario: ScenarioParams,
    layout: PilotLayout,
    budget: LinkBudget,
    r_hh: SymmetricToeplitz,
    r_dh: Vec<Matrix>,
    regularized: Cholesky,
    w_p_h: Matrix,
    w_d_h: Vec<Matrix>,
}

impl EstimatorContext {
    pub fn new(s: &ScenarioParams, layout: &PilotLayout, budget: &LinkBudget, exec: Execution) -> Result<Self> {
        s.validate()?;
        if !(budget.symbol_energy > 0.0) {
            return Err(Error::Singular);
        }
        let c = 1.0 / budget.snr();
        let r_hh = r_hh(s, layout.n_p, layout.delta);
        let r = r_hh.to_dense();
        let mut a = r.clone();
        a.add_diagonal(c);
        let regularized = cholesky_psd(&a, exec).map_err(|_| Error::Singular)?;

        // W_p^H = (I - c A^{-1}) / sqrt(E0)
        let mut w_p_h = regularized.inverse(exec);
        w_p_h.scale(-c);
        w_p_h.add_diagonal(1.0);
        w_p_h.scale(1.0 / budget.symbol_energy.sqrt());

        let r_fact = cholesky_psd(&r, exec)?;
        let r_dh: Vec<Matrix> = (1..=layout.l)
            .map(|u| r_dh_offset(s, layout.n_p, layout.delta, u as f64 * layout.delta))
            .collect();
        let w_d_h = r_dh
            .iter()
            .map(|m| r_fact.solve_right(m, exec))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scenario: *s,
            layout: layout.clone(),
            budget: *budget,
            r_hh,
            r_dh,
            regularized,
            w_p_h,
            w_d_h,
        })
    }

    pub fn layout(&self) -> &PilotLayout {
        &self.layout
    }

    pub fn budget(&self) -> &LinkBudget {
        &self.budget
    }

    pub fn r_hh(&self) -> &SymmetricToeplitz {
        &self.r_hh
    }

    pub fn r_dh(&self, u: usize) -> Result<&Matrix> {
        self.check_group(u)?;
        Ok(&self.r_dh[u - 1])
    }

    /// W_p^H (real, symmetric).
    pub fn pilot_matrix(&self) -> &Matrix {
        &self.w_p_h
    }

    /// W_d,u^H.
    pub fn interpolator(&self, u: usize) -> Result<&Matrix> {
        self.check_group(u)?;
        Ok(&self.w_d_h[u - 1])
    }

    fn check_group(&self, u: usize) -> Result<()> {
        if u == 0 || u > self.layout.l {
            return Err(Error::Index {
                index: u,
                range: format!("1..={}", self.layout.l),
            });
        }
        Ok(())
    }

    fn check_len(&self, v: &[Complex64], expected: usize) -> Result<()> {
        if v.len() == expected {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected,
                got: v.len(),
            })
        }
    }

    fn pilot_residual(&self, y_p: &[Complex64], h_los_p: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.layout.n_p;
        self.check_len(y_p, n)?;
        self.check_len(h_los_p, n)?;
        let a = self.budget.symbol_energy.sqrt();
        Ok(y_p.iter().zip(h_los_p).map(|(y, l)| y - l * a).collect())
    }
}

/// Diffuse estimate at the pilot slots.
pub fn estimate_pilot_locations(
    ctx: &EstimatorContext,
    y_p: &[Complex64],
    h_los_p: &[Complex64],
) -> Result<Vec<Complex64>> {
    let r = ctx.pilot_residual(y_p, h_los_p)?;
    Ok(ctx.w_p_h.matvec_complex(&r))
}

/// Full estimate (diffuse plus LOS) at the slots of data group `u`.
pub fn interpolate(
    ctx: &EstimatorContext,
    h_p_dif: &[Complex64],
    u: usize,
    h_los_d: &[Complex64],
) -> Result<Vec<Complex64>> {
    let w = ctx.interpolator(u)?;
    ctx.check_len(h_p_dif, ctx.layout.n_p)?;
    ctx.check_len(h_los_d, ctx.layout.n_p)?;
    Ok(w.matvec_complex(h_p_dif)
        .into_iter()
        .zip(h_los_d)
        .map(|(d, l)| d + l)
        .collect())
}

/// One-shot MMSE estimate at any slot; `h_los` covers the whole frame.
pub fn estimate_direct(
    ctx: &EstimatorContext,
    y_p: &[Complex64],
    h_los: &[Complex64],
    slot: usize,
) -> Result<Complex64> {
    let layout = &ctx.layout;
    ctx.check_len(h_los, layout.n_r)?;
    if slot >= layout.n_r {
        return Err(Error::Index {
            index: slot,
            range: format!("0..{}", layout.n_r),
        });
    }
    let h_los_p: Vec<Complex64> = layout.pilot_indices.iter().map(|&i| h_los[i]).collect();
    let resid = ctx.pilot_residual(y_p, &h_los_p)?;
    let coef = ctx.regularized.solve_complex(&resid);
    let dot = layout
        .pilot_indices
        .iter()
        .zip(&coef)
        .fold(Complex64::new(0.0, 0.0), |acc, (&p, c)| {
            acc + c * slot_corr(&ctx.scenario, p.abs_diff(slot))
        });
    Ok(dot / ctx.budget.symbol_energy.sqrt() + h_los[slot])
}

#[derive(Debug, Clone)]
pub struct MseReport {
    pub sigma_p_sq_finite: f64,
    /// Entry `u - 1` belongs to data group u.
    pub sigma_d_sq_finite: Vec<f64>,
    pub error_cov_pilot: Matrix,
    pub error_cov_data: Vec<Matrix>,
}

/// Error covariances and their normalized traces for every group.
pub fn error_covariances(ctx: &EstimatorContext, exec: Execution) -> Result<MseReport> {
    let n = ctx.layout.n_p;
    let r = ctx.r_hh.to_dense();
    let g = &ctx.regularized;

    let mut y = r.clone();
    g.forward_rows(&mut y, exec)?;
    let r_ee = r.sub(&y.mul_transpose(&y, exec));

    let mut psi = Vec::with_capacity(ctx.layout.l);
    for m in &ctx.r_dh {
        let mut z = m.clone();
        g.forward_rows(&mut z, exec)?;
        psi.push(r.sub(&z.mul_transpose(&z, exec)));
    }
    let nf = n as f64;
    Ok(MseReport {
        sigma_p_sq_finite: r_ee.trace() / nf,
        sigma_d_sq_finite: psi.iter().map(|p| p.trace() / nf).collect(),
        error_cov_pilot: r_ee,
        error_cov_data: psi,
    })
}

/// Normalized traces only, for large pilot counts where the dense covariance
/// matrices would be wasteful. Groups are listed in `groups` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct MseTraces {
    pub sigma_p_sq: f64,
    pub sigma_d_sq: Vec<f64>,
}

pub fn mse_traces(
    s: &ScenarioParams,
    n_p: usize,
    delta: f64,
    snr: f64,
    groups: &[usize],
    exec: Execution,
) -> Result<MseTraces> {
    s.validate()?;
    if n_p == 0 {
        return Err(crate::error::invalid("n_p", "must be at least 1"));
    }
    let l = PilotLayout::l_for_delta(delta)?;
    if let Some(&u) = groups.iter().find(|&&u| u == 0 || u > l) {
        return Err(Error::Index {
            index: u,
            range: format!("1..={l}"),
        });
    }
    let c = 1.0 / snr;
    let r = r_hh(s, n_p, delta);
    let mut a = r.to_dense();
    a.add_diagonal(c);
    let g = cholesky_psd(&a, exec)?;
    drop(a);
    let nf = n_p as f64;
    let trace_inv = g.trace_inverse(exec);
    let sigma_p_sq = c * (nf - c * trace_inv) / nf;
    let trace_r = r.first_row()[0] * nf;
    let mut sigma_d_sq = Vec::with_capacity(groups.len());
    for &u in groups {
        let mut z = r_dh_offset(s, n_p, delta, u as f64 * delta);
        g.forward_rows(&mut z, exec)?;
        sigma_d_sq.push((trace_r - z.frobenius_norm_sq()) / nf);
    }
    Ok(MseTraces { sigma_p_sq, sigma_d_sq })
}
