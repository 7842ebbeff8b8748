//! BPSK error probability and effective spectral efficiency under imperfect
//! channel estimates.

use std::f64::consts::{LN_2, PI};

use crate::asymptotic::{sigma_d_asymptotic, sigma_p_asymptotic};
use crate::channel::PilotLayout;
use crate::correlation::ScenarioParams;
use crate::error::{invalid, Error, Result};
use crate::numerics::{gauss_legendre, integrate, ln_bessel_i0_real, QuadratureSpec};
use crate::numerics::{DEFAULT_CLOSED_NODES, DEFAULT_SEMI_INFINITE_NODES};

/// The chi-square density is cut where it falls below this fraction of its peak.
pub const PDF_TRUNCATION: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Bits,
    Nats,
}

impl LogBase {
    /// Multiplier turning a natural log into this base.
    pub fn scale(self) -> f64 {
        match self {
            LogBase::Bits => 1.0 / LN_2,
            LogBase::Nats => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LogBase::Bits => "bits",
            LogBase::Nats => "nats",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bits" | "2" => Ok(LogBase::Bits),
            "nats" | "e" => Ok(LogBase::Nats),
            other => Err(invalid("log_base", format!("expected bits or nats, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    /// Gauss-Legendre nodes for the BER integral over [0, pi/2].
    pub closed_nodes: usize,
    /// Gauss-Legendre nodes for the truncated capacity integral.
    pub semi_infinite_nodes: usize,
    pub log_base: LogBase,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            closed_nodes: DEFAULT_CLOSED_NODES,
            semi_infinite_nodes: DEFAULT_SEMI_INFINITE_NODES,
            log_base: LogBase::Bits,
        }
    }
}

/// Correlation coefficient between estimate and channel, and the SNR seen
/// after estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveLink {
    pub rho: f64,
    pub gamma_eff: f64,
}

impl EffectiveLink {
    pub fn new(rician_factor: f64, snr: f64, sigma_sq: f64) -> Result<Self> {
        if !(rician_factor >= 0.0 && rician_factor.is_finite()) {
            return Err(invalid("rician_factor", format!("must be finite and >= 0, got {rician_factor}")));
        }
        if !(snr > 0.0) {
            return Err(invalid("snr", format!("must be > 0, got {snr}")));
        }
        if !(sigma_sq >= 0.0 && sigma_sq.is_finite()) {
            return Err(invalid("sigma_sq", format!("must be finite and >= 0, got {sigma_sq}")));
        }
        Ok(Self {
            rho: (1.0 / (1.0 + (rician_factor + 1.0) * sigma_sq)).sqrt(),
            gamma_eff: 1.0 / (sigma_sq + 1.0 / snr),
        })
    }
}

/// BER of data group with estimation MSE `sigma_sq`.
pub fn ber_group(rician_factor: f64, snr: f64, sigma_sq: f64) -> Result<f64> {
    ber_group_with(rician_factor, snr, sigma_sq, DEFAULT_CLOSED_NODES)
}

pub fn ber_group_with(rician_factor: f64, snr: f64, sigma_sq: f64, nodes: usize) -> Result<f64> {
    let link = EffectiveLink::new(rician_factor, snr, sigma_sq)?;
    let g = link.gamma_eff / (rician_factor + 1.0);
    let k = rician_factor / (link.rho * link.rho);
    // With b = [1 + g / sin^2]^{-1} = s^2 / (s^2 + g) the prefactor and the
    // interior exponential combine into exp(-k (1 - b)) = exp(-k g / (s^2 + g)).
    let v = integrate(
        |phi| {
            let s2 = phi.sin().powi(2);
            let d = s2 + g;
            s2 / d * (-k * g / d).exp()
        },
        &QuadratureSpec::closed(0.0, PI / 2.0, nodes),
    )?;
    Ok(v / PI)
}

pub fn ber_average(per_group: &[f64]) -> Result<f64> {
    mean(per_group)
}

fn mean(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Capacity of a channel with gain |h|^2 at effective SNR.
pub fn capacity_upper(h_magnitude_sq: f64, gamma_eff: f64, base: LogBase) -> f64 {
    (h_magnitude_sq * gamma_eff).ln_1p() * base.scale()
}

/// Quadrature for expectations over the noncentral chi-square density with
/// two degrees of freedom and noncentrality 2 K_R, truncated where the
/// density drops below [`PDF_TRUNCATION`] of its peak.
#[derive(Debug, Clone)]
pub struct ChiSquareKernel {
    rician_factor: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    upper: f64,
}

impl ChiSquareKernel {
    pub fn new(rician_factor: f64, node_count: usize) -> Result<Self> {
        if !(rician_factor >= 0.0 && rician_factor.is_finite()) {
            return Err(invalid("rician_factor", format!("must be finite and >= 0, got {rician_factor}")));
        }
        if node_count < 2 {
            return Err(invalid("node_count", "need at least 2 nodes"));
        }
        let k = rician_factor;
        let mean = 2.0 + 2.0 * k;
        let sd = (4.0 + 8.0 * k).sqrt();
        let step = sd / 32.0;
        let grid_end = mean + 60.0 * sd;
        let mut peak = f64::NEG_INFINITY;
        let mut x = 0.0;
        while x <= grid_end {
            peak = peak.max(ln_pdf(k, x));
            x += step;
        }
        let cutoff = peak + PDF_TRUNCATION.ln();
        let mut upper = mean;
        while ln_pdf(k, upper) >= cutoff {
            upper += step;
        }
        // tail beyond `upper` decays at least like exp(-x/2) times a slowly growing factor
        log::debug!(
            "chi-square kernel K_R={k}: truncated at x={upper:.3}, tail mass <~ {:e}",
            2.0 * ln_pdf(k, upper).exp()
        );
        let gl = gauss_legendre(node_count);
        let half = 0.5 * upper;
        let nodes: Vec<f64> = gl.nodes.iter().map(|t| half * (t + 1.0)).collect();
        let weights = gl
            .weights
            .iter()
            .zip(&nodes)
            .map(|(w, &x)| w * half * ln_pdf(k, x).exp())
            .collect();
        Ok(Self {
            rician_factor,
            nodes,
            weights,
            upper,
        })
    }

    pub fn rician_factor(&self) -> f64 {
        self.rician_factor
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// E[f(x)] over the truncated density.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite { at: x });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Group spectral efficiency (1 - delta) E[log(1 + x gamma_eff / (2 (K_R + 1)))].
    pub fn spectral_efficiency(&self, snr: f64, delta: f64, sigma_sq: f64, base: LogBase) -> Result<f64> {
        if !(0.0..=0.5).contains(&delta) {
            return Err(invalid("delta", format!("must lie in [0, 0.5], got {delta}")));
        }
        let link = EffectiveLink::new(self.rician_factor, snr, sigma_sq)?;
        let scale = link.gamma_eff / (2.0 * (self.rician_factor + 1.0));
        let e = self.expect(|x| (x * scale).ln_1p())?;
        Ok((1.0 - delta) * e * base.scale())
    }
}

/// Log of the noncentral chi-square density (2 dof, noncentrality 2 K_R).
fn ln_pdf(k: f64, x: f64) -> f64 {
    -LN_2 - 0.5 * (x + 2.0 * k) + ln_bessel_i0_real((2.0 * k * x).sqrt())
}

pub fn spectral_efficiency_group(
    rician_factor: f64,
    snr: f64,
    delta: f64,
    sigma_sq: f64,
    settings: &AnalysisSettings,
) -> Result<f64> {
    ChiSquareKernel::new(rician_factor, settings.semi_infinite_nodes)?.spectral_efficiency(
        snr,
        delta,
        sigma_sq,
        settings.log_base,
    )
}

pub fn spectral_efficiency_average(per_group: &[f64]) -> Result<f64> {
    mean(per_group)
}

/// Analytical metrics of one (delta, snr) operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPoint {
    pub delta: f64,
    pub snr: f64,
    pub sigma_p_sq: f64,
    pub sigma_d_sq: Vec<f64>,
    pub p_e_per_group: Vec<f64>,
    pub p_e: f64,
    pub eta_per_group: Vec<f64>,
    pub eta: f64,
}

impl MetricPoint {
    /// Uses the large-frame MSEs.
    pub fn evaluate(s: &ScenarioParams, delta: f64, snr: f64, settings: &AnalysisSettings) -> Result<Self> {
        let kernel = ChiSquareKernel::new(s.rician_factor, settings.semi_infinite_nodes)?;
        Self::evaluate_with(s, delta, snr, settings, &kernel)
    }

    /// As [`MetricPoint::evaluate`] with a precomputed kernel for `s.rician_factor`.
    pub fn evaluate_with(
        s: &ScenarioParams,
        delta: f64,
        snr: f64,
        settings: &AnalysisSettings,
        kernel: &ChiSquareKernel,
    ) -> Result<Self> {
        let l = PilotLayout::l_for_delta(delta)?;
        let sigma_p_sq = sigma_p_asymptotic(s, delta, snr)?;
        let sigma_d_sq = (1..=l)
            .map(|u| sigma_d_asymptotic(s, delta, snr, u))
            .collect::<Result<Vec<_>>>()?;
        Self::from_mse(s.rician_factor, delta, snr, sigma_p_sq, sigma_d_sq, settings, kernel)
    }

    /// Metrics from given per-group MSEs (e.g. finite-frame traces).
    pub fn from_mse(
        rician_factor: f64,
        delta: f64,
        snr: f64,
        sigma_p_sq: f64,
        sigma_d_sq: Vec<f64>,
        settings: &AnalysisSettings,
        kernel: &ChiSquareKernel,
    ) -> Result<Self> {
        if kernel.rician_factor() != rician_factor {
            return Err(invalid("kernel", "built for a different Rician factor"));
        }
        let p_e_per_group = sigma_d_sq
            .iter()
            .map(|&v| ber_group_with(rician_factor, snr, v, settings.closed_nodes))
            .collect::<Result<Vec<_>>>()?;
        let eta_per_group = sigma_d_sq
            .iter()
            .map(|&v| kernel.spectral_efficiency(snr, delta, v, settings.log_base))
            .collect::<Result<Vec<_>>>()?;
        for &v in &sigma_d_sq {
            log::trace!("E|h_hat|^2 = {:.6} (sigma_d^2 = {v:.6})", 1.0 - v);
        }
        Ok(Self {
            delta,
            snr,
            sigma_p_sq,
            p_e: ber_average(&p_e_per_group)?,
            eta: spectral_efficiency_average(&eta_per_group)?,
            sigma_d_sq,
            p_e_per_group,
            eta_per_group,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rayleigh_ber(g: f64) -> f64 {
        0.5 * (1.0 - (g / (1.0 + g)).sqrt())
    }

    /// E1 by its convergent series, x small.
    fn expint_e1(x: f64) -> f64 {
        let euler = 0.577_215_664_901_532_9;
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum += term / k as f64;
        }
        -euler - x.ln() - sum
    }

    #[test]
    fn effective_link() {
        let l = EffectiveLink::new(1.0, 10.0, 0.0).unwrap();
        assert_eq!((l.rho, l.gamma_eff), (1.0, 10.0));
        let l = EffectiveLink::new(1.0, 10.0, 0.05).unwrap();
        assert!((l.gamma_eff - 1.0 / 0.15).abs() < 1e-12 && (l.rho - (1.0f64 / 1.1).sqrt()).abs() < 1e-15);
        assert!(EffectiveLink::new(1.0, 0.0, 0.1).is_err());
        assert!(EffectiveLink::new(1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn ber_rayleigh_oracles() {
        let v = ber_group(0.0, 10.0, 0.0).unwrap();
        assert!((v - rayleigh_ber(10.0)).abs() < 1e-12);
        assert!((v - 0.02327).abs() < 1e-5);
        let v = ber_group(0.0, 100.0, 0.1).unwrap();
        assert!((v - rayleigh_ber(1.0 / 0.11)).abs() < 1e-12);
        assert!((v - 0.02541).abs() < 2e-5);
        assert!((ber_group(1.0, 1e-12, 0.1).unwrap() - 0.5).abs() < 1e-5);
    }

    #[test]
    fn ber_monotone() {
        for k in [0.0, 1.0, 3.16] {
            let mut prev = 0.5 + 1e-12;
            for db in (0..=40).step_by(4) {
                let v = ber_group(k, 10f64.powf(db as f64 / 10.0), 0.0).unwrap();
                assert!(v < prev && v > 0.0);
                prev = v;
            }
            // with K_R > 0 the formula turns over at large MSE; stay below it
            let steps = if k > 2.0 { 6 } else { 10 };
            let mut prev = 0.0;
            for i in 0..steps {
                let v = ber_group(k, 10.0, i as f64 * 0.02).unwrap();
                assert!(v > prev);
                prev = v;
            }
        }
    }

    #[test]
    fn ber_integrand_finite_near_zero() {
        let v = ber_group_with(5.0, 1e6, 1e-8, 2048).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn averages() {
        assert_eq!(ber_average(&[0.1]).unwrap(), 0.1);
        assert!((ber_average(&[0.1, 0.3]).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(ber_average(&[]), Err(Error::Empty));
        assert_eq!(spectral_efficiency_average(&[1.5, 1.5]).unwrap(), 1.5);
        let m = spectral_efficiency_average(&[3.0, 2.0, 1.0]).unwrap();
        assert!((1.0..=3.0).contains(&m));
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(capacity_upper(0.0, 5.0, LogBase::Bits), 0.0);
        assert!((capacity_upper(1.0, 1.0, LogBase::Bits) - 1.0).abs() < 1e-15);
        assert!((capacity_upper(1.0, 3.0, LogBase::Bits) - 2.0).abs() < 1e-15);
        assert!((capacity_upper(1.0, 3.0, LogBase::Nats) - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn pdf_normalized() {
        for k in [0.0, 1.0, 3.16, 10.0] {
            let kern = ChiSquareKernel::new(k, 512).unwrap();
            let total = kern.expect(|_| 1.0).unwrap();
            assert!((total - 1.0).abs() < 1e-8, "K={k} total={total}");
            let m = kern.expect(|x| x).unwrap();
            assert!((m - (2.0 + 2.0 * k)).abs() < 1e-8);
        }
    }

    #[test]
    fn rayleigh_capacity_oracle() {
        let settings = AnalysisSettings::default();
        for g in [1.0, 10.0, 100.0] {
            let v = spectral_efficiency_group(0.0, g, 0.0, 0.0, &settings).unwrap();
            let want = std::f64::consts::LOG2_E * (1.0 / g).exp() * expint_e1(1.0 / g);
            assert!((v / want - 1.0).abs() < 1e-6, "g={g} {v} {want}");
        }
        let full = spectral_efficiency_group(0.0, 10.0, 0.0, 0.0, &settings).unwrap();
        let half = spectral_efficiency_group(0.0, 10.0, 0.5, 0.0, &settings).unwrap();
        assert!((half - 0.5 * full).abs() < 1e-15);
        assert!((full - 2.9065).abs() < 1e-4);
    }

    #[test]
    fn spectral_efficiency_monotone_in_gamma_eff() {
        let kern = ChiSquareKernel::new(1.0, 512).unwrap();
        let mut prev = 0.0;
        for i in 0..10 {
            let v = kern.spectral_efficiency(10.0, 0.1, 0.2 - i as f64 * 0.02, LogBase::Bits).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn metric_point_bounds() {
        let s = ScenarioParams::default();
        let p = MetricPoint::evaluate(&s, 0.1, 10.0, &AnalysisSettings::default()).unwrap();
        assert_eq!(p.p_e_per_group.len(), 9);
        assert!(p.p_e > 0.0 && p.p_e <= 0.5);
        assert!(p.eta >= 0.0 && p.eta <= 0.9 * 11f64.log2());
        let k = ChiSquareKernel::new(3.0, 64).unwrap();
        assert!(MetricPoint::evaluate_with(&s, 0.1, 10.0, &AnalysisSettings::default(), &k).is_err());
    }
}
