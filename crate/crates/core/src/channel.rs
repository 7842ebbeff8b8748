//! Frame layout of the staticized channel, correlated Rician channel draws and
//! the received-signal model.
//!
//! Slots are 0-based: pilot `k` sits at slot `k (L + 1)` and the u-th data
//! slot after it (u = 1..=L) at `k (L + 1) + u`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::correlation::{slot_corr, ScenarioParams};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::numerics::{cholesky_psd, Cholesky, SymmetricToeplitz};

/// Tolerance on |x_i| = 1 for transmitted symbols.
pub const MODULUS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PilotLayout {
    pub n_r: usize,
    pub n_p: usize,
    pub n_s: usize,
    pub l: usize,
    pub delta: f64,
    pub pilot_indices: Vec<usize>,
}

/// `n_p` pilots, each followed by `l` data slots.
pub fn make_layout(n_p: usize, l: usize) -> Result<PilotLayout> {
    if n_p == 0 {
        return Err(invalid("n_p", "must be at least 1"));
    }
    if l == 0 {
        return Err(invalid("L", "must be at least 1"));
    }
    Ok(PilotLayout {
        n_r: n_p * (l + 1),
        n_p,
        n_s: n_p * l,
        l,
        delta: 1.0 / (l + 1) as f64,
        pilot_indices: (0..n_p).map(|k| k * (l + 1)).collect(),
    })
}

impl PilotLayout {
    /// The L with 1 / (L + 1) = delta, if delta is such a unit fraction.
    pub fn l_for_delta(delta: f64) -> Result<usize> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(invalid("delta", format!("must lie in (0, 0.5], got {delta}")));
        }
        let l = (1.0 / delta).round() as usize - 1;
        if (1.0 / (l + 1) as f64 - delta).abs() > 1e-9 * delta {
            return Err(invalid("delta", format!("{delta} is not of the form 1/(L+1)")));
        }
        Ok(l)
    }

    pub fn from_delta(n_p: usize, delta: f64) -> Result<Self> {
        make_layout(n_p, Self::l_for_delta(delta)?)
    }

    /// Slot of the u-th data symbol after pilot `k` (`u = 0` is the pilot).
    pub fn slot(&self, k: usize, u: usize) -> usize {
        k * (self.l + 1) + u
    }

    /// Slots of data group `u`, one per pilot.
    pub fn group_slots(&self, u: usize) -> Result<Vec<usize>> {
        if u == 0 || u > self.l {
            return Err(Error::Index {
                index: u,
                range: format!("1..={}", self.l),
            });
        }
        Ok((0..self.n_p).map(|k| self.slot(k, u)).collect())
    }

    /// Group offset of a slot: 0 for pilots, u for data.
    pub fn group_of(&self, slot: usize) -> Result<usize> {
        if slot >= self.n_r {
            return Err(Error::Index {
                index: slot,
                range: format!("0..{}", self.n_r),
            });
        }
        Ok(slot % (self.l + 1))
    }

    pub fn is_pilot(&self, slot: usize) -> bool {
        slot.is_multiple_of(self.l + 1)
    }
}

/// Symbol timing chosen so that the array advances one spacing every K symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockTiming {
    pub symbol_time: f64,
    pub k_per_spacing: usize,
}

impl BlockTiming {
    pub fn new(antenna_spacing: f64, speed: f64, k_per_spacing: usize) -> Result<Self> {
        if k_per_spacing == 0 {
            return Err(invalid("K", "must be at least 1"));
        }
        if !(antenna_spacing > 0.0 && speed > 0.0) {
            return Err(invalid("D/v", "must be positive"));
        }
        Ok(Self {
            symbol_time: antenna_spacing / (speed * k_per_spacing as f64),
            k_per_spacing,
        })
    }

    pub fn frames_per_block(&self) -> usize {
        self.k_per_spacing
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub symbol_energy: f64,
    pub noise_var: f64,
}

impl LinkBudget {
    pub fn new(symbol_energy: f64, noise_var: f64) -> Result<Self> {
        if !(symbol_energy.is_finite() && symbol_energy >= 0.0) {
            return Err(invalid("E0", format!("must be finite and >= 0, got {symbol_energy}")));
        }
        if !(noise_var.is_finite() && noise_var > 0.0) {
            return Err(invalid("noise_var", format!("must be finite and > 0, got {noise_var}")));
        }
        Ok(Self {
            symbol_energy,
            noise_var,
        })
    }

    /// Unit noise variance and E0 = snr.
    pub fn from_snr(snr: f64) -> Result<Self> {
        if !(snr.is_finite() && snr > 0.0) {
            return Err(invalid("snr", format!("must be finite and > 0, got {snr}")));
        }
        Self::new(snr, 1.0)
    }

    pub fn snr(&self) -> f64 {
        self.symbol_energy / self.noise_var
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Complex64>,
    pub h_los: Vec<Complex64>,
    pub h_dif: Vec<Complex64>,
}

/// Draws channel realizations for a fixed scenario and frame length. The
/// Cholesky factor of the diffuse covariance is computed once.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    factor: Arc<Cholesky>,
    los_amplitude: f64,
}

impl ChannelSampler {
    pub fn new(s: &ScenarioParams, n_r: usize) -> Result<Self> {
        s.validate()?;
        if n_r == 0 {
            return Err(invalid("n_r", "must be positive"));
        }
        let cov = SymmetricToeplitz::new((0..n_r).map(|k| slot_corr(s, k)).collect());
        let factor = cholesky_psd(&cov.to_dense(), Execution::Sequential)?;
        Ok(Self {
            factor: Arc::new(factor),
            los_amplitude: s.los_power().sqrt(),
        })
    }

    pub fn n_r(&self) -> usize {
        self.factor.dim()
    }

    pub fn sample(&self, seed: u64) -> ChannelRealization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let n = self.n_r();
        let z: Vec<Complex64> = (0..n).map(|_| complex_normal(rng, 1.0)).collect();
        let l = self.factor.l();
        let h_dif: Vec<Complex64> = (0..n)
            .map(|i| {
                let row = &l.row(i)[..=i];
                row.iter().zip(&z).fold(Complex64::new(0.0, 0.0), |acc, (a, zj)| acc + zj * a)
            })
            .collect();
        let theta = rng.random_range(-PI..PI);
        let los = Complex64::from_polar(self.los_amplitude, theta);
        let h_los = vec![los; n];
        let h = h_dif.iter().map(|d| d + los).collect();
        ChannelRealization { h, h_los, h_dif }
    }
}

/// Circularly-symmetric complex Gaussian with the given variance.
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let sd = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

pub fn sample_channel(s: &ScenarioParams, layout: &PilotLayout, seed: u64) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(s, layout.n_r)?.sample(seed))
}

/// y_i = sqrt(E0) h_i x_i + n_i with n_i ~ CN(0, noise_var).
pub fn transmit(
    h: &ChannelRealization,
    x: &[Complex64],
    budget: &LinkBudget,
    seed: u64,
) -> Result<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    transmit_with(&h.h, x, budget, &mut rng)
}

pub(crate) fn transmit_with<R: Rng + ?Sized>(
    h: &[Complex64],
    x: &[Complex64],
    budget: &LinkBudget,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if x.len() != h.len() {
        return Err(Error::Dimension {
            expected: h.len(),
            got: x.len(),
        });
    }
    if let Some((index, m)) = x
        .iter()
        .map(|v| v.norm())
        .enumerate()
        .find(|(_, m)| (m - 1.0).abs() > MODULUS_TOL)
    {
        return Err(Error::Modulus { index, modulus: m });
    }
    let a = budget.symbol_energy.sqrt();
    Ok(h.iter()
        .zip(x)
        .map(|(hi, xi)| hi * xi * a + complex_normal(rng, budget.noise_var))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scen(k: f64, c0: f64, d: f64) -> ScenarioParams {
        ScenarioParams::default()
            .with_rician_factor(k)
            .with_scatter_decay(c0)
            .with_antenna_spacing(d)
            .with_num_antennas(64)
    }

    #[test]
    fn layout_examples() {
        let l = make_layout(2, 1).unwrap();
        assert_eq!((l.n_r, l.delta), (4, 0.5));
        assert_eq!(l.pilot_indices, vec![0, 2]);
        let l = make_layout(4, 4).unwrap();
        assert_eq!((l.n_r, l.n_s, l.delta), (20, 16, 0.2));
        assert_eq!(l.pilot_indices, vec![0, 5, 10, 15]);
        assert_eq!(l.group_slots(2).unwrap(), vec![2, 7, 12, 17]);
        assert_eq!(l.group_of(13).unwrap(), 3);
        assert!(l.is_pilot(10) && !l.is_pilot(11));
        assert!(l.group_slots(5).is_err() && l.group_of(20).is_err());
        let l = make_layout(1, 49).unwrap();
        assert!((l.delta - 0.02).abs() < 1e-15);
        assert_eq!(PilotLayout::l_for_delta(0.02).unwrap(), 49);
        assert_eq!(PilotLayout::l_for_delta(0.1).unwrap(), 9);
        assert!(PilotLayout::l_for_delta(0.3).is_err());
        assert!(PilotLayout::l_for_delta(0.6).is_err());
        assert!(make_layout(0, 1).is_err() && make_layout(1, 0).is_err());
    }

    #[test]
    fn timing_and_budget() {
        let t = BlockTiming::new(0.5, 100.0, 7).unwrap();
        assert!((100.0 * 7.0 * t.symbol_time - 0.5).abs() < 1e-12);
        assert_eq!(t.frames_per_block(), 7);
        let b = LinkBudget::from_snr(10.0).unwrap();
        assert!((b.snr() * b.noise_var - b.symbol_energy).abs() < 1e-12);
        assert!(LinkBudget::new(1.0, 0.0).is_err());
        assert!(LinkBudget::from_snr(0.0).is_err());
    }

    #[test]
    fn los_part() {
        let l = make_layout(4, 3).unwrap();
        let c = sample_channel(&scen(0.0, 0.1, 0.5), &l, 3).unwrap();
        assert!(c.h_los.iter().all(|v| v.norm() == 0.0));
        let c = sample_channel(&scen(3.0, 0.1, 0.5), &l, 3).unwrap();
        assert!(c.h_los.iter().all(|v| *v == c.h_los[0]));
        assert!((c.h_los[0].norm_sqr() - 0.75).abs() < 1e-14);
        for i in 0..l.n_r {
            assert_eq!(c.h[i], c.h_los[i] + c.h_dif[i]);
        }
        assert_eq!(sample_channel(&scen(3.0, 0.1, 0.5), &l, 3).unwrap(), c);
    }

    #[test]
    fn adjacent_correlation_and_power() {
        let s = scen(1.0, 0.1, 1.0);
        let sampler = ChannelSampler::new(&s, 4).unwrap();
        let trials = 200_000;
        let (mut c01, mut pw) = (0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..trials {
            let r = sampler.sample_with(&mut rng);
            c01 += (r.h_dif[0] * r.h_dif[1].conj()).re;
            pw += r.h.iter().map(|v| v.norm_sqr()).sum::<f64>() / 4.0;
        }
        let c01 = c01 / trials as f64 * 2.0;
        assert!((c01 - (-0.1f64).exp()).abs() < 0.01, "{c01}");
        assert!((pw / trials as f64 - 1.0).abs() < 0.01);
    }

    #[test]
    fn uncorrelated_limit() {
        let sampler = ChannelSampler::new(&scen(0.0, 1e3, 1.0), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 50_000;
        let mut c = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let r = sampler.sample_with(&mut rng);
            c += r.h[0] * r.h[1].conj();
        }
        assert!((c / n as f64).norm() < 0.02);
    }

    #[test]
    fn static_scatterers_factor_with_jitter() {
        let sampler = ChannelSampler::new(&scen(0.0, 0.0, 1.0), 8).unwrap();
        let r = sampler.sample(1);
        for v in &r.h_dif[1..] {
            assert!((v - r.h_dif[0]).norm() < 1e-3);
        }
    }

    #[test]
    fn transmit_examples() {
        let l = make_layout(3, 2).unwrap();
        let c = sample_channel(&scen(1.0, 0.1, 0.5), &l, 7).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); l.n_r];
        let b = LinkBudget::new(4.0, 1e-300).unwrap();
        let y = transmit(&c, &ones, &b, 1).unwrap();
        for (yi, hi) in y.iter().zip(&c.h) {
            assert!((yi - hi * 2.0).norm() < 1e-140);
        }
        let b = LinkBudget::new(2.5, 0.7).unwrap();
        assert_eq!(transmit(&c, &ones, &b, 9).unwrap(), transmit(&c, &ones, &b, 9).unwrap());
        let mut bad = ones.clone();
        bad[4] = Complex64::new(1.0 + 1e-6, 0.0);
        assert!(matches!(transmit(&c, &bad, &b, 9), Err(Error::Modulus { index: 4, .. })));
        assert!(transmit(&c, &ones[1..], &b, 9).is_err());

        // E0 = 0: pure noise
        let b = LinkBudget::new(0.0, 0.7).unwrap();
        let h = vec![Complex64::new(1.0, 0.0); 100_000];
        let x = vec![Complex64::new(-1.0, 0.0); h.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = transmit_with(&h, &x, &b, &mut rng).unwrap();
        let mean = y.iter().sum::<Complex64>() / y.len() as f64;
        let var = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64;
        assert!(mean.norm() < 0.01 && (var - 0.7).abs() < 0.01);
    }
}
