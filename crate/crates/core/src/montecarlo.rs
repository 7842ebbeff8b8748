//! End-to-end link simulation: draw a channel, send an all-ones pilot and
//! random BPSK data, estimate with two-step MMSE, detect, and accumulate the
//! empirical MSE and bit-error statistics.
//!
//! Every trial owns a ChaCha8 stream seeded from `(base_seed, trial_index)`,
//! and per-trial results are reduced in trial order, so reports are
//! bit-identical for any worker count.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::channel::{transmit_with, ChannelSampler, LinkBudget, PilotLayout};
use crate::correlation::ScenarioParams;
use crate::error::{invalid, Error, Result};
use crate::estimator::{estimate_pilot_locations, interpolate, EstimatorContext};
use crate::exec::Execution;

/// Trials between progress lines.
pub const PROGRESS_EVERY: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectorCsi {
    #[default]
    Estimated,
    Genie,
}

impl DetectorCsi {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorCsi::Estimated => "estimated",
            DetectorCsi::Genie => "genie",
        }
    }
}

impl std::str::FromStr for DetectorCsi {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimated" => Ok(DetectorCsi::Estimated),
            "genie" => Ok(DetectorCsi::Genie),
            other => Err(invalid("detector", format!("expected estimated or genie, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub scenario: ScenarioParams,
    pub layout: PilotLayout,
    pub budget: LinkBudget,
    pub num_trials: usize,
    pub base_seed: u64,
    pub detector_csi: DetectorCsi,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// stderr = sample standard deviation / sqrt(n).
    pub fn from_samples(samples: impl Iterator<Item = f64>) -> Self {
        let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
        for x in samples {
            n += 1.0;
            let d = x - mean;
            mean += d / n;
            m2 += d * (x - mean);
        }
        let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
        Self {
            mean,
            stderr: (var / n.max(1.0)).sqrt(),
        }
    }

    pub fn z_score(&self, reference: f64) -> f64 {
        (self.mean - reference) / self.stderr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalReport {
    pub mse_pilot: Estimate,
    /// Entry `u - 1` belongs to data group u.
    pub mse_data_per_u: Vec<Estimate>,
    pub ber: Estimate,
    pub trials_run: usize,
    pub bits: usize,
    pub zero_channel_decisions: usize,
}

/// Sign rule: +1 when Re(conj(h) y) >= 0.
pub fn detect_bpsk(y: Complex64, h: Complex64, symbol_energy: f64) -> Result<f64> {
    if h.norm() < 1e-300 {
        return Err(Error::ZeroChannel);
    }
    let z = (h.conj() * y).re / symbol_energy.sqrt().max(f64::MIN_POSITIVE);
    Ok(if z >= 0.0 { 1.0 } else { -1.0 })
}

/// splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(trial_index))
}

struct TrialStats {
    mse_pilot: f64,
    mse_data: Vec<f64>,
    errors: usize,
    zero_channel: usize,
}

struct Simulator<'a> {
    config: &'a TrialConfig,
    sampler: ChannelSampler,
    ctx: EstimatorContext,
    group_slots: Vec<Vec<usize>>,
}

impl Simulator<'_> {
    fn trial(&self, index: u64) -> Result<TrialStats> {
        let cfg = self.config;
        let layout = &cfg.layout;
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.base_seed, index));
        let mut ch_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
        let mut bit_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
        let mut noise_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());

        let ch = self.sampler.sample_with(&mut ch_rng);
        let x: Vec<Complex64> = (0..layout.n_r)
            .map(|i| {
                let v = if layout.is_pilot(i) || bit_rng.random::<bool>() { 1.0 } else { -1.0 };
                Complex64::new(v, 0.0)
            })
            .collect();
        let y = transmit_with(&ch.h, &x, &cfg.budget, &mut noise_rng)?;

        let pick = |v: &[Complex64], idx: &[usize]| -> Vec<Complex64> { idx.iter().map(|&i| v[i]).collect() };
        let pilots = &layout.pilot_indices;
        let y_p = pick(&y, pilots);
        let los_p = pick(&ch.h_los, pilots);
        let hp_dif = estimate_pilot_locations(&self.ctx, &y_p, &los_p)?;
        let n = layout.n_p as f64;
        let mse_pilot = pilots
            .iter()
            .zip(&hp_dif)
            .map(|(&i, e)| (e + ch.h_los[i] - ch.h[i]).norm_sqr())
            .sum::<f64>()
            / n;

        let mut mse_data = Vec::with_capacity(layout.l);
        let mut errors = 0;
        let mut zero_channel = 0;
        for (u, slots) in self.group_slots.iter().enumerate() {
            let h_hat = interpolate(&self.ctx, &hp_dif, u + 1, &pick(&ch.h_los, slots))?;
            let mut sq = 0.0;
            for (&i, hh) in slots.iter().zip(&h_hat) {
                sq += (hh - ch.h[i]).norm_sqr();
                let csi = match cfg.detector_csi {
                    DetectorCsi::Estimated => *hh,
                    DetectorCsi::Genie => ch.h[i],
                };
                let decision = match detect_bpsk(y[i], csi, cfg.budget.symbol_energy) {
                    Ok(d) => d,
                    Err(Error::ZeroChannel) => {
                        zero_channel += 1;
                        if bit_rng.random::<bool>() { 1.0 } else { -1.0 }
                    }
                    Err(e) => return Err(e),
                };
                if decision != x[i].re {
                    errors += 1;
                }
            }
            mse_data.push(sq / n);
        }
        Ok(TrialStats {
            mse_pilot,
            mse_data,
            errors,
            zero_channel,
        })
    }
}

/// Runs the configured trials. `progress` prints a line to stderr every
/// [`PROGRESS_EVERY`] completed trials.
pub fn run(config: &TrialConfig, exec: Execution, progress: bool) -> Result<EmpiricalReport> {
    if config.num_trials == 0 {
        return Err(invalid("num_trials", "must be at least 1"));
    }
    if config.num_trials < 100 {
        log::warn!("only {} trials; statistics will be unreliable", config.num_trials);
    }
    let layout = &config.layout;
    let sim = Simulator {
        config,
        sampler: ChannelSampler::new(&config.scenario, layout.n_r)?,
        ctx: EstimatorContext::new(&config.scenario, layout, &config.budget, Execution::Sequential)?,
        group_slots: (1..=layout.l).map(|u| layout.group_slots(u)).collect::<Result<_>>()?,
    };
    let done = AtomicUsize::new(0);
    let stats: Vec<TrialStats> = exec
        .map(config.num_trials, |i| {
            let r = sim.trial(i as u64);
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            if progress && k.is_multiple_of(PROGRESS_EVERY) {
                eprintln!("  {k}/{} trials", config.num_trials);
            }
            r
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let bits_per_trial = layout.n_s;
    let zero: usize = stats.iter().map(|t| t.zero_channel).sum();
    if zero > 0 {
        log::warn!("{zero} decisions with a zero channel estimate were resolved by coin flip");
    }
    Ok(EmpiricalReport {
        mse_pilot: Estimate::from_samples(stats.iter().map(|t| t.mse_pilot)),
        mse_data_per_u: (0..layout.l)
            .map(|u| Estimate::from_samples(stats.iter().map(|t| t.mse_data[u])))
            .collect(),
        ber: Estimate::from_samples(stats.iter().map(|t| t.errors as f64 / bits_per_trial as f64)),
        trials_run: stats.len(),
        bits: stats.len() * bits_per_trial,
        zero_channel_decisions: zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_layout;

    #[test]
    fn detection_examples() {
        let h = Complex64::new(0.3, -0.8);
        let e0: f64 = 4.0;
        assert_eq!(detect_bpsk(h * e0.sqrt(), h, e0).unwrap(), 1.0);
        assert_eq!(detect_bpsk(-h * e0.sqrt(), h, e0).unwrap(), -1.0);
        assert_eq!(detect_bpsk(h * e0.sqrt(), -h, e0).unwrap(), -1.0);
        assert_eq!(detect_bpsk(h, Complex64::new(0.0, 0.0), e0), Err(Error::ZeroChannel));
    }

    #[test]
    fn estimate_statistics() {
        let e = Estimate::from_samples([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.stderr - sd / 2.0).abs() < 1e-15);
    }

    #[test]
    fn seeds_are_distinct() {
        let a: std::collections::HashSet<u64> = (0..10_000).map(|i| trial_seed(7, i)).collect();
        assert_eq!(a.len(), 10_000);
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
    }

    fn config(trials: usize, snr: f64) -> TrialConfig {
        TrialConfig {
            scenario: ScenarioParams::default(),
            layout: make_layout(8, 3).unwrap(),
            budget: LinkBudget::from_snr(snr).unwrap(),
            num_trials: trials,
            base_seed: 42,
            detector_csi: DetectorCsi::Estimated,
        }
    }

    #[test]
    fn deterministic_across_workers() {
        let cfg = config(300, 10.0);
        let a = run(&cfg, Execution::Sequential, false).unwrap();
        let b = run(&cfg, Execution::Workers(4), false).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials_run, 300);
        assert_eq!(a.bits, 300 * 24);
        assert!(run(&config(0, 10.0), Execution::Sequential, false).is_err());
    }

    #[test]
    fn noiseless_pilots_are_exact() {
        let mut cfg = config(200, 1e12);
        let r = run(&cfg, Execution::Sequential, false).unwrap();
        assert!(r.mse_pilot.mean < 1e-9);
        cfg.detector_csi = DetectorCsi::Genie;
        assert_eq!(run(&cfg, Execution::Sequential, false).unwrap().ber.mean, 0.0);
    }
}
