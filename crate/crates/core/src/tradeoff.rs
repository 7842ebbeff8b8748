//! Pilot-percentage sweep: locate the spectral-efficiency optimum on the grid
//! delta = 1/(L+1) and trace the error-probability / spectral-efficiency
//! polyline between it and delta = 1/2.

use crate::correlation::ScenarioParams;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{AnalysisSettings, ChiSquareKernel, MetricPoint};

/// Default largest L on the grid (delta down to 1/51).
pub const DEFAULT_L_MAX: usize = 50;

/// Index of the largest value; ties go to the earliest index. With the grid
/// ordered by decreasing delta this prefers more pilots.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some(b) if values[b] >= v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Metrics at every grid point L = 1..=l_max, in that order.
pub fn sweep_grid(
    s: &ScenarioParams,
    snr: f64,
    l_max: usize,
    settings: &AnalysisSettings,
    exec: Execution,
) -> Result<Vec<MetricPoint>> {
    if l_max < 1 {
        return Err(Error::Grid { l_max, min: 1 });
    }
    let kernel = ChiSquareKernel::new(s.rician_factor, settings.semi_infinite_nodes)?;
    exec.map(l_max, |i| {
        MetricPoint::evaluate_with(s, 1.0 / (i + 2) as f64, snr, settings, &kernel)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeOptimum {
    pub delta: f64,
    pub l: usize,
    pub eta: f64,
}

fn optimum_of(points: &[MetricPoint]) -> Result<SeOptimum> {
    let etas: Vec<f64> = points.iter().map(|p| p.eta).collect();
    let i = argmax(&etas).ok_or(Error::Empty)?;
    Ok(SeOptimum {
        delta: points[i].delta,
        l: i + 1,
        eta: etas[i],
    })
}

pub fn find_delta_se_opt(
    s: &ScenarioParams,
    snr: f64,
    l_max: usize,
    settings: &AnalysisSettings,
    exec: Execution,
) -> Result<SeOptimum> {
    optimum_of(&sweep_grid(s, snr, l_max, settings, exec)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub delta: f64,
    pub l: usize,
    pub p_e: f64,
    pub eta: f64,
    pub p_e_norm: f64,
    pub eta_norm: f64,
}

impl TradeoffPoint {
    pub fn is_anchor(&self) -> bool {
        self.p_e_norm == 1.0 && self.eta_norm == 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    /// Sorted by delta descending, ending at the anchor.
    pub points: Vec<TradeoffPoint>,
    pub delta_se_opt: f64,
}

/// A place where the curve is not jointly nonincreasing in delta.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub delta_hi: f64,
    pub delta_lo: f64,
    pub quantity: &'static str,
}

impl TradeoffCurve {
    pub fn anchor(&self) -> &TradeoffPoint {
        self.points.last().expect("curve always holds its anchor")
    }

    /// Adjacent pairs where p_e or eta increases with delta.
    pub fn monotonicity_violations(&self) -> Vec<MonotonicityViolation> {
        let mut out = Vec::new();
        for w in self.points.windows(2) {
            let (hi, lo) = (&w[0], &w[1]);
            for (name, a, b) in [("p_e", hi.p_e, lo.p_e), ("eta", hi.eta, lo.eta)] {
                if a > b {
                    out.push(MonotonicityViolation {
                        delta_hi: hi.delta,
                        delta_lo: lo.delta,
                        quantity: name,
                    });
                }
            }
        }
        out
    }

    /// Pairs (i, j) where point i has strictly lower p_e and strictly higher eta than j.
    pub fn dominated_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.points.iter().enumerate() {
            for (j, b) in self.points.iter().enumerate() {
                if a.p_e < b.p_e && a.eta > b.eta {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Builds the curve over [delta_SE-opt, 1/2], normalized at the optimum.
pub fn build_tradeoff(
    s: &ScenarioParams,
    snr: f64,
    l_max: usize,
    settings: &AnalysisSettings,
    exec: Execution,
) -> Result<TradeoffCurve> {
    let grid = sweep_grid(s, snr, l_max, settings, exec)?;
    let opt = optimum_of(&grid)?;
    let anchor = &grid[opt.l - 1];
    let points: Vec<TradeoffPoint> = grid[..opt.l]
        .iter()
        .enumerate()
        .map(|(i, p)| TradeoffPoint {
            delta: p.delta,
            l: i + 1,
            p_e: p.p_e,
            eta: p.eta,
            p_e_norm: p.p_e / anchor.p_e,
            eta_norm: p.eta / anchor.eta,
        })
        .collect();
    let curve = TradeoffCurve {
        points,
        delta_se_opt: opt.delta,
    };
    for v in curve.monotonicity_violations() {
        log::warn!(
            "tradeoff curve: {} increases from delta={:.6} to delta={:.6}",
            v.quantity,
            v.delta_lo,
            v.delta_hi
        );
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax(&[0.5, 0.9, 0.7]), Some(1));
        assert_eq!(argmax(&[0.9, 0.9]), Some(0));
        assert_eq!(argmax(&[]), None);
        assert_eq!(argmax(&[f64::NAN, 0.1]), Some(1));
    }

    #[test]
    fn grid_errors() {
        let s = ScenarioParams::default();
        assert!(matches!(
            find_delta_se_opt(&s, 10.0, 0, &AnalysisSettings::default(), Execution::Sequential),
            Err(Error::Grid { .. })
        ));
    }

    #[test]
    fn interior_optimum_and_curve_shape() {
        let s = ScenarioParams::default();
        let settings = AnalysisSettings::default();
        let opt = find_delta_se_opt(&s, 10.0, DEFAULT_L_MAX, &settings, Execution::Sequential).unwrap();
        assert!(opt.l > 1 && opt.l < DEFAULT_L_MAX);
        assert_eq!(opt.l, 7);

        let c = build_tradeoff(&s, 10.0, DEFAULT_L_MAX, &settings, Execution::Workers(3)).unwrap();
        assert_eq!(c.points.len(), opt.l);
        assert_eq!(c.points.iter().filter(|p| p.is_anchor()).count(), 1);
        assert!(c.anchor().is_anchor());
        assert_eq!(c.delta_se_opt, opt.delta);
        assert!(c.points.windows(2).all(|w| w[0].delta > w[1].delta));
        assert!(c.monotonicity_violations().is_empty());
        assert!(c.dominated_pairs().is_empty());
        assert!(c.points.iter().all(|p| p.p_e_norm <= 1.0 && p.eta_norm <= 1.0));
    }

    #[test]
    fn parallel_sweep_matches_sequential() {
        let s = ScenarioParams::default();
        let settings = AnalysisSettings::default();
        let a = sweep_grid(&s, 31.6, 12, &settings, Execution::Sequential).unwrap();
        let b = sweep_grid(&s, 31.6, 12, &settings, Execution::Workers(4)).unwrap();
        assert_eq!(a, b);
    }
}
