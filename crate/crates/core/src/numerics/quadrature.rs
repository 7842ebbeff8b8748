//! Gauss-Legendre quadrature on finite intervals and on [a, inf).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{invalid, Error, Result};

/// Default node count for finite angular integrals.
pub const DEFAULT_CLOSED_NODES: usize = 256;
/// Default node count for the transformed semi-infinite rule.
pub const DEFAULT_SEMI_INFINITE_NODES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    /// Gauss-Legendre on `[lower, upper]`.
    Closed { lower: f64, upper: f64 },
    /// `[lower, inf)` mapped to `t in [0, 1)` by `x = lower + scale * t / (1 - t)`.
    SemiInfinite { lower: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub rule: Rule,
}

impl QuadratureSpec {
    pub fn closed(lower: f64, upper: f64, node_count: usize) -> Self {
        Self {
            node_count,
            rule: Rule::Closed { lower, upper },
        }
    }

    pub fn semi_infinite(lower: f64, scale: f64, node_count: usize) -> Self {
        Self {
            node_count,
            rule: Rule::SemiInfinite { lower, scale },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(invalid("node_count", "need at least 2 nodes"));
        }
        match self.rule {
            Rule::Closed { lower, upper } if !(lower < upper) => {
                Err(invalid("interval", format!("lower {lower} must be below upper {upper}")))
            }
            Rule::SemiInfinite { scale, lower } if !(scale > 0.0) || !lower.is_finite() => {
                Err(invalid("scale", format!("need finite lower and scale > 0, got {scale}")))
            }
            _ => Ok(()),
        }
    }
}

/// Nodes and weights on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached rule with `n` nodes.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(GaussLegendre::compute(n));
    cache
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .entry(n)
        .or_insert(rule)
        .clone()
}

/// Integrates `f` with the given rule. Fails if `f` is non-finite at a node.
pub fn integrate<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let gl = gauss_legendre(spec.node_count);
    let mut sum = 0.0;
    match spec.rule {
        Rule::Closed { lower, upper } => {
            let half = 0.5 * (upper - lower);
            let mid = 0.5 * (upper + lower);
            for (&t, &w) in gl.nodes.iter().zip(&gl.weights) {
                let x = mid + half * t;
                let v = f(x);
                if !v.is_finite() {
                    return Err(Error::NonFinite { at: x });
                }
                sum += w * v;
            }
            Ok(sum * half)
        }
        Rule::SemiInfinite { lower, scale } => {
            for (&node, &w) in gl.nodes.iter().zip(&gl.weights) {
                let t = 0.5 * (node + 1.0);
                let one_minus = 1.0 - t;
                let x = lower + scale * t / one_minus;
                let jac = scale / (one_minus * one_minus);
                let v = f(x);
                if !v.is_finite() {
                    return Err(Error::NonFinite { at: x });
                }
                sum += w * v * jac;
            }
            Ok(0.5 * sum)
        }
    }
}

/// Closed-interval integral, doubling the node count from `start_nodes` until
/// two successive estimates agree to `rel_tol` (or `max_nodes` is reached, in
/// which case the last estimate is returned with a warning).
pub fn integrate_doubling<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    start_nodes: usize,
    rel_tol: f64,
    max_nodes: usize,
) -> Result<f64> {
    let mut n = start_nodes.max(2);
    let mut prev = integrate(&f, &QuadratureSpec::closed(lower, upper, n))?;
    while n < max_nodes {
        n *= 2;
        let next = integrate(&f, &QuadratureSpec::closed(lower, upper, n))?;
        if (next - prev).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    log::warn!("quadrature on [{lower}, {upper}] not converged to {rel_tol:e} at {n} nodes");
    Ok(prev)
}
